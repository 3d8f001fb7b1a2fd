use nalgebra::DMatrix;
use ruinlab::analytic::{exit_low, modified_ruin, passage_probability_down, sup_law};
use ruinlab::model::{ChainSpec, ClaimLaw, ModelSpec, StateParams};
use ruinlab::rng::RngStream;
use ruinlab::simulate::{
    estimate_interval_exit, estimate_modified_ruin, estimate_overjump, estimate_passage_down, estimate_recovery_red,
    estimate_ruin, estimate_total_deficit, record_path, step_event, EventKind, ModelPair, SimOptions,
};
use ruinlab::{McConfig, ValidatedModel};

const SEED: u64 = 4_242;

fn example(c: f64) -> ValidatedModel {
    ModelSpec::scalar(2.0, 1.0, c, ClaimLaw::Erlang { shape: 2, rate: 20.0 })
        .validate()
        .unwrap()
}

fn two_state() -> ValidatedModel {
    ModelSpec {
        chain: ChainSpec::new(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.5, -0.5])),
        states: vec![
            StateParams {
                lambda1: 2.0,
                lambda2: 1.0,
                c: 2.0,
                claim: ClaimLaw::Erlang { shape: 2, rate: 10.0 },
            },
            StateParams {
                lambda1: 1.0,
                lambda2: 1.5,
                c: 3.0,
                claim: ClaimLaw::Exponential { rate: 8.0 },
            },
        ],
    }
    .validate()
    .unwrap()
}

fn cfg(n: u64) -> McConfig {
    McConfig::new(n, SEED)
}

fn within(z: f64, bound: f64) {
    assert!(z.abs() <= bound, "z = {z}");
}

#[test]
fn star_ruin_matches_supremum_tail() {
    let star = example(4.0);
    let law = sup_law(&star).unwrap();
    assert!((law.tail(1e-15) - 7.0 / 15.0).abs() < 1e-12);
    for (u, p) in [(0.0, 7.0 / 15.0), (0.2, law.tail(0.2))] {
        let e = estimate_ruin(&star, u, &cfg(200_000), &SimOptions::default()).unwrap();
        within(e.z_score(p), 4.0);
        assert!(e.bias_bound.unwrap() < 1e-8);
    }
}

#[test]
fn interval_exit_matches_exit_low() {
    let model = example(1.0);
    for (u, b) in [(0.05, 0.2), (0.1, 0.3), (0.2, 0.4), (0.3, 0.6), (0.5, 1.0)] {
        let (p, _) = exit_low(&model, u, b).unwrap();
        let e = estimate_interval_exit(&model, u, b, &cfg(100_000), &SimOptions::default()).unwrap();
        within(e.lower.z_score(p), 4.0);
        assert_eq!(e.censored_frac, 0.0);
        assert!((e.lower.value + e.upper.value - 1.0).abs() < 1e-12);
    }
}

#[test]
fn interval_exit_on_lower_boundary_is_immediate() {
    let e = estimate_interval_exit(&example(1.0), 0.3, 0.3, &cfg(1_000), &SimOptions::default()).unwrap();
    assert_eq!(e.lower.value, 1.0);
}

#[test]
fn interval_exit_censoring_shrinks_with_horizon() {
    let model = example(1.0);
    let frac = |h: f64| {
        estimate_interval_exit(&model, 0.5, 1.0, &cfg(20_000), &SimOptions::default().with_horizon(h))
            .unwrap()
            .censored_frac
    };
    let (short, long) = (frac(0.05), frac(20.0));
    assert!(short > long, "{short} vs {long}");
    assert!(long < 1e-3, "{short} {long}");
}

#[test]
fn overjump_mass_is_ruin_on_same_seed() {
    let model = example(1.0);
    let o = estimate_overjump(&model, 0.1, 0.0, &cfg(50_000), &SimOptions::default()).unwrap();
    let r = estimate_ruin(&model, 0.1, &cfg(50_000), &SimOptions::default()).unwrap();
    assert_eq!(o.total_mass().value, r.value);
    let mut last = 0.0;
    for y in [0.01, 0.05, 0.1, 0.5, 10.0] {
        let v = o.overshoot_cdf(y).value;
        assert!(v >= last);
        last = v;
    }
    assert_eq!(o.overshoot_cdf(1e9).value, r.value);
}

#[test]
fn discounting_lowers_overjump_mass() {
    let model = example(1.0);
    let a = estimate_overjump(&model, 0.1, 0.0, &cfg(20_000), &SimOptions::default()).unwrap();
    let b = estimate_overjump(&model, 0.1, 1.0, &cfg(20_000), &SimOptions::default()).unwrap();
    assert!(b.total_mass().value < a.total_mass().value);
}

#[test]
fn deficit_tends_to_ruin() {
    let model = example(1.0);
    let d = estimate_total_deficit(&model, 0.1, &[0.05, 0.5, 50.0], &cfg(50_000), &SimOptions::default()).unwrap();
    assert!(d.cdf[0].value <= d.cdf[1].value && d.cdf[1].value <= d.cdf[2].value);
    assert!((d.cdf[2].value - d.ruin.value).abs() < 1e-12);
}

#[test]
fn recovery_transform_limits() {
    let model = example(1.0);
    let ruin = estimate_ruin(&model, 0.1, &cfg(50_000), &SimOptions::default()).unwrap();
    let near = estimate_recovery_red(&model, 0.1, 1e-9, &cfg(50_000), &SimOptions::default()).unwrap();
    assert!((near.recovery.value - ruin.value).abs() < 1e-6);
    assert!((near.red.value - ruin.value).abs() < 1e-6);
    assert!(near.max_clock_gap < 1e-12);
    let mut last = near.recovery.value;
    for s in [0.1, 1.0, 10.0] {
        let e = estimate_recovery_red(&model, 0.1, s, &cfg(50_000), &SimOptions::default()).unwrap();
        assert!(e.recovery.value <= last);
        assert!(e.recovery.value <= e.red.value);
        last = e.recovery.value;
    }
}

#[test]
fn downward_passage_is_certain_under_negative_drift() {
    let model = example(1.0);
    let e = estimate_passage_down(&model, -0.5, &cfg(50_000), &SimOptions::default()).unwrap();
    assert_eq!(e.probability.value, 1.0);
    within(e.overshoot_mean.z_score(1.0), 4.0);
}

#[test]
fn downward_passage_probabilities_match_matrix_form() {
    let model = ModelSpec::scalar(0.05, 1.0, 1.0, ClaimLaw::Erlang { shape: 2, rate: 20.0 })
        .validate()
        .unwrap();
    assert!(model.drift().unwrap().stationary_drift > 0.0);
    let p = passage_probability_down(&model, -0.3).unwrap()[(0, 0)];
    let e = estimate_passage_down(&model, -0.3, &cfg(100_000), &SimOptions::default()).unwrap();
    assert!((e.probability.value - p).abs() < 0.005, "{} vs {p}", e.probability.value);

    let m = two_state();
    let q = passage_probability_down(&m, -0.4).unwrap();
    for k in 0..2 {
        let e = estimate_passage_down(&m, -0.4, &cfg(50_000), &SimOptions::default().with_initial_state(k)).unwrap();
        for j in 0..2 {
            within(e.by_state[j].z_score(q[(k, j)]), 4.0);
        }
    }
}

#[test]
fn identical_regimes_give_plain_ruin() {
    let model = example(1.0);
    let pair = ModelPair::new(model.clone(), model.clone()).unwrap();
    for u in [0.1, 0.4] {
        let m = estimate_modified_ruin(&pair, u, 0.2, 0.3, &cfg(30_000), &SimOptions::default()).unwrap();
        let r = estimate_ruin(&model, u, &cfg(30_000), &SimOptions::default()).unwrap();
        within((m.value - r.value) / (m.stderr.hypot(r.stderr)), 4.0);
        assert!((modified_ruin(&model, &model, u, 0.3, 0.3).unwrap() - sup_law(&model).unwrap().tail(u)).abs() < 1e-9);
    }
}

#[test]
fn faster_reduced_premiums_raise_ruin() {
    let pair = ModelPair::new(example(1.0), example(4.0)).unwrap();
    let plain = sup_law(&example(1.0)).unwrap();
    let mut last = f64::INFINITY;
    for u in [0.05, 0.1, 0.2, 0.3] {
        let phi = modified_ruin(pair.normal(), pair.star(), u, 0.3, 0.3).unwrap();
        assert!(phi >= plain.tail(u) - 1e-12);
        assert!(phi <= last);
        last = phi;
    }
    let e = estimate_modified_ruin(&pair, 0.5, 0.2, 0.3, &cfg(30_000), &SimOptions::default()).unwrap();
    assert!(e.value >= plain.tail(0.5));
}

#[test]
fn step_event_rates() {
    let model = example(1.0);
    let mut rng = RngStream::new(SEED, 0);
    let (mut claims, mut holding) = (0u32, 0.0);
    let n = 100_000;
    for _ in 0..n {
        let ev = step_event(&model, 0, &mut rng).unwrap();
        holding += ev.holding;
        if ev.kind == EventKind::Claim {
            claims += 1;
        }
        assert_eq!(ev.state_after, 0);
    }
    let frac = claims as f64 / n as f64;
    assert!((frac - 1.0 / 3.0).abs() < 0.005);
    assert!((holding / n as f64 - 1.0 / 3.0).abs() < 0.005);
}

#[test]
fn chain_occupation_converges_to_stationary() {
    let model = two_state();
    let pi = model.stationary_distribution().unwrap();
    let mut rng = RngStream::new(SEED, 1);
    let log = record_path(&model, 0, f64::INFINITY, 100_000, &mut rng).unwrap();
    let (mut t, mut in0) = (0.0, 0.0);
    for r in &log {
        let dt = r.t - t;
        if r.state_before == 0 {
            in0 += dt;
        }
        t = r.t;
    }
    assert!((in0 / t - pi[0]).abs() < 0.02, "{} vs {}", in0 / t, pi[0]);
}
