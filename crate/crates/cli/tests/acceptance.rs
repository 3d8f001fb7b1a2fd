//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use ruinlab::analytic::{
    atom_residuals, exit_low, fixed_point_atoms, lundberg_roots, modified_ruin, overshoot_law, sup_law,
};
use ruinlab::model::{ChainSpec, ClaimLaw, ModelSpec, StateParams};
use ruinlab::pricing::{gerber_shiu, price_perpetual_put, GSQuery, PenaltyFn, PutContract};
use ruinlab::rng::derive_seed;
use ruinlab::simulate::{
    estimate_interval_exit, estimate_modified_ruin, estimate_modified_ruin_composed, estimate_overjump,
    estimate_recovery_red, estimate_red_composed, estimate_sup_cdf, estimate_total_deficit,
    estimate_total_deficit_composed, ModelPair, SimOptions,
};
use ruinlab::{McConfig, ValidatedModel};

const N: u64 = 1_000_000;
const SEED: u64 = 20_231_117;

type Check = Result<String, String>;

fn example(c: f64) -> ValidatedModel {
    ModelSpec::scalar(2.0, 1.0, c, ClaimLaw::Erlang { shape: 2, rate: 20.0 })
        .validate()
        .unwrap()
}

fn pair() -> ModelPair {
    ModelPair::new(example(1.0), example(4.0)).unwrap()
}

fn cfg() -> McConfig {
    McConfig::new(N, SEED)
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want} ± {tol}"))
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn lundberg_roots_match() -> Check {
    let r = lundberg_roots(&example(1.0)).map_err(err)?.positive;
    let rs = lundberg_roots(&example(4.0)).map_err(err)?.positive;
    if r.len() != 2 || rs.len() != 2 {
        return Err(format!("root counts {} and {}", r.len(), rs.len()));
    }
    close("r1", r[0], 8.0, 1e-9)?;
    close("r2", r[1], 95.0 / 3.0, 1e-9)?;
    close("r1*", rs[0], 20.0 / 3.0, 1e-9)?;
    close("r2*", rs[1], 32.0, 1e-9)?;
    Ok(format!("roots {r:?}, star {rs:?}"))
}

fn drifts_match() -> Check {
    let d = example(1.0).drift().map_err(err)?.stationary_drift;
    let ds = example(4.0).drift().map_err(err)?.stationary_drift;
    close("drift", d, -19.0 / 10.0, 1e-12)?;
    close("star drift", ds, -2.0 / 5.0, 1e-12)?;
    Ok(format!("drift {d}, star drift {ds}"))
}

fn supremum_law() -> Check {
    let star = example(4.0);
    let law = sup_law(&star).map_err(err)?;
    close("weight at 20/3", law.terms[0].0, 32.0 / 57.0, 1e-9)?;
    close("weight at 32", law.terms[1].0, -9.0 / 95.0, 1e-9)?;
    let grid = [0.05, 0.1, 0.2, 0.5];
    let mc = estimate_sup_cdf(&star, &grid, &cfg(), &SimOptions::default()).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (u, e) in grid.iter().zip(&mc) {
        let tol = (3.0 * e.stderr).max(0.005);
        close(&format!("P{{sup < {u}}}"), e.value, law.cdf(*u), tol)?;
        worst = worst.max((e.value - law.cdf(*u)).abs());
    }
    Ok(format!("weights ok, max |MC − analytic| = {worst:.2e}"))
}

fn exit_low_curve() -> Check {
    let model = example(1.0);
    let (p, curve) = exit_low(&model, 0.1, 0.5).map_err(err)?;
    close("n at 8", curve.numerator[0].0, 171.0 / 355.0, 1e-9)?;
    close("n at 95/3", curve.numerator[1].0, -49.0 / 426.0, 1e-9)?;
    close("d at 8", curve.denominator[0].0, 19.0 / 355.0, 1e-9)?;
    close("d at 95/3", curve.denominator[1].0, -1.0 / 284.0, 1e-9)?;
    let oracle = (1.0 + 49.0 / 426.0 * (-9.5f64 / 3.0).exp() - 171.0 / 355.0 * (-0.8f64).exp())
        / (1.0 + 1.0 / 284.0 * (-47.5f64 / 3.0).exp() - 19.0 / 355.0 * (-4.0f64).exp());
    close("B_0.5(0.1)", p, oracle, 1e-12)?;
    close("B_0.5(0.1) vs quoted value", p, 0.78917, 5e-5)?;
    let mut zs = Vec::new();
    for (u, b) in [(0.1, 0.5), (0.2, 0.5), (0.1, 0.3)] {
        let (p, _) = exit_low(&model, u, b).map_err(err)?;
        let e = estimate_interval_exit(&model, u, b, &cfg(), &SimOptions::default()).map_err(err)?;
        let z = e.lower.z_score(p);
        if z.abs() > 3.0 {
            return Err(format!("(u={u}, b={b}): MC {} vs {p}, z = {z:.2}", e.lower.value));
        }
        zs.push(format!("{z:.2}"));
    }
    Ok(format!("B_0.5(0.1) = {p:.6}, z = [{}]", zs.join(", ")))
}

fn modified_ruin_matches() -> Check {
    let (m, s) = (example(1.0), example(4.0));
    let closed = |u: f64, b: f64| {
        1.0 - (1.0 + 49.0 / 426.0 * (-95.0 * u / 3.0).exp() - 171.0 / 355.0 * (-8.0 * u).exp())
            / (1.0 - 45.0 / 111328.0 * (-95.0 * b / 3.0).exp() + 19.0 / 852.0 * (-8.0 * b).exp())
    };
    let phi = modified_ruin(&m, &s, 0.1, 0.3, 0.3).map_err(err)?;
    close("Φ(0.1; 0.3)", phi, 0.21319, 1e-5)?;
    let mut zs = Vec::new();
    for (u, b) in [(0.1, 0.3), (0.2, 0.3), (0.1, 0.5)] {
        let phi = modified_ruin(&m, &s, u, b, b).map_err(err)?;
        close(&format!("closed form at ({u}, {b})"), phi, closed(u, b), 1e-9)?;
        let e = estimate_modified_ruin(&pair(), u, b, b, &cfg(), &SimOptions::default()).map_err(err)?;
        let z = e.z_score(phi);
        if z.abs() > 3.0 {
            return Err(format!("(u={u}, b={b}): MC {} ± {} vs {phi}, z = {z:.2}", e.value, e.stderr));
        }
        zs.push(format!("{z:.2}"));
    }
    Ok(format!("Φ(0.1; 0.3) = {phi:.6}, z = [{}]", zs.join(", ")))
}

/// Two-state model with parameters drawn from the seed.
fn random_two_state(seed: u64) -> ValidatedModel {
    let mut k = 0;
    let mut next = |lo: f64, hi: f64| {
        k += 1;
        lo + (hi - lo) * (derive_seed(seed, k) >> 11) as f64 / (1u64 << 53) as f64
    };
    let (q12, q21) = (next(0.2, 2.0), next(0.2, 2.0));
    let states = (0..2)
        .map(|_| StateParams {
            lambda1: next(0.5, 3.0),
            lambda2: next(0.2, 2.0),
            c: next(0.5, 4.0),
            claim: ClaimLaw::Erlang {
                shape: 2,
                rate: next(5.0, 30.0),
            },
        })
        .collect();
    ModelSpec {
        chain: ChainSpec::new(DMatrix::from_row_slice(2, 2, &[-q12, q12, q21, -q21])),
        states,
    }
    .validate()
    .unwrap()
}

fn matrix_atoms() -> Check {
    let a = fixed_point_atoms(&example(1.0)).map_err(err)?;
    close("p⁻(0)", a.p_upper[(0, 0)], 0.0, 1e-10)?;
    close("R⁻(0)", a.r_upper[(0, 0)], 0.0, 1e-10)?;
    let no_premiums = ModelSpec::scalar(0.0, 1.0, 1.0, ClaimLaw::Erlang { shape: 2, rate: 20.0 })
        .validate()
        .map_err(err)?;
    let b = fixed_point_atoms(&no_premiums).map_err(err)?;
    if b.p_lower != DMatrix::identity(1, 1) {
        return Err(format!("λ1 ≡ 0: p₋(0) = {}", b.p_lower));
    }
    let m = random_two_state(7);
    let c = fixed_point_atoms(&m).map_err(err)?;
    let (r1, r2) = atom_residuals(&m, &c.p_lower, &c.p_upper).map_err(err)?;
    if r1 > 1e-10 || r2 > 1e-10 {
        return Err(format!("2-state residuals {r1:e}, {r2:e}"));
    }
    Ok(format!("p⁻(0) = {:.1e}, 2-state residuals {r1:.1e}, {r2:.1e}", a.p_upper[(0, 0)]))
}

fn overshoot_law_matches() -> Check {
    let star = example(4.0);
    let law = sup_law(&star).map_err(err)?;
    for u in [0.05, 0.1, 0.2] {
        let mass = overshoot_law(&star, u).and_then(|g| g.total_mass()).map_err(err)?;
        close(&format!("mass at {u}"), mass, law.tail(u), 1e-9)?;
    }
    let zero = overshoot_law(&star, 0.0).and_then(|g| g.total_mass()).map_err(err)?;
    close("mass at 0+", zero, 7.0 / 15.0, 1e-9)?;

    let u = 0.2;
    let g = overshoot_law(&star, u).map_err(err)?;
    let sample = estimate_overjump(&star, u, 0.0, &cfg(), &SimOptions::default()).map_err(err)?;
    let mut worst: f64 = 0.0;
    for i in 1..=50 {
        let y = 0.5 * f64::from(i) / 50.0;
        let analytic = g.cdf(y).map_err(err)?;
        worst = worst.max((sample.overshoot_cdf(y).value - analytic).abs());
    }
    if worst > 0.01 {
        return Err(format!("overshoot CDF sup-norm {worst}"));
    }
    Ok(format!("mass balance ok, overshoot CDF sup-norm {worst:.2e}"))
}

fn ruin_identities() -> Check {
    let model = example(1.0);
    let opts = SimOptions::default();
    let u = 0.1;
    let grid: Vec<f64> = (1..=20).map(|i| 0.05 * f64::from(i)).collect();
    let lhs = estimate_total_deficit(&model, u, &grid, &cfg(), &opts).map_err(err)?;
    let rhs = estimate_total_deficit_composed(&model, u, &grid, &cfg(), &opts).map_err(err)?;
    let sup = lhs
        .cdf
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l.value - r).abs())
        .fold(0.0, f64::max);
    if sup > 0.015 {
        return Err(format!("deficit decomposition sup-norm {sup}"));
    }
    let mut zs = Vec::new();
    let mut gap: f64 = 0.0;
    for s in [0.5, 1.0] {
        let direct = estimate_recovery_red(&model, u, s, &cfg(), &opts).map_err(err)?;
        let composed = estimate_red_composed(&model, u, s, &cfg(), &opts).map_err(err)?;
        let z = (direct.red.value - composed.value) / direct.red.stderr.hypot(composed.stderr);
        if z.abs() > 3.0 {
            return Err(format!("red period at s={s}: {} vs {}, z = {z:.2}", direct.red.value, composed.value));
        }
        zs.push(format!("{z:.2}"));
        gap = gap.max(direct.max_clock_gap);
    }
    if gap > 1e-12 {
        return Err(format!("red-period clock differs from τ' − τ⁺ by {gap:e}"));
    }
    Ok(format!("deficit sup-norm {sup:.2e}, red z = [{}], clock gap {gap:.1e}", zs.join(", ")))
}

fn modified_composition() -> Check {
    let (u, a, b) = (0.5, 0.2, 0.3);
    let opts = SimOptions::default();
    let direct = estimate_modified_ruin(&pair(), u, a, b, &cfg(), &opts).map_err(err)?;
    let composed = estimate_modified_ruin_composed(&pair(), u, a, b, &cfg(), &opts).map_err(err)?;
    let z = (direct.value - composed.value) / direct.stderr.hypot(composed.stderr);
    if z.abs() > 3.0 {
        return Err(format!("direct {} vs composed {}, z = {z:.2}", direct.value, composed.value));
    }
    let analytic = modified_ruin(&example(1.0), &example(4.0), u, a, b).map_err(err)?;
    Ok(format!(
        "direct {:.5}, composed {:.5}, z = {z:.2} (analytic {analytic:.5})",
        direct.value, composed.value
    ))
}

fn pricing_identities() -> Check {
    let p = pair();
    let opts = SimOptions::default();
    let small = McConfig::new(200_000, SEED);
    let (u, a, b) = (0.1, 0.3, 0.3);
    let ruin = estimate_modified_ruin(&p, u, a, b, &small, &opts).map_err(err)?;
    let query = GSQuery {
        u,
        a,
        b,
        s: 0.0,
        penalty: PenaltyFn::constant(1.0).map_err(err)?,
    };
    let gs = gerber_shiu(&p, &query, &small, &opts).map_err(err)?;
    if gs != ruin {
        return Err(format!("Φ with w ≡ 1 is {} but modified ruin is {}", gs.value, ruin.value));
    }
    let strike = 1.5;
    let mut prices = Vec::new();
    for s in [0.5, 1.0, 2.0] {
        let c = PutContract { strike, beta: -0.1, s, u: 0.2 };
        let e = price_perpetual_put(&p, &c, a, b, &small, &opts).map_err(err)?;
        if !(0.0..=strike).contains(&e.value) {
            return Err(format!("put price {} outside [0, {strike}]", e.value));
        }
        prices.push(e.value);
    }
    if !(prices[0] >= prices[1] && prices[1] >= prices[2]) {
        return Err(format!("prices not monotone in s: {prices:?}"));
    }
    Ok(format!("Φ ≡ ruin bit-exact, put prices {prices:.5?}"))
}

fn verify_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut docs = Vec::new();
    for (i, workers) in [1, 4, 8, 1].into_iter().enumerate() {
        let out = dir.path().join(format!("verify{i}.csv"));
        let argv = [
            "ruinlab".to_string(),
            "verify".into(),
            "--seed".into(),
            SEED.to_string(),
            "--workers".into(),
            workers.to_string(),
            "--out".into(),
            out.display().to_string(),
        ];
        let code = ruinlab_cli::main_with(argv, None);
        if code != 0 {
            return Err(format!("verify exited with {code} (workers = {workers})"));
        }
        docs.push(std::fs::read(&out).map_err(err)?);
    }
    if docs.iter().any(|d| d != &docs[0]) {
        return Err("verify CSV differs between runs".into());
    }
    Ok(format!("{} identical runs over workers 1, 4, 8, 1", docs.len()))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 lundberg roots", lundberg_roots_match),
        ("2 drifts", drifts_match),
        ("3 supremum law", supremum_law),
        ("4 exit-low curve", exit_low_curve),
        ("5 modified ruin", modified_ruin_matches),
        ("6 fixed-point atoms", matrix_atoms),
        ("7 overshoot law", overshoot_law_matches),
        ("8 ruin-time identities", ruin_identities),
        ("9 modified-process composition", modified_composition),
        ("10 pricing identities", pricing_identities),
        ("11 determinism", verify_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let result = check();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{name}] {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{name}] {detail} ({secs:.1}s)");
            }
        }
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
