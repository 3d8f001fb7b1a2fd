//! Monte Carlo estimators over independent replications.

use super::passage::{exit_interval, passage_down, passage_up, run_ruin_path, supremum, ExitSide};
use super::{require_negative_drift, run_blocks, McConfig, MCEstimate, Moments, SimOptions};
use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::rng::{derive_seed, RngStream};

// Tags for auxiliary stream families of the composed estimators.
const TAG_OVERJUMP: u64 = 1;
const TAG_SUPREMUM: u64 = 2;
const TAG_RUIN_LEG: u64 = 3;
const TAG_DOWN_LEG: u64 = 4;

fn check_level(u: f64) -> Result<()> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::precondition(format!("level u = {u} must be finite and >= 0")));
    }
    Ok(())
}

/// `P{τ⁺(u) < ∞}`.
///
/// Requires negative stationary drift unless a finite horizon is given. The
/// reported bias bound is `e^{−r₁ L}` for the barrier `L` used.
pub fn estimate_ruin(model: &ValidatedModel, u: f64, cfg: &McConfig, opts: &SimOptions) -> Result<MCEstimate> {
    check_level(u)?;
    if !model.has_upward_jumps() {
        return Ok(MCEstimate::exact(0.0, cfg.n, cfg.seed));
    }
    require_negative_drift(model, opts.horizon, "ruin estimate")?;
    let o = opts.resolve_up(model)?;
    let acc = run_blocks(cfg, Moments::default, |acc: &mut Moments, rep| {
        let mut rng = RngStream::new(cfg.seed, rep);
        let p = passage_up(model, u, &mut rng, &o);
        if p.censor == Some(super::Censor::Horizon) {
            acc.censored += 1;
        }
        acc.push(if p.crossed { 1.0 } else { 0.0 });
    })?;
    Ok(acc.estimate(cfg.seed, o.bias_bound))
}

/// One ruined replication: undershoot `γ₊`, overshoot `γ⁺`, time and weight
/// `e^{−sτ⁺}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverjumpPoint {
    pub replication: u64,
    pub undershoot: f64,
    pub overshoot: f64,
    pub tau: f64,
    pub weight: f64,
    pub state: usize,
}

/// Weighted empirical joint law of `(γ₊(u), γ⁺(u))` on `{τ⁺(u) < ∞}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverjumpSample {
    pub u: f64,
    pub s: f64,
    pub n: u64,
    pub seed: u64,
    pub censored: u64,
    pub points: Vec<OverjumpPoint>,
    pub bias_bound: Option<f64>,
}

impl OverjumpSample {
    fn weighted<F: Fn(&OverjumpPoint) -> f64>(&self, f: F) -> MCEstimate {
        let mut m = Moments::default();
        for p in &self.points {
            m.push(f(p));
        }
        // non-ruined replications contribute zeros
        m.n = self.n;
        m.censored = self.censored;
        m.estimate(self.seed, self.bias_bound)
    }

    /// `E[e^{−sτ⁺}; τ⁺ < ∞]`; the ruin probability when `s = 0`.
    pub fn total_mass(&self) -> MCEstimate {
        self.weighted(|p| p.weight)
    }

    /// `E[e^{−sτ⁺}; γ⁺ ≤ y, τ⁺ < ∞]`
    pub fn overshoot_cdf(&self, y: f64) -> MCEstimate {
        self.weighted(|p| if p.overshoot <= y { p.weight } else { 0.0 })
    }

    /// `E[e^{−sτ⁺}; γ₊ ≤ x, γ⁺ ≤ y, τ⁺ < ∞]`
    pub fn joint_cdf(&self, x: f64, y: f64) -> MCEstimate {
        self.weighted(|p| {
            if p.undershoot <= x && p.overshoot <= y {
                p.weight
            } else {
                0.0
            }
        })
    }
}

impl super::Accumulate for (Vec<OverjumpPoint>, u64) {
    fn merge(&mut self, other: Self) {
        self.0.extend(other.0);
        self.1 += other.1;
    }
}

/// Samples of the ruin-time overjump functionals at level `u`, discounted at `s ≥ 0`.
pub fn estimate_overjump(
    model: &ValidatedModel,
    u: f64,
    s: f64,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<OverjumpSample> {
    check_level(u)?;
    if !(s >= 0.0) {
        return Err(Error::precondition(format!("discount s = {s} must be >= 0")));
    }
    require_negative_drift(model, opts.horizon, "overjump estimate")?;
    let o = opts.resolve_up(model)?;
    let (points, censored) = run_blocks(
        cfg,
        || (Vec::new(), 0u64),
        |acc: &mut (Vec<OverjumpPoint>, u64), rep| {
            let mut rng = RngStream::new(cfg.seed, rep);
            let p = passage_up(model, u, &mut rng, &o);
            if p.crossed {
                acc.0.push(OverjumpPoint {
                    replication: rep,
                    undershoot: u - p.pre,
                    overshoot: p.post - u,
                    tau: p.tau,
                    weight: if s == 0.0 { 1.0 } else { (-s * p.tau).exp() },
                    state: p.state,
                });
            } else if p.censor == Some(super::Censor::Horizon) {
                acc.1 += 1;
            }
        },
    )?;
    Ok(OverjumpSample {
        u,
        s,
        n: cfg.n,
        seed: cfg.seed,
        censored,
        points,
        bias_bound: o.bias_bound,
    })
}

/// All-time suprema, one per replication (`+∞` when horizon-censored).
pub fn sample_suprema(model: &ValidatedModel, cfg: &McConfig, opts: &SimOptions) -> Result<Vec<f64>> {
    require_negative_drift(model, opts.horizon, "supremum sampling")?;
    let o = opts.resolve_up(model)?;
    let v: Vec<Option<f64>> = run_blocks(cfg, Vec::new, |acc: &mut Vec<Option<f64>>, rep| {
        let mut rng = RngStream::new(cfg.seed, rep);
        let s = supremum(model, &mut rng, &o);
        acc.push(Some(if s.censored { f64::INFINITY } else { s.sup }));
    })?;
    Ok(v.into_iter().flatten().collect())
}

/// `P{ξ⁺ < u}` on a grid.
pub fn estimate_sup_cdf(
    model: &ValidatedModel,
    grid: &[f64],
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<Vec<MCEstimate>> {
    require_negative_drift(model, opts.horizon, "supremum law")?;
    let o = opts.resolve_up(model)?;
    let acc = run_blocks(
        cfg,
        || vec![Moments::default(); grid.len()],
        |acc: &mut Vec<Moments>, rep| {
            let mut rng = RngStream::new(cfg.seed, rep);
            let s = supremum(model, &mut rng, &o);
            for (m, &x) in acc.iter_mut().zip(grid) {
                if s.censored {
                    m.censored += 1;
                }
                m.push(if !s.censored && s.sup < x { 1.0 } else { 0.0 });
            }
        },
    )?;
    Ok(acc.iter().map(|m| m.estimate(cfg.seed, o.bias_bound)).collect())
}

/// Total deficit law `P{z⁺(u) < x, τ⁺(u) < ∞}` on an x-grid, with the ruin
/// probability from the same replications.
#[derive(Debug, Clone, PartialEq)]
pub struct DeficitEstimate {
    pub grid: Vec<f64>,
    pub cdf: Vec<MCEstimate>,
    pub ruin: MCEstimate,
}

pub fn estimate_total_deficit(
    model: &ValidatedModel,
    u: f64,
    grid: &[f64],
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<DeficitEstimate> {
    check_level(u)?;
    if grid.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::precondition("deficit grid must be positive"));
    }
    if model.drift()?.stationary_drift >= 0.0 {
        return Err(Error::precondition(
            "total deficit needs negative stationary drift (post-ruin supremum must be finite)",
        ));
    }
    let o = opts.resolve_up(model)?;
    let k = grid.len();
    let acc = run_blocks(
        cfg,
        || vec![Moments::default(); k + 1],
        |acc: &mut Vec<Moments>, rep| {
            let mut rng = RngStream::new(cfg.seed, rep);
            let p = run_ruin_path(model, u, &mut rng, &o, true, false);
            let censored = p.post_censored || p.passage.censor == Some(super::Censor::Horizon);
            for (i, &x) in grid.iter().enumerate() {
                let hit = matches!(p.deficit, Some(z) if z < x);
                acc[i].push(if hit { 1.0 } else { 0.0 });
                if censored {
                    acc[i].censored += 1;
                }
            }
            acc[k].push(if p.passage.crossed { 1.0 } else { 0.0 });
        },
    )?;
    Ok(DeficitEstimate {
        grid: grid.to_vec(),
        cdf: acc[..k].iter().map(|m| m.estimate(cfg.seed, o.bias_bound)).collect(),
        ruin: acc[k].estimate(cfg.seed, o.bias_bound),
    })
}

/// Right-hand side of the deficit decomposition `∫ g(dy/u) P{ξ⁺ < x − y}`,
/// with `g` and the supremum law each estimated from their own independent
/// stream families.
pub fn estimate_total_deficit_composed(
    model: &ValidatedModel,
    u: f64,
    grid: &[f64],
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<Vec<f64>> {
    let over = estimate_overjump(
        model,
        u,
        0.0,
        &cfg.with_seed(derive_seed(cfg.seed, TAG_OVERJUMP)),
        opts,
    )?;
    let mut sups = sample_suprema(model, &cfg.with_seed(derive_seed(cfg.seed, TAG_SUPREMUM)), opts)?;
    sups.sort_by(f64::total_cmp);
    let ns = sups.len() as f64;
    let sup_cdf = |t: f64| sups.partition_point(|&s| s < t) as f64 / ns;
    Ok(grid
        .iter()
        .map(|&x| {
            let total: f64 = over
                .points
                .iter()
                .filter(|p| p.overshoot < x)
                .map(|p| sup_cdf(x - p.overshoot))
                .sum();
            total / over.n as f64
        })
        .collect())
}

/// Laplace transforms of recovery time and red period.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryRedEstimate {
    pub s: f64,
    /// `E[e^{−sτ'(u)}; τ' < ∞]`
    pub recovery: MCEstimate,
    /// `E[e^{−sT'(u)}; T' < ∞]`
    pub red: MCEstimate,
    pub ruined: u64,
    /// Largest relative gap between the separately accumulated red-period
    /// clock and `τ' − τ⁺` over all ruined paths.
    pub max_clock_gap: f64,
}

impl super::Accumulate for (Moments, Moments, u64, f64) {
    fn merge(&mut self, o: Self) {
        self.0.merge(&o.0);
        self.1.merge(&o.1);
        self.2 += o.2;
        self.3 = self.3.max(o.3);
    }
}

pub fn estimate_recovery_red(
    model: &ValidatedModel,
    u: f64,
    s: f64,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<RecoveryRedEstimate> {
    check_level(u)?;
    if !(s > 0.0) {
        return Err(Error::precondition(format!("discount s = {s} must be > 0")));
    }
    require_negative_drift(model, opts.horizon, "recovery/red-period estimate")?;
    let o = opts.resolve_up(model)?;
    let (rec, red, ruined, gap) = run_blocks(
        cfg,
        || (Moments::default(), Moments::default(), 0u64, 0.0f64),
        |acc: &mut (Moments, Moments, u64, f64), rep| {
            let mut rng = RngStream::new(cfg.seed, rep);
            let p = run_ruin_path(model, u, &mut rng, &o, false, true);
            let censored = p.post_censored || p.passage.censor == Some(super::Censor::Horizon);
            if censored {
                acc.0.censored += 1;
                acc.1.censored += 1;
            }
            match (p.recovery_time, p.red_period()) {
                (Some(tp), Some(red)) => {
                    acc.2 += 1;
                    let clock = p.red_clock.unwrap_or(red);
                    acc.3 = acc.3.max((clock - red).abs() / tp.max(1.0));
                    acc.0.push((-s * tp).exp());
                    acc.1.push((-s * red).exp());
                }
                _ => {
                    acc.0.push(0.0);
                    acc.1.push(0.0);
                }
            }
        },
    )?;
    Ok(RecoveryRedEstimate {
        s,
        recovery: rec.estimate(cfg.seed, o.bias_bound),
        red: red.estimate(cfg.seed, o.bias_bound),
        ruined,
        max_clock_gap: gap,
    })
}

/// `∫ P{γ⁺(u) ∈ dy} E[e^{−sτ⁻(−y)}]`: each ruined replication is followed by
/// a fresh downward passage to `−γ⁺` on an independent stream, started in
/// the chain state at ruin.
pub fn estimate_red_composed(
    model: &ValidatedModel,
    u: f64,
    s: f64,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<MCEstimate> {
    check_level(u)?;
    if !(s > 0.0) {
        return Err(Error::precondition(format!("discount s = {s} must be > 0")));
    }
    require_negative_drift(model, opts.horizon, "composed red-period estimate")?;
    let up = opts.resolve_up(model)?;
    let down = SimOptions { barrier: None, ..*opts }.resolve_down(model)?;
    let seed_a = derive_seed(cfg.seed, TAG_RUIN_LEG);
    let seed_b = derive_seed(cfg.seed, TAG_DOWN_LEG);
    let acc = run_blocks(cfg, Moments::default, |acc: &mut Moments, rep| {
        let mut rng = RngStream::new(seed_a, rep);
        let p = passage_up(model, u, &mut rng, &up);
        let Some(y) = p.overshoot() else {
            acc.push(0.0);
            return;
        };
        let mut rng = RngStream::new(seed_b, rep);
        let d = passage_down(
            model,
            -y,
            &mut rng,
            &super::Resolved {
                initial_state: p.state,
                ..down
            },
        );
        acc.push(if d.crossed { (-s * d.tau).exp() } else { 0.0 });
    })?;
    Ok(acc.estimate(cfg.seed, up.bias_bound))
}

/// Two-sided exit from `(u − b, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitEstimate {
    /// `P(A₋)`
    pub lower: MCEstimate,
    /// `P(A₊)`
    pub upper: MCEstimate,
    /// Mean overshoot below `u − b` on `A₋`.
    pub lower_overshoot_mean: MCEstimate,
    pub censored_frac: f64,
}

pub fn estimate_interval_exit(
    model: &ValidatedModel,
    u: f64,
    b: f64,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<ExitEstimate> {
    if !(u > 0.0 && u <= b) {
        return Err(Error::precondition(format!("need 0 < u <= b, got u = {u}, b = {b}")));
    }
    opts.check(model)?;
    let acc = run_blocks(
        cfg,
        || vec![Moments::default(); 3],
        |acc: &mut Vec<Moments>, rep| {
            let mut rng = RngStream::new(cfg.seed, rep);
            let e = exit_interval(model, u, b, &mut rng, opts.horizon, opts.initial_state);
            let (lo, hi) = match e.side {
                Some(ExitSide::Lower) => (1.0, 0.0),
                Some(ExitSide::Upper) => (0.0, 1.0),
                None => {
                    acc[0].censored += 1;
                    acc[1].censored += 1;
                    (0.0, 0.0)
                }
            };
            acc[0].push(lo);
            acc[1].push(hi);
            if e.side == Some(ExitSide::Lower) && u != b {
                acc[2].push(e.overshoot);
            }
        },
    )?;
    let lower = acc[0].estimate(cfg.seed, Some(0.0));
    Ok(ExitEstimate {
        censored_frac: lower.censored_frac,
        upper: acc[1].estimate(cfg.seed, Some(0.0)),
        lower_overshoot_mean: acc[2].estimate(cfg.seed, Some(0.0)),
        lower,
    })
}

/// `P{τ⁻(x) < ∞}` from the initial state, split by the chain state at passage.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageDownEstimate {
    pub probability: MCEstimate,
    pub by_state: Vec<MCEstimate>,
    /// Mean overshoot below `x` given passage.
    pub overshoot_mean: MCEstimate,
}

pub fn estimate_passage_down(
    model: &ValidatedModel,
    x: f64,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<PassageDownEstimate> {
    let o = opts.resolve_down(model)?;
    if o.barrier.is_infinite() && opts.horizon.is_infinite() && model.drift()?.stationary_drift >= 0.0 {
        return Err(Error::precondition(
            "downward passage under non-negative drift needs a barrier or horizon",
        ));
    }
    let m = model.m();
    let acc = run_blocks(
        cfg,
        || vec![Moments::default(); m + 2],
        |acc: &mut Vec<Moments>, rep| {
            let mut rng = RngStream::new(cfg.seed, rep);
            let p = passage_down(model, x, &mut rng, &o);
            if p.censor == Some(super::Censor::Horizon) {
                acc[0].censored += 1;
            }
            acc[0].push(if p.crossed { 1.0 } else { 0.0 });
            for j in 0..m {
                acc[1 + j].push(if p.crossed && p.state == j { 1.0 } else { 0.0 });
            }
            if let Some(ov) = p.overshoot() {
                acc[m + 1].push(ov);
            }
        },
    )?;
    Ok(PassageDownEstimate {
        probability: acc[0].estimate(cfg.seed, o.bias_bound),
        by_state: acc[1..=m].iter().map(|a| a.estimate(cfg.seed, o.bias_bound)).collect(),
        overshoot_mean: acc[m + 1].estimate(cfg.seed, o.bias_bound),
    })
}
