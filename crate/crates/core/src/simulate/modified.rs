//! The two-regime modified process `ξ_{a,b}`.
//!
//! The path runs with the normal premium parameters until it falls strictly
//! below `u − b`, then with the reduced ones until it climbs back to
//! `u − a`, and so on. Ruin is the first time the path exceeds `u`.

use rand::Rng;

use super::engine::{draw, EventKind};
use super::passage::{passage_up, Walk};
use super::{run_blocks, Censor, McConfig, MCEstimate, Moments, Resolved, SimOptions};
use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::rng::{derive_seed, RngStream};

const TAG_STAR_LEG: u64 = 5;
const TAG_RESTART_LEG: u64 = 6;

/// A model and its reduced-premium twin. The two may differ only in the
/// per-state premium parameter `c`.
#[derive(Debug, Clone)]
pub struct ModelPair {
    normal: ValidatedModel,
    star: ValidatedModel,
}

impl ModelPair {
    pub fn new(normal: ValidatedModel, star: ValidatedModel) -> Result<Self> {
        if normal.m() != star.m() {
            return Err(Error::Unsupported(format!(
                "regime models have different state counts ({} vs {})",
                normal.m(),
                star.m()
            )));
        }
        if normal.generator() != star.generator() {
            return Err(Error::Unsupported("regime models have different generators".into()));
        }
        for k in 0..normal.m() {
            let (p, q) = (normal.state(k), star.state(k));
            if p.lambda1 != q.lambda1 || p.lambda2 != q.lambda2 || p.claim != q.claim {
                return Err(Error::Unsupported(format!(
                    "regime models differ in state {} beyond the premium parameter c",
                    k + 1
                )));
            }
        }
        Ok(ModelPair { normal, star })
    }

    pub fn normal(&self) -> &ValidatedModel {
        &self.normal
    }

    pub fn star(&self) -> &ValidatedModel {
        &self.star
    }

    fn regime(&self, r: Regime) -> &ValidatedModel {
        match r {
            Regime::Normal => &self.normal,
            Regime::Reduced => &self.star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Normal,
    Reduced,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Normal => "normal",
            Regime::Reduced => "reduced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSwitch {
    pub t: f64,
    pub to: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedOutcome {
    pub ruined: bool,
    /// `τ̃⁺(u)`, or the censoring time.
    pub tau: f64,
    /// `γ̃₊(u)`
    pub undershoot: f64,
    /// `γ̃⁺(u)`
    pub overshoot: f64,
    pub state: usize,
    pub regime: Regime,
    pub switches: Vec<RegimeSwitch>,
    pub censor: Option<Censor>,
}

fn check_levels(u: f64, a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::precondition(format!("need 0 < a, finite a and b; got a = {a}, b = {b}")));
    }
    if a > b {
        return Err(Error::precondition(format!("need a <= b, got a = {a}, b = {b}")));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::precondition(format!("level u = {u} must be finite and > 0")));
    }
    Ok(())
}

/// Barrier from the reduced regime, which governs paths far below `u − b`.
fn resolve(pair: &ModelPair, opts: &SimOptions) -> Result<Resolved> {
    opts.resolve_up(&pair.normal)?;
    let star = pair.star();
    if star.has_upward_jumps() && opts.horizon.is_infinite() && star.drift()?.stationary_drift >= 0.0 {
        return Err(Error::precondition(
            "modified process: reduced-regime drift is not negative; pass an explicit finite horizon",
        ));
    }
    opts.resolve_up(star)
}

pub(crate) struct ModRun {
    pub ruined: bool,
    pub tau: f64,
    pub pre: f64,
    pub post: f64,
    pub state: usize,
    pub regime: Regime,
    pub censor: Option<Censor>,
}

pub(crate) fn run_modified<R: Rng + ?Sized>(
    pair: &ModelPair,
    u: f64,
    a: f64,
    b: f64,
    rng: &mut R,
    o: &Resolved,
    mut log: Option<&mut Vec<RegimeSwitch>>,
) -> ModRun {
    let low = u - b;
    let high = u - a;
    let safe = low - o.barrier;
    let mut w = Walk::new(o.initial_state);
    let mut regime = if w.xi < low { Regime::Reduced } else { Regime::Normal };
    if regime == Regime::Reduced {
        if let Some(l) = log.as_deref_mut() {
            l.push(RegimeSwitch { t: 0.0, to: Regime::Reduced });
        }
    }
    let finish = |w: &Walk, regime, ruined, pre, censor| ModRun {
        ruined,
        tau: w.t,
        pre,
        post: w.xi,
        state: w.state,
        regime,
        censor,
    };
    if w.xi <= safe {
        return finish(&w, regime, false, 0.0, Some(Censor::Barrier));
    }
    loop {
        let ev = draw(pair.regime(regime), w.state, rng);
        if w.t + ev.holding > o.horizon {
            w.t = o.horizon;
            return finish(&w, regime, false, w.xi, Some(Censor::Horizon));
        }
        w.t += ev.holding;
        w.state = ev.state_after;
        let pre = w.xi;
        w.xi += ev.increment();
        let next = match ev.kind {
            EventKind::Claim => {
                if w.xi > u {
                    return finish(&w, regime, true, pre, None);
                }
                if regime == Regime::Reduced && w.xi >= high {
                    Regime::Normal
                } else {
                    regime
                }
            }
            EventKind::Premium => {
                if w.xi <= safe {
                    return finish(&w, regime, false, pre, Some(Censor::Barrier));
                }
                if regime == Regime::Normal && w.xi < low {
                    Regime::Reduced
                } else {
                    regime
                }
            }
            EventKind::ChainSwitch => regime,
        };
        if next != regime {
            regime = next;
            if let Some(l) = log.as_deref_mut() {
                l.push(RegimeSwitch { t: w.t, to: regime });
            }
        }
    }
}

/// One path of `ξ_{a,b}` up to ruin at level `u` or censoring, with the
/// regime-switch log.
pub fn simulate_modified<R: Rng + ?Sized>(
    pair: &ModelPair,
    u: f64,
    a: f64,
    b: f64,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<ModifiedOutcome> {
    check_levels(u, a, b)?;
    let o = resolve(pair, opts)?;
    let mut switches = Vec::new();
    let r = run_modified(pair, u, a, b, rng, &o, Some(&mut switches));
    Ok(ModifiedOutcome {
        ruined: r.ruined,
        tau: r.tau,
        undershoot: if r.ruined { u - r.pre } else { 0.0 },
        overshoot: if r.ruined { r.post - u } else { 0.0 },
        state: r.state,
        regime: r.regime,
        switches,
        censor: r.censor,
    })
}

/// `E[e^{−sτ̃⁺(u)} w(γ̃₊(u), γ̃⁺(u)); τ̃⁺(u) < ∞]` for a pure, nonnegative
/// penalty `w`.
///
/// A warning is attached when a single replication dominates the sum of
/// squares, which signals a penalty too heavy-tailed for the standard error
/// to be trusted.
#[allow(clippy::too_many_arguments)]
pub fn estimate_discounted_penalty<W>(
    pair: &ModelPair,
    u: f64,
    a: f64,
    b: f64,
    s: f64,
    w: W,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<MCEstimate>
where
    W: Fn(f64, f64) -> f64 + Sync,
{
    check_levels(u, a, b)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::precondition(format!("discount s = {s} must be finite and >= 0")));
    }
    let o = resolve(pair, opts)?;
    if !pair.normal.has_upward_jumps() {
        return Ok(MCEstimate::exact(0.0, cfg.n, cfg.seed));
    }
    let acc = run_blocks(cfg, Moments::default, |acc: &mut Moments, rep| {
        let mut rng = RngStream::new(cfg.seed, rep);
        let r = run_modified(pair, u, a, b, &mut rng, &o, None);
        if r.censor == Some(Censor::Horizon) {
            acc.censored += 1;
        }
        if r.ruined {
            let disc = if s == 0.0 { 1.0 } else { (-s * r.tau).exp() };
            acc.push(disc * w(u - r.pre, r.post - u));
        } else {
            acc.push(0.0);
        }
    })?;
    let mut est = acc.estimate(cfg.seed, o.bias_bound);
    if acc.n >= 100 && acc.max_sq > 0.5 * acc.sumsq {
        est.warnings.push(
            "a single replication dominates the sum of squares; the penalty may be unbounded and the standard error unreliable"
                .into(),
        );
    }
    Ok(est)
}

/// `Φ₀^{a,b}(u)`, the ruin probability of the modified process.
pub fn estimate_modified_ruin(
    pair: &ModelPair,
    u: f64,
    a: f64,
    b: f64,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<MCEstimate> {
    estimate_discounted_penalty(pair, u, a, b, 0.0, |_, _| 1.0, cfg, opts)
}

/// Modified ruin for `u > b` through the reduced-regime passage at `u − a`:
/// an overshoot `z > a` is ruin, otherwise the modified process restarts in
/// the normal regime at level `a − z` from the chain state at passage. The
/// two legs use independent stream families.
pub fn estimate_modified_ruin_composed(
    pair: &ModelPair,
    u: f64,
    a: f64,
    b: f64,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<MCEstimate> {
    check_levels(u, a, b)?;
    if !(u > b) {
        return Err(Error::precondition(format!("composed estimator needs u > b, got u = {u}, b = {b}")));
    }
    let o = resolve(pair, opts)?;
    let seed_a = derive_seed(cfg.seed, TAG_STAR_LEG);
    let seed_b = derive_seed(cfg.seed, TAG_RESTART_LEG);
    let acc = run_blocks(cfg, Moments::default, |acc: &mut Moments, rep| {
        let mut rng = RngStream::new(seed_a, rep);
        let p = passage_up(pair.star(), u - a, &mut rng, &o);
        if p.censor == Some(Censor::Horizon) {
            acc.censored += 1;
        }
        let Some(z) = p.overshoot() else {
            acc.push(0.0);
            return;
        };
        if z > a {
            acc.push(1.0);
            return;
        }
        let mut rng = RngStream::new(seed_b, rep);
        let rest = Resolved {
            initial_state: p.state,
            horizon: o.horizon - p.tau,
            ..o
        };
        let r = run_modified(pair, a - z, a, b, &mut rng, &rest, None);
        if r.censor == Some(Censor::Horizon) {
            acc.censored += 1;
        }
        acc.push(if r.ruined { 1.0 } else { 0.0 });
    })?;
    Ok(acc.estimate(cfg.seed, o.bias_bound))
}
