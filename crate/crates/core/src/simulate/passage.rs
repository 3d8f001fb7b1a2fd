use rand::Rng;

use super::engine::{draw, EventKind};
use super::{Resolved, SimOptions};
use crate::error::{Error, Result};
use crate::model::ValidatedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Censor {
    /// Unresolved at the time horizon.
    Horizon,
    /// Reached the safe barrier; treated as never crossing.
    Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// Result of a first-passage simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageOutcome {
    pub level: f64,
    pub direction: Direction,
    pub crossed: bool,
    /// Crossing time, or the time of censoring.
    pub tau: f64,
    /// `ξ(τ − 0)`
    pub pre: f64,
    /// `ξ(τ)`
    pub post: f64,
    /// Chain state at the crossing (or at censoring).
    pub state: usize,
    pub censor: Option<Censor>,
}

impl PassageOutcome {
    /// Distance beyond the level after the crossing jump (`γ⁺` upward).
    /// Zero for the immediate downward passage at a positive level.
    pub fn overshoot(&self) -> Option<f64> {
        self.crossed.then_some(match self.direction {
            Direction::Up => self.post - self.level,
            Direction::Down if self.level > 0.0 => 0.0,
            Direction::Down => self.level - self.post,
        })
    }

    /// Distance short of the level just before the crossing (`γ₊` upward).
    pub fn undershoot(&self) -> Option<f64> {
        self.crossed.then_some(match self.direction {
            Direction::Up => self.level - self.pre,
            Direction::Down if self.level > 0.0 => 0.0,
            Direction::Down => self.pre - self.level,
        })
    }
}

pub(crate) struct Walk {
    pub t: f64,
    pub xi: f64,
    pub state: usize,
}

impl Walk {
    pub fn new(state: usize) -> Self {
        Walk {
            t: 0.0,
            xi: 0.0,
            state,
        }
    }
}

pub(crate) fn passage_up<R: Rng + ?Sized>(
    model: &ValidatedModel,
    u: f64,
    rng: &mut R,
    o: &Resolved,
) -> PassageOutcome {
    let lower = u - o.barrier;
    let mut w = Walk::new(o.initial_state);
    let done = |w: &Walk, crossed, pre, censor| PassageOutcome {
        level: u,
        direction: Direction::Up,
        crossed,
        tau: w.t,
        pre,
        post: w.xi,
        state: w.state,
        censor,
    };
    if w.xi <= lower {
        return done(&w, false, 0.0, Some(Censor::Barrier));
    }
    loop {
        let ev = draw(model, w.state, rng);
        if w.t + ev.holding > o.horizon {
            w.t = o.horizon;
            return done(&w, false, w.xi, Some(Censor::Horizon));
        }
        w.t += ev.holding;
        w.state = ev.state_after;
        let pre = w.xi;
        w.xi += ev.increment();
        match ev.kind {
            EventKind::Claim if w.xi > u => return done(&w, true, pre, None),
            EventKind::Premium if w.xi <= lower => return done(&w, false, pre, Some(Censor::Barrier)),
            _ => {}
        }
    }
}

/// First time `ξ` exceeds `u ≥ 0`. Paths that fall to `u − L` are censored
/// at the barrier; paths alive at the horizon are censored there.
pub fn first_passage_up<R: Rng + ?Sized>(
    model: &ValidatedModel,
    u: f64,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<PassageOutcome> {
    if !(u >= 0.0) {
        return Err(Error::precondition(format!("level u = {u} must be >= 0")));
    }
    let o = opts.resolve_up(model)?;
    Ok(passage_up(model, u, rng, &o))
}

pub(crate) fn passage_down<R: Rng + ?Sized>(
    model: &ValidatedModel,
    x: f64,
    rng: &mut R,
    o: &Resolved,
) -> PassageOutcome {
    let mut w = Walk::new(o.initial_state);
    let done = |w: &Walk, crossed, pre, censor| PassageOutcome {
        level: x,
        direction: Direction::Down,
        crossed,
        tau: w.t,
        pre,
        post: w.xi,
        state: w.state,
        censor,
    };
    if x > 0.0 {
        return done(&w, true, 0.0, None);
    }
    let upper = x + o.barrier;
    loop {
        let ev = draw(model, w.state, rng);
        if w.t + ev.holding > o.horizon {
            w.t = o.horizon;
            return done(&w, false, w.xi, Some(Censor::Horizon));
        }
        w.t += ev.holding;
        w.state = ev.state_after;
        let pre = w.xi;
        w.xi += ev.increment();
        match ev.kind {
            EventKind::Premium if w.xi < x => return done(&w, true, pre, None),
            EventKind::Claim if w.xi >= upper => return done(&w, false, pre, Some(Censor::Barrier)),
            _ => {}
        }
    }
}

/// First time `ξ` drops below `x`. For `x > 0` this is time zero.
pub fn first_passage_down<R: Rng + ?Sized>(
    model: &ValidatedModel,
    x: f64,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<PassageOutcome> {
    if x.is_nan() {
        return Err(Error::precondition("level is NaN"));
    }
    let o = opts.resolve_down(model)?;
    Ok(passage_down(model, x, rng, &o))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitSide {
    /// Through the upper boundary: `ξ(τ) ≥ u`.
    Upper,
    /// Through the lower boundary: `ξ(τ) ≤ u − b`.
    Lower,
}

/// Exit of `ξ` from `(u − b, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalExitOutcome {
    pub tau: f64,
    /// `None` when censored at the horizon.
    pub side: Option<ExitSide>,
    /// Distance beyond the crossed boundary.
    pub overshoot: f64,
    /// Distance inside the crossed boundary just before exit.
    pub undershoot: f64,
    pub state: usize,
}

pub(crate) fn exit_interval<R: Rng + ?Sized>(
    model: &ValidatedModel,
    u: f64,
    b: f64,
    rng: &mut R,
    horizon: f64,
    initial_state: usize,
) -> IntervalExitOutcome {
    let lower = u - b;
    let mut w = Walk::new(initial_state);
    if u == b {
        return IntervalExitOutcome {
            tau: 0.0,
            side: Some(ExitSide::Lower),
            overshoot: 0.0,
            undershoot: 0.0,
            state: w.state,
        };
    }
    loop {
        let ev = draw(model, w.state, rng);
        if w.t + ev.holding > horizon {
            return IntervalExitOutcome {
                tau: horizon,
                side: None,
                overshoot: 0.0,
                undershoot: 0.0,
                state: w.state,
            };
        }
        w.t += ev.holding;
        w.state = ev.state_after;
        let pre = w.xi;
        w.xi += ev.increment();
        if w.xi >= u {
            return IntervalExitOutcome {
                tau: w.t,
                side: Some(ExitSide::Upper),
                overshoot: w.xi - u,
                undershoot: u - pre,
                state: w.state,
            };
        }
        if w.xi <= lower {
            return IntervalExitOutcome {
                tau: w.t,
                side: Some(ExitSide::Lower),
                overshoot: lower - w.xi,
                undershoot: pre - lower,
                state: w.state,
            };
        }
    }
}

/// Exit from `(u − b, u)` starting at 0; requires `0 < u ≤ b`. With `u = b`
/// the start sits on the closed lower boundary and exits immediately.
pub fn interval_exit<R: Rng + ?Sized>(
    model: &ValidatedModel,
    u: f64,
    b: f64,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<IntervalExitOutcome> {
    if !(u > 0.0 && u <= b) {
        return Err(Error::precondition(format!("need 0 < u <= b, got u = {u}, b = {b}")));
    }
    opts.check(model)?;
    Ok(exit_interval(model, u, b, rng, opts.horizon, opts.initial_state))
}

/// All-time supremum of `ξ` (until the path is `L` below its running maximum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupremumOutcome {
    pub sup: f64,
    pub censored: bool,
}

pub(crate) fn supremum<R: Rng + ?Sized>(model: &ValidatedModel, rng: &mut R, o: &Resolved) -> SupremumOutcome {
    let mut w = Walk::new(o.initial_state);
    let mut sup: f64 = 0.0;
    loop {
        if w.xi <= sup - o.barrier {
            return SupremumOutcome { sup, censored: false };
        }
        let ev = draw(model, w.state, rng);
        if w.t + ev.holding > o.horizon {
            return SupremumOutcome { sup, censored: true };
        }
        w.t += ev.holding;
        w.state = ev.state_after;
        w.xi += ev.increment();
        sup = sup.max(w.xi);
    }
}

pub fn sample_supremum<R: Rng + ?Sized>(
    model: &ValidatedModel,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<SupremumOutcome> {
    let o = opts.resolve_up(model)?;
    Ok(supremum(model, rng, &o))
}

/// Ruin passage followed by the post-ruin functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuinPath {
    pub passage: PassageOutcome,
    /// `z⁺(u) = sup_{t ≥ τ⁺} ξ(t) − u`
    pub deficit: Option<f64>,
    /// `τ'(u)`: first time after ruin with `ξ < u`.
    pub recovery_time: Option<f64>,
    /// Sum of holding times between ruin and recovery, accumulated separately
    /// from the absolute clock.
    pub red_clock: Option<f64>,
    pub post_censored: bool,
}

impl RuinPath {
    /// `T'(u) = τ'(u) − τ⁺(u)`
    pub fn red_period(&self) -> Option<f64> {
        self.recovery_time.map(|r| r - self.passage.tau)
    }
}

pub(crate) fn run_ruin_path<R: Rng + ?Sized>(
    model: &ValidatedModel,
    u: f64,
    rng: &mut R,
    o: &Resolved,
    need_sup: bool,
    need_recovery: bool,
) -> RuinPath {
    let passage = passage_up(model, u, rng, o);
    let mut out = RuinPath {
        passage,
        deficit: None,
        recovery_time: None,
        red_clock: None,
        post_censored: false,
    };
    if !passage.crossed {
        return out;
    }
    let mut w = Walk {
        t: passage.tau,
        xi: passage.post,
        state: passage.state,
    };
    let mut sup = w.xi;
    let mut red = 0.0;
    let mut recovered: Option<f64> = None;
    loop {
        let sup_final = !need_sup || w.xi <= sup - o.barrier;
        if sup_final && (!need_recovery || recovered.is_some()) {
            break;
        }
        let ev = draw(model, w.state, rng);
        if w.t + ev.holding > o.horizon {
            out.post_censored = true;
            break;
        }
        w.t += ev.holding;
        if recovered.is_none() {
            red += ev.holding;
        }
        w.state = ev.state_after;
        w.xi += ev.increment();
        match ev.kind {
            EventKind::Claim => sup = sup.max(w.xi),
            EventKind::Premium if recovered.is_none() && w.xi < u => recovered = Some(w.t),
            _ => {}
        }
    }
    if need_sup && !out.post_censored {
        out.deficit = Some(sup - u);
    }
    if need_recovery {
        out.recovery_time = recovered;
        out.red_clock = recovered.map(|_| red);
    }
    out
}

/// Simulates to ruin at level `u` and, on ruined paths, continues until both
/// the recovery below `u` and the final post-ruin supremum are known.
pub fn ruin_path<R: Rng + ?Sized>(
    model: &ValidatedModel,
    u: f64,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<RuinPath> {
    if !(u >= 0.0) {
        return Err(Error::precondition(format!("level u = {u} must be >= 0")));
    }
    let o = opts.resolve_up(model)?;
    Ok(run_ruin_path(model, u, rng, &o, true, true))
}
