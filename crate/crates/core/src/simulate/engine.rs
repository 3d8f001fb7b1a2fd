use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::model::ValidatedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Premium,
    Claim,
    ChainSwitch,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Premium => "premium",
            EventKind::Claim => "claim",
            EventKind::ChainSwitch => "chain-switch",
        }
    }
}

/// One step of the embedded jump process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Holding time before the event.
    pub holding: f64,
    pub kind: EventKind,
    /// Jump magnitude (> 0 for premiums and claims, 0 for chain switches).
    pub size: f64,
    pub state_before: usize,
    pub state_after: usize,
}

impl Event {
    /// Signed increment of `ξ`.
    #[inline]
    pub fn increment(&self) -> f64 {
        match self.kind {
            EventKind::Claim => self.size,
            EventKind::Premium => -self.size,
            EventKind::ChainSwitch => 0.0,
        }
    }
}

/// Event with its absolute time, as written to event logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub size: f64,
    pub state_before: usize,
    pub state_after: usize,
}

/// Draws the next event from `state`: a single exponential clock with the
/// total rate `λ1 + λ2 + |q_kk|`, thinned into premium, claim or switch.
pub fn step_event<R: Rng + ?Sized>(model: &ValidatedModel, state: usize, rng: &mut R) -> Result<Event> {
    if state >= model.m() {
        return Err(Error::precondition(format!("state {state} out of range")));
    }
    if model.dynamics(state).total_rate <= 0.0 {
        return Err(Error::FrozenState(state + 1));
    }
    Ok(draw(model, state, rng))
}

#[inline]
pub(crate) fn draw<R: Rng + ?Sized>(model: &ValidatedModel, state: usize, rng: &mut R) -> Event {
    let dynm = model.dynamics(state);
    let e: f64 = rng.sample(Exp1);
    let holding = e / dynm.total_rate;
    let u: f64 = rng.random();
    let params = model.state(state);
    if u < dynm.premium_cut {
        let e: f64 = rng.sample(Exp1);
        Event {
            holding,
            kind: EventKind::Premium,
            size: e / params.c,
            state_before: state,
            state_after: state,
        }
    } else if u < dynm.claim_cut {
        Event {
            holding,
            kind: EventKind::Claim,
            size: params.claim.sample(rng),
            state_before: state,
            state_after: state,
        }
    } else {
        let v: f64 = rng.random();
        let to = dynm
            .switch_cum
            .iter()
            .find(|(_, p)| v < *p)
            .or(dynm.switch_cum.last())
            .map(|(j, _)| *j)
            .unwrap_or(state);
        Event {
            holding,
            kind: EventKind::ChainSwitch,
            size: 0.0,
            state_before: state,
            state_after: to,
        }
    }
}

/// Simulates the event log on `[0, horizon]` (at most `max_events` events).
pub fn record_path<R: Rng + ?Sized>(
    model: &ValidatedModel,
    initial_state: usize,
    horizon: f64,
    max_events: usize,
    rng: &mut R,
) -> Result<Vec<EventRecord>> {
    let mut t = 0.0;
    let mut state = initial_state;
    let mut log = Vec::new();
    while log.len() < max_events {
        let ev = step_event(model, state, rng)?;
        if t + ev.holding > horizon {
            break;
        }
        t += ev.holding;
        state = ev.state_after;
        log.push(EventRecord {
            t,
            kind: ev.kind,
            size: ev.size,
            state_before: ev.state_before,
            state_after: ev.state_after,
        });
    }
    Ok(log)
}

/// Running supremum, infimum and `ξ̄ = ξ − ξ⁺` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub sup: f64,
    pub inf: f64,
    pub reflected: f64,
}

pub fn path_extrema(log: &[EventRecord], t: f64) -> Extrema {
    let mut xi: f64 = 0.0;
    let mut sup: f64 = 0.0;
    let mut inf: f64 = 0.0;
    for ev in log.iter().take_while(|e| e.t <= t) {
        match ev.kind {
            EventKind::Claim => xi += ev.size,
            EventKind::Premium => xi -= ev.size,
            EventKind::ChainSwitch => {}
        }
        sup = sup.max(xi);
        inf = inf.min(xi);
    }
    Extrema {
        sup,
        inf,
        reflected: xi - sup,
    }
}
