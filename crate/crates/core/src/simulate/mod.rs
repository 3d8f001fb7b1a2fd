//! Exact event-driven Monte Carlo for `Z(t) = {ξ(t), x(t)}` and for the
//! two-regime modified process.
//!
//! The path of `ξ` is piecewise constant between jumps, so every level
//! crossing is detected at the jump that causes it and all passage times are
//! exact up to floating point. Replications run in parallel in fixed-size
//! blocks; blocks are merged in index order, so merged estimates are
//! bit-identical for any worker count.

mod engine;
mod estimate;
mod modified;
mod passage;

use rayon::prelude::*;

pub use engine::{path_extrema, record_path, step_event, Event, EventKind, EventRecord, Extrema};
pub use estimate::{
    estimate_interval_exit, estimate_overjump, estimate_passage_down, estimate_recovery_red,
    estimate_red_composed, estimate_ruin, estimate_sup_cdf, estimate_total_deficit,
    estimate_total_deficit_composed, sample_suprema, DeficitEstimate, ExitEstimate,
    OverjumpPoint, OverjumpSample, PassageDownEstimate, RecoveryRedEstimate,
};
pub use modified::{
    estimate_discounted_penalty, estimate_modified_ruin, estimate_modified_ruin_composed,
    simulate_modified, ModelPair, ModifiedOutcome, Regime, RegimeSwitch,
};
pub use passage::{
    first_passage_down, first_passage_up, interval_exit, ruin_path, sample_supremum, Censor,
    Direction, ExitSide, IntervalExitOutcome, PassageOutcome, RuinPath, SupremumOutcome,
};

use crate::error::{Error, Result};
use crate::model::ValidatedModel;

/// Replications per block. Block boundaries fix the summation order.
const BLOCK: u64 = 4096;

/// Lundberg-bound multiplier for the default safe barrier `L = 25 / r₁`.
pub const BARRIER_FACTOR: f64 = 25.0;

/// Replication count, master seed and worker count of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n: u64,
    pub seed: u64,
    /// Worker threads; 0 means one per available core. Never affects results.
    pub workers: usize,
}

impl McConfig {
    pub fn new(n: u64, seed: u64) -> Self {
        McConfig { n, seed, workers: 0 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Censoring and start-state options shared by the simulators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Paths still unresolved at this time are censored.
    pub horizon: f64,
    /// Safe distance `L`: a path this far below the relevant level is treated
    /// as never returning. `None` picks `25 / r₁` from the Lundberg exponent.
    pub barrier: Option<f64>,
    pub initial_state: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            horizon: f64::INFINITY,
            barrier: None,
            initial_state: 0,
        }
    }
}

impl SimOptions {
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_barrier(mut self, barrier: f64) -> Self {
        self.barrier = Some(barrier);
        self
    }

    pub fn with_initial_state(mut self, state: usize) -> Self {
        self.initial_state = state;
        self
    }
}

/// Options with the barrier fixed to a number.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Resolved {
    pub horizon: f64,
    pub barrier: f64,
    pub initial_state: usize,
    /// `e^{−r₁ L}` when the exponent is known.
    pub bias_bound: Option<f64>,
}

impl SimOptions {
    fn check(&self, model: &ValidatedModel) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::precondition("horizon must be positive"));
        }
        if let Some(l) = self.barrier {
            if !(l > 0.0) {
                return Err(Error::precondition("barrier must be positive"));
            }
        }
        if self.initial_state >= model.m() {
            return Err(Error::precondition(format!(
                "initial state {} out of range (m = {})",
                self.initial_state,
                model.m()
            )));
        }
        Ok(())
    }

    /// Barrier for passages upward / suprema.
    pub(crate) fn resolve_up(&self, model: &ValidatedModel) -> Result<Resolved> {
        self.check(model)?;
        let (barrier, bias_bound) = if !model.has_upward_jumps() {
            (self.barrier.unwrap_or(1.0), Some(0.0))
        } else {
            match model.adjustment_coefficient()? {
                Some(r) => {
                    let l = self.barrier.unwrap_or(BARRIER_FACTOR / r);
                    (l, Some((-r * l).exp()))
                }
                None => (self.barrier.unwrap_or(f64::INFINITY), None),
            }
        };
        Ok(Resolved {
            horizon: self.horizon,
            barrier,
            initial_state: self.initial_state,
            bias_bound,
        })
    }

    /// Barrier above the level for downward passages.
    pub(crate) fn resolve_down(&self, model: &ValidatedModel) -> Result<Resolved> {
        self.check(model)?;
        let (barrier, bias_bound) = if !model.has_downward_jumps() {
            (self.barrier.unwrap_or(1.0), Some(0.0))
        } else {
            match model.downward_adjustment_coefficient()? {
                Some(rho) => {
                    let l = self.barrier.unwrap_or(BARRIER_FACTOR / rho);
                    (l, Some((-rho * l).exp()))
                }
                None => (self.barrier.unwrap_or(f64::INFINITY), None),
            }
        };
        Ok(Resolved {
            horizon: self.horizon,
            barrier,
            initial_state: self.initial_state,
            bias_bound,
        })
    }
}

/// Point estimate with standard error and censoring diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MCEstimate {
    pub value: f64,
    /// Sample standard deviation over `√n`.
    pub stderr: f64,
    pub n: u64,
    /// Fraction of replications censored at the time horizon.
    pub censored_frac: f64,
    pub seed: u64,
    /// Upper bound on the bias from barrier censoring, when known.
    pub bias_bound: Option<f64>,
    pub warnings: Vec<String>,
}

impl MCEstimate {
    pub fn exact(value: f64, n: u64, seed: u64) -> Self {
        MCEstimate {
            value,
            stderr: 0.0,
            n,
            censored_frac: 0.0,
            seed,
            bias_bound: Some(0.0),
            warnings: Vec::new(),
        }
    }

    /// `(value − reference) / stderr`; infinite when the error is zero and
    /// the values differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = self.value - reference;
        if d == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY * d.signum()
        } else {
            d / self.stderr
        }
    }
}

/// Running sums for one estimand.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sumsq: f64,
    pub censored: u64,
    pub max_sq: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        let sq = x * x;
        self.sumsq += sq;
        if sq > self.max_sq {
            self.max_sq = sq;
        }
    }

    pub fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sumsq += o.sumsq;
        self.censored += o.censored;
        self.max_sq = self.max_sq.max(o.max_sq);
    }

    pub fn estimate(&self, seed: u64, bias_bound: Option<f64>) -> MCEstimate {
        let n = self.n.max(1) as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sumsq - self.sum * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        MCEstimate {
            value: mean,
            stderr: (var / n).sqrt(),
            n: self.n,
            censored_frac: self.censored as f64 / n,
            seed,
            bias_bound,
            warnings: Vec::new(),
        }
    }
}

/// Merge contract for block accumulators.
pub(crate) trait Accumulate: Send {
    fn merge(&mut self, other: Self);
}

impl Accumulate for Moments {
    fn merge(&mut self, other: Self) {
        Moments::merge(self, &other)
    }
}

impl Accumulate for Vec<Moments> {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.iter_mut().zip(&other) {
            a.merge(b);
        }
    }
}

impl<T: Send> Accumulate for Vec<Option<T>> {
    fn merge(&mut self, other: Self) {
        self.extend(other)
    }
}

/// Runs `body(acc, replication)` for every replication in `0..cfg.n` and
/// merges block accumulators in block order.
pub(crate) fn run_blocks<A, I, F>(cfg: &McConfig, init: I, body: F) -> Result<A>
where
    A: Accumulate,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) + Sync,
{
    if cfg.n == 0 {
        return Err(Error::precondition("replication count n must be >= 1"));
    }
    let blocks = cfg.n.div_ceil(BLOCK);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    let parts: Vec<A> = pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut acc = init();
                let end = ((b + 1) * BLOCK).min(cfg.n);
                for rep in b * BLOCK..end {
                    body(&mut acc, rep);
                }
                acc
            })
            .collect()
    });
    let mut it = parts.into_iter();
    let mut total = it.next().expect("at least one block");
    for p in it {
        total.merge(p);
    }
    Ok(total)
}

pub(crate) fn require_negative_drift(model: &ValidatedModel, horizon: f64, what: &str) -> Result<()> {
    let d = model.drift()?.stationary_drift;
    if d >= 0.0 && horizon.is_infinite() {
        return Err(Error::precondition(format!(
            "{what}: stationary drift {d} is not negative; pass an explicit finite horizon"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_merge_is_worker_independent() {
        let cfg = McConfig::new(20_000, 3);
        let f = |acc: &mut Moments, rep: u64| acc.push(((rep * 7919) % 1000) as f64 * 1e-3 + 0.1);
        let a = run_blocks(&cfg.with_workers(1), Moments::default, f).unwrap();
        let b = run_blocks(&cfg.with_workers(4), Moments::default, f).unwrap();
        let c = run_blocks(&cfg.with_workers(8), Moments::default, f).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.n, 20_000);
    }

    #[test]
    fn estimate_from_moments() {
        let mut m = Moments::default();
        for x in [1.0, 0.0, 1.0, 0.0] {
            m.push(x);
        }
        let e = m.estimate(9, None);
        assert_eq!(e.value, 0.5);
        assert!((e.stderr - (1.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(run_blocks(&McConfig::new(0, 1), Moments::default, |_, _| {}).is_err());
    }
}
