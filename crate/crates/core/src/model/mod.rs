//! Model definition: the modulating chain, per-state premium and claim
//! parameters, validation, and the matrix cumulant.

mod claim;
mod config;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use claim::ClaimLaw;
pub use config::{parse_model, serialize_model};

use crate::error::{Error, Result, Violation, ViolationCode};

/// Finite Markov chain described by its generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub m: usize,
    /// Generator, row-major `m×m`; off-diagonals are transition rates.
    pub q: DMatrix<f64>,
}

impl ChainSpec {
    pub fn new(q: DMatrix<f64>) -> Self {
        ChainSpec { m: q.nrows(), q }
    }

    pub fn single_state() -> Self {
        ChainSpec::new(DMatrix::zeros(1, 1))
    }

    /// Graph reachability on the nonzero off-diagonal pattern, both directions.
    pub fn is_irreducible(&self) -> bool {
        let m = self.m;
        let reach = |forward: bool| {
            let mut seen = vec![false; m];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for (j, s) in seen.iter_mut().enumerate() {
                    let rate = if forward { self.q[(i, j)] } else { self.q[(j, i)] };
                    if i != j && rate > 0.0 && !*s {
                        *s = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        m > 0 && reach(true) && reach(false)
    }

    /// Solves `πQ = 0`, `Σπ = 1`.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        let m = self.m;
        if m == 1 {
            return Ok(vec![1.0]);
        }
        let mut a = self.q.transpose();
        for j in 0..m {
            a[(m - 1, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(m);
        rhs[m - 1] = 1.0;
        let lu = a.clone().lu();
        let mut pi = lu.solve(&rhs).ok_or_else(|| Error::Singular {
            what: "stationary distribution".into(),
            condition: f64::INFINITY,
        })?;
        // one step of iterative refinement
        let r = &rhs - &a * &pi;
        if let Some(d) = lu.solve(&r) {
            pi += d;
        }
        let scale = self.q.amax().max(1.0);
        let residual = (pi.transpose() * &self.q).amax();
        if !pi.iter().all(|p| p.is_finite()) || residual > 1e-12 * scale {
            return Err(Error::Singular {
                what: "stationary distribution".into(),
                condition: residual / (1e-16 * scale),
            });
        }
        Ok(pi.iter().map(|p| p.max(0.0)).collect())
    }
}

/// Premium and claim parameters of one chain state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateParams {
    /// Premium arrival rate.
    pub lambda1: f64,
    /// Claim arrival rate.
    pub lambda2: f64,
    /// Exponential parameter of premium sizes.
    pub c: f64,
    pub claim: ClaimLaw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub chain: ChainSpec,
    pub states: Vec<StateParams>,
}

impl ModelSpec {
    /// One-state model.
    pub fn scalar(lambda1: f64, lambda2: f64, c: f64, claim: ClaimLaw) -> Self {
        ModelSpec {
            chain: ChainSpec::single_state(),
            states: vec![StateParams {
                lambda1,
                lambda2,
                c,
                claim,
            }],
        }
    }

    /// Same model with the premium-size parameters replaced.
    pub fn with_premium_rates(&self, c: &[f64]) -> ModelSpec {
        let mut out = self.clone();
        for (s, &ck) in out.states.iter_mut().zip(c) {
            s.c = ck;
        }
        out
    }

    pub fn validate(self) -> Result<ValidatedModel> {
        validate_model(self)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct StateDynamics {
    pub total_rate: f64,
    /// Cumulative thresholds (premium, premium + claim) as fractions of the total.
    pub premium_cut: f64,
    pub claim_cut: f64,
    /// Jump-chain targets with cumulative probabilities.
    pub switch_cum: Vec<(usize, f64)>,
}

/// A model whose invariants have been checked. Cheap to clone and safe to
/// share across threads.
#[derive(Debug, Clone)]
pub struct ValidatedModel {
    spec: Arc<ModelSpec>,
    dynamics: Arc<Vec<StateDynamics>>,
}

/// Checks every model invariant, reporting all violations at once.
pub fn validate_model(spec: ModelSpec) -> Result<ValidatedModel> {
    let mut v = Vec::new();
    let mut push = |code: ViolationCode, message: String| v.push(Violation { code, message });
    let m = spec.chain.m;
    let q = &spec.chain.q;
    if m == 0 || spec.states.len() != m {
        push(
            ViolationCode::StateCount,
            format!("chain has {m} states but {} state blocks were given", spec.states.len()),
        );
    }
    if q.nrows() != m || q.ncols() != m {
        push(
            ViolationCode::GeneratorShape,
            format!("generator is {}x{}, expected {m}x{m}", q.nrows(), q.ncols()),
        );
        return Err(Error::Invalid(v));
    }
    if q.iter().any(|x| !x.is_finite()) {
        push(ViolationCode::NonFinite, "generator has non-finite entries".into());
        return Err(Error::Invalid(v));
    }
    for i in 0..m {
        for j in 0..m {
            if i != j && q[(i, j)] < 0.0 {
                push(
                    ViolationCode::NegativeOffDiagonal { row: i + 1, col: j + 1 },
                    format!("q[{}][{}] = {} is negative", i + 1, j + 1, q[(i, j)]),
                );
            }
        }
        let row = q.row(i);
        let sum: f64 = row.iter().sum();
        if sum.abs() > 1e-12 * row.amax().max(1.0) {
            push(
                ViolationCode::RowSum { row: i + 1 },
                format!("generator row {} sums to {sum}, expected 0", i + 1),
            );
        }
    }
    if m > 0 && !spec.chain.is_irreducible() {
        push(ViolationCode::Reducible, "chain is not irreducible".into());
    }
    for (k, s) in spec.states.iter().enumerate() {
        let st = k + 1;
        if !(s.lambda1.is_finite() && s.lambda1 >= 0.0 && s.lambda2.is_finite() && s.lambda2 >= 0.0) {
            push(
                ViolationCode::NegativeRate { state: st },
                format!("state {st}: arrival rates must be finite and >= 0"),
            );
        }
        if !(s.c.is_finite() && s.c > 0.0) {
            push(
                ViolationCode::NonPositivePremium { state: st },
                format!("state {st}: premium parameter c = {} must be positive", s.c),
            );
        }
        if let Err(msg) = s.claim.check() {
            push(ViolationCode::ClaimLaw { state: st }, format!("state {st}: {msg}"));
        }
        if k < m && s.lambda1 + s.lambda2 + q[(k, k)].abs() <= 0.0 {
            push(
                ViolationCode::FrozenState { state: st },
                format!("state {st}: no premiums, no claims and no chain exits"),
            );
        }
    }
    if !v.is_empty() {
        return Err(Error::Invalid(v));
    }
    let dynamics = spec
        .states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let exit = -q[(k, k)];
            let total = s.lambda1 + s.lambda2 + exit;
            let mut acc = 0.0;
            let mut switch_cum = Vec::new();
            for j in 0..m {
                if j != k && q[(k, j)] > 0.0 {
                    acc += q[(k, j)] / exit;
                    switch_cum.push((j, acc));
                }
            }
            if let Some(last) = switch_cum.last_mut() {
                last.1 = 1.0;
            }
            StateDynamics {
                total_rate: total,
                premium_cut: s.lambda1 / total,
                claim_cut: (s.lambda1 + s.lambda2) / total,
                switch_cum,
            }
        })
        .collect();
    Ok(ValidatedModel {
        spec: Arc::new(spec),
        dynamics: Arc::new(dynamics),
    })
}

/// Per-state and stationary mean increment of `ξ` per unit time.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub per_state: Vec<f64>,
    pub stationary: Vec<f64>,
    pub stationary_drift: f64,
}

impl ValidatedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn m(&self) -> usize {
        self.spec.chain.m
    }

    pub fn is_scalar(&self) -> bool {
        self.m() == 1
    }

    pub fn state(&self, k: usize) -> &StateParams {
        &self.spec.states[k]
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.spec.chain.q
    }

    pub(crate) fn dynamics(&self, k: usize) -> &StateDynamics {
        &self.dynamics[k]
    }

    pub fn has_upward_jumps(&self) -> bool {
        self.spec.states.iter().any(|s| s.lambda2 > 0.0)
    }

    pub fn has_downward_jumps(&self) -> bool {
        self.spec.states.iter().any(|s| s.lambda1 > 0.0)
    }

    /// `Λ = diag(λ1 + λ2)`
    pub fn lambda_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.m(),
            self.spec.states.iter().map(|s| s.lambda1 + s.lambda2),
        ))
    }

    /// `C = diag(c)`
    pub fn premium_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.m(),
            self.spec.states.iter().map(|s| s.c),
        ))
    }

    /// `F₀(0) = diag(λ1/(λ1 + λ2))`, zero where the state has no jumps.
    pub fn f0_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.m(),
            self.spec.states.iter().map(|s| {
                let tot = s.lambda1 + s.lambda2;
                if tot > 0.0 {
                    s.lambda1 / tot
                } else {
                    0.0
                }
            }),
        ))
    }

    /// Matrix cumulant `Ψ(α)`, continued rationally past the claim abscissa.
    pub fn cumulant(&self, alpha: f64) -> Result<DMatrix<f64>> {
        let mut psi = self.spec.chain.q.clone();
        for (k, s) in self.spec.states.iter().enumerate() {
            let mut d = 0.0;
            if s.lambda1 > 0.0 {
                if (alpha + s.c).abs() <= 1e-12 * s.c.max(1.0) {
                    return Err(Error::Domain(format!(
                        "alpha = {alpha} is the premium pole -c of state {}",
                        k + 1
                    )));
                }
                d += s.lambda1 * (s.c / (s.c + alpha) - 1.0);
            }
            if s.lambda2 > 0.0 {
                let mgf = s.claim.mgf(alpha).ok_or_else(|| {
                    Error::Domain(format!("alpha = {alpha} is a claim-law pole of state {}", k + 1))
                })?;
                d += s.lambda2 * (mgf - 1.0);
            }
            psi[(k, k)] += d;
        }
        Ok(psi)
    }

    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        self.spec.chain.stationary_distribution()
    }

    pub fn drift(&self) -> Result<DriftReport> {
        let per_state: Vec<f64> = self
            .spec
            .states
            .iter()
            .map(|s| s.lambda2 * s.claim.mean() - s.lambda1 / s.c)
            .collect();
        let stationary = self.stationary_distribution()?;
        let stationary_drift = per_state.iter().zip(&stationary).map(|(d, p)| d * p).sum();
        Ok(DriftReport {
            per_state,
            stationary,
            stationary_drift,
        })
    }

    /// Largest real part of the spectrum of `Ψ(α)` (the Perron root: `Ψ(α)`
    /// is Metzler).
    pub fn perron_root(&self, alpha: f64) -> Result<f64> {
        let psi = self.cumulant(alpha)?;
        if psi.nrows() == 1 {
            return Ok(psi[(0, 0)]);
        }
        Ok(psi
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Smallest `r > 0` with Perron root of `Ψ(r)` equal to zero; `None` when
    /// there are no upward jumps or the stationary drift is not negative.
    pub fn adjustment_coefficient(&self) -> Result<Option<f64>> {
        if !self.has_upward_jumps() || self.drift()?.stationary_drift >= 0.0 {
            return Ok(None);
        }
        let hi = self
            .spec
            .states
            .iter()
            .filter(|s| s.lambda2 > 0.0)
            .map(|s| s.claim.abscissa())
            .fold(f64::INFINITY, f64::min);
        self.bracket_root(0.0, hi)
    }

    /// `ρ > 0` with Perron root of `Ψ(−ρ)` zero; governs the probability of
    /// ever passing below a level under positive drift.
    pub fn downward_adjustment_coefficient(&self) -> Result<Option<f64>> {
        if !self.has_downward_jumps() || self.drift()?.stationary_drift <= 0.0 {
            return Ok(None);
        }
        let lo = self
            .spec
            .states
            .iter()
            .filter(|s| s.lambda1 > 0.0)
            .map(|s| s.c)
            .fold(f64::INFINITY, f64::min);
        Ok(self.bracket_root(0.0, -lo)?.map(|r| -r))
    }

    /// Root of the Perron root strictly between `zero` (a trivial root) and
    /// the pole `pole`, where it blows up to `+∞`.
    fn bracket_root(&self, zero: f64, pole: f64) -> Result<Option<f64>> {
        let span = pole - zero;
        let mut neg = None;
        for j in 1..60 {
            let x = zero + span * 0.5f64.powi(j);
            if self.perron_root(x)? < 0.0 {
                neg = Some(x);
                break;
            }
        }
        let mut pos = None;
        for j in 1..60 {
            let x = pole - span * 0.5f64.powi(j);
            if self.perron_root(x)? > 0.0 {
                pos = Some(x);
                break;
            }
        }
        let (Some(mut a), Some(mut b)) = (neg, pos) else {
            return Ok(None);
        };
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if self.perron_root(mid)? < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(Some(0.5 * (a + b)))
    }
}
