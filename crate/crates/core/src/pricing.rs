//! Gerber–Shiu discounted penalties on the modified process and perpetual
//! American put prices.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::simulate::{estimate_discounted_penalty, McConfig, MCEstimate, ModelPair, SimOptions};

type PenaltyEval = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Nonnegative penalty `w(x, y)` of undershoot `x` and overshoot `y`.
#[derive(Clone)]
pub struct PenaltyFn {
    tag: String,
    f: Arc<PenaltyEval>,
}

impl fmt::Debug for PenaltyFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PenaltyFn").field("tag", &self.tag).finish()
    }
}

const CHECK_GRID: [f64; 9] = [1e-6, 1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0];

impl PenaltyFn {
    /// Wraps `f` after checking it is finite and nonnegative on a sample grid.
    pub fn new<F>(tag: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let tag = tag.into();
        for &x in &CHECK_GRID {
            for &y in &CHECK_GRID {
                let v = f(x, y);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::precondition(format!(
                        "penalty `{tag}` gives {v} at (x, y) = ({x}, {y}); it must be finite and >= 0"
                    )));
                }
            }
        }
        Ok(PenaltyFn { tag, f: Arc::new(f) })
    }

    pub fn constant(v: f64) -> Result<Self> {
        PenaltyFn::new(format!("constant({v})"), move |_, _| v)
    }

    /// `w(x, y) = (K − e^{β−y})₊`
    pub fn put(strike: f64, beta: f64) -> Result<Self> {
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::precondition(format!("strike K = {strike} must be finite and > 0")));
        }
        if !beta.is_finite() {
            return Err(Error::precondition("boundary β must be finite"));
        }
        PenaltyFn::new(format!("put(K={strike}, beta={beta})"), move |_, y| {
            (strike - (beta - y).exp()).max(0.0)
        })
    }

    /// `k · w` for `k ≥ 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::precondition(format!("scale {k} must be finite and >= 0")));
        }
        let f = Arc::clone(&self.f);
        Ok(PenaltyFn {
            tag: format!("{k}*{}", self.tag),
            f: Arc::new(move |x, y| k * f(x, y)),
        })
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
}

/// Parameters of one Gerber–Shiu evaluation.
#[derive(Debug, Clone)]
pub struct GSQuery {
    pub u: f64,
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub penalty: PenaltyFn,
}

impl GSQuery {
    pub fn check(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= self.b) {
            return Err(Error::precondition(format!(
                "need 0 < a <= b, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if !(self.s >= 0.0) {
            return Err(Error::precondition(format!("discount s = {} must be >= 0", self.s)));
        }
        Ok(())
    }
}

/// `Φ_s^{a,b}(u)`: mean of `e^{−sτ̃⁺} w(γ̃₊, γ̃⁺)` over modified-process paths.
pub fn gerber_shiu(pair: &ModelPair, query: &GSQuery, cfg: &McConfig, opts: &SimOptions) -> Result<MCEstimate> {
    query.check()?;
    let w = &query.penalty;
    estimate_discounted_penalty(pair, query.u, query.a, query.b, query.s, |x, y| w.eval(x, y), cfg, opts)
}

/// Perpetual American put on the price `e^{u − ξ_{a,b}(t)}`, exercised at the
/// first time the price falls below `e^β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PutContract {
    pub strike: f64,
    pub beta: f64,
    pub s: f64,
    pub u: f64,
}

impl PutContract {
    pub fn check(&self) -> Result<()> {
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::precondition(format!("strike K = {} must be finite and > 0", self.strike)));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::precondition(format!("discount s = {} must be finite and > 0", self.s)));
        }
        if !(self.beta.is_finite() && self.u.is_finite()) {
            return Err(Error::precondition("u and β must be finite"));
        }
        if self.beta.exp() > self.u.exp().min(self.strike) {
            return Err(Error::precondition(format!(
                "exercise boundary e^β = {} exceeds min(e^u, K) = {}",
                self.beta.exp(),
                self.u.exp().min(self.strike)
            )));
        }
        if !(self.u - self.beta > 0.0) {
            return Err(Error::precondition("need u − β > 0"));
        }
        Ok(())
    }
}

/// `E[e^{−sτ̃⁺(u−β)} (K − e^{β−γ̃⁺(u−β)})₊]` with the inert zone `(a, b)`
/// measured from the level `u − β`.
pub fn price_perpetual_put(
    pair: &ModelPair,
    contract: &PutContract,
    a: f64,
    b: f64,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<MCEstimate> {
    contract.check()?;
    let query = GSQuery {
        u: contract.u - contract.beta,
        a,
        b,
        s: contract.s,
        penalty: PenaltyFn::put(contract.strike, contract.beta)?,
    };
    gerber_shiu(pair, &query, cfg, opts)
}

/// Put prices over a grid of boundaries, all on the same random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySearch {
    pub beta_star: f64,
    pub price_star: f64,
    pub curve: Vec<(f64, MCEstimate)>,
}

impl BoundarySearch {
    /// Rows `beta,price,stderr`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("beta,price,stderr\n");
        for (beta, e) in &self.curve {
            s.push_str(&format!("{beta:?},{:?},{:?}\n", e.value, e.stderr));
        }
        s
    }
}

#[allow(clippy::too_many_arguments)]
pub fn boundary_search(
    pair: &ModelPair,
    u: f64,
    strike: f64,
    s: f64,
    betas: &[f64],
    a: f64,
    b: f64,
    cfg: &McConfig,
    opts: &SimOptions,
) -> Result<BoundarySearch> {
    if betas.is_empty() {
        return Err(Error::precondition("empty β grid"));
    }
    let mut curve = Vec::with_capacity(betas.len());
    for &beta in betas {
        let contract = PutContract { strike, beta, s, u };
        curve.push((beta, price_perpetual_put(pair, &contract, a, b, cfg, opts)?));
    }
    let (beta_star, price_star) = curve
        .iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, (beta, e)| {
            if e.value > best.1 {
                (*beta, e.value)
            } else {
                best
            }
        });
    Ok(BoundarySearch {
        beta_star,
        price_star,
        curve,
    })
}
