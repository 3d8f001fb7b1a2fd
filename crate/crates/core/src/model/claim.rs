use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::poly::Poly;

/// Claim-size law of one chain state. All members have rational moment
/// generating functions, which keeps the cumulant rational.
#[derive(Debug, Clone, PartialEq)]
pub enum ClaimLaw {
    /// Sum of `shape` independent exponentials with rate `rate`.
    Erlang { shape: u32, rate: f64 },
    Exponential { rate: f64 },
    /// Mixture of exponentials: component `i` has probability `weights[i]`
    /// and rate `rates[i]`.
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
}

impl ClaimLaw {
    pub(crate) fn check(&self) -> std::result::Result<(), String> {
        let ok_rate = |r: f64| r.is_finite() && r > 0.0;
        match self {
            ClaimLaw::Erlang { shape, rate } => {
                if *shape < 1 {
                    return Err(format!("erlang shape must be >= 1, got {shape}"));
                }
                if !ok_rate(*rate) {
                    return Err(format!("erlang rate must be positive, got {rate}"));
                }
            }
            ClaimLaw::Exponential { rate } => {
                if !ok_rate(*rate) {
                    return Err(format!("exponential rate must be positive, got {rate}"));
                }
            }
            ClaimLaw::HyperExponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(format!(
                        "hyperexponential needs equally many weights and rates (got {} and {})",
                        weights.len(),
                        rates.len()
                    ));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err("hyperexponential weights must be non-negative".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(format!("hyperexponential weights sum to {total}, not 1"));
                }
                if let Some(r) = rates.iter().find(|r| !ok_rate(**r)) {
                    return Err(format!("hyperexponential rate must be positive, got {r}"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            ClaimLaw::Erlang { shape, rate } => *shape as f64 / rate,
            ClaimLaw::Exponential { rate } => 1.0 / rate,
            ClaimLaw::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w / r).sum()
            }
        }
    }

    /// Distinct poles of the moment generating function with their multiplicity.
    pub fn poles(&self) -> Vec<(f64, u32)> {
        match self {
            ClaimLaw::Erlang { shape, rate } => vec![(*rate, *shape)],
            ClaimLaw::Exponential { rate } => vec![(*rate, 1)],
            ClaimLaw::HyperExponential { weights, rates } => {
                let mut out: Vec<(f64, u32)> = Vec::new();
                for (w, r) in weights.iter().zip(rates) {
                    if *w > 0.0 && !out.iter().any(|(p, _)| p == r) {
                        out.push((*r, 1));
                    }
                }
                out.sort_by(|a, b| a.0.total_cmp(&b.0));
                out
            }
        }
    }

    /// Right end of the convergence strip of `E e^{αX}`.
    pub fn abscissa(&self) -> f64 {
        self.poles()
            .iter()
            .map(|p| p.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Rational continuation of `E e^{αX}`; `None` exactly at a pole.
    pub fn mgf(&self, alpha: f64) -> Option<f64> {
        let at_pole = |r: f64| (r - alpha).abs() <= 1e-12 * r.max(1.0);
        match self {
            ClaimLaw::Erlang { shape, rate } => {
                (!at_pole(*rate)).then(|| (rate / (rate - alpha)).powi(*shape as i32))
            }
            ClaimLaw::Exponential { rate } => (!at_pole(*rate)).then(|| rate / (rate - alpha)),
            ClaimLaw::HyperExponential { weights, rates } => {
                let mut acc = 0.0;
                for (w, r) in weights.iter().zip(rates) {
                    if *w == 0.0 {
                        continue;
                    }
                    if at_pole(*r) {
                        return None;
                    }
                    acc += w * r / (r - alpha);
                }
                Some(acc)
            }
        }
    }

    /// `(N, D)` with `E e^{αX} = N(α)/D(α)` and `D(α) = Π (μ_j − α)^{k_j}`.
    pub fn rational_mgf(&self) -> (Poly, Poly) {
        let poles = self.poles();
        let den = poles
            .iter()
            .fold(Poly::constant(1.0), |acc, &(r, k)| &acc * &Poly::linear(r, -1.0).pow(k));
        let num = match self {
            ClaimLaw::Erlang { shape, rate } => Poly::constant(rate.powi(*shape as i32)),
            ClaimLaw::Exponential { rate } => Poly::constant(*rate),
            ClaimLaw::HyperExponential { weights, rates } => {
                let mut num = Poly::constant(0.0);
                for &(r, _) in &poles {
                    let w: f64 = weights
                        .iter()
                        .zip(rates)
                        .filter(|(_, rr)| **rr == r)
                        .map(|(w, _)| *w)
                        .sum();
                    let others = poles
                        .iter()
                        .filter(|p| p.0 != r)
                        .fold(Poly::constant(1.0), |acc, &(q, _)| &acc * &Poly::linear(q, -1.0));
                    num = &num + &others.scale(w * r);
                }
                num
            }
        };
        (num, den)
    }

    pub fn density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            ClaimLaw::Erlang { shape, rate } => {
                let k = *shape as i32;
                rate.powi(k) * t.powi(k - 1) * (-rate * t).exp() / factorial(*shape - 1)
            }
            ClaimLaw::Exponential { rate } => rate * (-rate * t).exp(),
            ClaimLaw::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * r * (-r * t).exp())
                .sum(),
        }
    }

    /// `P{X > t}`
    pub fn tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self {
            ClaimLaw::Erlang { shape, rate } => {
                let x = rate * t;
                let mut term = 1.0;
                let mut acc = 1.0;
                for j in 1..*shape {
                    term *= x / j as f64;
                    acc += term;
                }
                acc * (-x).exp()
            }
            ClaimLaw::Exponential { rate } => (-rate * t).exp(),
            ClaimLaw::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * (-r * t).exp())
                .sum(),
        }
    }

    /// `∫ f(z) e^{−M z} dz` for a square matrix argument.
    pub fn laplace_matrix(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = m.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let resolvent = |rate: f64| -> Result<DMatrix<f64>> {
            (&id * rate + m).try_inverse().ok_or_else(|| Error::Singular {
                what: "claim Laplace transform".into(),
                condition: f64::INFINITY,
            })
        };
        match self {
            ClaimLaw::Erlang { shape, rate } => {
                let base = resolvent(*rate)? * *rate;
                let mut out = id.clone();
                for _ in 0..*shape {
                    out = &out * &base;
                }
                Ok(out)
            }
            ClaimLaw::Exponential { rate } => Ok(resolvent(*rate)? * *rate),
            ClaimLaw::HyperExponential { weights, rates } => {
                let mut out = DMatrix::zeros(n, n);
                for (w, r) in weights.iter().zip(rates) {
                    if *w > 0.0 {
                        out += resolvent(*r)? * (w * r);
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ClaimLaw::Erlang { shape, rate } => {
                let mut s = 0.0;
                for _ in 0..*shape {
                    let e: f64 = rng.sample(Exp1);
                    s += e;
                }
                s / rate
            }
            ClaimLaw::Exponential { rate } => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
            ClaimLaw::HyperExponential { weights, rates } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = rates.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                let e: f64 = rng.sample(Exp1);
                e / rates[pick]
            }
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erlang_moments_and_mgf() {
        let law = ClaimLaw::Erlang { shape: 2, rate: 20.0 };
        assert!((law.mean() - 0.1).abs() < 1e-15);
        assert!((law.mgf(8.0).unwrap() - (20.0f64 / 12.0).powi(2)).abs() < 1e-12);
        assert!(law.mgf(20.0).is_none());
        let (n, d) = law.rational_mgf();
        for a in [-3.0, 0.0, 5.0, 31.0] {
            assert!((n.eval(a) / d.eval(a) - law.mgf(a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn hyperexp_rational_form_matches_mgf() {
        let law = ClaimLaw::HyperExponential {
            weights: vec![0.25, 0.75],
            rates: vec![2.0, 7.0],
        };
        let (n, d) = law.rational_mgf();
        assert_eq!(d.degree(), 2);
        for a in [-1.0, 0.0, 1.0, 3.0, 9.0] {
            assert!((n.eval(a) / d.eval(a) - law.mgf(a).unwrap()).abs() < 1e-12);
        }
        assert!((law.tail(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_matrix_scalar_agrees_with_mgf() {
        let law = ClaimLaw::Erlang { shape: 3, rate: 4.0 };
        let m = DMatrix::from_element(1, 1, 1.5);
        let l = law.laplace_matrix(&m).unwrap();
        assert!((l[(0, 0)] - law.mgf(-1.5).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn invalid_laws_rejected() {
        assert!(ClaimLaw::Exponential { rate: 0.0 }.check().is_err());
        assert!(ClaimLaw::Erlang { shape: 0, rate: 1.0 }.check().is_err());
        let bad = ClaimLaw::HyperExponential {
            weights: vec![0.5, 0.6],
            rates: vec![1.0, 2.0],
        };
        assert!(bad.check().is_err());
    }
}
