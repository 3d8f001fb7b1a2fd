//! Finite sums `Σ c·t^k·e^{−μt}` and their exponential convolutions.

use crate::model::ClaimLaw;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Term {
    pub coef: f64,
    pub k: u32,
    pub mu: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct PolyExp {
    pub terms: Vec<Term>,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

impl PolyExp {
    /// Claim density.
    pub fn density(law: &ClaimLaw) -> Self {
        let terms = match law {
            ClaimLaw::Erlang { shape, rate } => vec![Term {
                coef: rate.powi(*shape as i32) / factorial(shape - 1),
                k: shape - 1,
                mu: *rate,
            }],
            ClaimLaw::Exponential { rate } => vec![Term { coef: *rate, k: 0, mu: *rate }],
            ClaimLaw::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| Term { coef: w * r, k: 0, mu: *r })
                .collect(),
        };
        PolyExp { terms }
    }

    /// Claim tail `P{X > t}`.
    pub fn tail(law: &ClaimLaw) -> Self {
        let terms = match law {
            ClaimLaw::Erlang { shape, rate } => (0..*shape)
                .map(|k| Term {
                    coef: rate.powi(k as i32) / factorial(k),
                    k,
                    mu: *rate,
                })
                .collect(),
            ClaimLaw::Exponential { rate } => vec![Term { coef: 1.0, k: 0, mu: *rate }],
            ClaimLaw::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| Term { coef: *w, k: 0, mu: *r })
                .collect(),
        };
        PolyExp { terms }
    }

    pub fn scale(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.coef *= s;
        }
        self
    }

    pub fn add(mut self, other: PolyExp) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|x| x.coef * t.powi(x.k as i32) * (-x.mu * t).exp())
            .sum()
    }

    /// `∫₀ᵘ e^{−r z} f(u − z + y) dz` for `u, y ≥ 0`.
    pub fn exp_convolution(&self, r: f64, u: f64, y: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        // with v = u − z the integrand is e^{−r(u−v)} (y+v)^k e^{−μ(y+v)}
        self.terms
            .iter()
            .map(|t| {
                let beta = r - t.mu;
                let (pre, kernel): (f64, fn(u32, f64, f64) -> f64) = if beta > 0.0 {
                    ((-t.mu * (u + y)).exp(), growing)
                } else {
                    ((-r * u - t.mu * y).exp(), decaying)
                };
                let mut s = 0.0;
                for j in 0..=t.k {
                    s += binomial(t.k, j) * y.powi((t.k - j) as i32) * kernel(j, beta.abs(), u);
                }
                t.coef * pre * s
            })
            .sum()
    }
}

/// `∫₀ᵘ v^j e^{−b v} dv` for `b ≥ 0`.
fn decaying(j: u32, b: f64, u: f64) -> f64 {
    let x = b * u;
    if x <= f64::from(j) + 1.0 {
        // x^{j+1} e^{−x} Σ x^n / ((j+1)(j+2)⋯(j+1+n)), all terms positive
        let mut term = 1.0 / f64::from(j + 1);
        let mut sum = term;
        let mut n = 1.0;
        while term > 1e-17 * sum {
            term *= x / (f64::from(j) + 1.0 + n);
            sum += term;
            n += 1.0;
        }
        u.powi(j as i32 + 1) * (-x).exp() * sum
    } else {
        let e = (-x).exp();
        let mut acc = (1.0 - e) / b;
        for i in 1..=j {
            acc = (f64::from(i) * acc - u.powi(i as i32) * e) / b;
        }
        acc
    }
}

/// `e^{−b u} ∫₀ᵘ v^j e^{b v} dv` for `b > 0`.
fn growing(j: u32, b: f64, u: f64) -> f64 {
    let x = b * u;
    if x <= 30.0 + 2.0 * f64::from(j) {
        // e^{−x} Σ b^n u^{j+n+1} / (n! (j+n+1))
        let mut pow = 1.0;
        let mut sum = 0.0;
        let mut n = 0u32;
        loop {
            let term = pow / f64::from(j + n + 1);
            sum += term;
            n += 1;
            pow *= x / f64::from(n);
            if f64::from(n) > x && term < 1e-17 * sum {
                break;
            }
        }
        u.powi(j as i32 + 1) * (-x).exp() * sum
    } else {
        let mut acc = (1.0 - (-x).exp()) / b;
        for i in 1..=j {
            acc = (u.powi(i as i32) - f64::from(i) * acc) / b;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use approx::assert_relative_eq;

    #[test]
    fn kernels_match_quadrature() {
        for &(j, b, u) in &[(0, 0.3, 0.5), (2, 5.0, 0.1), (3, 12.0, 2.0), (1, 80.0, 1.0), (4, 1e-9, 0.7)] {
            let d = integrate(|v: f64| v.powi(j as i32) * (-b * v).exp(), 0.0, u, 1e-15).unwrap();
            assert_relative_eq!(decaying(j, b, u), d, max_relative = 1e-12);
            let g = integrate(|v: f64| v.powi(j as i32) * (b * (v - u)).exp(), 0.0, u, 1e-15).unwrap();
            assert_relative_eq!(growing(j, b, u), g, max_relative = 1e-12);
        }
    }

    #[test]
    fn convolution_matches_quadrature() {
        let f = PolyExp::density(&ClaimLaw::Erlang { shape: 3, rate: 20.0 })
            .add(PolyExp::tail(&ClaimLaw::Erlang { shape: 3, rate: 20.0 }).scale(4.0));
        for &(r, u, y) in &[(8.0, 0.1, 0.0), (95.0 / 3.0, 0.3, 0.05), (20.0, 0.2, 1.0), (0.5, 2.0, 0.3)] {
            let q = integrate(|z| (-r * z).exp() * f.eval(u - z + y), 0.0, u, 1e-15).unwrap();
            assert_relative_eq!(f.exp_convolution(r, u, y), q, max_relative = 1e-11);
        }
    }

    #[test]
    fn tail_integrates_density() {
        let law = ClaimLaw::HyperExponential { weights: vec![0.3, 0.7], rates: vec![2.0, 9.0] };
        let (d, t) = (PolyExp::density(&law), PolyExp::tail(&law));
        let x = 0.4;
        let q = crate::quad::integrate_to_infinity(|s| d.eval(s), x, 1e-14).unwrap();
        assert_relative_eq!(t.eval(x), q, max_relative = 1e-11);
    }
}
