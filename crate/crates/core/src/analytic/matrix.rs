//! Matrix atoms `p₋(0)`, `p⁻(0)`, the resolvent and downward passage.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{ChainSpec, ValidatedModel};

const DAMPING: f64 = 0.5;
const MAX_ITER: usize = 100_000;
const TOL: f64 = 1e-10;

/// Solutions of the two fixed-point equations at `s = 0`.
///
/// Under negative drift with more than one state, `p₋(0)` has zero row sums
/// and `π p⁻(0) = 0`, so individual entries may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixAtoms {
    /// `p₋(0)`
    pub p_lower: DMatrix<f64>,
    /// `p⁻(0)`
    pub p_upper: DMatrix<f64>,
    /// `R₋(0) = C p₋(0)`
    pub r_lower: DMatrix<f64>,
    /// `R⁻(0) = p⁻(0) C`
    pub r_upper: DMatrix<f64>,
    pub iterations: (usize, usize),
    pub residuals: (f64, f64),
}

struct Setup<'a> {
    model: &'a ValidatedModel,
    c: DMatrix<f64>,
    /// `Λ F₀(0) = diag(λ1)`
    lf0: DMatrix<f64>,
    lq: DMatrix<f64>,
    lq_inv: DMatrix<f64>,
}

impl<'a> Setup<'a> {
    fn new(model: &'a ValidatedModel) -> Result<Self> {
        let lq = model.lambda_matrix() - model.generator();
        let lq_inv = lq.clone().try_inverse().ok_or_else(|| Error::Singular {
            what: "Λ − Q".into(),
            condition: f64::INFINITY,
        })?;
        Ok(Setup {
            model,
            c: model.premium_matrix(),
            lf0: model.lambda_matrix() * model.f0_matrix(),
            lq,
            lq_inv,
        })
    }

    /// Row `k` is `λ2ₖ · Xₖ · Lₖ(C (I − X))`.
    fn jump_lower(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = x.nrows();
        let arg = &self.c * (DMatrix::identity(m, m) - x);
        let mut out = DMatrix::zeros(m, m);
        for k in 0..m {
            let s = self.model.state(k);
            if s.lambda2 == 0.0 {
                continue;
            }
            let row = x.row(k) * s.claim.laplace_matrix(&arg)? * s.lambda2;
            out.set_row(k, &row);
        }
        Ok(out)
    }

    /// Column `r` is `λ2ᵣ · Lᵣ((I − Y) C) · Yeᵣ`.
    fn jump_upper(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = y.nrows();
        let arg = (DMatrix::identity(m, m) - y) * &self.c;
        let mut out = DMatrix::zeros(m, m);
        for r in 0..m {
            let s = self.model.state(r);
            if s.lambda2 == 0.0 {
                continue;
            }
            let col = s.claim.laplace_matrix(&arg)? * y.column(r) * s.lambda2;
            out.set_column(r, &col);
        }
        Ok(out)
    }

    fn residual_lower(&self, x: &DMatrix<f64>) -> Result<f64> {
        Ok((&self.lq * x - &self.lf0 - self.jump_lower(x)?).amax())
    }

    fn residual_upper(&self, y: &DMatrix<f64>) -> Result<f64> {
        Ok((y * &self.lq - &self.lf0 - self.jump_upper(y)?).amax())
    }
}

/// Damped monotone iteration from `X = 0`, i.e. `p = I`.
fn iterate<F, R>(m: usize, step: F, residual: R) -> Result<(DMatrix<f64>, usize, f64)>
where
    F: Fn(&DMatrix<f64>) -> Result<DMatrix<f64>>,
    R: Fn(&DMatrix<f64>) -> Result<f64>,
{
    let mut x = DMatrix::<f64>::zeros(m, m);
    let mut res = residual(&x)?;
    let mut it = 0;
    while res > TOL {
        if it == MAX_ITER {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        x = &x * (1.0 - DAMPING) + step(&x)? * DAMPING;
        res = residual(&x)?;
        it += 1;
        if !res.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
    }
    Ok((x, it, res))
}

pub fn fixed_point_atoms(model: &ValidatedModel) -> Result<MatrixAtoms> {
    let m = model.m();
    let setup = Setup::new(model)?;
    let (x, it_x, res_x) = iterate(
        m,
        |x| Ok(&setup.lq_inv * (&setup.lf0 + setup.jump_lower(x)?)),
        |x| setup.residual_lower(x),
    )?;
    let (y, it_y, res_y) = iterate(
        m,
        |y| Ok((&setup.lf0 + setup.jump_upper(y)?) * &setup.lq_inv),
        |y| setup.residual_upper(y),
    )?;
    let id = DMatrix::<f64>::identity(m, m);
    let p_lower = &id - x;
    let p_upper = &id - y;
    Ok(MatrixAtoms {
        r_lower: &setup.c * &p_lower,
        r_upper: &p_upper * &setup.c,
        p_lower,
        p_upper,
        iterations: (it_x, it_y),
        residuals: (res_x, res_y),
    })
}

/// Re-substitution residuals of both fixed-point equations at given atoms.
pub fn atom_residuals(model: &ValidatedModel, p_lower: &DMatrix<f64>, p_upper: &DMatrix<f64>) -> Result<(f64, f64)> {
    let setup = Setup::new(model)?;
    let id = DMatrix::<f64>::identity(model.m(), model.m());
    Ok((
        setup.residual_lower(&(&id - p_lower))?,
        setup.residual_upper(&(&id - p_upper))?,
    ))
}

/// `P_s = s (sI − Q)⁻¹`
pub fn resolvent(chain: &ChainSpec, s: f64) -> Result<DMatrix<f64>> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::precondition(format!("resolvent needs finite s > 0, got {s}")));
    }
    let m = chain.m;
    let a = DMatrix::<f64>::identity(m, m) * s - &chain.q;
    a.try_inverse().map(|inv| inv * s).ok_or_else(|| Error::Singular {
        what: "sI − Q".into(),
        condition: f64::INFINITY,
    })
}

/// `q₋(0) e^{R₋(0) x}` for `x ≤ 0`, with `q₋(0) = I − p₋(0)`.
pub fn passage_probability_down(model: &ValidatedModel, x: f64) -> Result<DMatrix<f64>> {
    if !(x <= 0.0) {
        return Err(Error::precondition(format!("level x = {x} must be <= 0")));
    }
    let atoms = fixed_point_atoms(model)?;
    let m = model.m();
    let q = DMatrix::<f64>::identity(m, m) - &atoms.p_lower;
    Ok(q * (&atoms.r_lower * x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClaimLaw, ModelSpec, StateParams};
    use approx::assert_abs_diff_eq;

    fn example(l1: f64, l2: f64) -> ValidatedModel {
        ModelSpec::scalar(l1, l2, 1.0, ClaimLaw::Erlang { shape: 2, rate: 20.0 })
            .validate()
            .unwrap()
    }

    #[test]
    fn scalar_negative_drift_atoms_vanish() {
        let a = fixed_point_atoms(&example(2.0, 1.0)).unwrap();
        assert!(a.p_upper[(0, 0)].abs() <= 1e-10);
        assert!(a.p_lower[(0, 0)].abs() <= 1e-10);
        assert_abs_diff_eq!(passage_probability_down(&example(2.0, 1.0), -3.0).unwrap()[(0, 0)], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn no_premiums_gives_identity() {
        let a = fixed_point_atoms(&example(0.0, 1.0)).unwrap();
        assert_eq!(a.p_lower, DMatrix::identity(1, 1));
    }

    #[test]
    fn positive_drift_scalar_matches_adjustment_root() {
        // Exp(1) premiums at rate 1, Exp(5) claims at rate 10: drift 1
        let m = ModelSpec::scalar(1.0, 10.0, 1.0, ClaimLaw::Exponential { rate: 5.0 })
            .validate()
            .unwrap();
        let rho = m.downward_adjustment_coefficient().unwrap().unwrap();
        let a = fixed_point_atoms(&m).unwrap();
        assert_abs_diff_eq!(a.r_lower[(0, 0)], rho, epsilon = 1e-8);
        let p = passage_probability_down(&m, -0.5).unwrap()[(0, 0)];
        assert_abs_diff_eq!(p, (1.0 - rho) * (-0.5 * rho).exp(), epsilon = 1e-8);
    }

    #[test]
    fn two_state_residuals() {
        let spec = ModelSpec {
            chain: ChainSpec::new(DMatrix::from_row_slice(2, 2, &[-0.7, 0.7, 1.3, -1.3])),
            states: vec![
                StateParams { lambda1: 2.0, lambda2: 1.0, c: 1.0, claim: ClaimLaw::Erlang { shape: 2, rate: 20.0 } },
                StateParams { lambda1: 0.5, lambda2: 3.0, c: 2.0, claim: ClaimLaw::Exponential { rate: 4.0 } },
            ],
        };
        let m = spec.validate().unwrap();
        let a = fixed_point_atoms(&m).unwrap();
        let (r1, r2) = atom_residuals(&m, &a.p_lower, &a.p_upper).unwrap();
        assert!(r1 <= 1e-10 && r2 <= 1e-10, "{r1} {r2}");
        // negative drift: p₋(0)·1 = 0 and π·p⁻(0) = 0
        let pi = m.stationary_distribution().unwrap();
        for k in 0..2 {
            assert!(a.p_lower.row(k).sum().abs() <= 1e-9);
            assert!((pi[0] * a.p_upper[(0, k)] + pi[1] * a.p_upper[(1, k)]).abs() <= 1e-9);
        }
        let rho = a.p_lower.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(rho <= 1.0);
    }

    #[test]
    fn resolvent_limits() {
        assert_abs_diff_eq!(resolvent(&ChainSpec::single_state(), 2.0).unwrap()[(0, 0)], 1.0, epsilon = 1e-15);
        let chain = ChainSpec::new(DMatrix::from_row_slice(3, 3, &[-1.0, 0.4, 0.6, 0.2, -0.5, 0.3, 0.9, 0.1, -1.0]));
        let p = resolvent(&chain, 0.7).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(p.row(i).sum(), 1.0, epsilon = 1e-12);
        }
        let big = resolvent(&chain, 1e6).unwrap();
        assert!((big - DMatrix::<f64>::identity(3, 3)).amax() <= 1e-5);
        assert!(resolvent(&chain, 0.0).is_err());
    }
}
