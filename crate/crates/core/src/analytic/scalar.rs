//! Closed-form laws for single-state models with rational claims.

use nalgebra::Complex;

use super::polyexp::PolyExp;
use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::poly::Poly;
use crate::quad;
use crate::simulate::ModelPair;

const QUAD_TOL: f64 = 1e-13;

fn require_scalar(model: &ValidatedModel) -> Result<()> {
    if !model.is_scalar() {
        return Err(Error::Unsupported(format!(
            "closed-form laws need a single-state model, got m = {}",
            model.m()
        )));
    }
    Ok(())
}

fn require_negative_drift(model: &ValidatedModel) -> Result<f64> {
    let d = model.drift()?.stationary_drift;
    if !(d < 0.0) {
        return Err(Error::precondition(format!("drift {d} is not negative")));
    }
    Ok(d)
}

/// Positive roots of the Lundberg equation `ψ(α) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LundbergRoots {
    /// Sorted ascending, all simple and strictly positive.
    pub positive: Vec<f64>,
    /// Every root of the cleared polynomial, zero root removed.
    pub all: Vec<Complex<f64>>,
}

/// Clears `ψ(α)` to `−λ1·α·D + λ2·(c + α)(N − D)` and drops the root at 0.
fn cleared_polynomial(model: &ValidatedModel) -> Poly {
    let s = model.state(0);
    let (num, den) = s.claim.rational_mgf();
    let jump = (&num - &den).scale(s.lambda2);
    let p = if s.lambda1 > 0.0 {
        let premium = &Poly::linear(0.0, -s.lambda1) * &den;
        &premium + &(&Poly::linear(s.c, 1.0) * &jump)
    } else {
        jump
    };
    let mut c = p.coeffs().to_vec();
    c[0] = 0.0;
    Poly::new(c).deflate_zero()
}

pub fn lundberg_roots(model: &ValidatedModel) -> Result<LundbergRoots> {
    require_scalar(model)?;
    if model.state(0).lambda2 == 0.0 {
        return Ok(LundbergRoots {
            positive: Vec::new(),
            all: Vec::new(),
        });
    }
    let p = cleared_polynomial(model);
    let all = p.roots();
    let scale = all.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut positive = Vec::new();
    for z in &all {
        if z.re <= 1e-12 * scale {
            continue;
        }
        if z.im.abs() > 1e-9 * z.norm().max(1.0) {
            return Err(Error::Unsupported(format!(
                "complex Lundberg root {z} in the right half-plane"
            )));
        }
        positive.push(z.re);
    }
    positive.sort_by(f64::total_cmp);
    for w in positive.windows(2) {
        if (w[1] - w[0]).abs() <= 1e-7 * w[1].max(1.0) {
            return Err(Error::Unsupported(format!("multiple Lundberg root near {}", w[0])));
        }
    }
    Ok(LundbergRoots { positive, all })
}

/// Law on `[0, ∞)` with an atom at 0 and tail `Σ aᵢ e^{−rᵢ u}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMixtureLaw {
    pub atom: f64,
    /// `(weight, rate)` pairs.
    pub terms: Vec<(f64, f64)>,
}

impl ExpMixtureLaw {
    /// `P{X ≥ u}` for `u > 0`; 1 for `u ≤ 0`.
    pub fn tail(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 1.0;
        }
        self.terms.iter().map(|(a, r)| a * (-r * u).exp()).sum()
    }

    /// `P{X < u}`
    pub fn cdf(&self, u: f64) -> f64 {
        1.0 - self.tail(u)
    }

    /// Density of the continuous part.
    pub fn density(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.terms.iter().map(|(a, r)| a * r * (-r * u).exp()).sum()
    }

    /// `∫₀^∞ c e^{−cx} P{X < b + x} dx` for `b ≥ 0`.
    pub fn exp_weighted_cdf(&self, b: f64, c: f64) -> f64 {
        1.0 - self
            .terms
            .iter()
            .map(|(a, r)| a * (-r * b).exp() * c / (c + r))
            .sum::<f64>()
    }

    /// Rows `atom,weight,rate`: the atom row has empty weight and rate.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("atom,weight,rate\n");
        s.push_str(&format!("{:?},,\n", self.atom));
        for (a, r) in &self.terms {
            s.push_str(&format!(",{a:?},{r:?}\n"));
        }
        s
    }
}

/// Law of the all-time supremum `ξ⁺`, from the rational Wiener–Hopf factor
/// `E e^{αξ⁺} = Π rⱼ/(rⱼ − α) · D(α)/D(0)`.
pub fn sup_law(model: &ValidatedModel) -> Result<ExpMixtureLaw> {
    require_scalar(model)?;
    require_negative_drift(model)?;
    let s = model.state(0);
    if s.lambda2 == 0.0 {
        return Ok(ExpMixtureLaw {
            atom: 1.0,
            terms: Vec::new(),
        });
    }
    let roots = lundberg_roots(model)?.positive;
    let (_, den) = s.claim.rational_mgf();
    if roots.len() != den.degree() {
        return Err(Error::Unsupported(format!(
            "{} positive Lundberg roots for {} claim poles",
            roots.len(),
            den.degree()
        )));
    }
    let d0 = den.eval(0.0);
    let prod: f64 = roots.iter().product();
    let terms: Vec<(f64, f64)> = roots
        .iter()
        .enumerate()
        .map(|(i, &ri)| {
            let others: f64 = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &rj)| rj - ri)
                .product();
            (prod / (ri * others) * den.eval(ri) / d0, ri)
        })
        .collect();
    let atom = 1.0 - terms.iter().map(|t| t.0).sum::<f64>();
    Ok(ExpMixtureLaw { atom, terms })
}

/// `B_b(u) = (1 − Σ nᵢ e^{−rᵢ u}) / (1 − Σ dᵢ e^{−rᵢ b})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitLowCurve {
    pub b: f64,
    /// `(nᵢ, rᵢ)`
    pub numerator: Vec<(f64, f64)>,
    /// `(dᵢ, rᵢ)`
    pub denominator: Vec<(f64, f64)>,
}

impl ExitLowCurve {
    pub fn denominator_value(&self) -> f64 {
        1.0 - self
            .denominator
            .iter()
            .map(|(d, r)| d * (-r * self.b).exp())
            .sum::<f64>()
    }

    pub fn eval(&self, u: f64) -> f64 {
        let num = 1.0 - self.numerator.iter().map(|(n, r)| n * (-r * u).exp()).sum::<f64>();
        num / self.denominator_value()
    }
}

/// Curve `u ↦ B_b(u)` for fixed `b > 0`.
pub fn exit_low_curve(model: &ValidatedModel, b: f64) -> Result<ExitLowCurve> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::precondition(format!("b = {b} must be finite and > 0")));
    }
    let law = sup_law(model)?;
    let c = model.state(0).c;
    let curve = ExitLowCurve {
        b,
        numerator: law.terms.clone(),
        denominator: law.terms.iter().map(|&(a, r)| (a * c / (c + r), r)).collect(),
    };
    let den = curve.denominator_value();
    if !(den > 1e-14) {
        return Err(Error::Singular {
            what: "exit-low denominator".into(),
            condition: 1.0 / den.abs(),
        });
    }
    Ok(curve)
}

/// `B_b(u) = P{ξ(τ(u,b)) ≤ u − b}` for `0 < u ≤ b`.
///
/// At `u = b` the start lies on the closed lower boundary and the value is 1;
/// `curve.eval(b)` gives the left limit instead.
pub fn exit_low(model: &ValidatedModel, u: f64, b: f64) -> Result<(f64, ExitLowCurve)> {
    if !(u > 0.0 && u <= b) {
        return Err(Error::precondition(format!("need 0 < u <= b, got u = {u}, b = {b}")));
    }
    let curve = exit_low_curve(model, b)?;
    let p = if u == b { 1.0 } else { curve.eval(u) };
    Ok((p, curve))
}

/// Renewal measure of the ascending ladder heights: an atom at `0⁺` and
/// density `scale · dP₊/dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalMeasure {
    pub atom: f64,
    pub scale: f64,
    pub sup_law: ExpMixtureLaw,
}

impl RenewalMeasure {
    pub fn density(&self, x: f64) -> f64 {
        self.scale * self.sup_law.density(x)
    }

    /// Mass of the absolutely continuous part.
    pub fn continuous_mass(&self) -> f64 {
        self.scale * (1.0 - self.sup_law.atom)
    }
}

pub fn renewal_measure(model: &ValidatedModel) -> Result<RenewalMeasure> {
    let drift = require_negative_drift(model)?;
    let s = model.state(0);
    Ok(RenewalMeasure {
        atom: 1.0 / (s.lambda1 + s.lambda2),
        scale: 1.0 / (s.c * drift.abs()),
        sup_law: sup_law(model)?,
    })
}

/// Overshoot density at any level, built once per model.
#[derive(Debug, Clone, PartialEq)]
pub struct OvershootKernel {
    atom: f64,
    /// `(scale·aᵢ·rᵢ, rᵢ)`
    weights: Vec<(f64, f64)>,
    /// `h(t) = λ2 f(t) + c λ2 P{X > t}`
    h: PolyExp,
}

impl OvershootKernel {
    pub fn new(model: &ValidatedModel) -> Result<Self> {
        let m = renewal_measure(model)?;
        let s = model.state(0);
        let h = PolyExp::density(&s.claim)
            .scale(s.lambda2)
            .add(PolyExp::tail(&s.claim).scale(s.c * s.lambda2));
        Ok(OvershootKernel {
            atom: m.atom,
            weights: m.sup_law.terms.iter().map(|&(a, r)| (m.scale * a * r, r)).collect(),
            h,
        })
    }

    /// Density of `g(dy/u)` at `y > 0` for level `u ≥ 0`.
    pub fn density(&self, u: f64, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        let mut v = self.atom * self.h.eval(u + y);
        for &(w, r) in &self.weights {
            v += w * self.h.exp_convolution(r, u, y);
        }
        v
    }
}

/// `g(dy/u)`, the defective law of the overshoot `γ⁺(u)` on `{τ⁺(u) < ∞}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OvershootLaw {
    pub u: f64,
    kernel: OvershootKernel,
}

impl OvershootLaw {
    pub fn density(&self, y: f64) -> f64 {
        self.kernel.density(self.u, y)
    }

    /// `P{γ⁺(u) ≤ y, τ⁺(u) < ∞}`
    pub fn cdf(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        quad::integrate(|t| self.density(t), 0.0, y, QUAD_TOL)
    }

    pub fn total_mass(&self) -> Result<f64> {
        quad::integrate_to_infinity(|t| self.density(t), 0.0, QUAD_TOL)
    }
}

pub fn overshoot_law(model: &ValidatedModel, u: f64) -> Result<OvershootLaw> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::precondition(format!("level u = {u} must be finite and >= 0")));
    }
    Ok(OvershootLaw {
        u,
        kernel: OvershootKernel::new(model)?,
    })
}

/// Ruin probability `Φ₀^{a,b}(u)` of the two-regime modified process.
pub fn modified_ruin(model: &ValidatedModel, star: &ValidatedModel, u: f64, a: f64, b: f64) -> Result<f64> {
    require_scalar(model)?;
    ModelPair::new(model.clone(), star.clone())?;
    if !(a > 0.0 && a <= b && b.is_finite()) {
        return Err(Error::precondition(format!("need 0 < a <= b, got a = {a}, b = {b}")));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::precondition(format!("level u = {u} must be finite and > 0")));
    }
    let c = model.state(0).c;
    let curve = exit_low_curve(model, b)?;
    let star_law = sup_law(star)?;
    let kernel = OvershootKernel::new(star)?;

    // restart after a lower exit: reduced regime, b − a + θ below u − a
    let p_star = star_law.exp_weighted_cdf(b - a, c);
    let inner = |z: f64| {
        quad::integrate_to_infinity(|th| c * (-c * th).exp() * kernel.density(b - a + th, z), 0.0, QUAD_TOL)
    };
    let j = quad::integrate(
        |z| match inner(z) {
            Ok(v) => curve.eval(a - z) * v,
            Err(_) => f64::NAN,
        },
        0.0,
        a,
        QUAD_TOL,
    )?;
    if !(j < 1.0) {
        return Err(Error::Singular {
            what: "modified-ruin renewal factor".into(),
            condition: 1.0 / (1.0 - j).abs(),
        });
    }
    let survive = p_star / (1.0 - j);
    let phi = if u <= b {
        1.0 - curve.eval(u) * survive
    } else {
        let x = u - a;
        let back = quad::integrate(|z| kernel.density(x, z) * curve.eval(a - z), 0.0, a, QUAD_TOL)?;
        star_law.tail(x) - back * survive
    };
    Ok(phi)
}
