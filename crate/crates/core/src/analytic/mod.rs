//! Closed-form laws for single-state rational models and matrix fixed points.

mod matrix;
pub(crate) mod polyexp;
mod scalar;

pub use matrix::{atom_residuals, fixed_point_atoms, passage_probability_down, resolvent, MatrixAtoms};
pub use scalar::{
    exit_low, exit_low_curve, lundberg_roots, modified_ruin, overshoot_law, renewal_measure, sup_law,
    ExitLowCurve, ExpMixtureLaw, LundbergRoots, OvershootKernel, OvershootLaw, RenewalMeasure,
};

/// Rows `u,value` for a sampled curve.
pub fn law_curve_csv<F: Fn(f64) -> f64>(grid: &[f64], f: F) -> String {
    let mut s = String::from("u,value\n");
    for &u in grid {
        s.push_str(&format!("{u:?},{:?}\n", f(u)));
    }
    s
}
