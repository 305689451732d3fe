//! Splits computed eigenvalues into approximations of the essential spectrum and isolated ones.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::arnoldi::{residual, EigenPair};
use super::dispersion::{distance_to_curves, DispersionCurve};
use super::linearization::LinearizedOperator;

/// Width of the boundary collar dropped from residual checks.
pub const RESIDUAL_COLLAR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumClass {
    EssentialApprox,
    Isolated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedEig {
    pub lambda: Complex64,
    /// Residual over nodes with `|x| <= R - 2`.
    pub residual: f64,
    pub distance: f64,
    pub class: SpectrumClass,
}

pub fn classify(lambda: Complex64, curves: &[DispersionCurve], tol_dist: f64) -> (f64, SpectrumClass) {
    let d = distance_to_curves(lambda, curves);
    (d, if d <= tol_dist { SpectrumClass::EssentialApprox } else { SpectrumClass::Isolated })
}

/// Labels each pair and attaches its interior residual on `op`.
pub fn classify_and_residual(
    op: &LinearizedOperator,
    pairs: &[EigenPair],
    curves: &[DispersionCurve],
    tol_dist: f64,
) -> Vec<ClassifiedEig> {
    let mask = op.interior_mask(RESIDUAL_COLLAR);
    pairs
        .par_iter()
        .map(|p| {
            let (distance, class) = classify(p.lambda, curves, tol_dist);
            let r = if p.vector.len() == op.dim() { residual(&op.matrix, p.lambda, &p.vector, Some(&mask)) } else { p.residual };
            ClassifiedEig { lambda: p.lambda, residual: r, distance, class }
        })
        .collect()
}
