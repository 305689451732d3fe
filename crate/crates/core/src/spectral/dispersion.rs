//! Dispersion relation of the far field:
//! `det(lambda I + omega^2 A - Df(v_inf) + i (n . sigma) I) = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::dense::{self, CMat};
use crate::model::{QcglParams, ReactionModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionCurve {
    /// Mode multi-index, one entry per `sigma_l`.
    pub n: Vec<i64>,
    /// `(omega, lambda)` samples; `N` branches per omega.
    pub points: Vec<(f64, Complex64)>,
}

impl DispersionCurve {
    pub fn shift(&self, sigma: &[f64]) -> f64 {
        self.n.iter().zip(sigma).map(|(n, s)| *n as f64 * s).sum()
    }
}

fn modes(len: usize, range: (i64, i64)) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|m| {
                (range.0..=range.1).map(move |k| {
                    let mut v = m.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// Curves `lambda in sigma(Df(v_inf) - omega^2 A) - i (n . sigma)` for all modes in `n_range`.
pub fn dispersion_essential(
    model: &dyn ReactionModel,
    sigma: &[f64],
    omega_grid: &[f64],
    n_range: (i64, i64),
) -> Result<Vec<DispersionCurve>> {
    if n_range.0 > n_range.1 || sigma.is_empty() {
        return Err(Error::InvalidArgument("need a nonempty mode range and at least one sigma".into()));
    }
    let a = model.diffusion();
    let df = model.df(&model.v_inf());
    let branches: Vec<Vec<Complex64>> = omega_grid
        .iter()
        .map(|&w| {
            let mut ev = dense::real_eigenvalues(&(&df - &a * (w * w)));
            ev.sort_by(|x, y| y.im.total_cmp(&x.im).then(x.re.total_cmp(&y.re)));
            ev
        })
        .collect();
    Ok(modes(sigma.len(), n_range)
        .into_iter()
        .map(|n| {
            let s: f64 = n.iter().zip(sigma).map(|(k, s)| *k as f64 * s).sum();
            let points = omega_grid
                .iter()
                .zip(&branches)
                .flat_map(|(&w, ev)| ev.iter().map(move |l| (w, l - Complex64::new(0.0, s))))
                .collect();
            DispersionCurve { n, points }
        })
        .collect())
}

/// Closed form for the Ginzburg-Landau far field `Df(0) = M(delta)`, `A = M(alpha)`:
/// `lambda = delta - omega^2 alpha` and its conjugate, shifted by `-i n sigma_1`.
pub fn qcgl_closed_form(params: &QcglParams, omega: f64, n: i64, sigma1: f64) -> [Complex64; 2] {
    let shift = Complex64::new(0.0, n as f64 * sigma1);
    let l = params.delta - params.alpha * (omega * omega);
    [l - shift, l.conj() - shift]
}

/// `|det(lambda I + omega^2 A - Df(v_inf) + i s I)|`.
pub fn determinant_residual(model: &dyn ReactionModel, lambda: Complex64, omega: f64, shift: f64) -> f64 {
    let a = dense::to_complex(&model.diffusion());
    let df = dense::to_complex(&model.df(&model.v_inf()));
    let n = a.nrows();
    let m: CMat = CMat::identity(n, n) * (lambda + Complex64::new(0.0, shift)) + a * Complex64::new(omega * omega, 0.0) - df;
    m.determinant().norm()
}

/// Distance from `z` to the polyline through `pts`.
fn polyline_distance(z: Complex64, pts: &[Complex64]) -> f64 {
    if pts.len() == 1 {
        return (z - pts[0]).norm();
    }
    pts.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let len2 = d.norm_sqr();
            let t = if len2 > 0.0 { (((z - w[0]) * d.conj()).re / len2).clamp(0.0, 1.0) } else { 0.0 };
            (z - (w[0] + d * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest distance from `z` to any branch of any curve.
pub fn distance_to_curves(z: Complex64, curves: &[DispersionCurve]) -> f64 {
    let mut best = f64::INFINITY;
    for c in curves {
        let omegas: Vec<f64> = {
            let mut o: Vec<f64> = c.points.iter().map(|p| p.0).collect();
            o.dedup();
            o
        };
        let per = c.points.len() / omegas.len().max(1);
        for b in 0..per {
            let branch: Vec<Complex64> = c.points.iter().skip(b).step_by(per.max(1)).map(|p| p.1).collect();
            best = best.min(polyline_distance(z, &branch));
        }
    }
    best
}

/// Largest real part over all curve points.
pub fn max_real_part(curves: &[DispersionCurve]) -> f64 {
    curves.iter().flat_map(|c| c.points.iter().map(|p| p.1.re)).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Qcgl;

    fn omegas() -> Vec<f64> {
        (0..=200).map(|i| i as f64 * 0.025).collect()
    }

    #[test]
    fn tips_gap_and_spacing() {
        let m = Qcgl::default();
        let s1 = 1.0286;
        let curves = dispersion_essential(&m, &[s1], &omegas(), (-3, 3)).unwrap();
        assert_eq!(curves.len(), 7);
        for c in &curves {
            let tip: Vec<Complex64> = c.points.iter().filter(|p| p.0 == 0.0).map(|p| p.1).collect();
            for t in &tip {
                assert!((t.re + 0.5).abs() < 1e-15);
                assert!((t.im + c.n[0] as f64 * s1).abs() < 1e-12);
            }
            let top = c.points.iter().map(|p| p.1.re).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(top, -0.5);
        }
        assert_eq!(max_real_part(&curves), -0.5);
        let tips: Vec<f64> = curves.iter().map(|c| c.points[0].1.im).collect();
        for w in tips.windows(2) {
            assert!(((w[0] - w[1]).abs() - s1).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_and_determinant() {
        let m = Qcgl::default();
        let s1 = 1.0286;
        let curves = dispersion_essential(&m, &[s1], &omegas(), (-2, 2)).unwrap();
        for c in &curves {
            for (w, l) in &c.points {
                let cf = qcgl_closed_form(&m.params, *w, c.n[0], s1);
                assert!(cf.iter().map(|z| (z - l).norm()).fold(f64::INFINITY, f64::min) < 1e-12);
                assert!(determinant_residual(&m, *l, *w, c.n[0] as f64 * s1) < 1e-12);
            }
        }
    }

    #[test]
    fn curve_distance() {
        let m = Qcgl::default();
        let curves = dispersion_essential(&m, &[1.0286], &omegas(), (-3, 3)).unwrap();
        assert!(distance_to_curves(Complex64::new(-0.55, 0.1), &curves) < 0.1);
        assert!((distance_to_curves(Complex64::new(0.0, 0.0), &curves) - 0.5).abs() < 1e-12);
    }
}
