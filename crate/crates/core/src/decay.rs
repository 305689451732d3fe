//! Numerical decay rates from radial rays, pointwise decay certificates and the
//! comparison against the theoretical rates.

use std::f64::consts::LN_10;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::DecayBudget;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};

/// Magnitudes at or below this are dropped from the regression.
pub const MAGNITUDE_FLOOR: f64 = 1e-300;
pub const RAY_POINTS: usize = 1000;

/// Unit for reported rates: the slope of `log10 |w|` or of `ln |w|` against `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateUnits {
    #[default]
    Log10,
    Natural,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaySample {
    pub direction: [f64; 2],
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

fn unit(direction: [f64; 2]) -> Result<[f64; 2]> {
    let n = direction[0].hypot(direction[1]);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidArgument("ray direction must be a nonzero vector".into()));
    }
    Ok([direction[0] / n, direction[1] / n])
}

/// `|w|` along `r -> r dir`, `r` in `[0, r_max]`, from componentwise bilinear
/// interpolation of a complex interleaved field.
pub fn sample_ray_complex(
    grid: &Grid2D,
    ncomp: usize,
    values: &[Complex64],
    direction: [f64; 2],
    r_max: f64,
    n: usize,
) -> Result<RaySample> {
    let dir = unit(direction)?;
    if values.len() != grid.nodes() * ncomp || ncomp == 0 {
        return Err(Error::InvalidArgument("field length does not match the grid".into()));
    }
    if !(r_max > 0.0) || n < 2 {
        return Err(Error::InvalidArgument("need r_max > 0 and at least two ray points".into()));
    }
    if !grid.contains(r_max * dir[0], r_max * dir[1]) {
        return Err(Error::InvalidArgument(format!(
            "ray of length {r_max} leaves the grid [-{0}, {0}]^2",
            grid.half_width()
        )));
    }
    let last = grid.n() - 1;
    let mut radii = Vec::with_capacity(n);
    let mut mags = Vec::with_capacity(n);
    for s in 0..n {
        let r = r_max * s as f64 / (n - 1) as f64;
        let fx = ((r * dir[0] + grid.half_width()) / grid.dx()).clamp(0.0, last as f64);
        let fy = ((r * dir[1] + grid.half_width()) / grid.dx()).clamp(0.0, last as f64);
        let i = (fx.floor() as usize).min(last - 1);
        let j = (fy.floor() as usize).min(last - 1);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let corners = [
            (grid.node(i, j), (1.0 - tx) * (1.0 - ty)),
            (grid.node(i + 1, j), tx * (1.0 - ty)),
            (grid.node(i, j + 1), (1.0 - tx) * ty),
            (grid.node(i + 1, j + 1), tx * ty),
        ];
        let mut sq = 0.0;
        for c in 0..ncomp {
            let z: Complex64 = corners.iter().map(|&(k, w)| values[k * ncomp + c] * w).sum();
            sq += z.norm_sqr();
        }
        radii.push(r);
        mags.push(sq.sqrt());
    }
    Ok(RaySample { direction: dir, radii, values: mags })
}

pub fn sample_ray(field: &Field, direction: [f64; 2], r_max: f64, n: usize) -> Result<RaySample> {
    let z: Vec<Complex64> = field.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    sample_ray_complex(field.grid(), field.ncomp(), &z, direction, r_max, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    /// `d ln|w| / dr`.
    pub slope: f64,
    pub intercept: f64,
    pub window: [f64; 2],
    pub r_squared: f64,
    pub points: usize,
}

impl RegressionFit {
    pub fn ndr(&self, units: RateUnits) -> f64 {
        match units {
            RateUnits::Natural => -self.slope,
            RateUnits::Log10 => -self.slope / LN_10,
        }
    }
}

/// Least squares of `ln |w|` against `r` over the radii inside `window`.
pub fn fit_decay(ray: &RaySample, window: [f64; 2]) -> Result<RegressionFit> {
    if !(window[0] < window[1]) {
        return Err(Error::InvalidArgument(format!("empty window [{}, {}]", window[0], window[1])));
    }
    let inside: Vec<(f64, f64)> =
        ray.radii.iter().zip(&ray.values).filter(|(r, _)| **r >= window[0] && **r <= window[1]).map(|(r, v)| (*r, *v)).collect();
    if inside.len() < 10 {
        return Err(Error::InvalidArgument(format!("only {} ray points inside the window", inside.len())));
    }
    let pts: Vec<(f64, f64)> = inside.iter().filter(|(_, v)| *v > MAGNITUDE_FLOOR).map(|(r, v)| (*r, v.ln())).collect();
    if pts.is_empty() {
        return Err(Error::Numerical("field vanishes on window".into()));
    }
    if pts.len() < 10 {
        return Err(Error::Numerical(format!("only {} nonvanishing ray points inside the window", pts.len())));
    }
    let n = pts.len() as f64;
    let mr = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mr).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mr) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mr;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RegressionFit { slope, intercept, window, r_squared, points: pts.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub object: String,
    pub lambda: Option<Complex64>,
    /// Rate in `units`.
    pub ndr: f64,
    /// Rate of `ln |w|`, whatever `units` says.
    pub ndr_natural: f64,
    /// `None` where the theory gives no rate (`Re lambda <= -beta_inf`).
    pub tdr: Option<f64>,
    pub margin: Option<f64>,
    pub r_squared: f64,
    pub units: RateUnits,
}

impl DecayReport {
    pub fn tdr_label(&self) -> String {
        self.tdr.map_or_else(|| "—".to_string(), |t| format!("{t:.4}"))
    }
}

/// One row for the profile, then one per eigenvalue. Theoretical rates are the
/// suprema `nu / max(p_min, d/2)` and `eps(lambda)` times that.
pub fn decay_report(
    profile: &RegressionFit,
    eigen: &[(Complex64, RegressionFit)],
    budget: &DecayBudget,
    units: RateUnits,
) -> Vec<DecayReport> {
    let row = |object: String, lambda, fit: &RegressionFit, tdr: Option<f64>| {
        let ndr = fit.ndr(units);
        let ndr_natural = fit.ndr(RateUnits::Natural);
        DecayReport { object, lambda, ndr, ndr_natural, tdr, margin: tdr.map(|t| ndr - t), r_squared: fit.r_squared, units }
    };
    let mut out = vec![row("profile".into(), None, profile, Some(budget.mu_pro_max))];
    for (lambda, fit) in eigen {
        let e = budget.eig(*lambda);
        let name = format!("{:.5}{:+.5}i", lambda.re, lambda.im);
        out.push(row(name, Some(*lambda), fit, e.applicable.then_some(e.mu_eig_max)));
    }
    out
}

/// Largest amount by which an eigenfunction rate exceeds the rate of an eigenvalue
/// further to the right, over the rows the theory covers (those with a TDR).
/// Zero when the rates are nonincreasing as `Re lambda` decreases.
pub fn trend_violation(rows: &[DecayReport]) -> f64 {
    let eig: Vec<(f64, f64)> = rows.iter().filter(|r| r.tdr.is_some()).filter_map(|r| r.lambda.map(|l| (l.re, r.ndr))).collect();
    let mut worst: f64 = 0.0;
    for a in &eig {
        for b in &eig {
            if a.0 >= b.0 {
                worst = worst.max(b.1 - a.1);
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseCertificate {
    pub mu: f64,
    /// `max |w(x)| exp(mu sqrt(|x|^2 + 1))` over the interior.
    pub c_fit: f64,
    /// Same for `|D_1 w|` and `|D_2 w|` (central differences).
    pub c_fit_grad: [f64; 2],
    pub max_violation: f64,
    pub warning: Option<String>,
}

/// Fits `C` in `|D^a w(x)| <= C exp(-mu sqrt(|x|^2 + 1))` on nodes with `|x| <= R - collar`.
/// `mu_budget` is the largest theoretically covered rate, if known.
pub fn pointwise_certificate(field: &Field, mu: f64, collar: f64, mu_budget: Option<f64>) -> Result<PointwiseCertificate> {
    if !(mu >= 0.0) || !(collar >= 0.0) {
        return Err(Error::InvalidArgument(format!("need mu >= 0 and collar >= 0 (mu = {mu}, collar = {collar})")));
    }
    let g = field.grid();
    let (n, nc, h) = (g.n(), field.ncomp(), g.dx());
    let rmax = g.half_width() - collar;
    let mut c = 0.0f64;
    let mut cg = [0.0f64; 2];
    let mut any = false;
    for k in 0..g.nodes() {
        let (x, y) = g.position(k);
        let r2 = x * x + y * y;
        if r2.sqrt() > rmax {
            continue;
        }
        any = true;
        let w = (mu * (r2 + 1.0).sqrt()).exp();
        c = c.max(field.magnitude(k) * w);
        let (i, j) = (k % n, k / n);
        if i > 0 && i < n - 1 {
            let d: f64 = (0..nc).map(|q| ((field.at(k + 1)[q] - field.at(k - 1)[q]) / (2.0 * h)).powi(2)).sum();
            cg[0] = cg[0].max(d.sqrt() * w);
        }
        if j > 0 && j < n - 1 {
            let d: f64 = (0..nc).map(|q| ((field.at(k + n)[q] - field.at(k - n)[q]) / (2.0 * h)).powi(2)).sum();
            cg[1] = cg[1].max(d.sqrt() * w);
        }
    }
    if !any {
        return Err(Error::InvalidArgument(format!("collar {collar} leaves no interior nodes")));
    }
    let warning = mu_budget
        .filter(|b| mu > *b)
        .map(|b| format!("mu = {mu} exceeds the theoretical rate {b}; certificate is empirical only"));
    Ok(PointwiseCertificate { mu, c_fit: c, c_fit_grad: cg, max_violation: 0.0, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_analysis::{constants_bundle, p_range, SquareMatrix};
    use crate::model::{Qcgl, ReactionModel};

    fn radial(g: Grid2D, f: impl Fn(f64) -> f64) -> Field {
        Field::from_fn(g, 1, |x, y| vec![f((x * x + y * y).sqrt())])
    }

    fn budget() -> DecayBudget {
        let m = Qcgl::default();
        let a = SquareMatrix::real(m.diffusion()).unwrap();
        let b = SquareMatrix::real(-m.df(&m.v_inf())).unwrap();
        let c = constants_bundle(&a, &b, 2, 2.0).unwrap();
        DecayBudget::new(&c, 2, p_range(&a).unwrap(), 2.0).unwrap()
    }

    #[test]
    fn ray_sampling() {
        let g = Grid2D::new(4.0, 0.25).unwrap();
        let c = sample_ray(&Field::from_fn(g, 2, |_, _| vec![3.0, 4.0]), [0.0, 1.0], 4.0, 50).unwrap();
        assert!(c.values.iter().all(|v| (v - 5.0).abs() < 1e-12));
        assert!(c.radii.windows(2).all(|w| w[1] > w[0]));
        assert!(sample_ray(&Field::zeros(g, 1), [1.0, 1.0], 6.0, 10).is_err());
        assert!(sample_ray(&Field::zeros(g, 1), [0.0, 0.0], 1.0, 10).is_err());

        let err = |h: f64| {
            let g = Grid2D::new(4.0, h).unwrap();
            let s = sample_ray(&radial(g, |r| (-r * r).exp()), [0.6, 0.8], 3.0, 301).unwrap();
            s.radii.iter().zip(&s.values).map(|(r, v)| (v - (-r * r).exp()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.25), err(0.125));
        assert!(e1 < 0.25 * 0.25 && e1 / e2 > 3.0, "{e1} {e2}");
    }

    #[test]
    fn exact_exponential() {
        let g = Grid2D::new(20.0, 0.25).unwrap();
        let ray = sample_ray(&radial(g, |r| (-0.5713 * r).exp()), [0.0, 1.0], 20.0, RAY_POINTS).unwrap();
        // Grid nodes lie on the ray; between nodes bilinear interpolation of an exponential is inexact.
        let exact = RaySample {
            direction: ray.direction,
            radii: ray.radii.clone(),
            values: ray.radii.iter().map(|r| (-0.5713 * r).exp()).collect(),
        };
        let f = fit_decay(&exact, [5.0, 13.0]).unwrap();
        assert!((f.ndr(RateUnits::Natural) - 0.5713).abs() < 1e-12);
        assert!((f.ndr(RateUnits::Log10) - 0.5713 / LN_10).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!((fit_decay(&ray, [5.0, 13.0]).unwrap().ndr(RateUnits::Natural) - 0.5713).abs() < 1e-3);
    }

    #[test]
    fn fit_errors() {
        let ray = RaySample { direction: [0.0, 1.0], radii: (0..100).map(|i| i as f64 * 0.2).collect(), values: vec![0.0; 100] };
        assert!(fit_decay(&ray, [5.0, 13.0]).unwrap_err().to_string().contains("vanishes"));
        assert!(fit_decay(&ray, [5.0, 5.5]).is_err());
        assert!(fit_decay(&ray, [6.0, 5.0]).is_err());
    }

    #[test]
    fn report_rows() {
        let b = budget();
        let fit = RegressionFit { slope: -0.5713 * LN_10, intercept: 0.0, window: [5.0, 13.0], r_squared: 1.0, points: 400 };
        let rows = decay_report(
            &fit,
            &[(Complex64::new(-0.46659, 4.2742), fit), (Complex64::new(-0.54131, 2.8166), fit)],
            &b,
            RateUnits::Log10,
        );
        assert!((rows[0].tdr.unwrap() - 0.6036).abs() < 1e-4);
        assert!((rows[0].ndr - 0.5713).abs() < 1e-12);
        assert!((rows[1].tdr.unwrap() - 0.0403).abs() < 2e-3);
        assert_eq!(rows[2].tdr, None);
        assert_eq!(rows[2].tdr_label(), "—");
        assert_eq!(rows[2].margin, None);
    }

    #[test]
    fn trend() {
        let mk = |re: f64, ndr: f64| DecayReport {
            object: String::new(),
            lambda: Some(Complex64::new(re, 0.0)),
            ndr,
            ndr_natural: ndr,
            tdr: Some(0.0),
            margin: None,
            r_squared: 1.0,
            units: RateUnits::Log10,
        };
        assert_eq!(trend_violation(&[mk(0.0, 0.6), mk(-0.2, 0.4), mk(-0.4, 0.1)]), 0.0);
        assert!((trend_violation(&[mk(0.0, 0.3), mk(-0.2, 0.5)]) - 0.2).abs() < 1e-12);
        let uncovered = DecayReport { tdr: None, ..mk(-0.6, 0.9) };
        assert_eq!(trend_violation(&[mk(0.0, 0.6), uncovered]), 0.0);
    }

    #[test]
    fn certificates() {
        let g = Grid2D::new(10.0, 0.25).unwrap();
        let w = radial(g, |r| (-0.6 * (r * r + 1.0).sqrt()).exp());
        let c = pointwise_certificate(&w, 0.5, 2.0, Some(0.6036)).unwrap();
        assert!((c.c_fit - (-0.1f64).exp()).abs() < 1e-12);
        assert_eq!(c.max_violation, 0.0);
        assert!(c.warning.is_none() && c.c_fit_grad[0] > 0.0);
        let c0 = pointwise_certificate(&w, 0.0, 0.0, None).unwrap();
        assert!((c0.c_fit - w.max_magnitude()).abs() < 1e-15);
        assert!(pointwise_certificate(&w, 0.7, 2.0, Some(0.6036)).unwrap().warning.is_some());
        assert!(pointwise_certificate(&w, 0.5, 11.0, None).is_err());
    }
}
