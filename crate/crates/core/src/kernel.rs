//! Heat kernel of the perturbed Ornstein-Uhlenbeck operator
//! `L v = A Lap v + <Sx, grad v> - B_inf v` and quadrature for its semigroup and resolvent.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::linalg::dense::{self, CMat, CVec};
use crate::matrix_analysis::{constants_bundle, simultaneous_diagonalize, SimultaneousDiag, SquareMatrix, DEFAULT_DIAG_TOL};
use crate::special::gauss_legendre;

/// `e^{tS}` for skew-symmetric `S`: closed forms for d = 2, 3, series otherwise.
pub fn rot_exp(s: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(Error::InvalidArgument("rotation generator must be square".into()));
    }
    let skew = (s + s.transpose()).amax();
    if skew > 1e-12 * s.amax().max(1.0) {
        return Err(Error::InvalidArgument(format!("S is not skew-symmetric (|S + S^T| = {skew:.3e})")));
    }
    let d = s.nrows();
    match d {
        2 => {
            let (c, sn) = ((t * s[(0, 1)]).cos(), (t * s[(0, 1)]).sin());
            Ok(DMatrix::from_row_slice(2, 2, &[c, sn, -sn, c]))
        }
        3 => {
            let k = s * t;
            let theta2 = 0.5 * k.norm_squared();
            let theta = theta2.sqrt();
            let id = DMatrix::identity(3, 3);
            if theta < 1e-8 {
                return Ok(id + &k + &k * &k * 0.5);
            }
            Ok(id + &k * (theta.sin() / theta) + &k * &k * ((1.0 - theta.cos()) / theta2))
        }
        _ => Ok(dense::expm(&dense::to_complex(&(s * t))).map(|z| z.re)),
    }
}

/// Diffusion, limit matrix and rotation of the operator, with the joint eigenbasis cached.
#[derive(Debug, Clone)]
pub struct KernelParams {
    pub a: SquareMatrix,
    pub b_inf: SquareMatrix,
    pub s: DMatrix<f64>,
    pub d: usize,
    pub n: usize,
    pub diag: SimultaneousDiag,
}

impl KernelParams {
    pub fn new(a: SquareMatrix, b_inf: SquareMatrix, s: DMatrix<f64>) -> Result<Self> {
        let d = s.nrows();
        if d < 2 {
            return Err(Error::InvalidArgument("spatial dimension must be at least 2".into()));
        }
        rot_exp(&s, 0.0)?;
        if a.eigenvalues().iter().any(|z| z.re <= 0.0) {
            return Err(Error::InvalidArgument("diffusion matrix needs Re sigma(A) > 0".into()));
        }
        let diag = simultaneous_diagonalize(&a, &b_inf, DEFAULT_DIAG_TOL)?;
        let n = a.dim();
        Ok(KernelParams { a, b_inf, s, d, n, diag })
    }

    /// `b_0 = -s(-B_inf)`.
    pub fn b0(&self) -> f64 {
        self.diag.lambda_b.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    /// Widest standard deviation of the Gaussian factors at time `t`.
    pub fn gaussian_width(&self, t: f64) -> f64 {
        self.diag
            .lambda_a
            .iter()
            .map(|l| (2.0 * t * l.norm_sqr() / l.re).sqrt())
            .fold(0.0, f64::max)
    }

    fn scalar_factors(&self, t: f64, r2: f64, out: &mut [Complex64]) {
        let d = self.d as f64;
        for (k, o) in out.iter_mut().enumerate() {
            let la = self.diag.lambda_a[k];
            let lb = self.diag.lambda_b[k];
            let pref = ((la * (4.0 * std::f64::consts::PI * t)).ln() * (-d / 2.0)).exp();
            *o = pref * (-lb * t - r2 / (la * (4.0 * t))).exp();
        }
    }

    fn rotate(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let q = rot_exp(&self.s, t)?;
        Ok((0..self.d).map(|i| (0..self.d).map(|j| q[(i, j)] * x[j]).sum()).collect())
    }
}

/// `H(x, xi, t) = (4 pi t A)^{-d/2} exp(-B t - (4tA)^{-1} |e^{tS}x - xi|^2)`.
pub fn kernel_eval(params: &KernelParams, x: &[f64], xi: &[f64], t: f64) -> Result<CMat> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel needs t > 0, got {t}")));
    }
    let ex = params.rotate(t, x)?;
    let r2: f64 = ex.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
    let mut h = vec![Complex64::new(0.0, 0.0); params.n];
    params.scalar_factors(t, r2, &mut h);
    let dm = CMat::from_diagonal(&CVec::from_vec(h));
    Ok(&params.diag.y * dm * &params.diag.y_inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Half-width of the integration box; `None` picks 8 Gaussian widths.
    pub box_radius: Option<f64>,
    pub nodes_per_axis: usize,
    pub time_nodes: usize,
    pub time_split: f64,
    /// If the integrand vanishes outside `[-g, g]^d`, integrate only over that box.
    pub g_support: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { box_radius: None, nodes_per_axis: 96, time_nodes: 24, time_split: 1.0, g_support: None }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 16 || self.time_nodes < 2 || !(self.time_split > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid quadrature spec {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupResult {
    pub values: Vec<CVec>,
    /// Set when a fixed box was narrower than 8 Gaussian widths.
    pub box_warning: bool,
}

type FieldFn<'a> = dyn Fn(&[f64]) -> CVec + Sync + 'a;

/// Axis nodes and trapezoid weights on `[lo, hi]`.
fn trapezoid(lo: f64, hi: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / (m - 1) as f64;
    let x = (0..m).map(|i| lo + i as f64 * h).collect();
    let w = (0..m).map(|i| if i == 0 || i == m - 1 { 0.5 * h } else { h }).collect();
    (x, w)
}

/// `[T(t) g](x)` at one point, returned in the eigenbasis coordinates `Y^-1 (...)`.
fn apply_eigen(params: &KernelParams, g: &FieldFn, x: &[f64], t: f64, quad: &QuadratureSpec) -> Result<(CVec, bool)> {
    let n = params.n;
    let d = params.d;
    let center = params.rotate(t, x)?;
    let auto = 8.0 * params.gaussian_width(t);
    let radius = quad.box_radius.unwrap_or(auto);
    let warning = radius < auto * (1.0 - 1e-12);
    let mut axes = Vec::with_capacity(d);
    for c in &center {
        let (mut lo, mut hi) = (c - radius, c + radius);
        if let Some(gs) = quad.g_support {
            lo = lo.max(-gs);
            hi = hi.min(gs);
        }
        if !(hi > lo) {
            return Ok((CVec::zeros(n), warning));
        }
        axes.push(trapezoid(lo, hi, quad.nodes_per_axis));
    }
    let m = quad.nodes_per_axis;
    let total = m.pow(d as u32);
    let mut acc = CVec::zeros(n);
    let mut h = vec![Complex64::new(0.0, 0.0); n];
    let mut xi = vec![0.0; d];
    for idx in 0..total {
        let mut rem = idx;
        let mut w = 1.0;
        let mut r2 = 0.0;
        for (a, (nodes, weights)) in axes.iter().enumerate() {
            let i = rem % m;
            rem /= m;
            xi[a] = nodes[i];
            w *= weights[i];
            r2 += (center[a] - nodes[i]).powi(2);
        }
        let gv = g(&xi);
        let z = &params.diag.y_inv * gv;
        params.scalar_factors(t, r2, &mut h);
        for k in 0..n {
            acc[k] += z[k] * h[k] * w;
        }
    }
    Ok((acc, warning))
}

/// `[T(t) g](x) = int H(x, xi, t) g(xi) dxi` by tensor trapezoid on a box around `e^{tS}x`.
pub fn semigroup_apply(
    params: &KernelParams,
    g: &FieldFn,
    t: f64,
    points: &[Vec<f64>],
    quad: &QuadratureSpec,
) -> Result<SemigroupResult> {
    quad.validate()?;
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("semigroup needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(SemigroupResult { values: points.iter().map(|x| g(x)).collect(), box_warning: false });
    }
    let parts: Vec<(CVec, bool)> =
        points.par_iter().map(|x| apply_eigen(params, g, x, t, quad)).collect::<Result<_>>()?;
    let box_warning = parts.iter().any(|p| p.1);
    let values = parts.into_iter().map(|(z, _)| &params.diag.y * z).collect();
    Ok(SemigroupResult { values, box_warning })
}

/// `int H(x, xi, t) dxi`, which equals `e^{-B_inf t}` on the whole space.
pub fn kernel_mass(params: &KernelParams, x: &[f64], t: f64, quad: &QuadratureSpec) -> Result<CMat> {
    let n = params.n;
    let mut out = CMat::zeros(n, n);
    for col in 0..n {
        let e = move |_: &[f64]| {
            let mut v = CVec::zeros(n);
            v[col] = Complex64::new(1.0, 0.0);
            v
        };
        let r = semigroup_apply(params, &e, t, &[x.to_vec()], quad)?;
        out.set_column(col, &r.values[0]);
    }
    Ok(out)
}

/// Time nodes and weights for `int_0^inf e^{-lambda s} ... ds`: `s = sigma^2` on
/// `[0, split]`, doubling panels afterwards, cut where `e^{-(Re lambda + b_0)s} < 1e-12`.
pub fn resolvent_time_nodes(lambda: Complex64, b0: f64, quad: &QuadratureSpec) -> Result<Vec<(f64, Complex64)>> {
    let rate = lambda.re + b0;
    if !(rate > 0.0) {
        return Err(Error::InvalidArgument(format!("resolvent integral diverges for Re lambda = {} <= -b_0", lambda.re)));
    }
    let t_end = (1e12f64).ln() / rate;
    let (gx, gw) = gauss_legendre(quad.time_nodes);
    let mut out = Vec::new();
    let split = quad.time_split.min(t_end);
    let smax = split.sqrt();
    for (x, w) in gx.iter().zip(&gw) {
        let sigma = 0.5 * smax * (x + 1.0);
        let s = sigma * sigma;
        out.push((s, (-lambda * s).exp() * (w * 0.5 * smax * 2.0 * sigma)));
    }
    let mut lo = split;
    while lo < t_end {
        let hi = (2.0 * lo).min(t_end);
        for (x, w) in gx.iter().zip(&gw) {
            let s = lo + 0.5 * (hi - lo) * (x + 1.0);
            out.push((s, (-lambda * s).exp() * (w * 0.5 * (hi - lo))));
        }
        lo = hi;
    }
    Ok(out)
}

/// `v(x) = int_0^inf e^{-lambda s} [T(s) g](x) ds`.
pub fn resolvent_apply(
    params: &KernelParams,
    g: &FieldFn,
    lambda: Complex64,
    points: &[Vec<f64>],
    quad: &QuadratureSpec,
) -> Result<Vec<CVec>> {
    quad.validate()?;
    let nodes = resolvent_time_nodes(lambda, params.b0(), quad)?;
    let n = params.n;
    let values: Vec<CVec> = points
        .par_iter()
        .map(|x| -> Result<CVec> {
            let mut acc = CVec::zeros(n);
            for &(s, w) in &nodes {
                let (z, _) = apply_eigen(params, g, x, s, quad)?;
                acc += z * w;
            }
            Ok(&params.diag.y * acc)
        })
        .collect::<Result<_>>()?;
    Ok(values)
}

/// Complex vector field sampled on the nodes of a grid (node order as in [`Grid2D`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: Grid2D,
    pub values: Vec<CVec>,
}

impl SampledField {
    pub fn from_fn<F: Fn(&[f64]) -> CVec>(grid: Grid2D, f: F) -> Self {
        let values = (0..grid.nodes())
            .map(|k| {
                let (x, y) = grid.position(k);
                f(&[x, y])
            })
            .collect();
        SampledField { grid, values }
    }

    pub fn points(grid: &Grid2D) -> Vec<Vec<f64>> {
        (0..grid.nodes())
            .map(|k| {
                let (x, y) = grid.position(k);
                vec![x, y]
            })
            .collect()
    }

    /// Trapezoid L^p norm of the Euclidean magnitude.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| self.grid.trapezoid_weight(k) * v.norm().powf(p))
            .sum();
        s.powf(1.0 / p)
    }
}

/// Max over interior nodes of `|(lambda - L) v - g|` with second-order central differences.
pub fn operator_residual(params: &KernelParams, v: &SampledField, g: &SampledField, lambda: Complex64) -> Result<f64> {
    let grid = v.grid;
    let n = grid.n();
    if n < 5 {
        return Err(Error::InvalidArgument(format!("grid with {n} nodes per axis is too coarse")));
    }
    if params.d != 2 {
        return Err(Error::InvalidArgument("operator residual is implemented for d = 2".into()));
    }
    if g.grid != grid || v.values.len() != grid.nodes() {
        return Err(Error::InvalidArgument("v and g must share one grid".into()));
    }
    let h = grid.dx();
    let a = params.a.entries();
    let b = params.b_inf.entries();
    let s = &params.s;
    let mut worst: f64 = 0.0;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = grid.node(i, j);
            let (x, y) = grid.position(k);
            let c = &v.values[k];
            let (e, w) = (&v.values[grid.node(i + 1, j)], &v.values[grid.node(i - 1, j)]);
            let (nn, ss) = (&v.values[grid.node(i, j + 1)], &v.values[grid.node(i, j - 1)]);
            let lap: CVec = (e + w + nn + ss - c * Complex64::new(4.0, 0.0)) / Complex64::new(h * h, 0.0);
            let dx1: CVec = (e - w) / Complex64::new(2.0 * h, 0.0);
            let dx2: CVec = (nn - ss) / Complex64::new(2.0 * h, 0.0);
            let drift = [s[(0, 0)] * x + s[(0, 1)] * y, s[(1, 0)] * x + s[(1, 1)] * y];
            let lv: CVec = a * lap + dx1 * Complex64::new(drift[0], 0.0) + dx2 * Complex64::new(drift[1], 0.0) - b * c;
            let r = c * lambda - lv - &g.values[k];
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

/// `max_x |T(t+s)g - T(t)T(s)g|` at the given points, the inner semigroup evaluated by quadrature.
pub fn semigroup_property_error(
    params: &KernelParams,
    g: &FieldFn,
    t: f64,
    s: f64,
    points: &[Vec<f64>],
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(t > 0.0 && s > 0.0) {
        return Err(Error::InvalidArgument(format!("semigroup property needs t, s > 0, got {t}, {s}")));
    }
    let once = semigroup_apply(params, g, t + s, points, quad)?;
    let n = params.n;
    let inner = |xi: &[f64]| match semigroup_apply(params, g, s, &[xi.to_vec()], quad) {
        Ok(mut r) => r.values.swap_remove(0),
        Err(_) => CVec::from_element(n, Complex64::new(f64::NAN, 0.0)),
    };
    let twice = semigroup_apply(params, &inner, t, points, quad)?;
    Ok(once.values.iter().zip(&twice.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

/// Gaussian envelope times a few plane waves with wavenumbers `|k| <= k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimitedField {
    pub envelope: f64,
    pub waves: Vec<([f64; 2], CVec)>,
}

impl BandLimitedField {
    pub fn random<R: Rng>(rng: &mut R, ncomp: usize, waves: usize, k_max: f64, envelope: f64) -> Self {
        let waves = (0..waves)
            .map(|_| {
                let r = k_max * rng.gen::<f64>().sqrt();
                let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                let c = CVec::from_iterator(ncomp, (0..ncomp).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))));
                ([r * phi.cos(), r * phi.sin()], c)
            })
            .collect();
        BandLimitedField { envelope, waves }
    }

    pub fn eval(&self, x: &[f64]) -> CVec {
        let env = (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * self.envelope * self.envelope)).exp();
        let mut out = CVec::zeros(self.waves[0].1.len());
        for (k, c) in &self.waves {
            out += c * Complex64::from_polar(env, k[0] * x[0] + k[1] * x[1]);
        }
        out
    }
}

/// `T(t)` applied to fields sampled on one grid, integrating by the trapezoid rule on that grid.
/// Suitable when the fields are well resolved and negligible at the grid boundary.
pub fn semigroup_on_grid(params: &KernelParams, fields: &[SampledField], t: f64) -> Result<Vec<SampledField>> {
    if params.d != 2 {
        return Err(Error::InvalidArgument("grid semigroup is implemented for d = 2".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("grid semigroup needs t > 0, got {t}")));
    }
    let Some(first) = fields.first() else { return Ok(Vec::new()) };
    let grid = first.grid;
    if fields.iter().any(|f| f.grid != grid || f.values.len() != grid.nodes()) {
        return Err(Error::InvalidArgument("fields must share one grid".into()));
    }
    let (n, nf, nodes) = (params.n, fields.len(), grid.nodes());
    // z[(j * nf + f) * n + k]: eigen coordinates of field f at node j, times the node weight.
    let mut z = vec![Complex64::new(0.0, 0.0); nodes * nf * n];
    for (f, field) in fields.iter().enumerate() {
        for (j, v) in field.values.iter().enumerate() {
            let w = grid.trapezoid_weight(j);
            let e = &params.diag.y_inv * v;
            for k in 0..n {
                z[(j * nf + f) * n + k] = e[k] * w;
            }
        }
    }
    let q = rot_exp(&params.s, t)?;
    let pos: Vec<(f64, f64)> = (0..nodes).map(|k| grid.position(k)).collect();
    let rows: Vec<Vec<CVec>> = pos
        .par_iter()
        .map(|&(x, y)| {
            let c = [q[(0, 0)] * x + q[(0, 1)] * y, q[(1, 0)] * x + q[(1, 1)] * y];
            let mut acc = vec![Complex64::new(0.0, 0.0); nf * n];
            let mut h = vec![Complex64::new(0.0, 0.0); n];
            for (j, &(xi, eta)) in pos.iter().enumerate() {
                params.scalar_factors(t, (c[0] - xi).powi(2) + (c[1] - eta).powi(2), &mut h);
                let zj = &z[j * nf * n..(j + 1) * nf * n];
                for (a, zz) in acc.chunks_mut(n).zip(zj.chunks(n)) {
                    for k in 0..n {
                        a[k] += h[k] * zz[k];
                    }
                }
            }
            acc.chunks(n).map(|e| &params.diag.y * CVec::from_column_slice(e)).collect()
        })
        .collect();
    Ok((0..nf)
        .map(|f| SampledField { grid, values: rows.iter().map(|r| r[f].clone()).collect() })
        .collect())
}

/// Outcome of testing `||T(t)v||_p <= kappa a_1 e^{-b_0 t} ||v||_p` on a batch of fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayBoundCheck {
    pub p: f64,
    pub times: Vec<f64>,
    /// `kappa * a_1`.
    pub constant: f64,
    pub b0: f64,
    pub fields: usize,
    /// Largest `||T(t)v||_p / (kappa a_1 e^{-b_0 t} ||v||_p)`.
    pub worst_ratio: f64,
    pub violations: usize,
}

pub fn lp_decay_bound_check(params: &KernelParams, fields: &[SampledField], times: &[f64], p: f64) -> Result<DecayBoundCheck> {
    let c = constants_bundle(&params.a, &params.b_inf, params.d, p)?;
    let constant = c.kappa * c.a_1;
    let b0 = params.b0();
    let norms: Vec<f64> = fields.iter().map(|f| f.lp_norm(p)).collect();
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for &t in times {
        let out = semigroup_on_grid(params, fields, t)?;
        for (o, nv) in out.iter().zip(&norms) {
            let ratio = o.lp_norm(p) / (constant * (-b0 * t).exp() * nv);
            worst = worst.max(ratio);
            violations += usize::from(!(ratio <= 1.0));
        }
    }
    Ok(DecayBoundCheck { p, times: times.to_vec(), constant, b0, fields: fields.len(), worst_ratio: worst, violations })
}
