//! Reaction models. The cubic-quintic complex Ginzburg-Landau nonlinearity
//! `f(u) = u (delta + beta |u|^2 + gamma |u|^4)` is shipped in its real form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::dense::CMat;

/// Reaction term `f: R^N -> R^N` with its derivatives and constant far-field state.
pub trait ReactionModel: Send + Sync {
    fn name(&self) -> &str;
    fn n_real(&self) -> usize;
    fn f(&self, u: &[f64]) -> Vec<f64>;
    /// Allocation-free variant of [`ReactionModel::f`] for hot loops.
    fn f_into(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.f(u));
    }
    fn df(&self, u: &[f64]) -> DMatrix<f64>;
    /// Upper bound for the operator norm of `D^2 f` on the closed ball of radius `r`
    /// around `v_inf`, nondecreasing in `r`. `None` if the model has no such bound.
    fn d2f_sup(&self, r: f64) -> Option<f64>;
    fn v_inf(&self) -> Vec<f64>;
    /// Real diffusion matrix.
    fn diffusion(&self) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcglParams {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
}

impl Default for QcglParams {
    fn default() -> Self {
        QcglParams {
            alpha: Complex64::new(0.5, 0.5),
            beta: Complex64::new(2.5, 1.0),
            gamma: Complex64::new(-1.0, -0.1),
            delta: Complex64::new(-0.5, 0.0),
        }
    }
}

impl QcglParams {
    /// Whether the decay theory applies (`Re alpha > 0`, `Re delta < 0`).
    pub fn decay_regime(&self) -> bool {
        self.alpha.re > 0.0 && self.delta.re < 0.0
    }
}

/// Real 2x2 matrix of multiplication by `z`.
#[inline]
pub fn mult_matrix(z: Complex64) -> [[f64; 2]; 2] {
    [[z.re, -z.im], [z.im, z.re]]
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Qcgl {
    pub params: QcglParams,
}

impl Qcgl {
    pub fn new(params: QcglParams) -> Self {
        Qcgl { params }
    }

    /// `g(s) = delta + beta s + gamma s^2`.
    #[inline]
    pub fn g(&self, s: f64) -> Complex64 {
        self.params.delta + self.params.beta * s + self.params.gamma * (s * s)
    }

    #[inline]
    pub fn g_prime(&self, s: f64) -> Complex64 {
        self.params.beta + self.params.gamma * (2.0 * s)
    }

    pub fn eval_complex(&self, u: Complex64) -> Complex64 {
        self.g(u.norm_sqr()) * u
    }

    #[inline]
    pub fn eval_pair(&self, u1: f64, u2: f64) -> [f64; 2] {
        let g = self.g(u1 * u1 + u2 * u2);
        [g.re * u1 - g.im * u2, g.im * u1 + g.re * u2]
    }

    /// `Df(u) = M(g(s)) + 2 (M(g'(s)) u) u^T`.
    #[inline]
    pub fn jacobian_pair(&self, u1: f64, u2: f64) -> [[f64; 2]; 2] {
        let s = u1 * u1 + u2 * u2;
        let g = self.g(s);
        let gp = self.g_prime(s);
        let w = [gp.re * u1 - gp.im * u2, gp.im * u1 + gp.re * u2];
        [
            [g.re + 2.0 * w[0] * u1, -g.im + 2.0 * w[0] * u2],
            [g.im + 2.0 * w[1] * u1, g.re + 2.0 * w[1] * u2],
        ]
    }

    /// Second derivative as a bilinear map `D^2 f(u)[h, k]`.
    pub fn second_derivative(&self, u: [f64; 2], h: [f64; 2], k: [f64; 2]) -> [f64; 2] {
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        let mul = |z: Complex64, v: [f64; 2]| [z.re * v[0] - z.im * v[1], z.im * v[0] + z.re * v[1]];
        let gp = self.g_prime(dot(u, u));
        let (uh, uk, hk) = (dot(u, h), dot(u, k), dot(h, k));
        let a = mul(gp, h);
        let b = mul(gp, u);
        let c = mul(gp, k);
        let e = mul(self.params.gamma * 2.0, u);
        [
            2.0 * uk * a[0] + 2.0 * hk * b[0] + 2.0 * uh * c[0] + 4.0 * uh * uk * e[0],
            2.0 * uk * a[1] + 2.0 * hk * b[1] + 2.0 * uh * c[1] + 4.0 * uh * uk * e[1],
        ]
    }
}

impl ReactionModel for Qcgl {
    fn name(&self) -> &str {
        "qcgl"
    }

    fn n_real(&self) -> usize {
        2
    }

    fn f(&self, u: &[f64]) -> Vec<f64> {
        self.eval_pair(u[0], u[1]).to_vec()
    }

    fn f_into(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.eval_pair(u[0], u[1]));
    }

    fn df(&self, u: &[f64]) -> DMatrix<f64> {
        let j = self.jacobian_pair(u[0], u[1]);
        DMatrix::from_row_slice(2, 2, &[j[0][0], j[0][1], j[1][0], j[1][1]])
    }

    /// Triangle-inequality bound: the cubic term contributes `6 |beta| r`, the
    /// quintic one `20 |gamma| r^3`; the linear term has no second derivative.
    fn d2f_sup(&self, r: f64) -> Option<f64> {
        let r = r.max(0.0);
        Some(6.0 * self.params.beta.norm() * r + 20.0 * self.params.gamma.norm() * r.powi(3))
    }

    fn v_inf(&self) -> Vec<f64> {
        vec![0.0, 0.0]
    }

    fn diffusion(&self) -> DMatrix<f64> {
        let m = mult_matrix(self.params.alpha);
        DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
    }
}

/// Linear reaction `f(u) = -rate u` with a constant diffusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDamping {
    pub diffusion: DMatrix<f64>,
    pub rate: f64,
}

impl LinearDamping {
    pub fn new(diffusion: DMatrix<f64>, rate: f64) -> Self {
        LinearDamping { diffusion, rate }
    }
}

impl ReactionModel for LinearDamping {
    fn name(&self) -> &str {
        "linear"
    }

    fn n_real(&self) -> usize {
        self.diffusion.nrows()
    }

    fn f(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|x| -self.rate * x).collect()
    }

    fn df(&self, _u: &[f64]) -> DMatrix<f64> {
        let n = self.n_real();
        DMatrix::identity(n, n) * -self.rate
    }

    fn d2f_sup(&self, _r: f64) -> Option<f64> {
        Some(0.0)
    }

    fn v_inf(&self) -> Vec<f64> {
        vec![0.0; self.n_real()]
    }

    fn diffusion(&self) -> DMatrix<f64> {
        self.diffusion.clone()
    }
}

/// Looks up a shipped model by name.
pub fn model_by_name(name: &str, params: QcglParams) -> Result<Box<dyn ReactionModel>> {
    match name {
        "qcgl" => Ok(Box::new(Qcgl::new(params))),
        other => Err(Error::Config(format!("unknown model '{other}' (available: qcgl)"))),
    }
}

/// Real block form `[[A1, -A2], [A2, A1]]` of `A = A1 + i A2`.
pub fn realify(a: &CMat) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            m[(i, j)] = z.re;
            m[(i, j + n)] = -z.im;
            m[(i + n, j)] = z.im;
            m[(i + n, j + n)] = z.re;
        }
    }
    m
}

/// Inverse of [`realify`]; fails if the block structure is violated.
pub fn complexify(m: &DMatrix<f64>) -> Result<CMat> {
    if m.nrows() != m.ncols() || !m.nrows().is_multiple_of(2) {
        return Err(Error::InvalidArgument("expected a square matrix of even size".into()));
    }
    let n = m.nrows() / 2;
    let tol = 1e-14 * m.amax().max(1.0);
    let mut a = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (a1, a2) = (m[(i, j)], m[(i + n, j)]);
            if (m[(i + n, j + n)] - a1).abs() > tol || (m[(i, j + n)] + a2).abs() > tol {
                return Err(Error::InvalidArgument(format!("block ({i}, {j}) is not of complex type")));
            }
            a[(i, j)] = Complex64::new(a1, a2);
        }
    }
    Ok(a)
}

/// `v = v1 + i v2` stacked as `(v1, v2)`.
pub fn realify_vector(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}
