//! Matrix-level structural conditions and the spectral constants derived from them.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::dense::{self, CMat, CVec};
use crate::model::ReactionModel;
use crate::optimize::{halton_sphere, nelder_mead};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

/// Square matrix over R or C. Real-tagged matrices act on real vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    entries: CMat,
    field: ScalarField,
}

impl SquareMatrix {
    pub fn new(entries: CMat, field: ScalarField) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, not square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if field == ScalarField::Real && entries.iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidArgument("real-tagged matrix has nonzero imaginary parts".into()));
        }
        Ok(SquareMatrix { entries, field })
    }

    pub fn real(m: DMatrix<f64>) -> Result<Self> {
        Self::new(dense::to_complex(&m), ScalarField::Real)
    }

    pub fn complex(m: CMat) -> Result<Self> {
        Self::new(m, ScalarField::Complex)
    }

    /// Real matrix from row-major entries.
    pub fn from_rows(n: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * n {
            return Err(Error::InvalidArgument(format!("expected {} entries, got {}", n * n, rows.len())));
        }
        Self::real(DMatrix::from_row_slice(n, n, rows))
    }

    pub fn identity(n: usize) -> Self {
        SquareMatrix { entries: CMat::identity(n, n), field: ScalarField::Real }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn to_real(&self) -> Option<DMatrix<f64>> {
        (self.field == ScalarField::Real).then(|| self.entries.map(|z| z.re))
    }

    pub fn scale(&self, c: f64) -> Self {
        SquareMatrix { entries: &self.entries * Complex64::new(c, 0.0), field: self.field }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn norm(&self) -> f64 {
        dense::frobenius(&self.entries)
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        dense::eigenvalues(&self.entries)
    }

    /// Real dimension of the vector space the matrix acts on.
    fn sample_dim(&self) -> usize {
        match self.field {
            ScalarField::Real => self.dim(),
            ScalarField::Complex => 2 * self.dim(),
        }
    }

    /// Unit vector in K^N from real coordinates.
    fn vector(&self, x: &[f64]) -> CVec {
        let n = self.dim();
        let v = match self.field {
            ScalarField::Real => CVec::from_iterator(n, x.iter().map(|&r| Complex64::new(r, 0.0))),
            ScalarField::Complex => CVec::from_iterator(n, (0..n).map(|k| Complex64::new(x[k], x[n + k]))),
        };
        let norm = v.norm();
        if norm > 0.0 {
            v / Complex64::new(norm, 0.0)
        } else {
            v
        }
    }
}

/// Re <w, v> with the inner product conjugate-linear in the first slot.
fn re_inner(w: &CVec, v: &CVec) -> f64 {
    w.iter().zip(v.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralBounds {
    pub radius: f64,
    pub abscissa: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub a_0: f64,
    pub b_0: f64,
}

/// Spectral radius and abscissa plus the derived constants. `a_0 = b_0 = -s(-M)`,
/// the smallest real part; `a_min = 1 / rho(M^-1)`.
pub fn spectral_bounds(m: &SquareMatrix) -> Result<SpectralBounds> {
    let eig = m.eigenvalues();
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min_re = eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let inv = dense::inverse(m.entries())?;
    let rho_inv = dense::eigenvalues(&inv).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(SpectralBounds { radius, abscissa, a_min: 1.0 / rho_inv, a_max: radius, a_0: min_re, b_0: min_re })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Antieigenvalue {
    pub mu1: f64,
    /// Maximal turning angle, `arccos mu1`.
    pub angle: f64,
}

const ANTIEIG_SAMPLES: u64 = 10_000;
const MARGIN_SAMPLES: u64 = 100_000;
const MARGIN_REFINED: usize = 10;

/// `mu1(A) = inf Re<w, Aw> / |Aw|` over unit vectors with `Aw != 0`.
pub fn first_antieigenvalue(a: &SquareMatrix) -> Antieigenvalue {
    let m = a.sample_dim();
    let quotient = |x: &[f64]| -> f64 {
        let w = a.vector(x);
        let aw = a.entries() * &w;
        let n = aw.norm();
        if n <= 1e-14 {
            f64::INFINITY
        } else {
            re_inner(&w, &aw) / n
        }
    };
    let mut ranked: Vec<(f64, Vec<f64>)> = (1..=ANTIEIG_SAMPLES)
        .map(|i| {
            let x = halton_sphere(i, m);
            (quotient(&x), x)
        })
        .collect();
    ranked.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut best = ranked[0].0;
    for (_, x) in ranked.iter().take(4) {
        let r = nelder_mead(quotient, x, 0.05, 4000, 1e-15);
        best = best.min(r.value);
    }
    let mu1 = best.clamp(-1.0, 1.0);
    Antieigenvalue { mu1, angle: mu1.acos() }
}

/// `gamma_A = inf |z|^2 Re<w,Aw> + (p-2) Re<w,z> Re<z,Aw>` over unit `z`, `w`.
pub fn lp_dissipativity_margin(a: &SquareMatrix, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in (1, inf)")));
    }
    let m = a.sample_dim();
    let form = |x: &[f64]| -> f64 {
        let z = a.vector(&x[..m]);
        let w = a.vector(&x[m..]);
        let aw = a.entries() * &w;
        re_inner(&w, &aw) + (p - 2.0) * re_inner(&w, &z) * re_inner(&z, &aw)
    };
    let mut ranked: Vec<(f64, Vec<f64>)> = (1..=MARGIN_SAMPLES)
        .map(|i| {
            let x = halton_sphere(i, 2 * m);
            // Split one point of S^{2m-1} into two independent unit directions.
            let mut pair = crate::optimize::normalize(x[..m].to_vec());
            pair.extend(crate::optimize::normalize(x[m..].to_vec()));
            (form(&pair), pair)
        })
        .collect();
    ranked.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut best = ranked[0].0;
    for (_, x) in ranked.iter().take(MARGIN_REFINED) {
        best = best.min(nelder_mead(form, x, 0.05, 6000, 1e-15).value);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PRange {
    pub p_min: f64,
    pub p_max: f64,
}

impl PRange {
    /// Interval of `p` with `|p - 2| / p < mu1`.
    pub fn from_mu1(mu1: f64) -> Self {
        let p_min = 2.0 / (1.0 + mu1);
        let p_max = if mu1 >= 1.0 { f64::INFINITY } else { 2.0 / (1.0 - mu1) };
        PRange { p_min, p_max }
    }

    pub fn is_empty(&self) -> bool {
        !(self.p_min < self.p_max)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.p_min < p && p < self.p_max
    }
}

/// For a 2x2 real matrix `[[a1, -a2], [a2, a1]]` (multiplication by `a1 + i a2`).
fn rotation_form(a: &SquareMatrix) -> Option<Complex64> {
    let m = a.to_real()?;
    if m.nrows() != 2 {
        return None;
    }
    let tol = 1e-14 * m.norm().max(1.0);
    ((m[(0, 0)] - m[(1, 1)]).abs() <= tol && (m[(0, 1)] + m[(1, 0)]).abs() <= tol)
        .then(|| Complex64::new(m[(0, 0)], m[(1, 0)]))
}

/// Admissible exponents for the L^p theory. Closed form `Re a / |a|` for the
/// rotation form, otherwise the sampled antieigenvalue.
pub fn p_range(a: &SquareMatrix) -> Result<PRange> {
    if a.norm() == 0.0 {
        return Err(Error::InvalidArgument("p-range of the zero matrix is undefined".into()));
    }
    let mu1 = match rotation_form(a) {
        Some(alpha) => alpha.re / alpha.norm(),
        None => first_antieigenvalue(a).mu1,
    };
    Ok(PRange::from_mu1(mu1))
}

/// Smallest eigenvalue of the Hermitian part, i.e. `inf_{|w|=1} Re<w, Mw>`.
pub fn coercivity_constant(m: &SquareMatrix) -> f64 {
    let h = (m.entries() + m.entries().adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone)]
pub struct SimultaneousDiag {
    /// Joint eigenvectors as unit-norm columns.
    pub y: CMat,
    pub y_inv: CMat,
    pub lambda_a: Vec<Complex64>,
    pub lambda_b: Vec<Complex64>,
    pub kappa: f64,
}

pub const DEFAULT_DIAG_TOL: f64 = 1e-10;

/// Joint eigenbasis of commuting diagonalizable `A` and `B`.
pub fn simultaneous_diagonalize(a: &SquareMatrix, b: &SquareMatrix, tol: f64) -> Result<SimultaneousDiag> {
    let (am, bm) = (a.entries(), b.entries());
    if am.nrows() != bm.nrows() {
        return Err(Error::InvalidArgument("matrices have different sizes".into()));
    }
    let n = am.nrows();
    let commutator = dense::frobenius(&(am * bm - bm * am));
    let bound = tol * (a.norm() * b.norm()).max(f64::MIN_POSITIVE);
    if commutator > bound {
        return Err(Error::NotCommuting { commutator, bound });
    }
    let scale = a.norm().max(1.0);
    let mut columns: Vec<CVec> = Vec::with_capacity(n);
    for (lambda, mult) in dense::cluster(&a.eigenvalues(), scale) {
        let shifted = am - CMat::identity(n, n) * lambda;
        let (basis, sigma) = dense::smallest_right_singular_vectors(&shifted, mult);
        if sigma > 1e-6 * scale {
            return Err(Error::Defective { condition: f64::INFINITY });
        }
        // Diagonalize B restricted to the eigenspace (orthonormal basis V: V^H B V).
        let v = CMat::from_columns(&basis);
        let restricted = v.adjoint() * bm * &v;
        let (_, z) = dense::eigen_decompose(&restricted)?;
        let joint = &v * z;
        for col in joint.column_iter() {
            let c: CVec = col.into_owned();
            let norm = c.norm();
            columns.push(c / Complex64::new(norm, 0.0));
        }
    }
    let y = CMat::from_columns(&columns);
    let kappa = dense::cond2(&y);
    if kappa > 1e12 {
        return Err(Error::Defective { condition: kappa });
    }
    let y_inv = dense::inverse(&y)?;
    let da = &y_inv * am * &y;
    let db = &y_inv * bm * &y;
    let lambda_a: Vec<Complex64> = (0..n).map(|k| da[(k, k)]).collect();
    let lambda_b: Vec<Complex64> = (0..n).map(|k| db[(k, k)]).collect();
    Ok(SimultaneousDiag { y, y_inv, lambda_a, lambda_b, kappa })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralConstants {
    pub a_min: f64,
    pub a_max: f64,
    pub a_0: f64,
    pub a_1: f64,
    pub b_0: f64,
    pub kappa: f64,
    pub beta_a: f64,
    pub beta_inf: f64,
    pub gamma_a: f64,
}

/// All constants of the linear theory for the pair `(A, B_inf)` in dimension `d`.
/// `p` enters only through the dissipativity margin `gamma_A`.
pub fn constants_bundle(a: &SquareMatrix, b_inf: &SquareMatrix, d: usize, p: f64) -> Result<SpectralConstants> {
    let sa = spectral_bounds(a)?;
    let b_0 = b_inf.eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let diag = simultaneous_diagonalize(a, b_inf, DEFAULT_DIAG_TOL)?;
    let a_1 = if sa.a_0 > 0.0 {
        (sa.a_max * sa.a_max / (sa.a_min * sa.a_0)).powf(d as f64 / 2.0)
    } else {
        f64::INFINITY
    };
    Ok(SpectralConstants {
        a_min: sa.a_min,
        a_max: sa.a_max,
        a_0: sa.a_0,
        a_1,
        b_0,
        kappa: diag.kappa,
        beta_a: coercivity_constant(a),
        beta_inf: coercivity_constant(b_inf),
        gamma_a: lp_dissipativity_margin(a, p)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionEntry {
    pub pass: bool,
    pub witness: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub conditions: BTreeMap<String, AssumptionEntry>,
}

impl AssumptionReport {
    pub fn get(&self, id: &str) -> Option<&AssumptionEntry> {
        self.conditions.get(id)
    }

    pub fn all_pass(&self) -> bool {
        self.conditions.values().all(|e| e.pass)
    }
}

fn entry(pass: bool, witness: f64, tol: f64) -> AssumptionEntry {
    AssumptionEntry { pass, witness, tol }
}

/// Evaluates A1..A11 for diffusion `a`, skew matrix `s` and the reaction model at `v_inf`.
pub fn assumption_report(
    a: &SquareMatrix,
    s: &DMatrix<f64>,
    model: &dyn ReactionModel,
    v_inf: &[f64],
    p: f64,
) -> AssumptionReport {
    let mut c = BTreeMap::new();
    let tol = DEFAULT_DIAG_TOL;

    let a1 = dense::eigen_decompose(a.entries()).map(|(_, y)| dense::cond2(&y));
    c.insert("A1".into(), entry(a1.is_ok(), a1.unwrap_or(f64::INFINITY), 1e12));

    let a0 = a.eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    c.insert("A2".into(), entry(a0 > 0.0, a0, 0.0));

    let beta_a = coercivity_constant(a);
    c.insert("A3".into(), entry(beta_a > 0.0, beta_a, 0.0));

    let gamma = if p > 1.0 && p.is_finite() { lp_dissipativity_margin(a, p).unwrap_or(f64::NAN) } else { f64::NAN };
    c.insert("A4".into(), entry(gamma > 0.0, gamma, 0.0));

    let mu = first_antieigenvalue(a).mu1 - (p - 2.0).abs() / p;
    c.insert("A5".into(), entry(mu > 0.0, mu, 0.0));

    let skew = if s.is_square() { (s + s.transpose()).amax() } else { f64::INFINITY };
    c.insert("A6".into(), entry(skew <= 1e-14 * s.amax().max(1.0), skew, 1e-14));

    let fd = jacobian_fd_error(model);
    c.insert("A7".into(), entry(fd <= 1e-6, fd, 1e-6));

    let residual = model.f(v_inf).iter().map(|x| x.abs()).fold(0.0, f64::max);
    c.insert("A8".into(), entry(residual <= 1e-12, residual, 1e-12));

    let df = model.df(v_inf);
    let df_mat = SquareMatrix::real(df.clone()).expect("Jacobian is square");
    let a9 = simultaneous_diagonalize(a, &df_mat, tol).map(|d| d.kappa);
    c.insert("A9".into(), entry(a9.is_ok(), a9.unwrap_or(f64::INFINITY), tol));

    let abscissa = df_mat.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    c.insert("A10".into(), entry(abscissa < 0.0, abscissa, 0.0));

    let beta_inf = coercivity_constant(&df_mat.neg());
    c.insert("A11".into(), entry(beta_inf > 0.0, beta_inf, 0.0));

    AssumptionReport { conditions: c }
}

/// Max deviation of `Df` from central differences of `f` at fixed sample points.
fn jacobian_fd_error(model: &dyn ReactionModel) -> f64 {
    let n = model.n_real();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 1..=20u64 {
        let u: Vec<f64> = crate::optimize::halton(i, n).iter().map(|x| 3.0 * (x - 0.5)).collect();
        let jac = model.df(&u);
        for k in 0..n {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += h;
            dn[k] -= h;
            let (fu, fd) = (model.f(&up), model.f(&dn));
            for r in 0..n {
                let approx = (fu[r] - fd[r]) / (2.0 * h);
                worst = worst.max((approx - jac[(r, k)]).abs() / (1.0 + jac[(r, k)].abs()));
            }
        }
    }
    worst
}
