//! Shift-invert Arnoldi in real arithmetic with full reorthogonalization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::dense::{self, CMat, CVec};
use crate::linalg::{BandedLu, CsrMatrix, Ordering};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub lambda: Complex64,
    /// Eigenvector in the operator's layout, normalized so that its first
    /// largest-modulus entry equals 1.
    #[serde(skip)]
    pub vector: Vec<Complex64>,
    /// `||(L - lambda) v|| / ||v||`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Pairs nearest the shift, sorted by `|lambda - sigma|`.
    pub pairs: Vec<EigenPair>,
    /// False when fewer than the requested number of pairs met the tolerance.
    pub complete: bool,
    pub converged: usize,
    pub krylov_dim: usize,
}

pub fn default_krylov_dim(neigs: usize) -> usize {
    4 * neigs + 20
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Deterministic, non-symmetric start vector.
fn start_vector(n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_7).sin()).collect();
    let s = norm(&v);
    v.into_iter().map(|x| x / s).collect()
}

/// Eigenvector of a small complex matrix for a computed eigenvalue, by two steps
/// of inverse iteration with a slightly perturbed shift.
fn small_eigenvector(h: &CMat, theta: Complex64) -> CVec {
    let n = h.nrows();
    let scale = dense::frobenius(h).max(1e-300);
    let shift = theta + Complex64::new(1e-13 * scale, 1e-13 * scale);
    let lu = (h - CMat::identity(n, n) * shift).lu();
    let mut y = CVec::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.37).cos() * 0.1, 0.0));
    for _ in 0..3 {
        y = match lu.solve(&y) {
            Some(z) => z,
            None => break,
        };
        let s = y.norm();
        if s > 0.0 && s.is_finite() {
            y /= Complex64::new(s, 0.0);
        }
    }
    y
}

/// Scales `v` so that its first entry of maximal modulus becomes exactly 1.
pub fn normalize_vector(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let k = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-12)).unwrap_or(0);
    let p = v[k];
    v.iter_mut().for_each(|z| *z /= p);
    v[k] = Complex64::new(1.0, 0.0);
}

/// `||(L - lambda) v|| / ||v||` over the rows selected by `mask` (all rows if `None`).
pub fn residual(op: &CsrMatrix, lambda: Complex64, v: &[Complex64], mask: Option<&[bool]>) -> f64 {
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    let (lr, li) = (op.mul_vec(&re), op.mul_vec(&im));
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..v.len() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        let r = Complex64::new(lr[i], li[i]) - lambda * v[i];
        num += r.norm_sqr();
        den += v[i].norm_sqr();
    }
    if den == 0.0 {
        return f64::INFINITY;
    }
    (num / den).sqrt()
}

/// Eigenvalues of `op` nearest the real shift `sigma`, from Arnoldi on `(op - sigma I)^{-1}`.
pub fn shift_invert_eigs(op: &CsrMatrix, sigma: f64, neigs: usize, krylov_dim: Option<usize>, tol: f64) -> Result<EigenResult> {
    let n = op.nrows;
    if neigs == 0 || n == 0 {
        return Err(Error::InvalidArgument("need at least one eigenvalue of a nonempty operator".into()));
    }
    let m = krylov_dim.unwrap_or_else(|| default_krylov_dim(neigs)).min(n).max(neigs.min(n));
    let shifted = op.linear_combination(1.0, &CsrMatrix::identity(n), -sigma);
    let lu = BandedLu::factor(&shifted, Ordering::Auto).map_err(|e| match e {
        Error::SingularPivot { column } => Error::Numerical(format!(
            "LU of L - sigma I broke down at column {column}; sigma = {sigma} is (close to) an eigenvalue, perturb it"
        )),
        other => other,
    })?;

    let mut basis: Vec<Vec<f64>> = vec![start_vector(n)];
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    let mut steps = m;
    for j in 0..m {
        let mut w = lu.solve(&basis[j]);
        // Classical Gram-Schmidt, applied twice.
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                h[(i, j)] += c;
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = norm(&w);
        h[(j + 1, j)] = beta;
        if beta <= 1e-14 * h.column(j).norm() {
            // Invariant subspace found.
            steps = j + 1;
            break;
        }
        if j + 1 < m {
            basis.push(w.into_iter().map(|x| x / beta).collect());
        }
    }
    let hm = h.view((0, 0), (steps, steps)).into_owned();
    let beta_last = h[(steps, steps - 1)];
    let thetas = dense::real_eigenvalues(&hm);
    let hc = dense::to_complex(&hm);

    let mut cands: Vec<(Complex64, CVec, f64)> = thetas
        .into_iter()
        .filter(|t| t.norm() > 0.0)
        .map(|theta| {
            let y = small_eigenvector(&hc, theta);
            let est = beta_last * y[steps - 1].norm() / theta.norm();
            (theta, y, est)
        })
        .collect();
    // Largest |theta| is nearest sigma; ties broken by imaginary part.
    cands.sort_by(|a, b| {
        let (la, lb) = (Complex64::new(sigma, 0.0) + a.0.inv(), Complex64::new(sigma, 0.0) + b.0.inv());
        (la - sigma).norm().total_cmp(&(lb - sigma).norm()).then(lb.im.total_cmp(&la.im))
    });
    let mut take = neigs.min(cands.len());
    // Keep conjugate pairs together.
    if take < cands.len() && take > 0 {
        let last = cands[take - 1].0;
        if last.im.abs() > 0.0 && (cands[take].0 - last.conj()).norm() <= 1e-10 * last.norm() {
            take += 1;
        }
    }
    let converged = cands.iter().take(take).filter(|c| c.2 <= tol).count();
    let mut pairs = Vec::with_capacity(take);
    for (theta, y, _) in cands.into_iter().take(take) {
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (k, q) in basis.iter().enumerate().take(steps) {
            let yk = y[k];
            x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += yk * qi);
        }
        normalize_vector(&mut x);
        let lambda = Complex64::new(sigma, 0.0) + theta.inv();
        let r = residual(op, lambda, &x, None);
        pairs.push(EigenPair { lambda, vector: x, residual: r });
    }
    Ok(EigenResult { complete: converged >= neigs.min(n), converged, pairs, krylov_dim: steps })
}

/// Dense oracle: all eigenvalues of a small operator.
pub fn dense_eigenvalues(op: &CsrMatrix) -> Vec<Complex64> {
    dense::real_eigenvalues(&op.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let n = 30;
        let m = CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, (i + 1) as f64)).collect());
        let r = shift_invert_eigs(&m, 0.0, 5, None, 1e-10).unwrap();
        let got: Vec<f64> = r.pairs.iter().map(|p| p.lambda.re).collect();
        for (g, w) in got.iter().zip([1.0, 2.0, 3.0, 4.0, 5.0]) {
            assert!((g - w).abs() < 1e-12, "{got:?}");
        }
        assert!(r.complete);
        assert!(r.pairs.iter().all(|p| p.residual < 1e-10));
    }

    #[test]
    fn rotation_blocks_give_conjugate_pairs() {
        // Blocks [[a, b], [-b, a]] have eigenvalues a +- ib.
        let mut t = Vec::new();
        for k in 0..20 {
            let (a, b) = (-(k as f64) * 0.3, 1.0 + 0.1 * k as f64);
            let i = 2 * k;
            t.extend([(i, i, a), (i, i + 1, b), (i + 1, i, -b), (i + 1, i + 1, a)]);
        }
        // A weak coupling makes it non-normal.
        for i in 0..39 {
            t.push((i, i + 1, 0.01));
        }
        let m = CsrMatrix::from_triplets(40, 40, t);
        let r = shift_invert_eigs(&m, 0.5, 6, None, 1e-10).unwrap();
        let dense = dense_eigenvalues(&m);
        for p in &r.pairs {
            assert!(dense.iter().any(|z| (z - p.lambda).norm() < 1e-9));
            assert!(r.pairs.iter().any(|q| (q.lambda - p.lambda.conj()).norm() < 1e-10));
            let k = p.vector.iter().position(|z| *z == Complex64::new(1.0, 0.0));
            assert!(k.is_some());
        }
    }

    #[test]
    fn shift_on_an_eigenvalue_is_reported() {
        let m = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]);
        let err = shift_invert_eigs(&m, 2.0, 1, None, 1e-10).unwrap_err();
        assert!(err.to_string().contains("perturb"));
    }
}
