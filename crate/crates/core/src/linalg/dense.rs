//! Small dense complex helpers on top of nalgebra (N <= 16 in practice).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative gap under which two computed eigenvalues are treated as one cluster.
const CLUSTER_TOL: f64 = 1e-7;

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let schur = m.clone().schur();
    match schur.eigenvalues() {
        Some(v) => v.iter().copied().collect(),
        None => {
            let (_, t) = schur.unpack();
            (0..n).map(|i| t[(i, i)]).collect()
        }
    }
}

/// Eigenvalues of a real matrix (complex pairs from the real Schur form).
pub fn real_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.clone().schur().complex_eigenvalues().iter().copied().collect()
}

/// Singular values sorted in decreasing order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// 2-norm condition number; infinite for singular matrices.
pub fn cond2(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    let s = singular_values(m);
    let smallest = s.last().copied().unwrap_or(0.0);
    let largest = s.first().copied().unwrap_or(0.0);
    if smallest <= 1e-14 * largest.max(f64::MIN_POSITIVE) {
        return Err(Error::NotInvertible { smallest_singular_value: smallest });
    }
    m.clone().try_inverse().ok_or(Error::NotInvertible { smallest_singular_value: smallest })
}

/// Orthonormal basis (columns) of the right singular vectors whose singular values
/// are the `k` smallest ones. Returns the basis and the k-th smallest singular value.
pub fn smallest_right_singular_vectors(m: &CMat, k: usize) -> (Vec<CVec>, f64) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let picked = &order[..k.min(order.len())];
    let vecs = picked
        .iter()
        .map(|&i| DVector::from_iterator(n, v_t.row(i).iter().map(|z| z.conj())))
        .collect();
    let sigma_k = picked.last().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    (vecs, sigma_k)
}

/// Eigen-decomposition `m = Y diag(lambda) Y^-1` with unit-norm columns.
///
/// Eigenvalues are grouped into clusters; a cluster of multiplicity `k` must have a
/// `k`-dimensional null space of `m - lambda I`, otherwise the matrix is defective.
pub fn eigen_decompose(m: &CMat) -> Result<(Vec<Complex64>, CMat)> {
    let n = m.nrows();
    let scale = frobenius(m).max(1.0);
    let clusters = cluster(&eigenvalues(m), scale);
    let mut values = Vec::with_capacity(n);
    let mut columns: Vec<CVec> = Vec::with_capacity(n);
    for (lambda, mult) in clusters {
        let shifted = m - CMat::identity(n, n) * lambda;
        let (vecs, sigma) = smallest_right_singular_vectors(&shifted, mult);
        if sigma > 1e-6 * scale {
            return Err(Error::Defective { condition: f64::INFINITY });
        }
        for v in vecs {
            values.push(lambda);
            columns.push(v);
        }
    }
    let y = CMat::from_columns(&columns);
    let condition = cond2(&y);
    if condition > 1e12 {
        return Err(Error::Defective { condition });
    }
    Ok((values, y))
}

/// Groups eigenvalues closer than `CLUSTER_TOL * scale`; returns (mean, multiplicity).
pub fn cluster(values: &[Complex64], scale: f64) -> Vec<(Complex64, usize)> {
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    'outer: for v in sorted {
        for (mean, k) in out.iter_mut() {
            if (*mean - v).norm() <= CLUSTER_TOL * scale {
                *mean = (*mean * (*k as f64) + v) / (*k as f64 + 1.0);
                *k += 1;
                continue 'outer;
            }
        }
        out.push((v, 1));
    }
    out
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(m: &CMat) -> CMat {
    let n = m.nrows();
    let norm = frobenius(m);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
        if frobenius(&term) < 1e-18 * frobenius(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
