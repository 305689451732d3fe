//! Eigenfunctions forced by Euclidean equivariance: for a rotating wave `w` with
//! generator `S`, the fields `<C x + c, grad w>` are eigenfunctions on the imaginary axis.
//!
//! Translations: `L <c, grad w> = -<S c, grad w>`, so `S c = -lambda c`.
//! Rotations: `L <C x, grad w> = <[C, S] x, grad w>`, so `[C, S] = lambda C`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::arnoldi::normalize_vector;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::linalg::dense::{self, CMat, CVec};
use crate::pde::Discretization;

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub lambda: Complex64,
    pub c_rot: CMat,
    pub c_tra: CVec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryBasis {
    /// Unitary with `conj(U)^T S U = diag(lambda_s)`.
    pub u: CMat,
    pub lambda_s: Vec<Complex64>,
    pub generators: Vec<Generator>,
}

/// Orthonormal eigenbasis of a real skew-symmetric matrix and the generator list
/// `lambda = -lambda_l` (translations), `lambda = -(lambda_n + lambda_m)` (rotations).
pub fn symmetry_basis(s: &DMatrix<f64>) -> Result<SymmetryBasis> {
    let d = s.nrows();
    if !s.is_square() || d < 2 {
        return Err(Error::InvalidArgument("S must be a square matrix of dimension >= 2".into()));
    }
    if (s + s.transpose()).amax() > 1e-12 * s.amax().max(1.0) {
        return Err(Error::InvalidArgument("S is not skew-symmetric".into()));
    }
    let sc = dense::to_complex(s);
    let (vals, y) = dense::eigen_decompose(&sc)?;
    // Skew matrices are normal; QR restores orthonormality inside eigenvalue clusters.
    let u = y.qr().q();
    let t = u.adjoint() * &sc * &u;
    let lambda_s: Vec<Complex64> = (0..d).map(|i| t[(i, i)]).collect();
    debug_assert_eq!(vals.len(), d);
    let mut generators = Vec::new();
    for l in 0..d {
        generators.push(Generator { lambda: -lambda_s[l], c_rot: CMat::zeros(d, d), c_tra: u.column(l).into_owned() });
    }
    for n in 0..d - 1 {
        for m in n + 1..d {
            let mut e = CMat::zeros(d, d);
            e[(n, m)] = Complex64::new(1.0, 0.0);
            e[(m, n)] = Complex64::new(-1.0, 0.0);
            generators.push(Generator {
                lambda: -(lambda_s[n] + lambda_s[m]),
                c_rot: &u * e * u.transpose(),
                c_tra: CVec::zeros(d),
            });
        }
    }
    Ok(SymmetryBasis { u, lambda_s, generators })
}

/// Eigenvalue of the mode `<C x + c, grad w>`, or `None` if `(C, c)` is not an eigen-direction.
pub fn mode_eigenvalue(s: &DMatrix<f64>, c_rot: &CMat, c_tra: &CVec) -> Option<Complex64> {
    let sc = dense::to_complex(s);
    let rot = c_rot * &sc - &sc * c_rot;
    let tra = -(&sc * c_tra);
    // Least-squares lambda from both relations, then verify.
    let num: Complex64 = c_rot.iter().zip(rot.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>()
        + c_tra.iter().zip(tra.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let den = c_rot.iter().map(|z| z.norm_sqr()).sum::<f64>() + c_tra.norm_squared();
    if den == 0.0 {
        return None;
    }
    let lambda = num / den;
    let err = dense::frobenius(&(rot - c_rot * lambda)) + (tra - c_tra * lambda).norm();
    (err <= 1e-10 * den.sqrt() * s.amax().max(1.0)).then_some(lambda)
}

/// Skew matrix from upper-triangular entries `[S12]` or `[S12, S13, S23]`.
pub fn skew_from_entries(entries: &[f64]) -> Result<DMatrix<f64>> {
    match *entries {
        [s12] => Ok(DMatrix::from_row_slice(2, 2, &[0.0, s12, -s12, 0.0])),
        [s12, s13, s23] => Ok(DMatrix::from_row_slice(3, 3, &[0.0, s12, s13, -s12, 0.0, s23, -s13, -s23, 0.0])),
        _ => Err(Error::InvalidArgument(format!("expected 1 or 3 generator entries, got {}", entries.len()))),
    }
}

/// A listed d = 3 mode: coefficients of `(D^{12}, D^{13}, D^{23})` and `(D_1, D_2, D_3)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListedMode {
    pub lambda: Complex64,
    pub rot: [Complex64; 3],
    pub tra: [Complex64; 3],
}

impl ListedMode {
    fn c_rot(&self) -> CMat {
        let [a, b, c] = self.rot;
        let z = Complex64::new(0.0, 0.0);
        CMat::from_row_slice(3, 3, &[z, a, b, -a, z, c, -b, -c, z])
    }

    /// Combines derivative fields `[D12 w, D13 w, D23 w, D1 w, D2 w, D3 w]` (equal lengths).
    pub fn combine(&self, derivs: &[Vec<f64>; 6]) -> Vec<Complex64> {
        let coef = [self.rot[0], self.rot[1], self.rot[2], self.tra[0], self.tra[1], self.tra[2]];
        (0..derivs[0].len()).map(|i| coef.iter().zip(derivs).map(|(c, d)| c * d[i]).sum()).collect()
    }
}

/// The six modes of a spinning wave in three dimensions, built from the entries of S.
/// Each eigenvalue is recomputed from the equivariance relations rather than assumed:
/// the `D_1 + ... ` modes carry `+i sigma_1` for the upper sign, the angular ones `-i sigma_1`.
pub fn listed_modes_3d(s12: f64, s13: f64, s23: f64) -> Result<Vec<ListedMode>> {
    let s = skew_from_entries(&[s12, s13, s23])?;
    let sigma1 = (s12 * s12 + s13 * s13 + s23 * s23).sqrt();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let z = c(0.0, 0.0);
    let q = s13 * s13 + s23 * s23;
    let mut modes = vec![
        ListedMode { lambda: z, rot: [c(s12, 0.0), c(s13, 0.0), c(s23, 0.0)], tra: [z; 3] },
        ListedMode { lambda: z, rot: [z; 3], tra: [c(s23, 0.0), c(-s13, 0.0), c(s12, 0.0)] },
    ];
    for sign in [1.0, -1.0] {
        modes.push(ListedMode {
            lambda: z,
            rot: [z; 3],
            tra: [c(sigma1 * s13, sign * s12 * s23), c(sigma1 * s23, -sign * s12 * s13), c(0.0, -sign * q)],
        });
    }
    for sign in [1.0, -1.0] {
        modes.push(ListedMode {
            lambda: z,
            rot: [c(-q, 0.0), -c(-s12 * s13, sign * sigma1 * s23), c(s12 * s23, sign * sigma1 * s13)],
            tra: [z; 3],
        });
    }
    for m in &mut modes {
        let tra = CVec::from_row_slice(&m.tra);
        m.lambda = mode_eigenvalue(&s, &m.c_rot(), &tra)
            .ok_or_else(|| Error::Numerical("listed mode is not an eigen-direction of S".into()))?;
    }
    Ok(modes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryMode {
    pub label: String,
    pub lambda: Complex64,
    /// Interleaved complex field, normalized like the Arnoldi vectors.
    pub vector: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryModes {
    pub modes: Vec<SymmetryMode>,
    /// Generators whose field vanishes in the interior (e.g. rotations of a radial profile).
    pub degenerate: Vec<String>,
}

/// Planar symmetry eigenfunctions of a frozen profile centered at `x_star`.
pub fn symmetry_eigenpairs(disc: &Discretization, profile: &Field, s12: f64, x_star: [f64; 2]) -> Result<SymmetryModes> {
    let s = skew_from_entries(&[s12])?;
    let basis = symmetry_basis(&s)?;
    let nc = profile.ncomp();
    let len = profile.values().len();
    let (mut d1, mut d2) = (vec![0.0; len], vec![0.0; len]);
    disc.apply(&disc.d1, nc, profile.values(), &mut d1);
    disc.apply(&disc.d2, nc, profile.values(), &mut d2);
    let scale = (d1.iter().chain(&d2).map(|x| x * x).sum::<f64>()).sqrt();
    let g = disc.grid;
    let mut modes = Vec::new();
    let mut degenerate = Vec::new();
    for (idx, gen) in basis.generators.iter().enumerate() {
        let label = if idx < 2 { format!("translation {}", idx + 1) } else { "rotation".to_string() };
        let mut v = vec![Complex64::new(0.0, 0.0); len];
        for k in 0..g.nodes() {
            let (x, y) = g.position(k);
            let r = [x - x_star[0], y - x_star[1]];
            let a1 = gen.c_rot[(0, 0)] * r[0] + gen.c_rot[(0, 1)] * r[1] + gen.c_tra[0];
            let a2 = gen.c_rot[(1, 0)] * r[0] + gen.c_rot[(1, 1)] * r[1] + gen.c_tra[1];
            for c in 0..nc {
                v[k * nc + c] = a1 * d1[k * nc + c] + a2 * d2[k * nc + c];
            }
        }
        // Boundary rows carry one-sided stencil artifacts; judge degeneracy on the interior.
        let n = g.n();
        let norm = (0..g.nodes())
            .filter(|k| (1..n - 1).contains(&(k % n)) && (1..n - 1).contains(&(k / n)))
            .flat_map(|k| v[k * nc..(k + 1) * nc].iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !(norm > 1e-8 * scale) {
            degenerate.push(label);
            continue;
        }
        normalize_vector(&mut v);
        modes.push(SymmetryMode { label, lambda: gen.lambda, vector: v });
    }
    Ok(SymmetryModes { modes, degenerate })
}
