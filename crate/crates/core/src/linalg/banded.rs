//! Banded LU with partial pivoting (a port of LAPACK gbtf2/gbtrs) on top of an
//! optional bandwidth-reducing symmetric permutation.

use super::rcm::reverse_cuthill_mckee;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    Natural,
    Rcm,
    /// Whichever of the two gives the narrower band.
    #[default]
    Auto,
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    /// Column-major band storage; entry (i, j) sits at `kl + ku + i - j + j * ldab`.
    ab: Vec<f64>,
    ipiv: Vec<usize>,
    perm: Option<Vec<usize>>,
}

impl BandedLu {
    pub fn factor(m: &CsrMatrix, ordering: Ordering) -> Result<Self> {
        if m.nrows != m.ncols {
            return Err(Error::InvalidArgument(format!("matrix is {}x{}, not square", m.nrows, m.ncols)));
        }
        let perm = match ordering {
            Ordering::Natural => None,
            Ordering::Rcm => Some(reverse_cuthill_mckee(m)),
            Ordering::Auto => {
                let p = reverse_cuthill_mckee(m);
                let (a, b) = m.bandwidths(None);
                let (c, d) = m.bandwidths(Some(&p));
                if 2 * c + d < 2 * a + b {
                    Some(p)
                } else {
                    None
                }
            }
        };
        let (kl, ku) = m.bandwidths(perm.as_deref());
        let n = m.nrows;
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        let inv = perm.as_ref().map(|p| super::sparse::invert_permutation(p));
        let map = |k: usize| inv.as_ref().map_or(k, |p| p[k]);
        for i in 0..n {
            for (j, v) in m.row(i) {
                let (pi, pj) = (map(i), map(j));
                ab[kv + pi - pj + pj * ldab] += v;
            }
        }
        let mut lu = BandedLu { n, kl, ku, ldab, ab, ipiv: vec![0; n], perm };
        lu.factorize()?;
        Ok(lu)
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn factorize(&mut self) -> Result<()> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        let ab = &mut self.ab;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = kv + j * ldab;
            let mut jp = 0;
            let mut best = ab[col].abs();
            for r in 1..=km {
                if ab[col + r].abs() > best {
                    best = ab[col + r].abs();
                    jp = r;
                }
            }
            self.ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::SingularPivot { column: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(kv + j + jp - c + c * ldab, kv + j - c + c * ldab);
                }
            }
            if km > 0 {
                let inv = 1.0 / ab[col];
                for r in 1..=km {
                    ab[col + r] *= inv;
                }
                for c in j + 1..=ju {
                    let u = ab[kv + j - c + c * ldab];
                    if u != 0.0 {
                        let base = kv + j - c + c * ldab;
                        for r in 1..=km {
                            ab[base + r] -= ab[col + r] * u;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = match &self.perm {
            Some(p) => p.iter().map(|&old| b[old]).collect(),
            None => b.to_vec(),
        };
        self.solve_permuted(&mut y);
        match &self.perm {
            Some(p) => {
                for (new, &old) in p.iter().enumerate() {
                    b[old] = y[new];
                }
            }
            None => b.copy_from_slice(&y),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    fn solve_permuted(&self, b: &mut [f64]) {
        let (n, kl, ldab) = (self.n, self.kl, self.ldab);
        let kv = self.kl + self.ku;
        let ab = &self.ab;
        if kl > 0 {
            for j in 0..n {
                let lm = kl.min(n - 1 - j);
                let l = self.ipiv[j];
                if l != j {
                    b.swap(l, j);
                }
                let bj = b[j];
                if bj != 0.0 {
                    let col = kv + j * ldab;
                    for r in 1..=lm {
                        b[j + r] -= ab[col + r] * bj;
                    }
                }
            }
        }
        for j in (0..n).rev() {
            if b[j] != 0.0 {
                b[j] /= ab[kv + j * ldab];
                let t = b[j];
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    b[i] -= t * ab[kv + i - j + j * ldab];
                }
            }
        }
    }
}
