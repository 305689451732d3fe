//! Second-order finite differences on [`Grid2D`] with homogeneous Neumann
//! boundaries (ghost-node reflection).

use nalgebra::DMatrix;

use crate::grid::{Field, Grid2D};
use crate::linalg::CsrMatrix;
use crate::model::ReactionModel;

/// Scalar (single-component) stencils on a grid. Multi-component operators are
/// obtained with [`expand`].
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: Grid2D,
    pub laplacian: CsrMatrix,
    pub d1: CsrMatrix,
    pub d2: CsrMatrix,
    /// Angular derivative `x_2 D_1 - x_1 D_2`.
    pub d12: CsrMatrix,
}

impl Discretization {
    pub fn new(grid: Grid2D) -> Self {
        let n = grid.n();
        let m = grid.nodes();
        let h = grid.dx();
        let (ih2, i2h) = (1.0 / (h * h), 0.5 / h);
        let mut lap = Vec::with_capacity(5 * m);
        let mut d1 = Vec::with_capacity(2 * m);
        let mut d2 = Vec::with_capacity(2 * m);
        for j in 0..n {
            for i in 0..n {
                let k = grid.node(i, j);
                lap.push((k, k, -4.0 * ih2));
                // A missing neighbour is replaced by its mirror image.
                let west = if i == 0 { i + 1 } else { i - 1 };
                let east = if i == n - 1 { i - 1 } else { i + 1 };
                let south = if j == 0 { j + 1 } else { j - 1 };
                let north = if j == n - 1 { j - 1 } else { j + 1 };
                lap.push((k, grid.node(west, j), ih2));
                lap.push((k, grid.node(east, j), ih2));
                lap.push((k, grid.node(i, south), ih2));
                lap.push((k, grid.node(i, north), ih2));
                if i > 0 && i < n - 1 {
                    d1.push((k, grid.node(i + 1, j), i2h));
                    d1.push((k, grid.node(i - 1, j), -i2h));
                }
                if j > 0 && j < n - 1 {
                    d2.push((k, grid.node(i, j + 1), i2h));
                    d2.push((k, grid.node(i, j - 1), -i2h));
                }
            }
        }
        let d1 = CsrMatrix::from_triplets(m, m, d1);
        let d2 = CsrMatrix::from_triplets(m, m, d2);
        let mut d12 = Vec::with_capacity(4 * m);
        for k in 0..m {
            let (x, y) = grid.position(k);
            d12.extend(d1.row(k).map(|(c, v)| (k, c, y * v)));
            d12.extend(d2.row(k).map(|(c, v)| (k, c, -x * v)));
        }
        Discretization {
            grid,
            laplacian: CsrMatrix::from_triplets(m, m, lap),
            d1,
            d2,
            d12: CsrMatrix::from_triplets(m, m, d12),
        }
    }

    /// `<S(x - x_star), grad>` for `S = [[0, s12], [-s12, 0]]`.
    pub fn drift(&self, s12: f64, x_star: [f64; 2]) -> CsrMatrix {
        self.frame_operator(s12, [-s12 * x_star[1], s12 * x_star[0]])
    }

    /// `s12 D12 + tau_1 D1 + tau_2 D2`, the generator of the frozen frame.
    pub fn frame_operator(&self, s12: f64, tau: [f64; 2]) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.d12.nnz() + self.d1.nnz() + self.d2.nnz());
        for (m, c) in [(&self.d12, s12), (&self.d1, tau[0]), (&self.d2, tau[1])] {
            if c != 0.0 {
                t.extend(m.to_triplets().into_iter().map(|(i, j, v)| (i, j, c * v)));
            }
        }
        let n = self.grid.nodes();
        CsrMatrix::from_triplets(n, n, t)
    }

    /// Applies a scalar stencil to every component of an interleaved field vector.
    pub fn apply(&self, op: &CsrMatrix, ncomp: usize, v: &[f64], out: &mut [f64]) {
        for k in 0..op.nrows {
            let o = &mut out[k * ncomp..(k + 1) * ncomp];
            o.iter_mut().for_each(|x| *x = 0.0);
            for (l, a) in op.row(k) {
                for c in 0..ncomp {
                    o[c] += a * v[l * ncomp + c];
                }
            }
        }
    }
}

/// `op (x) block` in the interleaved layout: entry `(k, l)` becomes the block
/// `op[k, l] * block` at rows `k N ..`, columns `l N ..`.
pub fn expand(op: &CsrMatrix, block: &DMatrix<f64>) -> CsrMatrix {
    let nc = block.nrows();
    let mut t = Vec::with_capacity(op.nnz() * nc * nc);
    for k in 0..op.nrows {
        for (l, a) in op.row(k) {
            for r in 0..nc {
                for c in 0..nc {
                    let b = block[(r, c)];
                    if b != 0.0 {
                        t.push((k * nc + r, l * nc + c, a * b));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(op.nrows * nc, op.ncols * nc, t)
}

/// Block diagonal of `Df(v(x_k))` over all nodes.
pub fn reaction_jacobian(model: &dyn ReactionModel, v: &Field) -> CsrMatrix {
    let nc = v.ncomp();
    let m = v.grid().nodes();
    let mut t = Vec::with_capacity(m * nc * nc);
    for k in 0..m {
        let j = model.df(v.at(k));
        for r in 0..nc {
            for c in 0..nc {
                if j[(r, c)] != 0.0 {
                    t.push((k * nc + r, k * nc + c, j[(r, c)]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(m * nc, m * nc, t)
}

/// Operator handles for a frame `(s12, x_star)`, all acting on interleaved vectors.
#[derive(Debug, Clone)]
pub struct OperatorHandles {
    pub laplacian: CsrMatrix,
    pub drift: CsrMatrix,
    pub angular: CsrMatrix,
}

/// `A Lap`, the drift `<S(x - x_star), grad>` and `D12`, expanded to the model's components.
pub fn assemble_discretization(disc: &Discretization, model: &dyn ReactionModel, s12: f64, x_star: [f64; 2]) -> OperatorHandles {
    let a = model.diffusion();
    let id = DMatrix::identity(a.nrows(), a.nrows());
    OperatorHandles {
        laplacian: expand(&disc.laplacian, &a),
        drift: expand(&disc.drift(s12, x_star), &id),
        angular: expand(&disc.d12, &id),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Qcgl;

    fn grid() -> Grid2D {
        Grid2D::new(3.0, 0.25).unwrap()
    }

    fn interior(g: &Grid2D, k: usize) -> bool {
        let (i, j) = (k % g.n(), k / g.n());
        i > 0 && j > 0 && i < g.n() - 1 && j < g.n() - 1
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = grid();
        let d = Discretization::new(g);
        let v: Vec<f64> = (0..g.nodes()).map(|k| g.position(k).0.powi(2)).collect();
        let lv = d.laplacian.mul_vec(&v);
        for k in (0..g.nodes()).filter(|&k| interior(&g, k)) {
            assert!((lv[k] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn neumann_laplacian_structure() {
        let g = Grid2D::new(1.0, 0.25).unwrap();
        let d = Discretization::new(g);
        let ones = vec![1.0; g.nodes()];
        assert!(d.laplacian.mul_vec(&ones).iter().all(|x| x.abs() < 1e-12));
        // Symmetric and negative semidefinite in the trapezoid inner product.
        let l = d.laplacian.to_dense();
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(g.nodes(), |k, _| g.trapezoid_weight(k)));
        let wl = &w * &l;
        assert!((&wl - wl.transpose()).amax() < 1e-10);
        let eig = wl.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&x| x < 1e-9));
    }

    #[test]
    fn angular_derivative_on_radial_fields() {
        let interior_max = |h: f64, f: &dyn Fn(f64) -> f64| {
            let g = Grid2D::new(3.0, h).unwrap();
            let d = Discretization::new(g);
            let v: Vec<f64> = (0..g.nodes())
                .map(|k| {
                    let (x, y) = g.position(k);
                    f(x * x + y * y)
                })
                .collect();
            let a = d.d12.mul_vec(&v);
            (0..g.nodes()).filter(|&k| interior(&g, k)).map(|k| a[k].abs()).fold(0.0, f64::max)
        };
        // Quadratic in r^2: the stencil's truncation term vanishes identically.
        assert!(interior_max(0.25, &|s| s * s - 3.0 * s + 1.0) < 1e-10);
        // General radial fields: second order.
        let gauss = |s: f64| (-s).exp();
        let (e1, e2) = (interior_max(0.25, &gauss), interior_max(0.125, &gauss));
        assert!(e1 / e2 > 3.8 && e2 < 5e-3, "{e1} {e2}");
    }

    #[test]
    fn drift_of_linear_field() {
        let g = grid();
        let d = Discretization::new(g);
        let v: Vec<f64> = (0..g.nodes()).map(|k| g.position(k).0).collect();
        let r = d.drift(1.0, [0.0, 0.0]).mul_vec(&v);
        for k in (0..g.nodes()).filter(|&k| interior(&g, k)) {
            assert!((r[k] - g.position(k).1).abs() < 1e-12);
        }
        // Shifted center: <S(x - x*), grad x_1> = x_2 - x*_2.
        let r = d.drift(0.5, [0.3, -0.2]).mul_vec(&v);
        for k in (0..g.nodes()).filter(|&k| interior(&g, k)) {
            assert!((r[k] - 0.5 * (g.position(k).1 + 0.2)).abs() < 1e-12);
        }
    }

    #[test]
    fn expanded_operators_match_componentwise_application() {
        let g = Grid2D::new(1.0, 0.25).unwrap();
        let d = Discretization::new(g);
        let model = Qcgl::default();
        let h = assemble_discretization(&d, &model, 0.7, [0.1, 0.2]);
        let v: Vec<f64> = (0..2 * g.nodes()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut lap = vec![0.0; v.len()];
        d.apply(&d.laplacian, 2, &v, &mut lap);
        let a = model.diffusion();
        let got = h.laplacian.mul_vec(&v);
        for k in 0..g.nodes() {
            for r in 0..2 {
                let want = a[(r, 0)] * lap[2 * k] + a[(r, 1)] * lap[2 * k + 1];
                assert!((got[2 * k + r] - want).abs() < 1e-12);
            }
        }
    }
}
