//! Linearization `A Lap + <S(x - x_star), grad> + Df(w_star)` about a frozen profile.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::linalg::CsrMatrix;
use crate::model::ReactionModel;
use crate::pde::{expand, reaction_jacobian, Discretization};

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub matrix: CsrMatrix,
    pub grid: Grid2D,
    pub ncomp: usize,
    pub s12: f64,
    pub x_star: [f64; 2],
}

impl LinearizedOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    /// Row mask selecting nodes with `|x| <= R - collar`.
    pub fn interior_mask(&self, collar: f64) -> Vec<bool> {
        let r = self.grid.half_width() - collar;
        (0..self.dim())
            .map(|i| {
                let (x, y) = self.grid.position(i / self.ncomp);
                (x * x + y * y).sqrt() <= r
            })
            .collect()
    }
}

pub fn assemble_linearization(
    model: &dyn ReactionModel,
    disc: &Discretization,
    profile: &Field,
    s12: f64,
    x_star: [f64; 2],
) -> Result<LinearizedOperator> {
    let nc = model.n_real();
    if profile.ncomp() != nc || *profile.grid() != disc.grid {
        return Err(Error::InvalidArgument("profile does not match the model or grid".into()));
    }
    let lap = expand(&disc.laplacian, &model.diffusion());
    let drift = expand(&disc.drift(s12, x_star), &DMatrix::identity(nc, nc));
    let jac = reaction_jacobian(model, profile);
    let matrix = lap.linear_combination(1.0, &drift, 1.0).linear_combination(1.0, &jac, 1.0);
    Ok(LinearizedOperator { matrix, grid: disc.grid, ncomp: nc, s12, x_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Qcgl;
    use crate::pde::{assemble_discretization, vortex_seed};

    #[test]
    fn zero_profile_maps_constants_to_far_field_jacobian() {
        let g = Grid2D::new(2.0, 0.25).unwrap();
        let d = Discretization::new(g);
        let m = Qcgl::default();
        let op = assemble_linearization(&m, &d, &Field::zeros(g, 2), 1.0286, [0.01, -0.02]).unwrap();
        let c: Vec<f64> = (0..op.dim()).map(|i| if i % 2 == 0 { 0.3 } else { -0.7 }).collect();
        let out = op.matrix.mul_vec(&c);
        // Df(0) = -I/2; drift and Laplacian annihilate constants (D1, D2 vanish on boundary rows too).
        for (o, x) in out.iter().zip(&c) {
            assert!((o + 0.5 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn equals_sum_of_operator_handles() {
        let g = Grid2D::new(2.0, 0.25).unwrap();
        let d = Discretization::new(g);
        let m = Qcgl::default();
        let w = vortex_seed(g);
        let op = assemble_linearization(&m, &d, &w, 0.9, [0.1, 0.0]).unwrap();
        let h = assemble_discretization(&d, &m, 0.9, [0.1, 0.0]);
        let v: Vec<f64> = (0..op.dim()).map(|i| (i as f64 * 0.731).cos()).collect();
        let a = op.matrix.mul_vec(&v);
        let (l, dr) = (h.laplacian.mul_vec(&v), h.drift.mul_vec(&v));
        let j = reaction_jacobian(&m, &w).mul_vec(&v);
        for i in 0..v.len() {
            assert!((a[i] - (l[i] + dr[i] + j[i])).abs() < 1e-12 * (1.0 + a[i].abs()));
        }
    }

    #[test]
    fn manufactured_action_is_second_order() {
        let m = Qcgl::default();
        let err = |h: f64| {
            let g = Grid2D::new(4.0, h).unwrap();
            let d = Discretization::new(g);
            let w = Field::from_fn(g, 2, |x, y| vec![0.3 * (-(x * x + y * y) / 4.0).exp(), 0.1 * x]);
            let xs = [0.2, -0.1];
            let s12 = 0.8;
            let op = assemble_linearization(&m, &d, &w, s12, xs).unwrap();
            // Test field v = (e^{-|x|^2/2} x_1, 0).
            let v: Vec<f64> = (0..g.nodes())
                .flat_map(|k| {
                    let (x, y) = g.position(k);
                    [x * (-(x * x + y * y) / 2.0).exp(), 0.0]
                })
                .collect();
            let lv = op.matrix.mul_vec(&v);
            let a = m.diffusion();
            let mut worst: f64 = 0.0;
            for k in 0..g.nodes() {
                let (x, y) = g.position(k);
                if x.abs() > 3.0 || y.abs() > 3.0 {
                    continue;
                }
                let e = (-(x * x + y * y) / 2.0).exp();
                let u = x * e;
                let lap = (x * x * x + x * y * y - 4.0 * x) * e;
                let (ux, uy) = ((1.0 - x * x) * e, -x * y * e);
                let drift = s12 * ((y - xs[1]) * ux - (x - xs[0]) * uy);
                let jm = m.df(w.at(k));
                for r in 0..2 {
                    let exact = a[(r, 0)] * lap + if r == 0 { drift } else { 0.0 } + jm[(r, 0)] * u;
                    worst = worst.max((lv[2 * k + r] - exact).abs());
                }
            }
            worst
        };
        let (e1, e2) = (err(0.2), err(0.1));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }
}
