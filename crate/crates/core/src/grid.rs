//! Uniform square grids and multi-component fields on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square grid `[-R, R]^2` with `n = 2R/dx + 1` nodes per axis (always odd, so the
/// origin is a node). Node `(i, j)` sits at `(-R + i dx, -R + j dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    half_width: f64,
    dx: f64,
    n: usize,
}

impl Grid2D {
    pub fn new(half_width: f64, dx: f64) -> Result<Self> {
        if !(half_width > 0.0 && dx > 0.0 && half_width.is_finite() && dx.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid needs R > 0 and dx > 0 (R = {half_width}, dx = {dx})")));
        }
        let cells = half_width / dx;
        if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::InvalidArgument(format!("R = {half_width} is not a multiple of dx = {dx}")));
        }
        let n = 2 * cells.round() as usize + 1;
        if n < 3 {
            return Err(Error::InvalidArgument("grid needs at least 3 nodes per axis".into()));
        }
        Ok(Grid2D { half_width, dx, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn position(&self, k: usize) -> (f64, f64) {
        (self.coord(k % self.n), self.coord(k / self.n))
    }

    /// Tensor trapezoid weight of node `k`.
    pub fn trapezoid_weight(&self, k: usize) -> f64 {
        let edge = |i: usize| if i == 0 || i == self.n - 1 { 0.5 } else { 1.0 };
        edge(k % self.n) * edge(k / self.n) * self.dx * self.dx
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let r = self.half_width * (1.0 + 1e-12);
        x.abs() <= r && y.abs() <= r
    }
}

/// Real field with `ncomp` interleaved components per node: entry `(k, c)` is at `k * ncomp + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid2D,
    ncomp: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid2D, ncomp: usize) -> Self {
        Field { grid, ncomp, values: vec![0.0; grid.nodes() * ncomp] }
    }

    pub fn from_values(grid: Grid2D, ncomp: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() * ncomp {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid expects {}",
                values.len(),
                grid.nodes() * ncomp
            )));
        }
        Ok(Field { grid, ncomp, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> Vec<f64>>(grid: Grid2D, ncomp: usize, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.nodes() * ncomp);
        for k in 0..grid.nodes() {
            let (x, y) = grid.position(k);
            let v = f(x, y);
            debug_assert_eq!(v.len(), ncomp);
            values.extend_from_slice(&v);
        }
        Field { grid, ncomp, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.ncomp..(k + 1) * self.ncomp]
    }

    pub fn magnitude(&self, k: usize) -> f64 {
        self.at(k).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.nodes()).map(|k| self.magnitude(k)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<Vec<f64>> {
        if !self.grid.contains(x, y) {
            return None;
        }
        let g = &self.grid;
        let last = g.n() - 1;
        let fx = ((x + g.half_width()) / g.dx()).clamp(0.0, last as f64);
        let fy = ((y + g.half_width()) / g.dx()).clamp(0.0, last as f64);
        let i = (fx.floor() as usize).min(last - 1);
        let j = (fy.floor() as usize).min(last - 1);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let corners = [
            (g.node(i, j), (1.0 - tx) * (1.0 - ty)),
            (g.node(i + 1, j), tx * (1.0 - ty)),
            (g.node(i, j + 1), (1.0 - tx) * ty),
            (g.node(i + 1, j + 1), tx * ty),
        ];
        let mut out = vec![0.0; self.ncomp];
        for (k, w) in corners {
            for (o, v) in out.iter_mut().zip(self.at(k)) {
                *o += w * v;
            }
        }
        Some(out)
    }

    /// Discrete L^2 norm with trapezoid weights.
    pub fn l2_norm(&self) -> f64 {
        (0..self.grid.nodes())
            .map(|k| self.grid.trapezoid_weight(k) * self.at(k).iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}
