//! IMEX time integration of `u_t = A Lap u + f(u)`: diffusion implicit through a
//! pre-factored banded system, reaction explicit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::discretization::{expand, Discretization};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::linalg::{BandedLu, CsrMatrix, Ordering};
use crate::model::ReactionModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImexEuler,
    #[default]
    ImexBdf2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Reserved; the IMEX schemes solve no nonlinear systems.
    pub newton_tol: f64,
    /// Reserved; linear systems are solved directly.
    pub linear_tol: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig { dt: 0.05, scheme: Scheme::ImexBdf2, t_end: 150.0, newton_tol: 1e-8, linear_tol: 1e-10 }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        Ok(())
    }

    /// Number of steps and the uniform step that lands exactly on `t_end`.
    pub fn steps(&self) -> (usize, f64) {
        let n = ((self.t_end / self.dt) - 1e-9).ceil().max(0.0) as usize;
        if n == 0 {
            (0, self.dt)
        } else {
            (n, self.t_end / n as f64)
        }
    }
}

/// Explicit drift with velocity `c` is stable for `dt <= dx / (|c| R sqrt(2))`.
pub fn drift_cfl_limit(grid: &Grid2D, s12: f64) -> f64 {
    grid.dx() / (s12.abs() * grid.half_width() * std::f64::consts::SQRT_2)
}

/// `u_0 = (x_1 + i x_2) exp(-|x|^2 / 49) / 5` in real form.
pub fn vortex_seed(grid: Grid2D) -> Field {
    Field::from_fn(grid, 2, |x, y| {
        let g = (-(x * x + y * y) / 49.0).exp() / 5.0;
        vec![x * g, y * g]
    })
}

/// Evaluates the reaction nodewise.
pub(crate) fn reaction(model: &dyn ReactionModel, ncomp: usize, v: &[f64], out: &mut [f64]) {
    for (vi, oi) in v.chunks_exact(ncomp).zip(out.chunks_exact_mut(ncomp)) {
        model.f_into(vi, oi);
    }
}

pub(crate) fn check_finite(v: &[f64], t: f64) -> Result<()> {
    if v.iter().any(|x| !x.is_finite() || x.abs() > 1e8) {
        return Err(Error::BlowUp { time: t });
    }
    Ok(())
}

/// Factors `I - c M`.
pub(crate) fn factor_shifted(m: &CsrMatrix, c: f64) -> Result<BandedLu> {
    let id = CsrMatrix::identity(m.nrows);
    BandedLu::factor(&id.linear_combination(1.0, m, -c), Ordering::Auto)
}

/// Integrates `u_t = A Lap u + f(u)` with homogeneous Neumann boundaries up to `cfg.t_end`.
pub fn simulate(model: &dyn ReactionModel, disc: &Discretization, u0: &Field, cfg: &StepperConfig) -> Result<Field> {
    cfg.validate()?;
    let nc = model.n_real();
    if u0.ncomp() != nc || *u0.grid() != disc.grid {
        return Err(Error::InvalidArgument("initial field does not match the model or grid".into()));
    }
    let a: DMatrix<f64> = model.diffusion();
    let m = expand(&disc.laplacian, &a);
    let (steps, dt) = cfg.steps();
    let mut v = u0.values().to_vec();
    if steps == 0 {
        return Ok(u0.clone());
    }
    let len = v.len();
    let mut f_now = vec![0.0; len];
    let mut f_prev = vec![0.0; len];
    let mut rhs = vec![0.0; len];
    let euler = factor_shifted(&m, dt)?;
    reaction(model, nc, &v, &mut f_now);
    let mut v_prev = v.clone();
    for i in 0..len {
        rhs[i] = v[i] + dt * f_now[i];
    }
    euler.solve_in_place(&mut rhs);
    std::mem::swap(&mut v, &mut rhs);
    check_finite(&v, dt)?;
    match cfg.scheme {
        Scheme::ImexEuler => {
            for s in 1..steps {
                reaction(model, nc, &v, &mut f_now);
                for i in 0..len {
                    rhs[i] = v[i] + dt * f_now[i];
                }
                euler.solve_in_place(&mut rhs);
                std::mem::swap(&mut v, &mut rhs);
                check_finite(&v, (s + 1) as f64 * dt)?;
            }
        }
        Scheme::ImexBdf2 => {
            drop(euler);
            let bdf = factor_shifted(&m, 2.0 * dt / 3.0)?;
            std::mem::swap(&mut f_prev, &mut f_now);
            for s in 1..steps {
                reaction(model, nc, &v, &mut f_now);
                for i in 0..len {
                    rhs[i] = (4.0 * v[i] - v_prev[i]) / 3.0 + 2.0 * dt / 3.0 * (2.0 * f_now[i] - f_prev[i]);
                }
                bdf.solve_in_place(&mut rhs);
                std::mem::swap(&mut v_prev, &mut v);
                std::mem::swap(&mut v, &mut rhs);
                std::mem::swap(&mut f_prev, &mut f_now);
                check_finite(&v, (s + 1) as f64 * dt)?;
            }
        }
    }
    Field::from_values(disc.grid, nc, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearDamping, Qcgl};

    #[test]
    fn seed_values() {
        let g = Grid2D::new(10.0, 0.5).unwrap();
        let u = vortex_seed(g);
        assert_eq!(u.at(g.node(20, 20)), &[0.0, 0.0]);
        let k = g.node(34, 20);
        assert_eq!(g.position(k), (7.0, 0.0));
        assert!((u.at(k)[0] - 7.0 / 5.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(u.at(k)[1], 0.0);
        for k in 0..g.nodes() {
            let m = g.nodes() - 1 - k;
            assert_eq!(u.at(k)[0], -u.at(m)[0]);
            assert_eq!(u.at(k)[1], -u.at(m)[1]);
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid2D::new(4.0, 0.5).unwrap();
        let d = Discretization::new(g);
        let z = Field::zeros(g, 2);
        for scheme in [Scheme::ImexEuler, Scheme::ImexBdf2] {
            let cfg = StepperConfig { t_end: 2.0, scheme, ..StepperConfig::default() };
            let out = simulate(&Qcgl::default(), &d, &z, &cfg).unwrap();
            assert!(out.values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn growth_is_reported_as_blow_up() {
        let g = Grid2D::new(2.0, 0.5).unwrap();
        let d = Discretization::new(g);
        let model = LinearDamping::new(DMatrix::identity(1, 1), -40.0);
        let u = Field::from_fn(g, 1, |_, _| vec![1.0]);
        let cfg = StepperConfig { t_end: 10.0, dt: 0.1, ..StepperConfig::default() };
        assert!(matches!(simulate(&model, &d, &u, &cfg), Err(Error::BlowUp { .. })));
        let bad = StepperConfig { dt: -1.0, ..cfg };
        assert!(simulate(&model, &d, &u, &bad).is_err());
    }

    #[test]
    fn bdf2_is_second_order_in_time() {
        // u' = -u on a constant field: exact e^{-t}.
        let g = Grid2D::new(1.0, 0.5).unwrap();
        let d = Discretization::new(g);
        let model = LinearDamping::new(DMatrix::identity(1, 1), 1.0);
        let u = Field::from_fn(g, 1, |_, _| vec![1.0]);
        let err = |scheme, dt| {
            let cfg = StepperConfig { t_end: 1.0, dt, scheme, ..StepperConfig::default() };
            (simulate(&model, &d, &u, &cfg).unwrap().values()[0] - (-1.0f64).exp()).abs()
        };
        let (e1, e2) = (err(Scheme::ImexBdf2, 0.02), err(Scheme::ImexBdf2, 0.01));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
        let (e1, e2) = (err(Scheme::ImexEuler, 0.02), err(Scheme::ImexEuler, 0.01));
        assert!(e1 / e2 > 1.8 && e1 / e2 < 2.2);
    }
}
