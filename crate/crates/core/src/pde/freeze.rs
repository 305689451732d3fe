//! Freezing method in the co-rotating frame:
//! `v_t = A Lap v + f(v) + S12 D12 v + tau . grad v`, with `(S12, tau)` chosen every
//! step to minimize `||v_t||` (least-squares phase condition).

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::discretization::{expand, Discretization};
use super::stepper::{check_finite, factor_shifted, reaction, Scheme, StepperConfig};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::linalg::{BandedLu, CsrMatrix};
use crate::model::ReactionModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezeState {
    #[serde(skip)]
    pub v: Option<Field>,
    pub s12: f64,
    pub tau: [f64; 2],
    pub t: f64,
    /// Trapezoid L^2 norm of `v_t` at the final state.
    pub residual: f64,
}

impl FreezeState {
    pub fn profile(&self) -> Result<&Field> {
        self.v.as_ref().ok_or_else(|| Error::InvalidArgument("freeze state carries no profile".into()))
    }

    pub fn velocities(&self) -> [f64; 3] {
        [self.s12, self.tau[0], self.tau[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreezeSample {
    pub t: f64,
    pub s12: f64,
    pub tau: [f64; 2],
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreezeOptions {
    /// Refactor the implicit system when the velocities move this far from the
    /// ones built into it; the remainder is treated explicitly.
    pub refactor_tol: f64,
    /// Hold the velocities fixed instead of solving the phase condition.
    pub fixed: Option<[f64; 3]>,
    /// Spacing of the recorded history.
    pub sample_every: f64,
}

impl Default for FreezeOptions {
    fn default() -> Self {
        FreezeOptions { refactor_tol: 0.02, fixed: None, sample_every: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct FreezeRun {
    pub state: FreezeState,
    pub history: Vec<FreezeSample>,
    pub refactorizations: usize,
}

/// Reusable pieces of the frozen right-hand side.
struct FrozenRhs<'a> {
    model: &'a dyn ReactionModel,
    disc: &'a Discretization,
    nc: usize,
    lap: CsrMatrix,
    weights: Vec<f64>,
}

struct Parts {
    /// `A Lap v + f(v)`.
    base: Vec<f64>,
    f: Vec<f64>,
    /// `D12 v, D1 v, D2 v`.
    gens: [Vec<f64>; 3],
}

impl<'a> FrozenRhs<'a> {
    fn new(model: &'a dyn ReactionModel, disc: &'a Discretization) -> Self {
        let nc = model.n_real();
        let lap = expand(&disc.laplacian, &model.diffusion());
        let weights = (0..disc.grid.nodes()).map(|k| disc.grid.trapezoid_weight(k)).collect();
        FrozenRhs { model, disc, nc, lap, weights }
    }

    fn parts(&self, v: &[f64]) -> Parts {
        let len = v.len();
        let mut f = vec![0.0; len];
        reaction(self.model, self.nc, v, &mut f);
        let mut base = self.lap.mul_vec(v);
        base.iter_mut().zip(&f).for_each(|(b, x)| *b += x);
        let mut gens = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let ops = [&self.disc.d12, &self.disc.d1, &self.disc.d2];
        for (g, op) in gens.iter_mut().zip(ops) {
            self.disc.apply(op, self.nc, v, g);
        }
        Parts { base, f, gens }
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let nc = self.nc;
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * (0..nc).map(|c| a[k * nc + c] * b[k * nc + c]).sum::<f64>())
            .sum()
    }

    /// Least-squares velocities for `min ||base + c . gens||`.
    fn phase_condition(&self, p: &Parts) -> Result<[f64; 3]> {
        let mut g = Matrix3::zeros();
        let mut b = Vector3::zeros();
        for i in 0..3 {
            for j in i..3 {
                g[(i, j)] = self.dot(&p.gens[i], &p.gens[j]);
                g[(j, i)] = g[(i, j)];
            }
            b[i] = -self.dot(&p.gens[i], &p.base);
        }
        let scale = g.diagonal().max();
        let eig = g.symmetric_eigen();
        let smallest = eig.eigenvalues.min();
        if !(scale > 0.0) || smallest <= 1e-8 * scale {
            if self.dot(&p.base, &p.base).sqrt() <= 1e-12 {
                return Ok([0.0; 3]);
            }
            return Err(Error::SingularPhaseCondition);
        }
        let c = g.cholesky().ok_or(Error::SingularPhaseCondition)?.solve(&b);
        Ok([c[0], c[1], c[2]])
    }

    fn time_derivative(&self, p: &Parts, c: [f64; 3]) -> Vec<f64> {
        let mut r = p.base.clone();
        for (ci, g) in c.iter().zip(&p.gens) {
            r.iter_mut().zip(g).for_each(|(x, y)| *x += ci * y);
        }
        r
    }

    fn norm(&self, v: &[f64]) -> f64 {
        self.dot(v, v).sqrt()
    }

    /// Implicit part `A Lap + c_ref . (D12, D1, D2)`.
    fn implicit(&self, c_ref: [f64; 3]) -> CsrMatrix {
        let id = DMatrix::identity(self.nc, self.nc);
        let frame = expand(&self.disc.frame_operator(c_ref[0], [c_ref[1], c_ref[2]]), &id);
        self.lap.linear_combination(1.0, &frame, 1.0)
    }

    /// Explicit part `f(v) + (c - c_ref) . gens`.
    fn explicit(&self, p: &Parts, c: [f64; 3], c_ref: [f64; 3]) -> Vec<f64> {
        let mut n = p.f.clone();
        for i in 0..3 {
            let d = c[i] - c_ref[i];
            if d != 0.0 {
                n.iter_mut().zip(&p.gens[i]).for_each(|(x, y)| *x += d * y);
            }
        }
        n
    }
}

fn max_dev(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs the frozen system from `v0` for `cfg.t_end` time units.
pub fn freeze_run(
    model: &dyn ReactionModel,
    disc: &Discretization,
    v0: &Field,
    cfg: &StepperConfig,
    opts: &FreezeOptions,
) -> Result<FreezeRun> {
    cfg.validate()?;
    if v0.ncomp() != model.n_real() || *v0.grid() != disc.grid {
        return Err(Error::InvalidArgument("initial field does not match the model or grid".into()));
    }
    let sys = FrozenRhs::new(model, disc);
    let (steps, dt) = cfg.steps();
    let velocities = |p: &Parts| -> Result<[f64; 3]> {
        match opts.fixed {
            Some(c) => Ok(c),
            None => sys.phase_condition(p),
        }
    };
    let mut v = v0.values().to_vec();
    let mut parts = sys.parts(&v);
    let mut c = velocities(&parts)?;
    let mut history = Vec::new();
    let mut record = |t: f64, c: [f64; 3], p: &Parts| {
        let residual = sys.norm(&sys.time_derivative(p, c));
        history.push(FreezeSample { t, s12: c[0], tau: [c[1], c[2]], residual });
    };
    record(0.0, c, &parts);
    let mut next_sample = opts.sample_every;

    let mut c_ref = c;
    let mut refactorizations = 0;
    let bdf = cfg.scheme == Scheme::ImexBdf2;
    let gamma = if bdf { 2.0 * dt / 3.0 } else { dt };
    let mut lu: Option<BandedLu> = None;
    // Previous level for the two-step scheme.
    let mut prev: Option<(Vec<f64>, Parts, [f64; 3])> = None;

    for s in 0..steps {
        if lu.is_none() || max_dev(c, c_ref) > opts.refactor_tol {
            c_ref = c;
            lu = None;
            refactorizations += 1;
        }
        let startup = bdf && prev.is_none();
        let coeff = if startup { dt } else { gamma };
        if lu.is_none() || startup {
            lu = Some(factor_shifted(&sys.implicit(c_ref), coeff)?);
        }
        let n_now = sys.explicit(&parts, c, c_ref);
        let mut rhs = match &prev {
            Some((vp, pp, cp)) if bdf => {
                let n_prev = sys.explicit(pp, *cp, c_ref);
                (0..v.len())
                    .map(|i| (4.0 * v[i] - vp[i]) / 3.0 + gamma * (2.0 * n_now[i] - n_prev[i]))
                    .collect::<Vec<f64>>()
            }
            _ => v.iter().zip(&n_now).map(|(x, n)| x + dt * n).collect(),
        };
        lu.as_ref().expect("factored above").solve_in_place(&mut rhs);
        let t = (s + 1) as f64 * dt;
        check_finite(&rhs, t)?;
        let new_parts = sys.parts(&rhs);
        let new_c = velocities(&new_parts)?;
        if startup {
            // The startup step used the Euler matrix; the next one needs the BDF2 matrix.
            lu = None;
        }
        let old_v = std::mem::replace(&mut v, rhs);
        let old_parts = std::mem::replace(&mut parts, new_parts);
        prev = Some((old_v, old_parts, c));
        c = new_c;
        if t >= next_sample - 1e-9 || s + 1 == steps {
            record(t, c, &parts);
            next_sample += opts.sample_every;
        }
    }
    let residual = sys.norm(&sys.time_derivative(&parts, c));
    let state = FreezeState {
        v: Some(Field::from_values(disc.grid, model.n_real(), v)?),
        s12: c[0],
        tau: [c[1], c[2]],
        t: steps as f64 * dt,
        residual,
    };
    Ok(FreezeRun { state, history, refactorizations })
}

/// `||v_t||` of a field for given velocities, and the least-squares velocities.
pub fn frozen_residual(model: &dyn ReactionModel, disc: &Discretization, v: &Field, c: Option<[f64; 3]>) -> Result<(f64, [f64; 3])> {
    let sys = FrozenRhs::new(model, disc);
    let p = sys.parts(v.values());
    let c = match c {
        Some(c) => c,
        None => sys.phase_condition(&p)?,
    };
    Ok((sys.norm(&sys.time_derivative(&p, c)), c))
}
