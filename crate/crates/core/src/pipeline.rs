//! The stages behind the command line: simulate, freeze, spectrum, decay.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::constants::DecayBudget;
use crate::decay::{decay_report, fit_decay, pointwise_certificate, sample_ray, sample_ray_complex, DecayReport, PointwiseCertificate, RaySample, RAY_POINTS};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::matrix_analysis::{constants_bundle, p_range, SquareMatrix};
use crate::model::{model_by_name, ReactionModel};
use crate::pde::{extract_frame, freeze_run, simulate, vortex_seed, Discretization, FrameRecord, FreezeOptions, FreezeSample, FreezeState};
use crate::spectral::{
    assemble_linearization, classify_and_residual, dispersion_essential, residual, shift_invert_eigs, symmetry_eigenpairs,
    ClassifiedEig, DispersionCurve, EigenPair, LinearizedOperator, SpectrumClass, RESIDUAL_COLLAR,
};

pub fn build_model(cfg: &RunConfig) -> Result<Box<dyn ReactionModel>> {
    model_by_name(&cfg.model.name, cfg.model.params())
}

/// Plain simulation from the vortex seed.
pub fn run_simulate(cfg: &RunConfig, model: &dyn ReactionModel) -> Result<Field> {
    let g = cfg.pde.grid()?;
    let d = Discretization::new(g);
    simulate(model, &d, &vortex_seed(g), &cfg.pde.sim_stepper())
}

/// Everything needed to resume after the freezing stage (the profile lives in its own file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenWave {
    pub grid: Grid2D,
    pub state: FreezeState,
    pub frame: FrameRecord,
    pub refactorizations: usize,
}

impl FrozenWave {
    pub fn x_star(&self) -> [f64; 2] {
        [self.frame.x_star[0], self.frame.x_star[1]]
    }
}

pub fn run_freeze(cfg: &RunConfig, model: &dyn ReactionModel, start: &Field) -> Result<(FrozenWave, Vec<FreezeSample>)> {
    let g = cfg.pde.grid()?;
    let d = Discretization::new(g);
    let run = freeze_run(model, &d, start, &cfg.pde.freeze_stepper(), &FreezeOptions::default())?;
    let frame = extract_frame(2, &[run.state.s12], &run.state.tau)?;
    Ok((FrozenWave { grid: g, state: run.state, frame, refactorizations: run.refactorizations }, run.history))
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryCheck {
    pub label: String,
    pub lambda: Complex64,
    /// Interior residual of the analytic mode on the discrete operator.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumOutcome {
    pub operator: LinearizedOperator,
    /// Pairs from all shifts, deduplicated, sorted by decreasing real part.
    pub pairs: Vec<EigenPair>,
    pub classified: Vec<ClassifiedEig>,
    pub curves: Vec<DispersionCurve>,
    pub symmetry: Vec<SymmetryCheck>,
    pub degenerate: Vec<String>,
    /// Whether every shift delivered its requested number of converged pairs.
    pub complete: bool,
}

impl SpectrumOutcome {
    /// Isolated eigenvalues with nonnegative imaginary part, one per conjugate pair.
    pub fn isolated_upper(&self) -> Vec<&EigenPair> {
        self.pairs
            .iter()
            .zip(&self.classified)
            .filter(|(p, c)| c.class == SpectrumClass::Isolated && p.lambda.im >= -1e-10)
            .map(|(p, _)| p)
            .collect()
    }

    /// Computed eigenvalue nearest `z`.
    pub fn nearest(&self, z: Complex64) -> Option<(&EigenPair, &ClassifiedEig)> {
        self.pairs.iter().zip(&self.classified).min_by(|a, b| (a.0.lambda - z).norm().total_cmp(&(b.0.lambda - z).norm()))
    }
}

pub fn omega_grid(cfg: &RunConfig) -> Vec<f64> {
    let n = 400;
    (0..=n).map(|i| cfg.spectral.omega_max * i as f64 / n as f64).collect()
}

fn merge(pairs: Vec<EigenPair>) -> Vec<EigenPair> {
    let mut out: Vec<EigenPair> = Vec::new();
    for p in pairs {
        match out.iter_mut().find(|q| (q.lambda - p.lambda).norm() <= 1e-6 * p.lambda.norm().max(1.0)) {
            Some(q) if p.residual < q.residual => *q = p,
            Some(_) => {}
            None => out.push(p),
        }
    }
    out.sort_by(|a, b| b.lambda.re.total_cmp(&a.lambda.re).then(b.lambda.im.total_cmp(&a.lambda.im)));
    out
}

pub fn run_spectrum(cfg: &RunConfig, model: &dyn ReactionModel, profile: &Field, wave: &FrozenWave) -> Result<SpectrumOutcome> {
    let d = Discretization::new(wave.grid);
    let s12 = wave.state.s12;
    let op = assemble_linearization(model, &d, profile, s12, wave.x_star())?;
    let sc = &cfg.spectral;
    let mut shifts = vec![(sc.sigma, sc.neigs, sc.krylov_dim)];
    if let Some(s) = sc.extra_sigma {
        shifts.push((s, sc.extra_neigs, None));
    }
    let mut pairs = Vec::new();
    let mut complete = true;
    for (sigma, neigs, k) in shifts {
        let r = shift_invert_eigs(&op.matrix, sigma, neigs, k, sc.tol)?;
        complete &= r.complete;
        pairs.extend(r.pairs);
    }
    let pairs = merge(pairs);
    let curves = dispersion_essential(model, &[s12], &omega_grid(cfg), (-sc.n_max, sc.n_max))?;
    let classified = classify_and_residual(&op, &pairs, &curves, sc.tol_dist);
    let modes = symmetry_eigenpairs(&d, profile, s12, wave.x_star())?;
    let mask = op.interior_mask(RESIDUAL_COLLAR);
    let symmetry = modes
        .modes
        .par_iter()
        .map(|m| SymmetryCheck {
            label: m.label.clone(),
            lambda: m.lambda,
            residual: residual(&op.matrix, m.lambda, &m.vector, Some(&mask)),
        })
        .collect();
    Ok(SpectrumOutcome { operator: op, pairs, classified, curves, symmetry, degenerate: modes.degenerate, complete })
}

pub fn decay_budget(model: &dyn ReactionModel, p: f64) -> Result<DecayBudget> {
    let a = SquareMatrix::real(model.diffusion())?;
    let b = SquareMatrix::real(-model.df(&model.v_inf()))?;
    let c = constants_bundle(&a, &b, 2, p)?;
    DecayBudget::new(&c, 2, p_range(&a)?, p)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayOutcome {
    pub rows: Vec<DecayReport>,
    /// `(object, ray)` per row, in row order.
    #[serde(skip)]
    pub rays: Vec<(String, RaySample)>,
    /// Profile certificates at `mu_pro(p)` for each configured `p`.
    pub certificates: Vec<PointwiseCertificate>,
}

/// Rays and fits for the profile and the given eigenfunctions (`lambda`, interleaved vector).
pub fn run_decay(
    cfg: &RunConfig,
    model: &dyn ReactionModel,
    profile: &Field,
    eigen: &[(Complex64, Vec<Complex64>)],
) -> Result<DecayOutcome> {
    let dc = &cfg.decay;
    let budget = decay_budget(model, dc.p_list[0])?;
    let r_max = cfg.ray_length();
    let ray = sample_ray(profile, dc.direction, r_max, RAY_POINTS)?;
    let pfit = fit_decay(&ray, dc.window)?;
    let g = profile.grid();
    let nc = profile.ncomp();
    let eig_rays: Vec<(Complex64, RaySample)> = eigen
        .iter()
        .map(|(l, v)| Ok((*l, sample_ray_complex(g, nc, v, dc.direction, r_max, RAY_POINTS)?)))
        .collect::<Result<_>>()?;
    let fits: Vec<(Complex64, _)> = eig_rays
        .iter()
        .map(|(l, r)| Ok((*l, fit_decay(r, dc.window)?)))
        .collect::<Result<_>>()?;
    let rows = decay_report(&pfit, &fits, &budget, dc.units);
    let mut rays = vec![(rows[0].object.clone(), ray)];
    rays.extend(rows[1..].iter().map(|r| r.object.clone()).zip(eig_rays.into_iter().map(|e| e.1)));
    let certificates = dc
        .p_list
        .iter()
        .map(|&p| {
            let b = decay_budget(model, p)?;
            pointwise_certificate(profile, b.mu_pro, RESIDUAL_COLLAR, Some(b.mu_pro_max))
        })
        .collect::<Result<_>>()?;
    Ok(DecayOutcome { rows, rays, certificates })
}

/// The eigenfunctions that enter the decay table: isolated eigenvalues, upper half plane.
pub fn report_eigenfunctions(spec: &SpectrumOutcome) -> Vec<(Complex64, Vec<Complex64>)> {
    spec.isolated_upper().into_iter().map(|p| (p.lambda, p.vector.clone())).collect()
}

/// Fails unless the frozen profile and frame match the configured grid.
pub fn check_grid(cfg: &RunConfig, wave: &FrozenWave) -> Result<()> {
    if cfg.pde.grid()? != wave.grid {
        return Err(Error::Config("saved frame was computed on a different grid; rerun `freeze`".into()));
    }
    Ok(())
}
