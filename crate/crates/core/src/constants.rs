//! Resolvent-estimate constants, theoretical decay budgets and the nonlinear
//! smallness threshold `K_1`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix_analysis::{PRange, SpectralConstants};
use crate::model::ReactionModel;
use crate::special::{gamma, gauss_2f1};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateConstants {
    pub c0_eps: f64,
    pub c1_eps: f64,
    pub eps: f64,
    pub d: usize,
    pub p: f64,
}

/// `C_{0,eps}` and `C_{1,eps}` of the weighted resolvent estimates.
pub fn estimate_constants(
    c: &SpectralConstants,
    d: usize,
    p: f64,
    eps: f64,
    c_theta: f64,
) -> Result<EstimateConstants> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, 1)")));
    }
    if d == 0 || !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("need d >= 1 and p >= 1 (d = {d}, p = {p})")));
    }
    let df = d as f64;
    let pi = std::f64::consts::PI;
    let ratio = gamma((df + 1.0) / 2.0) / gamma(df / 2.0);
    let blow = (1.0 - eps).powf(-(df + 1.0) / 2.0);
    let inner0 = ratio * (pi * eps).sqrt() * blow + gauss_2f1(df / 2.0, 1.0, 0.5, eps)?;
    let inner1 = ratio * blow + df * eps.sqrt() / pi.sqrt() * gauss_2f1((df + 1.0) / 2.0, 1.0, 1.5, eps)?;
    let c0_eps = c_theta * c.kappa * c.a_1 * inner0.powf(1.0 / p);
    let c1_eps = c_theta * c.kappa * c.a_1.powf((df + 1.0) / df) * pi.sqrt() / c.a_min.sqrt() * inner1.powf(1.0 / p);
    Ok(EstimateConstants { c0_eps, c1_eps, eps, d, p })
}

/// Theoretical decay rates of the profile and of eigenfunctions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBudget {
    /// `sqrt(a_0 b_0) / a_max`
    pub nu: f64,
    pub p: f64,
    pub mu_pro: f64,
    pub mu_pro_max: f64,
    pub beta_inf: f64,
    pub d: usize,
    pub p_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenBudget {
    pub eps: f64,
    pub mu_eig: f64,
    pub mu_eig_max: f64,
    /// False when `Re lambda <= -beta_inf`: no theoretical rate exists.
    pub applicable: bool,
}

impl DecayBudget {
    pub fn new(c: &SpectralConstants, d: usize, range: PRange, p: f64) -> Result<Self> {
        if !(c.a_0 > 0.0 && c.b_0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "decay budget needs a_0 > 0 and b_0 > 0 (a_0 = {}, b_0 = {})",
                c.a_0, c.b_0
            )));
        }
        if !(p > 0.0) {
            return Err(Error::InvalidArgument(format!("p = {p} must be positive")));
        }
        let nu = (c.a_0 * c.b_0).sqrt() / c.a_max;
        let denom = range.p_min.max(d as f64 / 2.0);
        Ok(DecayBudget {
            nu,
            p,
            mu_pro: nu / p,
            mu_pro_max: nu / denom,
            beta_inf: c.beta_inf,
            d,
            p_min: range.p_min,
        })
    }

    pub fn mu_pro_at(&self, p: f64) -> f64 {
        self.nu / p
    }

    /// `(Re lambda + beta_inf) / beta_inf`, clamped to [0, 1].
    pub fn eps_of_lambda(&self, lambda: Complex64) -> f64 {
        ((lambda.re + self.beta_inf) / self.beta_inf).clamp(0.0, 1.0)
    }

    pub fn eig(&self, lambda: Complex64) -> EigenBudget {
        let eps = self.eps_of_lambda(lambda);
        let applicable = lambda.re > -self.beta_inf;
        let denom = self.p_min.max(self.d as f64 / 2.0);
        EigenBudget { eps, mu_eig: eps * self.nu / self.p, mu_eig_max: eps * self.nu / denom, applicable }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum K1Threshold {
    Finite(f64),
    /// The model has a vanishing second derivative; any radius qualifies.
    Unbounded,
}

impl K1Threshold {
    pub fn value(&self) -> f64 {
        match self {
            K1Threshold::Finite(v) => *v,
            K1Threshold::Unbounded => f64::INFINITY,
        }
    }
}

/// Right-hand side `K(eps) = eps min{b_0/(kappa a_1), b_0/C_{0,eps}, beta_inf}`.
pub fn k1_rhs(c: &SpectralConstants, est: &EstimateConstants, eps: f64) -> f64 {
    eps * (c.b_0 / (c.kappa * c.a_1)).min(c.b_0 / est.c0_eps).min(c.beta_inf)
}

const K1_ITERATIONS: usize = 200;

/// Largest `K_1` with `K_1 sup_{B_{K_1}(v_inf)} |D^2 f| <= K(eps)` (or `K(eps)/2` when
/// `halved`), by bisection on `[0, |v_inf| + 10]`.
pub fn k1_threshold(
    model: &dyn ReactionModel,
    c: &SpectralConstants,
    est: &EstimateConstants,
    eps: f64,
    halved: bool,
) -> Result<K1Threshold> {
    let rhs = k1_rhs(c, est, eps) / if halved { 2.0 } else { 1.0 };
    let hi0 = model.v_inf().iter().map(|x| x * x).sum::<f64>().sqrt() + 10.0;
    let sup = |r: f64| {
        model
            .d2f_sup(r)
            .ok_or_else(|| Error::InvalidArgument(format!("model '{}' has no second-derivative bound", model.name())))
    };
    if sup(hi0)? == 0.0 {
        return Ok(K1Threshold::Unbounded);
    }
    let lhs = |k: f64| -> Result<f64> { Ok(k * sup(k)?) };
    if lhs(hi0)? <= rhs {
        return Ok(K1Threshold::Finite(hi0));
    }
    let (mut lo, mut hi) = (0.0, hi0);
    for _ in 0..K1_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if lhs(mid)? <= rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(K1Threshold::Finite(lo))
}
