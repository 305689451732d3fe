//! Exponential weight functions and weighted L^p norms of grid fields.

use serde::{Deserialize, Serialize};

use crate::grid::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `exp(mu |x|)`
    ExpAbs,
    /// `cosh(mu |x|)`
    CoshAbs,
    /// `exp(mu sqrt(|x|^2 + 1))`
    ExpSmooth,
    /// `cosh(mu sqrt(|x|^2 + 1))`
    CoshSmooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub mu: f64,
}

impl WeightSpec {
    pub fn new(kind: WeightKind, mu: f64) -> Self {
        WeightSpec { kind, mu }
    }

    pub fn unit() -> Self {
        WeightSpec { kind: WeightKind::ExpAbs, mu: 0.0 }
    }

    /// Value as a function of `|x|`.
    pub fn radial(&self, r: f64) -> f64 {
        match self.kind {
            WeightKind::ExpAbs => (self.mu * r).exp(),
            WeightKind::CoshAbs => (self.mu * r).cosh(),
            WeightKind::ExpSmooth => (self.mu * (r * r + 1.0).sqrt()).exp(),
            WeightKind::CoshSmooth => (self.mu * (r * r + 1.0).sqrt()).cosh(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.radial(norm(x))
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, WeightKind::ExpSmooth | WeightKind::CoshSmooth)
    }

    /// Growth rate `eta = |mu|`; all four kinds have `C_theta = 1`.
    pub fn growth_rate(&self) -> f64 {
        self.mu.abs()
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub eta: f64,
    pub c_theta: f64,
    pub sample_count: usize,
    /// Largest relative excess of `theta(x+y) / (C_theta theta(x) e^{eta |y|})` over 1,
    /// after a 1e-12 rounding allowance. Nonpositive means certified.
    pub max_violation: f64,
    pub positive: bool,
    pub radial: bool,
    /// Radial monotonicity, evaluated only when requested.
    pub monotone: Option<bool>,
}

impl GrowthCertificate {
    pub fn certified(&self) -> bool {
        self.positive && self.radial && self.max_violation <= 0.0 && self.monotone.unwrap_or(true)
    }
}

const ROUNDING_ALLOWANCE: f64 = 1e-12;

/// Evaluates the weight on sample points and checks positivity, the growth bound
/// over all (point, displacement) pairs, radiality and optionally monotonicity.
pub fn weight_eval_and_certify(
    spec: &WeightSpec,
    points: &[Vec<f64>],
    displacements: &[Vec<f64>],
    check_monotone: bool,
) -> GrowthCertificate {
    let eta = spec.growth_rate();
    let c_theta = 1.0;
    let mut max_violation = f64::NEG_INFINITY;
    let mut positive = true;
    let mut radial = true;
    for x in points {
        let tx = spec.eval(x);
        positive &= tx > 0.0;
        for y in displacements {
            let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
            let ratio = spec.eval(&xy) / (c_theta * tx * (eta * norm(y)).exp());
            max_violation = max_violation.max(ratio - 1.0 - ROUNDING_ALLOWANCE);
        }
        // Rotating x within a coordinate plane must not change the value.
        if x.len() >= 2 {
            let mut rx = x.clone();
            rx[0] = -x[1];
            rx[1] = x[0];
            let t = spec.eval(&rx);
            radial &= (t - tx).abs() <= 1e-13 * tx.abs().max(1.0);
        }
    }
    let monotone = check_monotone.then(|| {
        let mut radii: Vec<f64> = points.iter().map(|x| norm(x)).collect();
        radii.sort_by(f64::total_cmp);
        radii.windows(2).all(|w| spec.radial(w[0]) <= spec.radial(w[1]) * (1.0 + 1e-15))
    });
    GrowthCertificate {
        eta,
        c_theta,
        sample_count: points.len() * displacements.len(),
        max_violation: if max_violation.is_finite() { max_violation } else { 0.0 },
        positive,
        radial,
        monotone,
    }
}

/// `(sum_k w_k theta(x_k)^p |u(x_k)|^p)^(1/p)` with trapezoid weights, or
/// `max_k theta(x_k) |u(x_k)|` for `p = inf`.
pub fn weighted_lp_norm(field: &Field, spec: &WeightSpec, p: f64) -> f64 {
    let g = field.grid();
    let nodes = g.nodes();
    if p.is_infinite() {
        return (0..nodes)
            .map(|k| {
                let (x, y) = g.position(k);
                spec.eval(&[x, y]) * field.magnitude(k)
            })
            .fold(0.0, f64::max);
    }
    let mut sum = 0.0;
    for k in 0..nodes {
        let (x, y) = g.position(k);
        let m = field.magnitude(k);
        if m == 0.0 {
            continue;
        }
        sum += g.trapezoid_weight(k) * (spec.eval(&[x, y]) * m).powf(p);
    }
    sum.powf(1.0 / p)
}

/// Unweighted discrete L^p norm with the same quadrature.
pub fn discrete_lp_norm(field: &Field, p: f64) -> f64 {
    let g = field.grid();
    if p.is_infinite() {
        return field.max_magnitude();
    }
    let sum: f64 = (0..g.nodes())
        .map(|k| field.magnitude(k))
        .enumerate()
        .filter(|&(_, m)| m != 0.0)
        .map(|(k, m)| g.trapezoid_weight(k) * m.powf(p))
        .sum();
    sum.powf(1.0 / p)
}
