//! Run configuration: JSON with every key optional, unknown keys rejected.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::decay::RateUnits;
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::QcglParams;
use crate::pde::{Scheme, StepperConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    /// Complex coefficients as `[re, im]`.
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub gamma: [f64; 2],
    pub delta: [f64; 2],
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = QcglParams::default();
        let c = |z: Complex64| [z.re, z.im];
        ModelConfig { name: "qcgl".into(), alpha: c(p.alpha), beta: c(p.beta), gamma: c(p.gamma), delta: c(p.delta) }
    }
}

impl ModelConfig {
    pub fn params(&self) -> QcglParams {
        let c = |z: [f64; 2]| Complex64::new(z[0], z[1]);
        QcglParams { alpha: c(self.alpha), beta: c(self.beta), gamma: c(self.gamma), delta: c(self.delta) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeConfig {
    /// Half width `R` of the square `[-R, R]^2`.
    pub half_width: f64,
    pub dx: f64,
    pub dt: f64,
    /// Length of the plain simulation from the vortex seed.
    pub t_sim: f64,
    /// Length of the frozen run that follows it.
    pub t_freeze: f64,
    pub scheme: Scheme,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig { half_width: 20.0, dx: 0.25, dt: 0.05, t_sim: 150.0, t_freeze: 150.0, scheme: Scheme::ImexBdf2 }
    }
}

impl PdeConfig {
    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.half_width, self.dx)
    }

    pub fn sim_stepper(&self) -> StepperConfig {
        StepperConfig { dt: self.dt, scheme: self.scheme, t_end: self.t_sim, ..StepperConfig::default() }
    }

    pub fn freeze_stepper(&self) -> StepperConfig {
        StepperConfig { dt: self.dt, scheme: self.scheme, t_end: self.t_freeze, ..StepperConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub sigma: f64,
    pub neigs: usize,
    /// Defaults to `4 neigs + 20`.
    pub krylov_dim: Option<usize>,
    pub tol: f64,
    /// Second real shift. Near `+1` the point spectrum on the imaginary axis is
    /// closer than the tip of the essential spectrum, which crowds the `sigma = -1` run.
    pub extra_sigma: Option<f64>,
    pub extra_neigs: usize,
    /// Distance to a dispersion curve below which an eigenvalue counts as essential.
    pub tol_dist: f64,
    /// Dispersion curves are drawn for `n` in `-n_max..=n_max`, `omega` in `[0, omega_max]`.
    pub n_max: i64,
    pub omega_max: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            sigma: -1.0,
            neigs: 40,
            krylov_dim: None,
            tol: 1e-8,
            extra_sigma: Some(1.0),
            extra_neigs: 20,
            tol_dist: 0.05,
            n_max: 6,
            omega_max: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub window: [f64; 2],
    pub direction: [f64; 2],
    /// Ray length; defaults to `R`.
    pub r_max: Option<f64>,
    pub p_list: Vec<f64>,
    pub eps: f64,
    pub units: RateUnits,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig { window: [5.0, 13.0], direction: [0.0, 1.0], r_max: None, p_list: vec![2.0], eps: 0.5, units: RateUnits::Log10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub pde: PdeConfig,
    pub spectral: SpectralConfig,
    pub decay: DecayConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            pde: PdeConfig::default(),
            spectral: SpectralConfig::default(),
            decay: DecayConfig::default(),
            output: PathBuf::from("rotwave-out"),
        }
    }
}

/// Dotted paths of keys in `given` that do not occur in `known`.
fn unknown_keys(given: &Value, known: &Value, prefix: &str, out: &mut Vec<String>) {
    if let (Value::Object(g), Value::Object(k)) = (given, known) {
        for (key, v) in g {
            let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
            match k.get(key) {
                Some(kv) => unknown_keys(v, kv, &path, out),
                // Optional blocks serialize as null by default; their inner keys are checked by serde.
                None => out.push(path),
            }
        }
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        if !value.is_object() {
            return Err(Error::Config("top level must be a JSON object".into()));
        }
        let known = serde_json::to_value(RunConfig::default())?;
        let mut bad = Vec::new();
        unknown_keys(&value, &known, "", &mut bad);
        if !bad.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", bad.join(", "))));
        }
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Checks every block and reports all offending keys at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let mut check = |ok: bool, key: &str, why: String| {
            if !ok {
                bad.push(format!("{key} ({why})"));
            }
        };
        let pos = |x: f64| x > 0.0 && x.is_finite();
        let m = &self.model;
        check(m.name == "qcgl", "model.name", format!("unknown model '{}'", m.name));
        for (k, z) in [("alpha", m.alpha), ("beta", m.beta), ("gamma", m.gamma), ("delta", m.delta)] {
            check(z.iter().all(|x| x.is_finite()), &format!("model.{k}"), "must be finite".into());
        }
        check(m.alpha[0] > 0.0, "model.alpha", "needs a positive real part".into());

        let p = &self.pde;
        check(pos(p.half_width), "pde.half_width", format!("must be positive, got {}", p.half_width));
        check(pos(p.dx), "pde.dx", format!("must be positive, got {}", p.dx));
        if pos(p.half_width) && pos(p.dx) {
            if let Err(e) = p.grid() {
                check(false, "pde.dx", e.to_string());
            }
        }
        check(pos(p.dt), "pde.dt", format!("must be positive, got {}", p.dt));
        check(p.t_sim >= 0.0 && p.t_sim.is_finite(), "pde.t_sim", format!("must be nonnegative, got {}", p.t_sim));
        check(pos(p.t_freeze), "pde.t_freeze", format!("must be positive, got {}", p.t_freeze));

        let s = &self.spectral;
        check(s.sigma.is_finite(), "spectral.sigma", "must be finite".into());
        check(s.neigs >= 1, "spectral.neigs", "must be at least 1".into());
        if let Some(k) = s.krylov_dim {
            check(k > s.neigs, "spectral.krylov_dim", format!("must exceed neigs = {}", s.neigs));
        }
        check(pos(s.tol), "spectral.tol", format!("must be positive, got {}", s.tol));
        if let Some(e) = s.extra_sigma {
            check(e.is_finite() && e != s.sigma, "spectral.extra_sigma", "must be finite and differ from sigma".into());
            check(s.extra_neigs >= 1, "spectral.extra_neigs", "must be at least 1".into());
        }
        check(pos(s.tol_dist), "spectral.tol_dist", format!("must be positive, got {}", s.tol_dist));
        check(s.n_max >= 0, "spectral.n_max", "must be nonnegative".into());
        check(pos(s.omega_max), "spectral.omega_max", "must be positive".into());

        let d = &self.decay;
        check(d.window[0] >= 0.0 && d.window[0] < d.window[1], "decay.window", format!("needs 0 <= lo < hi, got {:?}", d.window));
        check(d.direction[0].hypot(d.direction[1]) > 0.0, "decay.direction", "must be nonzero".into());
        let r_max = self.ray_length();
        check(pos(r_max) && r_max >= d.window[1], "decay.r_max", format!("ray length {r_max} must cover the window"));
        if pos(p.half_width) && d.direction[0].hypot(d.direction[1]) > 0.0 {
            let n = d.direction[0].hypot(d.direction[1]);
            let reach = r_max * (d.direction[0].abs().max(d.direction[1].abs()) / n);
            check(reach <= p.half_width * (1.0 + 1e-12), "decay.r_max", format!("ray leaves the domain of half width {}", p.half_width));
        }
        check(!d.p_list.is_empty() && d.p_list.iter().all(|&q| q > 1.0 && q.is_finite()), "decay.p_list", "needs entries p > 1".into());
        check(d.eps > 0.0 && d.eps < 1.0, "decay.eps", format!("must lie in (0, 1), got {}", d.eps));

        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid values: {}", bad.join("; "))))
        }
    }

    pub fn ray_length(&self) -> f64 {
        self.decay.r_max.unwrap_or(self.pde.half_width)
    }

    /// SHA-256 of the compute-relevant part of the config (everything but the output path).
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("output");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c = RunConfig::from_json_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.pde.half_width, 20.0);
        assert_eq!(c.pde.dx, 0.25);
        assert_eq!(c.spectral.sigma, -1.0);
        assert_eq!(c.decay.window, [5.0, 13.0]);
        assert_eq!(c.model.params(), QcglParams::default());
    }

    #[test]
    fn overrides_and_rejections() {
        let c = RunConfig::from_json_str(r#"{"pde": {"dx": 0.5}}"#).unwrap();
        assert_eq!(c.pde.dx, 0.5);
        assert_eq!(c.pde.grid().unwrap().n(), 81);

        let e = RunConfig::from_json_str(r#"{"pde": {"dt": -0.1}}"#).unwrap_err();
        assert!(e.to_string().contains("pde.dt"), "{e}");
        assert!(e.is_validation());

        let e = RunConfig::from_json_str(r#"{"pde": {"dx": 0.3, "foo": 1}, "bar": 2}"#).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("pde.foo") && msg.contains("bar"), "{msg}");

        let e = RunConfig::from_json_str(r#"{"pde": {"dx": 0.3}, "decay": {"eps": 1.5}}"#).unwrap_err().to_string();
        assert!(e.contains("pde.dx") && e.contains("decay.eps"), "{e}");
        assert!(RunConfig::from_json_str("[1]").is_err());
        assert!(RunConfig::from_json_str(r#"{"decay": {"r_max": 25.0}}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_only() {
        let a = RunConfig::default();
        let b = RunConfig { output: "elsewhere".into(), ..RunConfig::default() };
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = RunConfig::default();
        c.pde.dx = 0.5;
        assert_ne!(a.hash(), c.hash());
    }
}
