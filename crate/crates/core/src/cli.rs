//! `rotwave` command line.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::constants::{estimate_constants, k1_threshold};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::io::{read_csv, read_field, read_json, write_csv, write_field, write_json, Header, OutputLock};
use crate::grid::Grid2D;
use crate::kernel::{
    kernel_mass, lp_decay_bound_check, semigroup_property_error, BandLimitedField, KernelParams, QuadratureSpec, SampledField,
};
use crate::linalg::dense::CVec;
use crate::matrix_analysis::{assumption_report, constants_bundle, p_range, SquareMatrix};
use crate::model::ReactionModel;
use crate::pipeline::{
    build_model, check_grid, decay_budget, report_eigenfunctions, run_decay, run_freeze, run_simulate, run_spectrum, DecayOutcome,
    FrozenWave, SpectrumOutcome,
};
use crate::spectral::skew_from_entries;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rotwave", version, about = "Rotating waves: freezing, spectra and exponential decay rates")]
pub struct Cli {
    /// JSON config; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Exponent p for constants and decay rates.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub neigs: Option<usize>,
    /// Regression window as `lo,hi`.
    #[arg(long, global = true, value_parser = parse_pair)]
    pub window: Option<[f64; 2]>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evaluate the structural assumptions A1-A11.
    Check,
    /// Constants of the linear theory, the admissible p-range and K1.
    Constants,
    /// Theoretical decay rates.
    Tdr,
    /// Kernel mass identity, semigroup property and L^p decay bound.
    Kernel,
    /// Simulate from the vortex seed.
    Simulate,
    /// Freeze the simulated wave.
    Freeze,
    /// Eigenvalues of the linearization and the essential spectrum.
    Spectrum,
    /// Numerical decay rates of the profile and the isolated eigenfunctions.
    Decay,
    /// Run everything and write the decay table.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Constants => "constants",
            Command::Tdr => "tdr",
            Command::Kernel => "kernel",
            Command::Simulate => "simulate",
            Command::Freeze => "freeze",
            Command::Spectrum => "spectrum",
            Command::Decay => "decay",
            Command::Report => "report",
        }
    }
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?]),
        _ => Err(format!("expected lo,hi but got '{s}'")),
    }
}

/// Config file (or defaults) with the command-line overrides applied and validated.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    if let Some(p) = cli.p {
        cfg.decay.p_list = vec![p];
    }
    if let Some(e) = cli.eps {
        cfg.decay.eps = e;
    }
    if let Some(s) = cli.sigma {
        cfg.spectral.sigma = s;
    }
    if let Some(n) = cli.neigs {
        cfg.spectral.neigs = n;
    }
    if let Some(w) = cli.window {
        cfg.decay.window = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Paths of the artifacts inside the output directory.
struct Artifacts<'a> {
    dir: &'a Path,
}

impl Artifacts<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn require(&self, name: &str, command: &'static str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact { path: p.display().to_string(), command })
        }
    }
}

const SIMULATED: &str = "simulate.csv";
const PROFILE: &str = "profile.csv";
const FRAME: &str = "frame.json";
const EIGVALS: &str = "eigenvectors.json";
const EIGVECS: &str = "eigenvectors.csv";

fn num(x: f64) -> String {
    x.to_string()
}

struct Ctx {
    cfg: RunConfig,
    header_hash: String,
    model: Box<dyn ReactionModel>,
}

impl Ctx {
    fn header(&self, cmd: &str) -> Header {
        Header::new(self.header_hash.clone(), cmd)
    }

    fn art(&self) -> Artifacts<'_> {
        Artifacts { dir: &self.cfg.output }
    }

    fn p(&self) -> f64 {
        self.cfg.decay.p_list[0]
    }

    /// Generator for commands that do not need a frozen wave: the saved one if present,
    /// otherwise the unit rotation.
    fn generator(&self) -> DMatrix<f64> {
        let s12 = read_json::<FrozenWave>(&self.art().path(FRAME)).map(|w| w.state.s12).unwrap_or(1.0);
        skew_from_entries(&[s12]).expect("one entry")
    }

    fn matrices(&self) -> Result<(SquareMatrix, SquareMatrix)> {
        let a = SquareMatrix::real(self.model.diffusion())?;
        let b = SquareMatrix::real(-self.model.df(&self.model.v_inf()))?;
        Ok((a, b))
    }
}

fn cmd_check(ctx: &Ctx) -> Result<()> {
    let (a, _) = ctx.matrices()?;
    let m = &*ctx.model;
    let r = assumption_report(&a, &ctx.generator(), m, &m.v_inf(), ctx.p());
    let out = json!({ "p": ctx.p(), "all_pass": r.all_pass(), "conditions": r.conditions });
    write_json(&ctx.art().path("check.json"), &ctx.header("check"), &out)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_constants(ctx: &Ctx) -> Result<()> {
    let (a, b) = ctx.matrices()?;
    let p = ctx.p();
    let eps = ctx.cfg.decay.eps;
    let c = constants_bundle(&a, &b, 2, p)?;
    let est = estimate_constants(&c, 2, p, eps, 1.0)?;
    let k1 = k1_threshold(&*ctx.model, &c, &est, eps, false)?;
    let out = json!({ "p": p, "eps": eps, "p_range": p_range(&a)?, "constants": c, "estimate": est, "k1": k1 });
    write_json(&ctx.art().path("constants.json"), &ctx.header("constants"), &out)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_tdr(ctx: &Ctx) -> Result<()> {
    let b = decay_budget(&*ctx.model, ctx.p())?;
    let out = json!({ "p": b.p, "nu": b.nu, "mu_pro": b.mu_pro, "mu_pro_max": b.mu_pro_max, "beta_inf": b.beta_inf });
    write_json(&ctx.art().path("tdr.json"), &ctx.header("tdr"), &out)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

const KERNEL_MASS_TOL: f64 = 1e-8;
const KERNEL_SEMIGROUP_TOL: f64 = 1e-6;
const KERNEL_RANDOM_FIELDS: usize = 100;

fn cmd_kernel(ctx: &Ctx) -> Result<()> {
    let (a, b) = ctx.matrices()?;
    let params = KernelParams::new(a, b.clone(), ctx.generator())?;
    let quad = QuadratureSpec::default();
    let bc = crate::linalg::dense::to_complex(&b.to_real().expect("real matrix"));
    let mut mass = Vec::new();
    for t in [0.1, 1.0, 5.0] {
        for x in [[0.0, 0.0], [1.5, -0.5]] {
            let m = kernel_mass(&params, &x, t, &quad)?;
            let want = crate::linalg::dense::expm(&(bc.clone() * Complex64::new(-t, 0.0)));
            let err = crate::linalg::dense::frobenius(&(m - want));
            mass.push(json!({ "t": t, "x": x, "error": err, "pass": err <= KERNEL_MASS_TOL }));
        }
    }

    let n = params.n;
    let gauss = move |x: &[f64]| {
        let e = (-(x[0] * x[0] + (x[1] - 0.5).powi(2)) / 2.0).exp();
        CVec::from_iterator(n, (0..n).map(|k| Complex64::new(e, 0.3 * k as f64 * x[0] * e)))
    };
    let pts = [vec![0.0, 0.0], vec![1.0, -0.7], vec![-0.5, 1.5]];
    let q40 = QuadratureSpec { nodes_per_axis: 40, ..quad };
    let mut semigroup = Vec::new();
    for (t, s) in [(0.3, 0.2), (1.0, 0.5)] {
        let err = semigroup_property_error(&params, &gauss, t, s, &pts, &q40)?;
        semigroup.push(json!({ "t": t, "s": s, "error": err, "pass": err <= KERNEL_SEMIGROUP_TOL }));
    }

    let grid = Grid2D::new(8.0, 0.4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fields: Vec<SampledField> = (0..KERNEL_RANDOM_FIELDS)
        .map(|_| {
            let f = BandLimitedField::random(&mut rng, n, 5, 2.0, 1.2);
            SampledField::from_fn(grid, |x| f.eval(x))
        })
        .collect();
    let bound = lp_decay_bound_check(&params, &fields, &[0.5, 1.0, 2.0], ctx.p())?;

    let pass = mass.iter().chain(&semigroup).all(|r| r["pass"] == json!(true)) && bound.violations == 0;
    let out = json!({ "mass_identity": mass, "semigroup_property": semigroup, "decay_bound": bound, "pass": pass });
    write_json(&ctx.art().path("kernel.json"), &ctx.header("kernel"), &out)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    if pass {
        Ok(())
    } else {
        Err(Error::Numerical("kernel identities failed; see kernel.json".into()))
    }
}

fn cmd_simulate(ctx: &Ctx) -> Result<Field> {
    let u = run_simulate(&ctx.cfg, &*ctx.model)?;
    write_field(&ctx.art().path(SIMULATED), &ctx.header("simulate"), &u)?;
    eprintln!("simulate: t = {}, max |u| = {:.6}", ctx.cfg.pde.t_sim, u.max_magnitude());
    Ok(u)
}

fn cmd_freeze(ctx: &Ctx, start: Option<Field>) -> Result<(FrozenWave, Field)> {
    let start = match start {
        Some(u) => u,
        None => read_field(&ctx.art().require(SIMULATED, "simulate")?, ctx.cfg.pde.grid()?)?,
    };
    let (mut wave, history) = run_freeze(&ctx.cfg, &*ctx.model, &start)?;
    let profile = wave.state.v.take().expect("freeze returns a profile");
    let h = ctx.header("freeze");
    write_field(&ctx.art().path(PROFILE), &h, &profile)?;
    write_json(&ctx.art().path(FRAME), &h, &wave)?;
    let rows = history.iter().map(|s| vec![num(s.t), num(s.s12), num(s.tau[0]), num(s.tau[1]), num(s.residual)]);
    write_csv(&ctx.art().path("freeze_history.csv"), &h, &["t", "s12", "tau1", "tau2", "residual"], rows)?;
    eprintln!(
        "freeze: S12 = {:.6}, tau = ({:.2e}, {:.2e}), residual {:.2e}",
        wave.state.s12, wave.state.tau[0], wave.state.tau[1], wave.state.residual
    );
    Ok((wave, profile))
}

fn load_wave(ctx: &Ctx) -> Result<(FrozenWave, Field)> {
    let wave: FrozenWave = read_json(&ctx.art().require(FRAME, "freeze")?)?;
    check_grid(&ctx.cfg, &wave)?;
    let profile = read_field(&ctx.art().require(PROFILE, "freeze")?, wave.grid)?;
    Ok((wave, profile))
}

#[derive(Serialize, Deserialize)]
struct EigenIndex {
    lambdas: Vec<[f64; 2]>,
}

fn cmd_spectrum(ctx: &Ctx, wave: &FrozenWave, profile: &Field) -> Result<SpectrumOutcome> {
    let out = run_spectrum(&ctx.cfg, &*ctx.model, profile, wave)?;
    let h = ctx.header("spectrum");
    let eigs: Vec<_> = out
        .pairs
        .iter()
        .zip(&out.classified)
        .map(|(p, c)| {
            json!({ "re": p.lambda.re, "im": p.lambda.im, "residual": c.residual, "residual_full": p.residual,
                    "distance": c.distance, "class": c.class })
        })
        .collect();
    let curves: Vec<_> = out
        .curves
        .iter()
        .map(|c| {
            let (om, (re, im)): (Vec<f64>, (Vec<f64>, Vec<f64>)) = c.points.iter().map(|(w, l)| (*w, (l.re, l.im))).unzip();
            json!({ "n": c.n[0], "omega": om, "re": re, "im": im })
        })
        .collect();
    let doc = json!({ "s12": wave.state.s12, "complete": out.complete, "eigs": eigs, "curves": curves,
                      "symmetry": out.symmetry, "degenerate": out.degenerate });
    write_json(&ctx.art().path("spectrum.json"), &h, &doc)?;

    let eig = report_eigenfunctions(&out);
    let g = wave.grid;
    let nc = profile.ncomp();
    let mut cols = vec!["x".to_string(), "y".to_string()];
    for j in 0..eig.len() {
        for c in 0..nc {
            cols.push(format!("e{j}_re{c}"));
            cols.push(format!("e{j}_im{c}"));
        }
    }
    let cols_ref: Vec<&str> = cols.iter().map(String::as_str).collect();
    let rows = (0..g.nodes()).map(|k| {
        let (x, y) = g.position(k);
        let mut r = vec![num(x), num(y)];
        for (_, v) in &eig {
            for c in 0..nc {
                r.push(num(v[k * nc + c].re));
                r.push(num(v[k * nc + c].im));
            }
        }
        r
    });
    write_csv(&ctx.art().path(EIGVECS), &h, &cols_ref, rows)?;
    write_json(&ctx.art().path(EIGVALS), &h, &EigenIndex { lambdas: eig.iter().map(|(l, _)| [l.re, l.im]).collect() })?;
    eprintln!("spectrum: {} eigenvalues, {} isolated in the upper half plane", out.pairs.len(), eig.len());
    Ok(out)
}

fn load_eigenfunctions(ctx: &Ctx, wave: &FrozenWave, ncomp: usize) -> Result<Vec<(Complex64, Vec<Complex64>)>> {
    let idx: EigenIndex = read_json(&ctx.art().require(EIGVALS, "spectrum")?)?;
    let t = read_csv(&ctx.art().require(EIGVECS, "spectrum")?)?;
    let g = wave.grid;
    let want = 2 + 2 * ncomp * idx.lambdas.len();
    if t.columns.len() != want || t.rows.len() != g.nodes() {
        return Err(Error::Config(format!("{EIGVECS} does not match {EIGVALS} and the grid; rerun `spectrum`")));
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad number '{s}' in {EIGVECS}")));
    let mut out: Vec<(Complex64, Vec<Complex64>)> =
        idx.lambdas.iter().map(|l| (Complex64::new(l[0], l[1]), Vec::with_capacity(g.nodes() * ncomp))).collect();
    for r in &t.rows {
        for (j, (_, v)) in out.iter_mut().enumerate() {
            for c in 0..ncomp {
                let base = 2 + 2 * (j * ncomp + c);
                v.push(Complex64::new(parse(&r[base])?, parse(&r[base + 1])?));
            }
        }
    }
    Ok(out)
}

fn cmd_decay(ctx: &Ctx, profile: &Field, eigen: &[(Complex64, Vec<Complex64>)], name: &str) -> Result<DecayOutcome> {
    let out = run_decay(&ctx.cfg, &*ctx.model, profile, eigen)?;
    let h = ctx.header(name);
    let rows = out.rows.iter().map(|r| {
        let (re, im) = r.lambda.map_or((String::new(), String::new()), |l| (num(l.re), num(l.im)));
        vec![
            r.object.clone(),
            re,
            im,
            num(r.ndr),
            r.tdr.map_or_else(|| "—".to_string(), num),
            r.margin.map_or_else(String::new, num),
            num(r.r_squared),
            num(r.ndr_natural),
        ]
    });
    let file = if name == "report" { "report.csv" } else { "decay.csv" };
    write_csv(&ctx.art().path(file), &h, &["object", "re_lambda", "im_lambda", "NDR", "TDR", "margin", "r2", "NDR_natural"], rows)?;

    let mut cols = vec!["r".to_string()];
    cols.extend(out.rays.iter().map(|(o, _)| format!("log10|{o}|")));
    let cols_ref: Vec<&str> = cols.iter().map(String::as_str).collect();
    let n = out.rays[0].1.radii.len();
    let rows = (0..n).map(|i| {
        let mut r = vec![num(out.rays[0].1.radii[i])];
        r.extend(out.rays.iter().map(|(_, ray)| num(ray.values[i].log10())));
        r
    });
    write_csv(&ctx.art().path("rays.csv"), &h, &cols_ref, rows)?;
    write_json(&ctx.art().path("certificates.json"), &h, &out.certificates)?;
    for r in &out.rows {
        eprintln!("decay: {:>24}  NDR {:.4}  TDR {}", r.object, r.ndr, r.tdr_label());
    }
    Ok(out)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let model = build_model(&cfg)?;
    let ctx = Ctx { header_hash: cfg.hash(), cfg, model };
    let _lock = OutputLock::acquire(&ctx.cfg.output)?;
    match cli.command {
        Command::Check => cmd_check(&ctx),
        Command::Constants => cmd_constants(&ctx),
        Command::Tdr => cmd_tdr(&ctx),
        Command::Kernel => cmd_kernel(&ctx),
        Command::Simulate => cmd_simulate(&ctx).map(|_| ()),
        Command::Freeze => cmd_freeze(&ctx, None).map(|_| ()),
        Command::Spectrum => {
            let (wave, profile) = load_wave(&ctx)?;
            cmd_spectrum(&ctx, &wave, &profile).map(|_| ())
        }
        Command::Decay => {
            let (wave, profile) = load_wave(&ctx)?;
            let eig = load_eigenfunctions(&ctx, &wave, profile.ncomp())?;
            cmd_decay(&ctx, &profile, &eig, "decay").map(|_| ())
        }
        Command::Report => {
            cmd_check(&ctx)?;
            let u = cmd_simulate(&ctx)?;
            let (wave, profile) = cmd_freeze(&ctx, Some(u))?;
            let spec = cmd_spectrum(&ctx, &wave, &profile)?;
            cmd_decay(&ctx, &profile, &report_eigenfunctions(&spec), "report").map(|_| ())
        }
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rotwave {}: {e}", cli.command.name());
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}
