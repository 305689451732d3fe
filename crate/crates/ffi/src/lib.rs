//! C interface to `rotwave`. Every entry point returns an [`RwStatus`]; on failure
//! `rw_last_error_message` describes the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;

use rotwave::config::RunConfig;
use rotwave::constants::DecayBudget;
use rotwave::decay::{fit_decay, RateUnits, RaySample};
use rotwave::grid::Field;
use rotwave::matrix_analysis::{constants_bundle, first_antieigenvalue, p_range, SquareMatrix};
use rotwave::model::ReactionModel;
use rotwave::pipeline::{build_model, report_eigenfunctions, run_decay, run_freeze, run_simulate, run_spectrum, FrozenWave, SpectrumOutcome};
use rotwave::special::gauss_2f1;
use rotwave::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Config = 4,
    Io = 5,
    /// The call sequence was wrong, e.g. asking for a spectrum before freezing.
    State = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RwStatus {
    match e {
        Error::InvalidArgument(_) => RwStatus::InvalidArgument,
        Error::Config(_) | Error::Json(_) => RwStatus::Config,
        Error::Io(_) | Error::MissingArtifact { .. } => RwStatus::Io,
        _ => RwStatus::Numerical,
    }
}

/// Runs `f`, translating errors and panics into a status and the thread's error message.
fn guard<F: FnOnce() -> Result<(), (RwStatus, String)>>(f: F) -> RwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RwStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            RwStatus::Panic
        }
    }
}

fn lib(e: Error) -> (RwStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RwStatus, String) {
    (RwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn square(ptr: *const f64, n: usize, what: &str) -> Result<SquareMatrix, (RwStatus, String)> {
    if ptr.is_null() {
        return Err(null(what));
    }
    if n == 0 {
        return Err((RwStatus::InvalidArgument, format!("{what} has dimension 0")));
    }
    let rows = std::slice::from_raw_parts(ptr, n * n);
    SquareMatrix::from_rows(n, rows).map_err(lib)
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), (RwStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread; empty after a successful call.
/// The pointer stays valid until the next `rw_` call on the same thread.
#[no_mangle]
pub extern "C" fn rw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RwPRange {
    pub p_min: f64,
    pub p_max: f64,
    /// First antieigenvalue of the diffusion matrix.
    pub mu1: f64,
}

/// Admissible exponents for the real `n x n` diffusion matrix `a` (row-major).
///
/// # Safety
/// `a` must point to `n * n` readable doubles and `out` to a writable [`RwPRange`].
#[no_mangle]
pub unsafe extern "C" fn rw_p_range(a: *const f64, n: usize, out: *mut RwPRange) -> RwStatus {
    guard(|| {
        let a = square(a, n, "a")?;
        let r = p_range(&a).map_err(lib)?;
        write(out, RwPRange { p_min: r.p_min, p_max: r.p_max, mu1: first_antieigenvalue(&a).mu1 }, "out")
    })
}

/// Theoretical decay rates for `(A, B_inf)` in dimension `d` at exponent `p`.
pub struct RwBudget(DecayBudget);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RwProfileRates {
    pub nu: f64,
    pub mu_pro: f64,
    pub mu_pro_max: f64,
    pub beta_inf: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RwEigenRates {
    pub eps: f64,
    pub mu_eig: f64,
    pub mu_eig_max: f64,
    /// Nonzero when the eigenvalue lies right of `-beta_inf`.
    pub applicable: i32,
}

/// # Safety
/// `a` and `b` must each point to `n * n` readable doubles (row-major); `out` must be writable.
/// The handle is released with [`rw_budget_free`].
#[no_mangle]
pub unsafe extern "C" fn rw_budget_new(a: *const f64, b: *const f64, n: usize, d: usize, p: f64, out: *mut *mut RwBudget) -> RwStatus {
    guard(|| {
        let a = square(a, n, "a")?;
        let b = square(b, n, "b")?;
        let c = constants_bundle(&a, &b, d, p).map_err(lib)?;
        let budget = DecayBudget::new(&c, d, p_range(&a).map_err(lib)?, p).map_err(lib)?;
        write(out, Box::into_raw(Box::new(RwBudget(budget))), "out")
    })
}

/// # Safety
/// `h` must come from [`rw_budget_new`] and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_budget_profile(h: *const RwBudget, out: *mut RwProfileRates) -> RwStatus {
    guard(|| {
        let b = &h.as_ref().ok_or_else(|| null("budget"))?.0;
        write(out, RwProfileRates { nu: b.nu, mu_pro: b.mu_pro, mu_pro_max: b.mu_pro_max, beta_inf: b.beta_inf }, "out")
    })
}

/// # Safety
/// `h` must come from [`rw_budget_new`] and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_budget_eigen(h: *const RwBudget, re: f64, im: f64, out: *mut RwEigenRates) -> RwStatus {
    guard(|| {
        let b = &h.as_ref().ok_or_else(|| null("budget"))?.0;
        let e = b.eig(Complex64::new(re, im));
        write(out, RwEigenRates { eps: e.eps, mu_eig: e.mu_eig, mu_eig_max: e.mu_eig_max, applicable: e.applicable.into() }, "out")
    })
}

/// # Safety
/// `h` must come from [`rw_budget_new`] or be null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rw_budget_free(h: *mut RwBudget) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// `2F1(a, b; c; z)` for real arguments with `z < 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_gauss_2f1(a: f64, b: f64, c: f64, z: f64, out: *mut f64) -> RwStatus {
    guard(|| write(out, gauss_2f1(a, b, c, z).map_err(lib)?, "out"))
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RwFit {
    /// Slope of `ln |w|` against `r`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub ndr_log10: f64,
    pub ndr_natural: f64,
}

/// Log-linear fit of `values` (magnitudes) against `radii` on the window `[lo, hi]`.
///
/// # Safety
/// `radii` and `values` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_fit_decay(radii: *const f64, values: *const f64, n: usize, lo: f64, hi: f64, out: *mut RwFit) -> RwStatus {
    guard(|| {
        if radii.is_null() || values.is_null() {
            return Err(null("radii or values"));
        }
        let ray = RaySample {
            direction: [1.0, 0.0],
            radii: std::slice::from_raw_parts(radii, n).to_vec(),
            values: std::slice::from_raw_parts(values, n).to_vec(),
        };
        let f = fit_decay(&ray, [lo, hi]).map_err(lib)?;
        let fit = RwFit {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
            points: f.points,
            ndr_log10: f.ndr(RateUnits::Log10),
            ndr_natural: f.ndr(RateUnits::Natural),
        };
        write(out, fit, "out")
    })
}

/// A pipeline run: config, then simulate and freeze, then spectrum and decay.
pub struct RwRun {
    cfg: RunConfig,
    model: Box<dyn ReactionModel>,
    wave: Option<(FrozenWave, Field)>,
    spectrum: Option<SpectrumOutcome>,
    profile_ndr: Option<f64>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RwFrame {
    pub s12: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub x_star1: f64,
    pub x_star2: f64,
    /// Final time of the freezing run.
    pub t: f64,
    pub residual: f64,
}

/// Creates a run from a JSON config (NUL-terminated; null or `""` means defaults).
///
/// # Safety
/// `config_json` must be null or a valid C string; `out` must be writable.
/// The handle is released with [`rw_run_free`].
#[no_mangle]
pub unsafe extern "C" fn rw_run_new(config_json: *const c_char, out: *mut *mut RwRun) -> RwStatus {
    guard(|| {
        let text = if config_json.is_null() {
            ""
        } else {
            CStr::from_ptr(config_json).to_str().map_err(|_| (RwStatus::Config, "config is not UTF-8".to_string()))?
        };
        let cfg = if text.trim().is_empty() { RunConfig::default() } else { RunConfig::from_json_str(text).map_err(lib)? };
        let model = build_model(&cfg).map_err(lib)?;
        let run = RwRun { cfg, model, wave: None, spectrum: None, profile_ndr: None };
        write(out, Box::into_raw(Box::new(run)), "out")
    })
}

unsafe fn run_mut<'a>(h: *mut RwRun) -> Result<&'a mut RwRun, (RwStatus, String)> {
    h.as_mut().ok_or_else(|| null("run"))
}

fn state(msg: &str) -> (RwStatus, String) {
    (RwStatus::State, msg.to_string())
}

/// Simulates from the vortex seed and freezes; blocks until done.
///
/// # Safety
/// `h` must come from [`rw_run_new`] and not be used concurrently.
#[no_mangle]
pub unsafe extern "C" fn rw_run_freeze(h: *mut RwRun) -> RwStatus {
    guard(|| {
        let r = run_mut(h)?;
        let u = run_simulate(&r.cfg, &*r.model).map_err(lib)?;
        let (wave, _) = run_freeze(&r.cfg, &*r.model, &u).map_err(lib)?;
        let profile = wave.state.profile().map_err(lib)?.clone();
        r.wave = Some((wave, profile));
        r.spectrum = None;
        r.profile_ndr = None;
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`rw_run_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_run_frame(h: *mut RwRun, out: *mut RwFrame) -> RwStatus {
    guard(|| {
        let r = run_mut(h)?;
        let (w, _) = r.wave.as_ref().ok_or_else(|| state("call rw_run_freeze first"))?;
        let x = w.x_star();
        let s = &w.state;
        let f = RwFrame { s12: s.s12, tau1: s.tau[0], tau2: s.tau[1], x_star1: x[0], x_star2: x[1], t: s.t, residual: s.residual };
        write(out, f, "out")
    })
}

/// Computes the spectrum and the decay table of the frozen wave.
///
/// # Safety
/// `h` must come from [`rw_run_new`] and not be used concurrently.
#[no_mangle]
pub unsafe extern "C" fn rw_run_spectrum(h: *mut RwRun) -> RwStatus {
    guard(|| {
        let r = run_mut(h)?;
        let (w, profile) = r.wave.as_ref().ok_or_else(|| state("call rw_run_freeze first"))?;
        let spec = run_spectrum(&r.cfg, &*r.model, profile, w).map_err(lib)?;
        let decay = run_decay(&r.cfg, &*r.model, profile, &report_eigenfunctions(&spec)).map_err(lib)?;
        r.profile_ndr = Some(decay.rows[0].ndr);
        r.spectrum = Some(spec);
        Ok(())
    })
}

/// Copies up to `cap` eigenvalues (decreasing real part) into `re`/`im` and stores the
/// total count in `count`. Pass `cap = 0` to query the count.
///
/// # Safety
/// `h` must come from [`rw_run_new`]; `re` and `im` must have room for `cap` doubles;
/// `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_run_eigenvalues(h: *mut RwRun, re: *mut f64, im: *mut f64, cap: usize, count: *mut usize) -> RwStatus {
    guard(|| {
        let r = run_mut(h)?;
        let spec = r.spectrum.as_ref().ok_or_else(|| state("call rw_run_spectrum first"))?;
        let k = cap.min(spec.pairs.len());
        if k > 0 && (re.is_null() || im.is_null()) {
            return Err(null("re or im"));
        }
        for (i, p) in spec.pairs.iter().take(k).enumerate() {
            re.add(i).write(p.lambda.re);
            im.add(i).write(p.lambda.im);
        }
        write(count, spec.pairs.len(), "count")
    })
}

/// Numerical decay rate of the profile in the configured units.
///
/// # Safety
/// `h` must come from [`rw_run_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rw_run_profile_ndr(h: *mut RwRun, out: *mut f64) -> RwStatus {
    guard(|| {
        let r = run_mut(h)?;
        write(out, r.profile_ndr.ok_or_else(|| state("call rw_run_spectrum first"))?, "out")
    })
}

/// # Safety
/// `h` must come from [`rw_run_new`] or be null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rw_run_free(h: *mut RwRun) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
