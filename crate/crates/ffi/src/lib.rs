//! C ABI over `featdp`.
//!
//! Every function returns a [`FeatdpStatus`]; results go through out-pointers.
//! On failure, [`featdp_last_error`] returns a message for the calling thread.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use featdp::adversary;
use featdp::bounds;
use featdp::harness::{Experiment, ExperimentConfig};
use featdp::mimo;
use featdp::privacy::{self, PrivacyBudget};
use featdp::randmat::{self, EncoderMatrix};
use featdp::Error;
use nalgebra::DVector;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Dimension = 4,
    Degenerate = 5,
    Infeasible = 6,
    Regime = 7,
    Internal = 8,
}

/// Experiment configuration handle.
pub struct FeatdpConfig {
    inner: ExperimentConfig,
}

/// Sampled encoder matrix handle.
pub struct FeatdpEncoder {
    inner: EncoderMatrix,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatdpCalibration {
    pub sigma2: f64,
    pub sensitivity: f64,
    pub c_w: f64,
    pub d_z: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatdpMinimax {
    pub nu2: f64,
    pub bound: f64,
    pub gamma_star: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatdpServerBound {
    pub approx_term: f64,
    pub privacy_term: f64,
    pub channel_term: f64,
    pub total: f64,
}

/// Mean and standard error of each per-trial metric.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatdpTrialStats {
    pub trials: usize,
    pub server_z_mean: f64,
    pub server_f_mean: f64,
    pub server_f_stderr: f64,
    pub adversary_z_mean: f64,
    pub adversary_z_stderr: f64,
    pub adversary_f_mean: f64,
    pub accuracy_mean: f64,
    /// Closed-form minimax bound, NaN when undefined.
    pub bound_adversary: f64,
    pub bound_server: f64,
    pub bound_accuracy: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FeatdpStatus {
    match err {
        Error::Config { .. } | Error::Io(_) => FeatdpStatus::Config,
        Error::Dimension(_) => FeatdpStatus::Dimension,
        Error::Degenerate(_) => FeatdpStatus::Degenerate,
        Error::Infeasible(_) => FeatdpStatus::Infeasible,
        Error::Regime(_) => FeatdpStatus::Regime,
        Error::Trial { source, .. } => status_of(source),
        _ => FeatdpStatus::InvalidArgument,
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), (FeatdpStatus, String)>>(f: F) -> FeatdpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FeatdpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FeatdpStatus::Internal
        }
    }
}

fn lift<T>(r: featdp::Result<T>) -> Result<T, (FeatdpStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (FeatdpStatus, String) {
    (FeatdpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (FeatdpStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FeatdpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FeatdpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn featdp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// New configuration with default values.
#[no_mangle]
pub extern "C" fn featdp_config_new() -> *mut FeatdpConfig {
    Box::into_raw(Box::new(FeatdpConfig {
        inner: ExperimentConfig::default(),
    }))
}

/// # Safety
/// `cfg` must come from [`featdp_config_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn featdp_config_free(cfg: *mut FeatdpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Assign one key using the config-file syntax.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn featdp_config_set(
    cfg: *mut FeatdpConfig,
    key: *const c_char,
    value: *const c_char,
) -> FeatdpStatus {
    guard(|| {
        let cfg = out_ref(cfg, "config")?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        lift(cfg.inner.set(key, value))
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn featdp_config_validate(cfg: *const FeatdpConfig) -> FeatdpStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("config"))?;
        lift(cfg.inner.validate())
    })
}

/// Draw an `r x d` Laplace(0, b) encoder.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_encoder_sample(
    r: usize,
    d: usize,
    b: f64,
    seed: u64,
    out: *mut *mut FeatdpEncoder,
) -> FeatdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = lift(randmat::sample_encoder(r, d, b, seed))?;
        *out = Box::into_raw(Box::new(FeatdpEncoder { inner }));
        Ok(())
    })
}

/// # Safety
/// `enc` must come from [`featdp_encoder_sample`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn featdp_encoder_free(enc: *mut FeatdpEncoder) {
    if !enc.is_null() {
        drop(Box::from_raw(enc));
    }
}

/// Shape of the encoder.
///
/// # Safety
/// `enc` must be a live handle; `rows` and `cols` writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_encoder_shape(
    enc: *const FeatdpEncoder,
    rows: *mut usize,
    cols: *mut usize,
) -> FeatdpStatus {
    guard(|| {
        let enc = enc.as_ref().ok_or_else(|| null("encoder"))?;
        *out_ref(rows, "rows")? = enc.inner.rows();
        *out_ref(cols, "cols")? = enc.inner.cols();
        Ok(())
    })
}

/// Copy the entries in row-major order into `buf` of length `len = r * d`.
///
/// # Safety
/// `enc` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn featdp_encoder_entries(enc: *const FeatdpEncoder, buf: *mut f64, len: usize) -> FeatdpStatus {
    guard(|| {
        let enc = enc.as_ref().ok_or_else(|| null("encoder"))?;
        let m = enc.inner.entries();
        if len != m.len() {
            return Err((
                FeatdpStatus::Dimension,
                format!("buffer holds {len}, encoder has {}", m.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[i * m.ncols() + j] = m[(i, j)];
            }
        }
        Ok(())
    })
}

/// Largest singular value.
///
/// # Safety
/// `enc` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_encoder_spectral_norm(enc: *const FeatdpEncoder, out: *mut f64) -> FeatdpStatus {
    guard(|| {
        let enc = enc.as_ref().ok_or_else(|| null("encoder"))?;
        *out_ref(out, "out")? = lift(randmat::spectral_norm(enc.inner.entries()))?;
        Ok(())
    })
}

/// `z = W f` for `f` of length `d`, written to `z` of length `r`.
///
/// # Safety
/// `enc` must be a live handle; `f` must hold `d` doubles and `z` `r`.
#[no_mangle]
pub unsafe extern "C" fn featdp_encoder_apply(
    enc: *const FeatdpEncoder,
    f: *const f64,
    d: usize,
    z: *mut f64,
    r: usize,
) -> FeatdpStatus {
    guard(|| {
        let enc = enc.as_ref().ok_or_else(|| null("encoder"))?;
        if d != enc.inner.cols() || r != enc.inner.rows() {
            return Err((
                FeatdpStatus::Dimension,
                format!(
                    "encoder is {}x{}, buffers are {r} and {d}",
                    enc.inner.rows(),
                    enc.inner.cols()
                ),
            ));
        }
        if f.is_null() || z.is_null() {
            return Err(null("vector buffer"));
        }
        let latent = enc.inner.entries() * DVector::from_column_slice(std::slice::from_raw_parts(f, d));
        std::slice::from_raw_parts_mut(z, r).copy_from_slice(latent.as_slice());
        Ok(())
    })
}

/// Noise calibration for `(epsilon, delta)` and an `r x d` encoder.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_calibrate(
    epsilon: f64,
    delta: f64,
    r: usize,
    d: usize,
    b: f64,
    clip_norm: f64,
    out: *mut FeatdpCalibration,
) -> FeatdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let budget = lift(PrivacyBudget::new(epsilon, delta))?;
        let c = lift(privacy::calibrate(budget, r, d, b, clip_norm))?;
        *out = FeatdpCalibration {
            sigma2: c.sigma2,
            sensitivity: c.sensitivity,
            c_w: c.c_w,
            d_z: c.d_z,
        };
        Ok(())
    })
}

/// Minimax adversary MSE for a given effective noise `nu2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_minimax_bound(
    g: f64,
    alpha: f64,
    d_z: f64,
    r: usize,
    nu2: f64,
    out: *mut FeatdpMinimax,
) -> FeatdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let m = lift(adversary::minimax_bound(g, alpha, d_z, r, nu2))?;
        *out = FeatdpMinimax {
            nu2: m.nu2,
            bound: m.bound,
            gamma_star: m.gamma_star,
        };
        Ok(())
    })
}

/// Multi-antenna adversary bound.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_mimo_bound(
    r: usize,
    alpha: f64,
    sigma2: f64,
    sigma_a2: f64,
    c_z2: f64,
    antennas: usize,
    out: *mut f64,
) -> FeatdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = lift(mimo::mimo_bound(r, alpha, sigma2, sigma_a2, c_z2, antennas))?.bound;
        Ok(())
    })
}

/// `max(0, p0 (1 - mse / margin^2))`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_accuracy_lower_bound(p0: f64, mse: f64, margin: f64, out: *mut f64) -> FeatdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = lift(bounds::accuracy_lower_bound(p0, mse, margin))?.lower;
        Ok(())
    })
}

/// Smallest `r` whose minimax bound reaches `omega` with `nu2` and `d_z`
/// held fixed.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_optimal_dim_explicit(
    g: f64,
    alpha: f64,
    d_z: f64,
    nu2: f64,
    omega: f64,
    out: *mut usize,
) -> FeatdpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = lift(bounds::optimal_dim_explicit(g, alpha, d_z, nu2, omega))?.r_star;
        Ok(())
    })
}

/// Smallest `r` in `[1, r_max]` reaching `omega` with the calibration
/// recomputed at every `r`. Uses the config's budget, encoder and channel
/// parameters.
///
/// # Safety
/// `cfg` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_optimal_dim_consistent(cfg: *const FeatdpConfig, out: *mut usize) -> FeatdpStatus {
    guard(|| {
        let c = &cfg.as_ref().ok_or_else(|| null("config"))?.inner;
        let out = out_ref(out, "out")?;
        lift(c.validate())?;
        let problem = bounds::ConsistentDimensionProblem {
            budget: lift(c.budget())?,
            b: c.b,
            clip_norm: c.clip_norm,
            d: c.d,
            g: c.g,
            alpha: c.alpha(),
            sigma_a2: c.sigma_a2,
            omega: c.omega,
            r_max: c.r_max(),
        };
        *out = lift(bounds::optimal_dim_consistent(&problem))?.r_star;
        Ok(())
    })
}

/// Three-term server MSE bound for the config's encoder draw, pseudo-inverse
/// decoder and `||f||^2 = C_f^2`.
///
/// # Safety
/// `cfg` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_server_bound(cfg: *const FeatdpConfig, out: *mut FeatdpServerBound) -> FeatdpStatus {
    guard(|| {
        let c = &cfg.as_ref().ok_or_else(|| null("config"))?.inner;
        let out = out_ref(out, "out")?;
        let s = lift(Experiment::new(c))?.closed_forms().server;
        *out = FeatdpServerBound {
            approx_term: s.approx_term,
            privacy_term: s.privacy_term,
            channel_term: s.channel_term,
            total: s.total,
        };
        Ok(())
    })
}

/// Monte Carlo trials for the config, with the matching closed forms.
///
/// # Safety
/// `cfg` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn featdp_run_trials(cfg: *const FeatdpConfig, out: *mut FeatdpTrialStats) -> FeatdpStatus {
    guard(|| {
        let c = &cfg.as_ref().ok_or_else(|| null("config"))?.inner;
        let out = out_ref(out, "out")?;
        let exp = lift(Experiment::new(c))?;
        let stats = lift(exp.run())?;
        let cf = exp.closed_forms();
        *out = FeatdpTrialStats {
            trials: stats.n,
            server_z_mean: stats.server_z.mean(),
            server_f_mean: stats.server_f.mean(),
            server_f_stderr: stats.server_f.stderr(),
            adversary_z_mean: stats.adversary_z.mean(),
            adversary_z_stderr: stats.adversary_z.stderr(),
            adversary_f_mean: stats.adversary_f.mean(),
            accuracy_mean: stats.accuracy.mean(),
            bound_adversary: cf.minimax.map_or(f64::NAN, |m| m.bound),
            bound_server: cf.server.total,
            bound_accuracy: lift(exp.accuracy_bound(&stats))?.lower,
        };
        Ok(())
    })
}
