//! C ABI for `rabbitt-core`.
//!
//! Every function returns a [`RabbittStatus`]; results go through out
//! pointers. On failure [`rabbitt_last_error`] describes the error on the
//! calling thread. Scans are exposed as opaque [`RabbittScan`] handles that
//! must be released with [`rabbitt_scan_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use rabbitt_core::cli::SynthConfig;
use rabbitt_core::fit::{fit_band, fit_oscillation, SidebandFit};
use rabbitt_core::phases::{atomic_phase_3sb, cc_phase_unwrapped, coulomb_phase, PhaseOptions};
use rabbitt_core::scan::DelayScan;
use rabbitt_core::specfun::log_gamma;
use rabbitt_core::synth::{apply_decay_and_noise, synthesize_scan};
use rabbitt_core::units::{ev_to_au, photon_energy, sideband_ladder, Band};
use rabbitt_core::Error;

/// Status codes. The nonzero library codes match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RabbittStatus {
    Ok = 0,
    ConfigError = 2,
    PreconditionError = 3,
    NumericalError = 4,
    NullPointer = 10,
    InvalidArgument = 11,
    Panic = 12,
}

/// Sideband within a three-sideband group.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RabbittBand {
    Lower = 0,
    Center = 1,
    Higher = 2,
}

impl From<RabbittBand> for Band {
    fn from(b: RabbittBand) -> Self {
        match b {
            RabbittBand::Lower => Band::Lower,
            RabbittBand::Center => Band::Center,
            RabbittBand::Higher => Band::Higher,
        }
    }
}

/// Result of a cosine-plus-quadratic fit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RabbittFit {
    pub energy: f64,
    pub i0: f64,
    pub c1: f64,
    pub c2: f64,
    pub i1: f64,
    pub phase: f64,
    pub residual_rms: f64,
    pub phase_err: f64,
}

impl From<&SidebandFit> for RabbittFit {
    fn from(f: &SidebandFit) -> Self {
        Self {
            energy: f.energy,
            i0: f.i0,
            c1: f.c1,
            c2: f.c2,
            i1: f.i1,
            phase: f.phase,
            residual_rms: f.residual_rms,
            phase_err: f.phase_err,
        }
    }
}

/// Opaque delay scan.
pub struct RabbittScan {
    scan: DelayScan,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RabbittStatus {
    match e.exit_code() {
        3 => RabbittStatus::PreconditionError,
        4 => RabbittStatus::NumericalError,
        _ => RabbittStatus::ConfigError,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RabbittStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RabbittStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(&format!("null pointer passed for `{name}`"));
            RabbittStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(&msg);
            RabbittStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal panic");
            RabbittStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn scan_ref<'a>(h: *const RabbittScan) -> Result<&'a DelayScan, Failure> {
    h.as_ref().map(|s| &s.scan).ok_or(Failure::Null("scan"))
}

fn band_from(code: i32) -> Result<RabbittBand, Failure> {
    match code {
        0 => Ok(RabbittBand::Lower),
        1 => Ok(RabbittBand::Center),
        2 => Ok(RabbittBand::Higher),
        other => Err(Failure::Invalid(format!("unknown band code {other}"))),
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rabbitt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rabbitt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Principal-branch `log Γ(re + i·im)`.
#[no_mangle]
pub unsafe extern "C" fn rabbitt_log_gamma(re: f64, im: f64, out_re: *mut f64, out_im: *mut f64) -> RabbittStatus {
    guard(|| {
        let v = log_gamma(Complex64::new(re, im))?;
        *out(out_re, "out_re")? = v.re;
        *out(out_im, "out_im")? = v.im;
        Ok(())
    })
}

/// Continuum–continuum phase for the transition `kappa → k` (unwrapped).
#[no_mangle]
pub unsafe extern "C" fn rabbitt_cc_phase(k: f64, kappa: f64, z: f64, antisymmetrize: bool, result: *mut f64) -> RabbittStatus {
    guard(|| {
        *out(result, "result")? = cc_phase_unwrapped(k, kappa, z, PhaseOptions { antisymmetrize })?;
        Ok(())
    })
}

/// Coulomb phase `arg Γ(λ + 1 − iZ/κ)` in `(−π, π]`.
#[no_mangle]
pub unsafe extern "C" fn rabbitt_coulomb_phase(lambda: u32, kappa: f64, z: f64, result: *mut f64) -> RabbittStatus {
    guard(|| {
        *out(result, "result")? = coulomb_phase(lambda, kappa, z)?;
        Ok(())
    })
}

/// Atomic phase of one band of group `q`, wrapped to `(−π, π]`.
/// `band`: 0 lower, 1 center, 2 higher. `ip` in a.u.
#[no_mangle]
pub unsafe extern "C" fn rabbitt_atomic_phase_3sb(
    q: u32,
    wavelength_nm: f64,
    ip: f64,
    z: f64,
    lambda: u32,
    band: i32,
    antisymmetrize: bool,
    result: *mut f64,
) -> RabbittStatus {
    guard(|| {
        let band = band_from(band)?;
        let ladder = sideband_ladder(q, photon_energy(wavelength_nm)?, ip)?;
        let r = atomic_phase_3sb(band.into(), &ladder, z, lambda, PhaseOptions { antisymmetrize })?;
        *out(result, "result")? = r.phase;
        Ok(())
    })
}

/// Fits `I0 + c1·τ + c2·τ² + I1·cos(freq·τ − φ)` to `n` samples.
#[no_mangle]
pub unsafe extern "C" fn rabbitt_fit_oscillation(
    tau: *const f64,
    signal: *const f64,
    n: usize,
    freq: f64,
    result: *mut RabbittFit,
) -> RabbittStatus {
    guard(|| {
        if tau.is_null() {
            return Err(Failure::Null("tau"));
        }
        if signal.is_null() {
            return Err(Failure::Null("signal"));
        }
        let t = std::slice::from_raw_parts(tau, n);
        let s = std::slice::from_raw_parts(signal, n);
        let fit = fit_oscillation(t, s, freq)?;
        *out(result, "result")? = RabbittFit::from(&fit);
        Ok(())
    })
}

/// Parses a delay-scan container.
#[no_mangle]
pub unsafe extern "C" fn rabbitt_scan_from_json(json: *const c_char, scan: *mut *mut RabbittScan) -> RabbittStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        let slot = out(scan, "scan")?;
        *slot = ptr::null_mut();
        let parsed = DelayScan::from_json(text)?;
        *slot = Box::into_raw(Box::new(RabbittScan { scan: parsed }));
        Ok(())
    })
}

/// Synthesizes a scan from a synth configuration (JSON, schema_version 1).
#[no_mangle]
pub unsafe extern "C" fn rabbitt_synth_from_json(config: *const c_char, seed: u64, scan: *mut *mut RabbittScan) -> RabbittStatus {
    guard(|| {
        let text = c_str(config, "config")?;
        let slot = out(scan, "scan")?;
        *slot = ptr::null_mut();
        let cfg: SynthConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid synth config: {e}")))?;
        if cfg.schema_version != rabbitt_core::cli::CONFIG_SCHEMA_VERSION {
            return Err(Error::config(format!("unsupported schema_version {}", cfg.schema_version)).into());
        }
        let mut s = synthesize_scan(&cfg.field, &cfg.options)?;
        if cfg.noise > 0.0 || cfg.drift != Default::default() {
            s = apply_decay_and_noise(&s, cfg.drift, cfg.noise, seed)?;
        }
        *slot = Box::into_raw(Box::new(RabbittScan { scan: s }));
        Ok(())
    })
}

/// Releases a scan; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rabbitt_scan_free(scan: *mut RabbittScan) {
    if !scan.is_null() {
        drop(Box::from_raw(scan));
    }
}

/// Number of delays and energies of a scan.
#[no_mangle]
pub unsafe extern "C" fn rabbitt_scan_shape(scan: *const RabbittScan, n_delay: *mut usize, n_energy: *mut usize) -> RabbittStatus {
    guard(|| {
        let s = scan_ref(scan)?;
        *out(n_delay, "n_delay")? = s.delay.len();
        *out(n_energy, "n_energy")? = s.energy.len();
        Ok(())
    })
}

/// Copies the axes (a.u.) and the row-major signal into caller buffers of the
/// sizes reported by [`rabbitt_scan_shape`]. Any pointer may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn rabbitt_scan_copy(
    scan: *const RabbittScan,
    delay: *mut f64,
    energy: *mut f64,
    signal: *mut f64,
) -> RabbittStatus {
    guard(|| {
        let s = scan_ref(scan)?;
        if !delay.is_null() {
            std::slice::from_raw_parts_mut(delay, s.delay.len()).copy_from_slice(&s.delay);
        }
        if !energy.is_null() {
            std::slice::from_raw_parts_mut(energy, s.energy.len()).copy_from_slice(&s.energy);
        }
        if !signal.is_null() {
            let dst = std::slice::from_raw_parts_mut(signal, s.signal.len());
            for (d, v) in dst.iter_mut().zip(s.signal.iter()) {
                *d = *v;
            }
        }
        Ok(())
    })
}

/// Serializes a scan; free the string with [`rabbitt_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rabbitt_scan_to_json(scan: *const RabbittScan, json: *mut *mut c_char) -> RabbittStatus {
    guard(|| {
        let s = scan_ref(scan)?;
        let slot = out(json, "json")?;
        *slot = ptr::null_mut();
        let text = s.to_json()?;
        *slot = CString::new(text).map_err(|e| Failure::Invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rabbitt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Integrates and fits one sideband of group `q` (window in eV).
#[no_mangle]
pub unsafe extern "C" fn rabbitt_scan_fit_band(
    scan: *const RabbittScan,
    q: u32,
    band: i32,
    window_ev: f64,
    result: *mut RabbittFit,
) -> RabbittStatus {
    guard(|| {
        let s = scan_ref(scan)?;
        let band = band_from(band)?;
        let fit = fit_band(s, q, band.into(), ev_to_au(window_ev))?;
        *out(result, "result")? = RabbittFit::from(&fit);
        Ok(())
    })
}
