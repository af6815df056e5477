//! C ABI over the steering pipeline.
//!
//! Every entry point returns an `FsStatus`; on failure the message is kept in
//! a thread-local slot readable through `fs_last_error`. Handles are opaque and
//! must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use flatsteer::cli::config::ExperimentConfig;
use flatsteer::cli::pipeline::{verify, Verification};
use flatsteer::target::{classify_reachability, Geometry, Verdict};
use flatsteer::Prec;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Schema = 3,
    Numeric = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Reachability verdicts.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FsVerdict {
    Reachable = 0,
    Unreachable = 1,
    Undetermined = 2,
}

/// Parsed experiment configuration.
pub struct FsConfig(ExperimentConfig);

/// Outcome of a full synthesis and replay.
pub struct FsResult {
    rel_linf: f64,
    linf: f64,
    pass: bool,
    n: usize,
    xs: Vec<f64>,
    terminal: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn guard(f: impl FnOnce() -> Result<(), (FsStatus, String)>) -> FsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FsStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            FsStatus::Panic
        }
    }
}

fn null(what: &str) -> (FsStatus, String) {
    (FsStatus::NullPointer, format!("{what} is null"))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// e^{1/(2e)}.
#[no_mangle]
pub extern "C" fn fs_r0() -> f64 {
    flatsteer::r0()
}

/// Parses a JSON experiment configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_config_from_json(json: *const c_char, out: *mut *mut FsConfig) -> FsStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(json).to_str().map_err(|e| (FsStatus::InvalidUtf8, e.to_string()))?;
        let cfg = ExperimentConfig::parse(text).map_err(|e| (FsStatus::Schema, e.to_string()))?;
        *out = Box::into_raw(Box::new(FsConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from `fs_config_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_config_free(cfg: *mut FsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Reachability verdict for the configured target and setting.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_classify(cfg: *const FsConfig, out: *mut FsVerdict) -> FsStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let schema = |e: flatsteer::cli::config::SchemaError| (FsStatus::Schema, e.to_string());
        let p = cfg.problem().map_err(schema)?;
        let f = cfg.analytic_target().map_err(schema)?;
        let (a, b) = p.domain.map_or(p.domain(), |d| (d[0], d[1]));
        let v = classify_reachability(&f, p.setting.reachability(), Geometry { left: a, right: b })
            .map_err(|e| (FsStatus::Numeric, e.to_string()))?;
        *out = match v.verdict {
            Verdict::Reachable => FsVerdict::Reachable,
            Verdict::Unreachable => FsVerdict::Unreachable,
            Verdict::Undetermined => FsVerdict::Undetermined,
        };
        Ok(())
    })
}

/// Synthesizes the controls, replays them and measures the terminal error.
/// `precision_bits` = 0 keeps the configured precision; `tolerance` ≤ 0 keeps
/// the configured tolerance.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_verify(
    cfg: *const FsConfig,
    precision_bits: u32,
    tolerance: f64,
    out: *mut *mut FsResult,
) -> FsStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        cfg.validate_pipeline().map_err(|e| (FsStatus::Schema, e.to_string()))?;
        let bits = match precision_bits {
            0 => cfg.synthesis.as_ref().map_or(256, |s| s.precision_bits),
            b if (53..=4096).contains(&b) => b,
            b => return Err((FsStatus::Schema, format!("precision {b} must lie in [53, 4096]"))),
        };
        let tol = if tolerance > 0.0 { tolerance } else { cfg.verify.tolerance };
        let v: Verification = verify(cfg, Prec(bits), tol).map_err(|e| (FsStatus::Numeric, e.to_string()))?;
        let row = v.field.last_row();
        let xs = v.field.xs.clone();
        let terminal = row.to_vec();
        *out = Box::into_raw(Box::new(FsResult {
            rel_linf: v.sim.terminal.rel_linf,
            linf: v.sim.terminal.linf,
            pass: v.pass,
            n: v.synthesis.report.n,
            xs,
            terminal,
        }));
        Ok(())
    })
}

/// # Safety
/// `res` must come from `fs_verify` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fs_result_free(res: *mut FsResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// # Safety
/// `res` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fs_result_rel_error(res: *const FsResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.rel_linf)
}

/// # Safety
/// `res` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fs_result_abs_error(res: *const FsResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.linf)
}

/// 1 if the terminal error met the tolerance, 0 otherwise (or for null).
///
/// # Safety
/// `res` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fs_result_passed(res: *const FsResult) -> i32 {
    res.as_ref().map_or(0, |r| r.pass as i32)
}

/// Truncation order used for the series.
///
/// # Safety
/// `res` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fs_result_order(res: *const FsResult) -> usize {
    res.as_ref().map_or(0, |r| r.n)
}

/// Number of grid nodes in the terminal profile.
///
/// # Safety
/// `res` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fs_result_len(res: *const FsResult) -> usize {
    res.as_ref().map_or(0, |r| r.terminal.len())
}

/// Copies nodes and simulated terminal values; either buffer may be null.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fs_result_terminal(res: *const FsResult, xs: *mut f64, values: *mut f64, len: usize) -> FsStatus {
    guard(|| {
        let r = res.as_ref().ok_or_else(|| null("res"))?;
        if len < r.terminal.len() {
            return Err((FsStatus::BufferTooSmall, format!("need {} entries, got {len}", r.terminal.len())));
        }
        if !xs.is_null() {
            ptr::copy_nonoverlapping(r.xs.as_ptr(), xs, r.xs.len());
        }
        if !values.is_null() {
            ptr::copy_nonoverlapping(r.terminal.as_ptr(), values, r.terminal.len());
        }
        Ok(())
    })
}
