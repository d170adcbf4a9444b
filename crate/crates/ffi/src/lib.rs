//! C interface to `sparsedom`.
//!
//! Every fallible call returns an [`SdStatus`]; on anything other than `SD_STATUS_OK`
//! the thread's last error message is set and can be read with [`sd_last_error`].
//! Handles are opaque and owned by the caller until passed to their `_free` function.
//! Panics are caught at the boundary and reported as `SD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sparsedom::config::RunConfig;
use sparsedom::dyadic::Domain;
use sparsedom::error::Error;
use sparsedom::grid::GridFunction;
use sparsedom::lab::ExperimentReport;
use sparsedom::runner::{self, Command};
use sparsedom::weights::{self, CubeScope};

/// Result of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Bad domain, exponent, parameter, configuration key or subcommand.
    InvalidArgument = 3,
    /// Input values failed a precondition (negative weight, length mismatch, ...).
    InvalidInput = 4,
    /// A cube family is not sparse at the requested `eta`.
    NotSparse = 5,
    /// The all-lattice scope was requested on a grid where it is too expensive.
    ScopeTooExpensive = 6,
    /// The random sparse-family sampler gave up.
    GeneratorFailure = 7,
    Io = 8,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 9,
    Panic = 10,
}

/// Cube scope of weight characteristics.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdScope {
    Dyadic = 0,
    AllLattice = 1,
}

/// Cell values on a dyadic grid.
pub struct SdGrid {
    inner: GridFunction,
}

/// Outcome of one subcommand run.
pub struct SdReport {
    inner: ExperimentReport,
    csv: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> SdStatus {
    match e {
        Error::NotEtaSparse { .. } => SdStatus::NotSparse,
        Error::ScopeTooExpensive { .. } => SdStatus::ScopeTooExpensive,
        Error::GeneratorFailure(_) => SdStatus::GeneratorFailure,
        Error::Io(_) => SdStatus::Io,
        Error::InvalidValue { .. }
        | Error::LengthMismatch { .. }
        | Error::DomainMismatch
        | Error::DimensionMismatch { .. }
        | Error::ZeroWeightMass(_)
        | Error::RootExceedsHeight { .. } => SdStatus::InvalidInput,
        _ => SdStatus::InvalidArgument,
    }
}

/// Run `body`, turning errors and panics into a status plus the last error message.
fn guard(body: impl FnOnce() -> Result<(), (SdStatus, String)>) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            SdStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            SdStatus::Panic
        }
    }
}

fn lib<T>(r: sparsedom::error::Result<T>) -> Result<T, (SdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, (SdStatus, String)> {
    // SAFETY: the caller passes either null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or((SdStatus::NullPointer, format!("{name} is null")))
}

fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, (SdStatus, String)> {
    if p.is_null() {
        return Err((SdStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: non-null and NUL-terminated by contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| (SdStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), (SdStatus, String)> {
    if out.is_null() {
        return Err((SdStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: non-null, writable by contract.
    unsafe { out.write(value) };
    Ok(())
}

fn scope_of(scope: SdScope) -> CubeScope {
    match scope {
        SdScope::Dyadic => CubeScope::Dyadic,
        SdScope::AllLattice => CubeScope::AllLattice,
    }
}

/// Message of the last failed call on this thread; empty after a successful call.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn sd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Grid function on `[0,1)^dim` with `2^level` cells per side from `len` row-major values
/// (axis 0 slowest).
///
/// # Safety
///
/// `values` must point to `len` readable doubles (or be null with `len == 0`) and `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sd_grid_new(
    dim: usize,
    level: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut SdGrid,
) -> SdStatus {
    guard(|| {
        if values.is_null() && len > 0 {
            return Err((SdStatus::NullPointer, "values is null".into()));
        }
        let domain = lib(Domain::new(dim, level))?;
        let data = if len == 0 {
            Vec::new()
        } else {
            // SAFETY: `values` points to `len` readable doubles by contract.
            unsafe { std::slice::from_raw_parts(values, len) }.to_vec()
        };
        let inner = lib(GridFunction::new(domain, data))?;
        write_out(out, Box::into_raw(Box::new(SdGrid { inner })), "out")
    })
}

/// Grid function from a spec string: `const:c`, `power:a:center`, `cells:v1,v2,...`,
/// `random-lognormal:seed:sigma` or `file:path`.
///
/// # Safety
///
/// `spec` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sd_grid_from_spec(
    dim: usize,
    level: u32,
    spec: *const c_char,
    out: *mut *mut SdGrid,
) -> SdStatus {
    guard(|| {
        let spec = text(spec, "spec")?;
        let domain = lib(Domain::new(dim, level))?;
        let inner = lib(GridFunction::from_spec(domain, spec))?;
        write_out(out, Box::into_raw(Box::new(SdGrid { inner })), "out")
    })
}

/// Release a grid; null is ignored.
///
/// # Safety
///
/// `grid` must be null or a live handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sd_grid_free(grid: *mut SdGrid) {
    if !grid.is_null() {
        // SAFETY: obtained from `Box::into_raw` in this library and not freed before.
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Number of cells, 0 for a null handle.
///
/// # Safety
///
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_grid_len(grid: *const SdGrid) -> usize {
    // SAFETY: null or a live handle.
    unsafe { grid.as_ref() }.map_or(0, |g| g.inner.values().len())
}

/// Copy the row-major values into `buf`. With a short buffer nothing is copied,
/// `*needed` receives the cell count and `SD_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
///
/// `grid` must be null or a live handle, `buf` must have room for `len` doubles and `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sd_grid_values(
    grid: *const SdGrid,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> SdStatus {
    guard(|| {
        let values = non_null(grid, "grid")?.inner.values();
        if !needed.is_null() {
            write_out(needed, values.len(), "needed")?;
        }
        if len < values.len() {
            return Err((
                SdStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", values.len()),
            ));
        }
        if buf.is_null() {
            return Err((SdStatus::NullPointer, "buf is null".into()));
        }
        // SAFETY: `buf` has room for `len >= values.len()` doubles by contract.
        unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
        Ok(())
    })
}

/// `[w]_{A_p}` over the given scope.
///
/// # Safety
///
/// `weight` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sd_ap_constant(
    weight: *const SdGrid,
    p: f64,
    scope: SdScope,
    out: *mut f64,
) -> SdStatus {
    guard(|| {
        let w = &non_null(weight, "weight")?.inner;
        let v = lib(weights::ap_constant(w, p, scope_of(scope)))?;
        write_out(out, v.value, "out")
    })
}

/// Fujii-Wilson constant `[w]_FW` over the given scope.
///
/// # Safety
///
/// `weight` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sd_fw_constant(
    weight: *const SdGrid,
    scope: SdScope,
    out: *mut f64,
) -> SdStatus {
    guard(|| {
        let w = &non_null(weight, "weight")?.inner;
        let v = lib(weights::fw_constant(w, scope_of(scope)))?;
        write_out(out, v.value, "out")
    })
}

/// Run a CLI subcommand (`"constants"`, `"theorem-a"`, ...) on a configuration given as
/// `key = value` lines. A failed assertion is not an error: the call returns
/// `SD_STATUS_OK` and [`sd_report_pass`] is 0.
///
/// # Safety
///
/// `command` and `config` must be null or NUL-terminated strings; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sd_run(
    command: *const c_char,
    config: *const c_char,
    out: *mut *mut SdReport,
) -> SdStatus {
    guard(|| {
        let command: Command = lib(text(command, "command")?.parse())?;
        let config = lib(RunConfig::parse(text(config, "config")?))?;
        let inner = lib(runner::run(command, &config))?;
        let csv = CString::new(inner.to_csv().replace('\0', " ")).expect("nul bytes removed");
        write_out(out, Box::into_raw(Box::new(SdReport { inner, csv })), "out")
    })
}

/// Release a report; null is ignored.
///
/// # Safety
///
/// `report` must be null or a live handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sd_report_free(report: *mut SdReport) {
    if !report.is_null() {
        // SAFETY: obtained from `Box::into_raw` in this library and not freed before.
        drop(unsafe { Box::from_raw(report) });
    }
}

/// 1 when every assertion of the run held, 0 otherwise or for a null handle.
///
/// # Safety
///
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_report_pass(report: *const SdReport) -> i32 {
    // SAFETY: null or a live handle.
    unsafe { report.as_ref() }.map_or(0, |r| r.inner.pass as i32)
}

/// The fitted quantity of the run (NaN for a null handle).
///
/// # Safety
///
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_report_fitted(report: *const SdReport) -> f64 {
    // SAFETY: null or a live handle.
    unsafe { report.as_ref() }.map_or(f64::NAN, |r| r.inner.fitted)
}

/// Look up a named metric of the run.
///
/// # Safety
///
/// `report` must be null or a live handle, `name` null or NUL-terminated, `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sd_report_metric(
    report: *const SdReport,
    name: *const c_char,
    out: *mut f64,
) -> SdStatus {
    guard(|| {
        let r = non_null(report, "report")?;
        let name = text(name, "name")?;
        let v = r.inner.metric(name).ok_or((
            SdStatus::InvalidArgument,
            format!("no metric named {name:?}"),
        ))?;
        write_out(out, v, "out")
    })
}

/// CSV rows of the run (header `label,...`). Owned by the report.
///
/// # Safety
///
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_report_csv(report: *const SdReport) -> *const c_char {
    // SAFETY: null or a live handle.
    unsafe { report.as_ref() }.map_or(ptr::null(), |r| r.csv.as_ptr())
}
