//! C interface to the planner.
//!
//! Objects cross the boundary as opaque handles created by `spc_*_new`/`load`
//! functions and released with the matching `spc_*_free`. Every fallible call
//! returns an [`SpcStatus`]; on failure a description is kept per thread and
//! can be read with [`spc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spc_relay::cli::apply_sweep_value;
use spc_relay::planner::{run_scheme, RunOptions, RunResult, Scheme};
use spc_relay::scenario::{default_scenario, load_scenario, parse_scenario, Scenario};
use spc_relay::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Io = 5,
    /// A numerical subproblem could not be solved.
    Solver = 6,
    /// Out-of-range argument or index.
    Domain = 7,
    /// Internal failure, including a caught panic.
    Internal = 8,
}

/// Optimization scheme.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcScheme {
    /// Joint trajectory, resource and blocklength design.
    Jtrd = 0,
    /// Resource allocation with the straight-line trajectory.
    Rdft = 1,
    /// Trajectory design with fixed resources.
    Tdfr = 2,
    /// The initial feasible point only.
    Initial = 3,
}

impl From<SpcScheme> for Scheme {
    fn from(s: SpcScheme) -> Self {
        match s {
            SpcScheme::Jtrd => Scheme::Jtrd,
            SpcScheme::Rdft => Scheme::Rdft,
            SpcScheme::Tdfr => Scheme::Tdfr,
            SpcScheme::Initial => Scheme::Initial,
        }
    }
}

/// Opaque scenario handle.
pub struct SpcScenario(Scenario);

/// Opaque handle to a finished run.
pub struct SpcResult(RunResult);

/// Per-slot values of a final solution (`slot` is 1-based).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpcSlotProfile {
    pub slot: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v_xy: f64,
    pub v_z: f64,
    pub p_a: f64,
    pub p_r: f64,
    pub l_u: f64,
    pub l_d: f64,
    pub r_u_fbl: f64,
    pub r_d_fbl: f64,
    pub r_u_inf: f64,
    pub r_d_inf: f64,
    pub b_s: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpcStatus {
    match e {
        Error::Parse(_) => SpcStatus::Parse,
        Error::Validation(_) => SpcStatus::Validation,
        Error::Io(_) => SpcStatus::Io,
        Error::Solver { .. } | Error::Build(_) | Error::DegenerateGeometry(_) => SpcStatus::Solver,
        Error::Domain(_) => SpcStatus::Domain,
        Error::Assertion(_) => SpcStatus::Internal,
    }
}

fn fail(status: SpcStatus, msg: impl Into<String>) -> SpcStatus {
    set_error(msg.into());
    status
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), SpcStatus>) -> SpcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpcStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SpcStatus::Internal, format!("panic: {msg}"))
        }
    }
}

fn lib<T>(r: spc_relay::Result<T>) -> Result<T, SpcStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, SpcStatus> {
    if p.is_null() {
        return Err(fail(SpcStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SpcStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, SpcStatus> {
    p.as_mut().ok_or_else(|| fail(SpcStatus::NullArgument, "null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, SpcStatus> {
    p.as_ref().ok_or_else(|| fail(SpcStatus::NullArgument, "null handle"))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn spc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reference scenario.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn spc_scenario_default(out: *mut *mut SpcScenario) -> SpcStatus {
    guard(|| {
        *out_ptr(out)? = Box::into_raw(Box::new(SpcScenario(default_scenario())));
        Ok(())
    })
}

/// Parse and validate a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spc_scenario_parse(toml: *const c_char, out: *mut *mut SpcScenario) -> SpcStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let s = lib(parse_scenario(text(toml)?))?;
        *out = Box::into_raw(Box::new(SpcScenario(s)));
        Ok(())
    })
}

/// Load and validate a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spc_scenario_load(path: *const c_char, out: *mut *mut SpcScenario) -> SpcStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let s = lib(load_scenario(text(path)?))?;
        *out = Box::into_raw(Box::new(SpcScenario(s)));
        Ok(())
    })
}

/// Set one of `l_max`, `eve_uncertainty`, `mission_time`, `eps_r`, `eps_b`,
/// `eta_e`. The scenario is left unchanged if the result would be invalid.
///
/// # Safety
/// `scenario` must be a live handle and `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn spc_scenario_set(scenario: *mut SpcScenario, key: *const c_char, value: f64) -> SpcStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| fail(SpcStatus::NullArgument, "null handle"))?;
        s.0 = lib(apply_sweep_value(&s.0, text(key)?, value))?;
        Ok(())
    })
}

/// Number of slots, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_scenario_n_slots(scenario: *const SpcScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.n_slots)
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spc_scenario_free(scenario: *mut SpcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run `scheme` on `scenario`.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spc_run(scenario: *const SpcScenario, scheme: SpcScheme, out: *mut *mut SpcResult) -> SpcStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let s = handle(scenario)?;
        let r = lib(run_scheme(&s.0, scheme.into(), &RunOptions::default()))?;
        *out = Box::into_raw(Box::new(SpcResult(r)));
        Ok(())
    })
}

/// Final EAST in bits per second, or NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_result_east(result: *const SpcResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.east)
}

/// EAST of the initial feasible point, or NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_result_initial_east(result: *const SpcResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.initial_east)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_result_converged(result: *const SpcResult) -> bool {
    result.as_ref().is_some_and(|r| r.0.converged)
}

/// Number of outer iterations performed.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_result_iterations(result: *const SpcResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.iterations())
}

/// Copy up to `len` EAST values (initial point first) into `buf` and return
/// the full trace length. Pass a null `buf` to query the length.
///
/// # Safety
/// `result` must be null or a live handle; `buf` must be null or point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn spc_result_trace(result: *const SpcResult, buf: *mut f64, len: usize) -> usize {
    let Some(r) = result.as_ref() else { return 0 };
    let trace = &r.0.trace.east;
    if !buf.is_null() {
        let n = len.min(trace.len());
        ptr::copy_nonoverlapping(trace.as_ptr(), buf, n);
    }
    trace.len()
}

/// Number of slot profiles in the result.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spc_result_n_slots(result: *const SpcResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.profiles.len())
}

/// Profile of slot `index` (0-based).
///
/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spc_result_profile(result: *const SpcResult, index: usize, out: *mut SpcSlotProfile) -> SpcStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let r = handle(result)?;
        let p = r.0.profiles.get(index).ok_or_else(|| {
            fail(SpcStatus::Domain, format!("slot index {index} out of range (n = {})", r.0.profiles.len()))
        })?;
        *out = SpcSlotProfile {
            slot: p.slot as u32,
            x: p.x,
            y: p.y,
            z: p.z,
            v_xy: p.v_xy,
            v_z: p.v_z,
            p_a: p.p_a,
            p_r: p.p_r,
            l_u: p.l_u,
            l_d: p.l_d,
            r_u_fbl: p.r_u_fbl,
            r_d_fbl: p.r_d_fbl,
            r_u_inf: p.r_u_inf,
            r_d_inf: p.r_d_inf,
            b_s: p.b_s,
        };
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spc_result_free(result: *mut SpcResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
