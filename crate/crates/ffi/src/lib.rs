//! C ABI over `cdpr-core`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Every fallible call returns a [`CdprStatus`]; on a
//! non-zero status [`cdpr_last_error_message`] describes the failure on the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cdpr_core::control::ControllerKind;
use cdpr_core::harness::{
    metrics, run_checks, run_scenario, write_run, CableMode, CheckSuite, HarnessError, Scenario, SimResult,
    CSV_COLUMNS,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdprStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Scenario text or values rejected.
    Config = 3,
    Io = 4,
    /// The simulation aborted; the run handle still holds the partial log.
    RunFailed = 5,
    /// Output buffer too small.
    BufferTooSmall = 6,
    Panic = 7,
}

pub struct CdprScenario(Scenario);

pub struct CdprRun {
    scenario: Scenario,
    result: SimResult,
}

/// Scalar results of a run. Angles in rad, lengths in m, tensions in N.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CdprMetrics {
    pub rms_err_angle_transient: f64,
    /// NaN when the run ends inside the transient window.
    pub rms_err_angle_steady: f64,
    pub rms_position_error: f64,
    pub final_err_angle: f64,
    pub final_position_error: f64,
    pub max_tension: f64,
    pub min_tension: f64,
    pub clamp_events: u64,
    pub passivity_margin: f64,
    pub final_a_hat: [f64; 7],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: CdprStatus, msg: impl Into<String>) -> CdprStatus {
    set_error(msg);
    status
}

fn harness_status(e: &HarnessError) -> CdprStatus {
    match e {
        HarnessError::Config(_) => CdprStatus::Config,
        HarnessError::Io(_) => CdprStatus::Io,
        HarnessError::Serialize(_) => CdprStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> CdprStatus) -> CdprStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == CdprStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(CdprStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, CdprStatus> {
    if p.is_null() {
        return Err(fail(CdprStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CdprStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

macro_rules! deref {
    ($p:expr, $what:literal) => {
        match $p.as_ref() {
            Some(v) => v,
            None => return fail(CdprStatus::NullPointer, concat!($what, " is null")),
        }
    };
    (mut $p:expr, $what:literal) => {
        match $p.as_mut() {
            Some(v) => v,
            None => return fail(CdprStatus::NullPointer, concat!($what, " is null")),
        }
    };
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cdpr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn cdpr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The shipped default scenario.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdpr_scenario_default(out: *mut *mut CdprScenario) -> CdprStatus {
    guard(|| {
        let out = deref!(mut out, "out");
        *out = Box::into_raw(Box::new(CdprScenario(Scenario::default_config())));
        CdprStatus::Ok
    })
}

/// Parses a TOML scenario.
///
/// # Safety
/// `toml` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdpr_scenario_from_toml(toml: *const c_char, out: *mut *mut CdprScenario) -> CdprStatus {
    guard(|| {
        let out = deref!(mut out, "out");
        let src = match text(toml, "toml") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match Scenario::from_toml(src).and_then(|sc| sc.validate().map(|_| sc)) {
            Ok(sc) => {
                *out = Box::into_raw(Box::new(CdprScenario(sc)));
                CdprStatus::Ok
            }
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `sc` must come from this library and not be used afterwards; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn cdpr_scenario_free(sc: *mut CdprScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Selects the controller by CLI name (`so3`, `quat`, ...).
///
/// # Safety
/// `sc` must be a live handle; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cdpr_scenario_set_controller(sc: *mut CdprScenario, name: *const c_char) -> CdprStatus {
    guard(|| {
        let sc = deref!(mut sc, "scenario");
        match text(name, "name").map(|n| n.parse::<ControllerKind>()) {
            Ok(Ok(k)) => {
                sc.0.controller = k;
                CdprStatus::Ok
            }
            Ok(Err(m)) => fail(CdprStatus::InvalidArgument, m),
            Err(s) => s,
        }
    })
}

/// `rigid` or `elastic`. Switching mode resets the step size and log
/// interval to the new mode's defaults.
///
/// # Safety
/// `sc` must be a live handle; `mode` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cdpr_scenario_set_cables(sc: *mut CdprScenario, mode: *const c_char) -> CdprStatus {
    guard(|| {
        let sc = deref!(mut sc, "scenario");
        match text(mode, "mode").map(|n| n.parse::<CableMode>()) {
            Ok(Ok(m)) => {
                if m != sc.0.cables {
                    sc.0.dt = None;
                    sc.0.output.log_interval = None;
                }
                sc.0.cables = m;
                CdprStatus::Ok
            }
            Ok(Err(m)) => fail(CdprStatus::InvalidArgument, m),
            Err(s) => s,
        }
    })
}

/// # Safety
/// `sc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cdpr_scenario_set_duration(sc: *mut CdprScenario, seconds: f64) -> CdprStatus {
    guard(|| {
        let sc = deref!(mut sc, "scenario");
        if !(seconds >= 0.0 && seconds.is_finite()) {
            return fail(CdprStatus::InvalidArgument, format!("duration must be finite and >= 0, got {seconds}"));
        }
        sc.0.duration = seconds;
        CdprStatus::Ok
    })
}

/// Integration step; `0` restores the mode default.
///
/// # Safety
/// `sc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cdpr_scenario_set_dt(sc: *mut CdprScenario, seconds: f64) -> CdprStatus {
    guard(|| {
        let sc = deref!(mut sc, "scenario");
        if seconds == 0.0 {
            sc.0.dt = None;
        } else if seconds > 0.0 && seconds.is_finite() {
            sc.0.dt = Some(seconds);
        } else {
            return fail(CdprStatus::InvalidArgument, format!("dt must be finite and > 0, got {seconds}"));
        }
        CdprStatus::Ok
    })
}

/// Runs the scenario. On `Ok` or `RunFailed`, `*out` receives a run handle
/// holding the (possibly partial) log.
///
/// # Safety
/// `sc` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdpr_run(sc: *const CdprScenario, out: *mut *mut CdprRun) -> CdprStatus {
    guard(|| {
        let sc = deref!(sc, "scenario");
        let out = deref!(mut out, "out");
        *out = ptr::null_mut();
        let result = match sc.0.validate().and_then(|_| run_scenario(&sc.0)) {
            Ok(r) => r,
            Err(e) => return fail(harness_status(&e), e.to_string()),
        };
        let failure = result.failure.clone();
        *out = Box::into_raw(Box::new(CdprRun { scenario: sc.0.clone(), result }));
        match failure {
            None => CdprStatus::Ok,
            Some(f) => fail(CdprStatus::RunFailed, format!("{:?} at t = {} s: {}", f.kind, f.time, f.message)),
        }
    })
}

/// # Safety
/// `run` must come from this library and not be used afterwards; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn cdpr_run_free(run: *mut CdprRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of logged rows; 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cdpr_run_row_count(run: *const CdprRun) -> usize {
    run.as_ref().map_or(0, |r| r.result.log.rows.len())
}

/// Values per row, in the CSV column order.
#[no_mangle]
pub extern "C" fn cdpr_run_column_count() -> usize {
    CSV_COLUMNS
}

/// Copies all rows, row-major, into `buf` of `len` doubles
/// (`len >= rows * columns`).
///
/// # Safety
/// `run` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cdpr_run_rows(run: *const CdprRun, buf: *mut f64, len: usize) -> CdprStatus {
    guard(|| {
        let run = deref!(run, "run");
        if buf.is_null() {
            return fail(CdprStatus::NullPointer, "buf is null");
        }
        let rows = &run.result.log.rows;
        let need = rows.len() * CSV_COLUMNS;
        if len < need {
            return fail(CdprStatus::BufferTooSmall, format!("need {need} doubles, got {len}"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (slot, v) in dst.iter_mut().zip(rows.iter().flat_map(|r| r.values())) {
            *slot = v;
        }
        CdprStatus::Ok
    })
}

/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdpr_run_metrics(run: *const CdprRun, out: *mut CdprMetrics) -> CdprStatus {
    guard(|| {
        let run = deref!(run, "run");
        let out = deref!(mut out, "out");
        if run.result.log.rows.is_empty() {
            return fail(CdprStatus::InvalidArgument, "run has no logged rows");
        }
        let m = metrics(&run.result.log);
        *out = CdprMetrics {
            rms_err_angle_transient: m.rms_err_angle_transient,
            rms_err_angle_steady: m.rms_err_angle_steady.unwrap_or(f64::NAN),
            rms_position_error: m.rms_position_error,
            final_err_angle: m.final_err_angle,
            final_position_error: m.final_position_error,
            max_tension: m.max_tension,
            min_tension: m.min_tension,
            clamp_events: m.clamp_events as u64,
            passivity_margin: run.result.monitors.passivity_margin,
            final_a_hat: m.final_a_hat,
        };
        CdprStatus::Ok
    })
}

/// Writes `trajectory.csv` and `summary.json` into `dir`.
///
/// # Safety
/// `run` must be a live handle; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cdpr_run_write(run: *const CdprRun, dir: *const c_char) -> CdprStatus {
    guard(|| {
        let run = deref!(run, "run");
        let dir = match text(dir, "dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        match write_run(Path::new(dir), &run.scenario, &run.result) {
            Ok(_) => CdprStatus::Ok,
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// Runs one check suite (`identity`, `lemma`, `regressor`, `allocation`)
/// and stores 1 in `*passed` if every item passed.
///
/// # Safety
/// `suite` must be NUL-terminated; `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdpr_check(suite: *const c_char, seed: u64, passed: *mut i32) -> CdprStatus {
    guard(|| {
        let passed = deref!(mut passed, "passed");
        let name = match text(suite, "suite") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let Some(s) = CheckSuite::ALL.into_iter().find(|s| format!("{s:?}").eq_ignore_ascii_case(name)) else {
            return fail(
                CdprStatus::InvalidArgument,
                format!("unknown suite '{name}'; valid suites: identity, lemma, regressor, allocation"),
            );
        };
        *passed = run_checks(s, seed).passed() as i32;
        CdprStatus::Ok
    })
}
