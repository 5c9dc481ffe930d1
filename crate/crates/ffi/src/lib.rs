//! C ABI over `dialectic`.
//!
//! Objects cross the boundary as opaque handles created by a constructor and
//! released by the matching `_free`. Fallible calls return a
//! [`DialecticStatus`]; the message of the last failure on the calling
//! thread is available from [`dialectic_last_error`].
//!
//! Strings returned to the caller are NUL-terminated, owned by the caller and
//! released with [`dialectic_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dialectic::cli::BUNDLED_FAMILY;
use dialectic::diagonalizer::{diagonalize, DiagonalizationReport, DiagonalizeConfig};
use dialectic::model::Token;
use dialectic::opponents::OpponentFamily;
use dialectic::run::{estimate_beliefs, QSystem, RunTrace, StabilityReport, Variant};
use dialectic::spec_file::SystemSpec;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DialecticStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Run = 4,
    InvalidArgument = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// A loaded system: rule table, replacement map and variant tag.
pub struct DialecticSystem {
    spec: SystemSpec,
    system: QSystem,
}

/// A finished run with its stability estimate.
pub struct DialecticRun {
    trace: RunTrace,
    stability: StabilityReport,
}

pub struct DialecticReport {
    report: DiagonalizationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: DialecticStatus, message: impl Into<String>) -> DialecticStatus {
    set_error(message);
    status
}

/// Runs `f`, turning a panic into [`DialecticStatus::Panic`].
fn guard(f: impl FnOnce() -> DialecticStatus) -> DialecticStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(DialecticStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, DialecticStatus> {
    if text.is_null() {
        return Err(fail(DialecticStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| fail(DialecticStatus::InvalidUtf8, "argument is not UTF-8"))
}

fn owned_string(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dialectic_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a system-spec text into `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dialectic_system_parse(
    text: *const c_char,
    out: *mut *mut DialecticSystem,
) -> DialecticStatus {
    guard(|| {
        if out.is_null() {
            return fail(DialecticStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let spec = match SystemSpec::parse(text) {
            Ok(spec) => spec,
            Err(e) => return fail(DialecticStatus::Parse, e.to_string()),
        };
        let system = match spec.system() {
            Ok(system) => system,
            Err(e) => return fail(DialecticStatus::Parse, e.to_string()),
        };
        *out = Box::into_raw(Box::new(DialecticSystem { spec, system }));
        DialecticStatus::Ok
    })
}

/// # Safety
/// `system` must come from [`dialectic_system_parse`], or be NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_system_free(system: *mut DialecticSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// `'d'`, `'p'` or `'q'`; 0 for NULL.
///
/// # Safety
/// `system` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_system_variant(system: *const DialecticSystem) -> c_char {
    match system.as_ref() {
        None => 0,
        Some(s) => match s.spec.variant() {
            Variant::D => b'd' as c_char,
            Variant::P => b'p' as c_char,
            Variant::Q => b'q' as c_char,
        },
    }
}

/// Canonical text of the system, for round-tripping.
///
/// # Safety
/// `system` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_system_to_string(system: *const DialecticSystem) -> *mut c_char {
    match system.as_ref() {
        None => ptr::null_mut(),
        Some(s) => owned_string(s.spec.to_string()),
    }
}

/// Runs `horizon` stages and estimates stability over `window`.
///
/// # Safety
/// `system` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dialectic_system_run(
    system: *const DialecticSystem,
    horizon: u64,
    window: u64,
    out: *mut *mut DialecticRun,
) -> DialecticStatus {
    guard(|| {
        if out.is_null() {
            return fail(DialecticStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(system) = system.as_ref() else {
            return fail(DialecticStatus::NullPointer, "null system");
        };
        if horizon == 0 || window > horizon {
            return fail(
                DialecticStatus::InvalidArgument,
                "need 0 < horizon and window <= horizon",
            );
        }
        let trace = match system.system.run(horizon) {
            Ok(t) => t,
            Err(e) => return fail(DialecticStatus::Run, e.to_string()),
        };
        let stability = estimate_beliefs(&trace, window);
        *out = Box::into_raw(Box::new(DialecticRun { trace, stability }));
        DialecticStatus::Ok
    })
}

/// # Safety
/// `run` must come from [`dialectic_system_run`], or be NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_run_free(run: *mut DialecticRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Length of the final belief string.
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_run_length(run: *const DialecticRun) -> usize {
    run.as_ref().map_or(0, |r| r.trace.final_string.len())
}

/// Entry `n` of the final string: the axiom index, or -1 for a gap.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dialectic_run_token(run: *const DialecticRun, n: usize, out: *mut i64) -> DialecticStatus {
    let (Some(run), false) = (run.as_ref(), out.is_null()) else {
        return fail(DialecticStatus::NullPointer, "null argument");
    };
    match run.trace.final_string.get(n) {
        None => fail(DialecticStatus::OutOfRange, format!("position {n} is past the end")),
        Some(Token::Gap) => {
            *out = -1;
            DialecticStatus::Ok
        }
        Some(Token::Axiom(a)) => match i64::try_from(a.0) {
            Ok(v) => {
                *out = v;
                DialecticStatus::Ok
            }
            Err(_) => fail(DialecticStatus::OutOfRange, "axiom index exceeds i64"),
        },
    }
}

/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_run_stable_prefix(run: *const DialecticRun) -> usize {
    run.as_ref().map_or(0, |r| r.stability.stable_prefix_length)
}

/// Number of positions revised inside the final window.
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_run_loop_suspects(run: *const DialecticRun) -> usize {
    run.as_ref().map_or(0, |r| r.stability.loop_suspects.len())
}

/// The tab-separated trace file.
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_run_trace(run: *const DialecticRun) -> *mut c_char {
    match run.as_ref() {
        None => ptr::null_mut(),
        Some(r) => owned_string(r.trace.to_trace_file()),
    }
}

/// Diagonalizes against an opponent family file text; NULL selects the
/// bundled family. `fuel_cap` 0 means no cap.
///
/// # Safety
/// `family` must be NULL or a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dialectic_diagonalize(
    family: *const c_char,
    horizon: u64,
    window: u64,
    fuel_cap: u64,
    out: *mut *mut DialecticReport,
) -> DialecticStatus {
    guard(|| {
        if out.is_null() {
            return fail(DialecticStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = if family.is_null() {
            BUNDLED_FAMILY
        } else {
            match read_str(family) {
                Ok(t) => t,
                Err(status) => return status,
            }
        };
        let family = match OpponentFamily::parse(text) {
            Ok(f) => f,
            Err(e) => return fail(DialecticStatus::Parse, e.to_string()),
        };
        let config = DiagonalizeConfig {
            horizon,
            window,
            fuel_cap: if fuel_cap == 0 { u64::MAX } else { fuel_cap },
        };
        match diagonalize(family.systems(), config) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(DialecticReport { report }));
                DialecticStatus::Ok
            }
            Err(e) => fail(DialecticStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `report` must come from [`dialectic_diagonalize`], or be NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_report_free(report: *mut DialecticReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_report_verdict_count(report: *const DialecticReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.verdicts.len())
}

/// Verdict line `i`, as in the report's verdict section; NULL when out of range.
///
/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_report_verdict(report: *const DialecticReport, i: usize) -> *mut c_char {
    match report.as_ref().and_then(|r| r.report.verdicts.get(i)) {
        None => ptr::null_mut(),
        Some(v) => owned_string(v.to_string()),
    }
}

/// 1 when every audit passed, 0 otherwise or for NULL.
///
/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_report_passed(report: *const DialecticReport) -> i32 {
    report.as_ref().map_or(0, |r| i32::from(r.report.passed()))
}

/// The full text report.
///
/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dialectic_report_text(report: *const DialecticReport) -> *mut c_char {
    match report.as_ref() {
        None => ptr::null_mut(),
        Some(r) => owned_string(r.report.to_string()),
    }
}
