//! C ABI over the arena core.
//!
//! Strings passed in are NUL-terminated UTF-8 and borrowed for the duration
//! of the call. Strings handed out must be released with `arena_string_free`.
//! Every function returns an `ArenaStatus`; on failure `arena_last_error`
//! describes the problem for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use arena_core::aal::{handle_line, AccessPolicy, TimeMode};
use arena_core::eval::SloConfig;
use arena_core::orchestrator::{
    list_incidents, replay_and_check, resolve_incident, write_run, ActiveRun, ArtifactError,
    LookupError, Prepared,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArenaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    NotFound = 3,
    InvalidInput = 4,
    Io = 5,
    /// The run was already finished.
    Finished = 6,
    Integrity = 7,
    Panic = 8,
}

/// An incident run in its agent phase. Opaque to C.
pub struct ArenaRun {
    active: Option<ActiveRun>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("no interior NUL"));
}

type Res<T> = Result<T, (ArenaStatus, String)>;

fn guard(f: impl FnOnce() -> Res<()>) -> ArenaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArenaStatus::Ok,
        Ok(Err((st, msg))) => {
            set_error(msg);
            st
        }
        Err(_) => {
            set_error("internal panic");
            ArenaStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err((ArenaStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (ArenaStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Res<()> {
    if out.is_null() {
        return Err((ArenaStatus::NullArgument, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|e| (ArenaStatus::InvalidInput, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn lookup(e: LookupError) -> (ArenaStatus, String) {
    match e {
        LookupError::NotFound(_) => (ArenaStatus::NotFound, e.to_string()),
        LookupError::Invalid(_) => (ArenaStatus::InvalidInput, e.to_string()),
    }
}

fn artifact(e: ArtifactError) -> (ArenaStatus, String) {
    match e {
        ArtifactError::Io(..) | ArtifactError::Exists(_) => (ArenaStatus::Io, e.to_string()),
        ArtifactError::Integrity(_) => (ArenaStatus::Integrity, e.to_string()),
    }
}

/// Message for the last failed call on this thread. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn arena_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn arena_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn arena_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// JSON array describing every shipped incident and template.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arena_list_json(out: *mut *mut c_char) -> ArenaStatus {
    guard(|| put_string(out, serde_json::to_string(&list_incidents()).expect("json")))
}

/// Warm up `incident` (shipped name or file path) and open its stepped agent phase.
/// `policy_json` may be null for a permissive policy.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn arena_run_open(
    incident: *const c_char,
    policy_json: *const c_char,
    out: *mut *mut ArenaRun,
) -> ArenaStatus {
    guard(|| {
        if out.is_null() {
            return Err((ArenaStatus::NullArgument, "output pointer is null".into()));
        }
        let name = text(incident, "incident")?;
        let policy = if policy_json.is_null() {
            AccessPolicy::permissive()
        } else {
            AccessPolicy::from_json(text(policy_json, "policy_json")?)
                .map_err(|e| (ArenaStatus::InvalidInput, format!("policy: {e}")))?
        };
        let spec = resolve_incident(name, None).map_err(lookup)?;
        let active = Prepared::new(spec).open(policy, TimeMode::Stepped);
        *out = Box::into_raw(Box::new(ArenaRun {
            active: Some(active),
        }));
        Ok(())
    })
}

/// Send one wire-protocol request line; the response envelope is written to `out_response`.
///
/// # Safety
/// `run` must come from `arena_run_open`; `request` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn arena_run_request(
    run: *mut ArenaRun,
    request: *const c_char,
    out_response: *mut *mut c_char,
) -> ArenaStatus {
    guard(|| {
        let r = run
            .as_mut()
            .ok_or((ArenaStatus::NullArgument, "run is null".to_string()))?;
        let line = text(request, "request")?;
        let a = r
            .active
            .as_mut()
            .ok_or((ArenaStatus::Finished, "run already finished".to_string()))?;
        put_string(out_response, handle_line(&mut a.session, line))
    })
}

/// Whether the agent phase has ended (submitted or horizon reached). Null or finished runs count as closed.
///
/// # Safety
/// `run` must be null or come from `arena_run_open`.
#[no_mangle]
pub unsafe extern "C" fn arena_run_is_closed(run: *const ArenaRun) -> bool {
    match run.as_ref().and_then(|r| r.active.as_ref()) {
        Some(a) => a.session.closed().is_some(),
        None => true,
    }
}

/// Current virtual time in ms, or 0 for null or finished runs.
///
/// # Safety
/// `run` must be null or come from `arena_run_open`.
#[no_mangle]
pub unsafe extern "C" fn arena_run_now_ms(run: *const ArenaRun) -> u64 {
    run.as_ref()
        .and_then(|r| r.active.as_ref())
        .map_or(0, |a| a.session.state().now())
}

/// Evaluate the run. Writes artifacts when `out_dir` is non-null (the directory
/// must be empty or absent) and returns report.json text in `out_report`.
/// The handle stays valid and must still be freed.
///
/// # Safety
/// `run` must come from `arena_run_open`; `out_dir` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn arena_run_finish(
    run: *mut ArenaRun,
    out_dir: *const c_char,
    out_report: *mut *mut c_char,
) -> ArenaStatus {
    guard(|| {
        let r = run
            .as_mut()
            .ok_or((ArenaStatus::NullArgument, "run is null".to_string()))?;
        if out_report.is_null() {
            return Err((ArenaStatus::NullArgument, "output pointer is null".into()));
        }
        let dir = if out_dir.is_null() {
            None
        } else {
            Some(text(out_dir, "out_dir")?)
        };
        let active = r
            .active
            .take()
            .ok_or((ArenaStatus::Finished, "run already finished".to_string()))?;
        let result = active.finish(SloConfig::default());
        if let Some(d) = dir {
            write_run(Path::new(d), &result, false).map_err(artifact)?;
        }
        put_string(out_report, result.report.to_json())
    })
}

/// Release a run. Null is ignored.
///
/// # Safety
/// `run` must come from `arena_run_open` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn arena_run_free(run: *mut ArenaRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Re-evaluate a run directory and check it against its report.json.
///
/// # Safety
/// `dir` must be NUL-terminated; `out_report` valid.
#[no_mangle]
pub unsafe extern "C" fn arena_replay(
    dir: *const c_char,
    out_report: *mut *mut c_char,
) -> ArenaStatus {
    guard(|| {
        let d = text(dir, "dir")?;
        let rep = replay_and_check(Path::new(d)).map_err(artifact)?;
        put_string(out_report, rep.to_json())
    })
}

/// Status code name, a static string.
#[no_mangle]
pub extern "C" fn arena_status_name(status: ArenaStatus) -> *const c_char {
    let s: &'static str = match status {
        ArenaStatus::Ok => "ok\0",
        ArenaStatus::NullArgument => "null_argument\0",
        ArenaStatus::InvalidUtf8 => "invalid_utf8\0",
        ArenaStatus::NotFound => "not_found\0",
        ArenaStatus::InvalidInput => "invalid_input\0",
        ArenaStatus::Io => "io\0",
        ArenaStatus::Finished => "finished\0",
        ArenaStatus::Integrity => "integrity\0",
        ArenaStatus::Panic => "panic\0",
    };
    s.as_ptr().cast()
}
