//! C ABI over the modelbench kernel.
//!
//! A `MbSession` is an opaque console session. Functions return an
//! [`MbStatus`]; text results are written through `out` parameters as
//! NUL-terminated UTF-8 that the caller releases with [`mb_string_free`].
//! When a call fails, `out` (if given) receives the error message instead.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use modelbench::console::{Action, Session};
use modelbench::store::Store;
use modelbench::validation::check_model;
use modelbench::workbench::resolve_path;
use modelbench::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    NotFound = 3,
    Invalid = 4,
    Conflict = 5,
    Query = 6,
    /// `validate --strict` found errors.
    ValidationFailed = 7,
    Io = 8,
    Serialization = 9,
    Panic = 10,
}

impl From<&Error> for MbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NotFound(_) | Error::NoSuchChild { .. } | Error::UnknownProject(_) => MbStatus::NotFound,
            Error::Conflict(_) => MbStatus::Conflict,
            Error::Query(_) => MbStatus::Query,
            Error::Io(_) => MbStatus::Io,
            Error::Serialization(_) => MbStatus::Serialization,
            _ => MbStatus::Invalid,
        }
    }
}

/// Opaque console session.
pub struct MbSession {
    inner: Session,
}

const VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(s) => s,
    Err(_) => panic!("version has no interior NUL"),
};

/// Library version; static, do not free.
#[no_mangle]
pub extern "C" fn mb_version() -> *const c_char {
    VERSION.as_ptr()
}

#[no_mangle]
pub extern "C" fn mb_session_new() -> *mut MbSession {
    Box::into_raw(Box::new(MbSession { inner: Session::new() }))
}

/// # Safety
/// `session` must come from [`mb_session_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mb_session_free(session: *mut MbSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// # Safety
/// `s` must come from this library (or be null).
#[no_mangle]
pub unsafe extern "C" fn mb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn write_out(out: *mut *mut c_char, text: String) {
    if out.is_null() {
        return;
    }
    let c = CString::new(text).unwrap_or_else(|e| {
        let mut bytes = e.into_vec();
        bytes.retain(|b| *b != 0);
        CString::new(bytes).expect("NULs removed")
    });
    *out = c.into_raw();
}

unsafe fn arg<'a>(p: *const c_char) -> Result<&'a str, MbStatus> {
    if p.is_null() {
        return Err(MbStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| MbStatus::InvalidUtf8)
}

/// Runs `f` on the session, translating errors and panics into status
/// codes and writing its text to `out`.
unsafe fn call(
    session: *mut MbSession,
    out: *mut *mut c_char,
    f: impl FnOnce(&mut Session) -> Result<(MbStatus, String), (MbStatus, String)>,
) -> MbStatus {
    if !out.is_null() {
        *out = ptr::null_mut();
    }
    let Some(s) = session.as_mut() else {
        return MbStatus::NullArgument;
    };
    match catch_unwind(AssertUnwindSafe(|| f(&mut s.inner))) {
        Ok(Ok((status, text))) | Ok(Err((status, text))) => {
            write_out(out, text);
            status
        }
        Err(_) => {
            write_out(out, "internal panic".into());
            MbStatus::Panic
        }
    }
}

fn fail(e: Error) -> (MbStatus, String) {
    (MbStatus::from(&e), e.to_string())
}

fn bad_arg(status: MbStatus) -> (MbStatus, String) {
    let what = match status {
        MbStatus::InvalidUtf8 => "argument is not valid UTF-8",
        _ => "null argument",
    };
    (status, what.into())
}

/// Executes one console command line.
///
/// # Safety
/// `session` must be a live handle, `line` a NUL-terminated string and `out`
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn mb_session_execute(session: *mut MbSession, line: *const c_char, out: *mut *mut c_char) -> MbStatus {
    let line = arg(line);
    call(session, out, |s| {
        let line = line.map_err(bad_arg)?;
        let mut text = String::new();
        match s.execute(line, &mut text) {
            Ok(Action::ValidationFailed) => Ok((MbStatus::ValidationFailed, text)),
            Ok(_) => Ok((MbStatus::Ok, text)),
            Err(e) => Err(fail(e)),
        }
    })
}

/// Evaluates an expression on the selected element. Never mutates.
///
/// # Safety
/// As for [`mb_session_execute`].
#[no_mangle]
pub unsafe extern "C" fn mb_session_eval(session: *mut MbSession, expr: *const c_char, out: *mut *mut c_char) -> MbStatus {
    let expr = arg(expr);
    call(session, out, |s| {
        let expr = expr.map_err(bad_arg)?;
        s.eval(expr).map(|v| (MbStatus::Ok, v)).map_err(fail)
    })
}

/// Writes the canonical project document to `out`.
///
/// # Safety
/// As for [`mb_session_execute`].
#[no_mangle]
pub unsafe extern "C" fn mb_session_export(session: *mut MbSession, out: *mut *mut c_char) -> MbStatus {
    call(session, out, |s| Ok((MbStatus::Ok, s.workbench().store().to_canonical_string())))
}

/// Replaces the project with a canonical document.
///
/// # Safety
/// As for [`mb_session_execute`]; `out` receives an error message only.
#[no_mangle]
pub unsafe extern "C" fn mb_session_import(session: *mut MbSession, document: *const c_char, out: *mut *mut c_char) -> MbStatus {
    let doc = arg(document);
    call(session, out, |s| {
        let store = Store::from_canonical_str(doc.map_err(bad_arg)?).map_err(fail)?;
        s.open_store(store);
        Ok((MbStatus::Ok, String::new()))
    })
}

/// Digest of the canonical document, history included. Comparable only
/// between values from the same library build.
///
/// # Safety
/// `session` must be a live handle and `checksum` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_session_checksum(session: *const MbSession, checksum: *mut u64) -> MbStatus {
    match (session.as_ref(), checksum.is_null()) {
        (Some(s), false) => {
            *checksum = s.inner.workbench().store().checksum();
            MbStatus::Ok
        }
        _ => MbStatus::NullArgument,
    }
}

/// Renders the model at `model_path` as a JSON render tree.
///
/// # Safety
/// As for [`mb_session_execute`].
#[no_mangle]
pub unsafe extern "C" fn mb_session_render_json(session: *mut MbSession, model_path: *const c_char, out: *mut *mut c_char) -> MbStatus {
    let path = arg(model_path);
    call(session, out, |s| {
        let wb = s.workbench();
        let model = resolve_path(wb.store(), path.map_err(bad_arg)?).map_err(fail)?;
        let tree = wb.render(model, None).map_err(fail)?;
        let json = serde_json::to_string(&tree).map_err(|e| fail(e.into()))?;
        Ok((MbStatus::Ok, json))
    })
}

/// Checks the model at `model_path` without recording markers; writes a
/// JSON array of markers.
///
/// # Safety
/// As for [`mb_session_execute`].
#[no_mangle]
pub unsafe extern "C" fn mb_session_markers_json(session: *mut MbSession, model_path: *const c_char, out: *mut *mut c_char) -> MbStatus {
    let path = arg(model_path);
    call(session, out, |s| {
        let store = s.workbench().store();
        let model = resolve_path(store, path.map_err(bad_arg)?).map_err(fail)?;
        let markers = check_model(store, model).map_err(fail)?;
        let json = serde_json::to_string(&markers).map_err(|e| fail(e.into()))?;
        Ok((MbStatus::Ok, json))
    })
}
