use std::ffi::{c_char, CStr, CString};
use std::ptr;

use modelbench_ffi::*;

struct Handle(*mut MbSession);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { mb_session_free(self.0) }
    }
}

fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { mb_string_free(p) };
    s
}

fn exec(h: &Handle, line: &str) -> (MbStatus, String) {
    let line = CString::new(line).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { mb_session_execute(h.0, line.as_ptr(), &mut out) };
    (st, take(out))
}

fn eval(h: &Handle, expr: &str) -> (MbStatus, String) {
    let expr = CString::new(expr).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { mb_session_eval(h.0, expr.as_ptr(), &mut out) };
    (st, take(out))
}

fn checksum(h: &Handle) -> u64 {
    let mut c = 0;
    assert_eq!(unsafe { mb_session_checksum(h.0, &mut c) }, MbStatus::Ok);
    c
}

#[test]
fn console_round_trip() {
    let h = Handle(mb_session_new());
    assert_eq!(exec(&h, "fixtures load expr").0, MbStatus::Ok);
    assert_eq!(exec(&h, "set e0.val 112").0, MbStatus::Ok);
    assert_eq!(exec(&h, "select e4").0, MbStatus::Ok);
    let before = checksum(&h);
    assert_eq!(eval(&h, "data.$val.value"), (MbStatus::Ok, "784".to_string()));
    assert_eq!(checksum(&h), before);
}

#[test]
fn errors_map_to_status_codes() {
    let h = Handle(mb_session_new());
    let (st, msg) = exec(&h, "frobnicate");
    assert_eq!(st, MbStatus::Invalid);
    assert!(msg.contains("frobnicate"), "{msg}");
    assert_eq!(exec(&h, "fixtures load erd").0, MbStatus::Ok);
    assert_eq!(exec(&h, "select #999999").0, MbStatus::NotFound);
    assert_eq!(eval(&h, "1 +").0, MbStatus::Query);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { mb_session_eval(h.0, ptr::null(), &mut out) }, MbStatus::NullArgument);
    take(out);
    assert_eq!(unsafe { mb_session_execute(ptr::null_mut(), c"new".as_ptr(), ptr::null_mut()) }, MbStatus::NullArgument);
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { mb_session_eval(h.0, bad.as_ptr().cast(), ptr::null_mut()) }, MbStatus::InvalidUtf8);
}

#[test]
fn strict_validation_reports_its_own_status() {
    let h = Handle(mb_session_new());
    exec(&h, "fixtures load erd");
    // Clearing the only primary key of User makes the model invalid.
    let (st, _) = exec(&h, "select User");
    assert_eq!(st, MbStatus::Ok);
    let (_, id) = eval(&h, "data.$ownedAttributes.values.find(a => a.name == 'id').id");
    assert_eq!(exec(&h, &format!("set {id}.isPK false")).0, MbStatus::Ok);
    let (st, text) = exec(&h, "validate --strict");
    assert_eq!(st, MbStatus::ValidationFailed, "{text}");
    assert!(text.contains("1 errors"), "{text}");
}

#[test]
fn export_import_preserves_state() {
    let a = Handle(mb_session_new());
    exec(&a, "fixtures load erd");
    let mut doc = ptr::null_mut();
    assert_eq!(unsafe { mb_session_export(a.0, &mut doc) }, MbStatus::Ok);
    let doc = take(doc);
    let b = Handle(mb_session_new());
    let c = CString::new(doc.clone()).unwrap();
    assert_eq!(unsafe { mb_session_import(b.0, c.as_ptr(), ptr::null_mut()) }, MbStatus::Ok);
    assert_eq!(checksum(&a), checksum(&b));
    let mut err = ptr::null_mut();
    assert_eq!(unsafe { mb_session_import(b.0, c"not a document".as_ptr(), &mut err) }, MbStatus::Serialization);
    assert!(!take(err).is_empty());
}

#[test]
fn render_and_markers_are_json() {
    let h = Handle(mb_session_new());
    exec(&h, "fixtures load erd");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { mb_session_render_json(h.0, c"/Library".as_ptr(), &mut out) }, MbStatus::Ok);
    let tree: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert!(tree.get("root").is_some());
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { mb_session_markers_json(h.0, c"/Library".as_ptr(), &mut out) }, MbStatus::Ok);
    assert_eq!(take(out), "[]");
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(mb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
