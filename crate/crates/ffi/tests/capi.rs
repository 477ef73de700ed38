use lplc_ffi::*;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lplc_last_error_message()) }.to_string_lossy().into_owned()
}

fn new_problem(a: f64, phi: f64, lambda: (f64, f64), q: &str) -> (LplcStatus, *mut LplcProblem) {
    let q = CString::new(q).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { lplc_problem_new(a, phi, lambda.0, lambda.1, q.as_ptr(), &mut h) };
    (st, h)
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(lplc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn cubic_classifies_as_limit_point() {
    let (st, h) = new_problem(1.0, 0.0, (0.0, 0.0), "-(i*x)^3");
    assert_eq!(st, LplcStatus::Ok);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { lplc_classify(h, &mut report) }, LplcStatus::Ok);
    let mut verdict = LplcVerdict::Inconclusive;
    assert_eq!(unsafe { lplc_report_verdict(report, &mut verdict) }, LplcStatus::Ok);
    assert_eq!(verdict, LplcVerdict::LimitPointI);

    let mut text = ptr::null_mut();
    assert_eq!(unsafe { lplc_report_json(report, &mut text) }, LplcStatus::Ok);
    let json: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(text) }.to_str().unwrap()).unwrap();
    assert_eq!(json["verdict"], "LimitPointI");
    unsafe {
        lplc_string_free(text);
        lplc_report_free(report);
        lplc_problem_free(h);
    }
}

#[test]
fn json_spec_with_config_is_accepted() {
    let spec = CString::new(r#"{"a": 0, "phi": 0, "lambda": [0, -1], "potential": "i", "config": {"oracle": false}}"#)
        .unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { lplc_problem_from_json(spec.as_ptr(), &mut h) }, LplcStatus::Ok);
    let mut pair = LplcAdmissiblePair::default();
    assert_eq!(unsafe { lplc_admissible_pair(h, &mut pair) }, LplcStatus::Ok);
    // lambda = -i sits below the single point q = i
    assert!((pair.k.im - 1.0).abs() < 1e-9, "{pair:?}");
    assert!(pair.lambda_gap > 1.0);
    unsafe { lplc_problem_free(h) };
}

#[test]
fn constant_potential_wkb_is_a_plane_wave() {
    // s = q - lambda = 2i, y = s^{-1/4} e^{-sqrt(s) (x - a)}
    let (st, h) = new_problem(0.0, 0.0, (0.0, -1.0), "i");
    assert_eq!(st, LplcStatus::Ok);
    let s = num_complex::Complex64::new(0.0, 2.0);
    for x in [0.5, 3.0, 10.0] {
        let mut w = LplcWkbSample::default();
        assert_eq!(unsafe { lplc_wkb_eval(h, x, &mut w) }, LplcStatus::Ok, "{}", last_error());
        let want = s.powf(-0.25) * (-s.sqrt() * x).exp();
        assert!((w.y_lead.re - want.re).abs() < 1e-12 && (w.y_lead.im - want.im).abs() < 1e-12, "{w:?}");
        assert_eq!(w.envelope, 0.0);
    }
    unsafe { lplc_problem_free(h) };
}

#[test]
fn errors_carry_status_and_message() {
    let (st, h) = new_problem(1.0, 0.0, (0.0, 0.0), "x +* 2");
    assert_eq!(st, LplcStatus::ParseError);
    assert!(h.is_null());
    assert!(last_error().contains('^'), "{}", last_error());

    let bad = CString::new("{\"a\": 1}").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { lplc_problem_from_json(bad.as_ptr(), &mut h) }, LplcStatus::ParseError);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lplc_classify(ptr::null(), &mut out) }, LplcStatus::NullPointer);
    assert!(last_error().contains("problem"));

    // lambda inside the hull of q = x + i t
    let (st, h) = new_problem(1.0, 0.0, (5.0, 0.0), "x");
    assert_eq!(st, LplcStatus::Ok);
    assert_eq!(unsafe { lplc_classify(h, &mut out) }, LplcStatus::NotAdmissible);
    assert!(out.is_null());

    let mut w = LplcWkbSample::default();
    assert_eq!(unsafe { lplc_wkb_eval(h, 0.5, &mut w) }, LplcStatus::InvalidArgument);
    unsafe { lplc_problem_free(h) };
}

#[test]
fn free_accepts_null() {
    unsafe {
        lplc_problem_free(ptr::null_mut());
        lplc_report_free(ptr::null_mut());
        lplc_string_free(ptr::null_mut());
    }
}

#[test]
fn header_is_current_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/lplc.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "lplc_problem_new",
        "lplc_problem_from_json",
        "lplc_classify",
        "lplc_report_json",
        "lplc_wkb_eval",
        "lplc_admissible_pair",
        "lplc_last_error_message",
        "LPLC_STATUS_NOT_ADMISSIBLE",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-std=c99", "-Wall", "-Werror", "-x", "c"]).arg(&header).output()
    else {
        eprintln!("no C compiler, skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
