use std::ffi::{c_char, CStr, CString};
use std::ptr;

use cubex_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { cubex_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_sums_match_the_library() {
    let mut out = CubexSum::default();
    assert_eq!(unsafe { cubex_gauss_quad(5, 1, 2, &mut out) }, CubexStatus::Ok);
    let lib = cubex::complete_sums::gauss_quad(5, 1, 2).unwrap();
    assert_eq!((out.re, out.im, out.terms), (lib.value.re, lib.value.im, lib.terms));

    assert_eq!(unsafe { cubex_hua_sum(7, 1, 0, &mut out) }, CubexStatus::Ok);
    assert!(((out.re * out.re + out.im * out.im) - 7.0 * 7.0 * 0.4587).abs() < 0.01 * 49.0);

    let mut k = 0.0;
    assert_eq!(unsafe { cubex_kappa(8, 1, &mut k) }, CubexStatus::Ok);
    assert_eq!(k, 0.5);
}

#[test]
fn errors_are_reported() {
    let mut out = CubexSum::default();
    assert_eq!(unsafe { cubex_gauss_quad(0, 1, 1, &mut out) }, CubexStatus::InvalidArgument);
    assert!(last_error().contains("positive"));
    assert_eq!(unsafe { cubex_hua_sum(3, 1, 0, ptr::null_mut()) }, CubexStatus::NullPointer);
    assert!(last_error().contains("out"));
    let mut k = 0.0;
    assert_eq!(unsafe { cubex_kappa(8, 4, &mut k) }, CubexStatus::InvalidArgument);
    assert!(last_error().contains("squarefree"));

    // truncation keeps a NUL and reports the full length
    let mut small = [1 as c_char; 4];
    let n = unsafe { cubex_last_error(small.as_mut_ptr(), small.len()) };
    assert!(n > 3);
    assert_eq!(small[3], 0);
}

#[test]
fn classify_and_handles() {
    let mut label = CubexArcLabel {
        kind: CubexArcKind::Minor,
        has_approximant: 0,
        a: 0,
        q: 0,
        beta: 0.0,
        upsilon: 0.0,
        xi: 0.0,
        boundary_ambiguous: 0,
    };
    let half = CubexAlpha { num: 1, den: 2, offset: 0.0 };
    assert_eq!(unsafe { cubex_classify(half, 100.0, 1, &mut label) }, CubexStatus::Ok);
    assert_eq!((label.kind, label.a, label.q), (CubexArcKind::MajorN, 1, 2));
    assert_eq!(label.xi, 2.0);

    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cubex_major_new(400.0, 6, &mut h) }, CubexStatus::Ok);
    let mut f = CubexSum::default();
    let quarter = CubexAlpha { num: 0, den: 0, offset: 0.25 };
    assert_eq!(unsafe { cubex_major_f(h, quarter, &mut f) }, CubexStatus::Ok);
    let params = cubex::weyl::WeylParams::with_w(400.0, 6).unwrap();
    let lib = cubex::weyl::f_w_mobius(0.25, &params);
    assert!((f.re - lib.value.re).abs() < 1e-9 && (f.im - lib.value.im).abs() < 1e-9);

    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { cubex_major_singular_term(h, half, &mut re, &mut im) }, CubexStatus::Ok);
    assert!(re.is_finite() && im.is_finite());
    let minor = CubexAlpha { num: 0, den: 0, offset: 0.381_966_011_250_105_1 };
    assert_eq!(unsafe { cubex_major_singular_term(h, minor, &mut re, &mut im) }, CubexStatus::MinorArc);
    assert_eq!(unsafe { cubex_major_f(ptr::null(), quarter, &mut f) }, CubexStatus::NullPointer);
    unsafe { cubex_major_free(h) };
    unsafe { cubex_major_free(ptr::null_mut()) };
}

#[test]
fn run_returns_json() {
    let cmd = CString::new("bound-table").unwrap();
    let cfg = CString::new("delta_step = 0.25\n").unwrap();
    let mut json = ptr::null_mut();
    let mut passed = 0;
    assert_eq!(unsafe { cubex_run(cmd.as_ptr(), cfg.as_ptr(), &mut json, &mut passed) }, CubexStatus::Ok);
    let s = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { cubex_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["config"]["command"], "bound-table");

    let bad = CString::new("nonsense = 1").unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { cubex_run(cmd.as_ptr(), bad.as_ptr(), &mut json, ptr::null_mut()) }, CubexStatus::Config);
    assert!(json.is_null());
    assert!(last_error().contains("unknown key"));
}

#[test]
fn header_is_generated_and_compiles() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/cubex.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["cubex_run", "cubex_major_new", "CubexStatus", "CUBEX_STATUS_MINOR_ARC"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(cc) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let _ = version_is_static();
}

fn version_is_static() -> &'static str {
    unsafe { CStr::from_ptr(cubex_version()) }.to_str().unwrap()
}
