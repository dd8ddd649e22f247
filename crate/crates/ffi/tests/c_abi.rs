use std::ffi::{CStr, CString};
use std::ptr;

use quadmod_ffi::*;

const SQUARE: [f64; 8] = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];

fn last_error() -> String {
    let p = qm_last_error();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { qm_string_free(p) };
    s
}

#[test]
fn square_through_both_solvers() {
    unsafe {
        let mut q = ptr::null_mut();
        assert_eq!(qm_quad_new(SQUARE.as_ptr(), &mut q), QmStatus::Ok);
        let (mut v, mut e) = (0.0, 0.0);
        assert_eq!(qm_modulus_sc(q, 0.0, &mut v, &mut e), QmStatus::Ok);
        assert!((v - 1.0).abs() < 1e-10 && e < 1e-8);
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(
            qm_modulus_fem(q, 1e-3, &mut v, &mut e, &mut lo, &mut hi),
            QmStatus::Ok
        );
        assert!(lo <= 1.0 + 1e-12 && 1.0 - 1e-12 <= hi);
        let mut xy = [0.0; 8];
        assert_eq!(qm_quad_vertices(q, xy.as_mut_ptr()), QmStatus::Ok);
        assert_eq!(xy, SQUARE);
        qm_quad_free(q);
    }
}

#[test]
fn json_constructor_reports_missing_field() {
    let good = CString::new(r#"{"a":[0,0],"b":[2,0],"c":[2,1],"d":[0,1]}"#).unwrap();
    let bad = CString::new(r#"{"a":[0,0],"b":[2,0],"c":[2,1]}"#).unwrap();
    unsafe {
        let mut q = ptr::null_mut();
        assert_eq!(qm_quad_from_json(good.as_ptr(), &mut q), QmStatus::Ok);
        let (mut v, mut e) = (0.0, 0.0);
        assert_eq!(qm_modulus_sc(q, 1e-10, &mut v, &mut e), QmStatus::Ok);
        assert!((v - 0.5).abs() < 1e-10);
        qm_quad_free(q);
        let mut q2 = ptr::null_mut();
        assert_eq!(
            qm_quad_from_json(bad.as_ptr(), &mut q2),
            QmStatus::InvalidInput
        );
        assert!(q2.is_null());
    }
    assert_eq!(last_error(), "missing vertex d");
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        let mut q = ptr::null_mut();
        assert_eq!(qm_quad_new(ptr::null(), &mut q), QmStatus::NullPointer);
        let (mut v, mut e) = (0.0, 0.0);
        assert_eq!(
            qm_modulus_sc(ptr::null(), 0.0, &mut v, &mut e),
            QmStatus::NullPointer
        );
        let bowtie = [0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        assert_eq!(qm_quad_new(bowtie.as_ptr(), &mut q), QmStatus::InvalidInput);
        qm_quad_free(ptr::null_mut());
        qm_string_free(ptr::null_mut());
    }
    let msg = unsafe { CStr::from_ptr(qm_status_message(QmStatus::SolverFailure)) };
    assert_eq!(msg.to_str().unwrap(), "solver failure");
}

#[test]
fn verify_returns_report_json() {
    let id = CString::new("th4.1").unwrap();
    let unknown = CString::new("nope").unwrap();
    unsafe {
        let (mut json, mut passed) = (ptr::null_mut(), 0);
        assert_eq!(
            qm_verify(id.as_ptr(), 3, 4, &mut json, &mut passed),
            QmStatus::Ok
        );
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        qm_string_free(json);
        assert_eq!(passed, 1);
        assert!(text.contains("\"check_id\": \"th4.1\""));
        assert_eq!(
            qm_verify(unknown.as_ptr(), 3, 4, &mut json, &mut passed),
            QmStatus::InvalidInput
        );
    }
}

/// Compiles and runs a C program against the generated header and the static
/// library, when a C compiler is on the path.
#[test]
fn c_program_links_against_header() {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(
        header_dir.join("quadmod.h").exists(),
        "header not generated"
    );
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libquadmod_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists()
        || std::process::Command::new(&cc)
            .arg("--version")
            .output()
            .is_err()
    {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "quadmod.h"
int main(void) {
    const double xy[8] = {0, 0, 2, 0, 2, 1, 0, 1};
    QmQuad *q = NULL;
    if (qm_quad_new(xy, &q) != QM_STATUS_OK) return 10;
    double v = 0, e = 0;
    if (qm_modulus_sc(q, 0, &v, &e) != QM_STATUS_OK) return 11;
    qm_quad_free(q);
    printf("%.12f\n", v);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = std::process::Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success());
    let v: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((v - 0.5).abs() < 1e-10, "{v}");
}
