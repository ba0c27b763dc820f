use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use mixwass_ffi::*;

const ZERO_VALUE: &str = r#"{
  "measure": {"type": "gaussian-mixture", "components": [{"weight": 1.0, "mean": 0.3, "sigma": 0.1}]},
  "set": {"type": "box", "m": [0.07, 1.0], "sigma": [0.02, 1.0]},
  "n_max": 3
}"#;

fn last_error() -> String {
    let p = mixwass_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn run_recovers_single_gaussian() {
    let cfg = CString::new(ZERO_VALUE).unwrap();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(mixwass_run(cfg.as_ptr(), &mut report), MixwassStatus::Ok);
        let mut order = 0usize;
        assert_eq!(
            mixwass_report_certificate(report, &mut order),
            MixwassCertificate::MixtureCandidate
        );
        assert_eq!(mixwass_report_num_orders(report), order);
        let mut row = std::mem::zeroed::<MixwassOrder>();
        assert_eq!(mixwass_report_order(report, 0, &mut row), MixwassStatus::Ok);
        assert_eq!(row.n, 1);
        assert!(row.tau.abs() < 1e-6);
        assert_eq!(mixwass_report_num_atoms(report), 1);
        let (mut m, mut s, mut w) = (0.0, 0.0, 0.0);
        assert_eq!(mixwass_report_atom(report, 0, &mut m, &mut s, &mut w), MixwassStatus::Ok);
        assert!((m - 0.3).abs() < 1e-6 && (s - 0.1).abs() < 1e-6 && (w - 1.0).abs() < 1e-8);
        assert_eq!(
            mixwass_report_atom(report, 1, &mut m, &mut s, &mut w),
            MixwassStatus::OutOfBounds
        );
        let mut json = ptr::null_mut();
        assert_eq!(mixwass_report_json(report, &mut json), MixwassStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("mixture-candidate"));
        mixwass_string_free(json);
        mixwass_report_free(report);
    }
}

#[test]
fn bad_config_maps_to_config_status() {
    let cfg = CString::new(r#"{"measure": 3}"#).unwrap();
    let mut report = ptr::null_mut();
    let status = unsafe { mixwass_run(cfg.as_ptr(), &mut report) };
    assert_eq!(status, MixwassStatus::Config);
    assert!(report.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        assert_eq!(mixwass_run(ptr::null(), ptr::null_mut()), MixwassStatus::NullPointer);
        let mut report = ptr::null_mut();
        assert_eq!(mixwass_run(ptr::null(), &mut report), MixwassStatus::NullPointer);
        assert_eq!(mixwass_report_num_orders(ptr::null()), 0);
        mixwass_report_free(ptr::null_mut());
        mixwass_string_free(ptr::null_mut());
    }
}

#[test]
fn moments_and_closed_form() {
    let spec = CString::new(r#"{"type": "gaussian-mixture", "components": [{"weight": 1, "mean": 0, "sigma": 1}]}"#)
        .unwrap();
    let mut buf = [0.0; 5];
    unsafe {
        assert_eq!(mixwass_moments(spec.as_ptr(), 4, buf.as_mut_ptr(), 5), MixwassStatus::Ok);
        assert_eq!(mixwass_moments(spec.as_ptr(), 4, buf.as_mut_ptr(), 4), MixwassStatus::OutOfBounds);
    }
    assert_eq!(buf, [1.0, 0.0, 1.0, 0.0, 3.0]);
    let mut w = 0.0;
    unsafe {
        assert_eq!(mixwass_w2_gaussian(0.2, 0.1, 0.5, 0.3, &mut w), MixwassStatus::Ok);
        assert_eq!(mixwass_w2_gaussian(0.2, -0.1, 0.5, 0.3, &mut w), MixwassStatus::Config);
    }
    assert!(last_error().contains("domain"));
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "mixwass.h"

int main(void) {
    double buf[3];
    const char *spec = "{\"type\": \"dirac-mixture\", \"atoms\": [{\"weight\": 1, \"location\": 0.5}]}";
    if (mixwass_moments(spec, 2, buf, 3) != MIXWASS_STATUS_OK) return 1;
    if (buf[2] != 0.25) return 2;
    double w;
    if (mixwass_w2_gaussian(0.2, 0.1, 0.5, 0.3, &w) != MIXWASS_STATUS_OK) return 3;
    MixwassReport *report = NULL;
    if (mixwass_run("{\"set\": 1}", &report) != MIXWASS_STATUS_CONFIG) return 4;
    if (mixwass_last_error() == NULL || report != NULL) return 5;
    printf("%.17g\n", w);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let lib = target_dir().join("libmixwass_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile_dir();
    let src = dir.join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header())
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let w: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((w - 0.13).abs() < 1e-15);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mixwass-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
