use std::ffi::{CStr, CString};
use std::ptr;

use shapeflow_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sf_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn domain(n: usize) -> *mut SfDomain {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { sf_domain_square(-1.0, 1.0, n, &mut d) }, SfStatus::Ok);
    assert!(!d.is_null());
    d
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(sf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn disk_round_trip() {
    let d = domain(32);
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(sf_mask_disk(d, 0.0, 0.0, 0.5, &mut m), SfStatus::Ok);
        let mut count = 0usize;
        let mut vol = 0.0;
        assert_eq!(sf_mask_count(m, &mut count), SfStatus::Ok);
        assert_eq!(sf_mask_volume(m, &mut vol), SfStatus::Ok);
        assert!(count > 0);
        assert!((vol - count as f64 * (2.0 / 32.0f64).powi(2)).abs() < 1e-12);
        let mut lam = 0.0;
        assert_eq!(sf_lambda1(m, &mut lam), SfStatus::Ok);
        assert!(lam > 20.0 && lam < 26.0, "{lam}");
        let mut e = 0.0;
        assert_eq!(sf_torsion_energy(m, &mut e), SfStatus::Ok);
        assert!(e < 0.0);
        assert_eq!(last_error(), "");

        let json = CString::new(r#"{"type": "ball", "center": [0.0, 0.0], "radius": 0.5}"#).unwrap();
        let mut j = ptr::null_mut();
        let st = sf_mask_from_json(d, json.as_ptr(), &mut j);
        assert_eq!(st, SfStatus::Ok, "{}", last_error());
        let mut dist = SfSetDistances::default();
        assert_eq!(sf_set_distances(m, j, &mut dist), SfStatus::Ok);
        assert_eq!(dist.hausdorff, 0.0);
        assert_eq!(dist.characteristic, 0.0);
        sf_mask_free(j);
        sf_mask_free(m);
        sf_domain_free(d);
    }
}

#[test]
fn null_pointers_and_bad_arguments() {
    unsafe {
        let mut c = 0usize;
        assert_eq!(sf_mask_count(ptr::null(), &mut c), SfStatus::NullPointer);
        assert!(last_error().contains("mask"));
        assert_eq!(sf_domain_square(0.0, 1.0, 4, ptr::null_mut()), SfStatus::NullPointer);
        let mut d = ptr::null_mut();
        assert_eq!(sf_domain_square(1.0, 0.0, 4, &mut d), SfStatus::InvalidArgument);
        assert!(d.is_null());
        assert!(!last_error().is_empty());
        let dom = domain(8);
        let bad = CString::new("{not json").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(sf_mask_from_json(dom, bad.as_ptr(), &mut m), SfStatus::InvalidArgument);
        let mut r = 0.0;
        assert_eq!(sf_ball_flow_reference(-1.0, 2, 0.1, &mut r), SfStatus::InvalidArgument);
        assert_eq!(sf_ball_flow_reference(1.0, 2, 0.0, &mut r), SfStatus::Ok);
        assert_eq!(r, 1.0);
        sf_domain_free(dom);
        sf_domain_free(ptr::null_mut());
        sf_mask_free(ptr::null_mut());
        assert_eq!(sf_run_command(ptr::null(), ptr::null(), ptr::null(), 0, 0), -1);
    }
}

#[test]
fn empty_mask_has_no_eigenvalue() {
    let d = domain(8);
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(sf_mask_disk(d, 0.01, 0.02, 0.01, &mut m), SfStatus::Ok);
        let mut lam = 0.0;
        assert_eq!(sf_lambda1(m, &mut lam), SfStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        sf_mask_free(m);
        sf_domain_free(d);
    }
}

#[test]
fn run_command_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"schema": 1, "epsilon": 0.001}"#).unwrap();
    let out = dir.path().join("out");
    let c = |s: &str| CString::new(s).unwrap();
    let (cmd, cfgp, outp) = (c("annulus-case"), c(cfg.to_str().unwrap()), c(out.to_str().unwrap()));
    let code = unsafe { sf_run_command(cmd.as_ptr(), cfgp.as_ptr(), outp.as_ptr(), 0, 0) };
    assert_eq!(code, 0);
    assert!(out.join("summary.json").exists());
    let bad = c("no-such-command");
    assert_eq!(
        unsafe { sf_run_command(bad.as_ptr(), cfgp.as_ptr(), outp.as_ptr(), 0, 0) },
        2
    );
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/shapeflow.h")).unwrap();
    for name in [
        "sf_version",
        "sf_last_error_message",
        "sf_domain_square",
        "sf_domain_free",
        "sf_mask_disk",
        "sf_mask_from_json",
        "sf_mask_free",
        "sf_mask_count",
        "sf_mask_volume",
        "sf_lambda1",
        "sf_torsion_energy",
        "sf_set_distances",
        "sf_ball_flow_reference",
        "sf_run_command",
        "SF_STATUS_NULL_POINTER",
        "typedef struct SfMask SfMask",
    ] {
        assert!(h.contains(name), "{name} missing from the header");
    }
}
