use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use east_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = east_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn default_run_through_handles() {
    unsafe {
        let cfg = east_config_default();
        assert_eq!(
            east_config_set(cfg, c("rounds").as_ptr(), c("40").as_ptr()),
            EastStatus::Ok
        );
        assert_eq!(
            east_config_set(cfg, c("node_count").as_ptr(), c("25").as_ptr()),
            EastStatus::Ok
        );
        let mut run = ptr::null_mut();
        assert_eq!(east_run(cfg, &mut run), EastStatus::Ok);
        assert_eq!(east_run_rounds_executed(run), 40);
        assert_eq!(east_run_survivors(run), 25);
        assert!(east_run_control_packets(run) > 0);
        assert!(east_run_energy_j(run) > 0.0);

        let mut classical = ptr::null_mut();
        let (k, v) = (c("controller"), c("classical"));
        assert_eq!(east_config_set(cfg, k.as_ptr(), v.as_ptr()), EastStatus::Ok);
        assert_eq!(east_run(cfg, &mut classical), EastStatus::Ok);
        assert!(east_run_control_packets(run) < east_run_control_packets(classical));
        assert!(east_run_energy_j(run) < east_run_energy_j(classical));

        let dir = tempfile::tempdir().unwrap();
        let path = c(dir.path().to_str().unwrap());
        assert_eq!(east_run_write_csv(run, path.as_ptr()), EastStatus::Ok);
        for f in ["rounds.csv", "nodes.csv", "summary.csv", "manifest.json"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        east_run_free(run);
        east_run_free(classical);
        east_config_free(cfg);
    }
}

#[test]
fn matches_the_rust_api() {
    unsafe {
        let cfg = east_config_default();
        east_config_set(cfg, c("rounds").as_ptr(), c("60").as_ptr());
        let mut run = ptr::null_mut();
        assert_eq!(east_run(cfg, &mut run), EastStatus::Ok);
        let native = east_core::run_simulation(&east_core::SimConfig {
            rounds: 60,
            ..Default::default()
        })
        .unwrap();
        let packets: u64 = native.records.iter().map(|r| r.traffic.total()).sum();
        assert_eq!(east_run_control_packets(run), packets);
        east_run_free(run);
        east_config_free(cfg);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let cfg = east_config_default();
        assert_eq!(
            east_config_set(cfg, c("no_such_key").as_ptr(), c("1").as_ptr()),
            EastStatus::Config
        );
        assert!(last_error().contains("no_such_key"));

        // a rejected value leaves the config untouched
        assert_eq!(
            east_config_set(cfg, c("rounds").as_ptr(), c("x").as_ptr()),
            EastStatus::Config
        );
        assert_eq!(
            east_config_set(cfg, c("rounds").as_ptr(), c("0").as_ptr()),
            EastStatus::Ok
        );
        let mut run = ptr::null_mut();
        assert_eq!(east_run(cfg, &mut run), EastStatus::Config);
        assert!(run.is_null());
        assert!(last_error().contains("rounds"));

        assert_eq!(
            east_config_set(ptr::null_mut(), c("a").as_ptr(), c("b").as_ptr()),
            EastStatus::NullPointer
        );
        assert_eq!(east_run(ptr::null(), &mut run), EastStatus::NullPointer);
        assert_eq!(east_run(cfg, ptr::null_mut()), EastStatus::NullPointer);
        let bad = [0xffu8, 0];
        assert_eq!(
            east_config_set(cfg, bad.as_ptr().cast(), c("1").as_ptr()),
            EastStatus::InvalidUtf8
        );

        let mut loaded = ptr::null_mut();
        let missing = c("/nonexistent/dir/east.cfg");
        assert_eq!(
            east_config_from_file(missing.as_ptr(), &mut loaded),
            EastStatus::Io
        );
        assert!(loaded.is_null());

        east_config_free(cfg);
        east_config_free(ptr::null_mut());
        east_run_free(ptr::null_mut());
        assert_eq!(east_run_survivors(ptr::null()), 0);
    }
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cfg");
    std::fs::write(&path, "seed = 9\nrounds = 5\nnode_count = 10\n").unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        let p = c(path.to_str().unwrap());
        assert_eq!(east_config_from_file(p.as_ptr(), &mut cfg), EastStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(east_run(cfg, &mut run), EastStatus::Ok);
        assert_eq!(east_run_rounds_executed(run), 5);
        assert_eq!(east_run_survivors(run), 10);
        east_run_free(run);
        east_config_free(cfg);
    }
}

#[test]
fn formula_wrappers() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(east_rssi_loss(53.0, &mut v), EastStatus::Ok);
        assert!((v - 5.5888).abs() < 1e-9);
        assert_eq!(east_power_level(3.78, &mut v), EastStatus::Ok);
        assert!((v - 43.24).abs() < 0.05);
        assert_eq!(east_power_level(-40.0, &mut v), EastStatus::Domain);
        assert_eq!(east_base_requirement(100.0, &mut v), EastStatus::Ok);
        assert!((v + 26.45).abs() < 0.1);
        assert_eq!(east_base_requirement(0.0, &mut v), EastStatus::Domain);
        assert_eq!(east_rssi_loss(f64::NAN, &mut v), EastStatus::Domain);
        assert_eq!(
            east_rssi_loss(1.0, ptr::null_mut()),
            EastStatus::NullPointer
        );
    }
    let version = unsafe { CStr::from_ptr(east_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/east_sim.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "east_config_default",
        "east_run",
        "east_run_free",
        "EAST_STATUS_OK",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-xc"])
        .arg(&header)
        .status()
    else {
        eprintln!("cc not found; skipping compile check");
        return;
    };
    assert!(status.success());
}
