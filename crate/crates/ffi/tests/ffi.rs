use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use sumprod_ffi::*;

fn last_error() -> String {
    let p = sp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_set(m: u32, cells: &[i64]) -> *mut SpGridSet {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { sp_set_new(m, cells.as_ptr(), cells.len(), &mut out) },
        SpStatus::Ok
    );
    out
}

fn cells_of(set: *const SpGridSet) -> Vec<i64> {
    let mut len = 0;
    unsafe {
        assert_eq!(sp_set_cells(set, ptr::null_mut(), 0, &mut len), SpStatus::Ok);
        let mut buf = vec![0; len];
        assert_eq!(sp_set_cells(set, buf.as_mut_ptr(), buf.len(), &mut len), SpStatus::Ok);
        buf
    }
}

#[test]
fn sets_round_trip() {
    let set = new_set(6, &[40, 33, 32, 40]);
    unsafe {
        assert_eq!(sp_set_len(set), 3);
        assert_eq!(sp_set_scale(set), 6);
        assert_eq!(cells_of(set), [32, 33, 40]);
        let mut n = 0;
        assert_eq!(sp_set_covering_number(set, 3, &mut n), SpStatus::Ok);
        assert_eq!(n, 2);
        sp_set_free(set);
        sp_set_free(ptr::null_mut());
        assert_eq!(sp_set_len(ptr::null()), 0);
    }
}

#[test]
fn arithmetic_and_energies() {
    let a = new_set(6, &[32, 33, 35]);
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(sp_set_arithmetic(a, a, SpArithOp::Diff, &mut d), SpStatus::Ok);
        assert_eq!(cells_of(d), (-3..=3).collect::<Vec<_>>());
        sp_set_free(d);

        let mut q = 0;
        assert_eq!(
            sp_quadruple_count(a, a, SpFiberMode::Difference, 0, &mut q),
            SpStatus::Ok
        );
        assert_eq!(q, 15);
        let mut e1 = 0;
        assert_eq!(
            sp_energy_exact(a, a, 1, SpFiberMode::Difference, 2, &mut e1),
            SpStatus::Ok
        );
        assert_eq!(e1, 5 * 9);
        let mut e = 0.0;
        assert_eq!(sp_energy(a, a, 1.0, SpFiberMode::Sum, 2, &mut e), SpStatus::Ok);
        assert_eq!(e, 45.0);
        sp_set_free(a);
    }
}

#[test]
fn generated_sets_and_regularity() {
    let spec = CString::new(r#"{"kind": "cantor", "base": 4, "digits": [0, 2]}"#).unwrap();
    let mut set = ptr::null_mut();
    unsafe {
        assert_eq!(sp_set_generate(spec.as_ptr(), 12, &mut set), SpStatus::Ok);
        assert_eq!(sp_set_len(set), 64);
        let (mut c, mut kt, mut content) = (0.0, 0.0, 0.0);
        assert_eq!(
            sp_frostman_constant(set, 0.5, SpFrostmanKind::Set, &mut c),
            SpStatus::Ok
        );
        assert_eq!(
            sp_frostman_constant(set, 0.5, SpFrostmanKind::Kt, &mut kt),
            SpStatus::Ok
        );
        assert!(c >= 1.0 && kt >= 1.0);
        assert_eq!(sp_dyadic_content(set, 0.5, &mut content), SpStatus::Ok);
        assert!(content > 0.0 && content <= 1.0);
        sp_set_free(set);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(sp_set_new(0, [1i64].as_ptr(), 1, &mut out), SpStatus::InvalidInput);
        assert!(out.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(sp_set_new(4, ptr::null(), 3, &mut out), SpStatus::NullPointer);
        assert!(last_error().contains("cells"));

        let a = new_set(4, &[1]);
        let b = new_set(5, &[1]);
        assert_eq!(
            sp_set_arithmetic(a, b, SpArithOp::Sum, &mut out),
            SpStatus::ScaleMismatch
        );
        let zero = new_set(4, &[0]);
        assert_eq!(sp_set_arithmetic(a, zero, SpArithOp::Quot, &mut out), SpStatus::Domain);
        let mut v = 0;
        assert_eq!(
            sp_energy_exact(a, a, 2, SpFiberMode::Difference, 0, ptr::null_mut()),
            SpStatus::NullPointer
        );
        assert_eq!(
            sp_quadruple_count(ptr::null(), a, SpFiberMode::Difference, 0, &mut v),
            SpStatus::NullPointer
        );
        for s in [a, b, zero] {
            sp_set_free(s);
        }

        let bad = CString::new(r#"{"kind": "spiral"}"#).unwrap();
        assert_eq!(sp_set_generate(bad.as_ptr(), 8, &mut out), SpStatus::Json);
        let mut code = 0;
        let cfg = CString::new(r#"{"mode": "sum_product", "m": 10, "s": 0.8}"#).unwrap();
        assert_eq!(
            sp_run_experiment(cfg.as_ptr(), ptr::null(), &mut code),
            SpStatus::Hypothesis
        );
    }
}

#[test]
fn experiments_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
    let cfg = CString::new(r#"{"mode": "difference_product", "m": 10}"#).unwrap();
    let mut code = -1;
    unsafe {
        assert_eq!(sp_run_experiment(cfg.as_ptr(), out.as_ptr(), &mut code), SpStatus::Ok);
    }
    assert_eq!(code, 0);
    assert!(dir.path().join("run/report.json").exists());
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(sp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/sumprod.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["sp_set_new", "sp_run_experiment", "sp_last_error", "SP_STATUS_PANIC"] {
        assert!(text.contains(f), "{f}");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        return;
    };
    assert!(status.success());
}
