use std::process::Command;

use sumprod::experiments::{emit_report, run, Check, ExperimentConfig, Mode, Report};
use sumprod::generators::GeneratorSpec;
use sumprod::Error;

fn config(mode: Mode, m: u32) -> ExperimentConfig {
    ExperimentConfig {
        m,
        ..ExperimentConfig::new(mode)
    }
}

fn entry_holds(report: &Report, name: &str) -> bool {
    report
        .ledger
        .get(name)
        .unwrap_or_else(|| panic!("missing entry {name}"))
        .holds
}

#[test]
fn difference_product_on_cantor() {
    let report = run(&config(Mode::DifferenceProduct, 16)).unwrap();
    assert!(
        report.hard_pass,
        "{:?}",
        report.ledger.hard_failures().collect::<Vec<_>>()
    );
    assert!(report.exponent("max_tau_upsilon").unwrap() >= 0.45);
    for name in [
        "final_exponent",
        "target_5s_over_4",
        "target_33s_over_26",
        "popular_content",
        "boxes_upper",
    ] {
        assert!(report.ledger.get(name).is_some(), "{name}");
    }
    assert!((report.exponent("target_33s_over_26").unwrap() - 33.0 / 52.0).abs() < 1e-12);
}

#[test]
fn difference_product_on_an_progression() {
    let m = 16;
    let mut cfg = config(Mode::DifferenceProduct, m);
    cfg.generator = GeneratorSpec::Ap {
        start: 1 << (m - 1),
        step: 1 << (m / 2 - 1),
        count: 1 << (m / 2),
    };
    let report = run(&cfg).unwrap();
    assert!(report.hard_pass);
    assert_eq!(report.input.size, 256);
    // the difference set has 2·#A − 1 cells, so τ ≈ s
    let tau = report.exponent("tau_d").unwrap();
    assert!((tau - 0.5).abs() <= 1.0 / m as f64, "{tau}");
    // the product set is much larger
    assert!(report.exponent("upsilon").unwrap() > 0.8);
    assert!(report.exponent("max_tau_upsilon").unwrap() >= 0.625 - 0.2);
}

#[test]
fn single_cell_input_is_rejected() {
    let mut cfg = config(Mode::DifferenceProduct, 12);
    cfg.generator = GeneratorSpec::Ap {
        start: 3000,
        step: 1,
        count: 1,
    };
    assert!(matches!(run(&cfg), Err(Error::Hypothesis(_))));
}

#[test]
fn hypothesis_modes_reject_bad_inputs() {
    let mut cfg = config(Mode::SumProduct, 12);
    cfg.s = 0.7;
    assert!(matches!(run(&cfg), Err(Error::Hypothesis(_))));
    // a random set at s = 0.2 is far from 1/2-Frostman
    let mut cfg = config(Mode::DifferenceProduct, 14);
    cfg.generator = GeneratorSpec::RandomFrostman {
        s: 0.2,
        seed: 1,
        shift: true,
    };
    assert!(matches!(run(&cfg), Err(Error::Hypothesis(_))));
}

#[test]
fn sum_product_on_cantor() {
    let report = run(&config(Mode::SumProduct, 12)).unwrap();
    assert!(
        report.hard_pass,
        "{:?}",
        report.ledger.hard_failures().collect::<Vec<_>>()
    );
    for name in [
        "eta_sensitivity",
        "level_kt",
        "sum_lower",
        "final_exponent",
        "target_29s_over_23",
    ] {
        assert!(report.ledger.get(name).is_some(), "{name}");
    }
    assert!(entry_holds(&report, "quadruple_symmetry"));
    assert!(entry_holds(&report, "separated_fiber_cauchy_schwarz"));
}

#[test]
fn energy_bounds_at_small_scale() {
    let mut cfg = config(Mode::EnergyBounds, 10);
    cfg.brute_check = true;
    let report = run(&cfg).unwrap();
    assert!(report.hard_pass);
    for name in [
        "representations_vs_incidences",
        "incidences_brute",
        "dyadic_lower",
        "dyadic_upper",
        "dummy_variable",
    ] {
        assert!(entry_holds(&report, name), "{name}");
    }
    for name in ["representation_bound", "energy_bound"] {
        assert_eq!(report.ledger.get(name).unwrap().check, Check::Log);
    }
}

#[test]
fn incidence_ratio_at_small_scale() {
    let report = run(&config(Mode::IncidenceRatio, 10)).unwrap();
    assert!(report.hard_pass);
    assert!(report.exponent("ratio").unwrap() > 0.0);
}

#[test]
fn content_of_cantor_popular_differences() {
    let report = run(&config(Mode::ElekesContent, 12)).unwrap();
    assert!(report.hard_pass);
    assert!(report.exponent("content_exponent").unwrap() <= 0.2);
    assert!(report.exponent("planar_content_exponent").unwrap() <= 0.2);
}

#[test]
fn reports_round_trip_and_repeat() {
    let cfg = config(Mode::SumProduct, 12);
    let first = run(&cfg).unwrap();
    let second = run(&cfg).unwrap();
    assert_eq!(first.to_json().unwrap(), second.to_json().unwrap());
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_report(&first, dir.path()).unwrap();
    assert!(paths.iter().all(|p| p.exists()));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(Report::from_json(&text).unwrap().ledger, first.ledger);
    let csv = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert_eq!(csv.lines().count(), first.ledger.entries.len() + 1);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let report = run(&config(Mode::DifferenceProduct, 10)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let err = emit_report(&report, &file.join("out")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("plain"));
}

fn cli(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_sumprod"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(cli(&["diffprod", "--m", "10", "--out", out.to_str().unwrap()]), 0);
    assert!(out.join("report.json").exists());
    assert_eq!(cli(&["diffprod", "--m", "10", "--max-slack", "-1"]), 2);
    assert_eq!(cli(&["sumprod", "--m", "10", "--s", "0.8"]), 3);
    assert_eq!(cli(&["content", "--config", "/nonexistent/config.json"]), 1);

    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"m": 10, "generator": {"kind": "random_frostman", "s": 0.5, "seed": 3}}"#,
    )
    .unwrap();
    assert_eq!(
        cli(&[
            "energy",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "4",
            "--brute-check"
        ]),
        0
    );
}
