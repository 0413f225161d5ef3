use std::f64::consts::PI;
use std::fs;

use super::*;
use crate::spectral::read_snapshot;

fn minimal(extra: &str) -> String {
    format!(
        "[model]\nkind = \"ks\"\n\n[grid]\nlength = \"32pi\"\nN = 64\n\n[stepper]\ndt = 0.01\nt_end = 0.1\n{extra}"
    )
}

fn with_dir(text: &str, dir: &Path) -> RunConfig {
    let mut cfg = parse_config(text).unwrap();
    cfg.output.dir = dir.to_path_buf();
    cfg
}

#[test]
fn minimal_ks_config_gets_defaults() {
    let cfg = parse_config(&minimal("")).unwrap();
    assert_eq!(cfg.model.kind, ModelKind::Ks);
    assert_eq!(cfg.model.alpha, Some(2.0));
    assert!((cfg.grid.length.0 - 32.0 * PI).abs() < 1e-12);
    assert_eq!(cfg.initial_condition, InitialCondition::Default);
    assert_eq!(cfg.experiment.eps_values, vec![0.2, 0.1, 0.05, 0.025]);
    let grid = cfg.grid().unwrap();
    assert_eq!(grid.n_points(), 64);
}

#[test]
fn odd_point_count_is_rejected() {
    let text = minimal("").replace("N = 64", "N = 63");
    let err = parse_config(&text).unwrap_err();
    assert!(err.to_string().contains("grid.N must be even ≥ 8 (got 63)"), "{err}");
}

#[test]
fn two_epsilons_are_rejected() {
    let err = parse_config(&minimal("\n[experiment]\neps_values = [0.1, 0.05]\n")).unwrap_err();
    assert!(err.to_string().contains("need ≥ 3 epsilon values"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(parse_config(&minimal("\n[output]\ndirectory = \"x\"\n")).is_err());
    let text = minimal("").replace("dt = 0.01", "dt = 0.01\nsubsteps = 2");
    assert!(parse_config(&text).is_err());
}

#[test]
fn length_accepts_multiples_of_pi() {
    for (text, expected) in [
        ("\"2pi\"", 2.0 * PI),
        ("\"32*pi\"", 32.0 * PI),
        ("\"32π\"", 32.0 * PI),
        ("\"pi\"", PI),
        ("12.5", 12.5),
    ] {
        let cfg = parse_config(&minimal("").replace("\"32pi\"", text)).unwrap();
        assert!((cfg.grid.length.0 - expected).abs() < 1e-12, "{text}");
    }
    assert!(parse_config(&minimal("").replace("\"32pi\"", "\"3 apples\"")).is_err());
}

#[test]
fn serialization_round_trips() {
    let text = minimal(
        "\n[initial_condition]\nkind = \"modes\"\nmodes = [[1, 0.5, 0.25], [3, 0.1, 0.0]]\n\n[lemma]\ngamma = 2.0\nm = 6.0\n",
    );
    let cfg = parse_config(&text).unwrap();
    let again = parse_config(&serialize_config(&cfg)).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(serialize_config(&cfg), serialize_config(&again));
    assert_eq!(config_hash(&cfg), config_hash(&again));
}

#[test]
fn zero_data_simulation_writes_zero_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_dir(
        &minimal("snapshot_every = 0.05\n\n[initial_condition]\nkind = \"zero\"\n"),
        tmp.path(),
    );
    let report = run(Command::Simulate, &cfg).unwrap();
    assert_eq!(report.status, Status::Success);
    assert_eq!(report.dir, output_dir(&cfg, Command::Simulate));
    let csv = fs::read_to_string(report.dir.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(EnergyReport::CSV_HEADER));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        for value in row.split(',').skip(1) {
            assert_eq!(value.parse::<f64>().unwrap(), 0.0, "{row}");
        }
    }
    let last = read_snapshot(report.dir.join("snap_2.fld")).unwrap();
    assert_eq!(last.max_abs(), 0.0);
}

#[test]
fn manifests_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_dir(&minimal(""), tmp.path());
    let a = run_in(Command::Simulate, &cfg, &tmp.path().join("a")).unwrap();
    let b = run_in(Command::Simulate, &cfg, &tmp.path().join("b")).unwrap();
    let ma = fs::read(a.dir.join("manifest.json")).unwrap();
    let mb = fs::read(b.dir.join("manifest.json")).unwrap();
    assert_eq!(ma, mb);

    let json: serde_json::Value = serde_json::from_slice(&ma).unwrap();
    assert_eq!(json["config_hash"], config_hash(&cfg));
    assert_eq!(json["partial"], false);
    let files = json["files"].as_object().unwrap();
    assert!(files.contains_key("diagnostics.csv"));
    for (name, hash) in files {
        let bytes = fs::read(a.dir.join(name)).unwrap();
        assert_eq!(hash.as_str().unwrap(), sha256_hex(&bytes), "{name}");
    }
    assert!(json["notes"][0].as_str().unwrap().contains("defaulted"));
}

#[test]
fn energy_report_matches_analysis() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_dir(&minimal(""), tmp.path());
    let report = run(Command::EnergyReport, &cfg).unwrap();
    assert_eq!(report.status, Status::Success);
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(report.dir.join("energy.json")).unwrap()).unwrap();
    let u = cfg.initial_field().unwrap();
    let expected = energy_report(&u, 0.0, &u).unwrap();
    assert!((json["report"]["h4"].as_f64().unwrap() - expected.h4).abs() < 1e-14);
    let t = existence_time(expected.h4, 1.0, 10.0).unwrap();
    assert!((json["existence_time"].as_f64().unwrap() - t).abs() < 1e-12 * t);
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.toml");
    fs::write(&good, minimal("")).unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, minimal("").replace("N = 64", "N = 63")).unwrap();
    let out = tmp.path().join("out");
    let code = cli::run_cli([
        "flamefront",
        "simulate",
        "--config",
        good.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.join("manifest.json").exists());
    assert_eq!(cli::run_cli(["flamefront", "simulate", "-c", bad.to_str().unwrap()]), 2);
    assert_eq!(cli::run_cli(["flamefront", "simulate", "-c", "/nonexistent.toml"]), 2);
    assert_eq!(
        cli::run_cli(["flamefront", "lemma-eval", "existence-time", "--h4-norm", "1", "--gamma", "1", "--m", "4"]),
        0
    );
}

#[test]
fn blow_up_marks_partial_and_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    // dt·|L̂(k_max)| = 6, outside the explicit RK4 stability region
    let text = minimal("scheme = \"rk4_explicit\"\n")
        .replace("dt = 0.01", "dt = 0.1")
        .replace("t_end = 0.1", "t_end = 50.0");
    let cfg = with_dir(&text, tmp.path());
    let report = run(Command::Simulate, &cfg).unwrap();
    assert_eq!(report.status, Status::BlowUp);
    assert_eq!(report.status.code(), 3);
    assert!(report.manifest.partial);
    assert!(matches!(report.manifest.outcomes[0], RunOutcome::BlewUp { .. }));
}

#[test]
fn shipped_configs_parse() {
    for text in [
        include_str!("../../../../configs/simulate_ks.toml"),
        include_str!("../../../../configs/sweep_epsilon.toml"),
        include_str!("../../../../configs/sweep_delta.toml"),
        include_str!("../../../../configs/dispersion.toml"),
    ] {
        let cfg = parse_config(text).unwrap();
        cfg.initial_field().unwrap();
    }
}

#[test]
fn minimal_two_pi_config() {
    let cfg = parse_config(
        "[model]\nkind = \"ks\"\n[grid]\nlength = \"2pi\"\nN = 64\n[stepper]\ndt = 1e-3\nt_end = 1.0\n",
    )
    .unwrap();
    assert_eq!(cfg.stepper.scheme, crate::stepping::Scheme::Etdrk4);
    assert_eq!(cfg.output.dir, PathBuf::from("runs"));
    let stepper = cfg.stepper_config().unwrap();
    assert!((stepper.snapshot_every() - 0.005).abs() < 1e-12);
}

#[test]
fn default_epsilon_sweep_passes_and_strict_slope_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let text = include_str!("../../../../configs/sweep_epsilon.toml");
    let cfg = with_dir(text, tmp.path());
    let report = run(Command::SweepEpsilon, &cfg).unwrap();
    assert_eq!(report.status, Status::Success);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(report.dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary["slope"].as_f64().unwrap() >= 0.9);
    let csv = fs::read_to_string(report.dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("epsilon,sup_error,y_space_error\n"));
    assert_eq!(csv.lines().count(), 5);

    let strict = with_dir(
        &text
            .replace("N = 256", "N = 64")
            .replace("dt = 2e-4", "dt = 1e-3")
            .replace("min_slope = 0.9", "min_slope = 5.0"),
        tmp.path(),
    );
    let report = run(Command::SweepEpsilon, &strict).unwrap();
    assert_eq!(report.status, Status::ValidationFailure);
    assert_eq!(report.status.code(), 4);
    assert_eq!(report.manifest.checks["slope"], false);
}
