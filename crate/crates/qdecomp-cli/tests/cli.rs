//! End-to-end tests of the `qdecomp` binary: exit codes, output shape,
//! determinism, and config-file override semantics.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qdecomp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdecomp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

/// Four distinct outcomes per group x arm cell, replicated so bootstrap
/// resamples keep every cell populated.
fn write_fixture(path: &Path) {
    let rows = [
        "10,0,1,f", "20,0,1,f", "15,1,1,f", "25,1,1,f",
        "10,0,1,m", "20,0,1,m", "15,1,1,m", "25,1,1,m",
    ];
    let mut text = String::from("earn,offer,w,sex\n");
    for _ in 0..10 {
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
    }
    fs::write(path, text).unwrap();
}

fn base_args<'a>(out: &'a str) -> Vec<&'a str> {
    vec![
        "decompose", "--input", "data.csv", "--outcome", "earn", "--treatment", "offer",
        "--weight", "w", "--group", "sex", "--reps-quantile", "50", "--reps-average", "50",
        "--grid", "25,50,75", "--seed", "7", "--out", out,
    ]
}

#[test]
fn fixture_averages_match_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&dir.path().join("data.csv"));
    let out = qdecomp(&base_args("run"), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let averages = fs::read_to_string(dir.path().join("run/averages.csv")).unwrap();
    let cell = |effect: &str, group: &str| -> f64 {
        averages
            .lines()
            .find(|l| l.starts_with(&format!("{effect},{group},")))
            .unwrap_or_else(|| panic!("row {effect},{group} missing in:\n{averages}"))
            .split(',')
            .nth(2)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(cell("ATE", "all"), 5.0);
    assert_eq!(cell("CATE", "f"), 5.0);
    assert_eq!(cell("TATE", "f"), 5.0);
    assert_eq!(cell("SATE", "f"), 0.0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&dir.path().join("data.csv"));
    assert!(qdecomp(&base_args("a"), dir.path()).status.success());
    assert!(qdecomp(&base_args("b"), dir.path()).status.success());
    for file in ["manifest.json", "series.csv", "averages.csv", "tests.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn unknown_group_column_is_config_error_naming_the_column() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&dir.path().join("data.csv"));
    let mut args = base_args("run");
    let i = args.iter().position(|a| *a == "sex").unwrap();
    args[i] = "nonexistent";
    let out = qdecomp(&args, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nonexistent"), "stderr: {stderr}");
}

#[test]
fn missing_input_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = qdecomp(&base_args("run"), dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invalid_reference_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&dir.path().join("data.csv"));
    let mut args = base_args("run");
    args.extend(["--reference", "bogus"]);
    let out = qdecomp(&args, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--reference"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&dir.path().join("data.csv"));
    fs::write(
        dir.path().join("run.conf"),
        "input = data.csv\noutcome = earn\ntreatment = offer\nweight = w\ngroup = sex\n\
         reps-quantile = 50\nreps-average = 50\ngrid = 25,50,75\nseed = 7\nout = from_file\n",
    )
    .unwrap();

    let out = qdecomp(&["decompose", "--config", "run.conf"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("from_file/averages.csv").exists());

    // The flag overrides the file's output directory.
    let out = qdecomp(&["decompose", "--config", "run.conf", "--out", "flag_wins"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("flag_wins/averages.csv").exists());
}

#[test]
fn json_format_emits_single_report() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&dir.path().join("data.csv"));
    let mut args = base_args("run");
    args.extend(["--format", "json"]);
    assert!(qdecomp(&args, dir.path()).status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/report.json")).unwrap()).unwrap();
    assert!(report["manifest"]["hash"].as_str().unwrap().len() == 16);
    assert!(report["series"].as_array().unwrap().len() >= 3);
}

#[test]
fn simulate_identity_check_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = qdecomp(
        &[
            "simulate", "--study", "identity-check", "--dgp", "shift", "--n", "5000", "--seed",
            "1", "--out", "sim",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).trim_end().ends_with("PASS"));
    assert!(dir.path().join("sim/simulate.json").exists());
}

#[test]
fn diagnose_reports_balance_and_compliers() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("earn,offer,w,sex,enr\n");
    for i in 0..200 {
        let t = i % 2;
        let enr = if t == 1 && i % 3 != 0 { 1 } else { 0 };
        text.push_str(&format!("{}.5,{t},1,{},{enr}\n", 10 + i % 40, if i % 4 < 2 { "f" } else { "m" }));
    }
    fs::write(dir.path().join("data.csv"), text).unwrap();
    let out = qdecomp(
        &[
            "diagnose", "--input", "data.csv", "--outcome", "earn", "--treatment", "offer",
            "--weight", "w", "--group", "sex", "--enrolled", "enr", "--out", "diag",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let compliers = fs::read_to_string(dir.path().join("diag/compliers.csv")).unwrap();
    assert!(compliers.contains("all,"));
    assert!(compliers.contains("group:f,"));
    assert!(compliers.contains("quartile:1,"));
}
