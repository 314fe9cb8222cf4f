use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcs"))
        .args(args)
        .env_remove("RCS_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

const MC_BASE: &[&str] = &[
    "mc",
    "--n",
    "4",
    "--depth",
    "3",
    "--kind",
    "amp_then_dep",
    "--q",
    "0.2",
    "--p",
    "0.1",
    "--targets",
    "px,collision",
    "--bitstrings",
    "0000,1111",
];

fn mc_args<'a>(seed: &'a str, samples: &'a str) -> Vec<&'a str> {
    let mut args = MC_BASE.to_vec();
    args.extend(["--seed", seed, "--samples", samples]);
    args
}

#[test]
fn channel_report_fields() {
    let out = rcs(&["channel", "--kind", "amp_then_dep", "--q", "0.3", "--p", "0.1"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["is_cptp"], true);
    assert!((v["t03"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert!((v["r"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert!(v["ptm"].is_array());
}

#[test]
fn non_cp_map_reported_not_rejected() {
    let out = rcs(&[
        "channel",
        "--kind",
        "general_ptm",
        "--t",
        "[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,-1]]",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["is_cptp"], false);
    assert!(v["min_choi_eigenvalue"].as_f64().unwrap() < 0.0);
}

#[test]
fn closedform_collision_bound() {
    let out = rcs(&["closedform", "--formula", "collision_bound", "--n", "4", "--r", "0.1"]);
    assert!(out.status.success());
    let value: f64 = stdout(&out).trim().parse().unwrap();
    assert!((value - 0.04060401).abs() < 1e-12);
}

#[test]
fn verify_suite_passes() {
    let out = rcs(&["verify", "--suite", "uniform_identity"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().starts_with("suite,"));
    assert!(text.contains(",pass"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("uniform_identity"));
}

#[test]
fn mc_config_file_and_flags_agree() {
    let dir = tempfile::tempdir().unwrap();
    let flags_out = dir.path().join("flags.csv");
    let mut args = mc_args("7", "200");
    args.extend(["--out", flags_out.to_str().unwrap()]);
    assert!(rcs(&args).status.success());

    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"n":4,"depth":3,"channel":{"kind":"amp_then_dep","q":0.2,"p":0.1},"samples":200,"seed":7,
            "targets":["px","collision"],"bitstrings":["0000","1111"],"workers":3}"#,
    )
    .unwrap();
    let config_out = dir.path().join("config.csv");
    let out = rcs(&[
        "mc",
        "--config",
        config.to_str().unwrap(),
        "--out",
        config_out.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&flags_out).unwrap(), std::fs::read(&config_out).unwrap());

    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["workers"], 3);
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("flags.json")).unwrap()).unwrap();
    assert_eq!(sidecar["failures"], 0);
    assert!(sidecar["version"]
        .as_str()
        .unwrap()
        .starts_with(env!("CARGO_PKG_VERSION")));
    assert_eq!(sidecar["run_id"].as_str().unwrap().len(), 16);
}

#[test]
fn mc_csv_on_stdout_summary_on_stderr() {
    let out = rcs(&mc_args("7", "200"));
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("run_id,"));
    assert_eq!(text.lines().count(), 4);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("0 failed"));
    assert!(!err.contains("run_id,"));
}

#[test]
fn workers_env_does_not_change_output() {
    let one = rcs(&mc_args("7", "200"));
    let two = Command::new(env!("CARGO_BIN_EXE_rcs"))
        .args(mc_args("7", "200"))
        .env("RCS_WORKERS", "2")
        .output()
        .unwrap();
    assert!(two.status.success());
    assert_eq!(one.stdout, two.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_rcs"))
        .args(mc_args("7", "200"))
        .env("RCS_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn zero_margin_fails_verdicts() {
    let mut args = mc_args("7", "200");
    args.extend(["--margin", "0"]);
    let out = rcs(&args);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains(",fail,"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(rcs(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(rcs(&["closedform", "--nonsense", "1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"n":4,"depth":3,"channel":{"kind":"amp_damp","q":0.2},"samples":200,"seed":1,"targets":["px"],"sampels":3}"#).unwrap();
    let out = rcs(&["mc", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(out.stdout.is_empty());
    let out = rcs(&mc_args("7", "10"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("below the minimum"));
}

#[test]
fn simulate_circuit_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = rcs(&[
        "simulate",
        "--n",
        "3",
        "--depth",
        "2",
        "--kind",
        "amp_damp",
        "--q",
        "0.3",
        "--seed",
        "4",
        "--show",
        "probabilities,circuit",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    let record = dir.path().join("circuit.json");
    std::fs::write(&record, v["circuit"].to_string()).unwrap();
    let replay = json(&rcs(&["simulate", "--circuit", record.to_str().unwrap()]));
    assert_eq!(v["probabilities"], replay["probabilities"]);
    let total: f64 = v["probabilities"]
        .as_object()
        .unwrap()
        .values()
        .map(|p| p.as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-10);
}

fn write_mc(dir: &Path, name: &str, seed: &str) -> String {
    let path = dir.join(name);
    let mut args = mc_args(seed, "200");
    args.extend(["--out", path.to_str().unwrap()]);
    assert!(rcs(&args).status.success());
    path.to_str().unwrap().to_string()
}

#[test]
fn report_merges_and_checks_header() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_mc(dir.path(), "a.csv", "1");
    let b = write_mc(dir.path(), "b.csv", "2");
    let out = rcs(&["report", "--in", &a, &b]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 7);
    assert!(String::from_utf8_lossy(&out.stderr).contains("px"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n").unwrap();
    assert_eq!(rcs(&["report", "--in", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn statmech_sequence_conservation() {
    let out = rcs(&[
        "statmech", "--op", "sequence", "--kind", "amp_damp", "--q", "0.4", "--m", "7",
    ]);
    assert!(out.status.success());
    let c = &json(&out)["coefficients"];
    let get = |k: &str| c[k].as_f64().unwrap();
    assert!((get("x") + get("y") / 2.0 - 1.0).abs() < 1e-12);
    assert!((get("z") + get("w") / 2.0 - 0.5).abs() < 1e-12);
    assert_eq!(
        rcs(&["statmech", "--op", "nope", "--a", "0.1", "--b", "0.1"])
            .status
            .code(),
        Some(2)
    );
}
