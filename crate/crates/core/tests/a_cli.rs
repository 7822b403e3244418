//! Scenario files, presets and the command-line contract.

use std::fs;
use std::path::Path;
use std::process::Command;

use strat_ipm::scenario::{
    emit, list_scenarios, parse_config, parse_scenario, preset, preset_ids, run_scenario, Outcome,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_strat-ipm"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const TINY_N: &str = r#"
id = "destabilized"
[[simulation]]
label = "tiny"
domain = "torus"
N_per_norm = 0.01
K = 16
Nt_final = 2.0
ledger = "enforce"
[simulation.initial]
family = "band_limited"
seed = 11
band = 4
amplitude = 1.0
"#;

#[test]
fn catalogue_is_fixed() {
    let mut ids = preset_ids();
    ids.sort_unstable();
    assert_eq!(
        ids,
        [
            "inequalities",
            "kernel-decay",
            "mean-laws",
            "plane-quasilinear",
            "sharpness-witness",
            "strip-rates",
            "torus-linear-rates",
            "torus-nonlinear-profile"
        ]
    );
    let list = list_scenarios().unwrap();
    assert!(list.iter().all(|(_, anchor)| !anchor.is_empty()));
    let mut anchors: Vec<_> = list.iter().map(|(_, a)| a.clone()).collect();
    anchors.sort();
    anchors.dedup();
    assert_eq!(anchors.len(), 8);
}

#[test]
fn catalogue_round_trips() {
    for id in preset_ids() {
        let s = preset(id).unwrap();
        let text = emit(&s).unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), s, "{id}");
        assert_eq!(emit(&parse_scenario(&text).unwrap()).unwrap(), text, "{id}");
    }
}

#[test]
fn minimal_file_is_completed() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "min.toml", "id = \"min\"\n[[simulation]]\ndomain = \"torus\"\nN = 100\nK = 64\n");
    let s = parse_config(&path).unwrap();
    let text = emit(&s).unwrap();
    for key in ["policy = \"cfl\"", "final_time = 4.096", "ledger = \"report\"", "modes = [64, 64]"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
}

#[test]
fn errors_name_the_offending_key() {
    let err =
        parse_scenario("id = \"x\"\n[[simulation]]\ndomain = \"torus\"\nN = 1\nK = 8\nfinal_tme = 3\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("final_tme") && msg.contains("line 6"), "{msg}");

    let err = parse_scenario("id = \"x\"\n[[simulation]]\ndomain = \"torus\"\nN = \"big\"\nK = 8\n").unwrap_err();
    assert!(err.to_string().contains("line 4"), "{err}");

    let sigma = "id = \"x\"\n[[simulation]]\ndomain = \"torus\"\nN = 1\nK = 8\n[simulation.profile]\nshape = \"bump\"\namplitude = 0.1\nradius = 0.2\n";
    assert!(parse_scenario(sigma).unwrap_err().to_string().contains("plane_box"));

    let dangling = "id = \"x\"\n[[prediction]]\ncurve = \"nowhere.u_H0\"\nexponent = -1.0\ntolerance = 0.1\n";
    assert!(parse_scenario(dangling).unwrap_err().to_string().contains("nowhere"));
}

#[test]
fn inequality_report_is_byte_identical() {
    let s = preset("inequalities").unwrap();
    let (a, b) = (run_scenario(&s).unwrap(), run_scenario(&s).unwrap());
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.outcome, Outcome::Pass);
}

#[test]
fn curves_are_byte_identical() {
    let s = preset("mean-laws").unwrap();
    let (a, b) = (run_scenario(&s).unwrap(), run_scenario(&s).unwrap());
    for ((na, ca), (nb, cb)) in a.curves.iter().zip(&b.curves) {
        assert_eq!(na, nb);
        assert_eq!(ca.to_csv(), cb.to_csv());
    }
}

#[test]
fn list_prints_every_preset() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("torus-linear-rates"));
}

#[test]
fn preset_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["preset", "torus-linear-rates", "--quiet", "--out"])
        .arg(dir.path())
        .env("STRAT_IPM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(summary.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    let csv = fs::read_to_string(dir.path().join("torus_sweep.csv")).unwrap();
    assert!(csv.starts_with("t,Nt,theta_H0,u_H0,u2_H0\n"));
}

#[test]
fn seed_override_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let status = bin()
            .args(["preset", "strip-rates", "--quiet", "--seed", seed, "--out"])
            .arg(dir.path().join(sub))
            .status()
            .unwrap();
        assert!(status.code().is_some());
        fs::read_to_string(dir.path().join(sub).join("strip_sweep.csv")).unwrap()
    };
    assert_ne!(run("1", "a"), run("2", "b"));
    assert_eq!(run("2", "b"), run("2", "c"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "id = \"x\"\nbogus = 1\n");
    assert_eq!(bin().arg("run").arg(&bad).arg("--quiet").status().unwrap().code(), Some(1));
    assert_eq!(bin().args(["preset", "no-such-preset"]).status().unwrap().code(), Some(1));
    assert_eq!(bin().arg("run").arg(dir.path().join("missing.toml")).status().unwrap().code(), Some(4));

    let blocker = write(dir.path(), "blocker", "");
    let ok = write(dir.path(), "ok.toml", "id = \"ok\"\n");
    let code = bin().arg("run").arg(&ok).arg("--quiet").arg("--out").arg(blocker.join("sub")).status().unwrap().code();
    assert_eq!(code, Some(4));

    let tiny = write(dir.path(), "tiny.toml", TINY_N);
    let out = bin().arg("run").arg(&tiny).arg("--out").arg(dir.path().join("tiny")).output().unwrap();
    let code = out.status.code().unwrap();
    assert!(code == 2 || code == 3, "exit {code}\n{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn ledger_mode_defaults_from_smallness() {
    let text = "id = \"x\"\n[[simulation]]\ndomain = \"torus\"\nN_per_norm = 100\nK = 8\n";
    let s = parse_scenario(text).unwrap();
    assert!(emit(&s).unwrap().contains("ledger = \"enforce\""));
    let s = parse_scenario(&text.replace("100", "10")).unwrap();
    assert!(emit(&s).unwrap().contains("ledger = \"report\""));
}
