use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use simflow::report::{strip_timing, RunReport};

fn simflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simflow"))
        .args(args)
        .current_dir(dir)
        .env_remove("SIMFLOW_SEED")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn sbc_happy_path_writes_report_table_and_figure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simflow(
        tmp.path(),
        &[
            "sbc",
            "--model",
            "normal-normal",
            "--approximator",
            "exact",
            "--S",
            "200",
            "--M",
            "49",
            "--seed",
            "42",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("o");
    let r = report(&dir);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["seed"]["root"], 42);
    assert_eq!(r["seed"]["source"], "flag");
    let verdict = &r["results"]["verdicts"][0];
    assert_eq!(verdict["target"], "theta[0]");
    assert!(verdict["chi2_pvalue"].as_f64().is_some());
    assert!(dir.join("pvalues.csv").exists());
    let svg = std::fs::read_to_string(dir.join("calibration_theta_0.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polygon"));
}

#[test]
fn missing_model_is_a_validation_error_with_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simflow(tmp.path(), &["sbc", "--approximator", "exact", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.name"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn unknown_keys_and_bad_values_are_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec![
            "sbc",
            "--model",
            "normal-normal",
            "--approximator",
            "exact",
            "--set",
            "model.tau=2",
        ],
        vec![
            "sbc",
            "--model",
            "normal-normal",
            "--approximator",
            "perturbed",
            "--set",
            "approximator.sd_scale=-1",
        ],
        vec!["power", "--model", "normal-normal", "--alpha", "1.5"],
        vec!["sbc", "--model", "nope", "--approximator", "exact"],
    ] {
        let out = simflow(tmp.path(), &args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn abc_budget_exhaustion_leaves_a_partial_report() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("k.csv"), "value\n3\n").unwrap();
    let out = simflow(
        tmp.path(),
        &[
            "abc",
            "--model",
            "beta-binomial",
            "--data",
            "k.csv",
            "--M",
            "100",
            "--set",
            "approximator.max_proposals=50",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    let r = report(&tmp.path().join("o"));
    assert_eq!(r["status"], "error");
    assert_eq!(r["error"]["kind"], "budget");
    let rate = r["results"]["abc"]["acceptance_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));
}

#[test]
fn seed_comes_from_the_environment_when_nothing_else_sets_it() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_simflow"))
        .args([
            "sbc",
            "--model",
            "normal-normal",
            "--approximator",
            "exact",
            "--dry-run",
        ])
        .env("SIMFLOW_SEED", "1234")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let plan = String::from_utf8_lossy(&out.stdout);
    assert!(plan.contains("1234") && plan.contains("env"), "{plan}");
    assert!(!tmp.path().join("simflow-out").exists());
}

#[test]
fn report_round_trips_and_rerenders_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let data = (0..80)
        .map(|i| format!("{},{}\n", 1.0 + (i as f64).sqrt(), i / 40))
        .collect::<String>();
    std::fs::write(tmp.path().join("g.csv"), format!("value,group\n{data}")).unwrap();
    let out = simflow(
        tmp.path(),
        &[
            "test",
            "--model",
            "lognormal-two-group",
            "--data",
            "g.csv",
            "--S",
            "500",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = tmp.path().join("o/report.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let parsed = RunReport::read(&path).unwrap();
    assert_eq!(strip_timing(&parsed.to_json()), strip_timing(&text));

    let out = simflow(tmp.path(), &["render", "--input", "o/report.json", "--out", "r"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(tmp.path().join("r/test_null.svg")).unwrap(),
        std::fs::read(tmp.path().join("o/test_null.svg")).unwrap()
    );
}

#[test]
fn config_file_drives_a_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("sweep.toml"),
        "[model]\nname = \"normal-normal\"\n[approximator]\nname = \"perturbed\"\n\
         [pipeline]\nsweep = \"sbc\"\nS = 100\nM = 19\nseed = 5\n\
         [grid]\n\"approximator.sd_scale\" = [0.5, 1.0, 2.0]\n",
    )
    .unwrap();
    let out = simflow(tmp.path(), &["sensitivity", "--config", "sweep.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&tmp.path().join("o"));
    assert_eq!(r["seed"]["source"], "config");
    assert_eq!(r["results"]["rows"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(tmp.path().join("o/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}
