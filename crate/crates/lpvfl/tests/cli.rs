use std::fs;
use std::path::Path;

use lpvfl::cli::run_with;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("lpvfl").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_then_predict_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, pred) = (dir.path().join("sim"), dir.path().join("pred"));
    assert_eq!(run(&["simulate", "--seed", "3", "--out-dir", p(&sim)]).0, 0);
    for f in ["u.csv", "p.csv", "y.csv", "meta.json"] {
        assert!(sim.join(f).exists(), "{f}");
    }
    let (code, stdout) = run(&[
        "predict",
        "--seed",
        "3",
        "--data-dir",
        p(&sim),
        "--out-dir",
        p(&pred),
    ]);
    assert_eq!(code, 0);
    let summary: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(summary["status"], "ok");

    let report: Value =
        serde_json::from_slice(&fs::read(pred.join("prediction.json")).unwrap()).unwrap();
    assert!(report["prediction"]["max_abs_error"].as_f64().unwrap() < 1e-8);
    assert!(pred.join("y_r.csv").exists());
}

#[test]
fn query_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, first, second) = (
        dir.path().join("sim"),
        dir.path().join("a"),
        dir.path().join("b"),
    );
    assert_eq!(run(&["simulate", "--out-dir", p(&sim)]).0, 0);
    assert_eq!(
        run(&["predict", "--data-dir", p(&sim), "--out-dir", p(&first)]).0,
        0
    );
    let args = [
        "predict",
        "--data-dir",
        p(&sim),
        "--query-dir",
        p(&first),
        "--out-dir",
        p(&second),
    ];
    assert_eq!(run(&args).0, 0);
    assert_eq!(
        fs::read(first.join("y_r.csv")).unwrap(),
        fs::read(second.join("y_r.csv")).unwrap()
    );
}

#[test]
fn zero_input_data_is_ambiguous() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"input_box": [0.0, 0.0]}"#).unwrap();
    let (sim, pred) = (dir.path().join("sim"), dir.path().join("pred"));
    assert_eq!(
        run(&["simulate", "--config", p(&cfg), "--out-dir", p(&sim)]).0,
        0
    );
    let (code, stdout) = run(&["predict", "--data-dir", p(&sim), "--out-dir", p(&pred)]);
    assert_eq!(code, 4);
    assert!(stdout.contains("ambiguous"));
}

#[test]
fn inconsistent_initial_window_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, q, pred) = (
        dir.path().join("sim"),
        dir.path().join("q"),
        dir.path().join("pred"),
    );
    assert_eq!(run(&["simulate", "--out-dir", p(&sim)]).0, 0);
    assert_eq!(
        run(&["predict", "--data-dir", p(&sim), "--out-dir", p(&q)]).0,
        0
    );

    let y_ini = q.join("y_ini.csv");
    let text = fs::read_to_string(&y_ini).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let (t, v) = lines[2].split_once(',').unwrap();
    lines[2] = format!("{t},{}", v.parse::<f64>().unwrap() + 1.0);
    fs::write(&y_ini, lines.join("\n") + "\n").unwrap();

    let args = [
        "predict",
        "--data-dir",
        p(&sim),
        "--query-dir",
        p(&q),
        "--out-dir",
        p(&pred),
    ];
    assert_eq!(run(&args).0, 5);
    let report: Value =
        serde_json::from_slice(&fs::read(pred.join("prediction.json")).unwrap()).unwrap();
    assert_eq!(report["prediction"]["verdict"], "infeasible");
}

#[test]
fn mismatched_data_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, pred) = (dir.path().join("sim"), dir.path().join("pred"));
    assert_eq!(run(&["simulate", "--out-dir", p(&sim)]).0, 0);
    let y = sim.join("y.csv");
    let text = fs::read_to_string(&y).unwrap();
    let kept: Vec<&str> = text.lines().collect();
    fs::write(&y, kept[..kept.len() - 1].join("\n") + "\n").unwrap();
    assert_eq!(
        run(&["predict", "--data-dir", p(&sim), "--out-dir", p(&pred)]).0,
        2
    );
    assert!(!pred.exists());
}

#[test]
fn bad_configuration_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"horizon": 3}"#).unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        run(&["simulate", "--config", p(&cfg), "--out-dir", p(&out)]).0,
        2
    );
    assert_eq!(run(&["simulate", "--T", "0", "--out-dir", p(&out)]).0, 2);
    assert_eq!(
        run(&[
            "predict",
            "--T-ini",
            "3",
            "--T-r",
            "7",
            "--L",
            "9",
            "--out-dir",
            p(&out)
        ])
        .0,
        2
    );
    assert!(!out.exists());
}

#[test]
fn check_reports_excitation_and_lag() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, out) = (dir.path().join("sim"), dir.path().join("chk"));
    assert_eq!(run(&["simulate", "--out-dir", p(&sim)]).0, 0);
    assert_eq!(
        run(&["check", "--data-dir", p(&sim), "--out-dir", p(&out)]).0,
        0
    );
    let report: Value = serde_json::from_slice(&fs::read(out.join("check.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["pe"], true);
    assert_eq!(report["report"]["lag"]["lag"], 2);
}
