use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfield")).args(args).output().expect("binary runs")
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Replace every leaf with its JSON type so the layout can be compared exactly.
fn shape(v: &Value) -> Value {
    match v {
        Value::Null => "null".into(),
        Value::Bool(_) => "bool".into(),
        Value::Number(_) => "number".into(),
        Value::String(_) => "string".into(),
        Value::Array(a) => Value::Array(a.iter().map(shape).collect()),
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), shape(v))).collect()),
    }
}

#[test]
fn summary_schema_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let r = qfield(&["run", "hydrogen_2p_decay", "--out-dir", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    let golden: Value = serde_json::from_str(include_str!("golden/hydrogen_summary_shape.json")).unwrap();
    assert_eq!(shape(&summary), golden);
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["scenario"], "hydrogen_2p_decay");
    assert_eq!(summary["units"], "si");
    assert_eq!(summary["passed"], true);
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for scenario in ["single_mode_superposition", "cherenkov_water"] {
        let mut runs = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{scenario}_{k}"));
            let r = qfield(&["--threads", "2", "run", scenario, "--out-dir", out.to_str().unwrap(), "--emit-plot-data"]);
            assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
            runs.push(read_dir(&out));
        }
        assert!(runs[0].contains_key("plot_data.csv"));
        assert_eq!(runs[0], runs[1], "{scenario}");
    }
    // field analyses on a reduced lattice
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("dipole_{k}"));
        let _ = qfield(&[
            "--threads",
            "2",
            "run",
            "dipole_causality",
            "--out-dir",
            out.to_str().unwrap(),
            "--override",
            "lattice.n_max=4",
            "--override",
            "grid.n=[5,5,5]",
            "--override",
            "analyses.1.compare_n_max=2",
            "--override",
            "analyses.3.points_per_axis=2",
        ]);
        runs.push(read_dir(&out));
    }
    assert!(runs[0].contains_key("summary.json") && runs[0].contains_key("fieldmap_t0.csv"));
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn malformed_scenarios_exit_two_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": "x", "analyses": [{"kind": "dipole", "angular_nodes": "many"}]}"#).unwrap();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, r#"{"name": "x", "analyses": ["#).unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", bad.to_str().unwrap(), "--out-dir", o],
        vec!["run", truncated.to_str().unwrap(), "--out-dir", o],
        vec!["run", "no_such_scenario", "--out-dir", o],
        vec!["run", "hydrogen_2p_decay", "--out-dir", o, "--override", "lattice.n_max=3"],
        vec!["run", "hydrogen_2p_decay", "--out-dir", o, "--override", "analyses.0.angular_nodes=1"],
        vec!["run", "hydrogen_2p_decay", "--out-dir", o, "--units", "imperial"],
        vec!["run", "cherenkov_water", "--out-dir", o, "--override", "analyses.0.speed=0.5"],
        vec!["frobnicate"],
        vec!["describe", "no_such_scenario"],
    ];
    for args in cases {
        let r = qfield(&args);
        assert_eq!(r.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
        assert!(!out.exists(), "{args:?} left outputs behind");
    }
}

#[test]
fn verdict_failure_exits_one_and_names_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let r = qfield(&[
        "run",
        "single_mode_superposition",
        "--out-dir",
        out.to_str().unwrap(),
        "--override",
        "analyses.0.ode_steps=5",
    ]);
    assert_eq!(r.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("FAIL single_mode/mean"), "{stdout}");
    assert!(stdout.contains(out.join("summary.json").to_str().unwrap()));
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], false);
}

#[test]
fn units_flag_overrides_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let r = qfield(&["run", "hydrogen_2p_decay", "--units", "natural", "--out-dir", out.to_str().unwrap()]);
    assert!(r.status.success());
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["units"], "natural");
    // rate in units of c / a_B
    let rate = summary["verdicts"][0]["detail"]["closed_form"].as_f64().unwrap();
    assert!((rate / ((2.0f64 / 3.0).powi(8) * 7.297_352_569_3e-3f64.powi(4)) - 1.0).abs() < 1e-12);
}

#[test]
fn list_and_describe() {
    let r = qfield(&["list-scenarios"]);
    assert!(r.status.success());
    let s = String::from_utf8_lossy(&r.stdout);
    for name in ["dipole_causality", "cherenkov_water", "single_mode_superposition", "thermal_variance"] {
        assert!(s.contains(name), "{s}");
    }
    let r = qfield(&["describe", "thermal_variance"]);
    assert!(r.status.success());
    let s = String::from_utf8_lossy(&r.stdout);
    assert!(s.contains("topic:") && s.contains("analyses: variance"), "{s}");
}
