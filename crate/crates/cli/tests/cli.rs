use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
seed = 4

[traffic]
n_vessels = 8
horizon_hours = 24.0

[samples.grid]
half_extent_cells = 4
cell_size_deg = 0.15
t_steps = 4

[sim.schedule]
days = 3.0
"#;

fn harbor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harbor")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = harbor(&["generate", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("--config"));
    let o = harbor(&["generate", "--config", p(&dir.path().join("nope.toml")), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(harbor(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn invalid_config_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = config(dir.path(), "a.toml", "sed = 3\n");
    let o = harbor(&["generate", "--config", p(&bad_key), "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let bad_value = config(dir.path(), "b.toml", "[traffic]\nweather_perturbation = 2.0\n");
    let o = harbor(&["generate", "--config", p(&bad_value), "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("weather_perturbation"));
}

#[test]
fn generate_is_rerun_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = harbor(&["generate", "--config", p(&cfg), "--out", p(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["ais.csv", "arrivals.csv", "voyages.json", "synth.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m = json(&a.join("manifest.json"));
    assert_eq!(m["artifacts"].as_array().unwrap().len(), 4);
    assert_eq!(m["seeds"], serde_json::json!([4]));
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    let c = harbor(&["generate", "--config", p(&cfg), "--seed", "5", "--out", p(&dir.path().join("c"))]);
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(std::fs::read(a.join("ais.csv")).unwrap(), std::fs::read(dir.path().join("c/ais.csv")).unwrap());
}

#[test]
fn fit_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let data = dir.path().join("data");
    assert_eq!(harbor(&["generate", "--config", p(&cfg), "--out", p(&data)]).status.code(), Some(0));
    let fit = dir.path().join("fit");
    let o = harbor(&["fit", "--config", p(&cfg), "--data", p(&data), "--out", p(&fit)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model = fit.join("model.json");
    let ev = dir.path().join("ev");
    let o = harbor(&["eval", "--config", p(&cfg), "--data", p(&data), "--model", p(&model), "--out", p(&ev), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = json(&ev.join("metrics.json"));
    assert_eq!(rows[0]["predictor_id"], "kinematic");
    assert_eq!(rows[0]["role"], "baseline");
    assert_eq!(rows[1]["predictor_id"], "ridge-grid");

    // a model fitted on another grid layout
    let other = config(dir.path(), "d.toml", &SMALL.replace("half_extent_cells = 4", "half_extent_cells = 3"));
    let o = harbor(&["eval", "--config", p(&other), "--data", p(&data), "--model", p(&model), "--out", p(&ev)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).to_lowercase().contains("shape"), "{}", stderr(&o));
}

#[test]
fn kinematic_is_exact_without_weather() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", &SMALL.replace("horizon_hours = 24.0", "horizon_hours = 24.0\nweather_perturbation = 0.0"));
    let data = dir.path().join("data");
    assert_eq!(harbor(&["generate", "--config", p(&cfg), "--out", p(&data)]).status.code(), Some(0));
    let ev = dir.path().join("ev");
    let o = harbor(&["eval", "--config", p(&cfg), "--data", p(&data), "--predictor", "kinematic", "--out", p(&ev), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = json(&ev.join("metrics.json"));
    assert_eq!(rows.as_array().unwrap().len(), 1);
    // within one 10-minute sampling interval
    assert!(rows[0]["rmse_min"].as_f64().unwrap() <= 10.0, "{rows}");
}

#[test]
fn unknown_predictor_lists_the_available_ones() {
    let dir = tempfile::tempdir().unwrap();
    let o = harbor(&["eval", "--data", p(dir.path()), "--predictor", "lstm", "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("kinematic") && e.contains("ridge-grid"), "{e}");
    let o = harbor(&["fit", "--data", p(dir.path()), "--predictor", "lstm", "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plan_build_validate_and_replan() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("plan");
    let o = harbor(&["plan", "build", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plan_path = out.join("plan.json");
    assert_eq!(harbor(&["plan", "validate", "--plan", p(&plan_path)]).status.code(), Some(0));

    let mut plan = json(&plan_path);
    let first = plan["assignments"][0].clone();
    let vessel = first["vessel"].as_str().unwrap().to_string();
    let eta = plan["eta_map"][&vessel].as_str().unwrap().to_string();
    let later = chrono::DateTime::parse_from_rfc3339(&eta).unwrap() + chrono::Duration::hours(5);
    let before = chrono::DateTime::parse_from_rfc3339(&eta).unwrap() - chrono::Duration::hours(1);
    let re = dir.path().join("re");
    let o = harbor(&[
        "plan", "replan", "--plan", p(&plan_path), "--vessel", &vessel, "--eta", &later.to_rfc3339(), "--now", &before.to_rfc3339(), "--out", p(&re),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&re.join("plan.json"))["plan_version"], 1);
    assert_eq!(harbor(&["plan", "validate", "--plan", p(&re.join("plan.json"))]).status.code(), Some(0));

    // start a vessel before its ETA
    let start = chrono::DateTime::parse_from_rfc3339(&eta).unwrap() - chrono::Duration::hours(2);
    plan["assignments"][0]["start"] = Value::String(start.to_rfc3339());
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, plan.to_string()).unwrap();
    let o = harbor(&["plan", "validate", "--plan", p(&broken)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("StartBeforeEta"), "{}", stdout(&o));
}

#[test]
fn simulate_writes_stable_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = harbor(&["simulate", "--config", p(&cfg), "--rate", "0.3", "--strategy", "with", "--out", p(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["report.json", "report.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
    let r = json(&a.join("report.json"));
    let thr = r["throughput_vans_per_crane_hour"].as_f64().unwrap();
    let secs = r["effective_seconds_per_van"].as_f64().unwrap();
    assert!((thr * secs / 3600.0 - 1.0).abs() < 1e-3);
    assert_eq!(r["strategy"], "with");
}

#[test]
fn sweep_has_one_row_per_rate_and_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("s");
    let o = harbor(&["sweep", "--config", p(&cfg), "--rates", "5..30:5", "--seeds", "2", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 12);
    assert!(text.lines().nth(1).unwrap().starts_with("0.05,without,2,"));
    let o = harbor(&["sweep", "--rates", "5..x", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = harbor(&["sweep", "--seeds", "0", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn revenue_report_has_fifteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = harbor(&["report", "revenue", "--without", "26.82", "--with", "27.67", "--cranes", "15", "--out", p(&out), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = json(&out.join("revenue.json"));
    assert_eq!(rows.as_array().unwrap().len(), 15);
    assert!((rows[13]["revenue"].as_f64().unwrap() - 7_297_080.0).abs() < 1.0);
    assert!(stdout(&o).contains("7297080.00"));
}

#[test]
fn punctuality_and_waiting_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("p");
    let o = harbor(&["report", "punctuality", "--config", p(&cfg), "--seeds", "3", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("mean reduction"));
    assert_eq!(std::fs::read_to_string(out.join("punctuality.csv")).unwrap().lines().count(), 3);

    let out = dir.path().join("w");
    let o = harbor(&["report", "waiting", "--config", p(&cfg), "--seeds", "2", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(out.join("waiting.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(out.join("waiting.csv").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn calibrate_writes_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", &SMALL.replace("days = 3.0", "days = 1.0"));
    let out = dir.path().join("cal");
    let o = harbor(&["calibrate", "--config", p(&cfg), "--seeds", "1", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let calibrated = out.join("calibrated.toml");
    let o = harbor(&["simulate", "--config", p(&calibrated), "--out", p(&dir.path().join("sim"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&out.join("calibration.json"))["candidates_evaluated"], 200);
}
