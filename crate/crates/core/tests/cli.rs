use std::fs;
use std::path::Path;
use std::process::Command;

use translasso::cli::{evaluate_prediction, load_studies, run_method, write_task, MethodArg, MethodSettings};
use translasso::error::Error;
use translasso::sim::{gen_task, CoefConfig, SimScenario};

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn manifest(dir: &Path, entries: &[(&str, &str, &str)]) -> std::path::PathBuf {
    let items: Vec<String> = entries
        .iter()
        .map(|(role, id, path)| format!(r#"{{"role": "{role}", "id": "{id}", "path": "{path}"}}"#))
        .collect();
    let path = dir.join("manifest.json");
    fs::write(&path, format!("[{}]", items.join(", "))).unwrap();
    path
}

const PRIMARY: &str = "a,b,y\n1,2,3\n0.5,-1,0.25\n2,0,1\n-1,1,-2\n";

fn parse_error(e: Error) -> (String, usize, String) {
    match e {
        Error::Parse { path, line, message } => (path.display().to_string(), line, message),
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn primary_only_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.csv", PRIMARY);
    let m = manifest(dir.path(), &[("primary", "target", "p.csv")]);
    let loaded = load_studies(&m, false, false).unwrap();
    assert_eq!(loaded.task.k(), 0);
    assert_eq!(loaded.covariates, vec!["a", "b"]);
    assert_eq!(loaded.task.primary.y.to_vec(), vec![3.0, 0.25, 1.0, -2.0]);
    assert_eq!(loaded.task.primary.x[[1, 1]], -1.0);
    assert!(loaded.record.is_none());
    let standardized = load_studies(&m, true, true).unwrap();
    let col = standardized.task.primary.x.column(0);
    assert!(col.sum().abs() < 1e-12);
    assert!((col.dot(&col) - 4.0).abs() < 1e-12);
}

#[test]
fn simulated_task_round_trips_bitwise() {
    let sc = SimScenario {
        p: 25,
        n0: 30,
        nk: 20,
        k: 3,
        informative: 2,
        s: 5,
        seed: 8,
        ..Default::default()
    };
    let (task, _) = gen_task(&sc).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = write_task(&task, dir.path()).unwrap();
    let loaded = load_studies(&m, false, false).unwrap();
    assert_eq!(loaded.task, task);
}

#[test]
fn permuted_columns_name_the_first_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.csv", PRIMARY);
    write(dir.path(), "a.csv", "b,a,y\n1,2,3\n");
    let m = manifest(dir.path(), &[("primary", "target", "p.csv"), ("auxiliary", "other", "a.csv")]);
    let (path, line, message) = parse_error(load_studies(&m, false, false).unwrap_err());
    assert!(path.ends_with("a.csv"));
    assert_eq!(line, 1);
    assert!(message.contains("column 1 is `b`, expected `a`"), "{message}");
}

#[test]
fn malformed_files_report_location() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("a,b\n1,2\n", 1, "missing `y`"),
        ("a,b,y\n1,2,3\n1,x,3\n", 3, "non-numeric"),
        ("a,b,y\n", 2, "no data rows"),
        ("a,b,y\n1,2,3\n1,2\n", 3, ""),
    ];
    for (text, want_line, want_msg) in cases {
        write(dir.path(), "p.csv", text);
        let m = manifest(dir.path(), &[("primary", "target", "p.csv")]);
        let (path, line, message) = parse_error(load_studies(&m, false, false).unwrap_err());
        assert!(path.ends_with("p.csv"));
        assert_eq!(line, want_line, "{text:?}: {message}");
        assert!(message.contains(want_msg), "{message}");
    }
    write(dir.path(), "p.csv", "");
    let m = manifest(dir.path(), &[("primary", "target", "p.csv")]);
    assert!(load_studies(&m, false, false).unwrap_err().is_validation());
}

#[test]
fn manifest_needs_one_primary() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.csv", PRIMARY);
    let m = manifest(dir.path(), &[("auxiliary", "x", "p.csv")]);
    assert!(load_studies(&m, false, false).is_err());
    let m = manifest(dir.path(), &[("primary", "x", "p.csv"), ("primary", "y", "p.csv")]);
    assert!(load_studies(&m, false, false).is_err());
}

fn bundle(seed: u64, noise_sd: f64, coef_config: CoefConfig, p: usize) -> translasso::data::TaskData {
    let sc = SimScenario {
        p,
        k: 10,
        informative: 10,
        h: 2,
        coef_config,
        noise_sd,
        seed,
        ..Default::default()
    };
    gen_task(&sc).unwrap().0
}

#[test]
fn lasso_against_itself_has_unit_ratio() {
    let task = bundle(1, 1.0, CoefConfig::I, 100);
    let r = evaluate_prediction(&task, &[MethodArg::Lasso], 5, 3, &MethodSettings::default()).unwrap();
    assert_eq!(r.methods.len(), 1);
    assert_eq!(r.methods[0].ratio_to_lasso, 1.0);
    assert_eq!(r.methods[0].fold_errors.len(), 5);
    assert!(evaluate_prediction(&task, &[MethodArg::Lasso], 1, 3, &MethodSettings::default()).is_err());
    let small = task.with_primary(task.primary.select_rows(&[0, 1, 2]));
    assert!(evaluate_prediction(&small, &[MethodArg::Lasso], 5, 3, &MethodSettings::default()).is_err());
}

#[test]
fn transfer_helps_on_noise_free_bundle() {
    let task = bundle(2, 0.0, CoefConfig::I, 200);
    let r = evaluate_prediction(&task, &[MethodArg::TransLasso], 5, 4, &MethodSettings::default()).unwrap();
    assert!(r.get(MethodArg::TransLasso).unwrap().ratio_to_lasso < 1.0);
}

#[test]
fn transfer_gain_on_synthetic_proxy() {
    let mut ratios = Vec::new();
    for draw in 0..20 {
        let task = bundle(100 + draw, 1.0, CoefConfig::Ii, 500);
        let r = evaluate_prediction(&task, &[MethodArg::TransLasso], 5, draw, &MethodSettings::default()).unwrap();
        ratios.push(r.get(MethodArg::TransLasso).unwrap().ratio_to_lasso);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(mean <= 0.95, "mean ratio {mean}");
}

#[test]
fn oracle_methods_need_a_set() {
    let task = bundle(3, 1.0, CoefConfig::I, 50);
    let settings = MethodSettings::default();
    assert!(run_method(&task, MethodArg::Oracle, &settings).is_err());
    let with_set = MethodSettings {
        informative: Some(vec![0, 1]),
        ..settings
    };
    let out = run_method(&task, MethodArg::OracleL0, &with_set).unwrap();
    assert!(out.lambdas.contains_key("lambda_beta"));
    assert_eq!(out.coef.len(), 50);
}

fn translasso() -> Command {
    Command::new(env!("CARGO_BIN_EXE_translasso"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.csv", "a,b\n1,2\n");
    let m = manifest(dir.path(), &[("primary", "target", "p.csv")]);
    let out = dir.path().join("out");
    let status = translasso()
        .args(["--mode", "fit", "--method", "lasso", "--manifest"])
        .arg(&m)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("p.csv"));

    write(dir.path(), "p.csv", PRIMARY);
    let ok = translasso()
        .args(["--mode", "fit", "--method", "lasso", "--manifest"])
        .arg(&m)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "lasso");
    assert!(report["lambdas"]["lambda"].as_f64().unwrap() > 0.0);
    assert!(fs::read_to_string(out.join("coefficients.csv")).unwrap().starts_with("covariate,coef,coef_raw\n"));

    let missing_set = translasso()
        .args(["--mode", "fit", "--method", "oracle", "--manifest"])
        .arg(&m)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(missing_set.status.code(), Some(2));
}

#[test]
fn fit_report_has_diagnostics() {
    let task = bundle(5, 1.0, CoefConfig::I, 60);
    let dir = tempfile::tempdir().unwrap();
    let m = write_task(&task, &dir.path().join("data")).unwrap();
    let out = dir.path().join("out");
    let run = translasso()
        .args(["--mode", "fit", "--method", "trans-lasso", "--informative", "aux1,2", "--manifest"])
        .arg(&m)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(report["informative"], serde_json::json!(["aux1", "aux2"]));
    let halves = report["diagnostics"].as_array().unwrap();
    assert_eq!(halves.len(), 2);
    assert_eq!(halves[0]["sparsity_index"].as_array().unwrap().len(), 10);
    assert_eq!(halves[0]["theta"].as_array().unwrap().len(), 11);
    assert!(report["intercept_raw"].is_number());
}

#[test]
fn simulate_honours_tuning() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    let sc = SimScenario {
        p: 60,
        k: 3,
        informative: 2,
        ..Default::default()
    };
    fs::write(&scenario, serde_json::to_string(&sc).unwrap()).unwrap();
    let sse = |tuning: &str| {
        let out = dir.path().join(tuning);
        let run = translasso()
            .args(["--mode", "simulate", "--reps", "2", "--methods", "oracle", "--tuning", tuning, "--scenario"])
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
        fs::read_to_string(out.join("sse.csv")).unwrap()
    };
    assert_ne!(sse("auto"), sse("cv"));
}
