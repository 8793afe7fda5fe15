mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use common::{code, run_cli};
use seizurekit::edf::{write_edf, ChannelMeta, Recording};

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let o = run_cli(args, cwd);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Config for a small synthetic cohort so end-to-end runs stay quick.
fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("small.toml");
    fs::write(
        &p,
        r#"
seed = 3
[synth]
n_patients = 8
epochs_per_patient = 150
n_channels = 4
[model.rf]
n_trees = 10
[model.lstm]
hidden_dim = 6
epochs = 3
"#,
    )
    .unwrap();
    p
}

/// One 60 s recording: 2 channels at 32 Hz in 1 s records.
fn sixty_second_edf() -> Vec<u8> {
    let channels: Vec<ChannelMeta> = (0..2)
        .map(|i| ChannelMeta {
            label: format!("C{i}"),
            transducer: String::new(),
            physical_dimension: "uV".into(),
            physical_min: -500.0,
            physical_max: 500.0,
            digital_min: -32768,
            digital_max: 32767,
            prefiltering: String::new(),
            samples_per_record: 32,
        })
        .collect();
    let signals = (0..2)
        .map(|c| (0..60 * 32).map(|k| 100.0 * ((k as f64) * 0.3 + c as f64).sin()).collect())
        .collect();
    write_edf(&Recording {
        patient_id: "X".into(),
        recording_id: String::new(),
        start_datetime: NaiveDate::from_ymd_opt(2001, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
        record_duration_s: 1.0,
        num_records: 60,
        channels,
        signals,
    })
    .unwrap()
}

fn edf_dir(root: &Path) -> PathBuf {
    let d = root.join("edf");
    fs::create_dir_all(&d).unwrap();
    fs::write(d.join("pt01_01.edf"), sixty_second_edf()).unwrap();
    fs::write(
        d.join("pt01-summary.txt"),
        "File Name: pt01_01.edf\nNumber of Seizures in File: 1\nSeizure Start Time: 10 seconds\nSeizure End Time: 20 seconds\n\n\
         File Name: pt01_99.edf\nNumber of Seizures in File: 1\nSeizure 1 Start Time: 5 seconds\nSeizure 1 End Time: 9 seconds\n",
    )
    .unwrap();
    d
}

#[test]
fn usage_errors_exit_1() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_cli(&["frobnicate"], t.path())), 1);
    assert_eq!(code(&run_cli(&["train", "--bogus"], t.path())), 1);
    assert_eq!(code(&run_cli(&["--help"], t.path())), 0);
    // No data source, two data sources, unknown model, missing config.
    assert_eq!(code(&run_cli(&["train", "--out", "o"], t.path())), 1);
    assert_eq!(code(&run_cli(&["train", "--synthetic", "--features", "x.csv", "--out", "o"], t.path())), 1);
    assert_eq!(code(&run_cli(&["train", "--synthetic", "--model", "xgboost", "--out", "o"], t.path())), 1);
    assert_eq!(code(&run_cli(&["--config", "missing.toml", "synth"], t.path())), 1);
    fs::write(t.path().join("bad.toml"), "colour = 3\n").unwrap();
    assert_eq!(code(&run_cli(&["--config", "bad.toml", "synth"], t.path())), 1);
}

#[test]
fn synth_defaults_and_determinism() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("s");
    ok(&["synth", "--seed", "7", "--out", out.to_str().unwrap()], t.path());
    let first = read_dir_bytes(&out);
    ok(&["synth", "--seed", "7", "--out", out.to_str().unwrap()], t.path());
    assert_eq!(first, read_dir_bytes(&out));

    let csv = String::from_utf8(first["features.csv"].clone()).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..4], ["patient", "file", "start_s", "label"]);
    assert_eq!(header.len() - 4, 92);
    assert_eq!(lines.count(), 23 * 1800);
    assert!(!csv.contains('\r'));
    let m = json(out.join("manifest.json"));
    assert_eq!(m["seed"], 7);
    assert_eq!(m["spec_version"], "1.0");
    assert_eq!(m["config"]["synth"]["seed"], 7);
}

#[test]
fn synth_prevalence_flag() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("s");
    ok(&["synth", "--prevalence", "0.5", "--out", out.to_str().unwrap()], t.path());
    let csv = fs::read_to_string(out.join("features.csv")).unwrap();
    let labels: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    let frac = labels.iter().filter(|&&l| l == "1").count() as f64 / labels.len() as f64;
    assert!((frac - 0.5).abs() <= 0.02, "{frac}");
}

#[test]
fn ingest_and_featurize_one_file() {
    let t = tempfile::tempdir().unwrap();
    let dir = edf_dir(t.path());
    let out = t.path().join("o");
    let demo = t.path().join("demo.csv");
    fs::write(&demo, "patient,age,gender\npt01,11,f\npt02,22,M\n").unwrap();
    ok(
        &["ingest", "--edf-dir", dir.to_str().unwrap(), "--demographics", demo.to_str().unwrap(), "--out", out.to_str().unwrap()],
        t.path(),
    );
    let summary = fs::read_to_string(out.join("ingest_summary.csv")).unwrap();
    assert_eq!(summary.lines().nth(1).unwrap(), "pt01_01.edf,pt01,30,5,1,");
    let store = json(out.join("store.json"));
    let warnings = store["warnings"].as_array().unwrap();
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].as_str().unwrap().contains("pt01_99.edf"));
    assert_eq!(
        fs::read_to_string(out.join("demographics.csv")).unwrap(),
        "category,value,patients\ngender,F,1\nage,10-14,1\n"
    );

    ok(&["featurize", "--out", out.to_str().unwrap()], t.path());
    let csv = fs::read_to_string(out.join("features.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 30);
    assert_eq!(rows.iter().filter(|r| r.split(',').nth(3) == Some("1")).count(), 5);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 4 + 2 * 4);

    ok(&["featurize", "--pooled", "--out", out.to_str().unwrap()], t.path());
    let csv = fs::read_to_string(out.join("features.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "patient,file,start_s,label,f0,f1,f2,f3");
}

#[test]
fn ingest_failures() {
    let t = tempfile::tempdir().unwrap();
    let empty = t.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let o = run_cli(&["ingest", "--edf-dir", empty.to_str().unwrap(), "--out", "o"], t.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no EDF files found"));

    let broken = t.path().join("broken");
    fs::create_dir_all(&broken).unwrap();
    fs::write(broken.join("a_1.edf"), b"not an edf").unwrap();
    assert_eq!(code(&run_cli(&["ingest", "--edf-dir", broken.to_str().unwrap(), "--out", "o"], t.path())), 2);

    // One bad file among good ones is recorded, not fatal.
    fs::write(broken.join("b_1.edf"), sixty_second_edf()).unwrap();
    ok(&["ingest", "--edf-dir", broken.to_str().unwrap(), "--out", "o"], t.path());
    let store = json(t.path().join("o/store.json"));
    assert!(store["files"][0]["error"].is_string());
    assert!(store["files"][1].get("error").is_none());
}

#[test]
fn prediction_task_excludes_ictal_epochs() {
    let t = tempfile::tempdir().unwrap();
    let dir = edf_dir(t.path());
    let out = t.path().join("o");
    ok(
        &["ingest", "--edf-dir", dir.to_str().unwrap(), "--task", "prediction", "--horizon", "6", "--out", out.to_str().unwrap()],
        t.path(),
    );
    let summary = fs::read_to_string(out.join("ingest_summary.csv")).unwrap();
    // Ictal [10, 20) drops 5 epochs; preictal [4, 10) overlaps epochs 4, 6 and 8.
    assert_eq!(summary.lines().nth(1).unwrap(), "pt01_01.edf,pt01,25,3,1,");
}

#[test]
fn dummy_model_reproduces_accuracy_pathology() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("o");
    let o = out.to_str().unwrap();
    ok(&["train", "--synthetic", "--model", "majority", "--out", o], t.path());
    ok(&["eval", "--synthetic", "--model-file", out.join("model.json").to_str().unwrap(), "--out", o], t.path());
    let m = json(out.join("metrics.json"));
    let acc = m["accuracy"].as_f64().unwrap();
    assert!((acc - 0.94).abs() <= 0.01, "{acc}");
    assert_eq!(m["recall"].as_f64().unwrap(), 0.0);
    assert_eq!(m["undefined"]["precision"], true);
    assert!(fs::read_to_string(out.join("roc.csv")).unwrap().starts_with("fpr,tpr\n"));
}

#[test]
fn train_eval_predict_are_reproducible() {
    let t = tempfile::tempdir().unwrap();
    let cfg = small_config(t.path());
    let c = cfg.to_str().unwrap();
    let out = t.path().join("o");
    let o = out.to_str().unwrap();
    let run = || {
        ok(&["--config", c, "train", "--synthetic", "--model", "rf", "--out", o], t.path());
        let model = out.join("model.json");
        ok(&["--config", c, "eval", "--synthetic", "--model-file", model.to_str().unwrap(), "--out", o], t.path());
        ok(&["--config", c, "predict", "--synthetic", "--model-file", model.to_str().unwrap(), "--out", o], t.path());
        read_dir_bytes(&out)
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    for f in ["model.json", "train_report.json", "metrics.json", "roc.csv", "predictions.csv", "manifest.json"] {
        assert!(a.contains_key(f), "{f} missing");
    }
    let preds = String::from_utf8(a["predictions.csv"].clone()).unwrap();
    assert_eq!(preds.lines().count(), 1 + 8 * 150);
    let model = json(out.join("model.json"));
    assert_eq!(model["model_type"], "rf");
    assert_eq!(model["spec_version"], "1.0");
    let split = &model["pipeline"]["split"];
    assert_eq!(split["train_patients"].as_array().unwrap().len(), 4);
    assert_eq!(split["test_patients"].as_array().unwrap().len(), 2);
    let manifest = json(out.join("manifest.json"));
    assert_eq!(manifest["command"], "predict");
    assert_eq!(manifest["inputs"][0]["path"], out.join("model.json").to_str().unwrap());
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn leaky_eval_needs_the_flag() {
    let t = tempfile::tempdir().unwrap();
    let cfg = small_config(t.path());
    let c = cfg.to_str().unwrap();
    let out = t.path().join("o");
    let o = out.to_str().unwrap();
    ok(&["--config", c, "train", "--synthetic", "--model", "logreg", "--out", o], t.path());
    let model = json(out.join("model.json"));
    let train_patient = model["pipeline"]["train_patients"][0].as_str().unwrap().to_string();
    let mf = out.join("model.json");
    let args = ["--config", c, "eval", "--synthetic", "--model-file", mf.to_str().unwrap(), "--patients", &train_patient, "--out", o];
    assert_eq!(code(&run_cli(&args, t.path())), 3);
    let mut leaky = args.to_vec();
    leaky.push("--allow-leaky-split");
    ok(&leaky, t.path());
}

#[test]
fn lstm_through_the_cli() {
    let t = tempfile::tempdir().unwrap();
    let cfg = small_config(t.path());
    let c = cfg.to_str().unwrap();
    let out = t.path().join("o");
    let o = out.to_str().unwrap();
    ok(&["--config", c, "train", "--synthetic", "--model", "lstm", "--out", o], t.path());
    let report = json(out.join("train_report.json"));
    assert_eq!(report["history"].as_array().unwrap().len(), 4);
    let model = json(out.join("model.json"));
    assert_eq!(model["pipeline"]["sequence_len"], 10);
    let mf = out.join("model.json");
    ok(&["--config", c, "eval", "--synthetic", "--model-file", mf.to_str().unwrap(), "--out", o], t.path());
    ok(&["--config", c, "predict", "--synthetic", "--model-file", mf.to_str().unwrap(), "--out", o], t.path());
    // One window per epoch from the tenth onward in each file.
    let preds = fs::read_to_string(out.join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 1 + 8 * (150 - 9));
    ok(&["--config", c, "cv", "--synthetic", "--model", "lstm", "--folds", "4", "--out", o], t.path());
    assert!(fs::read_to_string(out.join("cv_summary.txt")).unwrap().starts_with("4-fold cross-validation\n"));
}

#[test]
fn cv_writes_fold_reports() {
    let t = tempfile::tempdir().unwrap();
    let cfg = small_config(t.path());
    let c = cfg.to_str().unwrap();
    let out = t.path().join("o");
    let stdout = ok(&["--config", c, "cv", "--synthetic", "--model", "knn", "--folds", "4", "--out", out.to_str().unwrap()], t.path());
    assert!(stdout.contains("mean accuracy of "));
    let files = read_dir_bytes(&out);
    for i in 0..4 {
        assert!(files.contains_key(&format!("fold_{i}.json")));
    }
    let summary = json(out.join("cv_summary.json"));
    assert_eq!(summary["folds"], 4);
    assert_eq!(String::from_utf8(files["cv_folds.csv"].clone()).unwrap().lines().count(), 5);
}
