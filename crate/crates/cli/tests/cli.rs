use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn barohar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barohar"))
        .args(args)
        .env_remove("BAROHAR_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = barohar(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn synth(dir: &Path, participants: &str) {
    ok(&["synth", "--participants", participants, "--minutes", "4", "--seed", "7", "--out", dir.to_str().unwrap()]);
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn synth_writes_files_and_manifest_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, "3");
    synth(&b, "3");
    assert_eq!(csv_files(&a), ["P01.csv", "P02.csv", "P03.csv"]);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["participants"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["seed"], 7);
    for name in csv_files(&a).iter().chain([&"manifest.json".to_string()]) {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn zero_participants_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = barohar(&["synth", "--participants", "0", "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn extract_depends_on_window_length() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "1");
    let f4 = tmp.path().join("f4");
    let f8 = tmp.path().join("f8");
    ok(&["extract", "--data", data.to_str().unwrap(), "--window", "4", "--out", f4.to_str().unwrap()]);
    ok(&["extract", "--data", data.to_str().unwrap(), "--window", "8", "--out", f8.to_str().unwrap()]);
    let a = fs::read_to_string(f4.join("features.csv")).unwrap();
    let b = fs::read_to_string(f8.join("features.csv")).unwrap();
    assert_ne!(a, b);
    let samples = fs::read_to_string(data.join("P01.csv")).unwrap().lines().count() - 1;
    let seconds = samples as f64 / 50.0;
    let rows8 = b.lines().count() - 1;
    assert!(rows8 > 0 && rows8 as f64 <= seconds / 8.0, "{rows8} rows for {seconds} s");
    assert!(a.lines().count() > b.lines().count());
    assert!(b.lines().next().unwrap().contains("slope_pressure"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "1");
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "window = 4\nseed = 9\n").unwrap();
    let out = tmp.path().join("out");
    let run = |extra: &[&str]| {
        let mut args = vec!["--config", cfg.to_str().unwrap(), "extract", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        String::from_utf8(ok(&args).stderr).unwrap()
    };
    let from_file = run(&[]);
    assert!(from_file.contains("# window = 4\n"));
    assert!(from_file.contains("# seed = 9\n"));
    let flagged = run(&["--window", "8"]);
    assert!(flagged.contains("# window = 8\n"));
    assert!(flagged.contains("# seed = 9\n"));

    fs::write(&cfg, "windw = 4\n").unwrap();
    assert!(!barohar(&["--config", cfg.to_str().unwrap(), "extract", "--data", data.to_str().unwrap()]).status.success());
}

#[test]
fn missing_data_directory_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = barohar(&["extract", "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no data directory"));
}

#[test]
fn train_importance_loso_report() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "3");
    let cfg = tmp.path().join("small.cfg");
    fs::write(&cfg, format!("data = {}\ndepths = 8\nestimators = 10,20\nfolds = 3\n", data.display())).unwrap();
    let cfg = cfg.to_str().unwrap();

    let model_dir = tmp.path().join("model");
    ok(&["--config", cfg, "train", "--out", model_dir.to_str().unwrap()]);
    let model = model_dir.join("model.txt");
    assert!(fs::read_to_string(&model).unwrap().starts_with("barohar-forest 1"));
    let imp = ok(&["importance", "--model", model.to_str().unwrap(), "--out", model_dir.to_str().unwrap()]);
    assert_eq!(String::from_utf8(imp.stdout).unwrap().lines().count(), 26);
    assert!(model_dir.join("importance.svg").exists());

    let fixed = tmp.path().join("fixed");
    ok(&["--config", cfg, "train", "--depth", "none", "--trees", "5", "--out", fixed.to_str().unwrap()]);
    assert!(fs::read_to_string(fixed.join("model.txt")).unwrap().contains("n_estimators 5"));

    let run = |name: &str, extra: &[&str]| {
        let dir = tmp.path().join(name);
        let mut args = vec!["--config", cfg, "loso", "--out", dir.to_str().unwrap()];
        args.extend_from_slice(extra);
        ok(&args);
        dir
    };
    let full = run("full", &[]);
    let again = run("again", &[]);
    let imu = run("imu", &["--imu-only"]);
    for f in ["summary.json", "confusion.csv", "importance.csv", "table.txt", "importance.svg", "confusion.svg"] {
        assert_eq!(fs::read(full.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
    // The saved configuration differs only in the output directory.
    let without_out = |dir: &Path| -> Vec<String> {
        fs::read_to_string(dir.join("config.txt")).unwrap().lines().filter(|l| !l.starts_with("out =")).map(String::from).collect()
    };
    assert_eq!(without_out(&full), without_out(&again));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(full.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["folds"].as_array().unwrap().len(), 3);
    let imu_summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(imu.join("summary.json")).unwrap()).unwrap();
    assert_eq!(imu_summary["feature_names"].as_array().unwrap().len(), 20);
    assert_eq!(imu_summary["feature_set"], "imu-only");

    let confusion = fs::read_to_string(full.join("confusion.csv")).unwrap();
    assert!(confusion.starts_with("true\\predicted,Null,Lift Up,Lift Down,Stairs Up,Stairs Down"));

    let table_dir = tmp.path().join("table");
    let out = ok(&[
        "report",
        full.join("summary.json").to_str().unwrap(),
        imu.join("summary.json").to_str().unwrap(),
        "--out",
        table_dir.to_str().unwrap(),
    ]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("8s with pressure") && table.contains("8s IMU only"));
    assert!(table.contains("F1 macro"));
    assert_eq!(fs::read_to_string(table_dir.join("table.txt")).unwrap(), table);
}
