use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcf")).args(args).env("TCF_LOG", "error").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, classes: &str, videos: &str) -> String {
    let out = tcf(&["synth", "--classes", classes, "--videos", videos, "--seed", "3", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    dir.join("manifest.tsv").to_string_lossy().into_owned()
}

#[test]
fn help_documents_defaults() {
    let encode = stdout(&tcf(&["encode", "--help"]));
    for default in ["[default: 64]", "[default: 16]", "[default: 6]", "[default: 1]", "[default: group]"] {
        assert!(encode.contains(default), "encode --help lacks {default}:\n{encode}");
    }
    let train = stdout(&tcf(&["train", "--help"]));
    assert!(train.contains("[default: 1000]") && train.contains("[default: 64]"), "{train}");
    let eval = stdout(&tcf(&["eval", "--help"]));
    for default in ["[default: 100]", "[default: 1000]", "[default: 7]", "[default: 16]", "[default: 6]"] {
        assert!(eval.contains(default), "eval --help lacks {default}:\n{eval}");
    }
    let sweep = stdout(&tcf(&["sweep", "--help"]));
    assert!(sweep.contains("[default: 100]") && sweep.contains("[default: 1000]"), "{sweep}");
    assert!(tcf(&["--help"]).status.success());
}

#[test]
fn usage_errors() {
    let out = tcf(&["encode", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));
    assert_eq!(tcf(&["nonsense"]).status.code(), Some(1));
    assert_eq!(tcf(&[]).status.code(), Some(1));
}

#[test]
fn encode_rejects_non_dividing_lambda() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "2", "1");
    let input = dir.path().join("class0_0000.tsf");
    let desc = dir.path().join("d.json");
    let out = tcf(&["encode", "--input", input.to_str().unwrap(), "--lambda", "5", "--out", desc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let message = stderr(&out);
    assert!(message.contains("n = 64") && message.contains("lambda = 5"), "{message}");
    assert!(!desc.exists());
}

#[test]
fn inspect_reports_shape_and_truncation() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "2", "1");
    let file = dir.path().join("class1_0000.tsf");
    let out = tcf(&["inspect", "--input", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("n      : 64"));

    let bytes = fs::read(&file).unwrap();
    let cut = dir.path().join("cut.tsf");
    fs::write(&cut, &bytes[..bytes.len() - 10]).unwrap();
    let out = tcf(&["inspect", "--input", cut.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("size mismatch"), "{}", stderr(&out));
}

#[test]
fn eval_report_has_one_entry_per_repetition_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "3", "6");
    let run = |report: &Path| {
        let args = [
            "eval",
            "--manifest",
            &manifest,
            "--reps",
            "100",
            "--seed",
            "7",
            "--lambda",
            "8",
            "--windows",
            "2",
            "--report",
            report.to_str().unwrap(),
        ];
        let out = tcf(&args);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stdout(&out).contains("mean accuracy"));
        fs::read(report).unwrap()
    };
    let first = run(&dir.path().join("r1.json"));
    let second = run(&dir.path().join("r2.json"));
    assert_eq!(first, second);
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["per_rep_accuracy"].as_array().unwrap().len(), 100);
    assert_eq!(report["config"]["master_seed"], 7);
}

#[test]
fn synth_encode_train_eval_sweep_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("corpus"), "2", "4");
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let out = tcf(&["encode", "--input", &path("corpus"), "--lambda", "8", "--windows", "2", "--out", &path("d.json")]);
    assert!(out.status.success(), "{}", stderr(&out));
    let descriptors: serde_json::Value = serde_json::from_str(&fs::read_to_string(path("d.json")).unwrap()).unwrap();
    assert_eq!(descriptors["format"], "tcf-descriptors");
    let items = descriptors["items"].as_array().unwrap();
    assert_eq!(items.len(), 8);
    assert_eq!(items[0]["values"].as_array().unwrap().len(), 64 * 6 + 2 * 28);

    let out = tcf(&["train", "--manifest", &manifest, "--lambda", "8", "--windows", "2", "--out", &path("m.json")]);
    assert!(out.status.success(), "{}", stderr(&out));
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(path("m.json")).unwrap()).unwrap();
    assert_eq!(model["format"], "tcf-linear-ovr");
    assert_eq!(model["dimension"], 64 * 6 + 2 * 28);
    assert_eq!(model["layout"]["groups"], 8);

    let out = tcf(&["eval", "--manifest", &manifest, "--features", "mean", "--reps", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));

    let out = tcf(&[
        "sweep",
        "--manifest",
        &manifest,
        "--lambda-list",
        "8,5",
        "--l-list",
        "1",
        "--gamma-list",
        "0,1",
        "--reps",
        "2",
        "--out",
        &path("s.tsv"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(path("s.tsv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].ends_with("ok") && lines[3].contains("failed"), "{table}");
}

#[test]
fn missing_manifest_is_a_data_error() {
    let out = tcf(&["eval", "--manifest", "/nonexistent/manifest.tsv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/manifest.tsv"));
}
