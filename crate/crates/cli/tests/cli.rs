use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn texmine(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texmine"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path) {
    let o = texmine(
        &["synth", "--out", ".", "--size", "32", "--train", "12", "--test", "4", "--seed", "11"],
        dir,
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

fn train(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["train", "--manifest", "train.csv", "--model", "model.json", "--out", "prune.txt"];
    args.extend_from_slice(extra);
    texmine(&args, dir)
}

#[test]
fn extract_rows_failures_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    fs::write(
        d.join("three.csv"),
        "image_path,class_label,keywords\ntest/normal_000.pgm,normal,\ntest/benign_000.pgm,benign,benign\ntest/malign_000.pgm,malign,malign\n",
    )
    .unwrap();
    let o = texmine(&["extract", "--manifest", "three.csv", "--out", "a.csv"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(a.lines().count(), 4);
    assert_eq!(a.lines().next().unwrap().split(',').count(), 41);

    let o = texmine(&["extract", "--manifest", "three.csv", "--out", "b.csv", "--jobs", "1"], d);
    assert!(o.status.success());
    assert_eq!(fs::read(d.join("b.csv")).unwrap(), a.as_bytes());

    fs::write(
        d.join("broken.csv"),
        "image_path,class_label,keywords\ntest/normal_000.pgm,normal,\nmissing.pgm,benign,\n",
    )
    .unwrap();
    let o = texmine(&["extract", "--manifest", "broken.csv", "--out", "c.csv"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.pgm"));
    assert_eq!(fs::read_to_string(d.join("c.csv")).unwrap().lines().count(), 2);
}

#[test]
fn train_classify_eval_round() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    let o = train(d, &["--rules-out", "rules.txt", "--transactions-out", "tx.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model = fs::read_to_string(d.join("model.json")).unwrap();
    assert!(model.contains("\"malign\""));
    assert!(fs::read_to_string(d.join("rules.txt")).unwrap().contains(" => kw_"));
    assert!(fs::read_to_string(d.join("tx.csv")).unwrap().starts_with("image_id,items\n"));
    assert!(fs::read_to_string(d.join("prune.txt")).unwrap().starts_with("# kept"));

    let o = texmine(&["classify", "--model", "model.json", "train/malign_000.pgm"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let row = out.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(1), Some("malign"), "{out}");

    let o = texmine(&["eval", "--model", "model.json", "--manifest", "test.csv", "--out", "eval"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["report.txt", "metrics.csv", "roc.csv", "predictions.csv"] {
        assert!(d.join("eval").join(f).exists(), "{f}");
    }
    let roc = fs::read_to_string(d.join("eval/roc.csv")).unwrap();
    assert!(roc.starts_with("threshold,tpr,fpr\n"));

    // model settings win over conflicting flags
    let o = texmine(
        &["eval", "--model", "model.json", "--manifest", "test.csv", "--out", "eval2", "--gray-levels", "8"],
        d,
    );
    assert!(o.status.success());
    assert!(stderr(&o).contains("using the model's settings"));
    assert_eq!(
        fs::read(d.join("eval/report.txt")).unwrap(),
        fs::read(d.join("eval2/report.txt")).unwrap()
    );

    // re-training gives a byte-identical model
    let first = fs::read(d.join("model.json")).unwrap();
    assert!(train(d, &[]).status.success());
    assert_eq!(fs::read(d.join("model.json")).unwrap(), first);
}

#[test]
fn training_errors_and_empty_models() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);

    let o = train(d, &["--min-support", "1.0"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("no rules survived"));
    let o = texmine(&["classify", "--model", "model.json", "test/malign_001.pgm"], d);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().nth(1).unwrap().contains(",normal,0.0000000000000000e0,"), "{out}");

    fs::write(d.join("one.csv"), "image_path,class_label,keywords\ntrain/normal_000.pgm,normal,\ntrain/normal_001.pgm,normal,\n").unwrap();
    let o = texmine(&["train", "--manifest", "one.csv", "--model", "x.json"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least two classes"));

    fs::write(d.join("gap.csv"), "image_path,class_label,keywords\ntrain/normal_000.pgm,normal,\nnope.pgm,malign,\n").unwrap();
    let o = texmine(&["train", "--manifest", "gap.csv", "--model", "y.json"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.pgm"));
    assert!(!d.join("y.json").exists());

    fs::write(d.join("bad.json"), "{ \"format_version\": 1, ").unwrap();
    let o = texmine(&["classify", "--model", "bad.json", "test/normal_000.pgm"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("model parse"));
}

#[test]
fn single_class_eval_skips_roc() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    assert!(train(d, &[]).status.success());
    fs::write(d.join("normals.csv"), "image_path,class_label,keywords\ntest/normal_000.pgm,normal,\ntest/normal_001.pgm,normal,\n").unwrap();
    let o = texmine(&["eval", "--model", "model.json", "--manifest", "normals.csv", "--out", "ev"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("ROC skipped"));
    assert!(!d.join("ev/roc.csv").exists());
    let report = fs::read_to_string(d.join("ev/report.txt")).unwrap();
    assert!(report.contains("specificity"));
    assert!(report.contains("sensitivity  undefined"));
}
