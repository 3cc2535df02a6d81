mod common;

use std::fs;

use common::{mias_fixture, p, run};
use masscad::features::read_feature_csv;
use masscad::{Label, MlpModel};

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(run(&["bogus"]), 1);
    assert_eq!(run(&[]), 1);
    assert_eq!(run(&["train"]), 1);
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn bad_flag_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("x.csv");
    assert_eq!(run(&["split", p(&f), "--out", "a", "--test-out", "b", "--train-fraction", "1.5"]), 1);
    assert_eq!(run(&["train", p(&f), "--out", "m", "--lr", "0"]), 1);
    assert_eq!(run(&["eval", p(&f), "--out", "e", "--threshold", "0"]), 1);
    assert_eq!(run(&["features", "--images", ".", "--annotations", "a", "--out", "o", "--mask", "oval"]), 1);
    assert_eq!(run(&["split", p(&f), "--out", "a", "--test-out", "b", "--stratified", "maybe"]), 1);
}

#[test]
fn missing_or_malformed_files_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(run(&["train", p(&missing), "--out", p(&dir.path().join("m"))]), 2);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,mean\nx,1\n").unwrap();
    assert_eq!(run(&["split", p(&bad), "--out", "a", "--test-out", "b"]), 2);
    let bad_model = dir.path().join("model.txt");
    fs::write(&bad_model, "MLP1\n7 5 1 0\n").unwrap();
    let feats = dir.path().join("f.csv");
    assert_eq!(run(&["synth", "--out", p(&feats), "--n-per-class", "3"]), 0);
    assert_eq!(
        run(&["predict", p(&feats), "--model", p(&bad_model), "--out", p(&dir.path().join("o"))]),
        2
    );
}

#[test]
fn features_on_mias_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (images, ann, labeled) = mias_fixture(dir.path(), 4);
    let out = dir.path().join("features.csv");
    let args = ["features", "--images", p(&images), "--annotations", p(&ann), "--out", p(&out)];
    assert_eq!(run(&args), 0);
    let recs = read_feature_csv(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(recs.len(), labeled);
    assert_eq!(recs[0].id, "mdb001");
    assert_eq!(recs[labeled - 1].id, "mdb001_2");
    assert_eq!(recs[0].label, Some(Label::Benign));
    assert_eq!(recs[1].label, Some(Label::Malignant));
    // smooth benign discs are far more uniform than noisy malignant ones
    assert!(recs[0].entropy < 2.5 && recs[1].entropy > 5.0, "{recs:?}");

    let first = fs::read(&out).unwrap();
    assert_eq!(run(&args), 0);
    assert_eq!(fs::read(&out).unwrap(), first);

    let square = dir.path().join("square.csv");
    let mut sq_args = args.to_vec();
    sq_args[6] = p(&square);
    sq_args.extend(["--mask", "square"]);
    assert_eq!(run(&sq_args), 0);
    assert_ne!(fs::read(&square).unwrap(), first);
}

#[test]
fn features_reports_missing_image() {
    let dir = tempfile::tempdir().unwrap();
    let (images, ann, _) = mias_fixture(dir.path(), 1);
    fs::remove_file(images.join("mdb002.pgm")).unwrap();
    let out = dir.path().join("f.csv");
    assert_eq!(
        run(&["features", "--images", p(&images), "--annotations", p(&ann), "--out", p(&out)]),
        2
    );
}

#[test]
fn full_pipeline_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);
    let steps: Vec<Vec<String>> = vec![
        vec!["synth", "--out", p(&d("s.csv"))],
        vec!["split", p(&d("s.csv")), "--out", p(&d("tr.csv")), "--test-out", p(&d("te.csv"))],
        vec!["train", p(&d("tr.csv")), "--out", p(&d("m.txt"))],
        vec!["predict", p(&d("te.csv")), "--model", p(&d("m.txt")), "--out", p(&d("p.csv"))],
        vec!["eval", p(&d("p.csv")), "--out", p(&d("e.csv"))],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    let outputs = ["s.csv", "tr.csv", "te.csv", "m.txt", "m.txt.report.csv", "p.csv", "e.csv"];

    let mut snapshots = Vec::new();
    for round in 0..2 {
        for step in &steps {
            let args: Vec<&str> = step.iter().map(String::as_str).collect();
            assert_eq!(run(&args), 0, "{args:?}");
        }
        let snap: Vec<Vec<u8>> = outputs.iter().map(|f| fs::read(d(f)).unwrap()).collect();
        if round == 1 {
            assert_eq!(snap, snapshots);
        }
        snapshots = snap;
    }

    let report = fs::read_to_string(d("m.txt.report.csv")).unwrap();
    assert!(report.contains("stop_reason=target_reached"));
    let preds = fs::read_to_string(d("p.csv")).unwrap();
    assert!(preds.starts_with("id,score,predicted,label\n"));
    assert_eq!(preds.lines().count(), 151);

    // eval straight from features and model agrees with eval from predictions
    assert_eq!(
        run(&["eval", p(&d("te.csv")), "--model", p(&d("m.txt")), "--out", p(&d("e2.csv"))]),
        0
    );
    assert_eq!(fs::read(d("e.csv")).unwrap(), fs::read(d("e2.csv")).unwrap());
}

#[test]
fn paper_faithful_model_has_forty_weights() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.csv");
    let m = dir.path().join("m.txt");
    assert_eq!(run(&["synth", "--out", p(&s), "--n-per-class", "10"]), 0);
    assert_eq!(
        run(&["train", p(&s), "--out", p(&m), "--paper-faithful", "--max-epochs", "50"]),
        0
    );
    let model = MlpModel::from_text(&fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(model.params().values().len(), 40);
    assert!(fs::read_to_string(&m).unwrap().starts_with("MLP1\n7 5 1 0\n"));

    let custom = dir.path().join("r.csv");
    assert_eq!(
        run(&[
            "train", p(&s), "--out", p(&m), "--bias", "false", "--update-mode", "batch",
            "--max-epochs", "3", "--target-mse", "1e-9", "--report", p(&custom),
        ]),
        0
    );
    let report = fs::read_to_string(&custom).unwrap();
    assert!(report.contains("stop_reason=epoch_cap\n"));
    assert!(report.contains("update_mode=batch\n"));
}

#[test]
fn eval_rejects_unlabeled_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.csv");
    fs::write(&preds, "id,score,predicted,label\na,0.7,1,\n").unwrap();
    assert_eq!(run(&["eval", p(&preds), "--out", p(&dir.path().join("e.csv"))]), 2);
}

#[test]
fn gradcheck_subcommand() {
    assert_eq!(run(&["gradcheck", "--cases", "12"]), 0);
    assert_eq!(run(&["gradcheck", "--step", "0"]), 1);
    // a huge step makes central differences inaccurate
    assert_eq!(run(&["gradcheck", "--cases", "6", "--step", "3"]), 2);
}
