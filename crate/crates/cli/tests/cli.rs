use std::fs;
use std::path::Path;
use std::process::Command;

fn wdist(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wdist"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn ok(args: &[&str]) {
    let (code, err) = wdist(args);
    assert_eq!(code, 0, "{args:?}: {err}");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn missing_out_is_a_usage_error() {
    let (code, err) = wdist(&["gen-data", "--samples", "10"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("wdist-error[2] usage:"), "{err}");
}

#[test]
fn unknown_model_kind_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    ok(&[
        "gen-data",
        "--qubits",
        "1",
        "--samples",
        "40",
        "--bins",
        "0",
        "--out",
        s(&data),
    ]);
    let (code, err) = wdist(&[
        "train",
        "--model",
        "svm",
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(code, 2);
    assert!(err.starts_with("wdist-error[2]"), "{err}");
}

#[test]
fn unreadable_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = wdist(&[
        "rank",
        "--data",
        s(&dir.path().join("none.csv")),
        "--out",
        s(&dir.path().join("r.csv")),
    ]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn default_split_and_natural_bins() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    ok(&[
        "gen-data",
        "--qubits",
        "1",
        "--samples",
        "1400",
        "--bins",
        "0",
        "--seed",
        "4",
        "--out",
        s(&data),
    ]);
    assert_eq!(rows(&data.join("train.csv")), 1000);
    assert_eq!(rows(&data.join("val.csv")), 200);
    assert_eq!(rows(&data.join("test.csv")), 200);
    assert!(data.join("manifest.json").exists());
}

#[test]
fn model_layout_mismatch_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = (dir.path().join("d1"), dir.path().join("d2"));
    let model = dir.path().join("m.json");
    ok(&[
        "gen-data",
        "--qubits",
        "1",
        "--samples",
        "60",
        "--bins",
        "0",
        "--out",
        s(&d1),
    ]);
    ok(&[
        "gen-data",
        "--qubits",
        "2",
        "--samples",
        "60",
        "--bins",
        "0",
        "--out",
        s(&d2),
    ]);
    ok(&[
        "train",
        "--model",
        "decision_tree",
        "--data",
        s(&d1),
        "--out",
        s(&model),
    ]);
    let (code, err) = wdist(&[
        "eval",
        "--model",
        s(&model),
        "--data",
        s(&d2),
        "--out",
        s(&dir.path().join("e")),
    ]);
    assert_eq!(code, 5, "{err}");
    assert!(err.starts_with("wdist-error[5]"), "{err}");
    // A 1-qubit layout model cannot score 1-qubit prop1 states, which need the 2-qubit Choi layout.
    let (code, _) = wdist(&[
        "validate",
        "prop1",
        "--model",
        s(&model),
        "--trials",
        "3",
        "--out",
        s(&dir.path().join("p")),
    ]);
    assert_eq!(code, 5);
}

#[test]
fn lasso_records_selected_penalty() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    let model = dir.path().join("lasso.json");
    ok(&[
        "gen-data",
        "--qubits",
        "1",
        "--samples",
        "200",
        "--bins",
        "5",
        "--out",
        s(&data),
    ]);
    ok(&[
        "train",
        "--model",
        "lasso",
        "--data",
        s(&data),
        "--out",
        s(&model),
    ]);
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("lasso.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert!(
        manifest["results"]["selected_l1"].as_f64().unwrap() > 0.0,
        "{manifest}"
    );
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, workers: &str| {
        let data = dir.path().join(format!("d{tag}"));
        let model = dir.path().join(format!("m{tag}.json"));
        let eval = dir.path().join(format!("e{tag}"));
        ok(&[
            "--workers",
            workers,
            "gen-data",
            "--qubits",
            "1",
            "--samples",
            "150",
            "--seed",
            "12",
            "--out",
            s(&data),
        ]);
        ok(&[
            "--workers",
            workers,
            "train",
            "--model",
            "random_forest",
            "--data",
            s(&data),
            "--out",
            s(&model),
        ]);
        ok(&[
            "--workers",
            workers,
            "eval",
            "--model",
            s(&model),
            "--data",
            s(&data),
            "--out",
            s(&eval),
        ]);
        [
            data.join("train.csv"),
            data.join("test.csv"),
            model,
            eval.join("predictions.csv"),
        ]
        .map(|p| fs::read(p).unwrap())
    };
    assert_eq!(run("a", "1"), run("b", "4"));
}

#[test]
fn validation_writes_report_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p2");
    ok(&[
        "validate",
        "prop2",
        "--trials",
        "5",
        "--n-states",
        "8",
        "--out",
        s(&out),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["trials"], 5);
    assert_eq!(report["violations_true"], 0);
    assert_eq!(rows(&out.join("ratio_histogram.csv")), 25);
}
