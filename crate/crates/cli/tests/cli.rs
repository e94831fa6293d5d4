use std::path::Path;
use std::process::{Command, Output};

fn tiou(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tiou"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn demo(kind: &str, out: &Path) -> String {
    let o = tiou(&["demo", kind, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn quartet_demo_then_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let table = demo("quartet", tmp.path());
    assert!(
        table.contains("cutting") && table.contains("pure"),
        "{table}"
    );

    let gt = tmp.path().join("gt");
    let det = tmp.path().join("det");
    let report = tmp.path().join("report.json");
    let o = tiou(&[
        "eval",
        "--gt",
        gt.to_str().unwrap(),
        "--det",
        det.to_str().unwrap(),
        "--det-layout",
        "quad+conf+text",
        "--metrics",
        "iou,tiou,deteval-ic13-order,ap",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["metrics"]["iou"]["hmean"], 1.0);
    let tiou_h = json["metrics"]["tiou"]["hmean"].as_f64().unwrap();
    assert!(tiou_h > 0.0 && tiou_h < 1.0);
    assert!(json["average_precision"]["average_precision"].is_f64());
}

#[test]
fn joint_lines_text_table() {
    let tmp = tempfile::tempdir().unwrap();
    demo("lines", tmp.path());
    let p = |d: &str| tmp.path().join(d).to_str().unwrap().to_string();
    let o = tiou(&[
        "eval",
        "--gt",
        &p("gt"),
        "--det",
        &p("det"),
        "--lines",
        &p("lines"),
        "--joint",
        "--det-layout",
        "quad+conf+text",
        "--format",
        "text",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("metric"), "{table}");
    assert!(table.lines().any(|l| l.starts_with("tiou")));
}

#[test]
fn usage_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    demo("order", tmp.path());
    let p = |d: &str| tmp.path().join(d).to_str().unwrap().to_string();
    // --joint without --lines
    let o = tiou(&["eval", "--gt", &p("gt"), "--det", &p("det"), "--joint"]);
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());
    let o = tiou(&[
        "eval",
        "--gt",
        &p("gt"),
        "--det",
        &p("det"),
        "--metrics",
        "nope",
    ]);
    assert!(!o.status.success());
    let o = tiou(&["eval", "--gt", &p("missing"), "--det", &p("det")]);
    assert!(!o.status.success());
}
