use std::fs;

use tiou_eval::aggregate::MetricId;
use tiou_eval::harness::{dump_scenes, synthetic_corpus};
use tiou_eval::run::{emit_report, parse_report, run_eval, ReportFormat, RunConfig};
use tiou_eval::Error;

#[test]
fn json_report_round_trips() {
    let corpus = synthetic_corpus(3, 20, 5).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dirs = dump_scenes(&corpus, tmp.path()).unwrap();
    let mut cfg = RunConfig::new(&dirs.gt, &dirs.det);
    cfg.dataset.det_layout = dirs.det_layout;
    cfg.lines = dirs.lines.clone();
    cfg.joint = true;
    cfg.metrics = MetricId::ALL.into_iter().collect();
    cfg.per_image = true;
    let report = run_eval(&cfg).unwrap();
    let bytes = emit_report(&report, ReportFormat::Json).unwrap();
    let back = parse_report(&bytes).unwrap();
    assert_eq!(back, report);
    assert_eq!(emit_report(&back, ReportFormat::Json).unwrap(), bytes);
    assert!(report.average_precision.is_some());
    assert_eq!(report.images.as_ref().unwrap().len(), corpus.len());
}

#[test]
fn per_image_tallies_sum_to_summary() {
    let corpus = synthetic_corpus(4, 30, 0).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dirs = dump_scenes(&corpus, tmp.path()).unwrap();
    let mut cfg = RunConfig::new(&dirs.gt, &dirs.det);
    cfg.dataset.det_layout = dirs.det_layout;
    cfg.per_image = true;
    let report = run_eval(&cfg).unwrap();
    for (metric, summary) in &report.metrics {
        let images = report.images.as_ref().unwrap();
        let (r, p): (f64, f64) = images.iter().fold((0.0, 0.0), |(r, p), im| {
            (
                r + im.tallies[metric].recall_sum,
                p + im.tallies[metric].precision_sum,
            )
        });
        let n_gt: usize = images.iter().map(|im| im.tallies[metric].num_gt).sum();
        assert_eq!(
            (r, p, n_gt),
            (summary.recall_sum, summary.precision_sum, summary.num_gt)
        );
        let expected_recall = if n_gt == 0 { 1.0 } else { r / n_gt as f64 };
        assert!((summary.recall - expected_recall).abs() < 1e-12);
    }
}

#[test]
fn empty_detection_archive_scores_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = tmp.path().join("gt");
    fs::create_dir_all(&gt).unwrap();
    fs::create_dir_all(tmp.path().join("det")).unwrap();
    fs::write(gt.join("gt_img_1.txt"), "0,0,10,0,10,10,0,10,a\n").unwrap();
    let report = run_eval(&RunConfig::new(&gt, tmp.path().join("det"))).unwrap();
    for s in report.metrics.values() {
        assert_eq!(
            (s.recall, s.precision, s.hmean, s.num_det),
            (0.0, 0.0, 0.0, 0)
        );
    }
    assert!(!report.warnings.is_empty());
}

#[test]
fn strict_mode_rejects_warnings() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = tmp.path().join("gt");
    fs::create_dir_all(&gt).unwrap();
    fs::create_dir_all(tmp.path().join("det")).unwrap();
    fs::write(gt.join("gt_img_1.txt"), "0,0,10,0,10,10,0,10,a\n").unwrap();
    let mut cfg = RunConfig::new(&gt, tmp.path().join("det"));
    cfg.strict_formats = true;
    assert!(matches!(run_eval(&cfg), Err(Error::Strict(w)) if !w.is_empty()));
}

#[test]
fn text_table_lists_each_metric() {
    let corpus = synthetic_corpus(1, 5, 0).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dirs = dump_scenes(&corpus, tmp.path()).unwrap();
    let mut cfg = RunConfig::new(&dirs.gt, &dirs.det);
    cfg.dataset.det_layout = dirs.det_layout;
    let table =
        String::from_utf8(emit_report(&run_eval(&cfg).unwrap(), ReportFormat::Text).unwrap())
            .unwrap();
    for name in ["iou", "siou", "tiou"] {
        assert!(table.lines().any(|l| l.starts_with(name)), "{table}");
    }
}
