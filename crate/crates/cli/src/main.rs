use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tiou_eval::aggregate::MetricId;
use tiou_eval::annotation::{CoordFormat, DatasetOptions, DetLayout, KeyPattern, DEFAULT_SENTINEL};
use tiou_eval::eval::ApInterpolation;
use tiou_eval::geometry::Polygon;
use tiou_eval::harness::{
    compare_metrics, dump_scenes, format_comparison, make_equal_iou_quartet,
    nested_annotation_scene, order_pathology_scene, oversegmentation_scene, synthetic_corpus,
    two_word_line_scene,
};
use tiou_eval::matching::MatchConfig;
use tiou_eval::run::{emit_report, run_eval, ReportFormat, RunConfig};

#[derive(Parser)]
#[command(
    name = "tiou",
    version,
    about = "Evaluate text detections with IoU, TIoU, DetEval and friends"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a detection archive against ground truth.
    Eval(Box<EvalArgs>),
    /// Write a synthetic scene set and print its metric comparison.
    Demo(DemoArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth zip file or directory.
    #[arg(long)]
    gt: PathBuf,
    /// Detection zip file or directory.
    #[arg(long)]
    det: PathBuf,
    /// Text-line annotations; requires --joint.
    #[arg(long)]
    lines: Option<PathBuf>,
    /// Run the joint word and text-line protocol; requires --lines.
    #[arg(long)]
    joint: bool,
    /// Comma-separated: ic03, deteval-ic13-order, deteval-deteval-order,
    /// iou, siou, tiou, ap, e2e.
    #[arg(long, value_delimiter = ',', default_value = "iou,siou,tiou")]
    metrics: Vec<MetricId>,

    #[arg(long, default_value_t = MatchConfig::default().iou_threshold)]
    iou_threshold: f64,
    /// Area-recall threshold for DetEval.
    #[arg(long, default_value_t = MatchConfig::default().tr)]
    tr: f64,
    /// Area-precision threshold for DetEval.
    #[arg(long, default_value_t = MatchConfig::default().tp)]
    tp: f64,
    #[arg(long, default_value_t = MatchConfig::default().om_score)]
    om_score: f64,
    #[arg(long, default_value_t = MatchConfig::default().mo_score)]
    mo_score: f64,
    #[arg(long, default_value_t = MatchConfig::default().dont_care_overlap)]
    dont_care_overlap: f64,
    /// Compare thresholds with >= instead of >.
    #[arg(long)]
    inclusive: bool,

    #[arg(long, default_value = "icdar15-quad")]
    gt_format: CoordFormat,
    /// Detection columns, e.g. quad, quad+conf, rect+conf+text.
    #[arg(long, default_value = "quad")]
    det_layout: DetLayout,
    #[arg(long, default_value = "icdar15-quad")]
    line_format: CoordFormat,
    #[arg(long, default_value = "gt_img_{key}.txt")]
    gt_pattern: String,
    #[arg(long, default_value = "res_img_{key}.txt")]
    det_pattern: String,
    #[arg(long, default_value = "gt_img_{key}.txt")]
    line_pattern: String,
    /// Transcription marking a don't-care ground truth.
    #[arg(long, default_value = DEFAULT_SENTINEL)]
    sentinel: String,

    /// Case-sensitive transcription comparison for e2e.
    #[arg(long)]
    case_sensitive: bool,
    /// 11-point interpolation for ap instead of all points.
    #[arg(long)]
    ap_11_point: bool,
    /// Include per-image tallies and match sets in the report.
    #[arg(long)]
    per_image: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Fail on any warning-level input issue.
    #[arg(long)]
    strict_formats: bool,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Demo {
    /// Equal-IoU cutting / pure / outlier / cutting+outlier scenes.
    Quartet,
    /// One word split into 20 slices plus 3 false positives.
    Oversegmentation,
    /// Scenes where DetEval's stage order changes the outcome.
    Order,
    /// Two-word text line with exact and partial line detections.
    Lines,
    /// Everything above plus seeded random scenes.
    Corpus,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(value_enum)]
    scenes: Demo,
    /// Output directory; gets gt/, det/ and, for line scenes, lines/.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random word scenes in the corpus.
    #[arg(long, default_value_t = 100)]
    count: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Eval(args) => eval(*args),
        Command::Demo(args) => demo(args),
    }
}

fn eval(args: EvalArgs) -> Result<()> {
    let mut config = RunConfig::new(&args.gt, &args.det);
    config.lines = args.lines;
    config.joint = args.joint;
    config.metrics = args.metrics.into_iter().collect();
    config.matching = MatchConfig {
        iou_threshold: args.iou_threshold,
        tr: args.tr,
        tp: args.tp,
        om_score: args.om_score,
        mo_score: args.mo_score,
        dont_care_overlap: args.dont_care_overlap,
        inclusive: args.inclusive,
        ..MatchConfig::default()
    };
    config.dataset = DatasetOptions {
        gt_format: args.gt_format,
        det_layout: args.det_layout,
        line_format: args.line_format,
        gt_pattern: KeyPattern::new(&args.gt_pattern)?,
        det_pattern: KeyPattern::new(&args.det_pattern)?,
        line_pattern: KeyPattern::new(&args.line_pattern)?,
        sentinel: args.sentinel,
    };
    config.e2e_case_sensitive = args.case_sensitive;
    config.ap_interpolation = if args.ap_11_point {
        ApInterpolation::ElevenPoint
    } else {
        ApInterpolation::AllPoints
    };
    config.per_image = args.per_image;
    config.workers = args.workers;
    config.strict_formats = args.strict_formats;

    let report = run_eval(&config)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let bytes = emit_report(&report, args.format)?;
    match args.report {
        Some(path) => {
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn demo(args: DemoArgs) -> Result<()> {
    let gt = Polygon::rect(0.0, 0.0, 100.0, 20.0)?;
    let scenes = match args.scenes {
        Demo::Quartet => make_equal_iou_quartet(&gt, 2.0 / 3.0)?,
        Demo::Oversegmentation => vec![oversegmentation_scene(20, 3)?],
        Demo::Order => vec![order_pathology_scene()?, nested_annotation_scene()?],
        Demo::Lines => vec![
            two_word_line_scene("line-exact", Polygon::rect(0.0, 0.0, 200.0, 20.0)?)?,
            two_word_line_scene("line-partial", Polygon::rect(0.0, 0.0, 150.0, 20.0)?)?,
        ],
        Demo::Corpus => synthetic_corpus(args.seed, args.count, args.count / 4)?,
    };
    let dirs = dump_scenes(&scenes, &args.out)?;
    print!(
        "{}",
        format_comparison(&compare_metrics(&scenes, &MatchConfig::default()))
    );
    eprintln!(
        "wrote {} scene(s): --gt {} --det {} --det-layout {}{}",
        scenes.len(),
        dirs.gt.display(),
        dirs.det.display(),
        dirs.det_layout,
        dirs.lines
            .map(|l| format!(" --joint --lines {}", l.display()))
            .unwrap_or_default()
    );
    Ok(())
}
