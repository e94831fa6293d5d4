//! End-to-end runs: load a dataset, evaluate it on a worker pool, and
//! build a versioned report.
//!
//! Report JSON has sorted keys and is byte-identical across runs for the
//! same inputs and configuration, whatever the worker count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::{MetricId, MetricSummary};
use crate::annotation::{load_dataset, CoordFormat, DatasetOptions, DetLayout};
use crate::eval::{evaluate_records, ApInterpolation, ApSummary, EvalOptions, ImageResult};
use crate::matching::MatchConfig;
use crate::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub gt: PathBuf,
    pub det: PathBuf,
    pub lines: Option<PathBuf>,
    pub metrics: BTreeSet<MetricId>,
    pub matching: MatchConfig,
    pub joint: bool,
    pub dataset: DatasetOptions,
    pub e2e_case_sensitive: bool,
    pub ap_interpolation: ApInterpolation,
    pub per_image: bool,
    /// Worker threads; 0 uses one per available core.
    pub workers: usize,
    /// Treat every warning-level input issue as an error.
    pub strict_formats: bool,
}

impl RunConfig {
    pub fn new(gt: impl Into<PathBuf>, det: impl Into<PathBuf>) -> Self {
        RunConfig {
            gt: gt.into(),
            det: det.into(),
            lines: None,
            metrics: EvalOptions::default().metrics,
            matching: MatchConfig::default(),
            joint: false,
            dataset: DatasetOptions::default(),
            e2e_case_sensitive: false,
            ap_interpolation: ApInterpolation::AllPoints,
            per_image: false,
            workers: 0,
            strict_formats: false,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.metrics.is_empty() {
            return Err(Error::Usage("select at least one metric".into()));
        }
        match (self.joint, &self.lines) {
            (true, None) => {
                return Err(Error::Usage(
                    "joint evaluation needs a text-line annotation path".into(),
                ))
            }
            (false, Some(_)) => {
                return Err(Error::Usage(
                    "text-line annotations are only used in joint mode".into(),
                ))
            }
            _ => {}
        }
        self.matching.validate()?;
        Ok(())
    }

    fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            metrics: self.metrics.clone(),
            matching: self.matching,
            joint: self.joint,
            e2e_case_sensitive: self.e2e_case_sensitive,
            ap_interpolation: self.ap_interpolation,
        }
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            gt: self.gt.display().to_string(),
            det: self.det.display().to_string(),
            lines: self.lines.as_ref().map(|p| p.display().to_string()),
            metrics: self.metrics.iter().copied().collect(),
            matching: self.matching,
            joint: self.joint,
            gt_format: self.dataset.gt_format,
            det_layout: self.dataset.det_layout,
            line_format: self.dataset.line_format,
            gt_pattern: self.dataset.gt_pattern.to_string(),
            det_pattern: self.dataset.det_pattern.to_string(),
            line_pattern: self.dataset.line_pattern.to_string(),
            sentinel: self.dataset.sentinel.clone(),
            e2e_case_sensitive: self.e2e_case_sensitive,
            ap_interpolation: self.ap_interpolation,
            per_image: self.per_image,
            strict_formats: self.strict_formats,
        }
    }
}

/// The run configuration as recorded in a report. The worker count is
/// left out because it never changes the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub gt: String,
    pub det: String,
    pub lines: Option<String>,
    pub metrics: Vec<MetricId>,
    pub matching: MatchConfig,
    pub joint: bool,
    pub gt_format: CoordFormat,
    pub det_layout: DetLayout,
    pub line_format: CoordFormat,
    pub gt_pattern: String,
    pub det_pattern: String,
    pub line_pattern: String,
    pub sentinel: String,
    pub e2e_case_sensitive: bool,
    pub ap_interpolation: ApInterpolation,
    pub per_image: bool,
    pub strict_formats: bool,
}

/// Schema version 1.
///
/// `metrics` maps metric names to summaries. When `images` is present the
/// summaries equal the in-order sum of each image's `tallies`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ConfigEcho,
    pub metrics: BTreeMap<MetricId, MetricSummary>,
    pub average_precision: Option<ApSummary>,
    pub images: Option<Vec<ImageResult>>,
    pub warnings: Vec<String>,
}

pub fn run_eval(config: &RunConfig) -> Result<EvalReport, Error> {
    config.validate()?;
    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        config.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Pool(e.to_string()))?;
    let opts = config.eval_options();
    let (dataset, result) = pool.install(|| -> Result<_, Error> {
        let dataset = load_dataset(
            &config.gt,
            &config.det,
            config.lines.as_deref(),
            &config.dataset,
        )?;
        let result = evaluate_records(&dataset.records, &opts)?;
        Ok((dataset, result))
    })?;
    let mut warnings = dataset.warnings;
    warnings.extend(result.warnings);
    if config.strict_formats && !warnings.is_empty() {
        return Err(Error::Strict(warnings));
    }
    if dataset.records.is_empty() {
        warnings.push(format!(
            "no ground-truth files found under {}",
            config.gt.display()
        ));
    }
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        config: config.echo(),
        metrics: result.summaries,
        average_precision: result.average_precision,
        images: config.per_image.then_some(result.images),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Text,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" | "text-table" => Ok(ReportFormat::Text),
            other => Err(format!(
                "unknown report format `{other}` (expected json or text)"
            )),
        }
    }
}

pub fn emit_report(report: &EvalReport, format: ReportFormat) -> Result<Vec<u8>, Error> {
    match format {
        ReportFormat::Json => {
            // going through Value sorts every object's keys
            let value = serde_json::to_value(report)?;
            let mut text = serde_json::to_string_pretty(&value)?;
            text.push('\n');
            Ok(text.into_bytes())
        }
        ReportFormat::Text => Ok(text_table(report).into_bytes()),
    }
}

pub fn parse_report(bytes: &[u8]) -> Result<EvalReport, Error> {
    Ok(serde_json::from_slice(bytes)?)
}

fn text_table(report: &EvalReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<24} {:>7} {:>9} {:>7} {:>8} {:>8}",
        "metric", "R", "P", "F", "num_gt", "num_det"
    )
    .expect("write to string");
    for s in report.metrics.values() {
        writeln!(
            out,
            "{:<24} {:>7.3} {:>9.3} {:>7.3} {:>8} {:>8}",
            s.metric.name(),
            s.recall,
            s.precision,
            s.hmean,
            s.num_gt,
            s.num_det
        )
        .expect("write to string");
    }
    if let Some(ap) = &report.average_precision {
        let kind = match ap.interpolation {
            ApInterpolation::AllPoints => "all-points",
            ApInterpolation::ElevenPoint => "11-point",
        };
        writeln!(out, "{:<24} {:>7.3}  ({kind})", "ap", ap.average_precision)
            .expect("write to string");
    }
    if !report.warnings.is_empty() {
        writeln!(out, "{} warning(s)", report.warnings.len()).expect("write to string");
    }
    out
}
