//! Per-image and dataset evaluation across the selected metrics.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{
    ap_samples, average_precision, binary_tally, deteval_tally, e2e_tally, ic03_tally, siou_tally,
    tiou_tally, AggregateError, ApSample, MetricId, MetricSummary, Tally,
};
use crate::annotation::ImageRecord;
use crate::joint::evaluate_joint;
use crate::matching::{
    dont_care_detections, has_mixed_confidence, match_deteval, match_ic03, match_one_to_one,
    Ic03Matches, MatchConfig, MatchOrder, MatchSet,
};

/// Match set behind the iou, siou and tiou tallies; joint-protocol
/// output when joint mode is on, plain one-to-one matching otherwise.
pub const LOCALIZATION: &str = "localization";
/// Plain one-to-one matching behind ap and e2e in joint mode.
pub const ONE_TO_ONE: &str = "one-to-one";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApInterpolation {
    #[default]
    AllPoints,
    ElevenPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub metrics: BTreeSet<MetricId>,
    pub matching: MatchConfig,
    /// Score iou/siou/tiou with the joint word and text-line protocol.
    pub joint: bool,
    pub e2e_case_sensitive: bool,
    pub ap_interpolation: ApInterpolation,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            metrics: [MetricId::Iou, MetricId::Siou, MetricId::Tiou]
                .into_iter()
                .collect(),
            matching: MatchConfig::default(),
            joint: false,
            e2e_case_sensitive: false,
            ap_interpolation: ApInterpolation::AllPoints,
        }
    }
}

impl EvalOptions {
    pub fn with_metrics(metrics: impl IntoIterator<Item = MetricId>) -> Self {
        EvalOptions {
            metrics: metrics.into_iter().collect(),
            ..EvalOptions::default()
        }
    }
}

/// Everything computed for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub key: String,
    pub tallies: BTreeMap<MetricId, Tally>,
    pub matchsets: BTreeMap<String, MatchSet>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ic03: Option<Ic03Matches>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ap_samples: Option<Vec<ApSample>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApSummary {
    pub average_precision: f64,
    pub interpolation: ApInterpolation,
    pub num_gt: usize,
    pub num_det: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetResult {
    pub summaries: BTreeMap<MetricId, MetricSummary>,
    pub average_precision: Option<ApSummary>,
    /// In record order.
    pub images: Vec<ImageResult>,
    pub warnings: Vec<String>,
}

pub fn evaluate_image(
    record: &ImageRecord,
    opts: &EvalOptions,
) -> Result<ImageResult, AggregateError> {
    let cfg = &opts.matching;
    let (gts, dets) = (&record.gts, &record.dets);
    let dont_care = dont_care_detections(gts, dets, cfg.dont_care_overlap);
    let mut warnings = Vec::new();
    let mut tallies = BTreeMap::new();
    let mut matchsets = BTreeMap::new();
    let wants = |m: MetricId| opts.metrics.contains(&m);

    let needs_plain = [MetricId::Ap, MetricId::E2e].into_iter().any(wants)
        || (!opts.joint
            && [MetricId::Iou, MetricId::Siou, MetricId::Tiou]
                .into_iter()
                .any(wants));
    if has_mixed_confidence(dets) {
        warnings.push(format!(
            "image `{}`: only some detections carry a confidence, ranking by IoU",
            record.key
        ));
    }
    let plain = needs_plain.then(|| match_one_to_one(gts, dets, &dont_care, cfg));
    let joint = (opts.joint
        && [MetricId::Iou, MetricId::Siou, MetricId::Tiou]
            .into_iter()
            .any(wants))
    .then(|| evaluate_joint(gts, &record.lines, dets, &dont_care, cfg));
    let localization = joint.as_ref().or(plain.as_ref());

    if let Some(ms) = localization {
        for (metric, tally) in [
            (MetricId::Iou, binary_tally as fn(&MatchSet) -> Tally),
            (MetricId::Siou, siou_tally),
            (MetricId::Tiou, tiou_tally),
        ] {
            if wants(metric) {
                tallies.insert(metric, tally(ms));
            }
        }
    }
    if wants(MetricId::E2e) {
        let ms = plain.as_ref().expect("one-to-one matching computed");
        tallies.insert(
            MetricId::E2e,
            e2e_tally(ms, gts, dets, opts.e2e_case_sensitive),
        );
    }
    let ap = if wants(MetricId::Ap) {
        let ms = plain.as_ref().expect("one-to-one matching computed");
        tallies.insert(MetricId::Ap, binary_tally(ms));
        Some(ap_samples(ms, dets)?)
    } else {
        None
    };
    for (metric, order) in [
        (MetricId::DetevalIc13Order, MatchOrder::OneToOneFirst),
        (MetricId::DetevalDetevalOrder, MatchOrder::ManyFirst),
    ] {
        if wants(metric) {
            let ms = match_deteval(gts, dets, &dont_care, &cfg.with_order(order));
            tallies.insert(metric, deteval_tally(&ms, cfg));
            matchsets.insert(metric.name().to_string(), ms);
        }
    }
    let ic03 = wants(MetricId::Ic03).then(|| {
        let m = match_ic03(gts, dets, &dont_care);
        tallies.insert(MetricId::Ic03, ic03_tally(&m));
        m
    });
    match (plain, joint) {
        (Some(p), Some(j)) => {
            matchsets.insert(ONE_TO_ONE.to_string(), p);
            matchsets.insert(LOCALIZATION.to_string(), j);
        }
        (Some(ms), None) | (None, Some(ms)) => {
            matchsets.insert(LOCALIZATION.to_string(), ms);
        }
        (None, None) => {}
    }
    Ok(ImageResult {
        key: record.key.clone(),
        tallies,
        matchsets,
        ic03,
        ap_samples: ap,
        warnings,
    })
}

/// Evaluates every record on the current rayon pool and reduces in record
/// order, so the result does not depend on scheduling.
pub fn evaluate_records(
    records: &[ImageRecord],
    opts: &EvalOptions,
) -> Result<DatasetResult, AggregateError> {
    let images: Vec<ImageResult> = records
        .par_iter()
        .map(|r| evaluate_image(r, opts))
        .collect::<Result<_, _>>()?;
    Ok(summarize(images, opts))
}

/// Dataset summaries from per-image results, folded in the given order.
pub fn summarize(images: Vec<ImageResult>, opts: &EvalOptions) -> DatasetResult {
    let mut summaries = BTreeMap::new();
    for &metric in &opts.metrics {
        if metric == MetricId::Ap {
            continue;
        }
        let total = Tally::sum(images.iter().filter_map(|i| i.tallies.get(&metric)));
        summaries.insert(metric, total.summary(metric));
    }
    let average_precision = opts.metrics.contains(&MetricId::Ap).then(|| {
        let samples: Vec<ApSample> = images
            .iter()
            .flat_map(|i| i.ap_samples.iter().flatten().copied())
            .collect();
        let counts = Tally::sum(images.iter().filter_map(|i| i.tallies.get(&MetricId::Ap)));
        ApSummary {
            average_precision: average_precision(
                &samples,
                counts.num_gt,
                opts.ap_interpolation == ApInterpolation::ElevenPoint,
            ),
            interpolation: opts.ap_interpolation,
            num_gt: counts.num_gt,
            num_det: counts.num_det,
        }
    });
    let warnings = images
        .iter()
        .flat_map(|i| i.warnings.iter().cloned())
        .collect();
    DatasetResult {
        summaries,
        average_precision,
        images,
        warnings,
    }
}
