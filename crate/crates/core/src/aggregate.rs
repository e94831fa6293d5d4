//! Dataset-level recall, precision and Hmean.
//!
//! Each image contributes a [`Tally`] of numerators and denominators; the
//! dataset summary divides the summed tally, so images are micro-averaged.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{Detection, GtInstance};
use crate::matching::{Ic03Matches, MatchConfig, MatchSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricId {
    Ic03,
    DetevalIc13Order,
    DetevalDetevalOrder,
    Iou,
    Siou,
    Tiou,
    Ap,
    E2e,
}

impl MetricId {
    pub const ALL: [MetricId; 8] = [
        MetricId::Ic03,
        MetricId::DetevalIc13Order,
        MetricId::DetevalDetevalOrder,
        MetricId::Iou,
        MetricId::Siou,
        MetricId::Tiou,
        MetricId::Ap,
        MetricId::E2e,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::Ic03 => "ic03",
            MetricId::DetevalIc13Order => "deteval-ic13-order",
            MetricId::DetevalDetevalOrder => "deteval-deteval-order",
            MetricId::Iou => "iou",
            MetricId::Siou => "siou",
            MetricId::Tiou => "tiou",
            MetricId::Ap => "ap",
            MetricId::E2e => "e2e",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = MetricId::ALL.iter().map(|m| m.name()).collect();
                format!(
                    "unknown metric `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("{0} detection(s) have no confidence; average precision needs one on every detection (use iou, siou or tiou instead)")]
    MissingConfidence(usize),
}

pub fn hmean(r: f64, p: f64) -> f64 {
    if r + p > 0.0 {
        2.0 * r * p / (r + p)
    } else {
        0.0
    }
}

/// Summed recall and precision numerators with their denominators.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub recall_sum: f64,
    pub precision_sum: f64,
    pub num_gt: usize,
    pub num_det: usize,
}

impl Tally {
    pub fn merge(self, other: Tally) -> Tally {
        Tally {
            recall_sum: self.recall_sum + other.recall_sum,
            precision_sum: self.precision_sum + other.precision_sum,
            num_gt: self.num_gt + other.num_gt,
            num_det: self.num_det + other.num_det,
        }
    }

    /// Folds tallies left to right; callers pass them in a fixed order so
    /// the floating-point sum is reproducible.
    pub fn sum<'a>(tallies: impl IntoIterator<Item = &'a Tally>) -> Tally {
        tallies
            .into_iter()
            .fold(Tally::default(), |acc, t| acc.merge(*t))
    }

    pub fn summary(&self, metric: MetricId) -> MetricSummary {
        // no ground truth: nothing to miss; no detections: nothing correct
        let recall = if self.num_gt == 0 {
            1.0
        } else {
            self.recall_sum / self.num_gt as f64
        };
        let precision = if self.num_det == 0 {
            0.0
        } else {
            self.precision_sum / self.num_det as f64
        };
        MetricSummary {
            metric,
            recall,
            precision,
            hmean: hmean(recall, precision),
            recall_sum: self.recall_sum,
            precision_sum: self.precision_sum,
            num_gt: self.num_gt,
            num_det: self.num_det,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: MetricId,
    pub recall: f64,
    pub precision: f64,
    pub hmean: f64,
    pub recall_sum: f64,
    pub precision_sum: f64,
    pub num_gt: usize,
    pub num_det: usize,
}

fn counts(ms: &MatchSet) -> Tally {
    Tally {
        num_gt: ms.num_gt(),
        num_det: ms.num_det(),
        ..Tally::default()
    }
}

/// Matched items count 1 each. Words recalled through a line count 1;
/// a line detection counts 1 on the precision side.
pub fn binary_tally(ms: &MatchSet) -> Tally {
    let recalled: usize = ms.line_matches.iter().map(|l| l.recalled.len()).sum();
    Tally {
        recall_sum: (ms.pairs.len() + recalled) as f64,
        precision_sum: (ms.pairs.len() + ms.line_matches.len()) as f64,
        ..counts(ms)
    }
}

/// Matched pairs contribute their IoU; line matches contribute the line
/// IoU once per recalled word and once for the detection.
pub fn siou_tally(ms: &MatchSet) -> Tally {
    let mut t = counts(ms);
    for p in &ms.pairs {
        t.recall_sum += p.score.iou;
        t.precision_sum += p.score.iou;
    }
    for l in &ms.line_matches {
        t.recall_sum += l.score.iou * l.recalled.len() as f64;
        t.precision_sum += l.score.iou;
    }
    t
}

/// Matched pairs contribute their TIoU recall and precision; recalled
/// words contribute their line credit.
pub fn tiou_tally(ms: &MatchSet) -> Tally {
    let mut t = counts(ms);
    for p in &ms.pairs {
        t.recall_sum += p.score.tiou_recall;
        t.precision_sum += p.score.tiou_precision;
    }
    for l in &ms.line_matches {
        t.recall_sum += l.recalled.iter().map(|w| w.recall).sum::<f64>();
        t.precision_sum += l.score.tiou_precision;
    }
    t
}

/// DetEval credit: one-to-one pairs count 1; a one-to-many group gives
/// its ground truth `om_score` and each of its detections `om_score`; a
/// many-to-one group gives each ground truth `mo_score` and its detection
/// `mo_score`.
pub fn deteval_tally(ms: &MatchSet, cfg: &MatchConfig) -> Tally {
    let mo_gts: usize = ms.mo_groups.iter().map(|g| g.gts.len()).sum();
    let om_dets: usize = ms.om_groups.iter().map(|g| g.dets.len()).sum();
    Tally {
        recall_sum: ms.pairs.len() as f64
            + ms.om_groups.len() as f64 * cfg.om_score
            + mo_gts as f64 * cfg.mo_score,
        precision_sum: ms.pairs.len() as f64
            + om_dets as f64 * cfg.om_score
            + ms.mo_groups.len() as f64 * cfg.mo_score,
        ..counts(ms)
    }
}

pub fn ic03_tally(m: &Ic03Matches) -> Tally {
    Tally {
        recall_sum: m.gt_best.iter().map(|e| e.1).sum(),
        precision_sum: m.det_best.iter().map(|e| e.1).sum(),
        num_gt: m.gt_best.len(),
        num_det: m.det_best.len(),
    }
}

/// A matched pair is a true positive only when both transcriptions exist
/// and agree after trimming, ignoring case unless `case_sensitive`.
pub fn e2e_tally(
    ms: &MatchSet,
    gts: &[GtInstance],
    dets: &[Detection],
    case_sensitive: bool,
) -> Tally {
    let same = |a: &str, b: &str| {
        let (a, b) = (a.trim(), b.trim());
        if case_sensitive {
            a == b
        } else {
            a.to_lowercase() == b.to_lowercase()
        }
    };
    let hits = ms
        .pairs
        .iter()
        .filter(|p| {
            let g = gts
                .iter()
                .find(|g| g.id == p.gt)
                .and_then(|g| g.transcription.as_deref());
            let d = dets
                .iter()
                .find(|d| d.id == p.det)
                .and_then(|d| d.transcription.as_deref());
            matches!((g, d), (Some(g), Some(d)) if same(g, d))
        })
        .count() as f64;
    Tally {
        recall_sum: hits,
        precision_sum: hits,
        ..counts(ms)
    }
}

/// One ranked detection for average precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApSample {
    pub confidence: f64,
    pub correct: bool,
}

/// Ranked samples of one image from its one-to-one match set; don't-care
/// detections are left out.
pub fn ap_samples(ms: &MatchSet, dets: &[Detection]) -> Result<Vec<ApSample>, AggregateError> {
    let missing = dets.iter().filter(|d| d.confidence.is_none()).count();
    if missing > 0 {
        return Err(AggregateError::MissingConfidence(missing));
    }
    let mut out = Vec::new();
    for d in dets {
        if ms.dont_care_det.contains(&d.id) {
            continue;
        }
        out.push(ApSample {
            confidence: d.confidence.unwrap_or(0.0),
            correct: ms.pairs.iter().any(|p| p.det == d.id),
        });
    }
    Ok(out)
}

/// Interpolated average precision over samples ranked by descending
/// confidence; equal confidences keep their input order.
///
/// All-points interpolation by default, the 11-point variant when
/// `eleven_point` is set.
pub fn average_precision(samples: &[ApSample], num_gt: usize, eleven_point: bool) -> f64 {
    if num_gt == 0 || samples.is_empty() {
        return 0.0;
    }
    let mut ranked = samples.to_vec();
    ranked.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut tp = 0usize;
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(ranked.len());
    for (k, s) in ranked.iter().enumerate() {
        tp += usize::from(s.correct);
        curve.push((tp as f64 / num_gt as f64, tp as f64 / (k + 1) as f64));
    }
    if eleven_point {
        let total: f64 = (0..=10)
            .map(|i| {
                let r = i as f64 / 10.0;
                curve
                    .iter()
                    .filter(|(rec, _)| *rec >= r - 1e-12)
                    .map(|(_, p)| *p)
                    .fold(0.0, f64::max)
            })
            .sum();
        return total / 11.0;
    }
    // precision envelope: best precision at any recall to the right
    let mut envelope: Vec<f64> = curve.iter().map(|c| c.1).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (i, (r, _)) in curve.iter().enumerate() {
        ap += (r - prev_recall) * envelope[i];
        prev_recall = *r;
    }
    ap
}
