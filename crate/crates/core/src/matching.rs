//! Assignment of detections to ground truth.
//!
//! Four protocols live here: don't-care filtering, greedy one-to-one IoU
//! matching, IC03 best-match values, and DetEval's one-to-one /
//! one-to-many / many-to-one stages in either order.
//!
//! Ground truth and detections are referenced by their `id` in every
//! output. Inputs may come in any order; ties are broken by lower
//! detection id, then lower ground-truth id.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{Detection, GtInstance};
use crate::geometry::{intersection_area, Polygon};
use crate::pair::PairScore;

/// Order in which DetEval runs its stages.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum MatchOrder {
    /// One-to-one, then one-to-many, then many-to-one (ICDAR 2013 script).
    #[default]
    OneToOneFirst,
    /// One-to-many and many-to-one before one-to-one (DetEval).
    ManyFirst,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{name} must lie in (0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub iou_threshold: f64,
    /// Area-recall threshold.
    pub tr: f64,
    /// Area-precision threshold.
    pub tp: f64,
    pub order: MatchOrder,
    /// Value credited to both sides of a one-to-many match.
    pub om_score: f64,
    /// Value credited to both sides of a many-to-one match.
    pub mo_score: f64,
    pub dont_care_overlap: f64,
    /// Use `>=` instead of `>` for the IoU, tr and tp thresholds.
    pub inclusive: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            iou_threshold: 0.5,
            tr: 0.8,
            tp: 0.4,
            order: MatchOrder::OneToOneFirst,
            om_score: 0.8,
            mo_score: 1.0,
            dont_care_overlap: 0.5,
            inclusive: false,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("iou_threshold", self.iou_threshold),
            ("tr", self.tr),
            ("tp", self.tp),
            ("om_score", self.om_score),
            ("mo_score", self.mo_score),
            ("dont_care_overlap", self.dont_care_overlap),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ConfigError::OutOfRange { name, value });
            }
        }
        Ok(())
    }

    pub fn with_order(mut self, order: MatchOrder) -> Self {
        self.order = order;
        self
    }

    pub(crate) fn passes(&self, value: f64, threshold: f64) -> bool {
        if self.inclusive {
            value >= threshold
        } else {
            value > threshold
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt: usize,
    pub det: usize,
    pub score: PairScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmGroup {
    pub gt: usize,
    pub dets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoGroup {
    pub det: usize,
    pub gts: Vec<usize>,
}

/// A word credited through a text-line match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCredit {
    pub word: usize,
    /// `area(word ∩ det) / area(word)`
    pub coverage: f64,
    /// Line-level TIoU recall credited to this word.
    pub recall: f64,
}

/// A detection matched to a text-line annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineMatch {
    pub line: usize,
    pub det: usize,
    pub score: PairScore,
    pub recalled: Vec<WordCredit>,
}

/// Result of matching one image.
///
/// Every cared-for detection id lands in exactly one of `pairs`,
/// `om_groups`, `mo_groups`, `line_matches`, `unmatched_det`; don't-care
/// detections only appear in `dont_care_det`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchSet {
    pub pairs: Vec<MatchedPair>,
    pub om_groups: Vec<OmGroup>,
    pub mo_groups: Vec<MoGroup>,
    pub line_matches: Vec<LineMatch>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_det: Vec<usize>,
    pub dont_care_gt: Vec<usize>,
    pub dont_care_det: Vec<usize>,
}

impl MatchSet {
    /// Cared-for ground truth, counted once each.
    pub fn num_gt(&self) -> usize {
        self.pairs.len()
            + self.unmatched_gt.len()
            + self.om_groups.len()
            + self.mo_groups.iter().map(|g| g.gts.len()).sum::<usize>()
            + self
                .line_matches
                .iter()
                .map(|l| l.recalled.len())
                .sum::<usize>()
    }

    /// Cared-for detections, counted once each.
    pub fn num_det(&self) -> usize {
        self.pairs.len()
            + self.unmatched_det.len()
            + self.om_groups.iter().map(|g| g.dets.len()).sum::<usize>()
            + self.mo_groups.len()
            + self.line_matches.len()
    }

    /// All detection ids mentioned, with multiplicity.
    pub fn detection_mentions(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.pairs.iter().map(|p| p.det).collect();
        out.extend(self.om_groups.iter().flat_map(|g| g.dets.iter().copied()));
        out.extend(self.mo_groups.iter().map(|g| g.det));
        out.extend(self.line_matches.iter().map(|l| l.det));
        out.extend(self.unmatched_det.iter().copied());
        out.extend(self.dont_care_det.iter().copied());
        out
    }

    /// All ground-truth ids mentioned, with multiplicity.
    pub fn gt_mentions(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.pairs.iter().map(|p| p.gt).collect();
        out.extend(self.om_groups.iter().map(|g| g.gt));
        out.extend(self.mo_groups.iter().flat_map(|g| g.gts.iter().copied()));
        out.extend(
            self.line_matches
                .iter()
                .flat_map(|l| l.recalled.iter().map(|w| w.word)),
        );
        out.extend(self.unmatched_gt.iter().copied());
        out.extend(self.dont_care_gt.iter().copied());
        out
    }

    pub(crate) fn canonicalize(&mut self) {
        self.pairs.sort_by_key(|p| (p.gt, p.det));
        self.om_groups.sort_by_key(|g| g.gt);
        self.mo_groups.sort_by_key(|g| g.det);
        self.line_matches.sort_by_key(|l| l.det);
        self.unmatched_gt.sort_unstable();
        self.unmatched_det.sort_unstable();
        self.dont_care_gt.sort_unstable();
        self.dont_care_det.sort_unstable();
    }
}

/// Ids of detections that mostly fall inside a don't-care region:
/// `max_i area(W_i ∩ D) / area(D) > threshold`.
pub fn filter_dont_care(dets: &[Detection], dont_care: &[&Polygon], threshold: f64) -> Vec<usize> {
    let mut out: Vec<usize> = dets
        .iter()
        .filter(|d| {
            let area = d.polygon.area();
            area > 0.0
                && dont_care
                    .iter()
                    .any(|w| intersection_area(w, &d.polygon).get() / area > threshold)
        })
        .map(|d| d.id)
        .collect();
    out.sort_unstable();
    out
}

/// [`filter_dont_care`] against the image's own don't-care ground truth.
pub fn dont_care_detections(gts: &[GtInstance], dets: &[Detection], threshold: f64) -> Vec<usize> {
    let regions: Vec<&Polygon> = gts
        .iter()
        .filter(|g| g.dont_care)
        .map(|g| &g.polygon)
        .collect();
    if regions.is_empty() {
        return Vec::new();
    }
    filter_dont_care(dets, &regions, threshold)
}

/// How one-to-one matching orders candidate pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ranking {
    Confidence,
    Iou,
}

/// Confidence ranking needs every detection to carry one.
pub fn ranking_for<'a>(dets: impl IntoIterator<Item = &'a Detection>) -> Ranking {
    let mut any = false;
    for d in dets {
        if d.confidence.is_none() {
            return Ranking::Iou;
        }
        any = true;
    }
    if any {
        Ranking::Confidence
    } else {
        Ranking::Iou
    }
}

/// True when some but not all detections carry a confidence.
pub fn has_mixed_confidence(dets: &[Detection]) -> bool {
    let with = dets.iter().filter(|d| d.confidence.is_some()).count();
    with > 0 && with < dets.len()
}

fn active_dets(dets: &[Detection], dont_care_det: &[usize]) -> Vec<bool> {
    dets.iter()
        .map(|d| !dont_care_det.contains(&d.id))
        .collect()
}

/// Pair score of `gts[gi]` vs `dets[dj]` with the cared-for others as outliers.
pub(crate) fn score_pair(
    gts: &[GtInstance],
    outlier_pool: &[bool],
    gi: usize,
    det: &Polygon,
) -> PairScore {
    let others: Vec<&Polygon> = gts
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != gi && outlier_pool[k])
        .map(|(_, g)| &g.polygon)
        .collect();
    PairScore::compute(&gts[gi].polygon, det, &others)
}

/// Greedy one-to-one IoU assignment over the active subsets.
///
/// Returns `(gt position, det position, score)` triples.
pub(crate) fn greedy_one_to_one(
    gts: &[GtInstance],
    dets: &[Detection],
    gt_active: &[bool],
    det_active: &[bool],
    outlier_pool: &[bool],
    cfg: &MatchConfig,
) -> Vec<(usize, usize, PairScore)> {
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (gi, g) in gts.iter().enumerate() {
        if !gt_active[gi] {
            continue;
        }
        for (dj, d) in dets.iter().enumerate() {
            if !det_active[dj] || !g.polygon.bbox().overlaps(&d.polygon.bbox()) {
                continue;
            }
            let iou = crate::pair::iou(&g.polygon, &d.polygon);
            if cfg.passes(iou, cfg.iou_threshold) {
                candidates.push((gi, dj, iou));
            }
        }
    }
    let ranking = ranking_for(
        dets.iter()
            .zip(det_active)
            .filter(|(_, &a)| a)
            .map(|(d, _)| d),
    );
    let mut gt_used = vec![false; gts.len()];
    let mut det_used = vec![false; dets.len()];
    let mut accepted = Vec::new();
    let by_iou = |a: &(usize, usize, f64), b: &(usize, usize, f64)| {
        b.2.partial_cmp(&a.2)
            .unwrap_or(Ordering::Equal)
            .then(dets[a.1].id.cmp(&dets[b.1].id))
            .then(gts[a.0].id.cmp(&gts[b.0].id))
    };
    match ranking {
        Ranking::Iou => {
            candidates.sort_by(by_iou);
            for (gi, dj, _) in candidates {
                if !gt_used[gi] && !det_used[dj] {
                    gt_used[gi] = true;
                    det_used[dj] = true;
                    accepted.push((gi, dj));
                }
            }
        }
        Ranking::Confidence => {
            let mut order: Vec<usize> = (0..dets.len()).filter(|&j| det_active[j]).collect();
            order.sort_by(|&a, &b| {
                let (ca, cb) = (
                    dets[a].confidence.unwrap_or(0.0),
                    dets[b].confidence.unwrap_or(0.0),
                );
                cb.partial_cmp(&ca)
                    .unwrap_or(Ordering::Equal)
                    .then(dets[a].id.cmp(&dets[b].id))
            });
            candidates.sort_by(by_iou);
            for dj in order {
                if let Some(&(gi, _, _)) = candidates.iter().find(|c| c.1 == dj && !gt_used[c.0]) {
                    gt_used[gi] = true;
                    det_used[dj] = true;
                    accepted.push((gi, dj));
                }
            }
        }
    }
    accepted
        .into_iter()
        .map(|(gi, dj)| (gi, dj, score_pair(gts, outlier_pool, gi, &dets[dj].polygon)))
        .collect()
}

/// IoU matching in the ICDAR 2015 / Pascal VOC style.
///
/// Candidate pairs need IoU above the threshold. When every cared-for
/// detection has a confidence, detections claim their best free ground
/// truth in descending confidence; otherwise pairs are accepted in
/// descending IoU. Each side is consumed at most once.
pub fn match_one_to_one(
    gts: &[GtInstance],
    dets: &[Detection],
    dont_care_det: &[usize],
    cfg: &MatchConfig,
) -> MatchSet {
    let gt_active: Vec<bool> = gts.iter().map(|g| !g.dont_care).collect();
    let det_active = active_dets(dets, dont_care_det);
    let matched = greedy_one_to_one(gts, dets, &gt_active, &det_active, &gt_active, cfg);
    assemble(
        gts,
        dets,
        &gt_active,
        &det_active,
        matched,
        Vec::new(),
        Vec::new(),
    )
}

fn assemble(
    gts: &[GtInstance],
    dets: &[Detection],
    gt_active: &[bool],
    det_active: &[bool],
    matched: Vec<(usize, usize, PairScore)>,
    om_groups: Vec<(usize, Vec<usize>)>,
    mo_groups: Vec<(usize, Vec<usize>)>,
) -> MatchSet {
    let mut gt_used = vec![false; gts.len()];
    let mut det_used = vec![false; dets.len()];
    let mut set = MatchSet::default();
    for (gi, dj, score) in matched {
        gt_used[gi] = true;
        det_used[dj] = true;
        set.pairs.push(MatchedPair {
            gt: gts[gi].id,
            det: dets[dj].id,
            score,
        });
    }
    for (gi, djs) in om_groups {
        gt_used[gi] = true;
        djs.iter().for_each(|&j| det_used[j] = true);
        let mut ids: Vec<usize> = djs.iter().map(|&j| dets[j].id).collect();
        ids.sort_unstable();
        set.om_groups.push(OmGroup {
            gt: gts[gi].id,
            dets: ids,
        });
    }
    for (dj, gis) in mo_groups {
        det_used[dj] = true;
        gis.iter().for_each(|&i| gt_used[i] = true);
        let mut ids: Vec<usize> = gis.iter().map(|&i| gts[i].id).collect();
        ids.sort_unstable();
        set.mo_groups.push(MoGroup {
            det: dets[dj].id,
            gts: ids,
        });
    }
    for (gi, g) in gts.iter().enumerate() {
        if !gt_active[gi] {
            set.dont_care_gt.push(g.id);
        } else if !gt_used[gi] {
            set.unmatched_gt.push(g.id);
        }
    }
    for (dj, d) in dets.iter().enumerate() {
        if !det_active[dj] {
            set.dont_care_det.push(d.id);
        } else if !det_used[dj] {
            set.unmatched_det.push(d.id);
        }
    }
    set.canonicalize();
    set
}

/// Best IC03 match value per ground truth and per detection.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ic03Matches {
    /// `(gt id, best value)`
    pub gt_best: Vec<(usize, f64)>,
    /// `(det id, best value)`
    pub det_best: Vec<(usize, f64)>,
}

/// IC03 best-match values; a detection may serve several ground truths.
pub fn match_ic03(gts: &[GtInstance], dets: &[Detection], dont_care_det: &[usize]) -> Ic03Matches {
    let gt_active: Vec<bool> = gts.iter().map(|g| !g.dont_care).collect();
    let det_active = active_dets(dets, dont_care_det);
    let mut gt_best = vec![0.0f64; gts.len()];
    let mut det_best = vec![0.0f64; dets.len()];
    for (gi, g) in gts.iter().enumerate() {
        if !gt_active[gi] {
            continue;
        }
        for (dj, d) in dets.iter().enumerate() {
            if !det_active[dj] || !g.polygon.bbox().overlaps(&d.polygon.bbox()) {
                continue;
            }
            let v = crate::pair::ic03_match_value(&g.polygon, &d.polygon);
            gt_best[gi] = gt_best[gi].max(v);
            det_best[dj] = det_best[dj].max(v);
        }
    }
    let mut out = Ic03Matches {
        gt_best: gts
            .iter()
            .enumerate()
            .filter(|&(i, _)| gt_active[i])
            .map(|(i, g)| (g.id, gt_best[i]))
            .collect(),
        det_best: dets
            .iter()
            .enumerate()
            .filter(|&(j, _)| det_active[j])
            .map(|(j, d)| (d.id, det_best[j]))
            .collect(),
    };
    out.gt_best.sort_by_key(|e| e.0);
    out.det_best.sort_by_key(|e| e.0);
    out
}

/// DetEval matching: one-to-one, one-to-many and many-to-one stages run in
/// `cfg.order`, each item consumed by at most one stage.
///
/// One-to-many needs at least two detections, each with area precision
/// above `tp`, whose summed intersections cover the ground truth above
/// `tr`. Many-to-one needs at least two ground truths, each covered above
/// `tr`, whose summed intersections fill the detection above `tp`.
pub fn match_deteval(
    gts: &[GtInstance],
    dets: &[Detection],
    dont_care_det: &[usize],
    cfg: &MatchConfig,
) -> MatchSet {
    let gt_active: Vec<bool> = gts.iter().map(|g| !g.dont_care).collect();
    let det_active = active_dets(dets, dont_care_det);
    let (n, m) = (gts.len(), dets.len());
    let mut inter = vec![0.0f64; n * m];
    for (gi, g) in gts.iter().enumerate() {
        for (dj, d) in dets.iter().enumerate() {
            if gt_active[gi] && det_active[dj] {
                inter[gi * m + dj] = intersection_area(&g.polygon, &d.polygon).get();
            }
        }
    }
    let recall = |gi: usize, dj: usize| ratio(inter[gi * m + dj], gts[gi].polygon.area());
    let precision = |gi: usize, dj: usize| ratio(inter[gi * m + dj], dets[dj].polygon.area());
    let qualifies = |gi: usize, dj: usize| {
        cfg.passes(recall(gi, dj), cfg.tr) && cfg.passes(precision(gi, dj), cfg.tp)
    };

    let mut gt_free = gt_active.clone();
    let mut det_free = det_active.clone();
    let mut gt_order: Vec<usize> = (0..n).collect();
    gt_order.sort_by_key(|&i| gts[i].id);
    let mut det_order: Vec<usize> = (0..m).collect();
    det_order.sort_by_key(|&j| dets[j].id);

    let mut oo: Vec<(usize, usize, PairScore)> = Vec::new();
    let mut om: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut mo: Vec<(usize, Vec<usize>)> = Vec::new();

    let mut one_to_one = |gt_free: &mut Vec<bool>, det_free: &mut Vec<bool>| {
        for &gi in &gt_order {
            if !gt_free[gi] {
                continue;
            }
            let hits: Vec<usize> = det_order
                .iter()
                .copied()
                .filter(|&dj| det_free[dj] && qualifies(gi, dj))
                .collect();
            if hits.len() != 1 {
                continue;
            }
            let dj = hits[0];
            let rivals = gt_order
                .iter()
                .filter(|&&k| gt_free[k] && qualifies(k, dj))
                .count();
            if rivals == 1 {
                gt_free[gi] = false;
                det_free[dj] = false;
                oo.push((gi, dj, score_pair(gts, &gt_active, gi, &dets[dj].polygon)));
            }
        }
    };
    let mut one_to_many = |gt_free: &mut Vec<bool>, det_free: &mut Vec<bool>| {
        for &gi in &gt_order {
            if !gt_free[gi] {
                continue;
            }
            let parts: Vec<usize> = det_order
                .iter()
                .copied()
                .filter(|&dj| {
                    det_free[dj]
                        && inter[gi * m + dj] > 0.0
                        && cfg.passes(precision(gi, dj), cfg.tp)
                })
                .collect();
            if parts.len() < 2 {
                continue;
            }
            let covered: f64 = parts.iter().map(|&dj| inter[gi * m + dj]).sum();
            if cfg.passes(ratio(covered, gts[gi].polygon.area()), cfg.tr) {
                gt_free[gi] = false;
                parts.iter().for_each(|&dj| det_free[dj] = false);
                om.push((gi, parts));
            }
        }
    };
    let mut many_to_one = |gt_free: &mut Vec<bool>, det_free: &mut Vec<bool>| {
        for &dj in &det_order {
            if !det_free[dj] {
                continue;
            }
            let parts: Vec<usize> = gt_order
                .iter()
                .copied()
                .filter(|&gi| {
                    gt_free[gi] && inter[gi * m + dj] > 0.0 && cfg.passes(recall(gi, dj), cfg.tr)
                })
                .collect();
            if parts.len() < 2 {
                continue;
            }
            let filled: f64 = parts.iter().map(|&gi| inter[gi * m + dj]).sum();
            if cfg.passes(ratio(filled, dets[dj].polygon.area()), cfg.tp) {
                det_free[dj] = false;
                parts.iter().for_each(|&gi| gt_free[gi] = false);
                mo.push((dj, parts));
            }
        }
    };

    match cfg.order {
        MatchOrder::OneToOneFirst => {
            one_to_one(&mut gt_free, &mut det_free);
            one_to_many(&mut gt_free, &mut det_free);
            many_to_one(&mut gt_free, &mut det_free);
        }
        MatchOrder::ManyFirst => {
            one_to_many(&mut gt_free, &mut det_free);
            many_to_one(&mut gt_free, &mut det_free);
            one_to_one(&mut gt_free, &mut det_free);
        }
    }
    assemble(gts, dets, &gt_active, &det_active, oo, om, mo)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}
