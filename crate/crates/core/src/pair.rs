//! Scores for a single (ground truth, detection) pair.

use serde::{Deserialize, Serialize};

use crate::geometry::{intersection_area, outlier_area, Polygon, RegionArea};

/// Everything the aggregators need to know about one matched pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub iou: f64,
    pub intersection: RegionArea,
    /// Part of the ground truth the detection misses.
    pub ct: RegionArea,
    /// Part of the detection covered by other ground truth, outside the target.
    pub ot: RegionArea,
    pub tiou_recall: f64,
    pub tiou_precision: f64,
}

impl PairScore {
    /// Scores `d` against `g`; `others` are the remaining cared-for ground
    /// truth regions of the image (the target and don't-care regions excluded).
    pub fn compute(g: &Polygon, d: &Polygon, others: &[&Polygon]) -> PairScore {
        let inter = intersection_area(g, d).get();
        let union = g.area() + d.area() - inter;
        let ct = snap(g.area() - inter, g.area());
        let ot = if inter > 0.0 {
            snap(outlier_area(d, g, others).get(), d.area())
        } else {
            0.0
        };
        let iou = ratio(inter, union);
        PairScore {
            iou,
            intersection: RegionArea::new(inter),
            ct: RegionArea::new(ct),
            ot: RegionArea::new(ot),
            tiou_recall: tightness_ratio(inter, ct, g.area(), union).min(iou),
            tiou_precision: tightness_ratio(inter, ot, d.area(), union).min(iou),
        }
    }
}

/// Residues below the boolean engine's tolerance are cancellation noise.
fn snap(area: f64, scale: f64) -> f64 {
    if area <= SNAP_TOLERANCE * scale {
        0.0
    } else {
        area
    }
}

const SNAP_TOLERANCE: f64 = 1e-12;

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// `inter * (1 - penalty / base) / union`
fn tightness_ratio(inter: f64, penalty: f64, base: f64, union: f64) -> f64 {
    if union <= 0.0 || base <= 0.0 {
        return 0.0;
    }
    let f = 1.0 - penalty / base;
    (inter * f.clamp(0.0, 1.0) / union).clamp(0.0, 1.0)
}

pub fn iou(g: &Polygon, d: &Polygon) -> f64 {
    let inter = intersection_area(g, d).get();
    ratio(inter, g.area() + d.area() - inter)
}

/// IoU discounted by the fraction of `g` that `d` fails to cover.
pub fn tiou_recall(g: &Polygon, d: &Polygon) -> f64 {
    PairScore::compute(g, d, &[]).tiou_recall
}

/// IoU discounted by the fraction of `d` covered by other ground truth
/// lying outside `g`.
pub fn tiou_precision(g: &Polygon, d: &Polygon, others: &[&Polygon]) -> f64 {
    PairScore::compute(g, d, others).tiou_precision
}

/// `(area(g ∩ d) / area(g), area(g ∩ d) / area(d))`
pub fn coverage_ratios(g: &Polygon, d: &Polygon) -> (f64, f64) {
    let inter = intersection_area(g, d).get();
    (ratio(inter, g.area()), ratio(inter, d.area()))
}

/// `2 · area(a ∩ b) / (area(a) + area(b))`
pub fn ic03_match_value(a: &Polygon, b: &Polygon) -> f64 {
    let inter = intersection_area(a, b).get();
    ratio(2.0 * inter, a.area() + b.area())
}
