//! Synthetic scenes with known answers.
//!
//! The constructions are axis-aligned so their areas have closed forms;
//! rotated variants come from rotating a solved scene, which preserves
//! every area. Random scenes are driven by a seeded ChaCha stream, so the
//! same seed always gives the same scenes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::MetricId;
use crate::annotation::{
    format_detection_file, format_gt_file, format_line_file, format_membership, AnnotationError,
    CoordFormat, DetLayout, Detection, GtInstance, ImageRecord, KeyPattern, DEFAULT_SENTINEL,
};
use crate::eval::{evaluate_records, EvalOptions};
use crate::geometry::{GeometryError, Point, Polygon};
use crate::joint::build_line_index;
use crate::matching::MatchConfig;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("construction needs an axis-aligned rectangle, got {0}")]
    NotAxisAligned(String),
    #[error(
        "cut fraction {cut} cannot reach IoU {target}; the most a shifted box achieves is {max}"
    )]
    Infeasible { cut: f64, target: f64, max: f64 },
    #[error("{name} must lie in {range}, got {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
    #[error("over-segmentation needs at least 2 slices, got {0}")]
    TooFewSlices(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn rect_bounds(gt: &Polygon) -> Result<(f64, f64, f64, f64), HarnessError> {
    if !gt.is_axis_aligned_rect() {
        return Err(HarnessError::NotAxisAligned(gt.to_string()));
    }
    let b = gt.bbox();
    Ok((b.min.x, b.min.y, b.max.x, b.max.y))
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Polygon, HarnessError> {
    Ok(Polygon::rect(x0, y0, x1, y1)?)
}

/// Detection that misses the left `cut_fraction` of `gt` and extends past
/// its right edge.
///
/// Without a target the box keeps the ground truth's width, giving IoU
/// `(1 - c) / (1 + c)`. With a target IoU `t` the width becomes
/// `(1 - c) w / t - c w`, which must be at least `w`.
pub fn make_cut_detection(
    gt: &Polygon,
    cut_fraction: f64,
    target_iou: Option<f64>,
) -> Result<Polygon, HarnessError> {
    let (x0, y0, x1, y1) = rect_bounds(gt)?;
    if !(0.0..1.0).contains(&cut_fraction) {
        return Err(HarnessError::OutOfRange {
            name: "cut fraction",
            range: "[0, 1)",
            value: cut_fraction,
        });
    }
    let w = x1 - x0;
    let c = cut_fraction;
    let width = match target_iou {
        None => w,
        Some(t) => {
            let max = (1.0 - c) / (1.0 + c);
            if !(t > 0.0 && t <= 1.0) {
                return Err(HarnessError::OutOfRange {
                    name: "target IoU",
                    range: "(0, 1]",
                    value: t,
                });
            }
            if t > max * (1.0 + 1e-12) {
                return Err(HarnessError::Infeasible {
                    cut: c,
                    target: t,
                    max,
                });
            }
            ((1.0 - c) * w / t - c * w).max(w)
        }
    };
    let start = x0 + c * w;
    rect(start, y0, start + width, y1)
}

/// Ground truth extended to the right until IoU equals `target_iou`.
fn pure_detection(gt: &Polygon, target_iou: f64) -> Result<Polygon, HarnessError> {
    let (x0, y0, x1, y1) = rect_bounds(gt)?;
    rect(x0, y0, x0 + (x1 - x0) / target_iou, y1)
}

/// Four scenes whose main detection has the same IoU against `gt`:
/// `cutting`, `pure` (detection contains the ground truth), `outlier`
/// (pure, overlapping a neighbouring ground truth) and `cutting-outlier`.
///
/// Every scene also holds that neighbour with a perfect detection of its
/// own, so binary IoU scores are identical across the four.
pub fn make_equal_iou_quartet(
    gt: &Polygon,
    iou_target: f64,
) -> Result<Vec<ImageRecord>, HarnessError> {
    if !(iou_target > 0.5 && iou_target < 1.0) {
        return Err(HarnessError::OutOfRange {
            name: "IoU target",
            range: "(0.5, 1)",
            value: iou_target,
        });
    }
    let (x0, y0, x1, y1) = rect_bounds(gt)?;
    let w = x1 - x0;
    let cut = (1.0 - iou_target) / (1.0 + iou_target);
    let cut_det = make_cut_detection(gt, cut, Some(iou_target))?;
    let pure_det = pure_detection(gt, iou_target)?;
    let far = x1 + 2.0 * w / iou_target;
    // the neighbour starts halfway through the detection's overhang
    let beside = |det: &Polygon| -> Result<Polygon, HarnessError> {
        let overhang = det.bbox().max.x - x1;
        rect(x1 + overhang / 2.0, y0, x1 + overhang / 2.0 + w, y1)
    };
    let scenes = [
        ("cutting", cut_det.clone(), rect(far, y0, far + w, y1)?),
        ("pure", pure_det.clone(), rect(far, y0, far + w, y1)?),
        ("outlier", pure_det.clone(), beside(&pure_det)?),
        ("cutting-outlier", cut_det.clone(), beside(&cut_det)?),
    ];
    Ok(scenes
        .into_iter()
        .map(|(key, det, neighbour)| {
            ImageRecord::new(
                key,
                vec![
                    GtInstance::word(0, gt.clone(), Some("target".into())),
                    GtInstance::word(1, neighbour.clone(), Some("neighbour".into())),
                ],
                vec![
                    Detection::new(0, det).with_confidence(1.0),
                    Detection::new(1, neighbour).with_confidence(1.0),
                ],
            )
        })
        .collect())
}

/// `k` abutting vertical slices tiling `gt`.
pub fn make_oversegmentation(gt: &Polygon, k: usize) -> Result<Vec<Polygon>, HarnessError> {
    if k < 2 {
        return Err(HarnessError::TooFewSlices(k));
    }
    let (x0, y0, x1, y1) = rect_bounds(gt)?;
    let w = x1 - x0;
    (0..k)
        .map(|i| {
            let a = x0 + w * i as f64 / k as f64;
            let b = if i + 1 == k {
                x1
            } else {
                x0 + w * (i + 1) as f64 / k as f64
            };
            rect(a, y0, b, y1)
        })
        .collect()
}

/// One ground truth split into `k` slices plus `false_positives` boxes
/// far away from it.
pub fn oversegmentation_scene(
    k: usize,
    false_positives: usize,
) -> Result<ImageRecord, HarnessError> {
    let gt = rect(0.0, 0.0, 200.0, 20.0)?;
    let mut dets: Vec<Detection> = make_oversegmentation(&gt, k)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| Detection::new(i, p).with_confidence(1.0))
        .collect();
    for f in 0..false_positives {
        let x = 400.0 + 60.0 * f as f64;
        dets.push(
            Detection::new(dets.len(), rect(x, 100.0, x + 40.0, 120.0)?).with_confidence(0.5),
        );
    }
    Ok(ImageRecord::new(
        "oversegmentation",
        vec![GtInstance::word(0, gt, Some("word".into()))],
        dets,
    ))
}

/// Two words, a tight box on the first and a long box over both.
///
/// Running one-to-one first pairs the tight box with the first word, which
/// leaves the long box a single uncovered word and blocks its many-to-one
/// match. Running many-to-one first gives both words to the long box and
/// leaves the tight box unmatched.
pub fn order_pathology_scene() -> Result<ImageRecord, HarnessError> {
    let g0 = rect(0.0, 0.0, 40.0, 20.0)?;
    let g1 = rect(50.0, 0.0, 90.0, 20.0)?;
    Ok(ImageRecord::new(
        "order-pathology",
        vec![
            GtInstance::word(0, g0.clone(), Some("left".into())),
            GtInstance::word(1, g1, Some("right".into())),
        ],
        vec![
            Detection::new(0, g0).with_confidence(1.0),
            Detection::new(1, rect(0.0, -10.0, 90.0, 30.0)?).with_confidence(1.0),
        ],
    ))
}

/// A line-level ground truth overlapping two word-level ones, each word
/// detected exactly.
///
/// One-to-many first hands both detections to the line; one-to-one first
/// matches each word with its own detection.
pub fn nested_annotation_scene() -> Result<ImageRecord, HarnessError> {
    let left = rect(0.0, 0.0, 50.0, 20.0)?;
    let right = rect(50.0, 0.0, 100.0, 20.0)?;
    Ok(ImageRecord::new(
        "nested-annotation",
        vec![
            GtInstance::word(0, rect(0.0, 0.0, 100.0, 20.0)?, Some("line".into())),
            GtInstance::word(1, left.clone(), Some("left".into())),
            GtInstance::word(2, right.clone(), Some("right".into())),
        ],
        vec![
            Detection::new(0, left).with_confidence(1.0),
            Detection::new(1, right).with_confidence(1.0),
        ],
    ))
}

/// Line `(0,0)-(200,20)` over words `(0,0)-(90,20)` and `(110,0)-(200,20)`
/// with a single detection.
pub fn two_word_line_scene(key: &str, det: Polygon) -> Result<ImageRecord, HarnessError> {
    let words = vec![
        GtInstance::word(0, rect(0.0, 0.0, 90.0, 20.0)?, Some("first".into())),
        GtInstance::word(1, rect(110.0, 0.0, 200.0, 20.0)?, Some("second".into())),
    ];
    let index = build_line_index(&words, &[rect(0.0, 0.0, 200.0, 20.0)?]).expect("disjoint words");
    let mut record = ImageRecord::new(
        key,
        words,
        vec![Detection::new(0, det).with_confidence(1.0)],
    );
    record.lines = index.lines;
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbKind {
    Cut,
    Dilate,
    Outlier,
    Oversegment,
}

/// A degradation applied to one ground-truth rectangle. `magnitude` is a
/// fraction in (0, 1) except for `Oversegment`, where it is the slice
/// count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub kind: PerturbKind,
    pub magnitude: f64,
    pub seed: u64,
}

/// Detections produced by `perturbation` on `gt`. The seed picks the side that is
/// cut or extended.
pub fn perturb(gt: &Polygon, perturbation: &PerturbSpec) -> Result<Vec<Polygon>, HarnessError> {
    let (x0, y0, x1, y1) = rect_bounds(gt)?;
    let (w, h) = (x1 - x0, y1 - y0);
    let m = perturbation.magnitude;
    if perturbation.kind == PerturbKind::Oversegment {
        if m.fract() != 0.0 || m < 2.0 {
            return Err(HarnessError::TooFewSlices(m.max(0.0) as usize));
        }
        return make_oversegmentation(gt, m as usize);
    }
    if !(m > 0.0 && m < 1.0) {
        return Err(HarnessError::OutOfRange {
            name: "perturbation magnitude",
            range: "(0, 1)",
            value: m,
        });
    }
    let left = ChaCha8Rng::seed_from_u64(perturbation.seed).random::<bool>();
    let p = match perturbation.kind {
        PerturbKind::Cut => {
            let d = make_cut_detection(gt, m, None)?;
            if left {
                d.translate(-2.0 * m * w, 0.0)?
            } else {
                d
            }
        }
        PerturbKind::Dilate => rect(
            x0 - m * w / 2.0,
            y0 - m * h / 2.0,
            x1 + m * w / 2.0,
            y1 + m * h / 2.0,
        )?,
        PerturbKind::Outlier if left => rect(x0 - m * w, y0, x1, y1)?,
        PerturbKind::Outlier => rect(x0, y0, x1 + m * w, y1)?,
        PerturbKind::Oversegment => unreachable!("handled above"),
    };
    Ok(vec![p])
}

/// Rotates every polygon of a scene about `center`.
pub fn rotate_scene(
    record: &ImageRecord,
    angle: f64,
    center: Point,
) -> Result<ImageRecord, HarnessError> {
    let turn = |p: &Polygon| p.rotate(angle, center);
    let mut out = record.clone();
    for g in &mut out.gts {
        g.polygon = turn(&g.polygon)?;
    }
    for d in &mut out.dets {
        d.polygon = turn(&d.polygon)?;
    }
    for l in &mut out.lines {
        l.polygon = turn(&l.polygon)?;
    }
    Ok(out)
}

/// Simple quadrilateral with vertices at increasing angles around a
/// center inside `[0, extent]²`; may be non-convex.
pub fn random_quad(rng: &mut impl Rng, extent: f64) -> Polygon {
    loop {
        let cx = rng.random_range(0.2 * extent..0.8 * extent);
        let cy = rng.random_range(0.2 * extent..0.8 * extent);
        let mut angles: Vec<f64> = (0..4)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        let pts = angles
            .iter()
            .map(|&a| {
                let r = rng.random_range(0.05 * extent..0.3 * extent);
                Point::new(cx + r * a.cos(), cy + r * a.sin())
            })
            .collect();
        if let Ok(p) = Polygon::new(pts) {
            if p.area() > 1e-3 * extent * extent {
                return p;
            }
        }
    }
}

fn jitter_quad(rng: &mut impl Rng, p: &Polygon, amount: f64) -> Option<Polygon> {
    let pts = p
        .vertices()
        .iter()
        .map(|v| {
            Point::new(
                v.x + rng.random_range(-amount..=amount),
                v.y + rng.random_range(-amount..=amount),
            )
        })
        .collect();
    Polygon::new(pts).ok()
}

/// A random word-level scene: rows of words, some don't-care, detected
/// perfectly, jittered, cut, dilated, extended, split, merged or missed,
/// plus stray false positives. Every detection carries a confidence and
/// most carry a transcription.
pub fn random_scene(rng: &mut impl Rng, key: &str) -> ImageRecord {
    let mut gts = Vec::new();
    let rows = rng.random_range(1..=3);
    for row in 0..rows {
        let y = 10.0 + 70.0 * row as f64;
        let h = rng.random_range(16.0..40.0_f64).round();
        let mut x = rng.random_range(0.0..30.0_f64).round();
        for _ in 0..rng.random_range(1..=3) {
            let w = rng.random_range(30.0..140.0_f64).round();
            let id = gts.len();
            let poly = Polygon::rect(x, y, x + w, y + h).expect("positive size");
            if rng.random_bool(0.12) {
                gts.push(GtInstance::dont_care(id, poly));
            } else {
                gts.push(GtInstance::word(id, poly, Some(format!("w{id}"))));
            }
            x += w + rng.random_range(4.0..40.0_f64).round();
        }
    }
    let mut polys: Vec<(Polygon, Option<String>)> = Vec::new();
    for g in &gts {
        let text = g.transcription.clone().filter(|_| rng.random_bool(0.8));
        let perturbation = |kind, magnitude, rng: &mut dyn RngCore| PerturbSpec {
            kind,
            magnitude,
            seed: rng.next_u64(),
        };
        let roll: f64 = rng.random();
        let made: Vec<Polygon> = if roll < 0.25 {
            vec![g.polygon.clone()]
        } else if roll < 0.4 {
            jitter_quad(rng, &g.polygon, 3.0).into_iter().collect()
        } else if roll < 0.55 {
            let s = perturbation(PerturbKind::Cut, rng.random_range(0.02..0.35), rng);
            perturb(&g.polygon, &s).unwrap_or_default()
        } else if roll < 0.67 {
            let s = perturbation(PerturbKind::Dilate, rng.random_range(0.02..0.5), rng);
            perturb(&g.polygon, &s).unwrap_or_default()
        } else if roll < 0.8 {
            let s = perturbation(PerturbKind::Outlier, rng.random_range(0.05..0.6), rng);
            perturb(&g.polygon, &s).unwrap_or_default()
        } else if roll < 0.88 {
            let s = perturbation(
                PerturbKind::Oversegment,
                rng.random_range(2..=4) as f64,
                rng,
            );
            perturb(&g.polygon, &s).unwrap_or_default()
        } else {
            Vec::new()
        };
        polys.extend(made.into_iter().map(|p| (p, text.clone())));
    }
    // a box merging two neighbouring words
    if gts.len() >= 2 && rng.random_bool(0.2) {
        let i = rng.random_range(0..gts.len() - 1);
        let b = gts[i].polygon.bbox().union(&gts[i + 1].polygon.bbox());
        polys.push((
            Polygon::rect(b.min.x, b.min.y, b.max.x, b.max.y).expect("positive size"),
            None,
        ));
    }
    for _ in 0..rng.random_range(0..=2) {
        let x = rng.random_range(0.0..500.0_f64).round();
        let y = rng.random_range(0.0..250.0_f64).round();
        let w = rng.random_range(10.0..80.0_f64).round();
        let h = rng.random_range(10.0..30.0_f64).round();
        polys.push((
            Polygon::rect(x, y, x + w, y + h).expect("positive size"),
            Some("noise".into()),
        ));
    }
    let dets = polys
        .into_iter()
        .enumerate()
        .map(|(i, (p, text))| {
            let d = Detection::new(i, p).with_confidence(rng.random_range(0.0..=1.0));
            match text {
                Some(t) => d.with_transcription(t),
                None => d,
            }
        })
        .collect();
    let record = ImageRecord::new(key, gts, dets);
    if rng.random_bool(0.25) {
        let angle = rng.random_range(-0.6..0.6);
        rotate_scene(&record, angle, Point::new(150.0, 100.0)).unwrap_or(record)
    } else {
        record
    }
}

/// Rows of text lines with two to four words each, every word under 45%
/// of its line. With `line_detections` each line gets one slightly
/// dilated box; otherwise words get their own boxes (exact, cut or
/// missing) and no box can match a whole line.
pub fn random_line_scene(rng: &mut impl Rng, key: &str, line_detections: bool) -> ImageRecord {
    let mut words = Vec::new();
    let mut line_polys = Vec::new();
    for row in 0..rng.random_range(1..=3) {
        let y = 10.0 + 60.0 * row as f64;
        let h = rng.random_range(18.0..30.0_f64).round();
        let (x0, spans) = loop {
            let n = rng.random_range(2..=4);
            let mut x = rng.random_range(0.0..40.0_f64).round();
            let x0 = x;
            let mut spans = Vec::new();
            for _ in 0..n {
                let w = rng.random_range(40.0..100.0_f64).round();
                spans.push((x, x + w));
                x += w + rng.random_range(8.0..20.0_f64).round();
            }
            let total = spans.last().map(|s| s.1).unwrap_or(x0) - x0;
            if spans.iter().all(|(a, b)| (b - a) / total < 0.45) {
                break (x0, spans);
            }
        };
        let x1 = spans.last().expect("two or more words").1;
        for (a, b) in spans {
            let id = words.len();
            words.push(GtInstance::word(
                id,
                Polygon::rect(a, y, b, y + h).expect("positive size"),
                Some(format!("w{id}")),
            ));
        }
        line_polys.push(Polygon::rect(x0, y, x1, y + h).expect("positive size"));
    }
    let mut dets = Vec::new();
    if line_detections {
        for l in &line_polys {
            let b = l.bbox();
            let pad = rng.random_range(0.0..3.0_f64).round();
            let p = Polygon::rect(b.min.x - pad, b.min.y - pad, b.max.x + pad, b.max.y + pad)
                .expect("positive size");
            dets.push(Detection::new(dets.len(), p).with_confidence(rng.random_range(0.0..=1.0)));
        }
    } else {
        for w in &words {
            let roll: f64 = rng.random();
            let p = if roll < 0.5 {
                Some(w.polygon.clone())
            } else if roll < 0.8 {
                make_cut_detection(&w.polygon, rng.random_range(0.02..0.3), None).ok()
            } else {
                None
            };
            if let Some(p) = p {
                dets.push(
                    Detection::new(dets.len(), p).with_confidence(rng.random_range(0.0..=1.0)),
                );
            }
        }
        let x = rng.random_range(600.0..700.0_f64).round();
        dets.push(
            Detection::new(
                dets.len(),
                Polygon::rect(x, 0.0, x + 30.0, 20.0).expect("positive size"),
            )
            .with_confidence(0.1),
        );
    }
    let index = build_line_index(&words, &line_polys).expect("lines do not share words");
    let mut record = ImageRecord::new(key, words, dets);
    record.lines = index.lines;
    record
}

/// The fixed demonstration scenes followed by `random` random word scenes
/// and `lines` line scenes of each kind, all from one seeded stream.
pub fn synthetic_corpus(
    seed: u64,
    random: usize,
    lines: usize,
) -> Result<Vec<ImageRecord>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gt = rect(0.0, 0.0, 100.0, 20.0)?;
    let mut out = make_equal_iou_quartet(&gt, 2.0 / 3.0)?;
    out.push(oversegmentation_scene(20, 3)?);
    out.push(order_pathology_scene()?);
    out.push(nested_annotation_scene()?);
    out.push(two_word_line_scene(
        "line-partial",
        rect(0.0, 0.0, 150.0, 20.0)?,
    )?);
    for i in 0..random {
        out.push(random_scene(&mut rng, &format!("random-{i:04}")));
    }
    for i in 0..lines {
        out.push(random_line_scene(&mut rng, &format!("lines-{i:04}"), true));
        out.push(random_line_scene(&mut rng, &format!("words-{i:04}"), false));
    }
    Ok(out)
}

/// Directories written by [`dump_scenes`].
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDirs {
    pub gt: PathBuf,
    pub det: PathBuf,
    pub lines: Option<PathBuf>,
    pub det_layout: DetLayout,
}

/// Writes scenes as `gt/gt_img_<key>.txt`, `det/res_img_<key>.txt` and,
/// when any scene has text lines, `lines/gt_img_<key>.txt` with a
/// `.members` sidecar. Coordinates use the quad format; the detection
/// layout includes confidences when every detection has one.
pub fn dump_scenes(records: &[ImageRecord], root: &Path) -> Result<SceneDirs, HarnessError> {
    let all_conf = records
        .iter()
        .flat_map(|r| &r.dets)
        .all(|d| d.confidence.is_some());
    let layout = DetLayout {
        coords: CoordFormat::Icdar15Quad,
        confidence: all_conf,
        transcription: true,
    };
    let gt_pat = KeyPattern::new("gt_img_{key}.txt")?;
    let det_pat = KeyPattern::new("res_img_{key}.txt")?;
    let dirs = SceneDirs {
        gt: root.join("gt"),
        det: root.join("det"),
        lines: records
            .iter()
            .any(|r| !r.lines.is_empty())
            .then(|| root.join("lines")),
        det_layout: layout,
    };
    let write = |path: PathBuf, text: String| {
        fs::write(&path, text).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    for dir in [Some(&dirs.gt), Some(&dirs.det), dirs.lines.as_ref()]
        .into_iter()
        .flatten()
    {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.key.as_str()) {
            return Err(AnnotationError::Duplicate {
                name: r.key.clone(),
                path: root.display().to_string(),
            }
            .into());
        }
        write(
            dirs.gt.join(gt_pat.file_name(&r.key)),
            format_gt_file(&r.gts, CoordFormat::Icdar15Quad, DEFAULT_SENTINEL)?,
        )?;
        write(
            dirs.det.join(det_pat.file_name(&r.key)),
            format_detection_file(&r.dets, layout)?,
        )?;
        if let (Some(dir), false) = (&dirs.lines, r.lines.is_empty()) {
            let polys: Vec<&Polygon> = r.lines.iter().map(|l| &l.polygon).collect();
            let members: Vec<&[usize]> = r.lines.iter().map(|l| l.members.as_slice()).collect();
            write(
                dir.join(gt_pat.file_name(&r.key)),
                format_line_file(&polys, CoordFormat::Icdar15Quad)?,
            )?;
            write(
                dir.join(gt_pat.sidecar_name(&r.key)),
                format_membership(&members),
            )?;
        }
    }
    Ok(dirs)
}

/// F-scores of one scene under five protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scene: String,
    pub iou_f: f64,
    pub siou_f: f64,
    pub tiou_f: f64,
    pub deteval_f: f64,
    pub ic03_f: f64,
}

/// Evaluates each scene on its own. The DetEval column runs one-to-many
/// and many-to-one before one-to-one.
pub fn compare_metrics(scenes: &[ImageRecord], cfg: &MatchConfig) -> Vec<ComparisonRow> {
    let opts = EvalOptions {
        matching: *cfg,
        ..EvalOptions::with_metrics([
            MetricId::Iou,
            MetricId::Siou,
            MetricId::Tiou,
            MetricId::DetevalDetevalOrder,
            MetricId::Ic03,
        ])
    };
    scenes
        .iter()
        .map(|s| {
            let r = evaluate_records(std::slice::from_ref(s), &opts)
                .expect("no average precision requested");
            let f = |m: MetricId| r.summaries[&m].hmean;
            ComparisonRow {
                scene: s.key.clone(),
                iou_f: f(MetricId::Iou),
                siou_f: f(MetricId::Siou),
                tiou_f: f(MetricId::Tiou),
                deteval_f: f(MetricId::DetevalDetevalOrder),
                ic03_f: f(MetricId::Ic03),
            }
        })
        .collect()
}

pub fn format_comparison(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<20} {:>7} {:>7} {:>7} {:>9} {:>7}\n",
        "scene", "IoU-F", "SIoU-F", "TIoU-F", "DetEval-F", "IC03-F"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:>7.4} {:>7.4} {:>7.4} {:>9.4} {:>7.4}\n",
            r.scene, r.iou_f, r.siou_f, r.tiou_f, r.deteval_f, r.ic03_f
        ));
    }
    out
}
