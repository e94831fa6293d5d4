//! Joint word and text-line evaluation.
//!
//! Detections are first tried against text-line annotations. A detection
//! matching a line credits each member word it covers by at least half;
//! credited words leave the word-level pass, which then runs as ordinary
//! one-to-one matching on whatever is left.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{Detection, GtInstance};
use crate::geometry::{intersection_area, Polygon};
use crate::matching::{
    filter_dont_care, greedy_one_to_one, LineMatch, MatchConfig, MatchSet, MatchedPair, WordCredit,
};
use crate::pair::PairScore;

/// Fraction of a word that must lie inside a line for membership.
pub const MEMBERSHIP_OVERLAP: f64 = 0.5;
/// Fraction of a member word a line detection must cover to recall it.
pub const WORD_COVERAGE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineAnnotation {
    pub id: usize,
    pub polygon: Polygon,
    /// Ids of the cared-for words on this line, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JointError {
    #[error("word {word} belongs to text lines {first} and {second}")]
    SharedWord {
        word: usize,
        first: usize,
        second: usize,
    },
    #[error("text line {line} lists unknown word id {word}")]
    UnknownWord { line: usize, word: usize },
    #[error("membership sidecar lists {found} lines but the line file has {expected}")]
    MembershipCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineIndex {
    pub lines: Vec<LineAnnotation>,
    pub warnings: Vec<String>,
}

/// Assigns each cared-for word to the line containing more than half of
/// it. Lines with fewer than two members are dropped with a warning; the
/// remaining lines are numbered densely in input order.
pub fn build_line_index(words: &[GtInstance], lines: &[Polygon]) -> Result<LineIndex, JointError> {
    let members: Vec<Vec<usize>> = lines
        .iter()
        .map(|line| {
            words
                .iter()
                .filter(|w| {
                    !w.dont_care
                        && w.polygon.area() > 0.0
                        && line.bbox().overlaps(&w.polygon.bbox())
                        && intersection_area(line, &w.polygon).get() / w.polygon.area()
                            > MEMBERSHIP_OVERLAP
                })
                .map(|w| w.id)
                .collect()
        })
        .collect();
    finish_index(words, lines, members)
}

/// Uses explicit membership lists instead of geometric assignment.
/// Don't-care members are removed with a warning.
pub fn line_index_from_membership(
    words: &[GtInstance],
    lines: &[Polygon],
    members: &[Vec<usize>],
) -> Result<LineIndex, JointError> {
    if members.len() != lines.len() {
        return Err(JointError::MembershipCount {
            expected: lines.len(),
            found: members.len(),
        });
    }
    for (line, ids) in members.iter().enumerate() {
        if let Some(&word) = ids.iter().find(|&&id| !words.iter().any(|w| w.id == id)) {
            return Err(JointError::UnknownWord { line, word });
        }
    }
    finish_index(words, lines, members.to_vec())
}

fn finish_index(
    words: &[GtInstance],
    lines: &[Polygon],
    members: Vec<Vec<usize>>,
) -> Result<LineIndex, JointError> {
    let mut index = LineIndex::default();
    let mut owner: Vec<Option<usize>> =
        vec![None; words.iter().map(|w| w.id + 1).max().unwrap_or(0)];
    for (pos, (polygon, mut ids)) in lines.iter().zip(members).enumerate() {
        ids.sort_unstable();
        ids.dedup();
        let before = ids.len();
        ids.retain(|id| words.iter().any(|w| w.id == *id && !w.dont_care));
        if ids.len() < before {
            index.warnings.push(format!(
                "text line {pos}: don't-care words removed from its members"
            ));
        }
        for &id in &ids {
            if let Some(first) = owner[id] {
                return Err(JointError::SharedWord {
                    word: id,
                    first,
                    second: pos,
                });
            }
            owner[id] = Some(pos);
        }
        if ids.len() < 2 {
            index.warnings.push(format!(
                "text line {pos} dropped: it contains {} word(s), at least 2 needed",
                ids.len()
            ));
            continue;
        }
        index.lines.push(LineAnnotation {
            id: index.lines.len(),
            polygon: polygon.clone(),
            members: ids,
        });
    }
    Ok(index)
}

/// Evaluates one image with line annotations.
///
/// `dont_care_det` are the detections already set aside against the
/// image's don't-care words. The returned set carries line matches in
/// `line_matches` and word-level pairs in `pairs`; `num_gt` counts the
/// original cared-for words and `num_det` the detections that were never
/// set aside.
pub fn evaluate_joint(
    words: &[GtInstance],
    lines: &[LineAnnotation],
    dets: &[Detection],
    dont_care_det: &[usize],
    cfg: &MatchConfig,
) -> MatchSet {
    let word_pos = |id: usize| words.iter().position(|w| w.id == id);
    let mut det_order: Vec<usize> = (0..dets.len()).collect();
    det_order.sort_by_key(|&j| dets[j].id);
    let mut det_free: Vec<bool> = dets
        .iter()
        .map(|d| !dont_care_det.contains(&d.id))
        .collect();
    let mut recalled = vec![false; words.len()];
    let mut line_matches = Vec::new();

    // stage 1: detections against text lines
    for &dj in &det_order {
        if !det_free[dj] {
            continue;
        }
        let d = &dets[dj].polygon;
        let mut best: Option<(usize, f64)> = None;
        for (li, line) in lines.iter().enumerate() {
            if !line.polygon.bbox().overlaps(&d.bbox()) {
                continue;
            }
            let iou = crate::pair::iou(&line.polygon, d);
            if cfg.passes(iou, cfg.iou_threshold) && best.is_none_or(|(_, b)| iou > b) {
                best = Some((li, iou));
            }
        }
        let Some((li, _)) = best else { continue };
        let line = &lines[li];
        let others: Vec<&Polygon> = words
            .iter()
            .filter(|w| !w.dont_care && !line.members.contains(&w.id))
            .map(|w| &w.polygon)
            .collect();
        let score = PairScore::compute(&line.polygon, d, &others);
        let t_area = line.polygon.area();
        let credit = score.intersection.get() * (1.0 - score.ct.get() / t_area) / t_area;
        let mut credits = Vec::new();
        for &wid in &line.members {
            let Some(wi) = word_pos(wid) else { continue };
            if recalled[wi] {
                continue;
            }
            let w = &words[wi].polygon;
            let coverage = intersection_area(w, d).get() / w.area();
            if coverage >= WORD_COVERAGE {
                recalled[wi] = true;
                credits.push(WordCredit {
                    word: wid,
                    coverage,
                    recall: credit.clamp(0.0, 1.0),
                });
            }
        }
        det_free[dj] = false;
        line_matches.push(LineMatch {
            line: line.id,
            det: dets[dj].id,
            score,
            recalled: credits,
        });
    }

    // stage 2: set aside detections that mostly cover recalled words
    let recalled_regions: Vec<&Polygon> = words
        .iter()
        .zip(&recalled)
        .filter(|(_, &r)| r)
        .map(|(w, _)| &w.polygon)
        .collect();
    let mut dont_care_ids: Vec<usize> = dont_care_det.to_vec();
    if !recalled_regions.is_empty() {
        let free: Vec<Detection> = dets
            .iter()
            .zip(&det_free)
            .filter(|(_, &f)| f)
            .map(|(d, _)| d.clone())
            .collect();
        for id in filter_dont_care(&free, &recalled_regions, cfg.dont_care_overlap) {
            if let Some(j) = dets.iter().position(|d| d.id == id) {
                det_free[j] = false;
            }
            dont_care_ids.push(id);
        }
    }

    // stage 3: ordinary word-level matching on what is left
    let gt_active: Vec<bool> = words
        .iter()
        .zip(&recalled)
        .map(|(w, &r)| !w.dont_care && !r)
        .collect();
    let matched = greedy_one_to_one(words, dets, &gt_active, &det_free, &gt_active, cfg);

    let mut set = MatchSet {
        line_matches,
        ..MatchSet::default()
    };
    let mut gt_used = recalled.clone();
    for (gi, dj, score) in matched {
        gt_used[gi] = true;
        det_free[dj] = false;
        set.pairs.push(MatchedPair {
            gt: words[gi].id,
            det: dets[dj].id,
            score,
        });
    }
    for (wi, w) in words.iter().enumerate() {
        if w.dont_care {
            set.dont_care_gt.push(w.id);
        } else if !gt_used[wi] {
            set.unmatched_gt.push(w.id);
        }
    }
    set.unmatched_det = dets
        .iter()
        .zip(&det_free)
        .filter(|(_, &f)| f)
        .map(|(d, _)| d.id)
        .collect();
    set.dont_care_det = dont_care_ids;
    set.canonicalize();
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{dont_care_detections, match_one_to_one};

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::rect(x0, y0, x1, y1).unwrap()
    }

    fn two_word_scene() -> (Vec<GtInstance>, Vec<LineAnnotation>) {
        let words = vec![
            GtInstance::word(0, rect(0.0, 0.0, 90.0, 20.0), Some("W1".into())),
            GtInstance::word(1, rect(110.0, 0.0, 200.0, 20.0), Some("W2".into())),
        ];
        let index = build_line_index(&words, &[rect(0.0, 0.0, 200.0, 20.0)]).unwrap();
        (words, index.lines)
    }

    #[test]
    fn membership_by_overlap() {
        let words = vec![
            GtInstance::word(0, rect(0.0, 0.0, 10.0, 10.0), None),
            // 40% inside the line
            GtInstance::word(1, rect(16.0, 0.0, 26.0, 10.0), None),
            GtInstance::word(2, rect(5.0, 0.0, 15.0, 10.0), None),
        ];
        let idx = build_line_index(&words, &[rect(0.0, 0.0, 20.0, 10.0)]).unwrap();
        assert_eq!(idx.lines[0].members, vec![0, 2]);
    }

    #[test]
    fn single_word_line_dropped() {
        let words = vec![GtInstance::word(0, rect(0.0, 0.0, 10.0, 10.0), None)];
        let idx = build_line_index(&words, &[rect(0.0, 0.0, 20.0, 10.0)]).unwrap();
        assert!(idx.lines.is_empty());
        assert_eq!(idx.warnings.len(), 1);
    }

    #[test]
    fn shared_word_is_an_error() {
        let words = vec![
            GtInstance::word(0, rect(0.0, 0.0, 10.0, 10.0), None),
            GtInstance::word(1, rect(10.0, 0.0, 20.0, 10.0), None),
        ];
        let lines = [rect(0.0, 0.0, 20.0, 10.0), rect(0.0, 0.0, 20.0, 10.0)];
        assert!(matches!(
            build_line_index(&words, &lines),
            Err(JointError::SharedWord {
                word: 0,
                first: 0,
                second: 1
            })
        ));
    }

    #[test]
    fn don_t_care_words_never_members() {
        let words = vec![
            GtInstance::word(0, rect(0.0, 0.0, 10.0, 10.0), None),
            GtInstance::dont_care(1, rect(10.0, 0.0, 20.0, 10.0)),
            GtInstance::word(2, rect(20.0, 0.0, 30.0, 10.0), None),
        ];
        let idx = build_line_index(&words, &[rect(0.0, 0.0, 30.0, 10.0)]).unwrap();
        assert_eq!(idx.lines[0].members, vec![0, 2]);
        let explicit =
            line_index_from_membership(&words, &[rect(0.0, 0.0, 30.0, 10.0)], &[vec![0, 1, 2]])
                .unwrap();
        assert_eq!(explicit.lines[0].members, vec![0, 2]);
        assert!(
            line_index_from_membership(&words, &[rect(0.0, 0.0, 30.0, 10.0)], &[vec![0, 7]])
                .is_err()
        );
    }

    #[test]
    fn exact_line_detection_recalls_both_words() {
        let (words, lines) = two_word_scene();
        let dets = vec![Detection::new(0, rect(0.0, 0.0, 200.0, 20.0))];
        let ms = evaluate_joint(&words, &lines, &dets, &[], &MatchConfig::default());
        let lm = &ms.line_matches[0];
        assert_eq!(lm.recalled.len(), 2);
        assert!(lm.recalled.iter().all(|w| w.recall == 1.0));
        assert_eq!(lm.score.tiou_precision, 1.0);
        assert_eq!(ms.num_gt(), 2);
        assert_eq!(ms.num_det(), 1);
    }

    #[test]
    fn partial_line_detection() {
        let (words, lines) = two_word_scene();
        let dets = vec![Detection::new(0, rect(0.0, 0.0, 150.0, 20.0))];
        let ms = evaluate_joint(&words, &lines, &dets, &[], &MatchConfig::default());
        let lm = &ms.line_matches[0];
        assert!((lm.score.iou - 0.75).abs() < 1e-12);
        assert_eq!(lm.recalled.len(), 1);
        assert_eq!(lm.recalled[0].word, 0);
        assert!((lm.recalled[0].recall - 0.5625).abs() < 1e-12);
        assert_eq!(ms.unmatched_gt, vec![1]);
        assert!(ms.unmatched_det.is_empty());
    }

    #[test]
    fn without_lines_matches_word_level() {
        let (words, _) = two_word_scene();
        let dets = vec![
            Detection::new(0, rect(0.0, 0.0, 95.0, 20.0)),
            Detection::new(1, rect(300.0, 0.0, 320.0, 20.0)),
        ];
        let dc = dont_care_detections(&words, &dets, 0.5);
        let cfg = MatchConfig::default();
        assert_eq!(
            evaluate_joint(&words, &[], &dets, &dc, &cfg),
            match_one_to_one(&words, &dets, &dc, &cfg)
        );
    }

    #[test]
    fn leftover_detection_inside_recalled_word_is_set_aside() {
        let (words, lines) = two_word_scene();
        let dets = vec![
            Detection::new(0, rect(0.0, 0.0, 200.0, 20.0)),
            Detection::new(1, rect(0.0, 0.0, 80.0, 20.0)),
        ];
        let ms = evaluate_joint(&words, &lines, &dets, &[], &MatchConfig::default());
        assert_eq!(ms.dont_care_det, vec![1]);
        assert_eq!(ms.num_det(), 1);
    }
}
