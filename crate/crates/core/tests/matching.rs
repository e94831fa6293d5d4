use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tiou_eval::annotation::{Detection, GtInstance};
use tiou_eval::harness::{random_line_scene, random_quad, random_scene};
use tiou_eval::joint::evaluate_joint;
use tiou_eval::matching::{
    dont_care_detections, match_deteval, match_one_to_one, MatchConfig, MatchOrder, MatchSet,
};

fn assert_partition(ms: &MatchSet, n_gt: usize, n_det: usize) {
    let mut g = ms.gt_mentions();
    g.sort_unstable();
    assert_eq!(g, (0..n_gt).collect::<Vec<_>>(), "{ms:?}");
    let mut d = ms.detection_mentions();
    d.sort_unstable();
    assert_eq!(d, (0..n_det).collect::<Vec<_>>(), "{ms:?}");
}

/// A scene with continuous coordinates so IoU ties have probability zero.
fn continuous_scene(seed: u64) -> (Vec<GtInstance>, Vec<Detection>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gts = (0..5)
        .map(|i| GtInstance::word(i, random_quad(&mut rng, 100.0), None))
        .collect();
    let dets = (0..6)
        .map(|i| Detection::new(i, random_quad(&mut rng, 100.0)))
        .collect();
    (gts, dets)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_id_lands_in_exactly_one_bucket(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_scene(&mut rng, "p");
        let cfg = MatchConfig::default();
        let dc = dont_care_detections(&r.gts, &r.dets, cfg.dont_care_overlap);
        assert_partition(&match_one_to_one(&r.gts, &r.dets, &dc, &cfg), r.gts.len(), r.dets.len());
        for order in [MatchOrder::OneToOneFirst, MatchOrder::ManyFirst] {
            let ms = match_deteval(&r.gts, &r.dets, &dc, &cfg.with_order(order));
            assert_partition(&ms, r.gts.len(), r.dets.len());
        }
        let l = random_line_scene(&mut rng, "l", seed % 2 == 0);
        let dc = dont_care_detections(&l.gts, &l.dets, cfg.dont_care_overlap);
        assert_partition(&evaluate_joint(&l.gts, &l.lines, &l.dets, &dc, &cfg), l.gts.len(), l.dets.len());
    }

    #[test]
    fn one_to_one_ignores_detection_order(seed in any::<u64>()) {
        let (gts, dets) = continuous_scene(seed);
        let cfg = MatchConfig { iou_threshold: 0.1, ..MatchConfig::default() };
        let base = match_one_to_one(&gts, &dets, &[], &cfg);

        let mut perm: Vec<usize> = (0..dets.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        let shuffled: Vec<Detection> =
            perm.iter().enumerate().map(|(new, &old)| Detection::new(new, dets[old].polygon.clone())).collect();
        let ms = match_one_to_one(&gts, &shuffled, &[], &cfg);

        let mut mapped: Vec<(usize, usize)> = ms.pairs.iter().map(|p| (p.gt, perm[p.det])).collect();
        mapped.sort_unstable();
        let expected: Vec<(usize, usize)> = base.pairs.iter().map(|p| (p.gt, p.det)).collect();
        prop_assert_eq!(mapped, expected);
    }

    #[test]
    fn matching_is_repeatable(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_scene(&mut rng, "p");
        let cfg = MatchConfig::default();
        prop_assert_eq!(match_deteval(&r.gts, &r.dets, &[], &cfg), match_deteval(&r.gts, &r.dets, &[], &cfg));
    }
}

#[test]
fn confidence_decides_contested_ground_truth() {
    let rect = |x0, x1| tiou_eval::geometry::Polygon::rect(x0, 0.0, x1, 10.0).unwrap();
    let gts = vec![GtInstance::word(0, rect(0.0, 100.0), None)];
    // det 0 overlaps better, det 1 is more confident
    let dets = vec![
        Detection::new(0, rect(0.0, 95.0)).with_confidence(0.2),
        Detection::new(1, rect(0.0, 80.0)).with_confidence(0.9),
    ];
    let ms = match_one_to_one(&gts, &dets, &[], &MatchConfig::default());
    assert_eq!(ms.pairs.len(), 1);
    assert_eq!(ms.pairs[0].det, 1);

    let no_conf: Vec<Detection> = dets
        .iter()
        .map(|d| Detection::new(d.id, d.polygon.clone()))
        .collect();
    let ms = match_one_to_one(&gts, &no_conf, &[], &MatchConfig::default());
    assert_eq!(ms.pairs[0].det, 0);
}
