use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tiou_eval::geometry::{
    expression_area, intersection_area, outlier_area, rasterized_area, union_area, AreaExpr, Point,
    Polygon,
};
use tiou_eval::harness::random_quad;

fn quads(seed: u64, n: usize) -> Vec<Polygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_quad(&mut rng, 100.0)).collect()
}

/// Shoelace formula, written out independently of the library.
fn shoelace(p: &Polygon) -> f64 {
    let v = p.vertices();
    let n = v.len();
    let twice: f64 = (0..n)
        .map(|i| v[i].x * v[(i + 1) % n].y - v[(i + 1) % n].x * v[i].y)
        .sum();
    twice.abs() / 2.0
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polygon_area_matches_shoelace(seed in any::<u64>()) {
        let p = &quads(seed, 1)[0];
        prop_assert!(close(p.area(), shoelace(p), 1e-12));
    }

    #[test]
    fn inclusion_exclusion_holds(seed in any::<u64>()) {
        let q = quads(seed, 2);
        let inter = intersection_area(&q[0], &q[1]).get();
        let union = union_area(&q[0], &q[1]).get();
        prop_assert!(close(inter + union, q[0].area() + q[1].area(), 1e-12));
        prop_assert!(inter <= q[0].area().min(q[1].area()) * (1.0 + 1e-12));
    }

    #[test]
    fn intersection_agrees_with_raster(seed in any::<u64>()) {
        let q = quads(seed, 2);
        let exact = intersection_area(&q[0], &q[1]).get();
        let expr = AreaExpr::and(vec![AreaExpr::Operand(0), AreaExpr::Operand(1)]);
        let est = rasterized_area(&[&q[0], &q[1]], &expr, 512).unwrap().get();
        let window = q[0].bbox().union(&q[1].bbox()).area();
        prop_assert!((exact - est).abs() <= 2e-3 * window, "exact {} raster {}", exact, est);
    }

    #[test]
    fn rigid_motion_preserves_areas(seed in any::<u64>(), angle in 0.0..std::f64::consts::TAU, dx in -50.0..50.0f64) {
        let q = quads(seed, 2);
        let c = Point::new(50.0, 50.0);
        let moved: Vec<Polygon> = q.iter().map(|p| p.rotate(angle, c).unwrap().translate(dx, -dx).unwrap()).collect();
        let before = intersection_area(&q[0], &q[1]).get();
        let after = intersection_area(&moved[0], &moved[1]).get();
        prop_assert!(close(before, after, 1e-9), "{} vs {}", before, after);
    }

    #[test]
    fn outlier_area_bounds(seed in any::<u64>()) {
        let q = quads(seed, 4);
        let (det, target) = (&q[0], &q[1]);
        let others = [&q[2], &q[3]];
        let ot = outlier_area(det, target, &others).get();
        let covered = AreaExpr::and(vec![
            AreaExpr::Operand(0),
            AreaExpr::or(vec![AreaExpr::Operand(1), AreaExpr::Operand(2)]),
        ]);
        let upper = expression_area(&[det, &q[2], &q[3]], &covered).unwrap().get();
        prop_assert!(ot <= upper * (1.0 + 1e-12) + 1e-12);
        // the target itself never counts as an outlier
        prop_assert_eq!(outlier_area(det, target, &[target]).get(), 0.0);
    }
}

#[test]
fn concave_polygon_against_hand_computed_areas() {
    // an L shape: 20x20 square minus its top-right 10x10 quadrant
    let l = Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(20.0, 0.0),
        Point::new(20.0, 10.0),
        Point::new(10.0, 10.0),
        Point::new(10.0, 20.0),
        Point::new(0.0, 20.0),
    ])
    .unwrap();
    assert_eq!(l.area(), 300.0);
    let notch = Polygon::rect(10.0, 10.0, 20.0, 20.0).unwrap();
    assert!(intersection_area(&l, &notch).get().abs() < 1e-9);
    let band = Polygon::rect(5.0, 5.0, 15.0, 15.0).unwrap();
    assert!((intersection_area(&l, &band).get() - 75.0).abs() < 1e-9);
    assert!((union_area(&l, &band).get() - 325.0).abs() < 1e-9);
}

#[test]
fn touching_rectangles_have_no_overlap() {
    let a = Polygon::rect(0.0, 0.0, 10.0, 10.0).unwrap();
    let b = Polygon::rect(10.0, 0.0, 20.0, 10.0).unwrap();
    assert_eq!(intersection_area(&a, &b).get(), 0.0);
    assert!((union_area(&a, &b).get() - 200.0).abs() < 1e-9);
}
