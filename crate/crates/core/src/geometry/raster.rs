//! Sampling estimate of region areas, used as an independent check on the
//! exact boolean engine.
//!
//! The window is the bounding box of all operands, divided into
//! `resolution × resolution` cells. A cell counts when the expression holds
//! at its center. Membership is decided with an even-odd crossing count on
//! each sample row, so none of the exact engine's predicates are reused.

use super::{AreaExpr, BBox, GeometryError, Polygon, RegionArea};

pub const MIN_RESOLUTION: usize = 256;

pub fn rasterized_area(
    polys: &[&Polygon],
    expr: &AreaExpr,
    resolution: usize,
) -> Result<RegionArea, GeometryError> {
    if resolution < MIN_RESOLUTION {
        return Err(GeometryError::ResolutionTooLow(resolution));
    }
    expr.validate(polys.len())?;
    let window = match polys
        .iter()
        .filter(|p| !p.is_degenerate())
        .map(|p| p.bbox())
        .reduce(|a, b| a.union(&b))
    {
        Some(b) => b,
        None => return Ok(RegionArea::ZERO),
    };
    let count = count_cells(polys, expr, &window, resolution);
    let cell = (window.width() / resolution as f64) * (window.height() / resolution as f64);
    Ok(RegionArea::new(count as f64 * cell))
}

fn count_cells(polys: &[&Polygon], expr: &AreaExpr, window: &BBox, res: usize) -> u64 {
    let cw = window.width() / res as f64;
    let ch = window.height() / res as f64;
    let x0 = window.min.x;
    // number of sample columns whose center is <= x
    let columns_upto = |x: f64| -> usize {
        let k = ((x - x0) / cw - 0.5).floor() + 1.0;
        k.clamp(0.0, res as f64) as usize
    };

    let mut total = 0u64;
    let mut events: Vec<(f64, usize)> = Vec::new();
    let mut inside = vec![false; polys.len()];
    for row in 0..res {
        let y = window.min.y + (row as f64 + 0.5) * ch;
        events.clear();
        for (k, poly) in polys.iter().enumerate() {
            if poly.is_degenerate() {
                continue;
            }
            for (a, b) in poly.edges() {
                if (a.y > y) != (b.y > y) {
                    let x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
                    events.push((x, k));
                }
            }
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite crossings"));
        inside.iter_mut().for_each(|v| *v = false);
        // samples left of the first crossing see all-outside, which is empty
        let mut i = 0;
        while i < events.len() {
            let x = events[i].0;
            while i < events.len() && events[i].0 == x {
                let k = events[i].1;
                inside[k] = !inside[k];
                i += 1;
            }
            let next = if i < events.len() {
                events[i].0
            } else {
                window.max.x
            };
            if expr.eval(&inside) {
                total += (columns_upto(next) - columns_upto(x)) as u64;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_fills_its_window() {
        let r = Polygon::rect(0.0, 0.0, 100.0, 20.0).unwrap();
        let a = rasterized_area(&[&r], &AreaExpr::Operand(0), 1024)
            .unwrap()
            .get();
        assert!((a - 2000.0).abs() <= 20.0);
    }

    #[test]
    fn shifted_overlap_estimate() {
        let a = Polygon::rect(0.0, 0.0, 100.0, 20.0).unwrap();
        let b = Polygon::rect(20.0, 0.0, 120.0, 20.0).unwrap();
        let e = AreaExpr::and(vec![AreaExpr::Operand(0), AreaExpr::Operand(1)]);
        let got = rasterized_area(&[&a, &b], &e, 1024).unwrap().get();
        assert!((got - 1600.0).abs() <= 16.0, "{got}");
    }

    #[test]
    fn two_overlapping_outliers() {
        let det = Polygon::rect(0.0, 0.0, 300.0, 20.0).unwrap();
        let target = Polygon::rect(0.0, 0.0, 100.0, 20.0).unwrap();
        let o1 = Polygon::rect(150.0, 0.0, 200.0, 20.0).unwrap();
        let o2 = Polygon::rect(180.0, 0.0, 230.0, 20.0).unwrap();
        let e = AreaExpr::and(vec![
            AreaExpr::Operand(0),
            AreaExpr::or(vec![AreaExpr::Operand(2), AreaExpr::Operand(3)]),
            AreaExpr::not(AreaExpr::Operand(1)),
        ]);
        let got = rasterized_area(&[&det, &target, &o1, &o2], &e, 2048)
            .unwrap()
            .get();
        assert!((got - 1600.0).abs() <= 16.0, "{got}");
    }

    #[test]
    fn low_resolution_rejected() {
        let r = Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(
            rasterized_area(&[&r], &AreaExpr::Operand(0), 100).unwrap_err(),
            GeometryError::ResolutionTooLow(100)
        );
    }
}
