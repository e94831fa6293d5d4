//! Exact area of boolean combinations of simple polygons.
//!
//! The area of a region equals `1/2 ∮ (x dy - y dx)` over its oriented
//! boundary, and the boundary of any boolean combination is made of pieces
//! of the operands' edges. Every edge is split at all points where it meets
//! another operand's boundary; each piece then has a constant membership
//! vector on its left and on its right. A piece belongs to the result
//! boundary when the expression differs between the two sides, and its
//! sign follows which side is inside.
//!
//! Boundary pieces shared by several operands are emitted once, by the
//! lowest-indexed operand that owns them.

use super::{GeometryError, Point, Polygon, RegionArea};

/// Set expression over operand polygons, referenced by index.
#[derive(Debug, Clone, PartialEq)]
pub enum AreaExpr {
    Operand(usize),
    Not(Box<AreaExpr>),
    And(Vec<AreaExpr>),
    Or(Vec<AreaExpr>),
}

impl AreaExpr {
    pub fn and(parts: Vec<AreaExpr>) -> AreaExpr {
        AreaExpr::And(parts)
    }

    pub fn or(parts: Vec<AreaExpr>) -> AreaExpr {
        AreaExpr::Or(parts)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: AreaExpr) -> AreaExpr {
        AreaExpr::Not(Box::new(inner))
    }

    /// `a ∖ b`
    pub fn difference(a: AreaExpr, b: AreaExpr) -> AreaExpr {
        AreaExpr::and(vec![a, AreaExpr::not(b)])
    }

    pub fn eval(&self, inside: &[bool]) -> bool {
        match self {
            AreaExpr::Operand(i) => inside[*i],
            AreaExpr::Not(e) => !e.eval(inside),
            AreaExpr::And(es) => es.iter().all(|e| e.eval(inside)),
            AreaExpr::Or(es) => es.iter().any(|e| e.eval(inside)),
        }
    }

    pub(crate) fn max_operand(&self) -> Option<usize> {
        match self {
            AreaExpr::Operand(i) => Some(*i),
            AreaExpr::Not(e) => e.max_operand(),
            AreaExpr::And(es) | AreaExpr::Or(es) => es.iter().filter_map(|e| e.max_operand()).max(),
        }
    }

    /// Checks operand references and boundedness.
    pub(crate) fn validate(&self, operand_count: usize) -> Result<(), GeometryError> {
        if let Some(m) = self.max_operand() {
            if m >= operand_count {
                return Err(GeometryError::MissingOperand(m));
            }
        }
        if self.eval(&vec![false; operand_count]) {
            return Err(GeometryError::UnboundedExpression);
        }
        Ok(())
    }
}

/// Relative tolerance for collinearity and on-segment predicates.
const REL_EPS: f64 = 1e-12;
/// Split parameters closer than this are merged.
const PARAM_EPS: f64 = 1e-12;

struct Ctx<'a> {
    polys: &'a [&'a Polygon],
    origin: Point,
    eps: f64,
}

/// How one operand sees a boundary piece.
#[derive(Clone, Copy)]
enum Side {
    Inside,
    Outside,
    /// The piece lies on this operand's boundary; `true` when the operand's
    /// edge runs in the same direction (operand interior on the left).
    Boundary(bool),
}

/// Exact area of `expr` evaluated over `polys`.
pub fn expression_area(polys: &[&Polygon], expr: &AreaExpr) -> Result<RegionArea, GeometryError> {
    expr.validate(polys.len())?;
    let live: Vec<usize> = (0..polys.len())
        .filter(|&i| !polys[i].is_degenerate())
        .collect();
    if live.is_empty() {
        return Ok(RegionArea::ZERO);
    }
    let mut bbox = polys[live[0]].bbox();
    for &i in &live[1..] {
        bbox = bbox.union(&polys[i].bbox());
    }
    let scale = bbox
        .min
        .x
        .abs()
        .max(bbox.min.y.abs())
        .max(bbox.max.x.abs())
        .max(bbox.max.y.abs())
        .max(bbox.width())
        .max(bbox.height());
    let ctx = Ctx {
        polys,
        origin: bbox.min,
        eps: REL_EPS * scale.max(f64::MIN_POSITIVE),
    };

    let mut inside = vec![false; polys.len()];
    let mut left = vec![false; polys.len()];
    let mut right = vec![false; polys.len()];
    let mut twice_area = 0.0;
    let mut splits: Vec<f64> = Vec::new();

    for &m in &live {
        for (p, q) in polys[m].edges() {
            let p = p.sub(ctx.origin);
            let q = q.sub(ctx.origin);
            ctx.collect_splits(m, p, q, &mut splits);
            for w in splits.windows(2) {
                let (t0, t1) = (w[0], w[1]);
                let a = lerp(p, q, t0);
                let b = lerp(p, q, t1);
                let mid = lerp(p, q, 0.5 * (t0 + t1));
                let mut owned_by_lower = false;
                for k in 0..polys.len() {
                    if k == m {
                        left[k] = true;
                        right[k] = false;
                        continue;
                    }
                    if polys[k].is_degenerate() {
                        left[k] = false;
                        right[k] = false;
                        continue;
                    }
                    match ctx.classify(k, p, q, mid) {
                        Side::Inside => {
                            left[k] = true;
                            right[k] = true;
                        }
                        Side::Outside => {
                            left[k] = false;
                            right[k] = false;
                        }
                        Side::Boundary(same) => {
                            if k < m {
                                owned_by_lower = true;
                                break;
                            }
                            left[k] = same;
                            right[k] = !same;
                        }
                    }
                }
                if owned_by_lower {
                    continue;
                }
                inside.copy_from_slice(&left);
                let l = expr.eval(&inside);
                inside.copy_from_slice(&right);
                let r = expr.eval(&inside);
                match (l, r) {
                    (true, false) => twice_area += a.cross(b),
                    (false, true) => twice_area -= a.cross(b),
                    _ => {}
                }
            }
        }
    }
    Ok(RegionArea::new(twice_area / 2.0))
}

fn lerp(p: Point, q: Point, t: f64) -> Point {
    Point::new(p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t)
}

impl Ctx<'_> {
    fn edges_of(&self, k: usize) -> impl Iterator<Item = (Point, Point)> + '_ {
        let o = self.origin;
        self.polys[k]
            .edges()
            .map(move |(r, s)| (r.sub(o), s.sub(o)))
    }

    /// Distance from `x` to the infinite line through `p`, `q`.
    fn line_dist(p: Point, q: Point, x: Point) -> f64 {
        let d = q.sub(p);
        let len = d.dot(d).sqrt();
        if len == 0.0 {
            return x.sub(p).dot(x.sub(p)).sqrt();
        }
        d.cross(x.sub(p)).abs() / len
    }

    fn collinear(&self, p: Point, q: Point, r: Point, s: Point) -> bool {
        Self::line_dist(p, q, r) <= self.eps
            && Self::line_dist(p, q, s) <= self.eps
            && Self::line_dist(r, s, p) <= self.eps
            && Self::line_dist(r, s, q) <= self.eps
    }

    fn collect_splits(&self, m: usize, p: Point, q: Point, out: &mut Vec<f64>) {
        out.clear();
        out.push(0.0);
        out.push(1.0);
        let d = q.sub(p);
        let dd = d.dot(d);
        if dd == 0.0 {
            return;
        }
        let param = |x: Point| x.sub(p).dot(d) / dd;
        for k in 0..self.polys.len() {
            if k == m || self.polys[k].is_degenerate() {
                continue;
            }
            for (r, s) in self.edges_of(k) {
                if self.collinear(p, q, r, s) {
                    out.push(param(r));
                    out.push(param(s));
                    continue;
                }
                for x in [r, s] {
                    if Self::line_dist(p, q, x) <= self.eps {
                        out.push(param(x));
                    }
                }
                let e = s.sub(r);
                let denom = d.cross(e);
                if denom != 0.0 {
                    let rp = r.sub(p);
                    let t = rp.cross(e) / denom;
                    let u = rp.cross(d) / denom;
                    if (0.0..=1.0).contains(&u) {
                        out.push(t);
                    }
                }
            }
        }
        out.retain(|t| (0.0..=1.0).contains(t));
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite split parameters"));
        out.dedup_by(|b, a| *b - *a <= PARAM_EPS);
        // dedup keeps the earlier value, so the final 1.0 may have been merged away
        if let Some(last) = out.last_mut() {
            *last = 1.0;
        }
        if out.len() == 1 {
            out.insert(0, 0.0);
        }
    }

    fn classify(&self, k: usize, p: Point, q: Point, mid: Point) -> Side {
        let d = q.sub(p);
        for (r, s) in self.edges_of(k) {
            if !self.collinear(p, q, r, s) {
                continue;
            }
            let e = s.sub(r);
            let ee = e.dot(e);
            if ee == 0.0 {
                continue;
            }
            let u = mid.sub(r).dot(e) / ee;
            if u > 0.0 && u < 1.0 {
                return Side::Boundary(d.dot(e) > 0.0);
            }
        }
        if self.winding(k, mid) != 0 {
            Side::Inside
        } else {
            Side::Outside
        }
    }

    fn winding(&self, k: usize, x: Point) -> i32 {
        let mut wn = 0;
        for (a, b) in self.edges_of(k) {
            if a.y <= x.y {
                if b.y > x.y && b.sub(a).cross(x.sub(a)) > 0.0 {
                    wn += 1;
                }
            } else if b.y <= x.y && b.sub(a).cross(x.sub(a)) < 0.0 {
                wn -= 1;
            }
        }
        wn
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::rect(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn single_operand_is_its_area() {
        let a = rect(0.0, 0.0, 3.0, 7.0);
        let r = expression_area(&[&a], &AreaExpr::Operand(0)).unwrap();
        assert_eq!(r.get(), 21.0);
    }

    #[test]
    fn union_of_abutting_rects() {
        let a = rect(0.0, 0.0, 10.0, 10.0);
        let b = rect(10.0, 0.0, 20.0, 10.0);
        let e = AreaExpr::or(vec![AreaExpr::Operand(0), AreaExpr::Operand(1)]);
        assert_eq!(expression_area(&[&a, &b], &e).unwrap().get(), 200.0);
    }

    #[test]
    fn identical_operands_counted_once() {
        let a = rect(0.0, 0.0, 10.0, 10.0);
        let b = a.clone();
        let c = a.clone();
        let e = AreaExpr::or(vec![
            AreaExpr::Operand(0),
            AreaExpr::Operand(1),
            AreaExpr::Operand(2),
        ]);
        assert_eq!(expression_area(&[&a, &b, &c], &e).unwrap().get(), 100.0);
        let x = AreaExpr::difference(AreaExpr::Operand(0), AreaExpr::Operand(1));
        assert_eq!(expression_area(&[&a, &b], &x).unwrap().get(), 0.0);
    }

    #[test]
    fn difference_with_hole_inside() {
        let a = rect(0.0, 0.0, 10.0, 10.0);
        let hole = rect(2.0, 2.0, 4.0, 4.0);
        let e = AreaExpr::difference(AreaExpr::Operand(0), AreaExpr::Operand(1));
        assert_eq!(expression_area(&[&a, &hole], &e).unwrap().get(), 96.0);
    }

    #[test]
    fn rejects_unbounded_and_missing() {
        let a = rect(0.0, 0.0, 1.0, 1.0);
        assert_eq!(
            expression_area(&[&a], &AreaExpr::not(AreaExpr::Operand(0))).unwrap_err(),
            GeometryError::UnboundedExpression
        );
        assert_eq!(
            expression_area(&[&a], &AreaExpr::Operand(3)).unwrap_err(),
            GeometryError::MissingOperand(3)
        );
    }

    #[test]
    fn rotated_squares() {
        // diamond inscribed in the square covers half of it
        let sq = rect(-1.0, -1.0, 1.0, 1.0);
        let diamond = Polygon::new(vec![
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(-1.0, 0.0),
            Point::new(0.0, -1.0),
        ])
        .unwrap();
        let e = AreaExpr::and(vec![AreaExpr::Operand(0), AreaExpr::Operand(1)]);
        let got = expression_area(&[&sq, &diamond], &e).unwrap().get();
        assert!((got - 2.0).abs() < 1e-12);
        // square rotated 45 degrees about the center: octagon of area 8(sqrt2 - 1)
        let r = sq
            .rotate(std::f64::consts::FRAC_PI_4, Point::new(0.0, 0.0))
            .unwrap();
        let got = expression_area(&[&sq, &r], &e).unwrap().get();
        assert!((got - 8.0 * (2f64.sqrt() - 1.0)).abs() < 1e-9);
    }
}
