//! Planar geometry on simple polygons.
//!
//! Every area used by the metrics comes from here: polygon area, pairwise
//! intersection and union, and the outlier region used by TIoU-Precision.
//! Boolean areas are computed exactly (up to floating point) by integrating
//! over the boundary of the result region; see [`boolean`].

pub mod boolean;
pub mod raster;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boolean::{expression_area, AreaExpr};
pub use raster::rasterized_area;

/// Relative area below which a polygon counts as degenerate.
pub const DEGENERATE_RATIO: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has a non-finite coordinate")]
    NonFinite,
    #[error("polygon is self-intersecting (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("polygon is degenerate (area {area} vs bounding box {bbox_area})")]
    Degenerate { area: f64, bbox_area: f64 },
    #[error("area expression is unbounded (true outside every operand)")]
    UnboundedExpression,
    #[error("expression references operand {0} which does not exist")]
    MissingOperand(usize),
    #[error("raster resolution {0} is below the minimum of 256")]
    ResolutionTooLow(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub(crate) fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    #[inline]
    pub(crate) fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub(crate) fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of(points: &[Point]) -> BBox {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BBox { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// True when the boxes share a region of positive area.
    pub fn overlaps(&self, other: &BBox) -> bool {
        self.min.x < other.max.x
            && other.min.x < self.max.x
            && self.min.y < other.max.y
            && other.min.y < self.max.y
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min: Point::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            max: Point::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        }
    }
}

/// A simple polygon with counterclockwise winding.
///
/// Construction validates the vertex list and normalizes winding. A
/// degenerate polygon (a sliver whose area is negligible against its
/// bounding box) can only be built through [`Polygon::sliver`]; it behaves
/// as the empty set in every boolean operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
    area: f64,
    bbox: BBox,
    degenerate: bool,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Polygon, GeometryError> {
        let (vertices, signed) = prepare(vertices)?;
        let bbox = BBox::of(&vertices);
        let degenerate = || GeometryError::Degenerate {
            area: signed.abs(),
            bbox_area: bbox.area(),
        };
        if all_collinear(&vertices) {
            return Err(degenerate());
        }
        if let Some((i, j)) = find_self_intersection(&vertices) {
            return Err(GeometryError::SelfIntersecting(i, j));
        }
        if is_degenerate(signed, &bbox) {
            return Err(degenerate());
        }
        Ok(Self::normalized(vertices, signed, bbox))
    }

    /// Builds a polygon that is allowed to be degenerate.
    ///
    /// Non-degenerate input goes through the full validation of
    /// [`Polygon::new`]. Degenerate input, including at least three
    /// vertices that collapse to fewer distinct points, is kept verbatim as
    /// an empty region.
    pub fn sliver(vertices: Vec<Point>) -> Result<Polygon, GeometryError> {
        let raw_len = vertices.len();
        match Polygon::new(vertices.clone()) {
            Err(GeometryError::Degenerate { .. }) | Err(GeometryError::TooFewVertices(_))
                if raw_len >= 3 =>
            {
                let bbox = BBox::of(&vertices);
                Ok(Polygon {
                    vertices,
                    area: 0.0,
                    bbox,
                    degenerate: true,
                })
            }
            other => other,
        }
    }

    /// Axis-aligned rectangle spanning the two corners.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Polygon, GeometryError> {
        let (xa, xb) = (x0.min(x1), x0.max(x1));
        let (ya, yb) = (y0.min(y1), y0.max(y1));
        Polygon::new(vec![
            Point::new(xa, ya),
            Point::new(xb, ya),
            Point::new(xb, yb),
            Point::new(xa, yb),
        ])
    }

    fn normalized(mut vertices: Vec<Point>, signed: f64, bbox: BBox) -> Polygon {
        if signed < 0.0 {
            vertices.reverse();
        }
        // summed in stored order so a reparsed polygon gets the same bits
        let area = signed_area(&vertices).abs();
        Polygon {
            vertices,
            area,
            bbox,
            degenerate: false,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Edges as `(start, end)` pairs, closing back to the first vertex.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Applies `f` to every vertex and revalidates.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Result<Polygon, GeometryError> {
        Polygon::new(self.vertices.iter().map(|&p| f(p)).collect())
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<Polygon, GeometryError> {
        self.map_points(|p| Point::new(p.x + dx, p.y + dy))
    }

    pub fn scale(&self, s: f64) -> Result<Polygon, GeometryError> {
        self.map_points(|p| Point::new(p.x * s, p.y * s))
    }

    /// Rotation by `angle` radians about `center`.
    pub fn rotate(&self, angle: f64, center: Point) -> Result<Polygon, GeometryError> {
        let (s, c) = angle.sin_cos();
        self.map_points(|p| {
            let d = p.sub(center);
            Point::new(center.x + c * d.x - s * d.y, center.y + s * d.x + c * d.y)
        })
    }

    /// True when the polygon is exactly its own bounding box.
    pub fn is_axis_aligned_rect(&self) -> bool {
        !self.degenerate
            && self.vertices.iter().all(|p| {
                (p.x == self.bbox.min.x || p.x == self.bbox.max.x)
                    && (p.y == self.bbox.min.y || p.y == self.bbox.max.y)
            })
            && self.area == self.bbox.area()
    }
}

impl fmt::Display for Polygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .vertices
            .iter()
            .map(|p| format!("({}, {})", p.x, p.y))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

// Serialized as the vertex list; deserialization revalidates and keeps
// degenerate input as a sliver.
impl Serialize for Polygon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.vertices.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let vertices = Vec::<Point>::deserialize(d)?;
        Polygon::sliver(vertices).map_err(serde::de::Error::custom)
    }
}

/// Area in squared pixels; never negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionArea(f64);

impl RegionArea {
    pub const ZERO: RegionArea = RegionArea(0.0);

    pub fn new(value: f64) -> RegionArea {
        RegionArea(value.max(0.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<RegionArea> for f64 {
    fn from(a: RegionArea) -> f64 {
        a.0
    }
}

fn prepare(vertices: Vec<Point>) -> Result<(Vec<Point>, f64), GeometryError> {
    if vertices
        .iter()
        .any(|p| !p.x.is_finite() || !p.y.is_finite())
    {
        return Err(GeometryError::NonFinite);
    }
    // exact repeats only; closing vertex equal to the first is dropped too
    let mut out: Vec<Point> = Vec::with_capacity(vertices.len());
    for p in vertices {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    if out.len() < 3 {
        return Err(GeometryError::TooFewVertices(out.len()));
    }
    let signed = signed_area(&out);
    Ok((out, signed))
}

fn all_collinear(v: &[Point]) -> bool {
    v.windows(3).all(|w| orient(w[0], w[1], w[2]) == 0.0)
        && orient(v[v.len() - 2], v[v.len() - 1], v[0]) == 0.0
        && orient(v[v.len() - 1], v[0], v[1]) == 0.0
}

fn is_degenerate(signed: f64, bbox: &BBox) -> bool {
    let bbox_area = bbox.area();
    bbox_area <= 0.0 || signed.abs() < DEGENERATE_RATIO * bbox_area
}

/// Shoelace formula, positive for counterclockwise input.
pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let mut twice = 0.0;
    for i in 1..n - 1 {
        twice += vertices[i].sub(o).cross(vertices[i + 1].sub(o));
    }
    twice / 2.0
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, touching included.
fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn find_self_intersection(v: &[Point]) -> Option<(usize, usize)> {
    let n = v.len();
    let edge = |i: usize| (v[i], v[(i + 1) % n]);
    for i in 0..n {
        // adjacent edges fold back onto each other
        let (a, b) = edge(i);
        let (_, c) = edge((i + 1) % n);
        if orient(a, b, c) == 0.0 && a.sub(b).dot(c.sub(b)) > 0.0 {
            return Some((i, (i + 1) % n));
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = edge(j);
            if segments_touch(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Area of a polygon.
pub fn polygon_area(p: &Polygon) -> RegionArea {
    RegionArea::new(p.area())
}

/// Area of `a ∩ b`, clamped to `[0, min(area(a), area(b))]`.
pub fn intersection_area(a: &Polygon, b: &Polygon) -> RegionArea {
    if a.is_degenerate() || b.is_degenerate() || !a.bbox().overlaps(&b.bbox()) {
        return RegionArea::ZERO;
    }
    let expr = AreaExpr::and(vec![AreaExpr::Operand(0), AreaExpr::Operand(1)]);
    let raw = expression_area(&[a, b], &expr)
        .expect("intersection is bounded")
        .get();
    RegionArea::new(raw.min(a.area()).min(b.area()))
}

/// Area of `a ∪ b` as `area(a) + area(b) - area(a ∩ b)`.
pub fn union_area(a: &Polygon, b: &Polygon) -> RegionArea {
    RegionArea::new(a.area() + b.area() - intersection_area(a, b).get())
}

/// Area inside `det`, inside at least one of `others`, and outside `target`.
///
/// Others whose bounding box misses `det` are skipped. The result lies in
/// `[0, area(det) - area(det ∩ target)]`.
pub fn outlier_area(det: &Polygon, target: &Polygon, others: &[&Polygon]) -> RegionArea {
    if det.is_degenerate() {
        return RegionArea::ZERO;
    }
    let dbox = det.bbox();
    let mut operands: Vec<&Polygon> = vec![det, target];
    for o in others {
        if !o.is_degenerate() && o.bbox().overlaps(&dbox) {
            operands.push(o);
        }
    }
    if operands.len() == 2 {
        return RegionArea::ZERO;
    }
    let any_other = AreaExpr::or((2..operands.len()).map(AreaExpr::Operand).collect());
    let expr = AreaExpr::and(vec![
        AreaExpr::Operand(0),
        any_other,
        AreaExpr::not(AreaExpr::Operand(1)),
    ]);
    let raw = expression_area(&operands, &expr)
        .expect("outlier region is bounded by the detection")
        .get();
    let cap = det.area() - intersection_area(det, target).get();
    RegionArea::new(raw.min(cap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::rect(x0, y0, x1, y1).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn rectangle_area() {
        assert_eq!(polygon_area(&rect(0.0, 0.0, 100.0, 20.0)).get(), 2000.0);
    }

    #[test]
    fn triangle_area() {
        let t = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(t.area(), 0.5);
    }

    #[test]
    fn clockwise_input_is_normalized() {
        let cw = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 20.0),
            Point::new(100.0, 20.0),
            Point::new(100.0, 0.0),
        ])
        .unwrap();
        assert_eq!(cw.area(), 2000.0);
        assert!(signed_area(cw.vertices()) > 0.0);
    }

    #[test]
    fn rejects_bow_tie() {
        let err = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(10.0, 0.0),
            Point::new(0.0, 10.0),
        ])
        .unwrap_err();
        assert!(matches!(err, GeometryError::SelfIntersecting(..)));
    }

    #[test]
    fn rejects_short_and_non_finite() {
        assert_eq!(
            Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]).unwrap_err(),
            GeometryError::TooFewVertices(2)
        );
        assert_eq!(
            Polygon::new(vec![
                Point::new(0.0, 0.0),
                Point::new(f64::NAN, 0.0),
                Point::new(0.0, 1.0)
            ])
            .unwrap_err(),
            GeometryError::NonFinite
        );
    }

    #[test]
    fn rejects_spike() {
        let err = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(10.0, 5.0),
            Point::new(0.0, 10.0),
        ])
        .unwrap_err();
        assert!(matches!(err, GeometryError::SelfIntersecting(..)));
    }

    #[test]
    fn degenerate_sliver() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(100.0, 100.0),
            Point::new(0.0, 1e-7),
        ];
        assert!(matches!(
            Polygon::new(pts.clone()),
            Err(GeometryError::Degenerate { .. })
        ));
        let s = Polygon::sliver(pts).unwrap();
        assert!(s.is_degenerate());
        assert_eq!(
            intersection_area(&s, &rect(0.0, 0.0, 100.0, 100.0)).get(),
            0.0
        );
        let flat = Polygon::sliver(vec![
            Point::new(0.0, 0.0),
            Point::new(5.0, 0.0),
            Point::new(10.0, 0.0),
        ])
        .unwrap();
        assert!(flat.is_degenerate());
    }

    #[test]
    fn collinear_extra_vertex_is_fine() {
        let p = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(50.0, 0.0),
            Point::new(100.0, 0.0),
            Point::new(100.0, 20.0),
            Point::new(0.0, 20.0),
        ])
        .unwrap();
        assert_eq!(p.area(), 2000.0);
        assert_eq!(
            intersection_area(&p, &rect(0.0, 0.0, 100.0, 20.0)).get(),
            2000.0
        );
    }

    #[test]
    fn shifted_rect_overlap() {
        let a = rect(0.0, 0.0, 100.0, 20.0);
        let b = rect(20.0, 0.0, 120.0, 20.0);
        assert!(close(intersection_area(&a, &b).get(), 1600.0));
        assert!(close(union_area(&a, &b).get(), 2400.0));
    }

    #[test]
    fn disjoint_and_self() {
        let a = rect(0.0, 0.0, 100.0, 20.0);
        let b = rect(200.0, 0.0, 300.0, 20.0);
        assert_eq!(intersection_area(&a, &b).get(), 0.0);
        assert_eq!(union_area(&a, &b).get(), 4000.0);
        assert!(close(intersection_area(&a, &a).get(), 2000.0));
        assert!(close(union_area(&a, &a).get(), 2000.0));
    }

    #[test]
    fn touching_edges_have_no_overlap() {
        let a = rect(0.0, 0.0, 10.0, 10.0);
        let b = rect(10.0, 0.0, 20.0, 10.0);
        assert_eq!(intersection_area(&a, &b).get(), 0.0);
    }

    #[test]
    fn outlier_strip() {
        let det = rect(0.0, 0.0, 200.0, 20.0);
        let target = rect(0.0, 0.0, 100.0, 20.0);
        let other = rect(150.0, 0.0, 250.0, 20.0);
        assert!(close(outlier_area(&det, &target, &[&other]).get(), 1000.0));
    }

    #[test]
    fn outlier_disjoint_others() {
        let det = rect(0.0, 0.0, 200.0, 20.0);
        let target = rect(0.0, 0.0, 100.0, 20.0);
        let other = rect(0.0, 100.0, 50.0, 120.0);
        assert_eq!(outlier_area(&det, &target, &[&other]).get(), 0.0);
        assert_eq!(outlier_area(&det, &target, &[]).get(), 0.0);
    }

    #[test]
    fn outlier_counts_union_not_sum() {
        // two 50x20 strips overlapping each other in 20x20, both outside target
        let det = rect(0.0, 0.0, 300.0, 20.0);
        let target = rect(0.0, 0.0, 100.0, 20.0);
        let o1 = rect(150.0, 0.0, 200.0, 20.0);
        let o2 = rect(180.0, 0.0, 230.0, 20.0);
        assert!(close(
            outlier_area(&det, &target, &[&o1, &o2]).get(),
            1600.0
        ));
    }

    #[test]
    fn outlier_inside_target_is_free() {
        let det = rect(0.0, 0.0, 120.0, 20.0);
        let target = rect(0.0, 0.0, 100.0, 20.0);
        let inner = rect(10.0, 5.0, 30.0, 15.0);
        assert_eq!(outlier_area(&det, &target, &[&inner]).get(), 0.0);
    }

    #[test]
    fn nonconvex_intersection() {
        // U shape: 30x30 square minus the 10x20 notch from the top middle
        let u = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(30.0, 0.0),
            Point::new(30.0, 30.0),
            Point::new(20.0, 30.0),
            Point::new(20.0, 10.0),
            Point::new(10.0, 10.0),
            Point::new(10.0, 30.0),
            Point::new(0.0, 30.0),
        ])
        .unwrap();
        assert_eq!(u.area(), 700.0);
        let bar = rect(-5.0, 20.0, 35.0, 25.0);
        // bar crosses both arms: 2 * 10 * 5
        assert!(close(intersection_area(&u, &bar).get(), 100.0));
        let notch = rect(10.0, 10.0, 20.0, 30.0);
        assert_eq!(intersection_area(&u, &notch).get(), 0.0);
    }
}
