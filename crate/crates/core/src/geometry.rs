//! Planar polygon and segment kernels.
//!
//! All coordinates are millimeters in the workspace frame (x to the right,
//! y away from the robot). Polygons are stored counter-clockwise.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SceneMaps;

/// Polygons with less area than this are rejected as degenerate (mm²).
pub const MIN_AREA_MM2: f64 = 1.0;

/// Default precision for [`pole_of_inaccessibility`] in mm.
pub const DEFAULT_POLE_PRECISION_MM: f64 = 1.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Angle between two vectors in radians.
    pub fn angle_to(self, o: Vec3) -> f64 {
        (self.dot(o) / (self.norm() * o.norm()))
            .clamp(-1.0, 1.0)
            .acos()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// A simple polygon, implicitly closed, counter-clockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Builds a polygon and normalizes it to counter-clockwise order.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::DegenerateGeometry("non-finite vertex".into()));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle with its minimum corner at `min`.
    pub fn rectangle(min: Point2, width: f64, height: f64) -> Result<Self> {
        Polygon::new(vec![
            min,
            Point2::new(min.x + width, min.y),
            Point2::new(min.x + width, min.y + height),
            Point2::new(min.x, min.y + height),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn translated(&self, v: Point2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&p| p + v).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&p| p * s).collect(),
        }
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        (min, max)
    }

    /// Even-odd ray casting. Boundary points may land on either side.
    pub fn contains(&self, pt: Point2) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[j];
            if (a.y > pt.y) != (b.y > pt.y) && pt.x < (b.x - a.x) * (pt.y - a.y) / (b.y - a.y) + a.x
            {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// True when no two non-adjacent edges touch.
    pub fn is_simple(&self) -> bool {
        let edges: Vec<Segment> = self.edges().collect();
        let n = edges.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(&edges[i], &edges[j]) {
                    return false;
                }
            }
        }
        true
    }
}

impl TryFrom<Vec<Point2>> for Polygon {
    type Error = Error;
    fn try_from(v: Vec<Point2>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point2> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

/// A closed line segment; `a == b` is a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn distance_to_point(&self, p: Point2) -> f64 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return p.distance(self.a);
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        p.distance(self.a + d * t)
    }
}

pub fn area_and_centroid(p: &Polygon) -> Result<(f64, Point2)> {
    let v = p.vertices();
    let n = v.len();
    // shift to the first vertex to limit cancellation for far-away polygons
    let o = v[0];
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p0 = v[i] - o;
        let p1 = v[(i + 1) % n] - o;
        let c = p0.cross(p1);
        a2 += c;
        cx += (p0.x + p1.x) * c;
        cy += (p0.y + p1.y) * c;
    }
    let area = a2 / 2.0;
    if area.abs() < MIN_AREA_MM2 {
        return Err(Error::DegenerateGeometry(format!(
            "polygon area {area:.3} mm² is below {MIN_AREA_MM2} mm²"
        )));
    }
    let centroid = Point2::new(cx / (3.0 * a2), cy / (3.0 * a2)) + o;
    Ok((area.abs(), centroid))
}

/// Signed distance from `pt` to the polygon boundary: positive inside.
pub fn distance_to_contour(pt: Point2, p: &Polygon) -> f64 {
    let d = p
        .edges()
        .map(|e| e.distance_to_point(pt))
        .fold(f64::INFINITY, f64::min);
    if p.contains(pt) {
        d
    } else {
        -d
    }
}

struct Cell {
    center: Point2,
    half: f64,
    d: f64,
    potential: f64,
    seq: usize,
}

impl Cell {
    fn new(center: Point2, half: f64, poly: &Polygon, seq: usize) -> Self {
        let d = distance_to_contour(center, poly);
        Cell {
            center,
            half,
            d,
            potential: d + half * std::f64::consts::SQRT_2,
            seq,
        }
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    // max-heap on potential; earlier cells first on ties
    fn cmp(&self, other: &Self) -> Ordering {
        self.potential
            .total_cmp(&other.potential)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Interior point farthest from the boundary, found by quadtree
/// branch-and-bound. Returns the point and its distance to the contour.
///
/// Cells are seeded at the centroid and then over the bounding box in
/// row-major order; a later cell replaces the incumbent only when strictly
/// better, so results are deterministic for polygons with non-unique poles.
pub fn pole_of_inaccessibility(p: &Polygon, precision_mm: f64) -> Result<(Point2, f64)> {
    if !(precision_mm > 0.0) {
        return Err(Error::Argument(format!(
            "pole precision must be positive, got {precision_mm}"
        )));
    }
    let (_, centroid) = area_and_centroid(p)?;
    let mut precision = precision_mm;
    loop {
        let (pole, d) = polylabel(p, centroid, precision);
        if d > 0.0 || precision < 1e-9 {
            return Ok((pole, d));
        }
        // inscribed radius below the requested precision; refine until interior
        precision /= 10.0;
    }
}

fn polylabel(p: &Polygon, centroid: Point2, precision: f64) -> (Point2, f64) {
    let (min, max) = p.bounds();
    let width = max.x - min.x;
    let height = max.y - min.y;
    let cell_size = width.min(height);
    let mut seq = 0;
    let mut best = Cell::new(centroid, 0.0, p, seq);
    seq += 1;
    let bbox_cell = Cell::new(min + (max - min) * 0.5, 0.0, p, seq);
    seq += 1;
    if bbox_cell.d > best.d {
        best = bbox_cell;
    }
    if cell_size <= 0.0 {
        return (best.center, best.d);
    }

    let half = cell_size / 2.0;
    let mut queue = BinaryHeap::new();
    let mut y = min.y;
    while y < max.y {
        let mut x = min.x;
        while x < max.x {
            queue.push(Cell::new(Point2::new(x + half, y + half), half, p, seq));
            seq += 1;
            x += cell_size;
        }
        y += cell_size;
    }

    while let Some(cell) = queue.pop() {
        if cell.d > best.d {
            best = Cell { ..cell };
        }
        if cell.potential - best.d <= precision {
            continue;
        }
        let h = cell.half / 2.0;
        for (dx, dy) in [(-h, -h), (h, -h), (-h, h), (h, h)] {
            queue.push(Cell::new(cell.center + Point2::new(dx, dy), h, p, seq));
            seq += 1;
        }
    }
    (best.center, best.d)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(s: &Segment, p: Point2) -> bool {
    p.x >= s.a.x.min(s.b.x)
        && p.x <= s.a.x.max(s.b.x)
        && p.y >= s.a.y.min(s.b.y)
        && p.y <= s.a.y.max(s.b.y)
}

/// Closed-segment intersection test, including touching and collinear overlap.
pub fn segments_intersect(s1: &Segment, s2: &Segment) -> bool {
    let d1 = orient(s2.a, s2.b, s1.a);
    let d2 = orient(s2.a, s2.b, s1.b);
    let d3 = orient(s1.a, s1.b, s2.a);
    let d4 = orient(s1.a, s1.b, s2.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(s2, s1.a))
        || (d2 == 0.0 && on_segment(s2, s1.b))
        || (d3 == 0.0 && on_segment(s1, s2.a))
        || (d4 == 0.0 && on_segment(s1, s2.b))
}

pub fn segment_min_distance(s1: &Segment, s2: &Segment) -> f64 {
    if segments_intersect(s1, s2) {
        return 0.0;
    }
    s2.distance_to_point(s1.a)
        .min(s2.distance_to_point(s1.b))
        .min(s1.distance_to_point(s2.a))
        .min(s1.distance_to_point(s2.b))
}

fn polyline_segments(pts: &[Point2]) -> impl Iterator<Item = Segment> + '_ {
    let single = (pts.len() == 1).then(|| Segment::new(pts[0], pts[0]));
    single
        .into_iter()
        .chain(pts.windows(2).map(|w| Segment::new(w[0], w[1])))
}

/// Minimum distance between two polylines; a single point is a degenerate
/// polyline.
pub fn polyline_min_distance(a: &[Point2], b: &[Point2]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("polyline needs at least one point".into()));
    }
    let mut best = f64::INFINITY;
    for s1 in polyline_segments(a) {
        for s2 in polyline_segments(b) {
            best = best.min(segment_min_distance(&s1, &s2));
            if best == 0.0 {
                return Ok(0.0);
            }
        }
    }
    Ok(best)
}

/// Result of a local plane fit on the depth map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalEstimate {
    pub normal: Vec3,
    /// Set when too few same-label samples were available; `normal` is
    /// then straight up.
    pub degenerate: bool,
}

/// Least-squares plane fit over a square window of same-label depth
/// samples around pixel `(col, row)`.
pub fn surface_normal(
    maps: &SceneMaps,
    px: (usize, usize),
    window_px: usize,
) -> Result<NormalEstimate> {
    let (col, row) = px;
    if col >= maps.width_px || row >= maps.height_px {
        return Err(Error::Argument(format!(
            "pixel ({col}, {row}) outside {}x{} map",
            maps.width_px, maps.height_px
        )));
    }
    if window_px == 0 || window_px.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "normal window must be odd and positive, got {window_px}"
        )));
    }
    let label = maps.label_at(col, row);
    let r = window_px / 2;
    let c0 = col.saturating_sub(r);
    let c1 = (col + r).min(maps.width_px - 1);
    let r0 = row.saturating_sub(r);
    let r1 = (row + r).min(maps.height_px - 1);
    let res = maps.resolution_mm_per_px;

    let mut samples = Vec::new();
    for rr in r0..=r1 {
        for cc in c0..=c1 {
            if maps.label_at(cc, rr) == label {
                samples.push((
                    (cc as f64 - col as f64) * res,
                    (rr as f64 - row as f64) * res,
                    maps.depth_at(cc, rr),
                ));
            }
        }
    }
    let flat = NormalEstimate {
        normal: Vec3::UP,
        degenerate: true,
    };
    if samples.len() < 3 {
        return Ok(flat);
    }
    let n = samples.len() as f64;
    let (mx, my, mz) = samples.iter().fold((0.0, 0.0, 0.0), |acc, s| {
        (acc.0 + s.0 / n, acc.1 + s.1 / n, acc.2 + s.2 / n)
    });
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, z) in &samples {
        let (dx, dy, dz) = (x - mx, y - my, z - mz);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() <= 1e-12 * (sxx * syy).max(1.0) {
        return Ok(flat);
    }
    // z = a x + b y + c
    let a = (sxz * syy - syz * sxy) / det;
    let b = (syz * sxx - sxz * sxy) / det;
    let len = (a * a + b * b + 1.0).sqrt();
    Ok(NormalEstimate {
        normal: Vec3::new(-a / len, -b / len, 1.0 / len),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pts(v: &[(f64, f64)]) -> Vec<Point2> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    fn unit_square() -> Polygon {
        Polygon::new(pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])).unwrap()
    }

    fn l_shape() -> Polygon {
        Polygon::new(pts(&[
            (0., 0.),
            (3., 0.),
            (3., 1.),
            (1., 1.),
            (1., 3.),
            (0., 3.),
        ]))
        .unwrap()
    }

    #[test]
    fn area_and_centroid_examples() {
        let (a, c) = area_and_centroid(&unit_square()).unwrap();
        assert_abs_diff_eq!(a, 1.0);
        assert_abs_diff_eq!(c.x, 0.5);
        assert_abs_diff_eq!(c.y, 0.5);

        let rect = Polygon::rectangle(Point2::new(0., 0.), 4., 2.).unwrap();
        let (a, c) = area_and_centroid(&rect).unwrap();
        assert_abs_diff_eq!(a, 8.0);
        assert_abs_diff_eq!(c.x, 2.0);
        assert_abs_diff_eq!(c.y, 1.0);

        // hand decomposition: [0,3]x[0,1] (area 3, centroid (1.5, 0.5)) plus
        // [0,1]x[1,3] (area 2, centroid (0.5, 2.0)) -> (5.5/5, 5.5/5)
        let (a, c) = area_and_centroid(&l_shape()).unwrap();
        assert_abs_diff_eq!(a, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.x, 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(c.y, 1.1, epsilon = 1e-12);
    }

    #[test]
    fn clockwise_input_is_normalized() {
        let cw = Polygon::new(pts(&[(0., 0.), (0., 1.), (1., 1.), (1., 0.)])).unwrap();
        assert!(signed_area(cw.vertices()) > 0.0);
        assert_abs_diff_eq!(area_and_centroid(&cw).unwrap().0, 1.0);
    }

    #[test]
    fn degenerate_polygons_are_rejected() {
        assert!(Polygon::new(pts(&[(0., 0.), (1., 0.)])).is_err());
        let sliver = Polygon::new(pts(&[(0., 0.), (10., 0.), (20., 0.01)])).unwrap();
        assert!(matches!(
            area_and_centroid(&sliver),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(pole_of_inaccessibility(&sliver, 1.0).is_err());
    }

    #[test]
    fn signed_distance_examples() {
        assert_abs_diff_eq!(
            distance_to_contour(Point2::new(0.5, 0.5), &unit_square()),
            0.5
        );
        assert_abs_diff_eq!(
            distance_to_contour(Point2::new(1.0, 1.0), &unit_square()),
            0.0
        );
        // outside the notch; the edge y = 1 (x in [1, 3]) is 0.1 away,
        // closer than the reflex corner (1, 1) at 0.1 * sqrt(2)
        let d = distance_to_contour(Point2::new(1.1, 1.1), &l_shape());
        assert_abs_diff_eq!(d, -0.1, epsilon = 1e-12);
    }

    #[test]
    fn pole_of_square_and_rectangle() {
        let (pole, d) = pole_of_inaccessibility(&unit_square(), 0.001).unwrap();
        assert_abs_diff_eq!(pole.x, 0.5, epsilon = 0.001);
        assert_abs_diff_eq!(pole.y, 0.5, epsilon = 0.001);
        assert_abs_diff_eq!(d, 0.5, epsilon = 0.001);

        let rect = Polygon::rectangle(Point2::new(0., 0.), 4., 2.).unwrap();
        let (pole, d) = pole_of_inaccessibility(&rect, 0.01).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 0.01);
        assert_abs_diff_eq!(pole.y, 1.0, epsilon = 0.01);
        assert!((1.0..=3.0).contains(&pole.x));
        // deterministic tie-break: the centroid seed wins
        assert_eq!(pole_of_inaccessibility(&rect, 0.01).unwrap().0, pole);
        assert_abs_diff_eq!(pole.x, 2.0);
    }

    #[test]
    fn pole_of_l_shape_matches_grid_oracle() {
        let l = l_shape();
        let mut best = f64::NEG_INFINITY;
        for i in 0..=300 {
            for j in 0..=300 {
                let p = Point2::new(i as f64 * 0.01, j as f64 * 0.01);
                best = best.max(distance_to_contour(p, &l));
            }
        }
        let (pole, d) = pole_of_inaccessibility(&l, 0.001).unwrap();
        assert!(
            (d - best).abs() <= 0.001 + 0.01,
            "pole {d} vs oracle {best}"
        );
        assert!(l.contains(pole));
    }

    #[test]
    fn pole_rejects_bad_precision() {
        assert!(pole_of_inaccessibility(&unit_square(), 0.0).is_err());
        assert!(pole_of_inaccessibility(&unit_square(), -1.0).is_err());
    }

    #[test]
    fn segment_distance_examples() {
        let s = |a: (f64, f64), b: (f64, f64)| {
            Segment::new(Point2::new(a.0, a.1), Point2::new(b.0, b.1))
        };
        assert_abs_diff_eq!(
            segment_min_distance(&s((0., 0.), (1., 0.)), &s((0., 1.), (1., 1.))),
            1.0
        );
        assert_abs_diff_eq!(
            segment_min_distance(&s((0., 0.), (1., 1.)), &s((0., 1.), (1., 0.))),
            0.0
        );
        assert_abs_diff_eq!(
            segment_min_distance(&s((0., 0.), (1., 0.)), &s((2., 1.), (3., 1.))),
            2f64.sqrt()
        );
        // collinear, touching
        assert_abs_diff_eq!(
            segment_min_distance(&s((0., 0.), (1., 0.)), &s((1., 0.), (2., 0.))),
            0.0
        );
        // degenerate point segment
        assert_abs_diff_eq!(
            segment_min_distance(&s((0., 2.), (0., 2.)), &s((-1., 0.), (1., 0.))),
            2.0
        );
    }

    #[test]
    fn polyline_distance_examples() {
        let d = polyline_min_distance(&[Point2::new(0., 0.)], &[Point2::new(3., 4.)]).unwrap();
        assert_abs_diff_eq!(d, 5.0);
        let line = pts(&[(0., 0.), (10., 5.), (20., -3.)]);
        assert_eq!(polyline_min_distance(&line, &line).unwrap(), 0.0);
        assert!(polyline_min_distance(&[], &line).is_err());
    }

    fn ramp_maps(angle_deg: f64, noise: Option<u64>) -> SceneMaps {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(noise.unwrap_or(0));
        let res = 2.0;
        let (w, h) = (41, 41);
        let mut maps = SceneMaps::empty(Point2::new(0., 0.), res, w, h);
        let slope = angle_deg.to_radians().tan();
        for r in 0..h {
            for c in 0..w {
                let mut z = 100.0 + c as f64 * slope * res;
                if noise.is_some() {
                    z += rng.random_range(-1.0..=1.0);
                }
                maps.set(c, r, Some("a".into()), z);
            }
        }
        maps
    }

    #[test]
    fn flat_and_ramp_normals() {
        let flat = ramp_maps(0.0, None);
        let n = surface_normal(&flat, (20, 20), 5).unwrap();
        assert!(!n.degenerate);
        assert_abs_diff_eq!(n.normal.z, 1.0, epsilon = 1e-12);

        let ramp = ramp_maps(30.0, None);
        let n = surface_normal(&ramp, (20, 20), 5).unwrap();
        let s = 30f64.to_radians().sin();
        let c = 30f64.to_radians().cos();
        assert_abs_diff_eq!(n.normal.x, -s, epsilon = 1e-6);
        assert_abs_diff_eq!(n.normal.y, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(n.normal.z, c, epsilon = 1e-6);
        assert_abs_diff_eq!(n.normal.norm(), 1.0, epsilon = 1e-9);

        // border windows are clamped
        let n = surface_normal(&ramp, (0, 0), 11).unwrap();
        assert_abs_diff_eq!(n.normal.x, -s, epsilon = 1e-6);
    }

    #[test]
    fn noisy_ramp_normal_within_two_degrees() {
        let clean = surface_normal(&ramp_maps(30.0, None), (20, 20), 11).unwrap();
        for seed in 0..20 {
            let noisy = surface_normal(&ramp_maps(30.0, Some(seed)), (20, 20), 11).unwrap();
            assert!(noisy.normal.angle_to(clean.normal).to_degrees() < 2.0);
        }
    }

    #[test]
    fn too_few_same_label_samples_is_degenerate() {
        let mut maps = SceneMaps::empty(Point2::new(0., 0.), 1.0, 5, 5);
        maps.set(2, 2, Some("a".into()), 10.0);
        maps.set(2, 3, Some("a".into()), 10.0);
        let n = surface_normal(&maps, (2, 2), 3).unwrap();
        assert!(n.degenerate);
        assert_eq!(n.normal, Vec3::UP);
        assert!(surface_normal(&maps, (2, 2), 4).is_err());
        assert!(surface_normal(&maps, (9, 2), 3).is_err());
    }
}
