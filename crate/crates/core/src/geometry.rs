//! Planar polygon helpers: area, centroid, point containment, and segment tests.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Point) -> f64 {
        self.sub(other).norm()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Unit vector for a heading measured counter-clockwise from +x.
pub fn heading(angle: f64) -> Point {
    Point::new(angle.cos(), angle.sin())
}

/// Closed polygon given as an open vertex ring (last vertex is not repeated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(mut vertices: Vec<Point>) -> Self {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area; positive for counter-clockwise rings.
    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point {
        let a = self.signed_area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let c = p.cross(q);
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Point::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn make_counter_clockwise(&mut self) {
        if self.signed_area() < 0.0 {
            self.vertices.reverse();
        }
    }

    /// Even-odd containment test.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn on_boundary(&self, p: Point, tol: f64) -> bool {
        self.edges().any(|(a, b)| point_segment_distance(p, a, b) <= tol)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// True when no two non-adjacent edges touch and no adjacent edges fold back.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if adjacent {
                    // Adjacent edges share exactly one vertex; collinear overlap means a fold.
                    if collinear_overlap(a, b, c, d) {
                        return false;
                    }
                } else if segments_touch(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) - 1e-12
        && p.x <= a.x.max(b.x) + 1e-12
        && p.y >= a.y.min(b.y) - 1e-12
        && p.y <= a.y.max(b.y) + 1e-12
}

/// Closed-segment intersection (touching counts).
pub fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
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

/// Interiors of the two segments cross at a single point (no touching, no collinearity).
pub fn segments_cross_properly(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn collinear_overlap(a: Point, b: Point, c: Point, d: Point) -> bool {
    if orient(a, b, c) != 0.0 || orient(a, b, d) != 0.0 {
        return false;
    }
    let dir = b.sub(a);
    let len2 = dir.dot(dir);
    if len2 == 0.0 {
        return true;
    }
    let t0 = c.sub(a).dot(dir) / len2;
    let t1 = d.sub(a).dot(dir) / len2;
    let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
    hi.min(1.0) - lo.max(0.0) > 1e-12
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(Point::new(a.x + t * ab.x, a.y + t * ab.y))
}

/// Length of the part of segment `a`–`b` lying within `radius` of segment `c`–`d`.
///
/// The region within `radius` of a segment is a convex capsule, so its intersection
/// with a line is one interval: the union of the slab and the two end-disk chords.
pub fn segment_length_within(a: Point, b: Point, c: Point, d: Point, radius: f64) -> f64 {
    let ab = b.sub(a);
    let len = ab.norm();
    if len == 0.0 {
        return 0.0;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut merge = |iv: Option<(f64, f64)>| {
        if let Some((s, e)) = iv {
            lo = lo.min(s);
            hi = hi.max(e);
        }
    };
    merge(disk_chord(a, ab, c, radius));
    merge(disk_chord(a, ab, d, radius));
    let cd = d.sub(c);
    let cd_len = cd.norm();
    if cd_len > 0.0 {
        let u = Point::new(cd.x / cd_len, cd.y / cd_len);
        let nrm = Point::new(-u.y, u.x);
        // Slab: 0 <= (p - c)·u <= |cd| and |(p - c)·n| <= radius, with p = a + t·ab.
        let along = clip_linear(a.sub(c).dot(u), ab.dot(u), 0.0, cd_len);
        let across = clip_linear(a.sub(c).dot(nrm), ab.dot(nrm), -radius, radius);
        if let (Some(x), Some(y)) = (along, across) {
            let s = x.0.max(y.0);
            let e = x.1.min(y.1);
            if s <= e {
                merge(Some((s, e)));
            }
        }
    }
    let s = lo.max(0.0);
    let e = hi.min(1.0);
    if e > s {
        (e - s) * len
    } else {
        0.0
    }
}

/// Parameter interval where `offset + t·slope` lies in `[lo, hi]`.
fn clip_linear(offset: f64, slope: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if slope.abs() < 1e-15 {
        return (offset >= lo && offset <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let t0 = (lo - offset) / slope;
    let t1 = (hi - offset) / slope;
    Some(if t0 < t1 { (t0, t1) } else { (t1, t0) })
}

fn disk_chord(a: Point, ab: Point, center: Point, radius: f64) -> Option<(f64, f64)> {
    let f = a.sub(center);
    let qa = ab.dot(ab);
    let qb = 2.0 * f.dot(ab);
    let qc = f.dot(f) - radius * radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some(((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)))
}
