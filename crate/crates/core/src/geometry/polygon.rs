//! Planar primitives: simple polygons, segments and axis-aligned rectangles.

use glam::DVec2;
use serde::{Deserialize, Serialize};

pub const EPS: f64 = 1e-9;

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: DVec2, max: DVec2) -> Self {
        Self {
            min: min.to_array(),
            max: max.to_array(),
        }
    }

    pub fn min(&self) -> DVec2 {
        DVec2::from_array(self.min)
    }

    pub fn max(&self) -> DVec2 {
        DVec2::from_array(self.max)
    }

    pub fn size(&self) -> DVec2 {
        self.max() - self.min()
    }

    pub fn contains(&self, p: DVec2) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }

    /// The four boundary edges, counter-clockwise from the lower-left corner.
    pub fn edges(&self) -> [Segment; 4] {
        let a = self.min();
        let c = self.max();
        let b = DVec2::new(c.x, a.y);
        let d = DVec2::new(a.x, c.y);
        [
            Segment::new(a, b),
            Segment::new(b, c),
            Segment::new(c, d),
            Segment::new(d, a),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: DVec2,
    pub b: DVec2,
}

impl Segment {
    pub fn new(a: DVec2, b: DVec2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> DVec2 {
        (self.a + self.b) * 0.5
    }

    pub fn closest_point(&self, p: DVec2) -> DVec2 {
        let d = self.b - self.a;
        let len2 = d.length_squared();
        if len2 <= EPS * EPS {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        self.a + d * t
    }

    pub fn distance_to_point(&self, p: DVec2) -> f64 {
        self.closest_point(p).distance(p)
    }

    /// True if the two segments share at least one point.
    pub fn intersects(&self, other: &Segment) -> bool {
        let d1 = orient(other.a, other.b, self.a);
        let d2 = orient(other.a, other.b, self.b);
        let d3 = orient(self.a, self.b, other.a);
        let d4 = orient(self.a, self.b, other.b);
        if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
            && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
        {
            return true;
        }
        (d1.abs() <= EPS && on_segment(other, self.a))
            || (d2.abs() <= EPS && on_segment(other, self.b))
            || (d3.abs() <= EPS && on_segment(self, other.a))
            || (d4.abs() <= EPS && on_segment(self, other.b))
    }

    /// True if the segments cross at a single interior point of both.
    pub fn crosses_properly(&self, other: &Segment) -> bool {
        let d1 = orient(other.a, other.b, self.a);
        let d2 = orient(other.a, other.b, self.b);
        let d3 = orient(self.a, self.b, other.a);
        let d4 = orient(self.a, self.b, other.b);
        ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
            && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
    }

    /// Closest pair of points `(on self, on other)`.
    pub fn closest_points(&self, other: &Segment) -> (DVec2, DVec2) {
        if self.intersects(other) {
            let p = self.intersection_point(other).unwrap_or(self.a);
            return (p, p);
        }
        let candidates = [
            (self.a, other.closest_point(self.a)),
            (self.b, other.closest_point(self.b)),
            (self.closest_point(other.a), other.a),
            (self.closest_point(other.b), other.b),
        ];
        let mut best = candidates[0];
        for c in &candidates[1..] {
            if c.0.distance_squared(c.1) < best.0.distance_squared(best.1) {
                best = *c;
            }
        }
        best
    }

    pub fn intersection_point(&self, other: &Segment) -> Option<DVec2> {
        let r = self.b - self.a;
        let s = other.b - other.a;
        let denom = r.perp_dot(s);
        if denom.abs() <= EPS {
            return None;
        }
        let t = (other.a - self.a).perp_dot(s) / denom;
        Some(self.a + r * t)
    }
}

/// Twice the signed area of triangle `(a, b, c)`; positive when counter-clockwise.
pub fn orient(a: DVec2, b: DVec2, c: DVec2) -> f64 {
    (b - a).perp_dot(c - a)
}

fn on_segment(s: &Segment, p: DVec2) -> bool {
    p.x >= s.a.x.min(s.b.x) - EPS
        && p.x <= s.a.x.max(s.b.x) + EPS
        && p.y >= s.a.y.min(s.b.y) - EPS
        && p.y <= s.a.y.max(s.b.y) + EPS
}

/// A closed simple polygon given by its vertices (implicitly closed).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<DVec2>,
}

impl Polygon {
    pub fn new(vertices: Vec<DVec2>) -> Self {
        Self { vertices }
    }

    pub fn from_array(vertices: &[[f64; 2]]) -> Self {
        Self::new(vertices.iter().map(|v| DVec2::from_array(*v)).collect())
    }

    pub fn rectangle(min: DVec2, max: DVec2) -> Self {
        Self::new(vec![
            min,
            DVec2::new(max.x, min.y),
            max,
            DVec2::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[DVec2] {
        &self.vertices
    }

    pub fn to_array(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|v| v.to_array()).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].perp_dot(self.vertices[(i + 1) % n]))
            .sum::<f64>()
            * 0.5
    }

    pub fn centroid(&self) -> DVec2 {
        let n = self.vertices.len() as f64;
        self.vertices.iter().copied().sum::<DVec2>() / n
    }

    pub fn bbox(&self) -> (DVec2, DVec2) {
        let mut lo = DVec2::splat(f64::INFINITY);
        let mut hi = DVec2::splat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        (lo, hi)
    }

    /// Even-odd point-in-polygon test. Boundary points may go either way.
    pub fn contains(&self, p: DVec2) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if (vi.y > p.y) != (vj.y > p.y) {
                let x = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    pub fn distance_to_point(&self, p: DVec2) -> f64 {
        self.edges()
            .map(|e| e.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance between any two vertices.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(a.distance(*b));
            }
        }
        d
    }

    /// No two non-adjacent edges touch and no adjacent edges overlap.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 || self.signed_area().abs() <= EPS {
            return false;
        }
        let edges: Vec<Segment> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // collinear backtracking along the shared vertex
                    let (e, f) = (&edges[i], &edges[j]);
                    let (shared, u, w) = if j == i + 1 {
                        (e.b, e.a, f.b)
                    } else {
                        (e.a, e.b, f.a)
                    };
                    let du = u - shared;
                    let dw = w - shared;
                    if du.perp_dot(dw).abs() <= EPS && du.dot(dw) > 0.0 {
                        return false;
                    }
                } else if edges[i].intersects(&edges[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Interiors overlap (touching boundaries is allowed).
    pub fn overlaps(&self, other: &Polygon) -> bool {
        for e in self.edges() {
            for f in other.edges() {
                if e.crosses_properly(&f) {
                    return true;
                }
            }
        }
        let strictly_inside = |poly: &Polygon, p: DVec2| {
            poly.contains(p) && poly.distance_to_point(p) > 1e-7
        };
        self.vertices.iter().any(|v| strictly_inside(other, *v))
            || other.vertices.iter().any(|v| strictly_inside(self, *v))
            || strictly_inside(other, self.centroid())
            || strictly_inside(self, other.centroid())
    }

    /// Smallest distance between the boundaries of two polygons, with the witnessing points.
    pub fn closest_points(&self, other: &Polygon) -> (DVec2, DVec2, f64) {
        let mut best = (DVec2::ZERO, DVec2::ZERO, f64::INFINITY);
        for e in self.edges() {
            for f in other.edges() {
                let (p, q) = e.closest_points(&f);
                let d = p.distance(q);
                if d < best.2 {
                    best = (p, q, d);
                }
            }
        }
        best
    }

    pub fn closest_to_segment(&self, seg: &Segment) -> (DVec2, DVec2, f64) {
        let mut best = (DVec2::ZERO, DVec2::ZERO, f64::INFINITY);
        for e in self.edges() {
            let (p, q) = e.closest_points(seg);
            let d = p.distance(q);
            if d < best.2 {
                best = (p, q, d);
            }
        }
        best
    }

    /// True if the segment passes through the polygon interior.
    pub fn blocks_segment(&self, seg: &Segment) -> bool {
        if self.edges().any(|e| e.crosses_properly(seg)) {
            return true;
        }
        // fully inside, or running along a diagonal between two vertices
        const SAMPLES: usize = 16;
        (1..SAMPLES).any(|k| {
            let p = seg.a.lerp(seg.b, k as f64 / SAMPLES as f64);
            self.contains(p) && self.distance_to_point(p) > 1e-7
        })
    }
}
