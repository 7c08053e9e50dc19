//! Convex polygons with exact orientation predicates.
//!
//! Vertex classification uses the exact sign of the orientation determinant;
//! new vertices created by clipping are computed in the polygon's scalar type.

use std::cmp::Ordering;

use crate::extprec::expansion::orient2d;
use crate::extprec::Real;
use crate::geometry::{Point2, Side};

/// Exact orientation of the turn `a -> b -> c`.
#[inline]
pub fn orient<R: Real>(a: Point2<R>, b: Point2<R>, c: Point2<R>) -> i8 {
    orient2d(a.parts(), b.parts(), c.parts())
}

/// Convex polygon, counterclockwise. Fewer than three vertices means empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon<R> {
    vertices: Vec<Point2<R>>,
}

impl<R: Real> ConvexPolygon<R> {
    pub fn empty() -> Self {
        ConvexPolygon { vertices: Vec::new() }
    }

    /// Wraps a vertex list already known to be convex and counterclockwise.
    pub fn from_ccw(vertices: Vec<Point2<R>>) -> Self {
        let mut p = ConvexPolygon { vertices };
        p.cleanup();
        p
    }

    /// Convex hull of a point cloud.
    pub fn hull(points: &[Point2<R>]) -> Self {
        ConvexPolygon::from_ccw(convex_hull(points))
    }

    pub fn vertices(&self) -> &[Point2<R>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2<R>, Point2<R>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn cleanup(&mut self) {
        self.vertices.dedup();
        while self.vertices.len() > 1 && self.vertices.first() == self.vertices.last() {
            self.vertices.pop();
        }
        if self.vertices.len() < 3 {
            self.vertices.clear();
        }
    }

    pub fn area(&self) -> R {
        let mut s = R::zero();
        for (a, b) in self.edges() {
            s += a.cross(b);
        }
        s.mul_f64(0.5)
    }

    pub fn centroid(&self) -> Point2<R> {
        if self.is_empty() {
            return Point2::zero();
        }
        let o = self.vertices[0];
        let mut cx = R::zero();
        let mut cy = R::zero();
        let mut a2 = R::zero();
        for (a, b) in self.edges() {
            let (a, b) = (a - o, b - o);
            let w = a.cross(b);
            a2 += w;
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
        }
        let k = R::one() / (a2.mul_f64(3.0));
        o + Point2::new(cx * k, cy * k)
    }

    /// Bounding box `(min, max)`.
    pub fn bounds(&self) -> (Point2<R>, Point2<R>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo = Point2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    pub fn contains_strict(&self, p: Point2<R>) -> bool {
        !self.is_empty() && self.edges().all(|(a, b)| orient(a, b, p) > 0)
    }

    pub fn contains_closed(&self, p: Point2<R>) -> bool {
        !self.is_empty() && self.edges().all(|(a, b)| orient(a, b, p) >= 0)
    }

    /// Signed distance to the boundary, positive inside (native precision).
    pub fn margin(&self, p: Point2<R>) -> f64 {
        let [px, py] = p.to_f64();
        self.edges()
            .map(|(a, b)| {
                let [ax, ay] = a.to_f64();
                let [bx, by] = b.to_f64();
                let (dx, dy) = (bx - ax, by - ay);
                (dx * (py - ay) - dy * (px - ax)) / dx.hypot(dy)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Keeps the part on the left of (or on) the directed line `a -> b`.
    pub fn clip_left_of(&self, a: Point2<R>, b: Point2<R>) -> Self {
        let d = b - a;
        self.clip_by(|p| orient(a, b, p), |p, q| {
            let dp = d.cross(p - a);
            let dq = d.cross(q - a);
            p.lerp(q, dp / (dp - dq))
        })
    }

    /// Keeps the closed half-plane of `side` (`x >= 0` for `Plus`).
    pub fn clip_side(&self, side: Side) -> Self {
        let s = side.sign();
        self.clip_by(
            |p| {
                let h = p.x.parts()[0] * s;
                if h > 0.0 {
                    1
                } else if h < 0.0 {
                    -1
                } else {
                    0
                }
            },
            |p, q| {
                let t = p.x / (p.x - q.x);
                Point2::new(R::zero(), p.y + (q.y - p.y) * t)
            },
        )
    }

    fn clip_by(&self, class: impl Fn(Point2<R>) -> i8, cut: impl Fn(Point2<R>, Point2<R>) -> Point2<R>) -> Self {
        if self.is_empty() {
            return ConvexPolygon::empty();
        }
        let n = self.vertices.len();
        let signs: Vec<i8> = self.vertices.iter().map(|&p| class(p)).collect();
        if signs.iter().all(|&s| s >= 0) {
            return self.clone();
        }
        if signs.iter().all(|&s| s <= 0) {
            return ConvexPolygon::empty();
        }
        let mut out = Vec::with_capacity(n + 2);
        for i in 0..n {
            let j = (i + 1) % n;
            let (p, q) = (self.vertices[i], self.vertices[j]);
            if signs[i] >= 0 {
                out.push(p);
            }
            if (signs[i] > 0 && signs[j] < 0) || (signs[i] < 0 && signs[j] > 0) {
                out.push(cut(p, q));
            }
        }
        ConvexPolygon::from_ccw(out)
    }

    /// Intersection with another convex polygon.
    pub fn intersect(&self, other: &ConvexPolygon<R>) -> Self {
        let mut p = self.clone();
        for (a, b) in other.edges() {
            if p.is_empty() {
                break;
            }
            p = p.clip_left_of(a, b);
        }
        p
    }

    /// Image under a map that is affine on the polygon, restoring
    /// counterclockwise order when the map reverses orientation.
    pub fn map_affine(&self, f: impl Fn(Point2<R>) -> Point2<R>, reverses: bool) -> Self {
        let mut v: Vec<Point2<R>> = self.vertices.iter().map(|&p| f(p)).collect();
        if reverses {
            v.reverse();
        }
        ConvexPolygon::from_ccw(v)
    }

    /// Certifies convexity exactly: every vertex lies on the closed left side
    /// of every edge, and the polygon has positive area.
    pub fn is_convex(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let ok = self.edges().all(|(a, b)| self.vertices.iter().all(|&p| orient(a, b, p) >= 0));
        ok && self.area().to_f64() > 0.0
    }

    /// Number of boundary components of the intersection with the line through
    /// `p` with direction `d`, counted as sign changes of the vertex
    /// classification (a convex polygon gives at most two).
    pub fn line_sign_changes(&self, p: Point2<R>, d: Point2<R>) -> usize {
        let q = p + d;
        let signs: Vec<i8> = self.vertices.iter().map(|&v| orient(p, q, v)).filter(|&s| s != 0).collect();
        if signs.is_empty() {
            return 0;
        }
        let n = signs.len();
        (0..n).filter(|&i| signs[i] != signs[(i + 1) % n]).count()
    }

    pub fn cast<S: Real>(&self) -> ConvexPolygon<S> {
        ConvexPolygon::from_ccw(self.vertices.iter().map(|v| v.cast()).collect())
    }
}

fn cmp_points<R: Real>(a: &Point2<R>, b: &Point2<R>) -> Ordering {
    a.x.partial_cmp(&b.x)
        .unwrap_or(Ordering::Equal)
        .then(a.y.partial_cmp(&b.y).unwrap_or(Ordering::Equal))
}

/// Andrew's monotone chain with exact turns; collinear points are dropped.
pub fn convex_hull<R: Real>(points: &[Point2<R>]) -> Vec<Point2<R>> {
    let mut pts: Vec<Point2<R>> = points.to_vec();
    pts.sort_by(cmp_points);
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point2<R>> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2<R>> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
