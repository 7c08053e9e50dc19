//! A convex, strictly forward-invariant polygon containing the attractor.
//!
//! The triangle `(p0, f p0, f^2 p0)` is mapped into itself but touches its own
//! boundary: its edge on the unstable eigenline of the fixed point is mapped
//! into that same line. The polygon used here starts from that triangle and
//! iterates `P <- hull(f(P) + eps * octagon)` until the result is mapped into
//! its own interior, which is then verified exactly on the image vertices and
//! by sampling the image of the boundary.

use rand::Rng;
use serde::Serialize;

use super::LoziParams;
use crate::extprec::{DDReal, Real};
use crate::geometry::{Point2, Side};
use crate::polygon::ConvexPolygon;

/// Default inflation radius of the refinement.
pub const DEFAULT_INFLATION: f64 = 1e-3;
const REFINE_ITERATIONS: usize = 40;
const BOUNDARY_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AbsorbingError {
    #[error("absorbing polygon failed verification: min margin {margin:e} at ({x}, {y})")]
    NotInvariant { margin: f64, x: f64, y: f64 },
    #[error("refinement escaped to non-finite coordinates")]
    Diverged,
}

#[derive(Clone, Debug)]
pub struct AbsorbingSet {
    polygon: ConvexPolygon<DDReal>,
    triangle: ConvexPolygon<DDReal>,
    margin: f64,
    triangle_margin: f64,
    inflation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AbsorbingSummary {
    pub vertices: usize,
    pub margin: f64,
    pub triangle_margin: f64,
    pub inflation: f64,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
}

impl AbsorbingSet {
    pub fn polygon(&self) -> &ConvexPolygon<DDReal> {
        &self.polygon
    }

    /// The triangle the refinement was seeded from.
    pub fn triangle(&self) -> &ConvexPolygon<DDReal> {
        &self.triangle
    }

    /// Minimum distance from the sampled image of the boundary to the boundary.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Same quantity for the seed triangle (zero up to rounding).
    pub fn triangle_margin(&self) -> f64 {
        self.triangle_margin
    }

    pub fn contains<R: Real>(&self, p: Point2<R>) -> bool {
        self.polygon.contains_strict(p.cast::<DDReal>())
    }

    /// Cheap containment test in native precision.
    pub fn contains_approx(&self, p: [f64; 2]) -> bool {
        let v = self.polygon.vertices();
        let n = v.len();
        (0..n).all(|i| {
            let [ax, ay] = v[i].to_f64();
            let [bx, by] = v[(i + 1) % n].to_f64();
            (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) > 0.0
        })
    }

    /// Uniform random point (fan triangulation plus barycentric sampling).
    pub fn sample<R: Real, G: Rng + ?Sized>(&self, rng: &mut G) -> Point2<R> {
        let v: Vec<[f64; 2]> = self.polygon.vertices().iter().map(|p| p.to_f64()).collect();
        let tri_area = |i: usize| {
            let (a, b, c) = (v[0], v[i], v[i + 1]);
            ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) * 0.5
        };
        let areas: Vec<f64> = (1..v.len() - 1).map(tri_area).collect();
        let total: f64 = areas.iter().sum();
        let mut r = rng.gen::<f64>() * total;
        let mut k = 0;
        while k + 1 < areas.len() && r > areas[k] {
            r -= areas[k];
            k += 1;
        }
        let (a, b, c) = (v[0], v[k + 1], v[k + 2]);
        let (mut s, mut t): (f64, f64) = (rng.gen(), rng.gen());
        if s + t > 1.0 {
            s = 1.0 - s;
            t = 1.0 - t;
        }
        Point2::from_f64(a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]))
    }

    pub fn summary(&self) -> AbsorbingSummary {
        let (lo, hi) = self.polygon.bounds();
        AbsorbingSummary {
            vertices: self.polygon.len(),
            margin: self.margin,
            triangle_margin: self.triangle_margin,
            inflation: self.inflation,
            x_range: [lo.x.to_f64(), hi.x.to_f64()],
            y_range: [lo.y.to_f64(), hi.y.to_f64()],
        }
    }
}

/// The triangle `(p0, f p0, f^2 p0)`.
pub fn misiurewicz_triangle(params: &LoziParams) -> ConvexPolygon<DDReal> {
    let f = params.map::<DDReal>();
    let p0 = f.p0();
    let p1 = f.apply(p0);
    let p2 = f.apply(p1);
    ConvexPolygon::hull(&[p0, p1, p2])
}

/// Image of a convex polygon as the two convex pieces `f(P n M_-)`, `f(P n M_+)`.
pub fn image_pieces(params: &LoziParams, p: &ConvexPolygon<DDReal>) -> [ConvexPolygon<DDReal>; 2] {
    let f = params.map::<DDReal>();
    [Side::Minus, Side::Plus].map(|s| p.clip_side(s).map_affine(|q| f.apply_side(s, q), true))
}

fn octagon(eps: f64) -> Vec<Point2<DDReal>> {
    (0..8)
        .map(|k| {
            let t = std::f64::consts::FRAC_PI_4 * k as f64;
            Point2::from_f64(eps * t.cos(), eps * t.sin())
        })
        .collect()
}

fn inflate(points: &[Point2<DDReal>], eps: f64) -> ConvexPolygon<DDReal> {
    let oct = octagon(eps);
    let pts: Vec<Point2<DDReal>> = points.iter().flat_map(|&p| oct.iter().map(move |&d| p + d)).collect();
    ConvexPolygon::hull(&pts)
}

/// Minimum margin of `f(boundary)` inside `target` over evenly spaced samples.
fn boundary_margin(params: &LoziParams, p: &ConvexPolygon<DDReal>, target: &ConvexPolygon<DDReal>, samples: usize) -> (f64, [f64; 2]) {
    let f = params.map::<DDReal>();
    let perim: f64 = p.edges().map(|(a, b)| (b - a).norm().to_f64()).sum();
    let mut worst = (f64::INFINITY, [0.0, 0.0]);
    for (a, b) in p.edges() {
        let len = (b - a).norm().to_f64();
        let k = ((samples as f64) * len / perim).ceil().max(1.0) as usize;
        for i in 0..k {
            let q = a.lerp(b, DDReal::from(i as f64 / k as f64));
            let img = f.apply(q);
            let m = target.margin(img);
            if m < worst.0 {
                worst = (m, img.to_f64());
            }
        }
    }
    worst
}

pub fn absorbing_set(params: &LoziParams) -> Result<AbsorbingSet, AbsorbingError> {
    absorbing_set_with(params, DEFAULT_INFLATION)
}

pub fn absorbing_set_with(params: &LoziParams, inflation: f64) -> Result<AbsorbingSet, AbsorbingError> {
    let triangle = misiurewicz_triangle(params);
    let (triangle_margin, _) = boundary_margin(params, &triangle, &triangle, BOUNDARY_SAMPLES);
    let mut poly = inflate(triangle.vertices(), inflation);
    for _ in 0..REFINE_ITERATIONS {
        let pts: Vec<Point2<DDReal>> = image_pieces(params, &poly).iter().flat_map(|q| q.vertices().to_vec()).collect();
        if pts.iter().any(|p| !p.is_finite()) {
            return Err(AbsorbingError::Diverged);
        }
        poly = inflate(&pts, inflation);
    }
    // Exact check on the image vertices, then the sampled margin.
    for piece in image_pieces(params, &poly) {
        for &v in piece.vertices() {
            if !poly.contains_strict(v) {
                let [x, y] = v.to_f64();
                return Err(AbsorbingError::NotInvariant { margin: poly.margin(v), x, y });
            }
        }
    }
    let (margin, [x, y]) = boundary_margin(params, &poly, &poly, BOUNDARY_SAMPLES);
    if !(margin > 0.0) {
        return Err(AbsorbingError::NotInvariant { margin, x, y });
    }
    Ok(AbsorbingSet { polygon: poly, triangle, margin, triangle_margin, inflation })
}
