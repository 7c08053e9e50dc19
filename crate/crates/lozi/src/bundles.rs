//! Unstable and stable vector/covector bundles and the cocycles `λ_n`, `μ_n`.
//!
//! `v^u(p)` is obtained by pushing `e1` forward from `f^{-depth}(p)`;
//! `v^s(p)` by pulling the stable seed `J^{-1} e2` back from `f^{depth}(p)`.
//! Both converge geometrically with ratio about `μ/λ`.
//!
//! Backward orbits expand rounding errors in the stable direction by roughly
//! `1/μ` per step, so in double-double precision only about 40 backward steps
//! stay on the attractor. Unstable vectors are therefore computed with
//! `min(depth, backward_limit)` steps; the achieved depth is reported.

use serde::Serialize;

use crate::extprec::Real;
use crate::geometry::{Mat2, Point2, Side, SidedPoint, Vec2};
use crate::lozi::{absorbing_set, AbsorbingError, AbsorbingSet, LoziMap, LoziParams};

pub const DEFAULT_DEPTH: usize = 60;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BundleError {
    #[error("backward orbit left the absorbing set after {step} steps")]
    BackwardEscape { step: usize },
    #[error("forward orbit left the absorbing set after {step} steps")]
    ForwardEscape { step: usize },
    #[error("orbit hit the singular line at step {step}")]
    SingularOrbit { step: usize },
    #[error("side tag disagrees with the sign of x")]
    InconsistentSide,
    #[error("unstable and stable directions nearly parallel (det {0:e})")]
    Degenerate(f64),
    #[error(transparent)]
    Absorbing(#[from] AbsorbingError),
}

/// Dual frame at a point.
#[derive(Clone, Copy, Debug)]
pub struct Frame<R> {
    pub v_u: Vec2<R>,
    pub v_s: Vec2<R>,
    pub l_u: Vec2<R>,
    pub l_s: Vec2<R>,
    /// Backward depth actually used for `v_u` (forward depth for `v_s` is the request).
    pub depth_used: usize,
    /// Size of the last refinement step of either vector, an upper estimate of
    /// the remaining convergence error.
    pub residual_bound: f64,
}

impl<R: Real> Frame<R> {
    /// Dual covectors of the columns `(v_u, v_s)`.
    pub fn from_vectors(v_u: Vec2<R>, v_s: Vec2<R>) -> Result<Frame<R>, BundleError> {
        let det = v_u.cross(v_s);
        if det.to_f64().abs() < 1e-8 {
            return Err(BundleError::Degenerate(det.to_f64()));
        }
        let l_u = Point2::new(v_s.y / det, -v_s.x / det);
        let l_s = Point2::new(-v_u.y / det, v_u.x / det);
        Ok(Frame { v_u, v_s, l_u, l_s, depth_used: 0, residual_bound: 0.0 })
    }

    /// `P^u = v^u l^u`.
    pub fn proj_u(&self) -> Mat2<R> {
        outer(self.v_u, self.l_u)
    }

    /// `P^s = v^s l^s`.
    pub fn proj_s(&self) -> Mat2<R> {
        outer(self.v_s, self.l_s)
    }

    /// `det[v_u, v_s]`.
    pub fn det(&self) -> R {
        self.v_u.cross(self.v_s)
    }
}

fn outer<R: Real>(v: Vec2<R>, l: Vec2<R>) -> Mat2<R> {
    Mat2::new(v.x * l.x, v.x * l.y, v.y * l.x, v.y * l.y)
}

/// Unit vector with positive first component.
#[inline]
pub fn fix_e1<R: Real>(v: Vec2<R>) -> Vec2<R> {
    let v = v.normalized();
    if v.x.is_negative() {
        -v
    } else {
        v
    }
}

/// Unit vector with positive second component.
#[inline]
pub fn fix_e2<R: Real>(v: Vec2<R>) -> Vec2<R> {
    let v = v.normalized();
    if v.y.is_negative() {
        -v
    } else {
        v
    }
}

/// Bundle computations for one parameter pair.
#[derive(Clone, Debug)]
pub struct Bundles<R> {
    map: LoziMap<R>,
    absorbing: AbsorbingSet,
    backward_limit: usize,
}

/// Default cap on backward iterations in double-double precision.
pub const DD_BACKWARD_LIMIT: usize = 36;
/// Default cap on backward iterations in native precision.
pub const NATIVE_BACKWARD_LIMIT: usize = 16;

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceFit {
    pub slope: f64,
    pub reference: f64,
    pub n_points: usize,
}

impl<R: Real> Bundles<R> {
    pub fn new(params: &LoziParams) -> Result<Self, BundleError> {
        let backward_limit = if R::EPSILON < 1e-20 { DD_BACKWARD_LIMIT } else { NATIVE_BACKWARD_LIMIT };
        Ok(Bundles { map: params.map(), absorbing: absorbing_set(params)?, backward_limit })
    }

    pub fn with_backward_limit(mut self, limit: usize) -> Self {
        self.backward_limit = limit;
        self
    }

    pub fn map(&self) -> &LoziMap<R> {
        &self.map
    }

    pub fn absorbing(&self) -> &AbsorbingSet {
        &self.absorbing
    }

    pub fn backward_limit(&self) -> usize {
        self.backward_limit
    }

    fn inside(&self, p: Point2<R>) -> bool {
        p.is_finite() && self.absorbing.contains_approx(p.to_f64())
    }

    /// Backward orbit `f^{-1} p, ..., f^{-n} p`, failing if it leaves the absorbing set.
    pub fn backward_orbit(&self, p: Point2<R>, n: usize) -> Result<Vec<Point2<R>>, BundleError> {
        let mut out = Vec::with_capacity(n);
        let mut y = p;
        for j in 1..=n {
            y = self.map.inverse(y);
            if !self.inside(y) {
                return Err(BundleError::BackwardEscape { step: j });
            }
            out.push(y);
        }
        Ok(out)
    }

    /// Forward sides `s_0 = p.side, s_1, ..., s_{n}` of the orbit.
    fn forward_sides(&self, p: SidedPoint<R>, n: usize) -> Result<Vec<Side>, BundleError> {
        if !p.is_consistent() {
            return Err(BundleError::InconsistentSide);
        }
        let mut sides = Vec::with_capacity(n + 1);
        sides.push(p.side);
        let mut z = p.point;
        for j in 1..=n {
            z = self.map.apply(z);
            if !self.inside(z) {
                return Err(BundleError::ForwardEscape { step: j });
            }
            sides.push(Side::of(z.x).ok_or(BundleError::SingularOrbit { step: j })?);
        }
        Ok(sides)
    }

    fn push_from(&self, orbit: &[Point2<R>], depth: usize) -> Result<Vec2<R>, BundleError> {
        let mut v = Vec2::<R>::e1();
        for j in (0..depth).rev() {
            let side = Side::of(orbit[j].x).ok_or(BundleError::SingularOrbit { step: j + 1 })?;
            v = fix_e1(self.map.push(side, v));
        }
        Ok(v)
    }

    /// `v^u(p)` from `depth` backward steps (exactly, erroring on escape).
    pub fn unstable_vector_exact(&self, p: SidedPoint<R>, depth: usize) -> Result<Vec2<R>, BundleError> {
        let orbit = self.backward_orbit(p.point, depth)?;
        self.push_from(&orbit, depth)
    }

    /// `v^u(p)` with depth capped at the backward limit. Returns the vector and
    /// the depth used.
    pub fn unstable_vector(&self, p: SidedPoint<R>, depth: usize) -> Result<(Vec2<R>, usize), BundleError> {
        let d = depth.min(self.backward_limit);
        Ok((self.unstable_vector_exact(p, d)?, d))
    }

    fn pull_along(&self, sides: &[Side], depth: usize) -> Vec2<R> {
        let mut v = fix_e2(self.map.pull(sides[depth], Vec2::e2()));
        for j in (0..depth).rev() {
            v = fix_e2(self.map.pull(sides[j], v));
        }
        v
    }

    /// `v^s(p)` by pulling the seed back from `f^{depth}(p)`.
    pub fn stable_vector(&self, p: SidedPoint<R>, depth: usize) -> Result<Vec2<R>, BundleError> {
        let sides = self.forward_sides(p, depth)?;
        Ok(self.pull_along(&sides, depth))
    }

    pub fn frame(&self, p: SidedPoint<R>, depth: usize) -> Result<Frame<R>, BundleError> {
        let du = depth.min(self.backward_limit);
        let orbit = self.backward_orbit(p.point, du)?;
        let v_u = self.push_from(&orbit, du)?;
        let sides = self.forward_sides(p, depth)?;
        let v_s = self.pull_along(&sides, depth);
        let mut res = 0.0f64;
        if du > 0 {
            let prev = self.push_from(&orbit, du - 1)?;
            res = res.max((v_u - prev).norm().to_f64());
        }
        if depth > 0 {
            let prev = self.pull_along(&sides, depth - 1);
            res = res.max((v_s - prev).norm().to_f64());
        }
        let mut fr = Frame::from_vectors(v_u, v_s)?;
        fr.depth_used = du;
        fr.residual_bound = res;
        Ok(fr)
    }

    /// Signed expansion with `Df^n v^u(p) = λ_n(p) v^u(f^n p)`.
    pub fn lambda_n(&self, p: SidedPoint<R>, n: usize, depth: usize) -> Result<R, BundleError> {
        let (mut w, _) = self.unstable_vector(p, depth)?;
        let sides = self.forward_sides(p, n.saturating_sub(1))?;
        for s in sides.iter().take(n) {
            w = self.map.push(*s, w);
        }
        let m = w.norm();
        Ok(if w.x.is_negative() { -m } else { m })
    }

    /// Signed contraction `μ_n(p) = l^s(p) Df^n v^s(f^{-n} p)`.
    pub fn mu_n(&self, p: SidedPoint<R>, n: usize, depth: usize) -> Result<R, BundleError> {
        if n == 0 {
            return Ok(R::one());
        }
        let fr = self.frame(p, depth)?;
        let orbit = self.backward_orbit(p.point, n)?;
        // Sides along f^{-n} p, ..., f^{-1} p; forward from there passes through p.
        let mut sides = Vec::with_capacity(n + depth + 1);
        for j in (0..n).rev() {
            sides.push(Side::of(orbit[j].x).ok_or(BundleError::SingularOrbit { step: j + 1 })?);
        }
        sides.extend(self.forward_sides(p, depth)?);
        let v = self.pull_along(&sides, n + depth);
        // Pull-back gives v^s at f^{-n} p after n + depth steps; push it forward n steps.
        let mut w = v;
        for s in sides.iter().take(n) {
            w = self.map.push(*s, w);
        }
        Ok(fr.l_s.dot(w))
    }

    /// `ν_β(p) = μ_β(f^β p) / λ_β(p)`.
    pub fn nu_beta(&self, p: SidedPoint<R>, beta: usize, depth: usize) -> Result<R, BundleError> {
        let l = self.lambda_n(p, beta, depth)?;
        let mut q = p.point;
        for _ in 0..beta {
            q = self.map.apply(q);
        }
        let qs = if beta == 0 { p } else { SidedPoint::of(q).ok_or(BundleError::SingularOrbit { step: beta })? };
        let m = self.mu_n(qs, beta, depth)?;
        Ok(m / l)
    }

    /// Successive differences `|v_(k+1) - v_(k)|` of the unstable iterates for
    /// `k < depth`.
    pub fn unstable_differences(&self, p: SidedPoint<R>, depth: usize) -> Result<Vec<f64>, BundleError> {
        let orbit = self.backward_orbit(p.point, depth)?;
        let mut prev = Vec2::<R>::e1();
        let mut out = Vec::with_capacity(depth);
        for k in 1..=depth {
            let v = self.push_from(&orbit, k)?;
            out.push((v - prev).norm().to_f64());
            prev = v;
        }
        Ok(out)
    }

    /// Successive differences of the stable iterates.
    pub fn stable_differences(&self, p: SidedPoint<R>, depth: usize) -> Result<Vec<f64>, BundleError> {
        let sides = self.forward_sides(p, depth)?;
        let mut prev = self.pull_along(&sides, 0);
        let mut out = Vec::with_capacity(depth);
        for k in 1..=depth {
            let v = self.pull_along(&sides, k);
            out.push((v - prev).norm().to_f64());
            prev = v;
        }
        Ok(out)
    }
}

/// Least-squares slope of `log d_k` against `k`, skipping entries at or below `floor`.
pub fn log_slope(d: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = d.iter().enumerate().filter(|(_, &v)| v > floor).map(|(k, &v)| (k as f64, v.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Free-function forms over a fresh context.
pub fn unstable_vector<R: Real>(params: &LoziParams, p: SidedPoint<R>, depth: usize) -> Result<Vec2<R>, BundleError> {
    Ok(Bundles::new(params)?.unstable_vector(p, depth)?.0)
}

pub fn stable_vector<R: Real>(params: &LoziParams, p: SidedPoint<R>, depth: usize) -> Result<Vec2<R>, BundleError> {
    Bundles::new(params)?.stable_vector(p, depth)
}

pub fn frame<R: Real>(params: &LoziParams, p: SidedPoint<R>, depth: usize) -> Result<Frame<R>, BundleError> {
    Bundles::new(params)?.frame(p, depth)
}
