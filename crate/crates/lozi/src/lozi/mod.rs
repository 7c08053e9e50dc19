//! The Lozi map `f(x, y) = (1 + y - a|x|, bx)`, its inverse, one-sided
//! Jacobians, cones and parameter validation.

mod absorbing;
mod hyperbolicity;

pub use absorbing::{absorbing_set, absorbing_set_with, misiurewicz_triangle, AbsorbingError, AbsorbingSet};
pub use hyperbolicity::{verify_hyperbolicity, HyperbolicityFailure, HyperbolicityReport};

use serde::{Deserialize, Serialize};

use crate::extprec::{DDReal, Real};
use crate::geometry::{Mat2, Point2, Side, Vec2};

/// Parameter validation failures; each names the violated condition.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("parameters must be finite")]
    NonFinite,
    #[error("b must be positive (b != 0 and b > 0), got b = {0}")]
    NonPositiveB(f64),
    #[error("cone condition a >= 1 + b violated: a = {a}, 1 + b = {rhs}")]
    ConeCondition { a: f64, rhs: f64 },
    #[error("attractor condition b < a - 1 violated: b = {b}, a - 1 = {rhs}")]
    AttractorAMinusOne { b: f64, rhs: f64 },
    #[error("attractor condition b < 4 - 2a violated: b = {b}, 4 - 2a = {rhs}")]
    AttractorFourMinusTwoA { b: f64, rhs: f64 },
    #[error("cone discriminant a^2 > 4b violated: a^2 = {a2}, 4b = {rhs}")]
    Discriminant { a2: f64, rhs: f64 },
}

/// Validated map parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LoziParams {
    a: DDReal,
    b: DDReal,
}

impl LoziParams {
    pub fn new(a: DDReal, b: DDReal) -> Result<Self, ParamError> {
        if !a.is_finite() || !b.is_finite() {
            return Err(ParamError::NonFinite);
        }
        let one = DDReal::ONE;
        let two = DDReal::from(2.0);
        let four = DDReal::from(4.0);
        if b <= DDReal::ZERO {
            return Err(ParamError::NonPositiveB(b.to_f64()));
        }
        if a < one + b {
            return Err(ParamError::ConeCondition { a: a.to_f64(), rhs: (one + b).to_f64() });
        }
        if b >= a - one {
            return Err(ParamError::AttractorAMinusOne { b: b.to_f64(), rhs: (a - one).to_f64() });
        }
        let t = four - two * a;
        if b >= t {
            return Err(ParamError::AttractorFourMinusTwoA { b: b.to_f64(), rhs: t.to_f64() });
        }
        if a * a <= four * b {
            return Err(ParamError::Discriminant { a2: (a * a).to_f64(), rhs: (four * b).to_f64() });
        }
        Ok(LoziParams { a, b })
    }

    /// Parses decimal literals at full double-double precision.
    pub fn parse(a: &str, b: &str) -> Result<Self, String> {
        let a: DDReal = a.parse().map_err(|e| format!("{e}"))?;
        let b: DDReal = b.parse().map_err(|e| format!("{e}"))?;
        LoziParams::new(a, b).map_err(|e| e.to_string())
    }

    /// Convenience for literals such as `(1.8, 0.35)`: the decimal, not the
    /// nearest binary double, is used.
    pub fn from_decimal(a: f64, b: f64) -> Result<Self, ParamError> {
        let p = |v: f64| format!("{v:e}").parse::<DDReal>().unwrap_or(DDReal::from(v));
        LoziParams::new(p(a), p(b))
    }

    pub fn a(&self) -> DDReal {
        self.a
    }

    pub fn b(&self) -> DDReal {
        self.b
    }

    /// The family `b -> b (1 + eps)`.
    pub fn scale_b(&self, eps: DDReal) -> Result<Self, ParamError> {
        LoziParams::new(self.a, self.b * (DDReal::ONE + eps))
    }

    /// The alternative domain `b < min(a - sqrt 2, 4 - 2a)`. Parameters are
    /// validated against `a - 1`; this is only reported.
    pub fn satisfies_sqrt2_condition(&self) -> bool {
        let s2 = DDReal::from(2.0).sqrt();
        self.b < self.a - s2 && self.b < DDReal::from(4.0) - DDReal::from(2.0) * self.a
    }

    pub fn map<R: Real>(&self) -> LoziMap<R> {
        let a = R::from_dd(self.a);
        let b = R::from_dd(self.b);
        LoziMap { a, b, inv_b: R::from_dd(DDReal::ONE / self.b), params: *self }
    }
}

impl<'de> Deserialize<'de> for LoziParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            a: DDReal,
            b: DDReal,
        }
        let r = Raw::deserialize(d)?;
        LoziParams::new(r.a, r.b).map_err(serde::de::Error::custom)
    }
}

/// The map specialised to a scalar type.
#[derive(Clone, Copy, Debug)]
pub struct LoziMap<R> {
    a: R,
    b: R,
    inv_b: R,
    params: LoziParams,
}

impl<R: Real> LoziMap<R> {
    pub fn params(&self) -> LoziParams {
        self.params
    }

    #[inline]
    pub fn a(&self) -> R {
        self.a
    }

    #[inline]
    pub fn b(&self) -> R {
        self.b
    }

    #[inline]
    pub fn apply(&self, p: Point2<R>) -> Point2<R> {
        Point2::new(R::one() + p.y - self.a * p.x.abs(), self.b * p.x)
    }

    /// Same as [`apply`](Self::apply) with the branch fixed, i.e. the affine
    /// extension of one side (continuous across `x = 0`).
    #[inline]
    pub fn apply_side(&self, side: Side, p: Point2<R>) -> Point2<R> {
        Point2::new(R::one() + p.y - (self.a * p.x).mul_f64(side.sign()), self.b * p.x)
    }

    #[inline]
    pub fn inverse(&self, p: Point2<R>) -> Point2<R> {
        let u = p.y / self.b;
        Point2::new(u, p.x - R::one() + self.a * u.abs())
    }

    /// Inverse of the affine extension of `side`.
    #[inline]
    pub fn inverse_side(&self, side: Side, p: Point2<R>) -> Point2<R> {
        let u = p.y / self.b;
        Point2::new(u, p.x - R::one() + (self.a * u).mul_f64(side.sign()))
    }

    pub fn jacobian(&self, side: Side) -> Mat2<R> {
        Mat2::new(-self.a.mul_f64(side.sign()), R::one(), self.b, R::zero())
    }

    pub fn jacobian_inverse(&self, side: Side) -> Mat2<R> {
        Mat2::new(R::zero(), self.inv_b, R::one(), (self.a * self.inv_b).mul_f64(side.sign()))
    }

    /// `J_side v`.
    #[inline]
    pub fn push(&self, side: Side, v: Vec2<R>) -> Vec2<R> {
        Point2::new(v.y - (self.a * v.x).mul_f64(side.sign()), self.b * v.x)
    }

    /// `J_side^{-1} v`.
    #[inline]
    pub fn pull(&self, side: Side, v: Vec2<R>) -> Vec2<R> {
        let u = v.y * self.inv_b;
        Point2::new(u, v.x + (self.a * u).mul_f64(side.sign()))
    }

    /// `l J_side` for a covector `l`.
    #[inline]
    pub fn push_covector(&self, side: Side, l: Vec2<R>) -> Vec2<R> {
        Point2::new(l.y * self.b - (l.x * self.a).mul_f64(side.sign()), l.x)
    }

    /// Fixed point `x* = 1/(1 + a - b)` (in `M_+`).
    pub fn fixed_point(&self) -> Point2<R> {
        let x = R::one() / (R::one() + self.a - self.b);
        Point2::new(x, self.b * x)
    }

    /// Intersection of the fixed point's unstable eigenline with the x-axis.
    pub fn p0(&self) -> Point2<R> {
        let d = (self.a * self.a + self.b.mul_f64(4.0)).sqrt();
        Point2::new(R::from_f64(2.0) / (R::from_f64(2.0) + self.a - d), R::zero())
    }

    pub fn cones(&self) -> ConePair<R> {
        let c = cone_constant_of(self.a, self.b);
        ConePair { c, c_stable: c * self.b }
    }
}

fn cone_constant_of<R: Real>(a: R, b: R) -> R {
    let d = (a * a - b.mul_f64(4.0)).sqrt();
    ((a + d) / b.mul_f64(2.0)).mul_f64(0.999)
}

/// Unstable cone `xi >= c|eta|` and the stable cone `J^{-1}{eta >= c_s|xi|}`
/// with `c_s = b c`, just below the larger root of `t^2 - a t + b`. That root
/// bounds the slopes kept invariant by `J^{-1}`; with `c` itself in place of
/// `c_s` the cone would miss the stable direction.
///
/// The map sends the unstable cone into its negative as often as into itself,
/// so invariance statements use the double cones (`|xi| >= c|eta|`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConePair<R> {
    pub c: R,
    pub c_stable: R,
}

impl<R: Real> ConePair<R> {
    pub fn contains_unstable(&self, v: Vec2<R>) -> bool {
        v.x >= self.c * v.y.abs()
    }

    pub fn contains_unstable_double(&self, v: Vec2<R>) -> bool {
        v.x.abs() >= self.c * v.y.abs()
    }

    pub fn interior_unstable_double(&self, v: Vec2<R>) -> bool {
        v.x.abs() > self.c * v.y.abs()
    }

    /// Membership in `{|eta| >= c_s |xi|}`, the image of the stable cone.
    pub fn in_stable_image(&self, w: Vec2<R>) -> bool {
        w.y.abs() >= self.c_stable * w.x.abs()
    }

    pub fn contains_stable(&self, map: &LoziMap<R>, side: Side, v: Vec2<R>) -> bool {
        let w = map.push(side, v);
        w.y >= self.c_stable * w.x.abs()
    }

    pub fn contains_stable_double(&self, map: &LoziMap<R>, side: Side, v: Vec2<R>) -> bool {
        self.in_stable_image(map.push(side, v))
    }
}

pub fn lozi_map(params: &LoziParams, p: Point2<DDReal>) -> Point2<DDReal> {
    params.map::<DDReal>().apply(p)
}

pub fn lozi_inverse(params: &LoziParams, p: Point2<DDReal>) -> Point2<DDReal> {
    params.map::<DDReal>().inverse(p)
}

pub fn jacobian(params: &LoziParams, side: Side) -> Mat2<DDReal> {
    params.map::<DDReal>().jacobian(side)
}

pub fn fixed_point_p0(params: &LoziParams) -> Point2<DDReal> {
    params.map::<DDReal>().p0()
}

pub fn cone_constant(params: &LoziParams) -> DDReal {
    cone_constant_of(params.a, params.b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std() -> LoziParams {
        LoziParams::from_decimal(1.8, 0.35).unwrap()
    }

    fn dd(s: &str) -> DDReal {
        s.parse().unwrap()
    }

    #[test]
    fn map_examples() {
        let p = std();
        let img = lozi_map(&p, Point2::new(dd("0.5"), dd("0.2")));
        assert!((img.x - dd("0.3")).abs().to_f64() < 1e-31);
        assert!((img.y - dd("0.175")).abs().to_f64() < 1e-31);
        let img = lozi_map(&p, Point2::new(DDReal::ZERO, dd("0.25")));
        assert_eq!(img, Point2::new(dd("1.25"), DDReal::ZERO));
        let back = lozi_inverse(&p, Point2::new(dd("0.3"), dd("0.175")));
        assert!((back.x - dd("0.5")).abs().to_f64() < 1e-30);
        assert!((back.y - dd("0.2")).abs().to_f64() < 1e-30);
    }

    #[test]
    fn jacobian_examples() {
        let p = std();
        let jp = jacobian(&p, Side::Plus);
        let jm = jacobian(&p, Side::Minus);
        assert_eq!(jp.m[0][0], -dd("1.8"));
        assert_eq!(jp.det(), -p.b());
        assert_eq!(jm.det(), -p.b());
        let d = jp - jm;
        assert_eq!(d.m[0][0], -dd("3.6"));
        assert_eq!(d.m[0][1], DDReal::ZERO);
        let map = p.map::<DDReal>();
        let id = map.jacobian(Side::Minus) * map.jacobian_inverse(Side::Minus);
        assert!((id.m[0][0] - DDReal::ONE).abs().to_f64() < 1e-31);
        assert!(id.m[1][0].abs().to_f64() < 1e-31);
    }

    #[test]
    fn parameter_validation_names_condition() {
        let e = LoziParams::from_decimal(1.8, 0.0).unwrap_err();
        assert!(e.to_string().contains("b != 0"));
        let e = LoziParams::from_decimal(2.5, 0.35).unwrap_err();
        assert!(e.to_string().contains("4 - 2a"), "{e}");
        assert!(LoziParams::from_decimal(1.2, 0.35).is_err());
        assert!(LoziParams::from_decimal(1.7, 0.5).is_ok());
    }

    #[test]
    fn sqrt2_condition_is_reported_not_enforced() {
        // a - 1 = 0.5 > b = 0.45 > a - sqrt 2 = 0.086
        let p = LoziParams::from_decimal(1.5, 0.45).unwrap();
        assert!(!p.satisfies_sqrt2_condition());
        assert!(std().satisfies_sqrt2_condition());
    }
}
