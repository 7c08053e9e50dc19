//! Planar points, vectors and 2x2 matrices over a [`Real`] scalar.

use std::ops::{Add, Mul, Neg, Sub};

use crate::extprec::{DDReal, Real};

/// Point or vector in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point2<R> {
    pub x: R,
    pub y: R,
}

pub type Vec2<R> = Point2<R>;

impl<R: Real> Point2<R> {
    #[inline]
    pub fn new(x: R, y: R) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn from_f64(x: f64, y: f64) -> Self {
        Point2::new(R::from_f64(x), R::from_f64(y))
    }

    #[inline]
    pub fn zero() -> Self {
        Point2::new(R::zero(), R::zero())
    }

    #[inline]
    pub fn e1() -> Self {
        Point2::new(R::one(), R::zero())
    }

    #[inline]
    pub fn e2() -> Self {
        Point2::new(R::zero(), R::one())
    }

    #[inline]
    pub fn dot(self, o: Self) -> R {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product.
    #[inline]
    pub fn cross(self, o: Self) -> R {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> R {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn scale(self, s: R) -> Self {
        Point2::new(self.x * s, self.y * s)
    }

    #[inline]
    pub fn normalized(self) -> Self {
        let n = self.norm();
        Point2::new(self.x / n, self.y / n)
    }

    /// `(1 - t) self + t o`.
    #[inline]
    pub fn lerp(self, o: Self, t: R) -> Self {
        self + (o - self).scale(t)
    }

    #[inline]
    pub fn to_f64(self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }

    #[inline]
    pub fn cast<S: Real>(self) -> Point2<S> {
        Point2::new(S::from_dd(self.x.to_dd()), S::from_dd(self.y.to_dd()))
    }

    #[inline]
    pub fn parts(self) -> [[f64; 2]; 2] {
        [self.x.parts(), self.y.parts()]
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<R: Real> Add for Point2<R> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl<R: Real> Sub for Point2<R> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl<R: Real> Neg for Point2<R> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Point2::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<R> {
    pub m: [[R; 2]; 2],
}

impl<R: Real> Mat2<R> {
    #[inline]
    pub fn new(a: R, b: R, c: R, d: R) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    #[inline]
    pub fn identity() -> Self {
        Mat2::new(R::one(), R::zero(), R::zero(), R::one())
    }

    #[inline]
    pub fn det(&self) -> R {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn apply(&self, v: Vec2<R>) -> Vec2<R> {
        Point2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    /// Row vector times matrix, for covectors.
    #[inline]
    pub fn apply_left(&self, l: Vec2<R>) -> Vec2<R> {
        Point2::new(
            l.x * self.m[0][0] + l.y * self.m[1][0],
            l.x * self.m[0][1] + l.y * self.m[1][1],
        )
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.to_f64() == 0.0 {
            return None;
        }
        Some(Mat2::new(self.m[1][1] / d, -self.m[0][1] / d, -self.m[1][0] / d, self.m[0][0] / d))
    }

    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        [
            [self.m[0][0].to_f64(), self.m[0][1].to_f64()],
            [self.m[1][0].to_f64(), self.m[1][1].to_f64()],
        ]
    }
}

impl<R: Real> Mul for Mat2<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<R: Real> Sub for Mat2<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Mat2::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }
}

/// Branch of the map: `Minus` is `x < 0`, `Plus` is `x > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    /// Side of a nonzero coordinate, `None` on the singular line.
    #[inline]
    pub fn of<R: Real>(x: R) -> Option<Side> {
        let v = x.parts()[0];
        if v > 0.0 {
            Some(Side::Plus)
        } else if v < 0.0 {
            Some(Side::Minus)
        } else {
            None
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }

    #[inline]
    pub fn flip(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Side::Minus => '-',
            Side::Plus => '+',
        }
    }

    pub fn from_symbol(c: char) -> Option<Side> {
        match c {
            '-' => Some(Side::Minus),
            '+' => Some(Side::Plus),
            _ => None,
        }
    }
}

/// A point with an explicit branch, needed for one-sided quantities on `x = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SidedPoint<R> {
    pub point: Point2<R>,
    pub side: Side,
}

impl<R: Real> SidedPoint<R> {
    /// Tags a point off the singular line with its own side.
    pub fn of(point: Point2<R>) -> Option<Self> {
        Side::of(point.x).map(|side| SidedPoint { point, side })
    }

    pub fn new(point: Point2<R>, side: Side) -> Self {
        SidedPoint { point, side }
    }

    /// Whether the tag agrees with the sign of `x` (always true on the line).
    pub fn is_consistent(&self) -> bool {
        Side::of(self.point.x).is_none_or(|s| s == self.side)
    }
}

impl Point2<DDReal> {
    pub fn dd(x: f64, y: f64) -> Self {
        Point2::from_f64(x, y)
    }
}
