use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::DDReal;

/// Scalar used for the dynamics: `DDReal` for production runs, `f64` for the
/// fast native mode.
pub trait Real:
    Copy
    + Send
    + Sync
    + Debug
    + Display
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    /// Short tag recorded in output metadata.
    const NAME: &'static str;
    /// Unit roundoff.
    const EPSILON: f64;

    fn from_f64(x: f64) -> Self;
    fn from_dd(x: DDReal) -> Self;
    fn to_f64(self) -> f64;
    fn to_dd(self) -> DDReal;
    /// Non-overlapping components whose exact sum is the value.
    fn parts(self) -> [f64; 2];
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn mul_f64(self, b: f64) -> Self;
    fn is_finite(self) -> bool;
    /// Decimal text that parses back to the same value.
    fn to_text(self) -> String;

    #[inline]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    #[inline]
    fn one() -> Self {
        Self::from_f64(1.0)
    }

    #[inline]
    fn is_negative(self) -> bool {
        self < Self::zero()
    }

    #[inline]
    fn max(self, o: Self) -> Self {
        if o > self {
            o
        } else {
            self
        }
    }

    #[inline]
    fn min(self, o: Self) -> Self {
        if o < self {
            o
        } else {
            self
        }
    }
}

impl Real for DDReal {
    const NAME: &'static str = "dd";
    const EPSILON: f64 = DDReal::EPSILON;

    #[inline]
    fn from_f64(x: f64) -> Self {
        DDReal::from_f64(x)
    }
    #[inline]
    fn from_dd(x: DDReal) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        DDReal::to_f64(self)
    }
    #[inline]
    fn to_dd(self) -> DDReal {
        self
    }
    #[inline]
    fn parts(self) -> [f64; 2] {
        [self.hi(), self.lo()]
    }
    #[inline]
    fn abs(self) -> Self {
        DDReal::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        DDReal::sqrt(self)
    }
    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        DDReal::mul_f64(self, b)
    }
    #[inline]
    fn is_finite(self) -> bool {
        DDReal::is_finite(self)
    }
    fn to_text(self) -> String {
        self.to_round_trip_string()
    }
}

impl Real for f64 {
    const NAME: &'static str = "native";
    const EPSILON: f64 = f64::EPSILON / 2.0;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn from_dd(x: DDReal) -> Self {
        x.to_f64()
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn to_dd(self) -> DDReal {
        DDReal::from_f64(self)
    }
    #[inline]
    fn parts(self) -> [f64; 2] {
        [self, 0.0]
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        self * b
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn to_text(self) -> String {
        format!("{self:e}")
    }
}
