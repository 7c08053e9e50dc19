//! Double-double arithmetic.
//!
//! A [`DDReal`] stores a value as the unevaluated sum `hi + lo` of two `f64`
//! with `|lo| <= ulp(hi) / 2`, giving about 106 bits of mantissa. Every public
//! operation returns a normalized value. Arithmetic relies on round-to-nearest-even,
//! the default (and only) IEEE rounding mode reachable from safe Rust.

mod decimal;
pub mod eft;
pub mod expansion;
mod real;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use eft::{quick_two_sum, two_diff, two_prod, two_sqr, two_sum};

pub use decimal::ParseDDError;
pub use real::Real;

/// Domain errors of the fallible operations.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0:e}")]
    NegativeSqrt(f64),
    #[error("non-finite operand")]
    NonFinite,
}

/// Double-double scalar.
#[derive(Clone, Copy, Default)]
pub struct DDReal {
    hi: f64,
    lo: f64,
}

impl DDReal {
    pub const ZERO: DDReal = DDReal { hi: 0.0, lo: 0.0 };
    pub const ONE: DDReal = DDReal { hi: 1.0, lo: 0.0 };
    /// 2^-104, the unit roundoff of the format.
    pub const EPSILON: f64 = 4.930_380_657_631_324e-32;

    /// Builds a value from an arbitrary pair, renormalizing.
    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        DDReal { hi, lo }
    }

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        DDReal { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn signum(self) -> f64 {
        if self.hi > 0.0 {
            1.0
        } else if self.hi < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s1, s2) = two_sum(self.hi, b);
        let s2 = s2 + self.lo;
        let (hi, lo) = quick_two_sum(s1, s2);
        DDReal { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let p2 = p2 + self.lo * b;
        let (hi, lo) = quick_two_sum(p1, p2);
        DDReal { hi, lo }
    }

    #[inline]
    pub fn sqr(self) -> Self {
        let (p1, p2) = two_sqr(self.hi);
        let p2 = p2 + 2.0 * self.hi * self.lo + self.lo * self.lo;
        let (hi, lo) = quick_two_sum(p1, p2);
        DDReal { hi, lo }
    }

    /// Division returning an error instead of a non-finite value.
    pub fn try_div(self, b: DDReal) -> Result<DDReal, DomainError> {
        if b.hi == 0.0 {
            return Err(DomainError::DivisionByZero);
        }
        if !self.is_finite() || !b.is_finite() {
            return Err(DomainError::NonFinite);
        }
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Ok(DDReal { hi: q1, lo: q2 }.add_f64(q3))
    }

    /// Square root returning an error for negative input.
    pub fn try_sqrt(self) -> Result<DDReal, DomainError> {
        if self.hi < 0.0 {
            return Err(DomainError::NegativeSqrt(self.hi));
        }
        if !self.is_finite() {
            return Err(DomainError::NonFinite);
        }
        if self.hi == 0.0 {
            return Ok(DDReal::ZERO);
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (s1, s2) = two_sqr(ax);
        let diff = self - DDReal::new(s1, s2);
        Ok(DDReal::from_f64(ax).add_f64(diff.hi * (x * 0.5)))
    }

    /// Square root; panics on negative input.
    pub fn sqrt(self) -> DDReal {
        self.try_sqrt().expect("DDReal::sqrt")
    }

    /// `self * 2^k`, exact.
    #[inline]
    pub fn ldexp(self, k: i32) -> DDReal {
        let s = 2f64.powi(k);
        DDReal {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    /// Raw component bits, useful for bitwise comparisons.
    pub fn to_bits(self) -> (u64, u64) {
        (self.hi.to_bits(), self.lo.to_bits())
    }
}

impl From<f64> for DDReal {
    #[inline]
    fn from(x: f64) -> Self {
        DDReal::from_f64(x)
    }
}

impl From<i32> for DDReal {
    #[inline]
    fn from(x: i32) -> Self {
        DDReal::from_f64(x as f64)
    }
}

impl Neg for DDReal {
    type Output = DDReal;
    #[inline]
    fn neg(self) -> DDReal {
        DDReal {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DDReal {
    type Output = DDReal;
    #[inline]
    fn add(self, b: DDReal) -> DDReal {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        DDReal { hi, lo }
    }
}

impl Sub for DDReal {
    type Output = DDReal;
    #[inline]
    fn sub(self, b: DDReal) -> DDReal {
        let (s1, s2) = two_diff(self.hi, b.hi);
        let (t1, t2) = two_diff(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        DDReal { hi, lo }
    }
}

impl Mul for DDReal {
    type Output = DDReal;
    #[inline]
    fn mul(self, b: DDReal) -> DDReal {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        DDReal { hi, lo }
    }
}

impl Div for DDReal {
    type Output = DDReal;
    /// Panics on division by zero; use [`DDReal::try_div`] to handle it.
    #[inline]
    fn div(self, b: DDReal) -> DDReal {
        self.try_div(b).expect("DDReal division")
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for DDReal {
            #[inline]
            fn $m(&mut self, b: DDReal) {
                *self = *self $op b;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl PartialEq for DDReal {
    #[inline]
    fn eq(&self, other: &DDReal) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for DDReal {
    #[inline]
    fn partial_cmp(&self, other: &DDReal) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl fmt::Debug for DDReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DDReal({})", self.to_decimal_string(34))
    }
}

impl fmt::Display for DDReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_round_trip_string())
    }
}

impl serde::Serialize for DDReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_round_trip_string())
    }
}

impl<'de> serde::Deserialize<'de> for DDReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = DDReal;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal number or numeric string")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<DDReal, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<DDReal, E> {
                // Go through the shortest decimal so that `1.8` means the decimal 1.8.
                format!("{v:e}").parse().map_err(E::custom)
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<DDReal, E> {
                Ok(DDReal::from_f64(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<DDReal, E> {
                Ok(DDReal::from_f64(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}
