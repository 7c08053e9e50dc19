//! Exact decimal conversion for [`DDReal`].
//!
//! Printing expands `hi + lo` into its exact decimal digits and rounds to the
//! requested number of significant digits (ties to even). Parsing reads the
//! decimal as an exact rational, takes `hi` as the nearest `f64` and `lo` as the
//! nearest `f64` to the remainder.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::DDReal;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid double-double literal {0:?}")]
pub struct ParseDDError(pub String);

/// `x = m * 2^e` with integer `m`.
fn f64_parts(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    if exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1i64 << 52)), exp - 1075)
    }
}

/// Exact value of `hi + lo` as `m * 2^e`.
fn dd_dyadic(x: DDReal) -> (BigInt, i32) {
    let (m1, e1) = f64_parts(x.hi());
    let (m2, e2) = f64_parts(x.lo());
    let e = e1.min(e2);
    let m = (BigInt::from(m1) << (e1 - e) as usize) + (BigInt::from(m2) << (e2 - e) as usize);
    (m, e)
}

/// `2^k * x` without intermediate overflow or double rounding, for `x` an
/// integer below 2^54 already rounded to the precision available at the result.
fn ldexp(mut x: f64, mut k: i32) -> f64 {
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k)
}

/// Nearest `f64` to `n / d` (ties to even), `d > 0`.
pub(crate) fn rational_to_f64(n: &BigInt, d: &BigUint) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let neg = n.sign() == Sign::Minus;
    let n = n.magnitude();
    let sh = 56i64 - (n.bits() as i64 - d.bits() as i64);
    let (num, den) = if sh >= 0 {
        (n << sh as usize, d.clone())
    } else {
        (n.clone(), d << (-sh) as usize)
    };
    let (q, r) = num.div_rem(&den);
    let qb = q.bits() as i64;
    // Binary exponent of the leading bit of n/d.
    let lead = qb - 1 - sh;
    let keep = if lead >= -1022 { 53 } else { 53 - (-1022 - lead) };
    if keep <= 0 {
        // Below half the smallest subnormal, or exactly representable as a rounding.
        let half_min = lead == -1075 && keep == 0;
        let v = if half_min && (q.count_ones() > 1 || !r.is_zero()) {
            ldexp(1.0, -1074)
        } else {
            0.0
        };
        return if neg { -v } else { v };
    }
    let drop = qb - keep;
    let mut kept = &q >> drop as usize;
    let rem_mask = (BigUint::one() << drop as usize) - 1u32;
    let tail = &q & &rem_mask;
    let half = BigUint::one() << (drop - 1) as usize;
    let sticky = !r.is_zero();
    let round_up = tail > half || (tail == half && (sticky || kept.bit(0)));
    if round_up {
        kept += 1u32;
    }
    let v = ldexp(kept.to_f64().unwrap(), (drop - sh) as i32);
    if neg {
        -v
    } else {
        v
    }
}

impl DDReal {
    /// Correctly rounded scientific notation with `digits` significant digits.
    pub fn to_decimal_string(self, digits: usize) -> String {
        assert!(digits >= 1);
        let negative = self.hi().is_sign_negative();
        let sign = if negative { "-" } else { "" };
        if !self.is_finite() {
            return format!("{}", self.to_f64());
        }
        let (m, e) = dd_dyadic(self);
        if m.is_zero() {
            return if digits == 1 { format!("{sign}0e0") } else { format!("{sign}0.{}e0", "0".repeat(digits - 1)) };
        }
        let m = m.abs().to_biguint().unwrap();
        let (d, k) = if e >= 0 {
            (m << e as usize, 0i64)
        } else {
            (m * BigUint::from(5u32).pow((-e) as u32), e as i64)
        };
        let s = d.to_str_radix(10);
        let len = s.len();
        let mut exp10 = len as i64 - 1 + k;
        let mut mant: Vec<u8> = if len <= digits {
            let mut v = s.into_bytes();
            v.resize(digits, b'0');
            v
        } else {
            let bytes = s.as_bytes();
            let mut keep = bytes[..digits].to_vec();
            let rest = &bytes[digits..];
            let up = match rest[0].cmp(&b'5') {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => {
                    rest[1..].iter().any(|&c| c != b'0') || (keep[digits - 1] - b'0') % 2 == 1
                }
            };
            if up {
                let mut i = digits;
                loop {
                    if i == 0 {
                        keep.insert(0, b'1');
                        keep.truncate(digits);
                        exp10 += 1;
                        break;
                    }
                    i -= 1;
                    if keep[i] == b'9' {
                        keep[i] = b'0';
                    } else {
                        keep[i] += 1;
                        break;
                    }
                }
            }
            keep
        };
        let head = mant.remove(0) as char;
        let tail = String::from_utf8(mant).unwrap();
        if tail.is_empty() {
            format!("{sign}{head}e{exp10}")
        } else {
            format!("{sign}{head}.{tail}e{exp10}")
        }
    }

    /// Shortest string with at least 34 significant digits that parses back to
    /// exactly `self`.
    pub fn to_round_trip_string(self) -> String {
        let mut digits = 34;
        loop {
            let s = self.to_decimal_string(digits);
            if !self.is_finite() || s.parse::<DDReal>().map(|v| v.to_bits() == self.to_bits()).unwrap_or(false) {
                return s;
            }
            digits += 1;
        }
    }
}

/// Splits a decimal literal into (negative, digits, power of ten).
fn parse_decimal(s: &str) -> Option<(bool, BigUint, i64)> {
    let s = s.trim();
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int, frac) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let d = BigUint::parse_bytes(digits.as_bytes(), 10)?;
    Some((neg, d, exp - frac.len() as i64))
}

impl FromStr for DDReal {
    type Err = ParseDDError;

    fn from_str(s: &str) -> Result<DDReal, ParseDDError> {
        let err = || ParseDDError(s.to_string());
        let (neg, d, k) = parse_decimal(s).ok_or_else(err)?;
        if k.abs() > 100_000 {
            return Err(err());
        }
        let hi: f64 = s.trim().parse().map_err(|_| err())?;
        if !hi.is_finite() {
            return Err(err());
        }
        if d.is_zero() {
            return Ok(DDReal::from_f64(hi));
        }
        let mut num = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, d);
        let mut den = BigUint::one();
        if k >= 0 {
            num *= BigInt::from(10u32).pow(k as u32);
        } else {
            den = BigUint::from(10u32).pow((-k) as u32);
        }
        // remainder = num/den - hi, with hi = m 2^e.
        let (m, e) = f64_parts(hi);
        let (rn, rd) = if e >= 0 {
            (num - BigInt::from(m) * BigInt::from_biguint(Sign::Plus, den.clone()) * (BigInt::one() << e as usize), den)
        } else {
            let scale = BigUint::one() << (-e) as usize;
            (num * BigInt::from_biguint(Sign::Plus, scale.clone()) - BigInt::from(m) * BigInt::from_biguint(Sign::Plus, den.clone()), den * scale)
        };
        let lo = rational_to_f64(&rn, &rd);
        Ok(DDReal::new(hi, lo))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_exact_binary_fraction() {
        assert_eq!(DDReal::from(0.5).to_decimal_string(3), "5.00e-1");
        assert_eq!(DDReal::from(-1234.0).to_decimal_string(2), "-1.2e3");
        assert_eq!(DDReal::from(9.96).to_decimal_string(2), "1.0e1");
        assert_eq!(DDReal::ZERO.to_decimal_string(1), "0e0");
    }

    #[test]
    fn tenth_has_small_tail() {
        let x: DDReal = "0.1".parse().unwrap();
        assert_eq!(x.hi(), 0.1);
        assert!(x.lo() != 0.0 && x.lo().abs() < 1e-17);
        assert_eq!(x.to_decimal_string(30), "1.00000000000000000000000000000e-1");
    }

    #[test]
    fn rational_rounding_matches_std() {
        for s in ["0.1", "1e-310", "2.5e-324", "123456789.123456789", "1.7976931348623157e308"] {
            let (neg, d, k) = parse_decimal(s).unwrap();
            let (n, den) = if k >= 0 {
                (BigInt::from(d) * BigInt::from(10u32).pow(k as u32), BigUint::one())
            } else {
                (BigInt::from(d), BigUint::from(10u32).pow((-k) as u32))
            };
            let n = if neg { -n } else { n };
            assert_eq!(rational_to_f64(&n, &den), s.parse::<f64>().unwrap(), "{s}");
        }
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "abc", "1.2.3", "e5", "nan", "inf", "1e400"] {
            assert!(s.parse::<DDReal>().is_err(), "{s}");
        }
    }
}
