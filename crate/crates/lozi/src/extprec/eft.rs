//! Error-free transformations on `f64`.
//!
//! All routines assume IEEE-754 binary64 with round-to-nearest-even, which is
//! the only rounding mode Rust exposes.

/// `a + b = s + e` exactly, with `s = fl(a + b)`.
#[inline(always)]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Like [`two_sum`] but requires `|a| >= |b|` (or `a == 0`).
#[inline(always)]
pub fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// `a - b = s + e` exactly.
#[inline(always)]
pub fn two_diff(a: f64, b: f64) -> (f64, f64) {
    let s = a - b;
    let bb = s - a;
    let e = (a - (s - bb)) - (b + bb);
    (s, e)
}

/// Veltkamp split of `a` into two 26-bit halves.
#[inline(always)]
pub fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Dekker's product, exact barring overflow. Used where no hardware FMA exists.
#[inline(always)]
pub fn two_prod_dekker(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

/// Product via fused multiply-add.
#[inline(always)]
pub fn two_prod_fma(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `a * b = p + e` exactly.
///
/// Uses the FMA form when the target has hardware FMA, otherwise the Dekker
/// split, which avoids a libm call on the hot path.
#[inline(always)]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    #[cfg(target_feature = "fma")]
    {
        two_prod_fma(a, b)
    }
    #[cfg(not(target_feature = "fma"))]
    {
        two_prod_dekker(a, b)
    }
}

/// `a * a = p + e` exactly.
#[inline(always)]
pub fn two_sqr(a: f64) -> (f64, f64) {
    #[cfg(target_feature = "fma")]
    {
        two_prod_fma(a, a)
    }
    #[cfg(not(target_feature = "fma"))]
    {
        let p = a * a;
        let (hi, lo) = split(a);
        let e = ((hi * hi - p) + 2.0 * hi * lo) + lo * lo;
        (p, e)
    }
}
