//! Floating-point expansions for exact geometric predicates.
//!
//! An expansion is a list of non-overlapping `f64` components in increasing
//! magnitude whose exact sum is the represented value. Only sums and products
//! are needed here, which are exact; the sign of the result is the sign of its
//! largest component.

use super::eft::{quick_two_sum, two_prod, two_sum};

fn grow(e: &[f64], b: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(e.len() + 1);
    let mut q = b;
    for &x in e {
        let (s, h) = two_sum(q, x);
        if h != 0.0 {
            out.push(h);
        }
        q = s;
    }
    if q != 0.0 || out.is_empty() {
        out.push(q);
    }
    out
}

fn sum(e: &[f64], f: &[f64]) -> Vec<f64> {
    f.iter().fold(e.to_vec(), |acc, &x| grow(&acc, x))
}

fn scale(e: &[f64], b: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * e.len());
    let (mut q, h) = two_prod(e[0], b);
    if h != 0.0 {
        out.push(h);
    }
    for &x in &e[1..] {
        let (t1, t0) = two_prod(x, b);
        let (q2, h) = two_sum(q, t0);
        if h != 0.0 {
            out.push(h);
        }
        let (s, h) = quick_two_sum(t1, q2);
        if h != 0.0 {
            out.push(h);
        }
        q = s;
    }
    if q != 0.0 || out.is_empty() {
        out.push(q);
    }
    out
}

fn product(e: &[f64], f: &[f64]) -> Vec<f64> {
    f.iter().fold(vec![0.0], |acc, &x| sum(&acc, &scale(e, x)))
}

/// Exact `a - b` for values given as two non-overlapping parts.
fn diff(a: [f64; 2], b: [f64; 2]) -> Vec<f64> {
    let e = grow(&[a[1]], a[0]);
    let e = grow(&e, -b[1]);
    grow(&e, -b[0])
}

fn sign_of(e: &[f64]) -> i8 {
    match e.iter().rev().find(|&&x| x != 0.0) {
        Some(&x) if x > 0.0 => 1,
        Some(_) => -1,
        None => 0,
    }
}

/// Exact sign of `(b - a) x (c - a)`: +1 for a counterclockwise turn, -1 for
/// clockwise, 0 when collinear. Coordinates are `[hi, lo]` pairs.
pub fn orient2d(a: [[f64; 2]; 2], b: [[f64; 2]; 2], c: [[f64; 2]; 2]) -> i8 {
    let dx1 = b[0][0] - a[0][0];
    let dy1 = b[1][0] - a[1][0];
    let dx2 = c[0][0] - a[0][0];
    let dy2 = c[1][0] - a[1][0];
    let t1 = dx1 * dy2;
    let t2 = dy1 * dx2;
    let det = t1 - t2;
    let m = 1.0 + [a, b, c].iter().flat_map(|p| [p[0][0].abs(), p[1][0].abs()]).fold(0.0, f64::max);
    let bound = 1e-15 * (t1.abs() + t2.abs()) + 1e-15 * m * (dx1.abs() + dy1.abs() + dx2.abs() + dy2.abs()) + 1e-300;
    if det.abs() > bound {
        return if det > 0.0 { 1 } else { -1 };
    }
    let ex1 = diff(b[0], a[0]);
    let ey1 = diff(b[1], a[1]);
    let ex2 = diff(c[0], a[0]);
    let ey2 = diff(c[1], a[1]);
    let l = product(&ex1, &ey2);
    let r = product(&ey1, &ex2);
    let neg: Vec<f64> = r.iter().map(|x| -x).collect();
    sign_of(&sum(&l, &neg))
}
