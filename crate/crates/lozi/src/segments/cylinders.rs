//! Cylinder polygons and the cylinder-based complexity check.
//!
//! The final cylinder of a word `i_1 ... i_n` is built by the recursion
//! `F(w i) = f_i(F(w) ∩ M_i)` starting from `F(∅) = M`, where `f_i` is the
//! affine branch. It equals the set of `f^n(x)` for `x ∈ M` whose first `n`
//! iterates visit `M_{i_1}, ..., M_{i_n}`. The initial cylinder is its
//! preimage `f^{-n}(F(w))`, i.e. the set of those `x`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundles::{BundleError, Bundles};
use crate::extprec::DDReal;
use crate::geometry::{Point2, Side, SidedPoint, Vec2};
use crate::lozi::{absorbing_set, AbsorbingError, LoziMap, LoziParams};
use crate::polygon::ConvexPolygon;

pub const DEFAULT_MAX_WORD: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CylinderKind {
    Initial,
    Final,
}

#[derive(Clone, Debug)]
pub struct CylinderPolygon {
    pub word: Vec<Side>,
    pub kind: CylinderKind,
    pub polygon: ConvexPolygon<DDReal>,
}

pub fn word_string(w: &[Side]) -> String {
    w.iter().map(|s| s.symbol()).collect()
}

pub fn parse_word(s: &str) -> Option<Vec<Side>> {
    s.chars().map(Side::from_symbol).collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CylinderError {
    #[error("word length {0} exceeds the maximum {1}")]
    TooLong(usize, usize),
    #[error(transparent)]
    Absorbing(#[from] AbsorbingError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

fn final_child(f: &LoziMap<DDReal>, parent: &ConvexPolygon<DDReal>, side: Side) -> ConvexPolygon<DDReal> {
    parent.clip_side(side).map_affine(|p| f.apply_side(side, p), true)
}

fn pull_back(f: &LoziMap<DDReal>, fin: &ConvexPolygon<DDReal>, word: &[Side]) -> ConvexPolygon<DDReal> {
    let mut p = fin.clone();
    for &s in word.iter().rev() {
        p = p.map_affine(|q| f.inverse_side(s, q), true);
    }
    p
}

pub fn cylinder(params: &LoziParams, word: &[Side], kind: CylinderKind) -> Result<CylinderPolygon, CylinderError> {
    if word.len() > DEFAULT_MAX_WORD {
        return Err(CylinderError::TooLong(word.len(), DEFAULT_MAX_WORD));
    }
    let f = params.map::<DDReal>();
    let mut poly = absorbing_set(params)?.polygon().clone();
    for &s in word {
        poly = final_child(&f, &poly, s);
    }
    if kind == CylinderKind::Initial {
        poly = pull_back(&f, &poly, word);
    }
    Ok(CylinderPolygon { word: word.to_vec(), kind, polygon: poly })
}

/// Calls `visit(word, final, initial)` for every word up to `max_len` with a
/// nonempty final cylinder (the empty word included).
pub fn for_each_cylinder(params: &LoziParams, max_len: usize, mut visit: impl FnMut(&[Side], &ConvexPolygon<DDReal>, &ConvexPolygon<DDReal>)) -> Result<(), CylinderError> {
    let f = params.map::<DDReal>();
    let m = absorbing_set(params)?.polygon().clone();
    let mut stack = vec![(Vec::<Side>::new(), m)];
    while let Some((w, fin)) = stack.pop() {
        let init = pull_back(&f, &fin, &w);
        visit(&w, &fin, &init);
        if w.len() < max_len {
            for s in [Side::Plus, Side::Minus] {
                let child = final_child(&f, &fin, s);
                if !child.is_empty() {
                    let mut cw = w.clone();
                    cw.push(s);
                    stack.push((cw, child));
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LengthStats {
    pub n: usize,
    pub nonempty: usize,
    pub final_area: f64,
    pub initial_area: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CylinderReport {
    pub max_len: usize,
    pub absorbing_area: f64,
    pub per_length: Vec<LengthStats>,
    pub lines_tested: usize,
    pub violations: Vec<String>,
}

impl CylinderReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn random_line<G: Rng>(p: &ConvexPolygon<DDReal>, rng: &mut G) -> (Point2<DDReal>, Vec2<DDReal>) {
    let (lo, hi) = p.bounds();
    let [x0, y0] = lo.to_f64();
    let [x1, y1] = hi.to_f64();
    let pt = Point2::from_f64(x0 + rng.gen::<f64>() * (x1 - x0), y0 + rng.gen::<f64>() * (y1 - y0));
    let th = rng.gen::<f64>() * std::f64::consts::PI;
    (pt, Point2::from_f64(th.cos(), th.sin()))
}

/// Enumerates all cylinders up to `max_len`, checking exact convexity and
/// that `lines` random lines meet each polygon in a connected set.
pub fn verify_cylinder_convexity(params: &LoziParams, max_len: usize, lines: usize, seed: u64) -> Result<CylinderReport, CylinderError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let absorbing_area = absorbing_set(params)?.polygon().area().to_f64();
    let mut per_length: Vec<LengthStats> = (0..=max_len).map(|n| LengthStats { n, ..Default::default() }).collect();
    let mut violations = Vec::new();
    let mut lines_tested = 0;
    for_each_cylinder(params, max_len, |w, fin, init| {
        let st = &mut per_length[w.len()];
        st.nonempty += 1;
        st.final_area += fin.area().to_f64();
        st.initial_area += init.area().to_f64();
        for (kind, poly) in [("final", fin), ("initial", init)] {
            if !poly.is_convex() {
                violations.push(format!("{kind} cylinder {:?} not convex", word_string(w)));
                continue;
            }
            for _ in 0..lines {
                let (p, d) = random_line(poly, &mut rng);
                lines_tested += 1;
                if poly.line_sign_changes(p, d) > 2 {
                    violations.push(format!("{kind} cylinder {:?} meets a line in a disconnected set", word_string(w)));
                    break;
                }
            }
        }
    })?;
    Ok(CylinderReport { max_len, absorbing_area, per_length, lines_tested, violations })
}

#[derive(Clone, Debug, Serialize)]
pub struct PressureReport {
    /// `(n, sum over nonempty initial cylinders of |ν_n(centroid)|)`.
    pub sums: Vec<(usize, f64)>,
    /// Largest single term at `n = 1`.
    pub max_term_n1: f64,
    pub zeta_hat: f64,
    pub fit_r2: f64,
    /// Smallest `C` with `sum_n <= C (2 μ/λ)^n` for the sampled `μ/λ`.
    pub crude_c: f64,
    pub mu_over_lambda: f64,
}

/// Sums `|ν_n|` at the centroids of all nonempty initial cylinders of length
/// `n <= n_max` and fits a geometric rate.
///
/// `ν_n(x)` is taken as `|Df^n v^s(x)| / |Df^n e1|`: the stable vector is
/// exact (forward orbit), and `e1` stands in for `v^u(x)`, which is not
/// defined off the attractor; both share the cone so the ratio is within a
/// bounded factor of the true value.
pub fn topo_pressure_check(params: &LoziParams, n_max: usize, mu_over_lambda: f64) -> Result<PressureReport, CylinderError> {
    let bundles = Bundles::<DDReal>::new(params)?;
    let f = *bundles.map();
    let mut sums = vec![0.0; n_max + 1];
    let mut max_term_n1 = 0.0f64;
    let mut err = None;
    for_each_cylinder(params, n_max, |w, _fin, init| {
        if w.is_empty() || init.is_empty() || err.is_some() {
            return;
        }
        let c = init.centroid();
        let side0 = w[0];
        let vs = match bundles.stable_vector(SidedPoint::new(c, side0), 30) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let (mut a, mut b) = (vs, Vec2::<DDReal>::e1());
        for &s in w {
            a = f.push(s, a);
            b = f.push(s, b);
        }
        let nu = (a.norm() / b.norm()).to_f64();
        sums[w.len()] += nu;
        if w.len() == 1 {
            max_term_n1 = max_term_n1.max(nu);
        }
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    let pts: Vec<(usize, f64)> = (1..=n_max).map(|n| (n, sums[n])).collect();
    let (slope, _, r2) = crate::stats::loglinear_fit(&pts.iter().map(|&(n, v)| (n as f64, v)).collect::<Vec<_>>());
    let crude_c = pts.iter().map(|&(n, v)| v / (2.0 * mu_over_lambda).powi(n as i32)).fold(0.0, f64::max);
    Ok(PressureReport { sums: pts, max_term_n1, zeta_hat: slope.exp(), fit_r2: r2, crude_c, mu_over_lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LoziParams {
        LoziParams::from_decimal(1.8, 0.35).unwrap()
    }

    #[test]
    fn length_one_initial_cylinders_split_the_absorbing_set() {
        let p = params();
        let m = absorbing_set(&p).unwrap();
        let plus = cylinder(&p, &[Side::Plus], CylinderKind::Initial).unwrap();
        let minus = cylinder(&p, &[Side::Minus], CylinderKind::Initial).unwrap();
        let expect = m.polygon().clip_side(Side::Plus);
        assert!((plus.polygon.area() - expect.area()).abs().to_f64() < 1e-25);
        let total = plus.polygon.area() + minus.polygon.area();
        assert!((total - m.polygon().area()).abs().to_f64() < 1e-25);
        assert!(plus.polygon.vertices().iter().all(|v| v.x.to_f64() >= -1e-25));
    }

    #[test]
    fn final_areas_contract_by_b_per_symbol() {
        let p = params();
        let b = p.b().to_f64();
        let rep = verify_cylinder_convexity(&p, 6, 5, 1).unwrap();
        assert!(rep.ok(), "{:?}", rep.violations);
        for st in &rep.per_length {
            let want = rep.absorbing_area * b.powi(st.n as i32);
            assert!((st.final_area - want).abs() < 1e-12 * rep.absorbing_area, "{} {} {}", st.n, st.final_area, want);
            assert!((st.initial_area - rep.absorbing_area).abs() < 1e-12);
        }
    }

    #[test]
    fn word_strings_round_trip() {
        let w = parse_word("+-+").unwrap();
        assert_eq!(word_string(&w), "+-+");
        assert!(parse_word("+x").is_none());
    }
}
