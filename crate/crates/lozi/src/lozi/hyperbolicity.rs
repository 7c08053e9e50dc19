use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{absorbing_set, AbsorbingError, LoziParams};
use crate::extprec::DDReal;
use crate::geometry::{Point2, Side, Vec2};

#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicityFailure {
    pub point: [f64; 2],
    pub vector: [f64; 2],
    pub side: Side,
    pub check: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicityReport {
    pub n_samples: usize,
    pub cone_invariance_ok: bool,
    /// Minimum of `|Jv| / |v|` over unstable-cone vectors.
    pub lambda_min: f64,
    /// Maximum of `|Jv| / |v|` over unstable-cone vectors.
    pub lambda_max: f64,
    /// Maximum of `|Jv| / |v|` over stable-cone vectors.
    pub mu_max: f64,
    /// Largest relative defect of `|Ju||Jv| sin(Ju, Jv) = b |u||v| sin(u, v)`
    /// over matched unstable/stable pairs.
    pub area_identity_error: f64,
    pub failures: Vec<HyperbolicityFailure>,
}

const MAX_REPORTED_FAILURES: usize = 16;

/// Samples points of the absorbing polygon and cone vectors, checking
/// `J C^u ⊂ int C^u` (double cones) and measuring expansion and contraction.
pub fn verify_hyperbolicity(params: &LoziParams, n_samples: usize, seed: u64) -> Result<HyperbolicityReport, AbsorbingError> {
    let m = absorbing_set(params)?;
    let f = params.map::<DDReal>();
    let cones = f.cones();
    let c = cones.c;
    let cs = cones.c_stable;
    let b = params.b();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = HyperbolicityReport {
        n_samples,
        cone_invariance_ok: true,
        lambda_min: f64::INFINITY,
        lambda_max: 0.0,
        mu_max: 0.0,
        area_identity_error: 0.0,
        failures: Vec::new(),
    };
    let inv_c = DDReal::ONE / c;
    let inv_cs = DDReal::ONE / cs;
    for i in 0..n_samples {
        let p: Point2<DDReal> = m.sample(&mut rng);
        let side = Side::of(p.x).unwrap_or(Side::Plus);
        // Cone boundary directions, then an interior one.
        let eta = match i % 3 {
            0 => inv_c,
            1 => -inv_c,
            _ => inv_c.mul_f64(rng.gen_range(-1.0..1.0)),
        };
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let u: Vec2<DDReal> = Point2::new(DDReal::from(sign), eta.mul_f64(sign));
        let ju = f.push(side, u);
        if !cones.interior_unstable_double(ju) {
            rep.cone_invariance_ok = false;
            if rep.failures.len() < MAX_REPORTED_FAILURES {
                rep.failures.push(HyperbolicityFailure { point: p.to_f64(), vector: u.to_f64(), side, check: "unstable cone invariance" });
            }
        }
        let ratio = (ju.norm() / u.norm()).to_f64();
        rep.lambda_min = rep.lambda_min.min(ratio);
        rep.lambda_max = rep.lambda_max.max(ratio);
        // Stable cone at p is J(p)^{-1} K with K = {|eta| >= c_s|xi|}.
        let k: Vec2<DDReal> = Point2::new((eta * c * inv_cs).mul_f64(sign), DDReal::from(sign));
        let v = f.pull(side, k);
        // Backward invariance: J^{-1} K ⊂ int K, so J^{-1} C^s(f p) ⊂ C^s(p).
        if !(v.y.abs() > cs * v.x.abs()) {
            rep.cone_invariance_ok = false;
            if rep.failures.len() < MAX_REPORTED_FAILURES {
                rep.failures.push(HyperbolicityFailure { point: p.to_f64(), vector: v.to_f64(), side, check: "stable cone invariance" });
            }
        }
        let mu = (k.norm() / v.norm()).to_f64();
        rep.mu_max = rep.mu_max.max(mu);
        let lhs = ju.cross(k);
        let rhs = u.cross(v) * b;
        let err = ((lhs.abs() - rhs.abs()) / rhs.abs()).abs().to_f64();
        rep.area_identity_error = rep.area_identity_error.max(err);
    }
    if rep.lambda_min <= 1.0 || rep.mu_max >= 1.0 {
        rep.cone_invariance_ok = false;
    }
    Ok(rep)
}
