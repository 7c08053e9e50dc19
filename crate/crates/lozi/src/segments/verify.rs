//! Transversality of the images of the critical line to itself.

use serde::Serialize;

use super::{descendants, DirectedSegment};
use crate::extprec::DDReal;
use crate::geometry::{Point2, Side};
use crate::lozi::{absorbing_set, AbsorbingError, LoziParams};

const MAX_PIECES: usize = 1 << 20;

#[derive(Clone, Debug, Serialize)]
pub struct TransversalityStep {
    pub n: usize,
    pub pieces: usize,
    /// Pieces of `f^n(ℓ_S ∩ M)` crossing `x = 0` strictly.
    pub crossings: usize,
    /// Pieces whose direction is outside the closed double unstable cone.
    pub cone_failures: usize,
    /// Smallest `|dx| / |d|` over all pieces.
    pub min_horizontal: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransversalityReport {
    /// Endpoints of `ℓ_S ∩ M`.
    pub critical_segment: [[f64; 2]; 2],
    pub steps: Vec<TransversalityStep>,
    pub truncated: bool,
}

impl TransversalityReport {
    pub fn ok(&self) -> bool {
        !self.truncated && self.steps.iter().all(|s| s.cone_failures == 0)
    }
}

/// The segment `ℓ_S ∩ M`, oriented bottom to top.
pub fn critical_segment(params: &LoziParams) -> Result<DirectedSegment<DDReal>, AbsorbingError> {
    let m = absorbing_set(params)?;
    let half = m.polygon().clip_side(Side::Plus);
    let on_axis: Vec<_> = half.vertices().iter().filter(|v| v.x.is_zero()).map(|v| v.y).collect();
    let lo = on_axis.iter().copied().fold(DDReal::from_f64(f64::INFINITY), |a, b| if b < a { b } else { a });
    let hi = on_axis.iter().copied().fold(DDReal::from_f64(f64::NEG_INFINITY), |a, b| if b > a { b } else { a });
    Ok(DirectedSegment::new(Point2::new(DDReal::ZERO, lo), Point2::new(DDReal::ZERO, hi)))
}

/// Pushes `ℓ_S ∩ M` forward `n_max` times as a cut polyline and checks every
/// image piece against the unstable cone.
pub fn verify_transversality(params: &LoziParams, n_max: usize) -> Result<TransversalityReport, AbsorbingError> {
    let f = params.map::<DDReal>();
    let cones = f.cones();
    let seed = critical_segment(params)?;
    // The first image is a single horizontal segment; ℓ_S itself lies on the cut.
    let mut pieces = vec![DirectedSegment::new(f.apply(seed.p), f.apply(seed.q))];
    let mut steps = Vec::with_capacity(n_max);
    let mut truncated = false;
    for n in 1..=n_max {
        let mut crossings = 0;
        let mut cone_failures = 0;
        let mut min_horizontal = f64::INFINITY;
        for s in &pieces {
            let d = s.direction();
            if !cones.contains_unstable_double(d) {
                cone_failures += 1;
            }
            min_horizontal = min_horizontal.min((d.x.abs() / d.norm()).to_f64());
            if s.crossing().is_some() {
                crossings += 1;
            }
        }
        steps.push(TransversalityStep { n, pieces: pieces.len(), crossings, cone_failures, min_horizontal });
        if n == n_max {
            break;
        }
        if pieces.len() * 2 > MAX_PIECES {
            truncated = true;
            break;
        }
        pieces = pieces.iter().flat_map(|s| descendants(&f, s)).map(|d| d.segment).collect();
    }
    Ok(TransversalityReport { critical_segment: [seed.p.to_f64(), seed.q.to_f64()], steps, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_image_is_horizontal() {
        let p = LoziParams::from_decimal(1.8, 0.35).unwrap();
        let rep = verify_transversality(&p, 1).unwrap();
        assert_eq!(rep.steps[0].pieces, 1);
        assert_eq!(rep.steps[0].min_horizontal, 1.0);
        let [lo, hi] = rep.critical_segment;
        assert!(lo[1] < 0.0 && hi[1] > 0.0);
    }
}
