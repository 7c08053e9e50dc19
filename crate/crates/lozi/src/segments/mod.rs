//! Directed segments, their descendants under the map, and the single-manifold
//! tracking simulator.

pub mod cylinders;
pub mod trace;
mod tracking;
pub mod verify;

pub use tracking::{run_tracking, CrossingEvent, StepRecord, TrackedManifold, Tracker, TrackerConfig, TrackingError, TrackingRun};

use crate::extprec::Real;
use crate::geometry::{Point2, Side, Vec2};
use crate::lozi::LoziMap;

/// The segment `{(1 - t) p + t q : t in [0, 1]}` with orientation `p -> q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectedSegment<R> {
    pub p: Point2<R>,
    pub q: Point2<R>,
}

impl<R: Real> DirectedSegment<R> {
    pub fn new(p: Point2<R>, q: Point2<R>) -> Self {
        DirectedSegment { p, q }
    }

    pub fn length(&self) -> R {
        (self.q - self.p).norm()
    }

    pub fn direction(&self) -> Vec2<R> {
        self.q - self.p
    }

    pub fn at(&self, t: R) -> Point2<R> {
        self.p.lerp(self.q, t)
    }

    pub fn reversed(&self) -> Self {
        DirectedSegment { p: self.q, q: self.p }
    }

    /// Parameter and point where the segment meets `x = 0`, if its endpoints
    /// lie strictly on opposite sides. The returned point has `x` exactly zero.
    pub fn crossing(&self) -> Option<(R, Point2<R>)> {
        match (Side::of(self.p.x), Side::of(self.q.x)) {
            (Some(a), Some(b)) if a != b => {
                let t = self.p.x / (self.p.x - self.q.x);
                let y = self.p.y + (self.q.y - self.p.y) * t;
                Some((t, Point2::new(R::zero(), y)))
            }
            _ => None,
        }
    }

    /// Side containing the segment when it does not cross `x = 0`.
    pub fn side(&self) -> Side {
        Side::of(self.p.x).or_else(|| Side::of(self.q.x)).unwrap_or(Side::Plus)
    }
}

/// One image piece of a segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Descendant<R> {
    pub segment: DirectedSegment<R>,
    /// Side of the source piece.
    pub side: Side,
    /// Crossing point of the source segment with `x = 0`, if it was cut.
    pub crossing: Option<Point2<R>>,
}

/// Images of `seg ∩ M_-` and `seg ∩ M_+`, orientation inherited.
pub fn descendants<R: Real>(map: &LoziMap<R>, seg: &DirectedSegment<R>) -> Vec<Descendant<R>> {
    match seg.crossing() {
        None => vec![Descendant {
            segment: DirectedSegment::new(map.apply(seg.p), map.apply(seg.q)),
            side: seg.side(),
            crossing: None,
        }],
        Some((_, s)) => {
            let fs = map.apply(s);
            let sp = Side::of(seg.p.x).unwrap();
            let sq = sp.flip();
            vec![
                Descendant { segment: DirectedSegment::new(map.apply(seg.p), fs), side: sp, crossing: Some(s) },
                Descendant { segment: DirectedSegment::new(fs, map.apply(seg.q)), side: sq, crossing: Some(s) },
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extprec::DDReal;
    use crate::lozi::LoziParams;

    #[test]
    fn uncut_segment_has_one_affine_image() {
        let f = LoziParams::from_decimal(1.8, 0.35).unwrap().map::<DDReal>();
        let s = DirectedSegment::new(Point2::dd(0.2, 0.1), Point2::dd(0.4, 0.12));
        let d = descendants(&f, &s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].side, Side::Plus);
        assert!(d[0].crossing.is_none());
    }

    #[test]
    fn cut_segment_shares_crossing_image() {
        let f = LoziParams::from_decimal(1.8, 0.35).unwrap().map::<DDReal>();
        let s = DirectedSegment::new(Point2::dd(-0.5, 0.0), Point2::dd(0.5, 0.0));
        let d = descendants(&f, &s);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].crossing, Some(Point2::dd(0.0, 0.0)));
        assert_eq!(d[0].segment.q, Point2::dd(1.0, 0.0));
        assert_eq!(d[0].segment.q, d[1].segment.p);
    }
}
