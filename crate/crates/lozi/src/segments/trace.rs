//! Recorded tracker runs with per-step bundle data.

use std::ops::Range;

use rand::Rng;

use super::tracking::{Tracker, TrackerConfig, TrackingError};
use crate::extprec::Real;
use crate::geometry::{Point2, Side, Vec2};
use crate::lozi::{absorbing_set, LoziMap, LoziParams};

/// One recorded step: the host point and its local unstable manifold `[p, q]`
/// (left to right).
#[derive(Clone, Copy, Debug)]
pub struct TraceStep<R> {
    pub host: Point2<R>,
    pub side: Side,
    pub p: Point2<R>,
    pub q: Point2<R>,
    pub exact: bool,
}

impl<R: Real> TraceStep<R> {
    pub fn length(&self) -> R {
        (self.q - self.p).norm()
    }

    /// Unit `v^u` with positive first component.
    pub fn direction(&self) -> Vec2<R> {
        (self.q - self.p).normalized()
    }
}

/// A crossing of `x = 0` by the manifold recorded at `steps[index]`.
#[derive(Clone, Copy, Debug)]
pub struct TraceEvent<R> {
    pub index: usize,
    pub s: Point2<R>,
    pub length: R,
    pub direction: Vec2<R>,
}

/// How many steps to record around the analysis window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceLayout {
    /// Steps before the window (needed by backward sums).
    pub prehistory: usize,
    /// Steps in the window; all averages are normalised by this.
    pub n_steps: usize,
    /// Steps after the window (forward lookahead).
    pub tail: usize,
}

impl TraceLayout {
    pub fn window(&self) -> Range<usize> {
        self.prehistory..self.prehistory + self.n_steps
    }

    pub fn total(&self) -> usize {
        self.prehistory + self.n_steps + self.tail
    }
}

#[derive(Clone, Debug)]
pub struct RunTrace<R> {
    pub map: LoziMap<R>,
    pub steps: Vec<TraceStep<R>>,
    pub events: Vec<TraceEvent<R>>,
    pub layout: TraceLayout,
    pub host_perturbations: u64,
    pub endpoint_hits: u64,
    pub reseeds: u64,
}

/// Bundle data at a host point, in `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HostFrame {
    pub vu: [f64; 2],
    pub vs: [f64; 2],
    pub lu: [f64; 2],
    pub ls: [f64; 2],
    /// `J v^u(x_k) = unstable_factor v^u(x_{k+1})`.
    pub unstable_factor: f64,
    /// `J v^s(x_k) = stable_factor v^s(x_{k+1})`.
    pub stable_factor: f64,
    /// `det[v^u, v^s]`.
    pub det: f64,
}

impl HostFrame {
    pub fn new(vu: [f64; 2], vs: [f64; 2]) -> HostFrame {
        let det = vu[0] * vs[1] - vu[1] * vs[0];
        HostFrame {
            vu,
            vs,
            lu: [vs[1] / det, -vs[0] / det],
            ls: [-vu[1] / det, vu[0] / det],
            unstable_factor: f64::NAN,
            stable_factor: f64::NAN,
            det,
        }
    }
}

#[inline]
pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Seeds a tracker, burns in, and records `layout.total()` steps.
pub fn record_trace<R: Real, G: Rng + ?Sized>(params: &LoziParams, cfg: &TrackerConfig, layout: TraceLayout, rng: &mut G) -> Result<RunTrace<R>, TrackingError> {
    let m = absorbing_set(params)?;
    let map = params.map::<R>();
    let mut tr = Tracker::random(map, &m, cfg.seed_length, rng);
    tr.burn_in(cfg)?;
    let total = layout.total();
    let mut steps = Vec::with_capacity(total);
    let mut events = Vec::new();
    for index in 0..total {
        let rec = tr.step();
        steps.push(TraceStep { host: rec.host, side: rec.host_side, p: rec.segment.p, q: rec.segment.q, exact: rec.endpoints_exact.0 && rec.endpoints_exact.1 });
        if let Some(e) = rec.event {
            events.push(TraceEvent { index, s: e.s, length: e.seg_length, direction: e.direction });
        }
    }
    Ok(RunTrace { map, steps, events, layout, host_perturbations: tr.host_perturbations, endpoint_hits: tr.endpoint_hits, reseeds: tr.reseeds })
}

/// Stable directions along an orbit with the given sides, by pulling a seed
/// back from the end. Entry `k` is accurate once `sides.len() - k` exceeds a
/// few tens of steps. Returns unit vectors and the factors `c_k > 0` with
/// `J_k v_k = c_k v_{k+1}`.
pub fn stable_sweep<R: Real>(map: &LoziMap<R>, sides: &[Side]) -> (Vec<Vec2<R>>, Vec<f64>) {
    let n = sides.len();
    let mut vs = vec![Vec2::<R>::e2(); n];
    let mut c = vec![f64::NAN; n];
    if n == 0 {
        return (vs, c);
    }
    vs[n - 1] = map.pull(sides[n - 1], Vec2::e2()).normalized();
    for k in (0..n - 1).rev() {
        let w = map.pull(sides[k], vs[k + 1]);
        let r = w.norm();
        vs[k] = w.scale(R::one() / r);
        c[k] = 1.0 / r.to_f64();
    }
    (vs, c)
}

impl<R: Real> RunTrace<R> {
    pub fn window(&self) -> Range<usize> {
        self.layout.window()
    }

    pub fn n_steps(&self) -> usize {
        self.layout.n_steps
    }

    pub fn host_f64(&self, k: usize) -> [f64; 2] {
        self.steps[k].host.to_f64()
    }

    /// Events whose step lies in the analysis window.
    pub fn window_events(&self) -> impl Iterator<Item = &TraceEvent<R>> {
        let w = self.window();
        self.events.iter().filter(move |e| w.contains(&e.index))
    }

    /// Host frames for every recorded step; entries in the last few tens of
    /// steps have unconverged stable vectors.
    pub fn host_frames(&self) -> Vec<HostFrame> {
        let sides: Vec<Side> = self.steps.iter().map(|s| s.side).collect();
        let (vs, c) = stable_sweep(&self.map, &sides);
        let n = self.steps.len();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let vu = self.steps[k].direction();
            let mut fr = HostFrame::new(vu.to_f64(), vs[k].to_f64());
            fr.stable_factor = c[k];
            if k + 1 < n {
                let img = self.map.push(sides[k], vu);
                fr.unstable_factor = img.dot(self.steps[k + 1].direction()).to_f64();
            }
            out.push(fr);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extprec::DDReal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn host_frames_are_covariant() {
        let p = LoziParams::from_decimal(1.8, 0.35).unwrap();
        let layout = TraceLayout { prehistory: 0, n_steps: 300, tail: 80 };
        let tr = record_trace::<DDReal, _>(&p, &TrackerConfig::default(), layout, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let fr = tr.host_frames();
        let b = 0.35f64;
        for k in 0..300 {
            let (a, n) = (fr[k], fr[k + 1]);
            assert!((dot(a.lu, a.vu) - 1.0).abs() < 1e-12 && dot(a.lu, a.vs).abs() < 1e-12);
            // |λ μ| = b |det F_k| / |det F_{k+1}|
            let lhs = (a.unstable_factor * a.stable_factor).abs();
            let rhs = b * a.det.abs() / n.det.abs();
            assert!((lhs - rhs).abs() < 1e-10 * rhs, "{k}: {lhs} {rhs}");
            assert!(a.unstable_factor.abs() > 1.0 && a.stable_factor < 0.5);
        }
    }
}
