use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DirectedSegment;
use crate::extprec::Real;
use crate::geometry::{Point2, Side, Vec2};
use crate::lozi::{absorbing_set, AbsorbingError, AbsorbingSet, LoziMap, LoziParams};

/// Simulator settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Length of the initial segment along `e1`.
    pub seed_length: f64,
    /// Steps discarded before sampling.
    pub burn_in: usize,
    /// Keep burning in past `burn_in` until both endpoints were created by cuts.
    pub require_exact: bool,
    /// Give up if exactness has not been reached after this many extra steps.
    pub max_extra_burn_in: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig { seed_length: 1e-6, burn_in: 1000, require_exact: true, max_extra_burn_in: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackingError {
    #[error("segment endpoints not cut-created after {0} burn-in steps")]
    NotExact(usize),
    #[error(transparent)]
    Absorbing(#[from] AbsorbingError),
}

/// Simulator state: the current local unstable segment and the host point on it.
///
/// The segment is kept oriented left to right (`p.x < q.x`), so its direction
/// is `v^u` with `v^u . e1 > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackedManifold<R> {
    pub segment: DirectedSegment<R>,
    pub t_host: R,
    pub host: Point2<R>,
    pub endpoints_exact: (bool, bool),
    pub step_index: u64,
}

impl<R: Real> TrackedManifold<R> {
    pub fn is_exact(&self) -> bool {
        self.endpoints_exact.0 && self.endpoints_exact.1
    }

    /// Unit direction `v^u` of the segment.
    pub fn direction(&self) -> Vec2<R> {
        self.segment.direction().normalized()
    }
}

/// A crossing of the tracked segment with `x = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingEvent<R> {
    pub step_index: u64,
    /// Crossing point, `s.x == 0`.
    pub s: Point2<R>,
    /// Length `|I|` of the segment that was cut.
    pub seg_length: R,
    /// `v^u . e1` on the segment.
    pub vu_e1: R,
    /// `σ̂` weight `1 / |I|`.
    pub weight: R,
    /// `v^u` on the segment (unit, `e1` component positive).
    pub direction: Vec2<R>,
    /// Side of the host point, i.e. of the piece that was kept.
    pub host_side: Side,
    pub endpoints_exact: (bool, bool),
}

/// Everything observed during one step, before the map is applied.
#[derive(Clone, Copy, Debug)]
pub struct StepRecord<R> {
    pub step_index: u64,
    pub host: Point2<R>,
    pub host_side: Side,
    pub segment: DirectedSegment<R>,
    pub endpoints_exact: (bool, bool),
    pub event: Option<CrossingEvent<R>>,
}

/// The tracking simulator.
#[derive(Clone, Debug)]
pub struct Tracker<R> {
    map: LoziMap<R>,
    state: TrackedManifold<R>,
    seed_length: f64,
    /// Host points found exactly on `x = 0` and nudged off it.
    pub host_perturbations: u64,
    /// Steps whose segment had an endpoint exactly on `x = 0` (no event emitted).
    pub endpoint_hits: u64,
    /// Restarts after a segment collapsed below representable length.
    pub reseeds: u64,
}

const MIN_LENGTH: f64 = 1e-250;

impl<R: Real> Tracker<R> {
    /// Starts a seed segment of the given length along `e1` centred at `host`.
    pub fn new(map: LoziMap<R>, host: Point2<R>, seed_length: f64) -> Self {
        Tracker { map, state: seed_state(host, seed_length, 0), seed_length, host_perturbations: 0, endpoint_hits: 0, reseeds: 0 }
    }

    /// Starts from an explicit state.
    pub fn from_state(map: LoziMap<R>, state: TrackedManifold<R>) -> Self {
        Tracker { map, state, seed_length: 1e-6, host_perturbations: 0, endpoint_hits: 0, reseeds: 0 }
    }

    /// Random host in the absorbing set.
    pub fn random<G: Rng + ?Sized>(map: LoziMap<R>, absorbing: &AbsorbingSet, seed_length: f64, rng: &mut G) -> Self {
        let host = absorbing.sample(rng);
        Tracker::new(map, host, seed_length)
    }

    pub fn state(&self) -> &TrackedManifold<R> {
        &self.state
    }

    pub fn map(&self) -> &LoziMap<R> {
        &self.map
    }

    /// Burns in `steps`, then until both endpoints are exact (if required).
    pub fn burn_in(&mut self, cfg: &TrackerConfig) -> Result<(), TrackingError> {
        for _ in 0..cfg.burn_in {
            self.step();
        }
        if cfg.require_exact {
            let mut extra = 0;
            while !self.state.is_exact() {
                if extra >= cfg.max_extra_burn_in {
                    return Err(TrackingError::NotExact(cfg.burn_in + extra));
                }
                self.step();
                extra += 1;
            }
        }
        Ok(())
    }

    /// Advances one step and reports what was observed on the way.
    pub fn step(&mut self) -> StepRecord<R> {
        let st = self.state;
        let seg = st.segment;
        let mut host = st.host;
        let host_side = match Side::of(host.x) {
            Some(s) => s,
            None => {
                // Nudge by the smallest representable amount toward the side
                // the parameter places it on.
                self.host_perturbations += 1;
                let side = match seg.crossing() {
                    Some((ts, _)) if st.t_host < ts => Side::of(seg.p.x).unwrap(),
                    Some(_) => Side::of(seg.q.x).unwrap(),
                    None => seg.side(),
                };
                host.x = R::from_f64(side.sign() * f64::from_bits(1));
                side
            }
        };
        if seg.p.x.parts()[0] == 0.0 || seg.q.x.parts()[0] == 0.0 {
            self.endpoint_hits += 1;
        }
        let f = &self.map;
        let mut event = None;
        let (new_seg, mut t, mut exact) = match seg.crossing() {
            Some((ts, s)) => {
                let len = seg.length();
                event = Some(CrossingEvent {
                    step_index: st.step_index,
                    s,
                    seg_length: len,
                    vu_e1: (seg.q.x - seg.p.x) / len,
                    weight: R::one() / len,
                    direction: seg.direction().scale(R::one() / len),
                    host_side,
                    endpoints_exact: st.endpoints_exact,
                });
                let fs = f.apply(s);
                if Side::of(seg.p.x) == Some(host_side) {
                    (DirectedSegment::new(f.apply(seg.p), fs), ratio(st.t_host, ts), (st.endpoints_exact.0, true))
                } else {
                    (DirectedSegment::new(fs, f.apply(seg.q)), ratio(st.t_host - ts, R::one() - ts), (true, st.endpoints_exact.1))
                }
            }
            None => (DirectedSegment::new(f.apply(seg.p), f.apply(seg.q)), st.t_host, st.endpoints_exact),
        };
        let mut new_seg = new_seg;
        if new_seg.q.x < new_seg.p.x {
            new_seg = new_seg.reversed();
            t = R::one() - t;
            exact = (exact.1, exact.0);
        }
        let new_host = f.apply(host);
        self.state = TrackedManifold { segment: new_seg, t_host: t, host: new_host, endpoints_exact: exact, step_index: st.step_index + 1 };
        if !(new_seg.length().to_f64() > MIN_LENGTH) {
            self.reseeds += 1;
            self.state = seed_state(new_host, self.seed_length, st.step_index + 1);
        }
        StepRecord { step_index: st.step_index, host: st.host, host_side, segment: seg, endpoints_exact: st.endpoints_exact, event }
    }
}

/// `num / den` clamped to `[0, 1]`, with a vanishing denominator mapped to 0.
fn ratio<R: Real>(num: R, den: R) -> R {
    if den.to_f64() <= 0.0 {
        return R::zero();
    }
    (num / den).max(R::zero()).min(R::one())
}

fn seed_state<R: Real>(host: Point2<R>, len: f64, step: u64) -> TrackedManifold<R> {
    let h = Point2::new(R::from_f64(len * 0.5), R::zero());
    TrackedManifold {
        segment: DirectedSegment::new(host - h, host + h),
        t_host: R::from_f64(0.5),
        host,
        endpoints_exact: (false, false),
        step_index: step,
    }
}

/// Output of [`run_tracking`].
#[derive(Clone, Debug)]
pub struct TrackingRun<R> {
    pub events: Vec<CrossingEvent<R>>,
    pub hosts: Vec<Point2<R>>,
    pub n_steps: usize,
    pub host_perturbations: u64,
    pub endpoint_hits: u64,
    pub reseeds: u64,
}

/// Seeds a tracker at a random point, burns in, then records `n_steps` steps.
pub fn run_tracking<R: Real, G: Rng + ?Sized>(params: &LoziParams, n_steps: usize, cfg: &TrackerConfig, rng: &mut G) -> Result<TrackingRun<R>, TrackingError> {
    let m = absorbing_set(params)?;
    let mut tr = Tracker::random(params.map::<R>(), &m, cfg.seed_length, rng);
    tr.burn_in(cfg)?;
    let mut events = Vec::new();
    let mut hosts = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let rec = tr.step();
        hosts.push(rec.host);
        if let Some(e) = rec.event {
            events.push(e);
        }
    }
    Ok(TrackingRun { events, hosts, n_steps, host_perturbations: tr.host_perturbations, endpoint_hits: tr.endpoint_hits, reseeds: tr.reseeds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extprec::DDReal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> LoziParams {
        LoziParams::from_decimal(1.8, 0.35).unwrap()
    }

    #[test]
    fn uncut_step_scales_length_by_expansion() {
        let f = params().map::<DDReal>();
        let mut tr = Tracker::new(f, Point2::dd(0.6, 0.05), 1e-6);
        let before = tr.state().segment;
        let rec = tr.step();
        assert!(rec.event.is_none());
        let after = tr.state().segment;
        let j = f.jacobian(Side::Plus);
        let lam = j.apply(before.direction()).norm() / before.length();
        let ratio = after.length() / before.length();
        assert!(((ratio - lam) / lam).abs().to_f64() < 1e-24);
    }

    #[test]
    fn burn_in_reaches_exact_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let run = run_tracking::<DDReal, _>(&params(), 2000, &TrackerConfig::default(), &mut rng).unwrap();
        assert!(!run.events.is_empty());
        for e in &run.events {
            assert!(e.vu_e1.to_f64() > 0.0 && e.vu_e1.to_f64() <= 1.0);
            assert!(e.weight.to_f64() > 0.0);
            assert_eq!(e.s.x.to_f64(), 0.0);
        }
    }

    #[test]
    fn equal_seeds_give_identical_streams() {
        let cfg = TrackerConfig::default();
        let a = run_tracking::<DDReal, _>(&params(), 500, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = run_tracking::<DDReal, _>(&params(), 500, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.hosts, b.hosts);
    }
}
