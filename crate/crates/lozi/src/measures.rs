//! SRB averages, slice measures on vertical lines, and Lyapunov exponents.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{map_runs, Workers};
use crate::extprec::Real;
use crate::geometry::Side;
use crate::lozi::{absorbing_set, LoziParams};
use crate::observables::Observable;
use crate::segments::trace::{stable_sweep, HostFrame};
use crate::segments::{Tracker, TrackerConfig, TrackingError};
use crate::stats::{KahanSum, Moments, ScalarEstimate};

/// Ensemble settings shared by all estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_steps: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub tracker: TrackerConfig,
    #[serde(skip)]
    pub workers: Workers,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { n_steps: 100_000, n_runs: 10, seed: 0, tracker: TrackerConfig::default(), workers: Workers::Auto }
    }
}

impl RunConfig {
    pub fn new(n_steps: usize, n_runs: usize, seed: u64) -> Self {
        RunConfig { n_steps, n_runs, seed, ..Default::default() }
    }

    pub fn with_workers(mut self, w: Workers) -> Self {
        self.workers = w;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.tracker.burn_in = burn_in;
        self
    }
}

fn start<R: Real, G: Rng + ?Sized>(params: &LoziParams, cfg: &RunConfig, rng: &mut G) -> Result<Tracker<R>, TrackingError> {
    let m = absorbing_set(params)?;
    let mut tr = Tracker::random(params.map::<R>(), &m, cfg.tracker.seed_length, rng);
    tr.burn_in(&cfg.tracker)?;
    Ok(tr)
}

fn collect<T>(runs: Vec<Result<T, TrackingError>>) -> Result<Vec<T>, TrackingError> {
    runs.into_iter().collect()
}

/// Birkhoff average of `A` along the host orbit, one value per run.
pub fn srb_average<R: Real>(params: &LoziParams, a: &Observable, cfg: &RunConfig) -> Result<ScalarEstimate, TrackingError> {
    let runs = map_runs(cfg.n_runs, cfg.seed, cfg.workers, |_, rng| {
        let mut tr = start::<R, _>(params, cfg, rng)?;
        let mut s = KahanSum::new();
        for _ in 0..cfg.n_steps {
            let rec = tr.step();
            s.add(a.value(rec.host.to_f64()));
        }
        Ok(s.value() / cfg.n_steps as f64)
    });
    Ok(ScalarEstimate::from_runs(&collect(runs)?))
}

/// Histogram of the slice measure `ρ_x` on the line `x = x_line`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SliceHistogram {
    pub x_line: f64,
    pub bin_width: f64,
    pub bin_origin: f64,
    /// Index of the first bin: bin `i` covers
    /// `[bin_origin + (first_bin + i) w, bin_origin + (first_bin + i + 1) w)`.
    pub first_bin: i64,
    pub masses: Vec<f64>,
    pub total_mass: f64,
    /// Across-run estimate of the total mass.
    pub total: ScalarEstimate,
    pub n_steps: u64,
    pub n_events: u64,
    /// Manifolds with an endpoint exactly on the line (dropped).
    pub endpoint_hits: u64,
}

impl SliceHistogram {
    pub fn bin_center(&self, i: usize) -> f64 {
        self.bin_origin + (self.first_bin as f64 + i as f64 + 0.5) * self.bin_width
    }

    /// `(lowest, highest)` `y` of bins with positive mass.
    pub fn support(&self) -> Option<(f64, f64)> {
        let lo = self.masses.iter().position(|&m| m > 0.0)?;
        let hi = self.masses.iter().rposition(|&m| m > 0.0)?;
        Some((self.bin_center(lo) - 0.5 * self.bin_width, self.bin_center(hi) + 0.5 * self.bin_width))
    }
}

#[derive(Clone, Debug, Default)]
struct SliceRun {
    bins: BTreeMap<i64, KahanSum>,
    total: KahanSum,
    events: u64,
    endpoint_hits: u64,
}

/// Crossing of the segment `[p, q]` (left to right) with `x = xl`: returns
/// `y` and the mass `1 / (|I| v^u.e1) = 1 / (q.x - p.x)` contributed per step
/// before normalisation, or `None` with a flag for an endpoint hit.
fn line_crossing<R: Real>(p: crate::Point2<R>, q: crate::Point2<R>, xl: R) -> Result<Option<(f64, f64)>, ()> {
    let dp = p.x - xl;
    let dq = q.x - xl;
    if dp.parts()[0] == 0.0 || dq.parts()[0] == 0.0 {
        return Err(());
    }
    if dp.is_negative() == dq.is_negative() {
        return Ok(None);
    }
    let t = -dp / (q.x - p.x);
    let y = p.y + (q.y - p.y) * t;
    let len = (q - p).norm();
    let weight = (R::one() / len).to_f64();
    let vu_e1 = ((q.x - p.x) / len).to_f64();
    Ok(Some((y.to_f64(), weight * (1.0 / vu_e1))))
}

/// Histogram of the slice measure on `x = x_line`, normalised per step.
pub fn slice_measure<R: Real>(params: &LoziParams, x_line: f64, bin_width: f64, bin_origin: f64, cfg: &RunConfig) -> Result<SliceHistogram, TrackingError> {
    assert!(bin_width > 0.0);
    let xl = R::from_f64(x_line);
    let runs = map_runs(cfg.n_runs, cfg.seed, cfg.workers, |_, rng| {
        let mut tr = start::<R, _>(params, cfg, rng)?;
        let mut r = SliceRun::default();
        for _ in 0..cfg.n_steps {
            let rec = tr.step();
            match line_crossing(rec.segment.p, rec.segment.q, xl) {
                Err(()) => r.endpoint_hits += 1,
                Ok(None) => {}
                Ok(Some((y, m))) => {
                    let bin = ((y - bin_origin) / bin_width).floor() as i64;
                    r.bins.entry(bin).or_default().add(m);
                    r.total.add(m);
                    r.events += 1;
                }
            }
        }
        Ok(r)
    });
    let runs = collect(runs)?;
    let n_total = (cfg.n_steps * cfg.n_runs) as f64;
    let mut bins: BTreeMap<i64, KahanSum> = BTreeMap::new();
    for r in &runs {
        for (k, v) in &r.bins {
            bins.entry(*k).or_default().merge(v);
        }
    }
    let (first_bin, masses) = match (bins.keys().next(), bins.keys().next_back()) {
        (Some(&lo), Some(&hi)) => (lo, (lo..=hi).map(|k| bins.get(&k).map_or(0.0, |s| s.value() / n_total)).collect()),
        _ => (0, Vec::new()),
    };
    let per_run: Vec<f64> = runs.iter().map(|r| r.total.value() / cfg.n_steps as f64).collect();
    let total_mass = masses.iter().copied().collect::<KahanSum>().value();
    Ok(SliceHistogram {
        x_line,
        bin_width,
        bin_origin,
        first_bin,
        masses,
        total_mass,
        total: ScalarEstimate::from_runs(&per_run),
        n_steps: n_total as u64,
        n_events: runs.iter().map(|r| r.events).sum(),
        endpoint_hits: runs.iter().map(|r| r.endpoint_hits).sum(),
    })
}

/// `ρ_S(1)`: total mass of the slice on `x = 0`.
pub fn rho_s_total<R: Real>(params: &LoziParams, cfg: &RunConfig) -> Result<ScalarEstimate, TrackingError> {
    Ok(slice_measure::<R>(params, 0.0, 0.01, 0.0, cfg)?.total)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisintegrationPoint {
    pub x_line: f64,
    pub total_mass: ScalarEstimate,
    /// Density of the `x`-marginal of `ρ` on `[x - h/2, x + h/2)`.
    pub marginal_density: ScalarEstimate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisintegrationReport {
    pub spacing: f64,
    pub points: Vec<DisintegrationPoint>,
    /// Trapezoid integral of `x -> ρ_x(ℓ_x)`.
    pub integral: ScalarEstimate,
    pub max_total_mass: f64,
    pub endpoint_hits: u64,
}

/// Slice masses on the grid `x_min + i h` spanning `[x_min, x_max]`, their
/// integral, and the `x`-marginal histogram of the host orbit.
pub fn disintegration_check<R: Real>(params: &LoziParams, x_min: f64, x_max: f64, spacing: f64, cfg: &RunConfig) -> Result<DisintegrationReport, TrackingError> {
    let n_lines = ((x_max - x_min) / spacing).round() as usize + 1;
    let grid: Vec<f64> = (0..n_lines).map(|i| x_min + i as f64 * spacing).collect();
    let grid_r: Vec<R> = grid.iter().map(|&x| R::from_f64(x)).collect();
    let runs = map_runs(cfg.n_runs, cfg.seed, cfg.workers, |_, rng| {
        let mut tr = start::<R, _>(params, cfg, rng)?;
        let mut mass = vec![KahanSum::new(); n_lines];
        let mut marginal = vec![0u64; n_lines];
        let mut hits = 0u64;
        for _ in 0..cfg.n_steps {
            let rec = tr.step();
            let (p, q) = (rec.segment.p, rec.segment.q);
            let hx = rec.host.x.to_f64();
            let j = ((hx - x_min) / spacing + 0.5).floor();
            if j >= 0.0 && (j as usize) < n_lines {
                marginal[j as usize] += 1;
            }
            // Grid lines strictly between the endpoints.
            let lo = (((p.x.to_f64() - x_min) / spacing).floor() as i64).max(0) as usize;
            let hi = ((((q.x.to_f64() - x_min) / spacing).ceil() as i64).max(0) as usize).min(n_lines - 1);
            for i in lo..=hi {
                match line_crossing(p, q, grid_r[i]) {
                    Err(()) => hits += 1,
                    Ok(Some((_, m))) => mass[i].add(m),
                    Ok(None) => {}
                }
            }
        }
        let n = cfg.n_steps as f64;
        let masses: Vec<f64> = mass.iter().map(|s| s.value() / n).collect();
        let dens: Vec<f64> = marginal.iter().map(|&c| c as f64 / (n * spacing)).collect();
        Ok((masses, dens, hits))
    });
    let runs = collect(runs)?;
    let integral: Vec<f64> = runs.iter().map(|(m, _, _)| trapezoid(m, spacing)).collect();
    let points: Vec<DisintegrationPoint> = (0..n_lines)
        .map(|i| DisintegrationPoint {
            x_line: grid[i],
            total_mass: ScalarEstimate::from_runs(&runs.iter().map(|r| r.0[i]).collect::<Vec<_>>()),
            marginal_density: ScalarEstimate::from_runs(&runs.iter().map(|r| r.1[i]).collect::<Vec<_>>()),
        })
        .collect();
    let max_total_mass = points.iter().map(|p| p.total_mass.mean).fold(0.0, f64::max);
    Ok(DisintegrationReport { spacing, points, integral: ScalarEstimate::from_runs(&integral), max_total_mass, endpoint_hits: runs.iter().map(|r| r.2).sum() })
}

fn trapezoid(v: &[f64], h: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let inner: KahanSum = v[1..v.len() - 1].iter().copied().collect();
    h * (inner.value() + 0.5 * (v[0] + v[v.len() - 1]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `λ1 / |λ2|`.
    pub d_s: f64,
    /// `λ1 + λ2 - ln b` with `λ2` from the stable cocycle, corrected for the
    /// frame determinant telescoping term.
    pub sum_check: f64,
    /// `λ2` from the stable cocycle (without the telescoping correction).
    pub lambda2_cocycle: f64,
    pub lambda1_se: f64,
    pub d_s_se: f64,
    pub n_steps: usize,
    pub n_runs: usize,
}

const LYAP_CHUNK: usize = 4096;
const LYAP_LOOKAHEAD: usize = 64;

struct LyapRun {
    lambda1: f64,
    lambda2_cocycle: f64,
    sum_check: f64,
}

/// Unstable exponent from the one-step cocycle along the host orbit; the
/// stable one from the determinant identity, with an independent cocycle
/// estimate used for `sum_check`.
pub fn lyapunov<R: Real>(params: &LoziParams, cfg: &RunConfig) -> Result<LyapunovReport, TrackingError> {
    let ln_b = params.b().to_f64().abs().ln();
    let runs = map_runs(cfg.n_runs, cfg.seed, cfg.workers, |_, rng| {
        let mut tr = start::<R, _>(params, cfg, rng)?;
        let map = *tr.map();
        let mut buf: VecDeque<(crate::Vec2<R>, Side)> = VecDeque::with_capacity(LYAP_CHUNK + LYAP_LOOKAHEAD + 1);
        let (mut su, mut ss) = (KahanSum::new(), KahanSum::new());
        let mut det_first = None;
        let mut det_last = 0.0;
        let mut done = 0usize;
        let mut flush = |buf: &mut VecDeque<(crate::Vec2<R>, Side)>, upto: usize, su: &mut KahanSum, ss: &mut KahanSum| {
            let sides: Vec<Side> = buf.iter().map(|e| e.1).collect();
            let (vs, c) = stable_sweep(&map, &sides);
            for k in 0..upto {
                let (vu, side) = buf[k];
                let lam = map.push(side, vu).dot(buf[k + 1].0).to_f64();
                su.add(lam.abs().ln());
                ss.add(c[k].ln());
                let fr = HostFrame::new(vu.to_f64(), vs[k].to_f64());
                if det_first.is_none() {
                    det_first = Some(fr.det.abs().ln());
                }
                let nf = HostFrame::new(buf[k + 1].0.to_f64(), vs[k + 1].to_f64());
                det_last = nf.det.abs().ln();
            }
            buf.drain(..upto);
        };
        while done < cfg.n_steps {
            let rec = tr.step();
            buf.push_back((rec.segment.direction().normalized(), rec.host_side));
            if buf.len() == LYAP_CHUNK + LYAP_LOOKAHEAD + 1 {
                let upto = LYAP_CHUNK.min(cfg.n_steps - done);
                flush(&mut buf, upto, &mut su, &mut ss);
                done += upto;
            }
            if done < cfg.n_steps && buf.len() < LYAP_LOOKAHEAD + 1 {
                continue;
            }
            if cfg.n_steps - done + LYAP_LOOKAHEAD + 1 == buf.len() {
                let upto = cfg.n_steps - done;
                flush(&mut buf, upto, &mut su, &mut ss);
                done += upto;
            }
        }
        let n = cfg.n_steps as f64;
        let l1 = su.value() / n;
        let l2 = ss.value() / n;
        let correction = (det_first.unwrap_or(0.0) - det_last) / n;
        Ok(LyapRun { lambda1: l1, lambda2_cocycle: l2, sum_check: l1 + l2 - ln_b - correction })
    });
    let runs = collect(runs)?;
    let l1: Moments = runs.iter().map(|r| r.lambda1).collect();
    let ds: Vec<f64> = runs.iter().map(|r| r.lambda1 / (ln_b - r.lambda1).abs()).collect();
    let lambda1 = l1.mean;
    let lambda2 = ln_b - lambda1;
    Ok(LyapunovReport {
        lambda1,
        lambda2,
        d_s: lambda1 / lambda2.abs(),
        sum_check: runs.iter().map(|r| r.sum_check.abs()).fold(0.0, f64::max),
        lambda2_cocycle: runs.iter().map(|r| r.lambda2_cocycle).sum::<f64>() / runs.len() as f64,
        lambda1_se: if runs.len() > 1 { l1.std_err() } else { f64::NAN },
        d_s_se: ScalarEstimate::from_runs(&ds).std_err,
        n_steps: cfg.n_steps,
        n_runs: cfg.n_runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extprec::DDReal;

    fn params() -> LoziParams {
        LoziParams::from_decimal(1.8, 0.35).unwrap()
    }

    #[test]
    fn constant_observable_has_no_spread() {
        let e = srb_average::<DDReal>(&params(), &Observable::one(), &RunConfig::new(2000, 3, 1)).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn slice_outside_attractor_is_empty() {
        let h = slice_measure::<DDReal>(&params(), 5.0, 0.01, 0.0, &RunConfig::new(2000, 2, 1)).unwrap();
        assert_eq!(h.total_mass, 0.0);
        assert!(h.masses.is_empty());
    }

    #[test]
    fn histogram_total_ignores_bin_origin() {
        let cfg = RunConfig::new(5000, 2, 3);
        let a = slice_measure::<DDReal>(&params(), 0.0, 0.01, 0.0, &cfg).unwrap();
        let b = slice_measure::<DDReal>(&params(), 0.0, 0.01, 0.005, &cfg).unwrap();
        assert!((a.total_mass - b.total_mass).abs() < 1e-12 * a.total_mass);
        assert!((a.total_mass - a.total.mean).abs() < 1e-12 * a.total_mass);
        assert!(a.total_mass > 0.0);
    }

    #[test]
    fn lyapunov_sum_identity() {
        let r = lyapunov::<DDReal>(&params(), &RunConfig::new(20_000, 2, 4)).unwrap();
        assert!(r.sum_check < 1e-8, "{r:?}");
        assert!(r.lambda1 > 0.0 && r.lambda2 < 0.0);
    }
}
