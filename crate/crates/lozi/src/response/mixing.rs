//! Conditional mixing of the slice measure on `x = 0` against `ρ`.

use serde::{Deserialize, Serialize};

use super::estimators::{EventOrbit, EventPast};
use super::{GeometricFit, ResponseError};
use crate::ensemble::map_runs;
use crate::extprec::Real;
use crate::lozi::LoziParams;
use crate::measures::RunConfig;
use crate::observables::Observable;
use crate::segments::trace::{record_trace, RunTrace, TraceLayout};
use crate::segments::TrackingError;
use crate::stats::{KahanSum, ScalarEstimate};

const STABLE_DEPTH: usize = 60;

#[derive(Clone, Debug, Serialize)]
pub struct MixingSeries {
    /// `C_n = ρ_S(A∘f^n) - ρ(A) ρ_S(1)` for `n = 0..=n_max`.
    pub c: Vec<ScalarEstimate>,
    pub fit: GeometricFit,
}

impl MixingSeries {
    pub fn n_max(&self) -> usize {
        self.c.len() - 1
    }

    /// `|C_n| / |C_0|`.
    pub fn ratio(&self, n: usize) -> f64 {
        (self.c[n].mean / self.c[0].mean).abs()
    }

    pub fn refit(&mut self, n_lo: usize, n_hi: usize) {
        let v: Vec<f64> = self.c.iter().map(|e| e.mean).collect();
        self.fit = GeometricFit::fit(&v, n_lo, n_hi);
    }
}

fn host_mean<R: Real>(trace: &RunTrace<R>, a: &Observable) -> f64 {
    let s: KahanSum = trace.window().map(|k| a.value(trace.host_f64(k))).collect();
    s.value() / trace.n_steps() as f64
}

fn record<R: Real>(params: &LoziParams, run: &RunConfig, layout: TraceLayout, job: impl Fn(&RunTrace<R>) -> f64 + Sync + Send) -> Result<Vec<f64>, ResponseError> {
    let runs = map_runs(run.n_runs, run.seed, run.workers, |_, rng| {
        let trace = record_trace::<R, _>(params, &run.tracker, layout, rng)?;
        Ok::<_, TrackingError>(job(&trace))
    });
    Ok(runs.into_iter().collect::<Result<Vec<_>, _>>()?)
}

/// `C_n` for `n = 0..=n_max`, fitted geometrically over `[2, n_max]`.
pub fn conditional_mixing<R: Real>(params: &LoziParams, a: &Observable, n_max: usize, run: &RunConfig) -> Result<MixingSeries, ResponseError> {
    let layout = TraceLayout { prehistory: 0, n_steps: run.n_steps, tail: 1 };
    let runs = map_runs(run.n_runs, run.seed, run.workers, |_, rng| {
        let trace = record_trace::<R, _>(params, &run.tracker, layout, rng)?;
        let n = trace.n_steps() as f64;
        let rho_a = host_mean(&trace, a);
        let mut sums = vec![KahanSum::new(); n_max + 1];
        let mut total = KahanSum::new();
        for e in trace.window_events() {
            let orb = EventOrbit::new(&trace.map, e, n_max, 0);
            total.add(orb.slice(1.0));
            for (k, z) in orb.z.iter().enumerate() {
                sums[k].add(orb.slice(a.value(*z)));
            }
        }
        let rho_s = total.value() / n;
        Ok::<_, TrackingError>(sums.iter().map(|s| s.value() / n - rho_a * rho_s).collect::<Vec<f64>>())
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let c: Vec<ScalarEstimate> = (0..=n_max).map(|k| ScalarEstimate::from_runs(&runs.iter().map(|r| r[k]).collect::<Vec<_>>())).collect();
    let means: Vec<f64> = c.iter().map(|e| e.mean).collect();
    let fit = GeometricFit::fit(&means, 2.min(n_max), n_max);
    Ok(MixingSeries { c, fit })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixingDirection {
    /// `ρ_S((A∘f^{n+m}) (B∘f^m) Γ λ_m^{-1}) - ρ(A) ρ_S((B∘f^m) Γ λ_m^{-1})`.
    Forward,
    /// `ρ_S((A∘f^n) (B∘f^{-m}) Γ μ_m) - ρ(A) ρ_S((B∘f^{-m}) Γ μ_m)`.
    Backward,
}

/// The two-parameter mixing difference; `Γ` is evaluated at the crossing
/// point and the cocycles are taken from `x > 0`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_mixing_general<R: Real>(
    params: &LoziParams,
    a: &Observable,
    b: &Observable,
    gamma: &Observable,
    m: usize,
    n: usize,
    direction: MixingDirection,
    run: &RunConfig,
) -> Result<ScalarEstimate, ResponseError> {
    let layout = TraceLayout { prehistory: m + 1, n_steps: run.n_steps, tail: 1 };
    let values = record::<R>(params, run, layout, |trace| {
        let steps = trace.n_steps() as f64;
        let rho_a = host_mean(trace, a);
        let (mut with_a, mut without) = (KahanSum::new(), KahanSum::new());
        for e in trace.window_events() {
            let g = gamma.value(e.s.to_f64());
            let (w, av) = match direction {
                MixingDirection::Forward => {
                    let orb = EventOrbit::new(&trace.map, e, n + m, 0);
                    (orb.slice(b.value(orb.z[m]) * g / orb.lambda_plus(m)), a.value(orb.z[n + m]))
                }
                MixingDirection::Backward => {
                    let orb = EventOrbit::new(&trace.map, e, n.max(1), STABLE_DEPTH);
                    let Some(past) = EventPast::new(trace, e, &orb, m) else { continue };
                    (orb.slice(b.value(past.y[m]) * g * past.mu[m]), a.value(orb.z[n]))
                }
            };
            with_a.add(w * av);
            without.add(w);
        }
        with_a.value() / steps - rho_a * without.value() / steps
    })?;
    Ok(ScalarEstimate::from_runs(&values))
}
