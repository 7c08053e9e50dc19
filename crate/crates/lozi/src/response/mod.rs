//! Susceptibility coefficients, their decomposition into stable, field,
//! singular-line and backward parts, conditional mixing, and response curves.

mod curve;
mod estimators;
mod mixing;

pub use curve::{true_response, ResponseCurve, ResponsePoint};
pub use estimators::{analyse_run, RunKappas};
pub use mixing::{conditional_mixing, conditional_mixing_general, MixingDirection, MixingSeries};

use serde::{Deserialize, Serialize};

use crate::ensemble::map_runs;
use crate::extprec::Real;
use crate::lozi::{LoziParams, ParamError};
use crate::measures::RunConfig;
use crate::observables::{Observable, VectorField};
use crate::segments::trace::{record_trace, TraceLayout};
use crate::segments::TrackingError;
use crate::stats::{loglinear_fit, ScalarEstimate};

/// Index convention of the singular-line sum, recorded in output metadata.
pub const KAPPA_RHO_CONVENTION: &str = "sum over m=1..M of A(f^(n+m) s) (l^u X)(f^m s) (lambda_m^-1(s-) - lambda_m^-1(s+)), weight 1/|I|";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SusceptibilityConfig {
    pub n_max: usize,
    /// Truncation of the `m`-sums.
    pub m_trunc: usize,
    /// Forward steps used to converge stable directions.
    pub stable_depth: usize,
    /// Largest `n` for the direct (pushed-forward) coefficient.
    pub n_direct: usize,
    /// Largest `n` for the endpoint form of the singular-line term.
    pub n_rho_direct: usize,
}

impl Default for SusceptibilityConfig {
    fn default() -> Self {
        SusceptibilityConfig { n_max: 30, m_trunc: 40, stable_depth: 60, n_direct: 8, n_rho_direct: 10 }
    }
}

pub const N_DIRECT_MAX: usize = 8;

impl SusceptibilityConfig {
    pub fn layout(&self, n_steps: usize) -> TraceLayout {
        TraceLayout { prehistory: self.m_trunc + 1, n_steps, tail: self.n_max.max(self.n_direct) + self.stable_depth + 1 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResponseError {
    #[error("direct coefficient requested at n = {0}; the integrand grows like λ^n and n <= {1} is enforced")]
    DirectTooDeep(usize, usize),
    #[error("n = {0} exceeds the configured n_max = {1}")]
    BeyondRange(usize, usize),
    #[error("invalid perturbed parameters at eps = {eps}: {source}")]
    InvalidParams { eps: f64, source: ParamError },
    #[error(transparent)]
    Tracking(#[from] TrackingError),
}

/// `log |y_n| ≈ log C + n log ĉ` over a range of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricFit {
    pub rate: f64,
    pub prefactor: f64,
    pub r2: f64,
    pub n_lo: usize,
    pub n_hi: usize,
}

impl GeometricFit {
    pub fn fit(values: &[f64], n_lo: usize, n_hi: usize) -> GeometricFit {
        let hi = n_hi.min(values.len().saturating_sub(1));
        let pts: Vec<(f64, f64)> = (n_lo..=hi).map(|n| (n as f64, values[n])).collect();
        let (slope, icpt, r2) = loglinear_fit(&pts);
        GeometricFit { rate: slope.exp(), prefactor: icpt.exp(), r2, n_lo, n_hi: hi }
    }
}

fn per_n(runs: &[RunKappas], len: usize, f: impl Fn(&RunKappas, usize) -> f64) -> Vec<ScalarEstimate> {
    (0..len).map(|n| ScalarEstimate::from_runs(&runs.iter().map(|r| f(r, n)).collect::<Vec<_>>())).collect()
}

fn scalar(runs: &[RunKappas], f: impl Fn(&RunKappas) -> f64) -> ScalarEstimate {
    ScalarEstimate::from_runs(&runs.iter().map(f).collect::<Vec<_>>())
}

/// Ensemble estimates of all coefficients for `n = 0..=n_max`.
#[derive(Clone, Debug, Serialize)]
pub struct SusceptibilitySeries {
    pub config: SusceptibilityConfig,
    pub kappa_s: Vec<ScalarEstimate>,
    pub kappa_x: Vec<ScalarEstimate>,
    pub kappa_rho: Vec<ScalarEstimate>,
    pub kappa_l: Vec<ScalarEstimate>,
    /// Per-run sum of the four components.
    pub total: Vec<ScalarEstimate>,
    pub kappa_rho_direct: Vec<ScalarEstimate>,
    pub kappa_direct: Vec<ScalarEstimate>,
    pub kappa_x_inf: ScalarEstimate,
    pub kappa_rho_inf: ScalarEstimate,
    pub kappa_l_inf: ScalarEstimate,
    /// Per-run `κ^X_∞ + κ^ρ_∞ + κ^l_∞`.
    pub limit_sum: ScalarEstimate,
    pub rho_a: ScalarEstimate,
    pub rho_s: ScalarEstimate,
    /// Measured `λ = exp E log|λ_1|` and `μ = exp E log|μ_1|`.
    pub lambda: f64,
    pub mu: f64,
    /// Analytic bounds on the omitted `m > M` parts of the two `m`-sums.
    pub tail_bound_rho: f64,
    pub tail_bound_l: f64,
    pub events: u64,
    pub events_without_past: u64,
    pub inexact_skipped: u64,
    pub convention: &'static str,
    #[serde(skip)]
    pub runs: Vec<RunKappas>,
}

/// Which component a decay fit refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Component {
    Stable,
    Field,
    Singular,
    Backward,
}

impl SusceptibilitySeries {
    pub fn from_runs(config: SusceptibilityConfig, runs: Vec<RunKappas>) -> Self {
        let len = config.n_max + 1;
        let nr = runs.len().max(1) as f64;
        let lambda = (runs.iter().map(|r| r.log_lambda).sum::<f64>() / nr).exp();
        let mu = (runs.iter().map(|r| r.log_mu).sum::<f64>() / nr).exp();
        let sup = |f: fn(&RunKappas) -> f64| runs.iter().map(f).fold(0.0, f64::max);
        let (a_sup, lux, lsx) = (sup(|r| r.a_sup), sup(|r| r.lux_sup), sup(|r| r.lsx_sup));
        let m = config.m_trunc as f64;
        let rho_s = runs.iter().map(|r| r.rho_s).sum::<f64>() / nr;
        // Geometric tails of |A| |l^u X| 2 λ^{-m} and |A| |l^s X| γ μ^m, weighted by ρ_S(1).
        let tail_bound_rho = rho_s * a_sup * lux * 2.0 * lambda.powf(-(m + 1.0)) / (1.0 - 1.0 / lambda);
        let tail_bound_l = rho_s * a_sup * lsx * 2.0 * mu.powf(m + 1.0) / (1.0 - mu);
        SusceptibilitySeries {
            config,
            kappa_s: per_n(&runs, len, |r, n| r.kappa_s[n]),
            kappa_x: per_n(&runs, len, |r, n| r.kappa_x[n]),
            kappa_rho: per_n(&runs, len, |r, n| r.kappa_rho[n]),
            kappa_l: per_n(&runs, len, |r, n| r.kappa_l[n]),
            total: per_n(&runs, len, |r, n| r.kappa_s[n] + r.kappa_x[n] + r.kappa_rho[n] + r.kappa_l[n]),
            kappa_rho_direct: per_n(&runs, config.n_rho_direct + 1, |r, n| r.kappa_rho_direct[n]),
            kappa_direct: per_n(&runs, config.n_direct + 1, |r, n| r.kappa_direct[n]),
            kappa_x_inf: scalar(&runs, |r| r.kappa_x_inf),
            kappa_rho_inf: scalar(&runs, |r| r.kappa_rho_inf),
            kappa_l_inf: scalar(&runs, |r| r.kappa_l_inf),
            limit_sum: scalar(&runs, |r| r.kappa_x_inf + r.kappa_rho_inf + r.kappa_l_inf),
            rho_a: scalar(&runs, |r| r.rho_a),
            rho_s: scalar(&runs, |r| r.rho_s),
            lambda,
            mu,
            tail_bound_rho,
            tail_bound_l,
            events: runs.iter().map(|r| r.events).sum(),
            events_without_past: runs.iter().map(|r| r.events_without_past).sum(),
            inexact_skipped: runs.iter().map(|r| r.inexact_skipped).sum(),
            convention: KAPPA_RHO_CONVENTION,
            runs,
        }
    }

    pub fn tail_ok(&self, tol: f64) -> bool {
        self.tail_bound_rho <= tol && self.tail_bound_l <= tol
    }

    /// `κ^s_n` or `κ^c_n - κ^c_∞` per run.
    fn centred(&self, c: Component) -> Vec<ScalarEstimate> {
        let len = self.config.n_max + 1;
        match c {
            Component::Stable => self.kappa_s.clone(),
            Component::Field => per_n(&self.runs, len, |r, n| r.kappa_x[n] - r.kappa_x_inf),
            Component::Singular => per_n(&self.runs, len, |r, n| r.kappa_rho[n] - r.kappa_rho_inf),
            Component::Backward => per_n(&self.runs, len, |r, n| r.kappa_l[n] - r.kappa_l_inf),
        }
    }

    /// Distance of a component from its limit, per `n`.
    pub fn distance_to_limit(&self, c: Component) -> Vec<ScalarEstimate> {
        self.centred(c)
    }

    /// Geometric fit of `|κ^c_n - κ^c_∞|` over `[n_lo, n_hi]`.
    pub fn decay_fit(&self, c: Component, n_lo: usize, n_hi: usize) -> GeometricFit {
        let v: Vec<f64> = self.centred(c).iter().map(|e| e.mean).collect();
        GeometricFit::fit(&v, n_lo, n_hi)
    }

    /// Per-run sums `Σ_{n <= n_max} κ_n` with the limits subtracted from each
    /// component; the subtracted limits add up to zero.
    pub fn linear_response(&self, n_max: usize) -> LinearResponse {
        let n_max = n_max.min(self.config.n_max);
        let term = |r: &RunKappas, n: usize| r.kappa_s[n] + (r.kappa_x[n] - r.kappa_x_inf) + (r.kappa_rho[n] - r.kappa_rho_inf) + (r.kappa_l[n] - r.kappa_l_inf);
        let sums: Vec<f64> = self.runs.iter().map(|r| (0..=n_max).map(|n| term(r, n)).sum()).collect();
        let terms: Vec<f64> = per_n(&self.runs, n_max + 1, term).iter().map(|e| e.mean).collect();
        let fit = GeometricFit::fit(&terms, 2.min(n_max), n_max);
        let decaying = fit.rate.is_finite() && fit.rate < 1.0;
        let last = terms[n_max].abs().max(fit.prefactor * fit.rate.powi(n_max as i32));
        let tail = if decaying { last * fit.rate / (1.0 - fit.rate) } else { f64::INFINITY };
        let est = ScalarEstimate::from_runs(&sums);
        LinearResponse { value: est.mean, std_err: est.std_err, tail, fit, decaying, runs: est.runs }
    }
}

/// `Σ κ_n` with its error budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearResponse {
    pub value: f64,
    pub std_err: f64,
    /// Bound on the omitted `n > N_max` terms from the fitted rate.
    pub tail: f64,
    pub fit: GeometricFit,
    /// False when the fitted rate is not below one.
    pub decaying: bool,
    pub runs: usize,
}

impl LinearResponse {
    /// Standard error and tail combined.
    pub fn error(&self) -> f64 {
        self.std_err + self.tail
    }
}

/// Records one trace per run and evaluates every coefficient on it.
pub fn susceptibility<R: Real>(params: &LoziParams, a: &Observable, x: &VectorField, cfg: &SusceptibilityConfig, run: &RunConfig) -> Result<SusceptibilitySeries, ResponseError> {
    if cfg.n_direct > N_DIRECT_MAX {
        return Err(ResponseError::DirectTooDeep(cfg.n_direct, N_DIRECT_MAX));
    }
    let layout = cfg.layout(run.n_steps);
    let runs = map_runs(run.n_runs, run.seed, run.workers, |_, rng| {
        let trace = record_trace::<R, _>(params, &run.tracker, layout, rng)?;
        Ok::<_, TrackingError>(analyse_run(&trace, a, x, cfg))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(SusceptibilitySeries::from_runs(*cfg, runs))
}

fn single<R: Real>(params: &LoziParams, a: &Observable, x: &VectorField, n: usize, m_trunc: usize, run: &RunConfig) -> Result<SusceptibilitySeries, ResponseError> {
    let cfg = SusceptibilityConfig { n_max: n, m_trunc, n_direct: n.min(N_DIRECT_MAX), n_rho_direct: n, ..Default::default() };
    susceptibility::<R>(params, a, x, &cfg, run)
}

/// `∫ ∇(A∘f^n) . X dρ` by pushing `X` forward; `n <= 8`.
pub fn kappa_total_direct<R: Real>(params: &LoziParams, a: &Observable, x: &VectorField, n: usize, run: &RunConfig) -> Result<ScalarEstimate, ResponseError> {
    if n > N_DIRECT_MAX {
        return Err(ResponseError::DirectTooDeep(n, N_DIRECT_MAX));
    }
    Ok(single::<R>(params, a, x, n, 0, run)?.kappa_direct[n].clone())
}

pub fn kappa_s<R: Real>(params: &LoziParams, a: &Observable, x: &VectorField, n: usize, run: &RunConfig) -> Result<ScalarEstimate, ResponseError> {
    Ok(single::<R>(params, a, x, n, 0, run)?.kappa_s[n].clone())
}

/// `κ^X_n` and `κ^X_∞`.
pub fn kappa_x<R: Real>(params: &LoziParams, a: &Observable, x: &VectorField, n: usize, run: &RunConfig) -> Result<(ScalarEstimate, ScalarEstimate), ResponseError> {
    let s = single::<R>(params, a, x, n, 0, run)?;
    Ok((s.kappa_x[n].clone(), s.kappa_x_inf))
}

/// `κ^ρ_n` (sum form) and `κ^ρ_∞`.
pub fn kappa_rho<R: Real>(params: &LoziParams, a: &Observable, x: &VectorField, n: usize, m_trunc: usize, run: &RunConfig) -> Result<(ScalarEstimate, ScalarEstimate), ResponseError> {
    let s = single::<R>(params, a, x, n, m_trunc, run)?;
    Ok((s.kappa_rho[n].clone(), s.kappa_rho_inf))
}

/// `κ^ρ_n` from manifold endpoints.
pub fn kappa_rho_direct<R: Real>(params: &LoziParams, a: &Observable, x: &VectorField, n: usize, run: &RunConfig) -> Result<ScalarEstimate, ResponseError> {
    Ok(single::<R>(params, a, x, n, 0, run)?.kappa_rho_direct[n].clone())
}

/// `κ^l_n` and `κ^l_∞`.
pub fn kappa_l<R: Real>(params: &LoziParams, a: &Observable, x: &VectorField, n: usize, m_trunc: usize, run: &RunConfig) -> Result<(ScalarEstimate, ScalarEstimate), ResponseError> {
    let s = single::<R>(params, a, x, n, m_trunc, run)?;
    Ok((s.kappa_l[n].clone(), s.kappa_l_inf))
}

/// `Σ_{n <= n_max} κ_n` with a fitted tail.
pub fn linear_response<R: Real>(params: &LoziParams, a: &Observable, x: &VectorField, cfg: &SusceptibilityConfig, run: &RunConfig) -> Result<LinearResponse, ResponseError> {
    Ok(susceptibility::<R>(params, a, x, cfg, run)?.linear_response(cfg.n_max))
}
