//! True response of `ρ(A)` along `b -> b (1 + ε)` against the linear prediction.

use serde::Serialize;

use super::{LinearResponse, ResponseError};
use crate::extprec::{DDReal, Real};
use crate::lozi::LoziParams;
use crate::measures::{srb_average, RunConfig};
use crate::observables::Observable;
use crate::stats::{linear_fit, ScalarEstimate};

#[derive(Clone, Debug, Serialize)]
pub struct ResponsePoint {
    pub eps: f64,
    pub true_value: ScalarEstimate,
    /// `ρ(A) + ε Σκ`.
    pub linear: f64,
    /// `ρ^ε(A) - ρ(A) - ε Σκ`.
    pub deviation: f64,
    /// Combined standard error of the deviation.
    pub deviation_se: f64,
    /// `0.15 |ε|^{1 + d_s}`.
    pub envelope: f64,
}

impl ResponsePoint {
    /// Within the envelope plus `k` combined standard errors.
    pub fn within(&self, k: f64) -> bool {
        self.deviation.abs() <= self.envelope + k * self.deviation_se
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResponseCurve {
    pub base: ScalarEstimate,
    pub slope: LinearResponse,
    pub d_s: f64,
    pub points: Vec<ResponsePoint>,
}

impl ResponseCurve {
    /// Slope of the odd part `(dev(ε) - dev(-ε)) / 2` against `ε` over the
    /// symmetric pairs in the grid; near zero when the slope is right.
    pub fn odd_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.eps > 0.0)
            .filter_map(|p| self.points.iter().find(|q| q.eps == -p.eps).map(|q| (p.eps, 0.5 * (p.deviation - q.deviation))))
            .collect();
        linear_fit(&pts).0
    }
}

pub const ENVELOPE_SCALE: f64 = 0.15;

/// Runs `srb_average(A)` at `b (1 + ε)` for every `ε` in the grid and compares
/// with `ρ(A) + ε Σκ`. The family corresponds to the field `X(x, y) = (0, y)`.
pub fn true_response<R: Real>(params: &LoziParams, a: &Observable, eps_grid: &[f64], slope: &LinearResponse, d_s: f64, run: &RunConfig) -> Result<ResponseCurve, ResponseError> {
    let base = srb_average::<R>(params, a, run)?;
    let mut points = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let true_value = if eps == 0.0 {
            base.clone()
        } else {
            let e: DDReal = format!("{eps:e}").parse().unwrap_or(DDReal::from(eps));
            let p = params.scale_b(e).map_err(|source| ResponseError::InvalidParams { eps, source })?;
            srb_average::<R>(&p, a, run)?
        };
        let linear = base.mean + eps * slope.value;
        let deviation = if eps == 0.0 { 0.0 } else { true_value.mean - linear };
        let deviation_se = if eps == 0.0 { 0.0 } else { (true_value.std_err.powi(2) + base.std_err.powi(2) + (eps * slope.error()).powi(2)).sqrt() };
        points.push(ResponsePoint { eps, true_value, linear, deviation, deviation_se, envelope: ENVELOPE_SCALE * eps.abs().powf(1.0 + d_s) });
    }
    Ok(ResponseCurve { base, slope: *slope, d_s, points })
}
