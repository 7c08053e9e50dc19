//! Experiment configuration: a TOML file with command-line overrides.

use std::path::PathBuf;

use lozi::ensemble::Workers;
use lozi::measures::RunConfig;
use lozi::observables::{Observable, VectorField};
use lozi::response::SusceptibilityConfig;
use lozi::segments::TrackerConfig;
use lozi::{DDReal, LoziParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("{field}: {msg}")]
    Invalid { field: &'static str, msg: String },
}

fn invalid(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, msg: msg.into() }
}

/// A parameter written either as a TOML number or as a decimal string. Numbers
/// are read through their shortest decimal form, so `0.35` means the decimal
/// 0.35 rather than the nearest double.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Decimal {
    Number(f64),
    Text(String),
}

impl Decimal {
    pub fn text(&self) -> String {
        match self {
            Decimal::Number(x) => format!("{x}"),
            Decimal::Text(s) => s.trim().to_string(),
        }
    }
}

impl From<&str> for Decimal {
    fn from(s: &str) -> Self {
        Decimal::Text(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub a: Decimal,
    pub b: Decimal,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection { a: "1.8".into(), b: "0.35".into() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Dd,
    Native,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub steps: usize,
    pub burn_in: usize,
    pub runs: usize,
    pub seed: u64,
    /// `0` uses every core, `1` runs sequentially.
    pub workers: usize,
    pub precision: Precision,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { steps: 100_000, burn_in: 1000, runs: 10, seed: 0, workers: 0, precision: Precision::Dd, out: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceSection {
    pub x_line: f64,
    pub bin: f64,
    pub bin_origin: f64,
    /// Also sweep vertical lines and write `disintegration.csv`.
    pub disintegration: bool,
    pub spacing: f64,
    /// Write the crossing events of run 0 to `events.csv`.
    pub events: bool,
}

impl Default for SliceSection {
    fn default() -> Self {
        SliceSection { x_line: 0.0, bin: 0.0025, bin_origin: 0.0, disintegration: false, spacing: 0.01, events: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingSection {
    pub n_max: usize,
    pub observable: String,
}

impl Default for MixingSection {
    fn default() -> Self {
        MixingSection { n_max: 20, observable: "x".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SusceptibilitySection {
    pub n_max: usize,
    pub m_trunc: usize,
    pub depth: usize,
    pub n_direct: usize,
    pub n_rho_direct: usize,
    pub observable: String,
    pub field: String,
}

impl Default for SusceptibilitySection {
    fn default() -> Self {
        let d = SusceptibilityConfig::default();
        SusceptibilitySection {
            n_max: d.n_max,
            m_trunc: d.m_trunc,
            depth: d.stable_depth,
            n_direct: d.n_direct,
            n_rho_direct: d.n_rho_direct,
            observable: "y".into(),
            field: "b-scale".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponseSection {
    pub eps_grid: Vec<f64>,
    pub observable: String,
    /// Steps per run for the perturbed averages; `0` reuses `run.steps`.
    pub steps: usize,
    /// Runs for the perturbed averages; `0` reuses `run.runs`.
    pub runs: usize,
}

impl Default for ResponseSection {
    fn default() -> Self {
        ResponseSection { eps_grid: vec![-0.05, -0.02, -0.01, 0.0, 0.01, 0.02, 0.05], observable: "y".into(), steps: 0, runs: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub samples: usize,
    pub cylinder_len: usize,
    pub lines: usize,
    pub transversality: usize,
    pub pressure_len: usize,
    /// Host points written to `attractor.csv`.
    pub attractor_points: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { samples: 100_000, cylinder_len: 12, lines: 3, transversality: 12, pressure_len: 12, attractor_points: 20_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsSection,
    pub run: RunSection,
    pub slice: SliceSection,
    pub mixing: MixingSection,
    pub susceptibility: SusceptibilitySection,
    pub response: ResponseSection,
    pub verify: VerifySection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Canonical TOML form; running with this file reproduces the experiment.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn lozi_params(&self) -> Result<LoziParams, ConfigError> {
        LoziParams::parse(&self.params.a.text(), &self.params.b.text()).map_err(ConfigError::Params)
    }

    pub fn b_dd(&self) -> Result<DDReal, ConfigError> {
        self.params.b.text().parse().map_err(|e| ConfigError::Params(format!("{e}")))
    }

    pub fn workers(&self) -> Workers {
        match self.run.workers {
            0 => Workers::Auto,
            n => Workers::from_count(n),
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            n_steps: self.run.steps,
            n_runs: self.run.runs,
            seed: self.run.seed,
            tracker: TrackerConfig { burn_in: self.run.burn_in, ..Default::default() },
            workers: self.workers(),
        }
    }

    pub fn response_run_config(&self) -> RunConfig {
        let mut r = self.run_config();
        if self.response.steps > 0 {
            r.n_steps = self.response.steps;
        }
        if self.response.runs > 0 {
            r.n_runs = self.response.runs;
        }
        r
    }

    /// The direct cross-check ranges are cut at `n_max`.
    pub fn susceptibility_config(&self) -> SusceptibilityConfig {
        let s = &self.susceptibility;
        SusceptibilityConfig {
            n_max: s.n_max,
            m_trunc: s.m_trunc,
            stable_depth: s.depth,
            n_direct: s.n_direct.min(s.n_max),
            n_rho_direct: s.n_rho_direct.min(s.n_max),
        }
    }

    pub fn observable(name: &str) -> Result<Observable, ConfigError> {
        Observable::by_name(name).ok_or_else(|| invalid("observable", format!("unknown observable {name:?}; known: {}", Observable::NAMES.join(", "))))
    }

    pub fn field(&self) -> Result<VectorField, ConfigError> {
        let b = self.lozi_params()?.b().to_f64();
        let name = &self.susceptibility.field;
        VectorField::by_name_for(name, b).ok_or_else(|| invalid("field", format!("unknown vector field {name:?}; known: {}, conjugacy", VectorField::NAMES.join(", "))))
    }

    /// Checks every value against the preconditions of the module it feeds.
    pub fn validate(&self) -> Result<LoziParams, ConfigError> {
        let p = self.lozi_params()?;
        let r = &self.run;
        if r.steps == 0 {
            return Err(invalid("run.steps", "must be positive"));
        }
        if r.runs == 0 {
            return Err(invalid("run.runs", "must be positive"));
        }
        let s = &self.slice;
        if !(s.bin.is_finite() && s.bin > 0.0) {
            return Err(invalid("slice.bin", "bin width must be positive"));
        }
        if !(s.spacing.is_finite() && s.spacing > 0.0) {
            return Err(invalid("slice.spacing", "grid spacing must be positive"));
        }
        if !s.x_line.is_finite() || !s.bin_origin.is_finite() {
            return Err(invalid("slice.x_line", "must be finite"));
        }
        Self::observable(&self.mixing.observable)?;
        Self::observable(&self.susceptibility.observable)?;
        Self::observable(&self.response.observable)?;
        self.field()?;
        let c = &self.susceptibility;
        if c.n_direct > lozi::response::N_DIRECT_MAX {
            return Err(invalid("susceptibility.n_direct", format!("must be at most {} (the pushed-forward integrand grows like λ^n)", lozi::response::N_DIRECT_MAX)));
        }
        if c.depth == 0 {
            return Err(invalid("susceptibility.depth", "must be positive"));
        }
        for &e in &self.response.eps_grid {
            if !e.is_finite() || e <= -1.0 {
                return Err(invalid("response.eps_grid", format!("ε = {e} must be finite and > -1")));
            }
            p.scale_b(format!("{e}").parse::<DDReal>().unwrap_or(DDReal::from(e))).map_err(|err| invalid("response.eps_grid", format!("ε = {e}: {err}")))?;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_strings_both_parse() {
        let c = ExperimentConfig::from_toml("[params]\na = 1.7\nb = \"0.5\"\n").unwrap();
        assert_eq!(c.params.a.text(), "1.7");
        assert_eq!(c.params.b.text(), "0.5");
        assert!(c.validate().is_ok());
    }

    #[test]
    fn canonical_toml_round_trips() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::from_toml("[run]\nstep = 3\n"), Err(ConfigError::Parse(_))));
    }
}
