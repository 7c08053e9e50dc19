//! Command-line flags. Every flag overrides the matching config-file entry.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Command;
use crate::config::{ConfigError, ExperimentConfig, Precision};

#[derive(Parser, Debug)]
#[command(name = "lozi-lab", version, about = "Segment-tracking estimators for the Lozi map's SRB measure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
pub enum Sub {
    /// Cone invariance, absorbing set, cylinders, transversality, pressure.
    Verify,
    /// Histogram of the slice measure on a vertical line.
    SliceHist,
    /// Conditional mixing of the slice measure on x = 0.
    Mixing,
    /// Susceptibility coefficients and their decomposition.
    Susceptibility,
    /// True against linear response along b -> b(1 + eps).
    Response,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Command {
        match s {
            Sub::Verify => Command::Verify,
            Sub::SliceHist => Command::SliceHist,
            Sub::Mixing => Command::Mixing,
            Sub::Susceptibility => Command::Susceptibility,
            Sub::Response => Command::Response,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// TOML experiment file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub burn_in: Option<usize>,
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core, 1 is sequential.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub precision: Option<Precision>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Histogram bin width.
    #[arg(long, global = true)]
    pub bin: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_line: Option<f64>,
    /// Also write the slice-mass sweep over vertical lines.
    #[arg(long, global = true)]
    pub disintegration: bool,
    /// Also write the crossing events of run 0.
    #[arg(long, global = true)]
    pub events: bool,
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true)]
    pub m_trunc: Option<usize>,
    /// Comma-separated perturbation sizes.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub observable: Option<String>,
    #[arg(long, global = true)]
    pub field: Option<String>,
}

impl Overrides {
    /// Loads the config file (or defaults) and applies the flags.
    pub fn resolve(&self, cmd: Command) -> Result<ExperimentConfig, ConfigError> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Parse(format!("{}: {e}", p.display())))?;
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(a) = &self.a {
            c.params.a = a.as_str().into();
        }
        if let Some(b) = &self.b {
            c.params.b = b.as_str().into();
        }
        let r = &mut c.run;
        set(&mut r.steps, self.steps);
        set(&mut r.burn_in, self.burn_in);
        set(&mut r.runs, self.runs);
        set(&mut r.seed, self.seed);
        set(&mut r.workers, self.workers);
        set(&mut r.precision, self.precision);
        set(&mut r.out, self.out.clone());
        set(&mut c.slice.bin, self.bin);
        set(&mut c.slice.x_line, self.x_line);
        c.slice.disintegration |= self.disintegration;
        c.slice.events |= self.events;
        set(&mut c.susceptibility.m_trunc, self.m_trunc);
        set(&mut c.susceptibility.field, self.field.clone());
        set(&mut c.response.eps_grid, self.eps_grid.clone());
        match cmd {
            Command::Mixing => {
                set(&mut c.mixing.n_max, self.n_max);
                set(&mut c.mixing.observable, self.observable.clone());
            }
            Command::Response => {
                set(&mut c.susceptibility.n_max, self.n_max);
                set(&mut c.response.observable, self.observable.clone());
            }
            _ => {
                set(&mut c.susceptibility.n_max, self.n_max);
                set(&mut c.susceptibility.observable, self.observable.clone());
            }
        }
        Ok(c)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}
