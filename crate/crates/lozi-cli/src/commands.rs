//! Subcommand pipelines. Each writes its CSV tables plus a flat JSON sidecar
//! into the output directory.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use lozi::ensemble::run_rng;
use lozi::lozi::{absorbing_set, verify_hyperbolicity};
use lozi::measures::{disintegration_check, lyapunov, slice_measure, LyapunovReport};
use lozi::observables::VectorField;
use lozi::output::{content_hash, estimate_cells, events_table, fmt_f64, write_atomic, CsvTable, Metadata};
use lozi::response::{conditional_mixing, susceptibility, true_response, Component};
use lozi::segments::cylinders::{topo_pressure_check, verify_cylinder_convexity};
use lozi::segments::run_tracking;
use lozi::segments::verify::verify_transversality;
use lozi::stats::ScalarEstimate;
use lozi::{DDReal, LoziParams, Real, Side, Vec2};
use serde::Serialize;

use crate::config::{ExperimentConfig, Precision};

pub const SEED_SCHEME: &str = "run i draws from ChaCha8 seeded with seed_from_u64(seed) on stream i";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    SliceHist,
    Mixing,
    Susceptibility,
    Response,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::SliceHist => "slice-hist",
            Command::Mixing => "mixing",
            Command::Susceptibility => "susceptibility",
            Command::Response => "response",
        }
    }
}

/// Files written and whether every check passed.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub ok: bool,
    pub violations: Vec<String>,
}

macro_rules! dispatch {
    ($prec:expr, $f:ident($($arg:expr),*)) => {
        match $prec {
            Precision::Dd => $f::<DDReal>($($arg),*),
            Precision::Native => $f::<f64>($($arg),*),
        }
    };
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    let params = cfg.validate()?;
    let started = Instant::now();
    let mut out = Writer::new(cmd, cfg, started);
    let ok = match cmd {
        Command::Verify => dispatch!(cfg.run.precision, verify(cfg, &params, &mut out))?,
        Command::SliceHist => dispatch!(cfg.run.precision, slice_hist(cfg, &params, &mut out))?,
        Command::Mixing => dispatch!(cfg.run.precision, mixing(cfg, &params, &mut out))?,
        Command::Susceptibility => dispatch!(cfg.run.precision, suscept(cfg, &params, &mut out))?,
        Command::Response => dispatch!(cfg.run.precision, response(cfg, &params, &mut out))?,
    };
    out.finish(ok)
}

struct Writer {
    dir: PathBuf,
    meta: Metadata,
    /// Tables are held until the run finishes so a failed run writes nothing.
    pending: Vec<(PathBuf, Vec<u8>)>,
    violations: Vec<String>,
    started: Instant,
    sidecar: String,
}

impl Writer {
    fn new(cmd: Command, cfg: &ExperimentConfig, started: Instant) -> Self {
        let toml = cfg.to_toml();
        let mut meta = Metadata::new();
        meta.insert("command", cmd.name());
        meta.insert("lozi_version", env!("CARGO_PKG_VERSION"));
        meta.insert("config_toml", &toml);
        meta.insert("input_hash", &content_hash(toml.as_bytes()));
        meta.insert("config", cfg);
        meta.insert("seeds.master", &cfg.run.seed);
        meta.insert("seeds.runs", &cfg.run.runs);
        meta.insert("seeds.scheme", SEED_SCHEME);
        let sidecar = format!("{}.json", cmd.name().replace('-', "_"));
        Writer { dir: cfg.run.out.clone(), meta, pending: Vec::new(), violations: Vec::new(), started, sidecar }
    }

    fn table(&mut self, name: &str, t: &CsvTable) -> Result<()> {
        let bytes = t.to_bytes();
        self.meta.insert(&format!("output_hash.{name}"), &content_hash(&bytes));
        self.meta.insert(&format!("output_rows.{name}"), &t.len());
        self.pending.push((self.dir.join(name), bytes));
        Ok(())
    }

    fn put<T: Serialize + ?Sized>(&mut self, key: &str, v: &T) {
        self.meta.insert(key, v);
    }

    fn lyapunov(&mut self, rep: &LyapunovReport) {
        self.put("lambda", &rep.lambda1.exp());
        self.put("mu", &rep.lambda2.exp());
        self.put("lyapunov", rep);
    }

    fn violation(&mut self, v: String) {
        self.violations.push(v);
    }

    fn finish(mut self, ok: bool) -> Result<Outcome> {
        let ok = ok && self.violations.is_empty();
        self.meta.insert("ok", &ok);
        self.meta.insert("violations", &self.violations);
        self.meta.insert("wall_clock_s", &self.started.elapsed().as_secs_f64());
        let mut files = Vec::with_capacity(self.pending.len() + 1);
        for (path, bytes) in &self.pending {
            write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))?;
            files.push(path.clone());
        }
        let path = self.dir.join(&self.sidecar);
        self.meta.write(&path).with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
        Ok(Outcome { files, ok, violations: self.violations })
    }
}

fn verify<R: Real>(cfg: &ExperimentConfig, p: &LoziParams, out: &mut Writer) -> Result<bool> {
    let v = &cfg.verify;
    let seed = cfg.run.seed;

    let m = absorbing_set(p)?;
    let summary = m.summary();
    if !(summary.margin > 0.0) {
        out.violation(format!("absorbing set invariance margin {} is not positive", summary.margin));
    }
    out.put("absorbing", &summary);

    let hyp = verify_hyperbolicity(p, v.samples, seed)?;
    if !hyp.cone_invariance_ok {
        out.violation(format!("cone invariance failed at {} of {} samples", hyp.failures.len(), hyp.n_samples));
    }
    if !(hyp.lambda_min > 1.0 && hyp.mu_max < 1.0) {
        out.violation(format!("expansion/contraction bounds failed: lambda_min {}, mu_max {}", hyp.lambda_min, hyp.mu_max));
    }
    out.put("hyperbolicity.n_samples", &hyp.n_samples);
    out.put("hyperbolicity.cone_invariance_ok", &hyp.cone_invariance_ok);
    out.put("hyperbolicity.lambda_min", &hyp.lambda_min);
    out.put("hyperbolicity.lambda_max", &hyp.lambda_max);
    out.put("hyperbolicity.mu_max", &hyp.mu_max);
    out.put("hyperbolicity.area_identity_error", &hyp.area_identity_error);
    out.put("hyperbolicity.failures", &hyp.failures.len());

    let cyl = verify_cylinder_convexity(p, v.cylinder_len, v.lines, seed)?;
    for s in cyl.violations.iter().take(8) {
        out.violation(s.clone());
    }
    out.put("cylinders.max_len", &cyl.max_len);
    out.put("cylinders.lines_tested", &cyl.lines_tested);
    out.put("cylinders.nonempty", &cyl.per_length.iter().map(|s| s.nonempty).collect::<Vec<_>>());
    out.put("cylinders.violations", &cyl.violations.len());

    let tr = verify_transversality(p, v.transversality)?;
    if !tr.ok() {
        let fails: usize = tr.steps.iter().map(|s| s.cone_failures).sum();
        out.violation(format!("transversality: {fails} pieces outside the unstable cone (truncated: {})", tr.truncated));
    }
    out.put("transversality.n_max", &v.transversality);
    out.put("transversality.pieces", &tr.steps.iter().map(|s| s.pieces).collect::<Vec<_>>());
    out.put("transversality.min_horizontal", &tr.steps.iter().map(|s| s.min_horizontal).fold(f64::INFINITY, f64::min));

    let ratio = hyp.mu_max / hyp.lambda_min;
    let pr = topo_pressure_check(p, v.pressure_len, ratio)?;
    if !(pr.zeta_hat < 1.0) {
        out.violation(format!("topological pressure rate {} is not below 1", pr.zeta_hat));
    }
    out.put("pressure", &pr);

    let mut rng = run_rng(seed, 0);
    let mut run_cfg = cfg.run_config();
    run_cfg.n_steps = v.attractor_points;
    let run = run_tracking::<R, _>(p, v.attractor_points, &run_cfg.tracker, &mut rng)?;
    let mut att = CsvTable::new(&["x", "y"]);
    for h in &run.hosts {
        att.push(vec![h.x.to_text(), h.y.to_text()]);
    }
    out.table("attractor.csv", &att)?;
    out.table("cones.csv", &cone_table(p))?;
    Ok(true)
}

/// Unit boundary directions of the unstable cone and of the stable cone on
/// each side, with the cone constant.
pub fn cone_table(p: &LoziParams) -> CsvTable {
    let f = p.map::<DDReal>();
    let c = f.cones().c;
    let mut t = CsvTable::new(&["cone", "side", "dx", "dy", "c"]);
    let mut row = |cone: &str, side: &str, v: Vec2<DDReal>| {
        let u = v.normalized();
        t.push(vec![cone.into(), side.into(), u.x.to_text(), u.y.to_text(), c.to_text()]);
    };
    for eta in [DDReal::ONE, -DDReal::ONE] {
        row("unstable", "both", Vec2::new(c, eta));
    }
    for side in [Side::Minus, Side::Plus] {
        for xi in [DDReal::ONE, -DDReal::ONE] {
            row("stable", &side.symbol().to_string(), f.pull(side, Vec2::new(xi, c)));
        }
    }
    t
}

fn slice_hist<R: Real>(cfg: &ExperimentConfig, p: &LoziParams, out: &mut Writer) -> Result<bool> {
    let s = &cfg.slice;
    let run = cfg.run_config();
    let h = slice_measure::<R>(p, s.x_line, s.bin, s.bin_origin, &run)?;
    let mut t = CsvTable::new(&["bin_center", "mass"]);
    for (i, &m) in h.masses.iter().enumerate() {
        t.push_f64(&[h.bin_center(i), m]);
    }
    out.table("slice_hist.csv", &t)?;
    out.put("slice.total_mass", &h.total);
    out.put("slice.total_binned", &h.total_mass);
    out.put("slice.support", &h.support());
    out.put("slice.n_events", &h.n_events);
    out.put("slice.endpoint_hits", &h.endpoint_hits);
    if s.disintegration {
        let [x0, x1] = absorbing_set(p)?.summary().x_range;
        let lo = (x0 / s.spacing).floor() * s.spacing;
        let hi = (x1 / s.spacing).ceil() * s.spacing;
        let rep = disintegration_check::<R>(p, lo, hi, s.spacing, &run)?;
        let mut d = CsvTable::new(&["x_line", "total_mass", "std_error"]);
        for pt in &rep.points {
            d.push_f64(&[pt.x_line, pt.total_mass.mean, pt.total_mass.std_err]);
        }
        out.table("disintegration.csv", &d)?;
        out.put("disintegration.integral", &rep.integral);
        out.put("disintegration.endpoint_hits", &rep.endpoint_hits);
    }
    if s.events {
        let mut rng = run_rng(run.seed, 0);
        let tr = run_tracking::<R, _>(p, run.n_steps, &run.tracker, &mut rng)?;
        out.table("events.csv", &events_table(&tr.events))?;
    }
    out.lyapunov(&lyapunov::<R>(p, &run)?);
    Ok(true)
}

fn mixing<R: Real>(cfg: &ExperimentConfig, p: &LoziParams, out: &mut Writer) -> Result<bool> {
    let run = cfg.run_config();
    let a = ExperimentConfig::observable(&cfg.mixing.observable)?;
    let m = conditional_mixing::<R>(p, &a, cfg.mixing.n_max, &run)?;
    let mut t = CsvTable::new(&["n", "C_n", "SE"]);
    for (n, c) in m.c.iter().enumerate() {
        t.push(vec![n.to_string(), fmt_f64(c.mean), fmt_f64(c.std_err)]);
    }
    out.table("mixing.csv", &t)?;
    out.put("mixing.observable", a.name());
    out.put("mixing.fit", &m.fit);
    out.put("mixing.ratio_at_n_max", &m.ratio(m.n_max()));
    out.lyapunov(&lyapunov::<R>(p, &run)?);
    Ok(true)
}

fn push_estimates(row: &mut Vec<String>, es: &[Option<&ScalarEstimate>]) {
    for e in es {
        match e {
            Some(e) => row.extend(estimate_cells(e)),
            None => row.extend([String::new(), String::new()]),
        }
    }
}

fn suscept<R: Real>(cfg: &ExperimentConfig, p: &LoziParams, out: &mut Writer) -> Result<bool> {
    let a = ExperimentConfig::observable(&cfg.susceptibility.observable)?;
    let x = cfg.field()?;
    series_tables::<R>(cfg, p, &a, &x, out)?;
    Ok(true)
}

/// Runs the susceptibility ensemble and writes its two tables; returns the
/// linear response `Σκ_n`.
fn series_tables<R: Real>(cfg: &ExperimentConfig, p: &LoziParams, a: &lozi::observables::Observable, x: &VectorField, out: &mut Writer) -> Result<lozi::response::LinearResponse> {
    let run = cfg.run_config();
    let sc = cfg.susceptibility_config();
    let s = susceptibility::<R>(p, a, x, &sc, &run)?;
    let mut t = CsvTable::new(&["n", "kappa_s", "kappa_s_se", "kappa_x", "kappa_x_se", "kappa_rho", "kappa_rho_se", "kappa_l", "kappa_l_se", "total", "total_se"]);
    for n in 0..=sc.n_max {
        let mut row = vec![n.to_string()];
        push_estimates(&mut row, &[Some(&s.kappa_s[n]), Some(&s.kappa_x[n]), Some(&s.kappa_rho[n]), Some(&s.kappa_l[n]), Some(&s.total[n])]);
        t.push(row);
    }
    out.table("susceptibility.csv", &t)?;
    let mut c = CsvTable::new(&["n", "direct", "direct_se", "component_sum", "component_sum_se", "rho_sum", "rho_sum_se", "rho_endpoint", "rho_endpoint_se"]);
    for n in 0..=sc.n_direct.max(sc.n_rho_direct) {
        let mut row = vec![n.to_string()];
        push_estimates(&mut row, &[s.kappa_direct.get(n), Some(&s.total[n]), Some(&s.kappa_rho[n]), s.kappa_rho_direct.get(n)]);
        c.push(row);
    }
    out.table("susceptibility_checks.csv", &c)?;
    let lr = s.linear_response(sc.n_max);
    out.put("observable", a.name());
    out.put("field", x.name());
    out.put("kappa_x_inf", &s.kappa_x_inf);
    out.put("kappa_rho_inf", &s.kappa_rho_inf);
    out.put("kappa_l_inf", &s.kappa_l_inf);
    out.put("limit_sum", &s.limit_sum);
    out.put("rho_a", &s.rho_a);
    out.put("rho_s", &s.rho_s);
    out.put("lambda", &s.lambda);
    out.put("mu", &s.mu);
    out.put("tail_bound_rho", &s.tail_bound_rho);
    out.put("tail_bound_l", &s.tail_bound_l);
    out.put("events", &s.events);
    out.put("events_without_past", &s.events_without_past);
    out.put("inexact_skipped", &s.inexact_skipped);
    out.put("convention", s.convention);
    for (name, comp) in [("stable", Component::Stable), ("field", Component::Field), ("singular", Component::Singular), ("backward", Component::Backward)] {
        out.put(&format!("decay_fit.{name}"), &s.decay_fit(comp, 1, sc.n_max));
    }
    out.put("linear_response", &lr);
    Ok(lr)
}

fn response<R: Real>(cfg: &ExperimentConfig, p: &LoziParams, out: &mut Writer) -> Result<bool> {
    let a = ExperimentConfig::observable(&cfg.response.observable)?;
    // The family b -> b(1 + ε) is generated by (0, y).
    let x = VectorField::b_scale();
    let lr = series_tables::<R>(cfg, p, &a, &x, out)?;
    let lyap = lyapunov::<R>(p, &cfg.run_config())?;
    let curve = true_response::<R>(p, &a, &cfg.response.eps_grid, &lr, lyap.d_s, &cfg.response_run_config())?;
    let mut t = CsvTable::new(&["eps", "true", "true_se", "linear", "deviation", "deviation_se", "envelope"]);
    for pt in &curve.points {
        t.push_f64(&[pt.eps, pt.true_value.mean, pt.true_value.std_err, pt.linear, pt.deviation, pt.deviation_se, pt.envelope]);
    }
    out.table("response.csv", &t)?;
    out.put("lyapunov", &lyap);
    out.put("d_s", &lyap.d_s);
    out.put("base", &curve.base);
    out.put("odd_slope", &curve.odd_slope());
    for pt in &curve.points {
        if !pt.within(3.0) {
            out.put(&format!("outside_envelope.{}", pt.eps), &pt.deviation);
        }
    }
    Ok(true)
}
