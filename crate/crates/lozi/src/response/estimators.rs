//! Per-run estimators evaluated on a recorded trace.
//!
//! Conventions. `v^u` is the unit manifold direction with positive first
//! component; `s_-` / `s_+` denote the crossing point seen from `x < 0` /
//! `x > 0`. For a frame `(v^u, v^s)` with `det = v^u x v^s` the dual covectors
//! are `l^u = (v^s_y, -v^s_x) / det` and `l^s = (-v^u_y, v^u_x) / det`.
//! Averages over manifolds use `(1/N) sum_k h(I_k) / |I_k|` and the slice
//! measure on `x = 0` is `(1/N) sum_events h(s) / (|I| v^u.e1)`.

use crate::extprec::Real;
use crate::geometry::{Point2, Side, Vec2};
use crate::lozi::LoziMap;
use crate::observables::{Observable, VectorField};
use crate::segments::trace::{dot, stable_sweep, HostFrame, RunTrace, TraceEvent};
use crate::stats::KahanSum;

use super::SusceptibilityConfig;

type M2 = [[f64; 2]; 2];

#[inline]
fn mat_vec(m: &M2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[inline]
fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

#[inline]
fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn side_of<R: Real>(p: Point2<R>) -> Side {
    Side::of(p.x).unwrap_or(Side::Plus)
}

fn lu_dot(vu: [f64; 2], vs: [f64; 2], x: [f64; 2]) -> f64 {
    HostFrame::new(vu, vs).lu.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Forward data attached to one crossing event.
pub(crate) struct EventOrbit {
    /// `z[m] = f^m(s)` in `f64`.
    pub z: Vec<[f64; 2]>,
    /// `v^s(z_m)` for `m >= 1`.
    pub vs: Vec<[f64; 2]>,
    pub vs_minus: [f64; 2],
    pub vs_plus: [f64; 2],
    /// `w^±_m = Df^m v^u` from either side, `m >= 1` (`w[0] = v^u`).
    pub w_minus: Vec<[f64; 2]>,
    pub w_plus: Vec<[f64; 2]>,
    pub dir: [f64; 2],
    pub inv_len: f64,
    pub vu_e1: f64,
}

impl EventOrbit {
    pub fn new<R: Real>(map: &LoziMap<R>, e: &TraceEvent<R>, len: usize, depth: usize) -> EventOrbit {
        let total = len + depth;
        let mut pts = Vec::with_capacity(total + 1);
        pts.push(e.s);
        for m in 1..=total {
            pts.push(map.apply(pts[m - 1]));
        }
        let sides: Vec<Side> = pts[1..].iter().map(|p| side_of(*p)).collect();
        let (vs_r, _) = stable_sweep(map, &sides);
        let vs1 = vs_r[0];
        let vs_minus = map.pull(Side::Minus, vs1).normalized().to_f64();
        let vs_plus = map.pull(Side::Plus, vs1).normalized().to_f64();
        let mut vs = vec![[f64::NAN; 2]; len + 1];
        for m in 1..=len {
            vs[m] = vs_r[m - 1].to_f64();
        }
        let j = |s: Side| -> M2 { map.jacobian(s).to_f64() };
        let (jm, jp) = (j(Side::Minus), j(Side::Plus));
        let dir = e.direction.to_f64();
        let mut w_minus = vec![dir; len + 1];
        let mut w_plus = vec![dir; len + 1];
        if len >= 1 {
            w_minus[1] = mat_vec(&jm, dir);
            w_plus[1] = mat_vec(&jp, dir);
        }
        for m in 1..len {
            let jz = if sides[m - 1] == Side::Plus { &jp } else { &jm };
            w_minus[m + 1] = mat_vec(jz, w_minus[m]);
            w_plus[m + 1] = mat_vec(jz, w_plus[m]);
        }
        let inv_len = 1.0 / e.length.to_f64();
        EventOrbit { z: pts[..=len].iter().map(|p| p.to_f64()).collect(), vs, vs_minus, vs_plus, w_minus, w_plus, dir, inv_len, vu_e1: dir[0] }
    }

    /// Slice-measure weight `1 / (|I| v^u.e1)` applied to `h`.
    #[inline]
    pub fn slice(&self, h: f64) -> f64 {
        self.inv_len * (h / self.vu_e1)
    }

    /// `(n_m . X(z_m)) / (n_m . w^±_m)` with `n_m` normal to `v^s(z_m)`:
    /// the `l^u X` coefficient divided by the one-sided expansion `λ_m`.
    fn g(&self, m: usize, x: [f64; 2], plus: bool) -> f64 {
        let n = perp(self.vs[m]);
        let w = if plus { self.w_plus[m] } else { self.w_minus[m] };
        dot(n, x) / dot(n, w)
    }

    /// One-sided `λ_m(s_+)` (`λ_0 = 1`).
    pub fn lambda_plus(&self, m: usize) -> f64 {
        norm(self.w_plus[m])
    }
}

/// Backward data attached to one crossing event at trace step `k`.
pub(crate) struct EventPast {
    /// `y[j] = f^{-j}(s)` on the manifold recorded at step `k - j`.
    pub y: Vec<[f64; 2]>,
    /// `l^s` at `y_j` in the frame (manifold direction, pulled-back `v^s(s_+)`).
    pub ls: Vec<[f64; 2]>,
    /// `μ_j(s_+)`.
    pub mu: Vec<f64>,
    /// `l^u(s_-) . v^s(s_+)`.
    pub gamma: f64,
}

impl EventPast {
    pub fn new<R: Real>(trace: &RunTrace<R>, e: &TraceEvent<R>, orbit: &EventOrbit, m_max: usize) -> Option<EventPast> {
        if e.index < m_max {
            return None;
        }
        let map = &trace.map;
        let mut y = Vec::with_capacity(m_max + 1);
        let mut ls = Vec::with_capacity(m_max + 1);
        let mut mu = Vec::with_capacity(m_max + 1);
        let mut yr = e.s;
        let mut w = Vec2::<R>::from_f64(orbit.vs_plus[0], orbit.vs_plus[1]);
        y.push(yr.to_f64());
        ls.push(HostFrame::new(orbit.dir, orbit.vs_plus).ls);
        mu.push(1.0);
        for j in 1..=m_max {
            let st = &trace.steps[e.index - j];
            let pre = map.inverse_side(st.side, yr);
            // Re-project onto the manifold line: backward iteration amplifies
            // rounding along the stable direction.
            let d = st.direction();
            yr = st.p + d.scale((pre - st.p).dot(d));
            let pw = map.pull(st.side, w);
            let r = pw.norm();
            w = pw.scale(R::one() / r);
            y.push(yr.to_f64());
            ls.push(HostFrame::new(d.to_f64(), w.to_f64()).ls);
            mu.push(mu[j - 1] / r.to_f64());
        }
        let gamma = lu_dot(orbit.dir, orbit.vs_minus, orbit.vs_plus);
        Some(EventPast { y, ls, mu, gamma })
    }
}

/// All per-run quantities used by the susceptibility series.
#[derive(Clone, Debug, Default)]
pub struct RunKappas {
    pub kappa_s: Vec<f64>,
    pub kappa_x: Vec<f64>,
    pub kappa_rho: Vec<f64>,
    pub kappa_l: Vec<f64>,
    pub kappa_rho_direct: Vec<f64>,
    pub kappa_direct: Vec<f64>,
    pub kappa_x_inf: f64,
    pub kappa_rho_inf: f64,
    pub kappa_l_inf: f64,
    pub rho_a: f64,
    pub rho_s: f64,
    /// Mean `log |λ_1|` and `log |μ_1|` along the host orbit.
    pub log_lambda: f64,
    pub log_mu: f64,
    /// Sup of `|A|`, `|l^u X|`, `|l^s X|` seen along the orbit.
    pub a_sup: f64,
    pub lux_sup: f64,
    pub lsx_sup: f64,
    pub events: u64,
    pub events_without_past: u64,
    pub inexact_skipped: u64,
}

fn finish(v: Vec<KahanSum>, n: f64) -> Vec<f64> {
    v.into_iter().map(|s| s.value() / n).collect()
}

/// Evaluates every component on one trace.
pub fn analyse_run<R: Real>(trace: &RunTrace<R>, a: &Observable, x: &VectorField, cfg: &SusceptibilityConfig) -> RunKappas {
    let (n_max, m_max, depth) = (cfg.n_max, cfg.m_trunc, cfg.stable_depth);
    let window = trace.window();
    let n_steps = trace.n_steps() as f64;
    let frames = trace.host_frames();
    let hosts: Vec<[f64; 2]> = trace.steps.iter().map(|s| s.host.to_f64()).collect();
    let av: Vec<f64> = hosts.iter().map(|&p| a.value(p)).collect();
    let grad: Vec<[f64; 2]> = hosts.iter().map(|&p| a.gradient(p)).collect();
    let mut out = RunKappas::default();

    let rho_a = window.clone().map(|k| av[k]).collect::<KahanSum>().value() / n_steps;
    out.rho_a = rho_a;

    // Host-orbit components.
    let mut ks = vec![KahanSum::new(); n_max + 1];
    let mut kx = vec![KahanSum::new(); n_max + 1];
    let mut hx = KahanSum::new();
    let (mut ll, mut lm) = (KahanSum::new(), KahanSum::new());
    for k in window.clone() {
        let fr = &frames[k];
        let xv = x.value(hosts[k]);
        let dx = x.jacobian(hosts[k]);
        let h = dot(fr.lu, mat_vec(&dx, fr.vu));
        hx.add(h);
        ll.add(fr.unstable_factor.abs().ln());
        lm.add(fr.stable_factor.ln());
        let coef = dot(fr.ls, xv);
        out.a_sup = out.a_sup.max(av[k].abs());
        out.lux_sup = out.lux_sup.max(dot(fr.lu, xv).abs());
        out.lsx_sup = out.lsx_sup.max(coef.abs());
        let mut prod = 1.0;
        for n in 0..=n_max {
            let j = k + n;
            ks[n].add(coef * prod * dot(grad[j], frames[j].vs));
            kx[n].add(-av[j] * h);
            prod *= frames[j].stable_factor;
        }
    }
    out.kappa_s = finish(ks, n_steps);
    out.kappa_x = finish(kx, n_steps);
    out.kappa_x_inf = -rho_a * hx.value() / n_steps;
    out.log_lambda = ll.value() / n_steps;
    out.log_mu = lm.value() / n_steps;

    // Direct coefficients: push X(x_k) through the Jacobians.
    let mut kd = vec![KahanSum::new(); cfg.n_direct + 1];
    for k in window.clone() {
        let xv = x.value(hosts[k]);
        let mut v = Vec2::<R>::from_f64(xv[0], xv[1]);
        for n in 0..=cfg.n_direct {
            kd[n].add(dot(grad[k + n], v.to_f64()));
            v = trace.map.push(trace.steps[k + n].side, v);
        }
    }
    out.kappa_direct = finish(kd, n_steps);

    // Sums over crossing events.
    let mut kr = vec![KahanSum::new(); n_max + 1];
    let mut kl = vec![KahanSum::new(); n_max + 1];
    let (mut kr_inf, mut kl_inf, mut rs) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    let len = n_max + m_max;
    for e in trace.window_events() {
        out.events += 1;
        let orb = EventOrbit::new(&trace.map, e, len, depth);
        rs.add(orb.slice(1.0));
        let za: Vec<f64> = orb.z.iter().map(|&p| a.value(p)).collect();
        // G^-_m - G^+_m for m = 1..M.
        let dg: Vec<f64> = (1..=m_max)
            .map(|m| {
                let xv = x.value(orb.z[m]);
                orb.g(m, xv, false) - orb.g(m, xv, true)
            })
            .collect();
        kr_inf.add(orb.inv_len * rho_a * dg.iter().sum::<f64>());
        for n in 0..=n_max {
            let mut t = 0.0;
            for m in 1..=m_max {
                t += za[n + m] * dg[m - 1];
            }
            kr[n].add(orb.inv_len * t);
        }

        let Some(past) = EventPast::new(trace, e, &orb, m_max) else {
            out.events_without_past += 1;
            continue;
        };
        let terms: Vec<f64> = (0..=m_max).map(|j| past.gamma * dot(past.ls[j], x.value(past.y[j])) * past.mu[j]).collect();
        let ya: Vec<f64> = past.y.iter().map(|&p| a.value(p)).collect();
        kl_inf.add(orb.inv_len * rho_a * terms.iter().sum::<f64>());
        for n in 0..=n_max {
            let mut t = 0.0;
            for (j, term) in terms.iter().enumerate() {
                let av = if j <= n { za[n - j] } else { ya[j - n] };
                t += av * term;
            }
            kl[n].add(orb.inv_len * t);
        }
    }
    out.kappa_rho = finish(kr, n_steps);
    out.kappa_l = finish(kl, n_steps);
    out.kappa_rho_inf = kr_inf.value() / n_steps;
    out.kappa_l_inf = kl_inf.value() / n_steps;
    out.rho_s = rs.value() / n_steps;

    // Endpoint form of κ^ρ.
    let nr = cfg.n_rho_direct;
    let mut krd = vec![KahanSum::new(); nr + 1];
    for k in window {
        let st = &trace.steps[k];
        if !st.exact {
            out.inexact_skipped += 1;
            continue;
        }
        let dir = st.direction().to_f64();
        let inv_len = 1.0 / st.length().to_f64();
        let gq = endpoint_values(&trace.map, st.q, dir, a, x, nr, depth);
        let gp = endpoint_values(&trace.map, st.p, dir, a, x, nr, depth);
        for n in 0..=nr {
            krd[n].add(inv_len * (gq[n] - gp[n]));
        }
    }
    out.kappa_rho_direct = finish(krd, n_steps);
    out
}

/// `A(f^n z) (l^u X)(z)` for `n = 0..=n_max`, with `l^u` dual to the manifold
/// direction and the stable direction along the forward orbit of `z`.
fn endpoint_values<R: Real>(map: &LoziMap<R>, z: Point2<R>, dir: [f64; 2], a: &Observable, x: &VectorField, n_max: usize, depth: usize) -> Vec<f64> {
    let total = n_max.max(1) + depth;
    let mut pts = Vec::with_capacity(total);
    pts.push(z);
    for m in 1..total {
        pts.push(map.apply(pts[m - 1]));
    }
    let sides: Vec<Side> = pts.iter().map(|p| side_of(*p)).collect();
    let (vs, _) = stable_sweep(map, &sides);
    let zf = z.to_f64();
    let lux = lu_dot(dir, vs[0].to_f64(), x.value(zf));
    (0..=n_max).map(|n| a.value(pts[n].to_f64()) * lux).collect()
}
