use lozi::measures::{srb_average, RunConfig};
use lozi::observables::{Observable, VectorField};
use lozi::response::{
    conditional_mixing, kappa_total_direct, susceptibility, true_response, Component, ResponseError, SusceptibilityConfig, SusceptibilitySeries,
};
use lozi::{DDReal, LoziParams};

fn p18() -> LoziParams {
    LoziParams::from_decimal(1.8, 0.35).unwrap()
}

fn series(a: &Observable, x: &VectorField, cfg: &SusceptibilityConfig, run: &RunConfig) -> SusceptibilitySeries {
    susceptibility::<DDReal>(&p18(), a, x, cfg, run).unwrap()
}

fn small() -> RunConfig {
    RunConfig::new(20_000, 3, 17)
}

fn z(a: f64, b: f64, se: f64) -> f64 {
    (a - b).abs() / se
}

#[test]
fn conjugacy_field_gives_the_exact_response() {
    // X = (-y/b, x) is generated by h = id + ε(0, x), which conjugates the map
    // with b(1 + ε) to first order. So Σκ(A) = ρ(∇A · (0, x)): ρ(x) for A = y
    // and zero for A = x.
    let p = p18();
    let x = VectorField::conjugacy(0.35);
    let run = RunConfig::new(30_000, 3, 7);
    let cfg = SusceptibilityConfig { n_max: 40, ..Default::default() };
    let rho_x = srb_average::<DDReal>(&p, &Observable::x(), &run).unwrap();
    let sy = series(&Observable::y(), &x, &cfg, &run).linear_response(40);
    assert!(z(sy.value, rho_x.mean, sy.std_err.hypot(rho_x.std_err)) < 3.0, "{sy:?} vs {rho_x:?}");
    let sx = series(&Observable::x(), &x, &cfg, &run).linear_response(40);
    assert!(z(sx.value, 0.0, sx.std_err) < 3.0, "{sx:?}");
}

#[test]
fn zero_field_gives_zero_everywhere() {
    let s = series(&Observable::y(), &VectorField::zero(), &SusceptibilityConfig { n_max: 6, ..Default::default() }, &RunConfig::new(5_000, 2, 1));
    for v in [&s.kappa_s, &s.kappa_x, &s.kappa_rho, &s.kappa_l, &s.kappa_direct, &s.kappa_rho_direct] {
        assert!(v.iter().all(|e| e.mean == 0.0));
    }
    assert_eq!(s.limit_sum.mean, 0.0);
}

#[test]
fn coefficients_are_linear_in_the_field() {
    let cfg = SusceptibilityConfig { n_max: 6, ..Default::default() };
    let run = RunConfig::new(5_000, 2, 3);
    let a = Observable::y();
    let s1 = series(&a, &VectorField::b_scale(), &cfg, &run);
    let s2 = series(&a, &VectorField::x_axis(), &cfg, &run);
    let sum = VectorField::new("sum", |x, y| [x, y], |_, _| [[1.0, 0.0], [0.0, 1.0]]);
    let s12 = series(&a, &sum, &cfg, &run);
    let s3 = series(&a, &VectorField::b_scale().scaled(3.0), &cfg, &run);
    for n in 0..=6 {
        for (u, v, w, t) in [
            (&s1.kappa_s, &s2.kappa_s, &s12.kappa_s, &s3.kappa_s),
            (&s1.kappa_x, &s2.kappa_x, &s12.kappa_x, &s3.kappa_x),
            (&s1.kappa_rho, &s2.kappa_rho, &s12.kappa_rho, &s3.kappa_rho),
            (&s1.kappa_l, &s2.kappa_l, &s12.kappa_l, &s3.kappa_l),
        ] {
            let scale = 1e-12 * (1.0 + u[n].mean.abs() + v[n].mean.abs());
            assert!((u[n].mean + v[n].mean - w[n].mean).abs() < scale, "n = {n}");
            assert!((3.0 * u[n].mean - t[n].mean).abs() < 3.0 * scale, "n = {n}");
        }
    }
}

#[test]
fn constant_observable_has_no_response() {
    let cfg = SusceptibilityConfig { n_max: 10, ..Default::default() };
    let s = series(&Observable::one(), &VectorField::b_scale(), &cfg, &RunConfig::new(10_000, 2, 5));
    for n in 0..=cfg.n_direct {
        assert_eq!(s.kappa_direct[n].mean, 0.0);
    }
    let lr = s.linear_response(10);
    assert!(lr.value.abs() < 1e-10, "{lr:?}");
    for c in [Component::Field, Component::Singular, Component::Backward] {
        assert!(s.distance_to_limit(c).iter().all(|e| e.mean.abs() < 1e-10), "{c:?}");
    }
}

#[test]
fn decomposition_matches_direct_and_endpoint_forms() {
    let cfg = SusceptibilityConfig { n_max: 12, ..Default::default() };
    let s = series(&Observable::y(), &VectorField::b_scale(), &cfg, &small());
    for n in 0..=cfg.n_direct {
        let (d, t) = (&s.kappa_direct[n], &s.total[n]);
        let se = (d.std_err.powi(2) + t.std_err.powi(2)).sqrt();
        assert!((d.mean - t.mean).abs() <= 3.0 * se + 1e-9, "n = {n}: {d:?} vs {t:?}");
    }
    for n in 0..=cfg.n_rho_direct {
        let (d, t) = (&s.kappa_rho_direct[n], &s.kappa_rho[n]);
        let se = (d.std_err.powi(2) + t.std_err.powi(2)).sqrt();
        assert!((d.mean - t.mean).abs() <= 3.0 * se + 1e-9, "n = {n}: {d:?} vs {t:?}");
    }
    assert!(s.limit_sum.mean.abs() <= 3.0 * s.limit_sum.std_err + 1e-9, "{:?}", s.limit_sum);
    assert!(s.tail_ok(1e-8));
}

#[test]
fn direct_coefficient_refuses_deep_n() {
    let e = kappa_total_direct::<DDReal>(&p18(), &Observable::y(), &VectorField::b_scale(), 9, &small());
    assert!(matches!(e, Err(ResponseError::DirectTooDeep(9, 8))));
}

#[test]
fn mixing_of_a_constant_vanishes() {
    let m = conditional_mixing::<DDReal>(&p18(), &Observable::one(), 5, &RunConfig::new(10_000, 2, 2)).unwrap();
    assert!(m.c.iter().all(|c| c.mean.abs() < 1e-12));
}

#[test]
fn mixing_starts_from_a_frozen_value() {
    // 10 x 10^5 steps gave C_0 = -0.0736 for A = x.
    let m = conditional_mixing::<DDReal>(&p18(), &Observable::x(), 3, &RunConfig::new(50_000, 4, 9)).unwrap();
    assert!((m.c[0].mean + 0.0736).abs() < 4.0 * m.c[0].std_err + 1e-3, "{:?}", m.c[0]);
}

#[test]
fn response_curve_is_anchored_at_zero() {
    let cfg = SusceptibilityConfig { n_max: 10, ..Default::default() };
    let run = RunConfig::new(5_000, 2, 4);
    let lr = series(&Observable::y(), &VectorField::b_scale(), &cfg, &run).linear_response(10);
    let c = true_response::<DDReal>(&p18(), &Observable::y(), &[-0.01, 0.0, 0.01], &lr, 0.35, &run).unwrap();
    assert_eq!(c.points[1].deviation, 0.0);
    assert_eq!(c.points[1].true_value, c.base);
    assert!((c.points[2].envelope - 0.15 * 0.01f64.powf(1.35)).abs() < 1e-15);
    let bad = true_response::<DDReal>(&p18(), &Observable::y(), &[0.2], &lr, 0.35, &run);
    assert!(matches!(bad, Err(ResponseError::InvalidParams { .. })));
}
