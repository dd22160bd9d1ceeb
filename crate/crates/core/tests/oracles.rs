//! Library outputs against closed forms computed in the test.

mod common;

use std::sync::Arc;

use nsarb::lemmas::{gap, mc_increment_ladder, u_bounds, u_n, BmIncrementSpec};
use nsarb::model::{simulate, FvKind, ModelSpec, SeedSpec, TimeGrid};
use nsarb::pipeline::construct;
use nsarb::stieltjes::{rs_integral_step, StepPiece};
use nsarb::StepFunction;

#[test]
fn half_laplace_oracle_sanity() {
    // a = 0: half the mass
    assert!((common::half_laplace(0.0) - 0.5).abs() < 1e-12);
    // a = 1: exp(1/2) Phi(-1)
    let expected = 0.5f64.exp() * 0.158_655_253_931_457_05;
    assert!((common::half_laplace(1.0) - expected).abs() < 1e-10);
}

#[test]
fn increment_ladder_monte_carlo_matches_exact_expectation() {
    let spec = BmIncrementSpec {
        sigma: 1.0,
        gamma: 0.5,
        alpha: 0.5,
        depth: 10_000,
        samples: 10_000,
    };
    let exact = common::exact_increment_sums(1.0, 0.5, 0.5, 10_000);
    let mc = mc_increment_ladder(&spec, &[100, 1000, 10_000], 0, 1.0).unwrap();
    for est in &mc.ladder {
        let e = exact[est.n - 1];
        let z = (est.mean - e) / est.stderr;
        assert!(z.abs() < 4.0, "N = {}: mc {} exact {e} z {z}", est.n, est.mean);
    }
    // the exact increments over decades grow, so the decreasing-increment
    // diagnostic cannot pass at these parameters
    let inc1 = exact[999] - exact[99];
    let inc2 = exact[9999] - exact[999];
    assert!(inc2 > inc1, "{inc1} {inc2}");
    assert!(!mc.increments_decreasing_3sigma);
}

#[test]
fn u_n_closed_forms() {
    for (n, gamma, sigma) in [(1usize, 0.5, 1.0), (10, 0.25, 2.0), (1000, 0.75, 0.5)] {
        let nf = n as f64;
        let direct = sigma * (nf.powf(-gamma) - (nf + 1.0).powf(-gamma)).sqrt();
        assert!((u_n(n, gamma, sigma) - direct).abs() <= 1e-12 * direct);
        let p = (gamma + 1.0) / 2.0;
        let (lo, hi) = u_bounds(n, gamma, sigma);
        assert!((lo - gamma.sqrt() * sigma * (nf + 1.0).powf(-p)).abs() < 1e-15);
        assert!((hi - gamma.sqrt() * sigma * nf.powf(-p)).abs() < 1e-15);
        assert!(gap(n, gamma) > 0.0);
    }
}

#[test]
fn rectangle_integrals_on_linear_path() {
    // S = 1 + t: phi = 1 on (a, b] earns b - a
    let g = Arc::new(TimeGrid::uniform(1.0, 1024).unwrap());
    let p = simulate(
        &ModelSpec::FiniteVariation(FvKind::Linear { slope: 1.0 }),
        &g,
        SeedSpec::from(0),
    )
    .unwrap();
    for (a, b, v) in [(0.0, 1.0, 1.0), (0.25, 0.5, 2.0), (0.125, 0.875, 0.3)] {
        let phi = StepFunction::new(vec![StepPiece { start: a, end: b, value: v }]).unwrap();
        let got = rs_integral_step(&phi, &p, 1.0).unwrap();
        assert!((got - v * (b - a)).abs() < 1e-15, "{got}");
    }
}

#[test]
fn brownian_analytic_qv_is_sigma_squared_time_until_absorption() {
    let cfg = nsarb::config::RunConfig::default();
    let g = Arc::new(TimeGrid::uniform(1.0, 4096).unwrap());
    for seed in 0..50 {
        let c = construct(&cfg.model.spec(), &g, SeedSpec::from(seed), &cfg.construction).unwrap();
        let raw = c.path.values().iter().map(|s| s / c.scale).collect::<Vec<_>>();
        let absorbed = raw.iter().position(|s| *s <= 0.01);
        let q = c.qv.values();
        for (k, t) in g.points().iter().enumerate() {
            let t_eff = absorbed.map_or(*t, |a| t.min(g.points()[a]));
            assert!((q[k] - 0.16 * t_eff).abs() < 1e-12, "seed {seed} k {k}");
        }
    }
}
