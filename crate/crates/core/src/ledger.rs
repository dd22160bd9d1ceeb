//! Self-financing accounting and the checks run against it.
//!
//! The value process is the pathwise integral `V_t = int_0^t phi dS` with
//! `V_0 = 0`; the money account is whatever is left, `psi_t = V_t - phi_t S_t`.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Path, SeedSpec, TimeGrid};
use crate::pipeline::{construct, ConstructionParams};
use crate::quadvar::StoppingLadder;
use crate::stieltjes::{integral_series, StepFunction};
use crate::strategy::{truncation_epsilon, EventFlags, StrategyPath, Weights};

/// Value, cash and risky position on every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    grid: Arc<TimeGrid>,
    pub s: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_s: Vec<f64>,
    pub psi: Vec<f64>,
    pub v: Vec<f64>,
}

impl Ledger {
    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn terminal_value(&self) -> f64 {
        *self.v.last().unwrap()
    }

    /// `t,S,phi,psi,V`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,S,phi,psi,V")?;
        for (k, t) in self.grid.points().iter().enumerate() {
            writeln!(
                w,
                "{t},{},{},{},{}",
                self.s[k], self.phi[k], self.psi[k], self.v[k]
            )?;
        }
        Ok(())
    }

    /// Two-column CSV `t,<name>` of one series.
    pub fn write_series_csv<W: Write>(&self, name: &str, mut w: W) -> std::io::Result<()> {
        let series = match name {
            "S" => &self.s,
            "phi" => &self.phi,
            "psi" => &self.psi,
            "V" => &self.v,
            _ => {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidInput,
                    format!("unknown ledger series {name}"),
                ))
            }
        };
        writeln!(w, "t,{name}")?;
        for (t, x) in self.grid.points().iter().zip(series) {
            writeln!(w, "{t},{x}")?;
        }
        Ok(())
    }
}

pub fn build_ledger(path: &Path, phi: &StrategyPath) -> Result<Ledger> {
    if !(Arc::ptr_eq(path.grid(), phi.grid()) || path.grid() == phi.grid()) {
        return Err(Error::Structural("path and strategy live on different grids".into()));
    }
    build_ledger_step(path, phi.as_step_function())
}

/// Ledger for an arbitrary step integrand whose jumps sit on the path grid.
pub fn build_ledger_step(path: &Path, phi: &StepFunction) -> Result<Ledger> {
    let grid = path.grid();
    let idx = phi.resolve(grid)?;
    let s = path.values().to_vec();
    let v = integral_series(&idx, &s);
    let phi = phi.sample(grid)?;
    let phi_s: Vec<f64> = phi.iter().zip(&s).map(|(a, b)| a * b).collect();
    let psi = v.iter().zip(&phi_s).map(|(v, x)| v - x).collect();
    Ok(Ledger {
        grid: Arc::clone(grid),
        s,
        phi,
        phi_s,
        psi,
        v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative tolerance for exact identities.
    pub identity_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { identity_rel: 1e-10 }
    }
}

/// Outcome of the inequality and identity checks on one path.
///
/// Regions: for `t <= rho_{N+1}` nothing is held and `V = 0`; the pieces
/// `(rho_{n+1}, rho_n]` with `H_N <= (1 - beta) H_n` together with
/// `(rho_1, T]` form the guaranteed region where `psi >= 0` is asserted;
/// elsewhere `psi >= -epsilon_N`. Strict `V_t > phi_t S_t` is asserted on
/// `(rho_1, T]` only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    #[serde(rename = "in_Ac")]
    pub in_ac: bool,
    pub phi_nonnegative: bool,
    pub eq_as_holds: bool,
    pub strict_after_rho: bool,
    pub min_psi_guaranteed: f64,
    pub min_psi: f64,
    #[serde(rename = "epsilon_N")]
    pub epsilon_n: f64,
    /// `max(0, -min psi)`: seed capital actually consumed by the truncation.
    pub seed_capital: f64,
    pub terminal_identity_residual: f64,
    pub terminal_identity_ok: bool,
    #[serde(rename = "V_T")]
    pub v_t: f64,
    pub terminal_target: f64,
    pub psi_piece_variation: f64,
    pub rho: f64,
    pub rho_1: f64,
    pub strict_region: &'static str,
    pub passed: bool,
}

pub fn verify_theorem(
    ledger: &Ledger,
    phi: &StrategyPath,
    ladder: &StoppingLadder,
    flags: &EventFlags,
    h: &Weights,
    tol: &Tolerances,
) -> VerificationReport {
    let len = ledger.v.len();
    let pts = ledger.grid.points();
    let epsilon = truncation_epsilon(phi, flags, h);
    let v_t = ledger.terminal_value();
    let scale = flags.sup_s.max(1.0);
    let slack = tol.identity_rel * scale;

    let phi_nonnegative = ledger.phi.iter().all(|x| *x >= 0.0) && ledger.phi[0] == 0.0;

    let mut guaranteed = vec![true; len];
    let mut psi_piece_variation: f64 = 0.0;
    for p in phi.pieces().iter().filter(|p| !p.is_empty()) {
        if !h.is_guaranteed(p.n) {
            guaranteed[p.start_index + 1..=p.end_index].fill(false);
        }
        let seg = &ledger.psi[p.start_index + 1..=p.end_index];
        let (lo, hi) = seg
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
        psi_piece_variation = psi_piece_variation.max(hi - lo);
    }
    let min_psi = ledger.psi.iter().copied().fold(f64::INFINITY, f64::min);
    let min_psi_guaranteed = ledger
        .psi
        .iter()
        .zip(&guaranteed)
        .filter(|(_, g)| **g)
        .map(|(x, _)| *x)
        .fold(f64::INFINITY, f64::min);

    let rho_1_index = ladder.index(1);
    let (eq_as_holds, strict_after_rho, target) = if flags.in_ac {
        let eq_as = min_psi_guaranteed >= -slack && min_psi >= -epsilon - slack;
        let strict = (rho_1_index + 1..len).all(|k| ledger.v[k] > ledger.phi_s[k]);
        (eq_as, strict, (1.0 - h.last()) / h.beta)
    } else {
        let zero = ledger.v.iter().all(|x| *x == 0.0) && ledger.phi.iter().all(|x| *x == 0.0);
        (zero, false, 0.0)
    };
    let residual = (v_t - target).abs();
    let terminal_identity_ok = residual <= tol.identity_rel * v_t.abs().max(1.0);
    let psi_flat = psi_piece_variation <= slack;
    let passed = phi_nonnegative
        && eq_as_holds
        && terminal_identity_ok
        && psi_flat
        && (!flags.in_ac || strict_after_rho);

    VerificationReport {
        in_ac: flags.in_ac,
        phi_nonnegative,
        eq_as_holds,
        strict_after_rho,
        min_psi_guaranteed,
        min_psi,
        epsilon_n: epsilon,
        seed_capital: (-min_psi).max(0.0),
        terminal_identity_residual: residual,
        terminal_identity_ok,
        v_t,
        terminal_target: target,
        psi_piece_variation,
        rho: ladder.rho,
        rho_1: pts[rho_1_index],
        strict_region: "(rho_1, T]",
        passed,
    }
}

/// Result of searching a finite-variation path for a time with
/// `int_0^t phi dS < phi_t S_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropFiniteResult {
    pub found: bool,
    pub witness: Option<f64>,
}

/// Exhaustive grid search for the first `t` with `int_0^t phi dS < phi_t S_t`.
pub fn verify_prop_finite(path: &Path, phi: &StepFunction) -> Result<PropFiniteResult> {
    if !phi.is_nonnegative() {
        return Err(Error::Precondition("strategy takes negative values".into()));
    }
    let ledger = build_ledger_step(path, phi)?;
    let k = (0..ledger.v.len()).find(|&k| ledger.v[k] < ledger.phi_s[k]);
    Ok(PropFiniteResult {
        found: k.is_some(),
        witness: k.map(|k| ledger.grid.points()[k]),
    })
}

/// Monte Carlo sweep over a seed range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub model: ModelSpec,
    pub horizon: f64,
    pub steps: usize,
    pub construction: ConstructionParams,
    pub tolerances: Tolerances,
    pub seed_start: u64,
    pub seed_count: u64,
}

/// Per-seed outcome, kept for aggregation in seed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub in_ac: bool,
    pub eq_as_holds: bool,
    pub strict_after_rho: bool,
    pub passed: bool,
    pub v_t: f64,
    pub terminal_identity_residual: f64,
    pub epsilon_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub paths_total: u64,
    #[serde(rename = "paths_in_Ac")]
    pub paths_in_ac: u64,
    #[serde(rename = "fraction_in_Ac")]
    pub fraction_in_ac: f64,
    #[serde(rename = "wilson95_in_Ac")]
    pub wilson_in_ac: [f64; 2],
    #[serde(rename = "fraction_strict_on_Ac")]
    pub fraction_strict_on_ac: f64,
    #[serde(rename = "wilson95_strict_on_Ac")]
    pub wilson_strict_on_ac: [f64; 2],
    pub fraction_eq_as: f64,
    #[serde(rename = "mean_V_T_on_Ac")]
    pub mean_v_t_on_ac: Option<f64>,
    #[serde(rename = "min_V_T_on_Ac")]
    pub min_v_t_on_ac: Option<f64>,
    pub max_terminal_identity_residual: f64,
    #[serde(rename = "max_epsilon_N")]
    pub max_epsilon_n: f64,
    pub all_passed: bool,
    pub seed_start: u64,
    pub seed_count: u64,
}

/// 95% Wilson score interval for `k` successes out of `n`; `[0, 1]` when `n = 0`.
pub fn wilson_interval(k: u64, n: u64) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054;
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    [(centre - half).max(0.0), (centre + half).min(1.0)]
}

pub fn run_seed(config: &McConfig, grid: &Arc<TimeGrid>, seed: u64) -> Result<SeedOutcome> {
    let c = construct(&config.model, grid, SeedSpec::from(seed), &config.construction)?;
    let ledger = build_ledger(&c.path, &c.phi)?;
    let r = verify_theorem(&ledger, &c.phi, &c.ladder, &c.flags, &c.h, &config.tolerances);
    Ok(SeedOutcome {
        seed,
        in_ac: r.in_ac,
        eq_as_holds: r.eq_as_holds,
        strict_after_rho: r.strict_after_rho,
        passed: r.passed,
        v_t: r.v_t,
        terminal_identity_residual: r.terminal_identity_residual,
        epsilon_n: r.epsilon_n,
    })
}

/// Runs every seed (in parallel on the current rayon pool) and aggregates in
/// seed order, so the summary does not depend on scheduling.
pub fn monte_carlo(config: &McConfig) -> Result<(McSummary, Vec<SeedOutcome>)> {
    config.model.validate()?;
    config.construction.validate()?;
    let grid = Arc::new(TimeGrid::uniform(config.horizon, config.steps)?);
    let end = config
        .seed_start
        .checked_add(config.seed_count)
        .ok_or_else(|| Error::param("seeds.count", "seed range overflows u64"))?;
    let outcomes: Vec<SeedOutcome> = (config.seed_start..end)
        .into_par_iter()
        .map(|seed| run_seed(config, &grid, seed))
        .collect::<Result<_>>()?;
    Ok((summarize(config, &outcomes), outcomes))
}

pub fn summarize(config: &McConfig, outcomes: &[SeedOutcome]) -> McSummary {
    let total = outcomes.len() as u64;
    let on_ac: Vec<&SeedOutcome> = outcomes.iter().filter(|o| o.in_ac).collect();
    let n_ac = on_ac.len() as u64;
    let strict = on_ac.iter().filter(|o| o.strict_after_rho).count() as u64;
    let eq_as = outcomes.iter().filter(|o| o.eq_as_holds).count() as u64;
    let frac = |k: u64, n: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let mean_v_t = (n_ac > 0).then(|| on_ac.iter().map(|o| o.v_t).sum::<f64>() / n_ac as f64);
    let min_v_t = on_ac.iter().map(|o| o.v_t).reduce(f64::min);
    McSummary {
        paths_total: total,
        paths_in_ac: n_ac,
        fraction_in_ac: frac(n_ac, total),
        wilson_in_ac: wilson_interval(n_ac, total),
        fraction_strict_on_ac: frac(strict, n_ac),
        wilson_strict_on_ac: wilson_interval(strict, n_ac),
        fraction_eq_as: frac(eq_as, total),
        mean_v_t_on_ac: mean_v_t,
        min_v_t_on_ac: min_v_t,
        max_terminal_identity_residual: outcomes
            .iter()
            .map(|o| o.terminal_identity_residual)
            .fold(0.0, f64::max),
        max_epsilon_n: outcomes.iter().map(|o| o.epsilon_n).fold(0.0, f64::max),
        all_passed: outcomes.iter().all(|o| o.passed),
        seed_start: config.seed_start,
        seed_count: config.seed_count,
    }
}
