//! One-path construction: simulate, prescale, QV curve, ladder, strategy.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rescale, simulate, ModelSpec, Path, SeedSpec, TimeGrid};
use crate::quadvar::{analytic_qv, realized_qv, stopping_ladder, QVCurve, StoppingLadder};
use crate::strategy::{
    build_phi, detect_event, increments, truncation_epsilon, weights, EventFlags, Increments,
    StrategyPath, Weights, DEFAULT_BETA,
};

/// How the level constant `c` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CPolicy {
    /// `c = <S>_T / 2` per path (uses foresight of the terminal QV).
    HalfOfQvT,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QvSource {
    /// Analytic when the model has a formula, realized otherwise.
    Auto,
    Analytic,
    Realized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub c_policy: CPolicy,
    pub gamma: f64,
    pub depth: usize,
    pub beta: f64,
    /// Constant factor applied to every simulated path.
    pub prescale: f64,
    /// Rescale each path by `1 / sup S` instead of `prescale` (extension).
    pub foresight_rescale: bool,
    pub qv_source: QvSource,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        Self {
            c_policy: CPolicy::HalfOfQvT,
            gamma: 0.5,
            depth: 64,
            beta: DEFAULT_BETA,
            prescale: 0.4,
            foresight_rescale: false,
            qv_source: QvSource::Auto,
        }
    }
}

impl ConstructionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::param(
                "construction.gamma",
                format!("must lie in (0, 1), got {}", self.gamma),
            ));
        }
        if self.depth == 0 {
            return Err(Error::param("construction.depth", "must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param(
                "construction.beta",
                format!("must lie in (0, 1), got {}", self.beta),
            ));
        }
        if !(self.prescale.is_finite() && self.prescale > 0.0) {
            return Err(Error::param("construction.prescale", "must be positive"));
        }
        if let CPolicy::Fixed(c) = self.c_policy {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::param("construction.c", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Everything built for one path.
#[derive(Debug, Clone)]
pub struct Construction {
    pub path: Path,
    pub qv: QVCurve,
    pub qv_source: QvSource,
    pub scale: f64,
    pub ladder: StoppingLadder,
    pub flags: EventFlags,
    pub z: Increments,
    pub h: Weights,
    pub phi: StrategyPath,
    pub epsilon: f64,
}

/// Serialized form of a [`Construction`] (construction JSON).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionRecord {
    #[serde(rename = "in_Ac")]
    pub in_ac: bool,
    pub c: f64,
    pub gamma: f64,
    #[serde(rename = "N")]
    pub depth: usize,
    pub beta: f64,
    #[serde(rename = "epsilon_N")]
    pub epsilon_n: f64,
    pub rho: f64,
    pub rho_n: Vec<f64>,
    #[serde(rename = "Z_n")]
    pub z_n: Vec<f64>,
    #[serde(rename = "H_n")]
    pub h_n: Vec<f64>,
    #[serde(rename = "sup_S")]
    pub sup_s: f64,
    #[serde(rename = "qv_T")]
    pub qv_t: f64,
    pub scale: f64,
    pub qv_source: QvSource,
    pub total_variation: f64,
}

impl Construction {
    pub fn record(&self) -> ConstructionRecord {
        ConstructionRecord {
            in_ac: self.flags.in_ac,
            c: self.flags.c,
            gamma: self.ladder.gamma,
            depth: self.ladder.depth,
            beta: self.h.beta,
            epsilon_n: self.epsilon,
            rho: self.ladder.rho,
            rho_n: self.ladder.rho_n.clone(),
            z_n: self.z.z.clone(),
            h_n: self.h.h.clone(),
            sup_s: self.flags.sup_s,
            qv_t: self.flags.qv_t,
            scale: self.scale,
            qv_source: self.qv_source,
            total_variation: crate::strategy::total_variation(&self.phi),
        }
    }

    /// Rebuilds the strategy on the same path and QV curve at another depth.
    pub fn with_depth(&self, depth: usize) -> Result<Construction> {
        let params = ConstructionParams {
            depth,
            c_policy: CPolicy::Fixed(self.flags.c),
            beta: self.h.beta,
            gamma: self.ladder.gamma,
            ..ConstructionParams::default()
        };
        construct_on_path(self.path.clone(), self.qv.clone(), self.qv_source, self.scale, &params)
    }
}

/// Simulates one path and runs the construction on it.
pub fn construct(
    spec: &ModelSpec,
    grid: &Arc<TimeGrid>,
    seed: SeedSpec,
    params: &ConstructionParams,
) -> Result<Construction> {
    params.validate()?;
    let raw = simulate(spec, grid, seed)?;
    let scale = if params.foresight_rescale {
        1.0 / raw.sup()
    } else {
        params.prescale
    };
    let (qv_raw, source) = match params.qv_source {
        QvSource::Realized => (realized_qv(&raw), QvSource::Realized),
        QvSource::Analytic => (analytic_qv(spec, &raw)?, QvSource::Analytic),
        QvSource::Auto => match analytic_qv(spec, &raw) {
            Ok(q) => (q, QvSource::Analytic),
            Err(_) => (realized_qv(&raw), QvSource::Realized),
        },
    };
    let path = rescale(&raw, scale)?;
    let qv = qv_raw.scaled(scale * scale);
    construct_on_path(path, qv, source, scale, params)
}

/// Runs the construction on an already prepared path and QV curve.
pub fn construct_on_path(
    path: Path,
    qv: QVCurve,
    qv_source: QvSource,
    scale: f64,
    params: &ConstructionParams,
) -> Result<Construction> {
    params.validate()?;
    let c = match params.c_policy {
        CPolicy::Fixed(c) => c,
        // a zero curve can never enter A_c; any positive c keeps the ladder well defined
        CPolicy::HalfOfQvT if qv.terminal() > 0.0 => qv.terminal() / 2.0,
        CPolicy::HalfOfQvT => f64::MIN_POSITIVE,
    };
    let ladder = stopping_ladder(&qv, c, params.gamma, params.depth)?;
    let flags = detect_event(&path, &qv, c)?;
    let z = increments(&path, &ladder)?;
    let h = weights(&z, params.beta)?;
    let phi = build_phi(path.grid(), &flags, &ladder, &z, &h)?;
    let epsilon = truncation_epsilon(&phi, &flags, &h);
    Ok(Construction {
        path,
        qv,
        qv_source,
        scale,
        ladder,
        flags,
        z,
        h,
        phi,
        epsilon,
    })
}
