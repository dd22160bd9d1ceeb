//! The foresight holding process.
//!
//! On the event `A_c = {sup S <= 1} ∩ {<S>_T > c}` the strategy holds
//! `H_n` units on `(rho_{n+1}, rho_n]` whenever the price fell over that
//! interval as seen backwards in time, i.e. `Z_n = (S(rho_n) - S(rho_{n+1}))^+ > 0`.
//! The weights `H_n = prod_{k <= n} 1 / (1 + beta Z_k)` are chosen so that
//! each position is paid for by the gains of the positions that follow it
//! closer to `rho`. The infinite ladder is truncated at depth `N`.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Path, TimeGrid};
use crate::quadvar::{QVCurve, StoppingLadder};
use crate::stieltjes::{StepFunction, StepPiece};

/// beta = 2 alpha / (1 + alpha) with alpha = 1/2.
pub const DEFAULT_BETA: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventFlags {
    pub in_ac: bool,
    pub sup_s: f64,
    pub qv_t: f64,
    pub c: f64,
}

fn same_grid(a: &Arc<TimeGrid>, b: &Arc<TimeGrid>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub fn detect_event(path: &Path, qv: &QVCurve, c: f64) -> Result<EventFlags> {
    if !same_grid(path.grid(), qv.grid()) {
        return Err(Error::Structural("path and qv curve live on different grids".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::param("construction.c", format!("must be positive, got {c}")));
    }
    let sup_s = path.sup();
    let qv_t = qv.terminal();
    Ok(EventFlags {
        in_ac: sup_s <= 1.0 && qv_t > c,
        sup_s,
        qv_t,
        c,
    })
}

/// `Z_n` for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Increments {
    pub z: Vec<f64>,
}

pub fn increments(path: &Path, ladder: &StoppingLadder) -> Result<Increments> {
    let s = path.values();
    if ladder.rho_n_index.len() != ladder.depth + 1 {
        return Err(Error::Structural("ladder has no resolved grid indices".into()));
    }
    if ladder.rho_n_index.iter().any(|&k| k >= s.len()) {
        return Err(Error::Structural("ladder indices exceed the path grid".into()));
    }
    let z = (1..=ladder.depth)
        .map(|n| (s[ladder.index(n)] - s[ladder.index(n + 1)]).max(0.0))
        .collect();
    Ok(Increments { z })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weights {
    pub beta: f64,
    /// `h[i]` holds H_{i+1}.
    pub h: Vec<f64>,
}

impl Weights {
    /// H_N (1 for an empty sequence).
    pub fn last(&self) -> f64 {
        self.h.last().copied().unwrap_or(1.0)
    }

    /// Pieces whose funding is guaranteed by the truncated proceeds:
    /// `H_N <= (1 - beta) H_n`, i.e. `H_n >= 3 H_N` for beta = 2/3.
    pub fn is_guaranteed(&self, n: usize) -> bool {
        self.last() <= (1.0 - self.beta) * self.h[n - 1]
    }
}

pub fn weights(z: &Increments, beta: f64) -> Result<Weights> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("construction.beta", format!("must lie in (0, 1), got {beta}")));
    }
    let mut acc = 1.0;
    let h = z
        .z
        .iter()
        .map(|zk| {
            acc /= 1.0 + beta * zk;
            acc
        })
        .collect();
    Ok(Weights { beta, h })
}

/// The n-th holding interval `(rho_{n+1}, rho_n]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyPiece {
    pub n: usize,
    pub start: f64,
    pub end: f64,
    #[serde(skip)]
    pub start_index: usize,
    #[serde(skip)]
    pub end_index: usize,
    pub holding: f64,
}

impl StrategyPiece {
    pub fn is_empty(&self) -> bool {
        self.start_index == self.end_index
    }
}

#[derive(Debug, Clone)]
pub struct StrategyPath {
    grid: Arc<TimeGrid>,
    /// Ordered by `n`, i.e. backwards in time.
    pieces: Vec<StrategyPiece>,
    step: StepFunction,
}

pub fn build_phi(
    grid: &Arc<TimeGrid>,
    flags: &EventFlags,
    ladder: &StoppingLadder,
    z: &Increments,
    h: &Weights,
) -> Result<StrategyPath> {
    let n_max = ladder.depth;
    if z.z.len() != n_max || h.h.len() != n_max {
        return Err(Error::Structural(format!(
            "depth mismatch: ladder {n_max}, increments {}, weights {}",
            z.z.len(),
            h.h.len()
        )));
    }
    if ladder.rho_n_index.iter().any(|&k| k > grid.last_index()) {
        return Err(Error::Structural("ladder indices exceed the grid".into()));
    }
    let pts = grid.points();
    let pieces: Vec<StrategyPiece> = (1..=n_max)
        .map(|n| {
            let (a, b) = (ladder.index(n + 1), ladder.index(n));
            let active = flags.in_ac && z.z[n - 1] > 0.0;
            StrategyPiece {
                n,
                start: pts[a],
                end: pts[b],
                start_index: a,
                end_index: b,
                holding: if active { h.h[n - 1] } else { 0.0 },
            }
        })
        .collect();
    let step = StepFunction::new(
        pieces
            .iter()
            .rev()
            .filter(|p| !p.is_empty())
            .map(|p| StepPiece {
                start: p.start,
                end: p.end,
                value: p.holding,
            })
            .collect(),
    )?;
    Ok(StrategyPath {
        grid: Arc::clone(grid),
        pieces,
        step,
    })
}

impl StrategyPath {
    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn pieces(&self) -> &[StrategyPiece] {
        &self.pieces
    }

    pub fn as_step_function(&self) -> &StepFunction {
        &self.step
    }

    pub fn is_zero(&self) -> bool {
        self.step.is_zero()
    }

    /// phi at every grid point.
    pub fn sample(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for p in &self.pieces {
            for v in &mut out[p.start_index + 1..=p.end_index] {
                *v = p.holding;
            }
        }
        out
    }

    /// Piece number `n` owning grid index `k`, if any.
    pub fn piece_at_index(&self, k: usize) -> Option<&StrategyPiece> {
        self.pieces
            .iter()
            .find(|p| p.start_index < k && k <= p.end_index)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,phi")?;
        for (t, v) in self.grid.points().iter().zip(self.sample()) {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Left-continuous value of phi at `t in [0, T]`.
pub fn evaluate_phi(phi: &StrategyPath, t: f64) -> Result<f64> {
    let horizon = phi.grid.horizon();
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::param("t", format!("must lie in [0, {horizon}], got {t}")));
    }
    Ok(phi.step.value_at(t))
}

pub fn total_variation(phi: &StrategyPath) -> f64 {
    phi.step.total_variation()
}

/// Seed capital that covers every unfunded piece of the truncated strategy:
/// `H_N * sup S` when at least one piece is active, else 0.
///
/// On piece `n` the money account equals `(H_n - H_N) / beta - h_n S(rho_{n+1})`,
/// which is bounded below by `-H_N sup S` whenever `sup S <= 1 / beta`.
pub fn truncation_epsilon(phi: &StrategyPath, flags: &EventFlags, h: &Weights) -> f64 {
    if phi.is_zero() {
        0.0
    } else {
        h.last() * flags.sup_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::uniform(1.0, m).unwrap())
    }

    fn ladder_from_indices(g: &TimeGrid, idx: Vec<usize>) -> StoppingLadder {
        StoppingLadder {
            c: 0.1,
            gamma: 0.5,
            depth: idx.len() - 1,
            rho: 0.0,
            rho_n: idx.iter().map(|&k| g.points()[k]).collect(),
            rho_index: 0,
            rho_n_index: idx,
        }
    }

    #[test]
    fn event_flags() {
        let g = grid(10);
        let flat = Path::new(Arc::clone(&g), vec![0.5; 11]).unwrap();
        let qv = crate::quadvar::realized_qv(&flat);
        assert!(!detect_event(&flat, &qv, 0.1).unwrap().in_ac);
        let lin = Path::new(Arc::clone(&g), g.points().iter().map(|t| 1.0 + t).collect()).unwrap();
        let f = detect_event(&lin, &crate::quadvar::realized_qv(&lin), 1e-6).unwrap();
        assert_eq!(f.sup_s, 2.0);
        assert!(!f.in_ac);
        let other = grid(11);
        let qv2 = QVCurve::new(other, vec![0.0; 12]).unwrap();
        assert!(matches!(detect_event(&flat, &qv2, 0.1), Err(Error::Structural(_))));
    }

    #[test]
    fn increments_on_hand_path() {
        let g = grid(4);
        // rho_3 = 0.25, rho_2 = 0.5, rho_1 = 0.75
        let p = Path::new(Arc::clone(&g), vec![0.5, 0.8, 1.0, 0.9, 0.9]).unwrap();
        let l = ladder_from_indices(&g, vec![3, 2, 1]);
        let z = increments(&p, &l).unwrap();
        assert_eq!(z.z[0], 0.0);
        assert!((z.z[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn increments_sign_follows_monotonicity() {
        let g = grid(8);
        let l = ladder_from_indices(&g, vec![7, 5, 3, 2, 1]);
        let down = Path::new(Arc::clone(&g), (0..9).map(|k| 1.0 - 0.1 * k as f64).collect()).unwrap();
        assert!(increments(&down, &l).unwrap().z.iter().all(|z| *z == 0.0));
        let up = Path::new(Arc::clone(&g), (0..9).map(|k| 0.1 + 0.1 * k as f64).collect()).unwrap();
        assert!(increments(&up, &l).unwrap().z.iter().all(|z| *z > 0.0));
        // collision rho_{n+1} = rho_n gives Z_n = 0
        let lc = ladder_from_indices(&g, vec![4, 4, 2]);
        assert_eq!(increments(&up, &lc).unwrap().z[0], 0.0);
    }

    #[test]
    fn weight_products() {
        let w = weights(&Increments { z: vec![0.0; 5] }, DEFAULT_BETA).unwrap();
        assert!(w.h.iter().all(|h| *h == 1.0));
        let w = weights(&Increments { z: vec![1.0] }, DEFAULT_BETA).unwrap();
        assert!((w.h[0] - 0.6).abs() < 1e-15);
        assert!(weights(&Increments { z: vec![1.0] }, 1.0).is_err());
        assert!(weights(&Increments { z: vec![1.0] }, 0.0).is_err());
    }

    #[test]
    fn weights_for_inverse_sqrt_increments_are_summable() {
        let partial = |n: usize| {
            let z = Increments {
                z: (1..=n).map(|k| (k as f64).powf(-0.5)).collect(),
            };
            let w = weights(&z, DEFAULT_BETA).unwrap();
            assert!(w.h.windows(2).all(|p| p[1] < p[0]));
            w.h.iter().sum::<f64>()
        };
        let (a, b) = (partial(2_000), partial(20_000));
        assert!(b - a < 1e-6, "{a} {b}");
    }

    fn one_piece_setup() -> (Arc<TimeGrid>, StrategyPath, f64) {
        let g = grid(8);
        let l = ladder_from_indices(&g, vec![6, 2, 1]);
        let z = Increments { z: vec![0.5, 0.0] };
        let h = weights(&z, DEFAULT_BETA).unwrap();
        let flags = EventFlags {
            in_ac: true,
            sup_s: 1.0,
            qv_t: 1.0,
            c: 0.1,
        };
        let phi = build_phi(&g, &flags, &l, &z, &h).unwrap();
        (g, phi, h.h[0])
    }

    #[test]
    fn single_active_piece() {
        let (_, phi, h1) = one_piece_setup();
        assert_eq!(evaluate_phi(&phi, 0.0).unwrap(), 0.0);
        assert_eq!(evaluate_phi(&phi, 0.25).unwrap(), 0.0);
        assert_eq!(evaluate_phi(&phi, 0.375).unwrap(), h1);
        assert_eq!(evaluate_phi(&phi, 0.75).unwrap(), h1);
        assert_eq!(evaluate_phi(&phi, 0.875).unwrap(), 0.0);
        assert!((total_variation(&phi) - 2.0 * h1).abs() < 1e-15);
        assert!(evaluate_phi(&phi, 1.5).is_err());
        assert!(evaluate_phi(&phi, -0.1).is_err());
    }

    #[test]
    fn boundaries_are_left_open() {
        let g = grid(8);
        let l = ladder_from_indices(&g, vec![6, 4, 2]);
        let z = Increments { z: vec![0.3, 0.2] };
        let h = weights(&z, DEFAULT_BETA).unwrap();
        let flags = EventFlags { in_ac: true, sup_s: 1.0, qv_t: 1.0, c: 0.1 };
        let phi = build_phi(&g, &flags, &l, &z, &h).unwrap();
        // rho_2 = 0.5 belongs to piece 2 = (rho_3, rho_2]
        assert_eq!(evaluate_phi(&phi, 0.5).unwrap(), h.h[1]);
        assert_eq!(evaluate_phi(&phi, 0.75).unwrap(), h.h[0]);
        let expected = h.h[1] + (h.h[0] - h.h[1]).abs() + h.h[0];
        assert!((total_variation(&phi) - expected).abs() < 1e-15);
    }

    #[test]
    fn off_event_is_zero() {
        let g = grid(8);
        let l = ladder_from_indices(&g, vec![6, 4, 2]);
        let z = Increments { z: vec![0.3, 0.2] };
        let h = weights(&z, DEFAULT_BETA).unwrap();
        let flags = EventFlags { in_ac: false, sup_s: 1.2, qv_t: 1.0, c: 0.1 };
        let phi = build_phi(&g, &flags, &l, &z, &h).unwrap();
        assert!(phi.sample().iter().all(|v| *v == 0.0));
        assert_eq!(total_variation(&phi), 0.0);
        assert_eq!(truncation_epsilon(&phi, &flags, &h), 0.0);
    }

    #[test]
    fn depth_mismatch_is_structural() {
        let g = grid(8);
        let l = ladder_from_indices(&g, vec![6, 4, 2]);
        let z = Increments { z: vec![0.3] };
        let h = weights(&z, DEFAULT_BETA).unwrap();
        let flags = EventFlags { in_ac: true, sup_s: 1.0, qv_t: 1.0, c: 0.1 };
        assert!(matches!(
            build_phi(&g, &flags, &l, &z, &h),
            Err(Error::Structural(_))
        ));
    }
}
