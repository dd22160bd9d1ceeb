//! Pathwise Riemann-Stieltjes integration for left-continuous step integrands.
//!
//! A [`StepFunction`] is a finite sum of rectangles `v * 1_(a, b]`. Against a
//! sampled path its integral telescopes, so whenever every jump time is a
//! grid point the value is exact and no interpolation is needed. Jump times
//! off the grid are rejected.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Path, TimeGrid};

/// `value` held on the half-open interval `(start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPiece {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// Càglàd step function, zero outside its pieces (so always zero at t = 0).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepFunction {
    pieces: Vec<StepPiece>,
}

/// A piece with its endpoints resolved to grid indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct IndexedPiece {
    pub start: usize,
    pub end: usize,
    pub value: f64,
}

impl StepFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds from pieces; empty intervals are dropped, the rest must be
    /// sorted and pairwise disjoint (touching endpoints allowed).
    pub fn new(pieces: Vec<StepPiece>) -> Result<Self> {
        let pieces: Vec<StepPiece> = pieces.into_iter().filter(|p| p.end > p.start).collect();
        if pieces
            .iter()
            .any(|p| !(p.start.is_finite() && p.end.is_finite() && p.value.is_finite()))
        {
            return Err(Error::Structural("step pieces must be finite".into()));
        }
        if pieces.first().is_some_and(|p| p.start < 0.0) {
            return Err(Error::Structural("step pieces must start at t >= 0".into()));
        }
        if pieces.windows(2).any(|w| w[1].start < w[0].end) {
            return Err(Error::Structural(
                "step pieces must be sorted and non-overlapping".into(),
            ));
        }
        Ok(Self { pieces })
    }

    /// `values[i]` on `(times[i], times[i + 1]]`.
    pub fn from_breakpoints(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() + 1 {
            return Err(Error::Structural(
                "need exactly one more breakpoint than values".into(),
            ));
        }
        Self::new(
            times
                .windows(2)
                .zip(values)
                .map(|(w, &value)| StepPiece {
                    start: w[0],
                    end: w[1],
                    value,
                })
                .collect(),
        )
    }

    pub fn pieces(&self) -> &[StepPiece] {
        &self.pieces
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| StepPiece {
                    value: p.value * factor,
                    ..*p
                })
                .collect(),
        }
    }

    /// Left-continuous value at `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        // pieces sorted by start; the candidate is the last one with start < t
        let i = self.pieces.partition_point(|p| p.start < t);
        match i.checked_sub(1).map(|j| &self.pieces[j]) {
            Some(p) if t <= p.end => p.value,
            _ => 0.0,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.pieces.iter().all(|p| p.value >= 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.value == 0.0)
    }

    /// Jump times, ascending and deduplicated.
    pub fn jump_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(2 * self.pieces.len());
        for p in &self.pieces {
            if out.last() != Some(&p.start) {
                out.push(p.start);
            }
            out.push(p.end);
        }
        out
    }

    /// Sum of absolute jumps, counting entry from zero and the final exit to zero.
    pub fn total_variation(&self) -> f64 {
        let mut tv = 0.0;
        let mut prev_end = f64::NEG_INFINITY;
        let mut prev_val = 0.0;
        for p in &self.pieces {
            if p.start == prev_end {
                tv += (p.value - prev_val).abs();
            } else {
                tv += prev_val.abs() + p.value.abs();
            }
            prev_end = p.end;
            prev_val = p.value;
        }
        tv + prev_val.abs()
    }

    pub(crate) fn resolve(&self, grid: &TimeGrid) -> Result<Vec<IndexedPiece>> {
        self.pieces
            .iter()
            .map(|p| {
                Ok(IndexedPiece {
                    start: grid.require_index(p.start, "jump time")?,
                    end: grid.require_index(p.end, "jump time")?,
                    value: p.value,
                })
            })
            .collect()
    }

    /// Values at every grid point.
    pub fn sample(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        let idx = self.resolve(grid)?;
        let mut out = vec![0.0; grid.len()];
        for p in idx {
            for v in &mut out[p.start + 1..=p.end] {
                *v = p.value;
            }
        }
        Ok(out)
    }
}

/// `int_0^t phi dS`, exact by telescoping. `t` must be a grid point.
pub fn rs_integral_step(phi: &StepFunction, path: &Path, t: f64) -> Result<f64> {
    let k = path.grid().require_index(t, "integration time")?;
    let idx = phi.resolve(path.grid())?;
    Ok(integral_at(&idx, path.values(), k))
}

pub(crate) fn integral_at(idx: &[IndexedPiece], s: &[f64], k: usize) -> f64 {
    idx.iter()
        .filter(|p| p.start < k)
        .map(|p| p.value * (s[k.min(p.end)] - s[p.start]))
        .sum()
}

/// `t -> int_0^t phi dS` at every grid point, bitwise equal to calling
/// [`rs_integral_step`] point by point.
pub fn rs_integral_series(phi: &StepFunction, path: &Path) -> Result<Vec<f64>> {
    let idx = phi.resolve(path.grid())?;
    Ok(integral_series(&idx, path.values()))
}

pub(crate) fn integral_series(idx: &[IndexedPiece], s: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.len());
    let mut done = 0.0;
    let mut j = 0;
    for k in 0..s.len() {
        while j < idx.len() && idx[j].end < k {
            done += idx[j].value * (s[idx[j].end] - s[idx[j].start]);
            j += 1;
        }
        match idx.get(j) {
            Some(p) if p.start < k => out.push(done + p.value * (s[k] - s[p.start])),
            _ => out.push(done),
        }
    }
    out
}

/// Riemann sums `sum phi(tau_i) (S(tau_i) - S(tau_{i-1}))` on nested
/// partitions against the exact value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub partition_sizes: Vec<usize>,
    pub estimates: Vec<f64>,
    pub closed_form: f64,
    pub max_deviation: f64,
}

impl RefinementReport {
    pub fn deviations(&self) -> Vec<f64> {
        self.estimates
            .iter()
            .map(|e| (e - self.closed_form).abs())
            .collect()
    }

    pub fn finest_deviation(&self) -> f64 {
        (self.estimates.last().unwrap() - self.closed_form).abs()
    }
}

/// Evaluates Riemann sums over `levels` nested uniform sub-partitions of the
/// grid, finest last (the finest uses every grid point). With
/// `include_jumps` every partition is augmented by the jump times of `phi`.
pub fn rs_integral_riemann(
    phi: &StepFunction,
    path: &Path,
    levels: usize,
    include_jumps: bool,
) -> Result<RefinementReport> {
    let grid = path.grid();
    let m = grid.steps();
    if levels < 2 {
        return Err(Error::param("levels", "need at least two refinement levels"));
    }
    if levels > usize::BITS as usize || (1usize << (levels - 1)) > m {
        return Err(Error::param(
            "levels",
            format!("{levels} levels need at least 2^(levels-1) grid steps, have {m}"),
        ));
    }
    let idx = phi.resolve(grid)?;
    let values = phi.sample(grid)?;
    let s = path.values();
    let jumps: Vec<usize> = idx.iter().flat_map(|p| [p.start, p.end]).collect();

    let mut sizes = Vec::with_capacity(levels);
    let mut estimates = Vec::with_capacity(levels);
    for level in 0..levels {
        let stride = 1usize << (levels - 1 - level);
        let mut nodes: Vec<usize> = (0..=m).step_by(stride).collect();
        if *nodes.last().unwrap() != m {
            nodes.push(m);
        }
        if include_jumps {
            nodes.extend(&jumps);
            nodes.sort_unstable();
            nodes.dedup();
        }
        let sum: f64 = nodes
            .windows(2)
            .map(|w| values[w[1]] * (s[w[1]] - s[w[0]]))
            .sum();
        sizes.push(nodes.len() - 1);
        estimates.push(sum);
    }
    let closed_form = integral_at(&idx, s, m);
    let max_deviation = estimates
        .iter()
        .map(|e| (e - closed_form).abs())
        .fold(0.0, f64::max);
    Ok(RefinementReport {
        partition_sizes: sizes,
        estimates,
        closed_form,
        max_deviation,
    })
}

/// `int_0^t S dphi`: sum of `S(tau) * (phi(tau+) - phi(tau))` over jump
/// times `tau < t`. A jump exactly at `t` happens after `t` for a
/// left-continuous integrand and is not counted.
pub fn integral_path_wrt_step(path: &Path, phi: &StepFunction, t: f64) -> Result<f64> {
    let k = path.grid().require_index(t, "integration time")?;
    let idx = phi.resolve(path.grid())?;
    let s = path.values();
    let mut acc = 0.0;
    for p in &idx {
        if p.start < k {
            acc += s[p.start] * p.value;
        }
        if p.end < k {
            acc -= s[p.end] * p.value;
        }
    }
    Ok(acc)
}

/// `int phi dS - (phi_t S_t - phi_0 S_0 - int S dphi)`; zero up to rounding.
pub fn integration_by_parts_residual(phi: &StepFunction, path: &Path, t: f64) -> Result<f64> {
    let k = path.grid().require_index(t, "integration time")?;
    let lhs = rs_integral_step(phi, path, t)?;
    let s = path.values();
    let boundary = phi.value_at(t) * s[k] - phi.value_at(0.0) * s[0];
    Ok(lhs - (boundary - integral_path_wrt_step(path, phi, t)?))
}

/// Random non-negative step function with `1..=max_pieces` pieces on grid
/// points, holdings uniform in `[0, max_holding)`, positive somewhere.
pub fn random_nonnegative_step<R: Rng + ?Sized>(
    grid: &TimeGrid,
    rng: &mut R,
    max_pieces: usize,
    max_holding: f64,
) -> StepFunction {
    let m = grid.steps();
    let pieces = rng.random_range(1..=max_pieces.max(1)).min(m);
    let mut cuts: Vec<usize> = (0..2 * pieces).map(|_| rng.random_range(0..=m)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    if cuts.len() < 2 {
        cuts = vec![0, m];
    }
    let pts = grid.points();
    let mut out: Vec<StepPiece> = cuts
        .windows(2)
        .map(|w| StepPiece {
            start: pts[w[0]],
            end: pts[w[1]],
            value: rng.random::<f64>() * max_holding,
        })
        .collect();
    if out.iter().all(|p| p.value == 0.0) {
        out[0].value = max_holding * 0.5;
    }
    StepFunction::new(out).expect("pieces built from sorted grid cuts")
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{simulate, Boundary, ModelSpec, SeedSpec};

    fn grid(m: usize) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::uniform(1.0, m).unwrap())
    }

    fn rect(a: f64, b: f64, h: f64) -> StepFunction {
        StepFunction::new(vec![StepPiece {
            start: a,
            end: b,
            value: h,
        }])
        .unwrap()
    }

    fn bm(g: &Arc<TimeGrid>, seed: u64) -> Path {
        simulate(
            &ModelSpec::BrownianMotion {
                s0: 1.0,
                sigma: 1.0,
                boundary: Boundary::Reflect(0.01),
            },
            g,
            SeedSpec::from(seed),
        )
        .unwrap()
    }

    #[test]
    fn cadlag_evaluation() {
        let phi = StepFunction::new(vec![
            StepPiece { start: 0.25, end: 0.5, value: 2.0 },
            StepPiece { start: 0.5, end: 0.75, value: 3.0 },
        ])
        .unwrap();
        assert_eq!(phi.value_at(0.0), 0.0);
        assert_eq!(phi.value_at(0.25), 0.0);
        assert_eq!(phi.value_at(0.3), 2.0);
        assert_eq!(phi.value_at(0.5), 2.0);
        assert_eq!(phi.value_at(0.6), 3.0);
        assert_eq!(phi.value_at(0.75), 3.0);
        assert_eq!(phi.value_at(0.8), 0.0);
        assert_eq!(phi.total_variation(), 2.0 + 1.0 + 3.0);
        assert_eq!(phi.jump_times(), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn rejects_overlaps_and_off_grid_jumps() {
        assert!(StepFunction::new(vec![
            StepPiece { start: 0.0, end: 0.5, value: 1.0 },
            StepPiece { start: 0.4, end: 0.6, value: 1.0 },
        ])
        .is_err());
        let g = grid(4);
        let p = Path::new(Arc::clone(&g), vec![1.0; 5]).unwrap();
        let phi = rect(0.3, 0.5, 1.0);
        assert!(matches!(rs_integral_step(&phi, &p, 1.0), Err(Error::Structural(_))));
    }

    #[test]
    fn rectangle_telescopes() {
        let g = grid(1 << 10);
        let p = bm(&g, 5);
        let (a, b) = (0.25, 0.625);
        let phi = rect(a, b, 1.0);
        let sa = p.values()[g.index_of(a).unwrap()];
        let sb = p.values()[g.index_of(b).unwrap()];
        assert_eq!(rs_integral_step(&phi, &p, 1.0).unwrap(), sb - sa);
        assert_eq!(integral_path_wrt_step(&p, &phi, 1.0).unwrap(), sa - sb);
        assert_eq!(integration_by_parts_residual(&phi, &p, 1.0).unwrap(), 0.0);
        let zero = StepFunction::zero();
        for t in [0.0, 0.5, 1.0] {
            assert_eq!(rs_integral_step(&zero, &p, t).unwrap(), 0.0);
            assert_eq!(integration_by_parts_residual(&zero, &p, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn series_matches_pointwise() {
        let g = grid(256);
        let p = bm(&g, 9);
        let mut rng = SeedSpec::new(1, 0).rng();
        for _ in 0..20 {
            let phi = random_nonnegative_step(&g, &mut rng, 6, 2.0);
            let series = rs_integral_series(&phi, &p).unwrap();
            for (k, t) in g.points().iter().enumerate() {
                assert_eq!(series[k], rs_integral_step(&phi, &p, *t).unwrap());
            }
        }
    }

    #[test]
    fn riemann_with_jumps_is_exact() {
        let g = grid(1 << 10);
        let p = bm(&g, 11);
        let phi = rect(0.3046875, 0.7001953125, 1.0);
        let r = rs_integral_riemann(&phi, &p, 6, true).unwrap();
        assert!(r.max_deviation <= 1e-15, "{r:?}");
        let z = rs_integral_riemann(&StepFunction::zero(), &p, 4, false).unwrap();
        assert!(z.estimates.iter().all(|e| *e == 0.0));
        assert!(rs_integral_riemann(&phi, &p, 1, true).is_err());
    }

    #[test]
    fn non_decreasing_phi_has_positive_path_integral() {
        let g = grid(100);
        let p = Path::new(Arc::clone(&g), g.points().iter().map(|t| 1.0 + t).collect()).unwrap();
        let phi = StepFunction::new(vec![
            StepPiece { start: 0.1, end: 0.4, value: 1.0 },
            StepPiece { start: 0.4, end: 1.0, value: 2.5 },
        ])
        .unwrap();
        for k in 11..=100 {
            assert!(integral_path_wrt_step(&p, &phi, g.points()[k]).unwrap() > 0.0);
        }
        // explicit jump sum at T: 1.1 * 1 + 1.4 * 1.5, the exit at T is not counted
        let v = integral_path_wrt_step(&p, &phi, 1.0).unwrap();
        assert!((v - (1.1 + 1.4 * 1.5)).abs() < 1e-14);
        assert!(integration_by_parts_residual(&phi, &p, 1.0).unwrap().abs() < 1e-14);
    }
}
