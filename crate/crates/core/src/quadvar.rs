//! Quadratic-variation curves and the stopping-time ladder read off them.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Boundary, ModelSpec, Path, TimeGrid};

/// Non-decreasing curve `t -> <S>_t` sampled on a grid, starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QVCurve {
    grid: Arc<TimeGrid>,
    qv: Vec<f64>,
}

impl QVCurve {
    pub fn new(grid: Arc<TimeGrid>, qv: Vec<f64>) -> Result<Self> {
        if qv.len() != grid.len() {
            return Err(Error::Structural(format!(
                "qv curve has {} values for {} grid points",
                qv.len(),
                grid.len()
            )));
        }
        if qv[0] != 0.0 {
            return Err(Error::Structural("qv curve must start at 0".into()));
        }
        if qv.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Structural("qv curve must be non-decreasing".into()));
        }
        Ok(Self { grid, qv })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.qv
    }

    pub fn terminal(&self) -> f64 {
        *self.qv.last().unwrap()
    }

    /// Quadratic variation of `lambda * S` given that of `S`; `factor = lambda^2`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            qv: self.qv.iter().map(|q| q * factor).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,qv")?;
        for (t, q) in self.grid.points().iter().zip(&self.qv) {
            writeln!(w, "{t},{q}")?;
        }
        Ok(())
    }
}

/// Running sum of squared increments.
pub fn realized_qv(path: &Path) -> QVCurve {
    let v = path.values();
    let mut qv = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    qv.push(0.0);
    for w in v.windows(2) {
        let d = w[1] - w[0];
        acc += d * d;
        qv.push(acc);
    }
    QVCurve {
        grid: Arc::clone(path.grid()),
        qv,
    }
}

/// Model-exact quadratic variation of `path`, which must have been generated
/// from `spec` (unscaled).
///
/// * Brownian motion: `sigma^2 t`, frozen from the absorption time on.
/// * Geometric BM: left-point quadrature of `sigma^2 S_t^2 dt`.
/// * Finite variation: identically zero.
pub fn analytic_qv(spec: &ModelSpec, path: &Path) -> Result<QVCurve> {
    let grid = path.grid();
    let pts = grid.points();
    let qv = match *spec {
        ModelSpec::BrownianMotion { sigma, boundary, .. } => {
            let s2 = sigma * sigma;
            let stop = match boundary {
                Boundary::Absorb(level) => path.values().iter().position(|v| *v <= level),
                Boundary::None | Boundary::Reflect(_) => None,
            };
            let cutoff = stop.map_or(f64::INFINITY, |k| pts[k]);
            pts.iter().map(|t| s2 * t.min(cutoff)).collect()
        }
        ModelSpec::GeometricBm { sigma, .. } => {
            let s2 = sigma * sigma;
            let mut acc = 0.0;
            let mut qv = Vec::with_capacity(pts.len());
            qv.push(0.0);
            for (w, s) in pts.windows(2).zip(path.values()) {
                acc += s2 * s * s * (w[1] - w[0]);
                qv.push(acc);
            }
            qv
        }
        ModelSpec::FiniteVariation(_) => vec![0.0; pts.len()],
    };
    QVCurve::new(Arc::clone(grid), qv).map_err(|e| {
        Error::Capability(format!("analytic QV unavailable ({e}); use realized_qv"))
    })
}

/// The ladder `rho <= rho_{N+1} <= ... <= rho_1 <= T`.
///
/// `rho_n` is the first grid time at which the curve reaches `c n^-gamma`
/// (T if never). `rho` is the last grid time before the curve turns positive,
/// i.e. the grid rendering of `inf{t : <S>_t > 0}` under linear interpolation
/// of the curve between grid points (T if the curve stays at zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingLadder {
    pub c: f64,
    pub gamma: f64,
    #[serde(rename = "N")]
    pub depth: usize,
    pub rho: f64,
    /// `rho_n[i]` holds rho_{i+1}; length N + 1.
    pub rho_n: Vec<f64>,
    #[serde(skip)]
    pub rho_index: usize,
    #[serde(skip)]
    pub rho_n_index: Vec<usize>,
}

impl StoppingLadder {
    /// rho_n for 1-based `n` in `1..=N+1`.
    pub fn time(&self, n: usize) -> f64 {
        self.rho_n[n - 1]
    }

    /// Grid index of rho_n for 1-based `n`.
    pub fn index(&self, n: usize) -> usize {
        self.rho_n_index[n - 1]
    }

    pub fn level(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(-self.gamma)
    }
}

pub fn stopping_ladder(qv: &QVCurve, c: f64, gamma: f64, depth: usize) -> Result<StoppingLadder> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("construction.gamma", format!("must lie in (0, 1), got {gamma}")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::param("construction.c", format!("must be positive, got {c}")));
    }
    if depth == 0 {
        return Err(Error::param("construction.depth", "must be at least 1"));
    }
    let q = qv.values();
    let pts = qv.grid().points();
    let last = q.len() - 1;

    let first_at_least = |level: f64| {
        let k = q.partition_point(|x| *x < level);
        k.min(last)
    };
    let rho_n_index: Vec<usize> = (1..=depth + 1)
        .map(|n| first_at_least(c * (n as f64).powf(-gamma)))
        .collect();
    let rho_index = match q.partition_point(|x| *x <= 0.0) {
        k if k > last => last,
        k => k.saturating_sub(1),
    };

    Ok(StoppingLadder {
        c,
        gamma,
        depth,
        rho: pts[rho_index],
        rho_n: rho_n_index.iter().map(|&k| pts[k]).collect(),
        rho_index,
        rho_n_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, FvKind, SeedSpec};

    fn grid(m: usize) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::uniform(1.0, m).unwrap())
    }

    #[test]
    fn realized_on_small_paths() {
        let g = grid(2);
        let p = Path::new(Arc::clone(&g), vec![1.0, 1.5, 1.0]).unwrap();
        assert_eq!(realized_qv(&p).values(), &[0.0, 0.25, 0.5]);
        let flat = Path::new(g, vec![0.7; 3]).unwrap();
        assert!(realized_qv(&flat).values().iter().all(|q| *q == 0.0));
    }

    #[test]
    fn analytic_brownian_and_fv() {
        let g = grid(1 << 10);
        let bm = ModelSpec::BrownianMotion {
            s0: 5.0,
            sigma: 1.0,
            boundary: Boundary::None,
        };
        let p = simulate(&bm, &g, SeedSpec::from(1)).unwrap();
        let qv = analytic_qv(&bm, &p).unwrap();
        for (t, q) in g.points().iter().zip(qv.values()) {
            assert_eq!(q, t);
        }
        let bm2 = ModelSpec::BrownianMotion {
            s0: 5.0,
            sigma: 2.0,
            boundary: Boundary::Reflect(1.0),
        };
        let p2 = simulate(&bm2, &g, SeedSpec::from(1)).unwrap();
        let q2 = analytic_qv(&bm2, &p2).unwrap();
        assert_eq!(q2.values()[g.index_of(0.25).unwrap()], 1.0);

        let fv = ModelSpec::FiniteVariation(FvKind::Sinusoid {
            amplitude: 0.3,
            frequency: 2.0,
        });
        let pf = simulate(&fv, &g, SeedSpec::from(1)).unwrap();
        assert!(analytic_qv(&fv, &pf).unwrap().values().iter().all(|q| *q == 0.0));
    }

    #[test]
    fn analytic_absorbed_brownian_freezes() {
        let g = grid(1 << 12);
        let spec = ModelSpec::BrownianMotion {
            s0: 0.2,
            sigma: 1.0,
            boundary: Boundary::Absorb(0.1),
        };
        let (p, k) = (0..100)
            .find_map(|s| {
                let p = simulate(&spec, &g, SeedSpec::from(s)).unwrap();
                let k = p.values().iter().position(|v| *v <= 0.1)?;
                Some((p, k))
            })
            .unwrap();
        let qv = analytic_qv(&spec, &p).unwrap();
        assert!(qv.values()[k..].iter().all(|q| *q == g.points()[k]));
    }

    #[test]
    fn ladder_on_linear_qv() {
        let g = grid(1 << 12);
        let qv = QVCurve::new(Arc::clone(&g), g.points().to_vec()).unwrap();
        let l = stopping_ladder(&qv, 0.5, 0.5, 8).unwrap();
        assert_eq!(l.time(1), 0.5);
        assert_eq!(l.time(4), 0.25);
        let k2 = l.index(2);
        assert!(g.points()[k2] >= 0.5 / 2f64.sqrt());
        assert!(g.points()[k2 - 1] < 0.5 / 2f64.sqrt());
        assert!((l.time(2) - 0.353_553_390_593_273_8).abs() < 1.0 / 4096.0);
        assert_eq!(l.rho, 0.0);
        assert!(l.rho_n.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ladder_on_zero_qv_sits_at_horizon() {
        let g = grid(16);
        let qv = QVCurve::new(g, vec![0.0; 17]).unwrap();
        let l = stopping_ladder(&qv, 0.1, 0.5, 4).unwrap();
        assert!(l.rho_n.iter().all(|t| *t == 1.0));
        assert_eq!(l.rho, 1.0);
    }

    #[test]
    fn ladder_rejects_bad_gamma() {
        let g = grid(4);
        let qv = QVCurve::new(g, vec![0.0, 0.1, 0.2, 0.3, 0.4]).unwrap();
        for gamma in [0.0, 1.0, 1.5, -0.2] {
            assert!(matches!(
                stopping_ladder(&qv, 0.1, gamma, 3),
                Err(Error::Parameter { .. })
            ));
        }
    }

    #[test]
    fn rho_is_last_zero_point() {
        let g = grid(4);
        let qv = QVCurve::new(g, vec![0.0, 0.0, 0.1, 0.3, 0.4]).unwrap();
        let l = stopping_ladder(&qv, 0.2, 0.5, 3).unwrap();
        assert_eq!(l.rho, 0.25);
        assert_eq!(l.time(1), 0.75);
    }

    #[test]
    fn rejects_decreasing_curve() {
        let g = grid(2);
        assert!(QVCurve::new(g, vec![0.0, 0.2, 0.1]).is_err());
    }

    #[test]
    fn ladder_json_field_names() {
        let g = grid(4);
        let qv = QVCurve::new(g, vec![0.0, 0.1, 0.2, 0.3, 0.4]).unwrap();
        let l = stopping_ladder(&qv, 0.2, 0.5, 2).unwrap();
        let v = serde_json::to_value(&l).unwrap();
        let obj = v.as_object().unwrap();
        let keys: Vec<_> = obj.keys().cloned().collect();
        assert_eq!(keys.len(), 5);
        for k in ["c", "gamma", "N", "rho", "rho_n"] {
            assert!(obj.contains_key(k), "{k}");
        }
        assert_eq!(obj["rho_n"].as_array().unwrap().len(), 3);
    }
}
