//! Price path models on a discrete time grid.
//!
//! Three families are provided: Brownian motion with optional absorption or
//! reflection (positive by construction once a boundary is set), driftless
//! geometric Brownian motion, and finite-variation paths with vanishing
//! quadratic variation. Every path is a pure function of
//! `(ModelSpec, TimeGrid, SeedSpec)`.
//!
//! Randomness comes from a ChaCha8 generator keyed by the 64-bit seed with the
//! stream index selecting an independent keystream. Gaussian variates use the
//! ziggurat sampler behind `rand_distr::StandardNormal`; uniforms use
//! `rand::Rng::random::<f64>()` (53-bit mantissa in `[0, 1)`).

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of grid steps (2^14).
pub const DEFAULT_STEPS: usize = 1 << 14;

/// Sorted sampling times `0 = t_0 < t_1 < ... < t_M = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    points: Vec<f64>,
    uniform: bool,
}

impl TimeGrid {
    /// Uniform grid with `steps` intervals on `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param("grid.horizon", "must be a positive finite number"));
        }
        if steps == 0 {
            return Err(Error::param("grid.steps", "must be at least 1"));
        }
        let m = steps as f64;
        let mut points: Vec<f64> = (0..=steps).map(|i| i as f64 * horizon / m).collect();
        points[steps] = horizon;
        Ok(Self {
            horizon,
            points,
            uniform: true,
        })
    }

    /// Arbitrary grid; must start at 0 and be strictly increasing.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("grid.points", "need at least two points"));
        }
        if points[0] != 0.0 {
            return Err(Error::param("grid.points", "first point must be 0"));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::param("grid.points", "points must be finite"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("grid.points", "points must be strictly increasing"));
        }
        let horizon = *points.last().unwrap();
        Ok(Self {
            horizon,
            points,
            uniform: false,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of intervals M.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn last_index(&self) -> usize {
        self.points.len() - 1
    }

    /// Index of the grid point equal to `t`, allowing a relative slack of
    /// `1e-12 * T` for times that went through arithmetic.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let slack = 1e-12 * self.horizon;
        let k = if self.uniform {
            let m = self.steps() as f64;
            let k = (t / self.horizon * m).round();
            if !(0.0..=m).contains(&k) {
                return None;
            }
            k as usize
        } else {
            match self.points.binary_search_by(|p| p.total_cmp(&t)) {
                Ok(k) => k,
                Err(k) => {
                    // nearest neighbour of the insertion point
                    let lo = k.saturating_sub(1);
                    let hi = k.min(self.last_index());
                    if (self.points[lo] - t).abs() <= (self.points[hi] - t).abs() {
                        lo
                    } else {
                        hi
                    }
                }
            }
        };
        ((self.points[k] - t).abs() <= slack).then_some(k)
    }

    /// Like [`index_of`](Self::index_of) but with a structural error naming `what`.
    pub fn require_index(&self, t: f64, what: &str) -> Result<usize> {
        self.index_of(t).ok_or_else(|| {
            Error::Structural(format!("{what} t = {t} is not a point of the time grid"))
        })
    }

    /// Largest index `k` with `points[k] <= t` (clamped into the grid).
    pub fn floor_index(&self, t: f64) -> usize {
        match self.points.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(k) => k,
            Err(0) => 0,
            Err(k) => k - 1,
        }
    }
}

/// Sampled positive price trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
}

impl Path {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Structural(format!(
                "path has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::PathValidity(format!(
                "value {} at t = {} is not strictly positive",
                values[k],
                grid.points()[k]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes the `t,S` CSV serialization.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,S")?;
        for (t, s) in self.grid.points().iter().zip(&self.values) {
            writeln!(w, "{t},{s}")?;
        }
        Ok(())
    }
}

/// Boundary treatment for arithmetic Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "level")]
pub enum Boundary {
    None,
    Absorb(f64),
    Reflect(f64),
}

/// Finite-variation path kinds. All start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FvKind {
    /// `1 + slope * t`.
    Linear { slope: f64 },
    /// `1 + amplitude * sin(2 pi frequency t)`.
    Sinusoid { amplitude: f64, frequency: f64 },
    /// Cumulative sum of i.i.d. uniform steps, normalised to climb from 1 to `1 + scale`.
    MonotoneRandom { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    BrownianMotion {
        s0: f64,
        sigma: f64,
        boundary: Boundary,
    },
    /// Driftless, hence a positive local martingale.
    GeometricBm { s0: f64, sigma: f64 },
    FiniteVariation(FvKind),
}

impl ModelSpec {
    /// Brownian motion started at one with unit volatility, absorbed at 0.01.
    pub fn default_brownian() -> Self {
        ModelSpec::BrownianMotion {
            s0: 1.0,
            sigma: 1.0,
            boundary: Boundary::Absorb(0.01),
        }
    }

    pub fn is_finite_variation(&self) -> bool {
        matches!(self, ModelSpec::FiniteVariation(_))
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(field, format!("must be positive, got {v}")))
            }
        }
        match *self {
            ModelSpec::BrownianMotion { s0, sigma, boundary } => {
                positive("model.s0", s0)?;
                positive("model.sigma", sigma)?;
                match boundary {
                    Boundary::None => {}
                    Boundary::Absorb(level) | Boundary::Reflect(level) => {
                        if !(level > 0.0 && level < s0) {
                            return Err(Error::param(
                                "model.boundary_level",
                                format!("must lie strictly between 0 and s0 = {s0}, got {level}"),
                            ));
                        }
                    }
                }
            }
            ModelSpec::GeometricBm { s0, sigma } => {
                positive("model.s0", s0)?;
                positive("model.sigma", sigma)?;
            }
            ModelSpec::FiniteVariation(kind) => match kind {
                FvKind::Linear { slope } => {
                    if !slope.is_finite() {
                        return Err(Error::param("model.slope", "must be finite"));
                    }
                }
                FvKind::Sinusoid {
                    amplitude,
                    frequency,
                } => {
                    if !(amplitude > 0.0 && amplitude < 1.0) {
                        return Err(Error::param("model.amplitude", "must lie in (0, 1)"));
                    }
                    positive("model.frequency", frequency)?;
                }
                FvKind::MonotoneRandom { scale } => positive("model.scale", scale)?,
            },
        }
        Ok(())
    }
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for SeedSpec {
    fn from(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }
}

/// Samples `spec` on `grid`.
pub fn simulate(spec: &ModelSpec, grid: &Arc<TimeGrid>, seed: SeedSpec) -> Result<Path> {
    spec.validate()?;
    let pts = grid.points();
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(pts.len());

    match *spec {
        ModelSpec::BrownianMotion { s0, sigma, boundary } => {
            let mut x = s0;
            let mut absorbed = false;
            values.push(x);
            for w in pts.windows(2) {
                if absorbed {
                    values.push(x);
                    continue;
                }
                let z: f64 = rng.sample(StandardNormal);
                x += sigma * (w[1] - w[0]).sqrt() * z;
                match boundary {
                    Boundary::None => {}
                    Boundary::Absorb(level) => {
                        if x <= level {
                            x = level;
                            absorbed = true;
                        }
                    }
                    Boundary::Reflect(level) => x = level + (x - level).abs(),
                }
                values.push(x);
            }
            if matches!(boundary, Boundary::None) {
                if let Some(k) = values.iter().position(|v| *v <= 0.0) {
                    return Err(Error::PathValidity(format!(
                        "Brownian path reached {} at t = {}; use an absorb or reflect boundary",
                        values[k], pts[k]
                    )));
                }
            }
        }
        ModelSpec::GeometricBm { s0, sigma } => {
            let mut x = s0;
            values.push(x);
            for w in pts.windows(2) {
                let dt = w[1] - w[0];
                let z: f64 = rng.sample(StandardNormal);
                x *= (-0.5 * sigma * sigma * dt + sigma * dt.sqrt() * z).exp();
                values.push(x);
            }
        }
        ModelSpec::FiniteVariation(kind) => match kind {
            FvKind::Linear { slope } => values.extend(pts.iter().map(|t| 1.0 + slope * t)),
            FvKind::Sinusoid {
                amplitude,
                frequency,
            } => values.extend(
                pts.iter()
                    .map(|t| 1.0 + amplitude * (2.0 * PI * frequency * t).sin()),
            ),
            FvKind::MonotoneRandom { scale } => {
                let mut acc = 0.0;
                let mut cum = Vec::with_capacity(pts.len());
                cum.push(0.0);
                for _ in 1..pts.len() {
                    acc += rng.random::<f64>();
                    cum.push(acc);
                }
                let total = if acc > 0.0 { acc } else { 1.0 };
                values.extend(cum.iter().map(|c| 1.0 + scale * c / total));
            }
        },
    }

    Path::new(Arc::clone(grid), values)
}

/// Multiplies every value by `lambda`.
pub fn rescale(path: &Path, lambda: f64) -> Result<Path> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    Ok(Path {
        grid: Arc::clone(&path.grid),
        values: path.values.iter().map(|v| v * lambda).collect(),
    })
}
