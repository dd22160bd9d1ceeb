//! Run configuration in a flat `section.key = value` text format.
//!
//! Lines starting with `#` and blank lines are ignored. Every key is
//! optional; missing keys keep their defaults. [`RunConfig::to_kv`] writes
//! every key in a fixed order and parses back to an identical config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ledger::{McConfig, Tolerances};
use crate::lemmas::BmIncrementSpec;
use crate::model::{Boundary, FvKind, ModelSpec, DEFAULT_STEPS};
use crate::pipeline::{CPolicy, ConstructionParams, QvSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Brownian,
    Gbm,
    FvLinear,
    FvSinusoid,
    FvMonotone,
}

impl ModelKind {
    fn as_str(self) -> &'static str {
        match self {
            ModelKind::Brownian => "brownian",
            ModelKind::Gbm => "gbm",
            ModelKind::FvLinear => "fv-linear",
            ModelKind::FvSinusoid => "fv-sinusoid",
            ModelKind::FvMonotone => "fv-monotone",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    None,
    Absorb,
    Reflect,
}

/// Model section; only the fields relevant to `kind` are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub s0: f64,
    pub sigma: f64,
    pub boundary: BoundaryKind,
    pub boundary_level: f64,
    pub slope: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Brownian,
            s0: 1.0,
            sigma: 1.0,
            boundary: BoundaryKind::Absorb,
            boundary_level: 0.01,
            slope: 1.0,
            amplitude: 0.3,
            frequency: 1.0,
            scale: 0.5,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self) -> ModelSpec {
        match self.kind {
            ModelKind::Brownian => ModelSpec::BrownianMotion {
                s0: self.s0,
                sigma: self.sigma,
                boundary: match self.boundary {
                    BoundaryKind::None => Boundary::None,
                    BoundaryKind::Absorb => Boundary::Absorb(self.boundary_level),
                    BoundaryKind::Reflect => Boundary::Reflect(self.boundary_level),
                },
            },
            ModelKind::Gbm => ModelSpec::GeometricBm {
                s0: self.s0,
                sigma: self.sigma,
            },
            ModelKind::FvLinear => ModelSpec::FiniteVariation(FvKind::Linear { slope: self.slope }),
            ModelKind::FvSinusoid => ModelSpec::FiniteVariation(FvKind::Sinusoid {
                amplitude: self.amplitude,
                frequency: self.frequency,
            }),
            ModelKind::FvMonotone => {
                ModelSpec::FiniteVariation(FvKind::MonotoneRandom { scale: self.scale })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropFvConfig {
    pub paths: usize,
    pub strategies: usize,
    pub max_pieces: usize,
}

impl Default for PropFvConfig {
    fn default() -> Self {
        Self {
            paths: 10,
            strategies: 100,
            max_pieces: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaConfig {
    pub seq_specs: usize,
    pub seq_depth: usize,
    pub triples: usize,
    pub triple_max_depth: usize,
    pub bound_depth: usize,
    pub bm_sigma: f64,
    pub bm_gamma: f64,
    pub bm_alpha: f64,
    pub bm_samples: usize,
    pub bm_ladder: Vec<usize>,
    pub bm_threshold: f64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            seq_specs: 100,
            seq_depth: 10_000,
            triples: 1000,
            triple_max_depth: 10_000,
            bound_depth: 1_000_000,
            bm_sigma: 1.0,
            bm_gamma: 0.5,
            bm_alpha: 0.5,
            bm_samples: 10_000,
            bm_ladder: vec![100, 1000, 10_000],
            bm_threshold: 1.0,
        }
    }
}

impl LemmaConfig {
    pub fn bm_spec(&self) -> BmIncrementSpec {
        BmIncrementSpec {
            sigma: self.bm_sigma,
            gamma: self.bm_gamma,
            alpha: self.bm_alpha,
            depth: self.bm_ladder.last().copied().unwrap_or(1),
            samples: self.bm_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub horizon: f64,
    pub steps: usize,
    pub construction: ConstructionParams,
    pub tolerances: Tolerances,
    pub seed_start: u64,
    pub seed_count: u64,
    pub out_dir: PathBuf,
    pub prop_fv: PropFvConfig,
    pub lemma: LemmaConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            horizon: 1.0,
            steps: DEFAULT_STEPS,
            construction: ConstructionParams::default(),
            tolerances: Tolerances::default(),
            seed_start: 0,
            seed_count: 1000,
            out_dir: PathBuf::from("out"),
            prop_fv: PropFvConfig::default(),
            lemma: LemmaConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::param(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::param(key, format!("expected true/false, got `{value}`"))),
    }
}

impl RunConfig {
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut c_value: Option<f64> = None;
        let mut c_fixed = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "model.kind" => {
                    cfg.model.kind = match value {
                        "brownian" => ModelKind::Brownian,
                        "gbm" => ModelKind::Gbm,
                        "fv-linear" => ModelKind::FvLinear,
                        "fv-sinusoid" => ModelKind::FvSinusoid,
                        "fv-monotone" => ModelKind::FvMonotone,
                        _ => return Err(Error::param(key, format!("unknown model `{value}`"))),
                    }
                }
                "model.s0" => cfg.model.s0 = parse(key, value)?,
                "model.sigma" => cfg.model.sigma = parse(key, value)?,
                "model.boundary" => {
                    cfg.model.boundary = match value {
                        "none" => BoundaryKind::None,
                        "absorb" => BoundaryKind::Absorb,
                        "reflect" => BoundaryKind::Reflect,
                        _ => return Err(Error::param(key, format!("unknown boundary `{value}`"))),
                    }
                }
                "model.boundary_level" => cfg.model.boundary_level = parse(key, value)?,
                "model.slope" => cfg.model.slope = parse(key, value)?,
                "model.amplitude" => cfg.model.amplitude = parse(key, value)?,
                "model.frequency" => cfg.model.frequency = parse(key, value)?,
                "model.scale" => cfg.model.scale = parse(key, value)?,
                "grid.horizon" => cfg.horizon = parse(key, value)?,
                "grid.steps" => cfg.steps = parse(key, value)?,
                "construction.c_policy" => {
                    c_fixed = match value {
                        "half-of-qvT" => false,
                        "fixed" => true,
                        _ => return Err(Error::param(key, format!("unknown policy `{value}`"))),
                    }
                }
                "construction.c" => c_value = Some(parse(key, value)?),
                "construction.gamma" => cfg.construction.gamma = parse(key, value)?,
                "construction.depth" => cfg.construction.depth = parse(key, value)?,
                "construction.beta" => cfg.construction.beta = parse(key, value)?,
                "construction.prescale" => cfg.construction.prescale = parse(key, value)?,
                "construction.foresight_rescale" => {
                    cfg.construction.foresight_rescale = parse_bool(key, value)?
                }
                "construction.qv_source" => {
                    cfg.construction.qv_source = match value {
                        "auto" => QvSource::Auto,
                        "analytic" => QvSource::Analytic,
                        "realized" => QvSource::Realized,
                        _ => return Err(Error::param(key, format!("unknown source `{value}`"))),
                    }
                }
                "verify.identity_rel" => cfg.tolerances.identity_rel = parse(key, value)?,
                "seeds.start" => cfg.seed_start = parse(key, value)?,
                "seeds.count" => cfg.seed_count = parse(key, value)?,
                "output.dir" => cfg.out_dir = PathBuf::from(value),
                "prop_fv.paths" => cfg.prop_fv.paths = parse(key, value)?,
                "prop_fv.strategies" => cfg.prop_fv.strategies = parse(key, value)?,
                "prop_fv.max_pieces" => cfg.prop_fv.max_pieces = parse(key, value)?,
                "lemma.seq_specs" => cfg.lemma.seq_specs = parse(key, value)?,
                "lemma.seq_depth" => cfg.lemma.seq_depth = parse(key, value)?,
                "lemma.triples" => cfg.lemma.triples = parse(key, value)?,
                "lemma.triple_max_depth" => cfg.lemma.triple_max_depth = parse(key, value)?,
                "lemma.bound_depth" => cfg.lemma.bound_depth = parse(key, value)?,
                "lemma.bm_sigma" => cfg.lemma.bm_sigma = parse(key, value)?,
                "lemma.bm_gamma" => cfg.lemma.bm_gamma = parse(key, value)?,
                "lemma.bm_alpha" => cfg.lemma.bm_alpha = parse(key, value)?,
                "lemma.bm_samples" => cfg.lemma.bm_samples = parse(key, value)?,
                "lemma.bm_ladder" => {
                    cfg.lemma.bm_ladder = value
                        .split(',')
                        .map(|v| parse(key, v.trim()))
                        .collect::<Result<_>>()?
                }
                "lemma.bm_threshold" => cfg.lemma.bm_threshold = parse(key, value)?,
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        cfg.construction.c_policy = match (c_fixed, c_value) {
            (false, _) => CPolicy::HalfOfQvT,
            (true, Some(c)) => CPolicy::Fixed(c),
            (true, None) => {
                return Err(Error::param("construction.c", "required when c_policy = fixed"))
            }
        };
        Ok(cfg)
    }

    /// Ordered `(key, value)` pairs; the config echo embedded in outputs.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let m = &self.model;
        let c = &self.construction;
        let l = &self.lemma;
        let boundary = match m.boundary {
            BoundaryKind::None => "none",
            BoundaryKind::Absorb => "absorb",
            BoundaryKind::Reflect => "reflect",
        };
        let mut out = vec![
            ("model.kind", m.kind.as_str().to_string()),
            ("model.s0", m.s0.to_string()),
            ("model.sigma", m.sigma.to_string()),
            ("model.boundary", boundary.to_string()),
            ("model.boundary_level", m.boundary_level.to_string()),
            ("model.slope", m.slope.to_string()),
            ("model.amplitude", m.amplitude.to_string()),
            ("model.frequency", m.frequency.to_string()),
            ("model.scale", m.scale.to_string()),
            ("grid.horizon", self.horizon.to_string()),
            ("grid.steps", self.steps.to_string()),
        ];
        match c.c_policy {
            CPolicy::HalfOfQvT => out.push(("construction.c_policy", "half-of-qvT".into())),
            CPolicy::Fixed(v) => {
                out.push(("construction.c_policy", "fixed".into()));
                out.push(("construction.c", v.to_string()));
            }
        }
        let qv_source = match c.qv_source {
            QvSource::Auto => "auto",
            QvSource::Analytic => "analytic",
            QvSource::Realized => "realized",
        };
        out.extend([
            ("construction.gamma", c.gamma.to_string()),
            ("construction.depth", c.depth.to_string()),
            ("construction.beta", c.beta.to_string()),
            ("construction.prescale", c.prescale.to_string()),
            ("construction.foresight_rescale", c.foresight_rescale.to_string()),
            ("construction.qv_source", qv_source.to_string()),
            ("verify.identity_rel", self.tolerances.identity_rel.to_string()),
            ("seeds.start", self.seed_start.to_string()),
            ("seeds.count", self.seed_count.to_string()),
            ("output.dir", self.out_dir.display().to_string()),
            ("prop_fv.paths", self.prop_fv.paths.to_string()),
            ("prop_fv.strategies", self.prop_fv.strategies.to_string()),
            ("prop_fv.max_pieces", self.prop_fv.max_pieces.to_string()),
            ("lemma.seq_specs", l.seq_specs.to_string()),
            ("lemma.seq_depth", l.seq_depth.to_string()),
            ("lemma.triples", l.triples.to_string()),
            ("lemma.triple_max_depth", l.triple_max_depth.to_string()),
            ("lemma.bound_depth", l.bound_depth.to_string()),
            ("lemma.bm_sigma", l.bm_sigma.to_string()),
            ("lemma.bm_gamma", l.bm_gamma.to_string()),
            ("lemma.bm_alpha", l.bm_alpha.to_string()),
            ("lemma.bm_samples", l.bm_samples.to_string()),
            (
                "lemma.bm_ladder",
                l.bm_ladder
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("lemma.bm_threshold", l.bm_threshold.to_string()),
        ]);
        out
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    /// Validates every section that feeds a simulation.
    pub fn validate(&self) -> Result<()> {
        self.model.spec().validate()?;
        self.construction.validate()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::param("grid.horizon", "must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::param("grid.steps", "must be at least 1"));
        }
        if !(self.tolerances.identity_rel >= 0.0) {
            return Err(Error::param("verify.identity_rel", "must be non-negative"));
        }
        Ok(())
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            model: self.model.spec(),
            horizon: self.horizon,
            steps: self.steps,
            construction: self.construction,
            tolerances: self.tolerances,
            seed_start: self.seed_start,
            seed_count: self.seed_count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse_kv(&cfg.to_kv()).unwrap(), cfg);
    }

    #[test]
    fn fixed_c_and_overrides_round_trip() {
        let text = "# comment\nmodel.kind = fv-sinusoid\nmodel.amplitude = 0.25\n\
                    construction.c_policy = fixed\nconstruction.c = 0.03\n\
                    lemma.bm_ladder = 10, 20,40\nseeds.count = 7\n";
        let cfg = RunConfig::parse_kv(text).unwrap();
        assert_eq!(cfg.construction.c_policy, CPolicy::Fixed(0.03));
        assert_eq!(cfg.lemma.bm_ladder, vec![10, 20, 40]);
        assert_eq!(cfg.model.kind, ModelKind::FvSinusoid);
        assert_eq!(RunConfig::parse_kv(&cfg.to_kv()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let err = RunConfig::parse_kv("construction.gamma = abc").unwrap_err();
        assert!(matches!(err, Error::Parameter { ref field, .. } if field == "construction.gamma"));
        let cfg = RunConfig::parse_kv("construction.gamma = 1.5").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, Error::Parameter { ref field, .. } if field == "construction.gamma"));
        assert!(matches!(
            RunConfig::parse_kv("nope.key = 1"),
            Err(Error::Config(_))
        ));
        assert!(RunConfig::parse_kv("construction.c_policy = fixed").is_err());
    }
}
