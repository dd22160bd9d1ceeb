//! Numerical checks of the two summability lemmas behind the construction.
//!
//! Sequence part: for non-negative `y_n -> 0` and `alpha in (0, 1)`, set
//! `beta = 2 alpha / (1 + alpha)` and `x_n = prod_{k <= n} 1 / (1 + beta y_k)`.
//! Then `beta * sum_{k = n+1}^{N} x_k y_k = x_n - x_N` exactly, and in the
//! limit `x_n < sum_{k > n} x_k y_k`. At finite depth the inequality is
//! implied by `x_N < (1 - beta) x_n`, which is what gets checked.
//!
//! Brownian part: `xi_n = (sigma B(n^-gamma) - sigma B((n+1)^-gamma))^+` has
//! scale `u_n = sigma sqrt(n^-gamma - (n+1)^-gamma)` squeezed between
//! `sqrt(gamma) sigma (n+1)^-p` and `sqrt(gamma) sigma n^-p`, `p = (gamma+1)/2`.
//! Finiteness of `E sum_n exp(-alpha sum_{k <= n} xi_k)` cannot be decided by
//! sampling; [`mc_increment_ladder`] only reports a convergence diagnostic.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SeedSpec;

/// Generator of the non-negative sequence `y_1, y_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum YSequence {
    /// `a * n^-q`.
    Power { a: f64, q: f64 },
    Zero,
    /// Explicit values; zero beyond the end.
    Explicit { values: Vec<f64> },
}

impl YSequence {
    /// `y_n` for 1-based `n`.
    pub fn at(&self, n: usize) -> f64 {
        match self {
            YSequence::Power { a, q } => a * (n as f64).powf(-q),
            YSequence::Zero => 0.0,
            YSequence::Explicit { values } => values.get(n - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn take(&self, depth: usize) -> Vec<f64> {
        (1..=depth).map(|n| self.at(n)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceSpec {
    pub y: YSequence,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub depth: usize,
}

impl SequenceSpec {
    pub fn new(y: YSequence, alpha: f64, depth: usize) -> Result<Self> {
        let spec = Self { y, alpha, depth };
        spec.validate()?;
        Ok(spec)
    }

    pub fn beta(&self) -> f64 {
        2.0 * self.alpha / (1.0 + self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("lemma.alpha", "must lie in (0, 1)"));
        }
        if self.depth == 0 {
            return Err(Error::param("lemma.depth", "must be at least 1"));
        }
        let bad = match &self.y {
            YSequence::Power { a, q } => !(*a > 0.0 && *q > 0.0 && a.is_finite() && q.is_finite()),
            YSequence::Zero => false,
            YSequence::Explicit { values } => values.iter().any(|v| !(v.is_finite() && *v >= 0.0)),
        };
        if bad {
            return Err(Error::param("lemma.y", "sequence must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Partial sums of `sum_n exp(-alpha sum_{k <= n} y_k)` with a plateau heuristic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    #[serde(skip)]
    pub partial_sums: Vec<f64>,
    /// `(n, partial sum)` at powers of ten and at `N`.
    pub checkpoints: Vec<(usize, f64)>,
    pub total: f64,
    /// Share of the total contributed by terms `n > N / 10`.
    pub last_decade_ratio: f64,
    pub plateau: bool,
}

/// Ratio below which the last decade is considered negligible.
pub const PLATEAU_RATIO: f64 = 0.01;

fn checkpoints(sums: &[f64]) -> Vec<(usize, f64)> {
    let n = sums.len();
    let mut out = Vec::new();
    let mut p = 1usize;
    while p < n {
        out.push((p, sums[p - 1]));
        p *= 10;
    }
    if n > 0 {
        out.push((n, sums[n - 1]));
    }
    out
}

pub fn check_assumption(spec: &SequenceSpec) -> AssumptionReport {
    let mut cum_y = 0.0;
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = (1..=spec.depth)
        .map(|n| {
            cum_y += spec.y.at(n);
            acc += (-spec.alpha * cum_y).exp();
            acc
        })
        .collect();
    let total = *partial_sums.last().unwrap_or(&0.0);
    let tenth = spec.depth / 10;
    let before = if tenth == 0 { 0.0 } else { partial_sums[tenth - 1] };
    let ratio = if total > 0.0 { (total - before) / total } else { 0.0 };
    AssumptionReport {
        checkpoints: checkpoints(&partial_sums),
        partial_sums,
        total,
        last_decade_ratio: ratio,
        plateau: ratio < PLATEAU_RATIO,
    }
}

/// `x_n` together with its partial sums and those of `exp(-alpha sum y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct XSeq {
    pub beta: f64,
    pub y: Vec<f64>,
    /// `x[i]` holds x_{i+1}.
    pub x: Vec<f64>,
    pub partial_x: Vec<f64>,
    pub partial_exp: Vec<f64>,
}

impl XSeq {
    /// `x_n` with `x_0 = 1`.
    pub fn at(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            self.x[n - 1]
        }
    }

    pub fn depth(&self) -> usize {
        self.x.len()
    }
}

pub fn build_x(spec: &SequenceSpec) -> XSeq {
    let beta = spec.beta();
    let y = spec.y.take(spec.depth);
    let mut prod = 1.0;
    let x: Vec<f64> = y
        .iter()
        .map(|yk| {
            prod /= 1.0 + beta * yk;
            prod
        })
        .collect();
    let mut acc = 0.0;
    let partial_x = x
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    XSeq {
        beta,
        partial_exp: check_assumption(spec).partial_sums,
        y,
        x,
        partial_x,
    }
}

/// Outcome of the truncated `x_n < sum_{k > n} x_k y_k` check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XnInequalityReport {
    pub depth: usize,
    pub eligible: usize,
    /// First and last eligible `n`, if any.
    pub eligible_range: Option<(usize, usize)>,
    pub violations: Vec<usize>,
    pub vacuous: bool,
}

impl XnInequalityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `x_n < sum_{k=n+1}^{N} x_k y_k` for every `n` with
/// `x_N < (1 - beta) x_n`. The tail sums are accumulated directly, not via
/// the telescoping identity.
pub fn verify_xn_inequality(x: &XSeq) -> XnInequalityReport {
    let depth = x.depth();
    let x_last = x.at(depth);
    let mut tails = vec![0.0; depth + 1];
    for n in (0..depth).rev() {
        tails[n] = tails[n + 1] + x.x[n] * x.y[n];
    }
    let mut eligible = Vec::new();
    let mut violations = Vec::new();
    for n in 1..depth {
        if x_last < (1.0 - x.beta) * x.at(n) {
            eligible.push(n);
            // tails[n] = sum over k = n+1..=N
            if !(x.at(n) < tails[n]) {
                violations.push(n);
            }
        }
    }
    XnInequalityReport {
        depth,
        eligible: eligible.len(),
        eligible_range: eligible.first().map(|f| (*f, *eligible.last().unwrap())),
        vacuous: eligible.is_empty(),
        violations,
    }
}

/// `beta sum_{k=n+1}^{N} x_k y_k - (x_n - x_N)` for `0 <= n < N <= depth`.
pub fn telescoping_residual(x: &XSeq, n: usize, depth: usize) -> Result<f64> {
    if !(n < depth && depth <= x.depth()) {
        return Err(Error::param(
            "n",
            format!("need n < N <= {}, got n = {n}, N = {depth}", x.depth()),
        ));
    }
    let sum: f64 = (n + 1..=depth).map(|k| x.x[k - 1] * x.y[k - 1]).sum();
    Ok(x.beta * sum - (x.at(n) - x.at(depth)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BmIncrementSpec {
    pub sigma: f64,
    pub gamma: f64,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub depth: usize,
    #[serde(rename = "M")]
    pub samples: usize,
}

impl BmIncrementSpec {
    pub fn p(&self) -> f64 {
        (self.gamma + 1.0) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::param("lemma.bm_sigma", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::param("lemma.bm_gamma", "must lie in (0, 1)"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::param("lemma.bm_alpha", "must be positive"));
        }
        if self.depth == 0 {
            return Err(Error::param("lemma.bm_ladder", "must be at least 1"));
        }
        Ok(())
    }
}

/// `n^-gamma - (n+1)^-gamma` without cancellation.
pub fn gap(n: usize, gamma: f64) -> f64 {
    let nf = n as f64;
    nf.powf(-gamma) * -(-gamma * (1.0 / nf).ln_1p()).exp_m1()
}

/// `u_n = sigma sqrt(n^-gamma - (n+1)^-gamma)`.
pub fn u_n(n: usize, gamma: f64, sigma: f64) -> f64 {
    sigma * gap(n, gamma).sqrt()
}

/// `(lower, upper)` mean-value bounds on `u_n`.
pub fn u_bounds(n: usize, gamma: f64, sigma: f64) -> (f64, f64) {
    let p = (gamma + 1.0) / 2.0;
    let k = gamma.sqrt() * sigma;
    (k * ((n + 1) as f64).powf(-p), k * (n as f64).powf(-p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UBoundReport {
    pub gamma: f64,
    pub sigma: f64,
    pub checked_up_to: usize,
    pub failures: usize,
    pub first_failure: Option<usize>,
}

/// Deterministic check of the bounds for `n = 1..=n_max`.
pub fn check_u_bounds(gamma: f64, sigma: f64, n_max: usize) -> UBoundReport {
    let mut failures = 0;
    let mut first = None;
    for n in 1..=n_max {
        let u = u_n(n, gamma, sigma);
        let (lo, hi) = u_bounds(n, gamma, sigma);
        if !(lo <= u && u <= hi) {
            failures += 1;
            first.get_or_insert(n);
        }
    }
    UBoundReport {
        gamma,
        sigma,
        checked_up_to: n_max,
        failures,
        first_failure: first,
    }
}

/// Draws `xi_1, ..., xi_N` from a single Brownian path observed at the
/// times `1 > 2^-gamma > ... > (N+1)^-gamma`. Its increments over the
/// disjoint intervals are independent `N(0, gap(n))`, drawn in order of `n`.
pub fn sample_xi<R: Rng + ?Sized>(spec: &BmIncrementSpec, rng: &mut R) -> Vec<f64> {
    (1..=spec.depth)
        .map(|n| {
            let z: f64 = rng.sample(StandardNormal);
            (spec.sigma * gap(n, spec.gamma).sqrt() * z).max(0.0)
        })
        .collect()
}

/// One draw of `xi` plus the deterministic bound check up to `N`.
pub fn bm_increments(spec: &BmIncrementSpec, seed: SeedSpec) -> Result<(Vec<f64>, UBoundReport)> {
    spec.validate()?;
    let xi = sample_xi(spec, &mut seed.rng());
    Ok((xi, check_u_bounds(spec.gamma, spec.sigma, spec.depth)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderEstimate {
    #[serde(rename = "N")]
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementEstimate {
    pub from: usize,
    pub to: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Paired comparison of consecutive increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecreaseTest {
    pub earlier: (usize, usize),
    pub later: (usize, usize),
    /// Mean of `earlier - later`.
    pub difference: f64,
    pub stderr: f64,
    /// `difference > 3 * stderr`.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma32Report {
    pub spec: BmIncrementSpec,
    pub seed: u64,
    pub ladder: Vec<LadderEstimate>,
    pub increments: Vec<IncrementEstimate>,
    pub decrease_tests: Vec<DecreaseTest>,
    pub increments_decreasing_3sigma: bool,
    pub threshold: f64,
    pub last_increment_below_threshold: bool,
    pub diagnostics_pass: bool,
    pub note: &'static str,
}

const LEMMA32_NOTE: &str = "convergence diagnostic only: finiteness of the expectation is not decidable from finitely many samples";

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of `E sum_{n <= N} exp(-alpha sum_{k <= n} xi_k)` at
/// each `N` of `ladder` (strictly increasing, last entry at most `spec.depth`).
/// Sample `i` uses stream `i` of `seed`. Increments are taken between
/// consecutive ladder points and compared pairwise per sample.
pub fn mc_increment_ladder(
    spec: &BmIncrementSpec,
    ladder: &[usize],
    seed: u64,
    threshold: f64,
) -> Result<Lemma32Report> {
    spec.validate()?;
    if spec.samples < 1000 {
        return Err(Error::param("lemma.bm_samples", "need at least 1000 samples"));
    }
    if ladder.is_empty()
        || ladder[0] == 0
        || ladder.windows(2).any(|w| w[1] <= w[0])
        || *ladder.last().unwrap() > spec.depth
    {
        return Err(Error::param(
            "lemma.bm_ladder",
            "must be strictly increasing, positive and at most N",
        ));
    }
    let n_max = *ladder.last().unwrap();
    let sd: Vec<f64> = (1..=n_max).map(|n| spec.sigma * gap(n, spec.gamma).sqrt()).collect();

    let per_sample: Vec<Vec<f64>> = (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeedSpec::new(seed, i).rng();
            let mut cum = 0.0;
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(ladder.len());
            let mut next = 0;
            for (idx, s) in sd.iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                cum += (s * z).max(0.0);
                acc += (-spec.alpha * cum).exp();
                if idx + 1 == ladder[next] {
                    out.push(acc);
                    next += 1;
                }
            }
            out
        })
        .collect();

    let column = |j: usize| per_sample.iter().map(|r| r[j]).collect::<Vec<_>>();
    let ladder_est: Vec<LadderEstimate> = ladder
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let (mean, stderr) = mean_se(&column(j));
            LadderEstimate { n, mean, stderr }
        })
        .collect();

    let inc_samples: Vec<Vec<f64>> = (1..ladder.len())
        .map(|j| per_sample.iter().map(|r| r[j] - r[j - 1]).collect())
        .collect();
    let increments: Vec<IncrementEstimate> = inc_samples
        .iter()
        .enumerate()
        .map(|(j, xs)| {
            let (mean, stderr) = mean_se(xs);
            IncrementEstimate {
                from: ladder[j],
                to: ladder[j + 1],
                mean,
                stderr,
            }
        })
        .collect();
    let decrease_tests: Vec<DecreaseTest> = (1..inc_samples.len())
        .map(|j| {
            let diffs: Vec<f64> = inc_samples[j - 1]
                .iter()
                .zip(&inc_samples[j])
                .map(|(a, b)| a - b)
                .collect();
            let (difference, stderr) = mean_se(&diffs);
            DecreaseTest {
                earlier: (ladder[j - 1], ladder[j]),
                later: (ladder[j], ladder[j + 1]),
                difference,
                stderr,
                significant: difference > 3.0 * stderr,
            }
        })
        .collect();
    let decreasing = decrease_tests.iter().all(|t| t.significant);
    let below = increments.last().is_none_or(|i| i.mean < threshold);

    Ok(Lemma32Report {
        spec: *spec,
        seed,
        ladder: ladder_est,
        increments,
        decrease_tests,
        increments_decreasing_3sigma: decreasing,
        threshold,
        last_increment_below_threshold: below,
        diagnostics_pass: decreasing && below,
        note: LEMMA32_NOTE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(a: f64, q: f64, alpha: f64, depth: usize) -> SequenceSpec {
        SequenceSpec::new(YSequence::Power { a, q }, alpha, depth).unwrap()
    }

    #[test]
    fn zero_sequence() {
        let spec = SequenceSpec::new(YSequence::Zero, 0.5, 1000).unwrap();
        let rep = check_assumption(&spec);
        assert_eq!(rep.total, 1000.0);
        assert!(!rep.plateau);
        let x = build_x(&spec);
        assert!(x.x.iter().all(|v| *v == 1.0));
        assert_eq!(telescoping_residual(&x, 10, 500).unwrap(), 0.0);
        assert!(verify_xn_inequality(&x).vacuous);
    }

    #[test]
    fn x1_anchor() {
        let spec = SequenceSpec::new(YSequence::Explicit { values: vec![1.0] }, 0.5, 5).unwrap();
        assert!((spec.beta() - 2.0 / 3.0).abs() < 1e-16);
        let x = build_x(&spec);
        assert!((x.x[0] - 0.6).abs() < 1e-15);
        // a single positive entry then zeros: nothing eligible
        let rep = verify_xn_inequality(&x);
        assert!(rep.vacuous && rep.passed());
    }

    #[test]
    fn inverse_sqrt_plateaus_and_reciprocal_does_not() {
        let conv = check_assumption(&power(1.0, 0.5, 0.5, 100_000));
        assert!(conv.plateau, "{}", conv.last_decade_ratio);
        assert!(conv.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        let div = check_assumption(&power(1.0, 1.0, 0.5, 100_000));
        assert!(!div.plateau);
        assert!(div.last_decade_ratio > 0.5);
    }

    #[test]
    fn x_sequence_for_inverse_sqrt() {
        let x = build_x(&power(1.0, 0.5, 0.5, 10_000));
        assert!(x.at(10_000) < 1e-3);
        assert!(x.x.windows(2).all(|w| w[1] <= w[0]));
        assert!(x.x.iter().all(|v| *v > 0.0 && *v <= 1.0));
        let rep = verify_xn_inequality(&x);
        assert!(rep.passed() && rep.eligible > 0);
    }

    #[test]
    fn one_step_telescoping_is_exact_recursion() {
        let x = build_x(&power(0.7, 0.6, 0.4, 50));
        let r = telescoping_residual(&x, 49, 50).unwrap();
        assert!(r.abs() <= 1e-17, "{r}");
        assert!(telescoping_residual(&x, 50, 50).is_err());
        assert!(telescoping_residual(&x, 3, 51).is_err());
    }

    #[test]
    fn u_bounds_first_term() {
        let u = u_n(1, 0.5, 1.0);
        assert!((u - 0.541_196_100_146_197).abs() < 1e-12);
        let (lo, hi) = u_bounds(1, 0.5, 1.0);
        assert!((lo - 0.420_448_207_626_856_8).abs() < 1e-12);
        assert!((hi - 0.707_106_781_186_547_5).abs() < 1e-12);
        assert!(lo <= u && u <= hi);
    }

    #[test]
    fn gap_matches_naive_for_small_n() {
        for n in 1..50 {
            let naive = (n as f64).powf(-0.3) - ((n + 1) as f64).powf(-0.3);
            assert!((gap(n, 0.3) - naive).abs() < 1e-14);
        }
    }

    #[test]
    fn xi_nonnegative() {
        let spec = BmIncrementSpec {
            sigma: 1.0,
            gamma: 0.5,
            alpha: 0.5,
            depth: 500,
            samples: 1000,
        };
        let (xi, rep) = bm_increments(&spec, SeedSpec::from(3)).unwrap();
        assert_eq!(xi.len(), 500);
        assert!(xi.iter().all(|v| *v >= 0.0));
        assert!(xi.iter().any(|v| *v > 0.0));
        assert_eq!(rep.failures, 0);
    }

    #[test]
    fn heavy_damping_plateaus_immediately() {
        let spec = BmIncrementSpec {
            sigma: 1.0,
            gamma: 0.5,
            alpha: 1e3,
            depth: 1000,
            samples: 1000,
        };
        let r = mc_increment_ladder(&spec, &[1, 10, 100, 1000], 7, 1e-2).unwrap();
        // term n survives only when xi_1 = ... = xi_n = 0, probability 2^-n
        assert!((r.ladder[0].mean - 0.5).abs() < 0.05);
        assert!((r.ladder[3].mean - 1.0).abs() < 0.1);
        assert!(r.ladder[3].mean - r.ladder[1].mean < 0.01);
        assert!(r.increments.last().unwrap().mean < 1e-2);
    }

    #[test]
    fn mc_is_deterministic_and_validates() {
        let spec = BmIncrementSpec {
            sigma: 1.0,
            gamma: 0.5,
            alpha: 0.5,
            depth: 200,
            samples: 1000,
        };
        let a = mc_increment_ladder(&spec, &[10, 100, 200], 11, 1.0).unwrap();
        let b = mc_increment_ladder(&spec, &[10, 100, 200], 11, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(mc_increment_ladder(&spec, &[100, 10], 11, 1.0).is_err());
        assert!(mc_increment_ladder(&BmIncrementSpec { samples: 10, ..spec }, &[10], 11, 1.0).is_err());
    }
}
