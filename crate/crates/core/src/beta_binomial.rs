//! Conjugate beta-binomial model.
//!
//! A Beta(α, β) prior on a success probability θ combined with `x` successes
//! in `n` Bernoulli trials yields a Beta(α + x, β + n − x) posterior. The
//! marginal likelihood of the counts is beta-binomial. Densities and
//! marginal likelihoods are returned on the natural-log scale; posteriors
//! concentrated away from a point of interest underflow in linear space.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_beta, ln_choose};

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBeta")]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawBeta {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawBeta> for BetaParams {
    type Error = Error;

    fn try_from(raw: RawBeta) -> Result<Self> {
        BetaParams::new(raw.alpha, raw.beta)
    }
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
            return Err(Error::InvalidShape { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    /// Beta(1, 1).
    pub fn uniform() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Mode, defined when both shapes exceed 1.
    pub fn mode(&self) -> Option<f64> {
        (self.alpha > 1.0 && self.beta > 1.0).then(|| (self.alpha - 1.0) / (self.alpha + self.beta - 2.0))
    }
}

impl std::fmt::Display for BetaParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Beta({}, {})", self.alpha, self.beta)
    }
}

/// `successes` out of `trials` Bernoulli trials on one measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawObservation")]
pub struct BinomialObservation {
    successes: u64,
    trials: u64,
}

#[derive(Deserialize)]
struct RawObservation {
    successes: u64,
    trials: u64,
}

impl TryFrom<RawObservation> for BinomialObservation {
    type Error = Error;

    fn try_from(raw: RawObservation) -> Result<Self> {
        BinomialObservation::new(raw.successes, raw.trials)
    }
}

impl BinomialObservation {
    pub fn new(successes: u64, trials: u64) -> Result<Self> {
        if successes > trials {
            return Err(Error::InvalidObservation { successes, trials });
        }
        Ok(Self { successes, trials })
    }

    pub fn empty() -> Self {
        Self {
            successes: 0,
            trials: 0,
        }
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn failures(&self) -> u64 {
        self.trials - self.successes
    }

    /// Counts pooled with another observation of the same measure.
    pub fn pooled(&self, other: &Self) -> Self {
        Self {
            successes: self.successes + other.successes,
            trials: self.trials + other.trials,
        }
    }
}

/// A point (θ_1, …, θ_K) with every coordinate strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::Domain { value: bad });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn update_posterior(prior: BetaParams, obs: BinomialObservation) -> BetaParams {
    BetaParams {
        alpha: prior.alpha + obs.successes as f64,
        beta: prior.beta + obs.failures() as f64,
    }
}

/// Log density of Beta(params) at `theta`, which must lie in (0, 1).
pub fn log_beta_pdf(params: BetaParams, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain { value: theta });
    }
    Ok((params.alpha - 1.0) * theta.ln() + (params.beta - 1.0) * (-theta).ln_1p() - ln_beta(params.alpha, params.beta))
}

/// Log beta-binomial probability of `obs` under a Beta(prior) on θ.
pub fn log_beta_binomial_pmf(prior: BetaParams, obs: BinomialObservation) -> f64 {
    let post = update_posterior(prior, obs);
    ln_choose(obs.trials, obs.successes) + ln_beta(post.alpha, post.beta) - ln_beta(prior.alpha, prior.beta)
}

/// Sum of per-coordinate log densities of independent Betas.
pub fn joint_log_pdf(params: &[BetaParams], theta: &ParamVector) -> Result<f64> {
    if params.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            what: "theta",
            expected: params.len(),
            found: theta.len(),
        });
    }
    params
        .iter()
        .zip(theta.as_slice())
        .map(|(p, &t)| log_beta_pdf(*p, t))
        .sum()
}

/// A Beta sampler bound to a fixed shape pair.
///
/// Draws use `rand_distr::Beta` (Cheng's BB/BC rejection algorithms), which
/// consumes only the supplied generator, so a fixed stream reproduces the
/// same draws.
#[derive(Debug, Clone, Copy)]
pub struct BetaSampler(Beta<f64>);

impl BetaSampler {
    pub fn new(params: BetaParams) -> Self {
        // Shapes are validated positive and finite on construction.
        Self(Beta::new(params.alpha, params.beta).expect("validated Beta shapes"))
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.0.sample(rng)
    }
}

pub fn sample_beta<R: Rng + ?Sized>(params: BetaParams, count: usize, stream: &mut R) -> Vec<f64> {
    let sampler = BetaSampler::new(params);
    (0..count).map(|_| sampler.draw(stream)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::special::reg_inc_beta;
    use proptest::prelude::*;

    // ln Beta(25,29) density at 0.5 and ln Beta(42,12) density at 0.5, from the
    // closed form evaluated in 40-digit arithmetic (mpmath).
    const GOLDEN_LN_PDF_25_29: f64 = 1.613_002_292_219_896_765_533_845_119_545_4;
    const GOLDEN_LN_PDF_42_12: f64 = -7.249_044_799_821_838_133_689_626_681_019_9;

    fn beta(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    fn obs(x: u64, n: u64) -> BinomialObservation {
        BinomialObservation::new(x, n).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        for (a, b) in [(0.0, 1.0), (1.0, -2.0), (f64::INFINITY, 1.0), (f64::NAN, 1.0)] {
            assert!(BetaParams::new(a, b).is_err());
        }
        assert!(BinomialObservation::new(3, 2).is_err());
        assert!(ParamVector::new(vec![0.2, 1.0]).is_err());
    }

    #[test]
    fn update_examples() {
        let u = BetaParams::uniform();
        assert_eq!(update_posterior(u, obs(24, 52)), beta(25.0, 29.0));
        assert_eq!(update_posterior(u, obs(41, 52)), beta(42.0, 12.0));
        let p = beta(2.5, 7.0);
        assert_eq!(update_posterior(p, BinomialObservation::empty()), p);
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(log_beta_pdf(BetaParams::uniform(), 0.5).unwrap(), 0.0);
        assert!(log_beta_pdf(beta(2.0, 1.0), 0.5).unwrap().abs() < 1e-15);
        let got = log_beta_pdf(beta(25.0, 29.0), 0.5).unwrap();
        assert!((got - GOLDEN_LN_PDF_25_29).abs() < 1e-12, "{got}");
        let got = log_beta_pdf(beta(42.0, 12.0), 0.5).unwrap();
        assert!((got - GOLDEN_LN_PDF_42_12).abs() < 1e-12, "{got}");
        for t in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(log_beta_pdf(beta(2.0, 2.0), t), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn marginal_examples() {
        let u = BetaParams::uniform();
        assert_eq!(log_beta_binomial_pmf(u, obs(0, 0)), 0.0);
        for n in [1u64, 7, 52] {
            for x in 0..=n {
                let got = log_beta_binomial_pmf(u, obs(x, n));
                assert!((got - (1.0 / (n as f64 + 1.0)).ln()).abs() < 1e-12);
            }
        }
        // C(2,1) B(3,3) / B(2,2) = 2 * (1/30) / (1/6) = 2/5
        let got = log_beta_binomial_pmf(beta(2.0, 2.0), obs(1, 2)).exp();
        assert!((got - 0.4).abs() < 1e-14);
    }

    #[test]
    fn marginal_sums_to_one() {
        for prior in [beta(0.5, 0.5), beta(2.0, 5.0), beta(42.0, 12.0), beta(1.3, 100.0)] {
            for n in 0..=50u64 {
                let total: f64 = (0..=n).map(|x| log_beta_binomial_pmf(prior, obs(x, n)).exp()).sum();
                assert!((total - 1.0).abs() < 1e-10, "{prior} n={n} total={total}");
            }
        }
    }

    #[test]
    fn joint_pdf() {
        let u = BetaParams::uniform();
        let half = ParamVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(joint_log_pdf(&[u, u], &half).unwrap(), 0.0);
        let single = ParamVector::new(vec![0.3]).unwrap();
        let p = beta(3.0, 4.5);
        assert_eq!(joint_log_pdf(&[p], &single).unwrap(), log_beta_pdf(p, 0.3).unwrap());
        let got = joint_log_pdf(&[beta(42.0, 12.0), beta(25.0, 29.0)], &half).unwrap();
        assert!((got - (GOLDEN_LN_PDF_42_12 + GOLDEN_LN_PDF_25_29)).abs() < 1e-12);
        assert!(matches!(
            joint_log_pdf(&[u], &half),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    // Simpson's rule after t = sin^2(u), which turns the Beta(a, b) density
    // into 2 sin^(2a-1)(u) cos^(2b-1)(u) / B(a, b): bounded for a, b >= 0.5.
    fn integrate_density(p: BetaParams) -> f64 {
        let n = 200_000;
        let h = std::f64::consts::FRAC_PI_2 / n as f64;
        let ln_norm = std::f64::consts::LN_2 - ln_beta(p.alpha, p.beta);
        let pow = |base: f64, e: f64| if e == 0.0 { 1.0 } else { base.powf(e) };
        let f = |u: f64| {
            let (s, c) = u.sin_cos();
            ln_norm.exp() * pow(s.max(0.0), 2.0 * p.alpha - 1.0) * pow(c.max(0.0), 2.0 * p.beta - 1.0)
        };
        let mut sum = f(0.0) + f(std::f64::consts::FRAC_PI_2);
        for i in 1..n {
            sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        sum * h / 3.0
    }

    #[test]
    fn densities_normalize() {
        let shapes = [0.5, 1.0, 2.0, 25.0, 42.0, 100.0];
        for &a in &shapes {
            for &b in &shapes {
                let total = integrate_density(beta(a, b));
                assert!((total - 1.0).abs() < 1e-6, "Beta({a},{b}) integrates to {total}");
            }
        }
    }

    #[test]
    fn chained_equals_pooled() {
        let p = beta(1.0, 1.0);
        let (a, b) = (obs(41, 52), obs(25, 29));
        assert_eq!(
            update_posterior(update_posterior(p, a), b),
            update_posterior(p, a.pooled(&b))
        );
    }

    proptest! {
        #[test]
        fn conjugacy_pointwise(
            a in 0.3f64..60.0, b in 0.3f64..60.0, n in 0u64..80, frac in 0.0f64..=1.0
        ) {
            let x = ((n as f64) * frac).round() as u64;
            let prior = beta(a, b);
            let post = update_posterior(prior, obs(x, n));
            let grid: Vec<f64> = (1..40).map(|i| i as f64 / 40.0).collect();
            let log_ratio = |t: f64| {
                log_beta_pdf(post, t).unwrap()
                    - (log_beta_pdf(prior, t).unwrap() + x as f64 * t.ln() + (n - x) as f64 * (1.0 - t).ln())
            };
            let c = log_ratio(grid[0]);
            for &t in &grid[1..] {
                let rel = (log_ratio(t) - c).exp() - 1.0;
                prop_assert!(rel.abs() < 1e-10, "t={t} rel={rel:e}");
            }
        }

        #[test]
        fn chained_updates_pool(
            a in 1u32..200, b in 1u32..200, frac_a in 0.05f64..10.0,
            n1 in 0u64..100, n2 in 0u64..100, f1 in 0.0f64..=1.0, f2 in 0.0f64..=1.0,
        ) {
            let o1 = obs((n1 as f64 * f1) as u64, n1);
            let o2 = obs((n2 as f64 * f2) as u64, n2);
            // integer shapes: exact
            let p = beta(a as f64, b as f64);
            prop_assert_eq!(update_posterior(update_posterior(p, o1), o2), update_posterior(p, o1.pooled(&o2)));
            // fractional shapes: equal up to rounding of the additions
            let q = beta(frac_a, 1.0 / frac_a);
            let (x, y) = (update_posterior(update_posterior(q, o1), o2), update_posterior(q, o1.pooled(&o2)));
            prop_assert!((x.alpha() - y.alpha()).abs() <= 1e-12 * y.alpha());
            prop_assert!((x.beta() - y.beta()).abs() <= 1e-12 * y.beta());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = beta(25.0, 29.0);
        let a = sample_beta(p, 100, &mut RngStream::new(7, 0));
        let b = sample_beta(p, 100, &mut RngStream::new(7, 0));
        assert_eq!(a, b);
        let c = sample_beta(p, 100, &mut RngStream::new(8, 0));
        assert_ne!(a, c);
    }

    #[test]
    fn sample_means() {
        let n = 1_000_000;
        for (p, seed) in [(BetaParams::uniform(), 11u64), (beta(42.0, 12.0), 12)] {
            let xs = sample_beta(p, n, &mut RngStream::new(seed, 0));
            let mean = xs.iter().sum::<f64>() / n as f64;
            let (a, b) = (p.alpha(), p.beta());
            let var = a * b / ((a + b).powi(2) * (a + b + 1.0));
            let se = (var / n as f64).sqrt();
            assert!((mean - p.mean()).abs() < 3.0 * se, "{p}: mean {mean}");
        }
    }

    #[test]
    fn sample_cdf_matches_incomplete_beta() {
        let n = 1_000_000;
        for (p, seed) in [(beta(25.0, 29.0), 21u64), (beta(0.5, 0.5), 22), (beta(2.0, 9.0), 23)] {
            let mut xs = sample_beta(p, n, &mut RngStream::new(seed, 0));
            xs.sort_by(f64::total_cmp);
            for d in 1..10 {
                // empirical decile; its population CDF value should be d/10
                let t = xs[n * d / 10];
                let below = (n * d / 10) as f64 / n as f64;
                let cdf = reg_inc_beta(p.alpha(), p.beta(), t);
                let se = (cdf * (1.0 - cdf) / n as f64).sqrt();
                assert!((below - cdf).abs() < 3.0 * se.max(1e-7), "{p} t={t}: {below} vs {cdf}");
            }
        }
    }
}
