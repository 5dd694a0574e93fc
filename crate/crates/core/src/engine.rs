//! Bayes factor computation.
//!
//! * [`encompassing_bf`]: Monte Carlo estimate of `BF_er`, the proportion of
//!   prior draws inside the restricted region over the proportion of
//!   posterior draws inside it.
//! * [`savage_dickey_bf`]: analytic `BF_e0`, prior density over posterior
//!   density at the null point.
//! * [`compose`]: transitivity, `BF_ac = BF_ab × BF_bc`.
//!
//! Log Bayes factors are the primitive; linear values are derived.
//!
//! Sampling is chunked. Chunk `c` of the prior leg draws from stream
//! `PRIOR_STREAM_BASE + c` of the run seed, chunk `c` of the posterior leg
//! from `POSTERIOR_STREAM_BASE + c`. Chunk counts are combined by integer
//! addition, so results do not depend on how chunks are scheduled.

use serde::{Deserialize, Serialize};

use crate::beta_binomial::{update_posterior, BetaParams, BetaSampler, BinomialObservation, ParamVector};
use crate::constraints::{ConstraintSet, PointNull};
use crate::error::{Error, Result};
use crate::joint_log_pdf;
use crate::rng::StreamKey;

pub const PRIOR_STREAM_BASE: u64 = 0;
pub const POSTERIOR_STREAM_BASE: u64 = 1 << 32;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;

/// Monte Carlo settings for the encompassing-prior estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    /// Number of prior draws (I).
    pub prior_samples: u64,
    /// Number of posterior draws (J).
    pub posterior_samples: u64,
    pub seed: u64,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: u64,
}

fn default_chunk_size() -> u64 {
    DEFAULT_CHUNK_SIZE
}

impl McSettings {
    /// I = J = 10^6 with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            prior_samples: DEFAULT_SAMPLES,
            posterior_samples: DEFAULT_SAMPLES,
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn samples(mut self, n: u64) -> Self {
        self.prior_samples = n;
        self.posterior_samples = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.prior_samples == 0 || self.posterior_samples == 0 {
            return Err(Error::Plan(
                "prior_samples and posterior_samples must be at least 1".into(),
            ));
        }
        if self.chunk_size == 0 {
            return Err(Error::Plan("chunk_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// The three hypotheses a Bayes factor can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Point null, H_0.
    #[serde(rename = "0")]
    Null,
    /// Unconstrained encompassing model, H_e.
    #[serde(rename = "e")]
    Encompassing,
    /// Order-restricted model, H_r.
    #[serde(rename = "r")]
    Restricted,
}

impl Hypothesis {
    pub fn symbol(self) -> &'static str {
        match self {
            Hypothesis::Null => "0",
            Hypothesis::Encompassing => "e",
            Hypothesis::Restricted => "r",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "0" => Some(Hypothesis::Null),
            "e" => Some(Hypothesis::Encompassing),
            "r" => Some(Hypothesis::Restricted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    EncompassingMc,
    SavageDickey,
    Composed,
    /// No observations: posterior equals prior, so the factor is exactly 1.
    NoData,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::EncompassingMc => "encompassing_mc",
            Method::SavageDickey => "savage_dickey",
            Method::Composed => "composed",
            Method::NoData => "no_data",
        }
    }
}

/// Monte Carlo standard error of a log Bayes factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogSe {
    /// No sampling error: the value is analytic.
    Exact,
    Estimated(f64),
}

impl LogSe {
    pub fn value(self) -> f64 {
        match self {
            LogSe::Exact => 0.0,
            LogSe::Estimated(se) => se,
        }
    }
}

/// A Bayes factor `BF_{numerator, denominator}` with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesFactorEstimate {
    pub numerator: Hypothesis,
    pub denominator: Hypothesis,
    pub log_bf: f64,
    /// `exp(log_bf)`; `None` when that is not representable as a finite f64.
    pub bf: Option<f64>,
    pub mc_log_se: LogSe,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_prior_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_post_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn linear(log_bf: f64) -> Option<f64> {
    let bf = log_bf.exp();
    (bf.is_finite() && (bf > 0.0 || log_bf == f64::NEG_INFINITY)).then_some(bf)
}

impl BayesFactorEstimate {
    fn analytic(numerator: Hypothesis, denominator: Hypothesis, log_bf: f64, method: Method) -> Self {
        Self {
            numerator,
            denominator,
            log_bf,
            bf: linear(log_bf),
            mc_log_se: LogSe::Exact,
            method,
            p_prior_hat: None,
            p_post_hat: None,
            prior_count: None,
            posterior_count: None,
            prior_samples: None,
            posterior_samples: None,
            seed: None,
            warnings: Vec::new(),
        }
    }

    /// A Bayes factor of exactly 1 between two hypotheses.
    pub fn unit(numerator: Hypothesis, denominator: Hypothesis) -> Self {
        Self::analytic(numerator, denominator, 0.0, Method::Composed)
    }

    /// `BF_ab = 1` because the data are empty.
    pub fn no_data(numerator: Hypothesis, denominator: Hypothesis) -> Self {
        Self::analytic(numerator, denominator, 0.0, Method::NoData)
    }

    /// `BF_ab` as a label such as `BF_r0`.
    pub fn label(&self) -> String {
        format!("BF_{}{}", self.numerator.symbol(), self.denominator.symbol())
    }

    /// The same comparison in the opposite direction.
    pub fn reciprocal(&self) -> Self {
        let mut out = self.clone();
        out.numerator = self.denominator;
        out.denominator = self.numerator;
        // `+ 0.0` keeps an exact zero unsigned
        out.log_bf = -self.log_bf + 0.0;
        out.bf = linear(out.log_bf);
        out
    }

    pub fn evidence(&self) -> Evidence {
        Evidence::classify(self.log_bf)
    }
}

/// Jeffreys-style evidence categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    None,
    Anecdotal,
    Moderate,
    Strong,
    VeryStrong,
    Extreme,
}

impl Evidence {
    /// Category of the evidence carried by a Bayes factor, whichever
    /// direction it points.
    pub fn classify(log_bf: f64) -> Self {
        let b = log_bf.abs().exp();
        if log_bf == 0.0 {
            Evidence::None
        } else if b <= 3.0 {
            Evidence::Anecdotal
        } else if b <= 10.0 {
            Evidence::Moderate
        } else if b <= 30.0 {
            Evidence::Strong
        } else if b <= 100.0 {
            Evidence::VeryStrong
        } else {
            Evidence::Extreme
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Evidence::None => "no evidence",
            Evidence::Anecdotal => "anecdotal",
            Evidence::Moderate => "moderate",
            Evidence::Strong => "strong",
            Evidence::VeryStrong => "very strong",
            Evidence::Extreme => "extreme",
        }
    }
}

/// Raw result of counting draws inside a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionCount {
    pub count: u64,
    pub samples: u64,
}

impl RegionCount {
    pub fn proportion(&self) -> f64 {
        self.count as f64 / self.samples as f64
    }
}

/// Counts joint draws (coordinate `k` from `Beta(params[k])`) for which
/// `inside` holds. Chunk `c` uses stream `base.stream + c`.
pub fn count_draws<F>(params: &[BetaParams], n_samples: u64, base: StreamKey, chunk_size: u64, inside: F) -> RegionCount
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let samplers: Vec<BetaSampler> = params.iter().map(|p| BetaSampler::new(*p)).collect();
    let chunk_size = chunk_size.max(1);
    let n_chunks = n_samples.div_ceil(chunk_size);
    let run_chunk = |c: u64| -> u64 {
        let mut rng = base.offset(c).open();
        let len = chunk_size.min(n_samples - c * chunk_size);
        let mut theta = vec![0.0; samplers.len()];
        let mut hits = 0u64;
        for _ in 0..len {
            for (slot, s) in theta.iter_mut().zip(&samplers) {
                *slot = s.draw(&mut rng);
            }
            hits += inside(&theta) as u64;
        }
        hits
    };

    #[cfg(feature = "parallel")]
    let count = {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(run_chunk).sum()
    };
    #[cfg(not(feature = "parallel"))]
    let count = (0..n_chunks).map(run_chunk).sum();

    RegionCount {
        count,
        samples: n_samples,
    }
}

/// Proportion of joint Beta draws satisfying `cs`.
pub fn proportion_in_region(
    params: &[BetaParams],
    cs: &ConstraintSet,
    n_samples: u64,
    base: StreamKey,
    chunk_size: u64,
) -> Result<RegionCount> {
    check_len("params", cs.k(), params.len())?;
    if n_samples == 0 {
        return Err(Error::Plan("sample count must be at least 1".into()));
    }
    Ok(count_draws(params, n_samples, base, chunk_size, |t| cs.contains(t)))
}

/// Proportion of joint Beta draws inside the box `lower < θ < upper`
/// (coordinate-wise, strict).
pub fn proportion_in_box(
    params: &[BetaParams],
    lower: &[f64],
    upper: &[f64],
    n_samples: u64,
    base: StreamKey,
    chunk_size: u64,
) -> Result<RegionCount> {
    check_len("lower", params.len(), lower.len())?;
    check_len("upper", params.len(), upper.len())?;
    Ok(count_draws(params, n_samples, base, chunk_size, |t| {
        t.iter()
            .zip(lower.iter().zip(upper))
            .all(|(x, (lo, hi))| lo < x && x < hi)
    }))
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { what, expected, found });
    }
    Ok(())
}

/// Conjugate posteriors for each coordinate.
pub fn posteriors(priors: &[BetaParams], data: &[BinomialObservation]) -> Result<Vec<BetaParams>> {
    check_len("data", priors.len(), data.len())?;
    Ok(priors.iter().zip(data).map(|(p, x)| update_posterior(*p, *x)).collect())
}

/// Delta-method standard error of `ln(p_prior / p_post)`.
pub fn mc_standard_error(p_prior_hat: f64, prior_samples: u64, p_post_hat: f64, posterior_samples: u64) -> Result<f64> {
    for p in [p_prior_hat, p_post_hat] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::SaturatedProportion(p));
        }
    }
    Ok((leg_variance(p_prior_hat, prior_samples) + leg_variance(p_post_hat, posterior_samples)).sqrt())
}

fn leg_variance(p: f64, n: u64) -> f64 {
    (1.0 - p) / (n as f64 * p)
}

/// Encompassing-prior estimate of `BF_er`.
pub fn encompassing_bf(
    priors: &[BetaParams],
    data: &[BinomialObservation],
    cs: &ConstraintSet,
    mc: &McSettings,
) -> Result<BayesFactorEstimate> {
    mc.validate()?;
    check_len("priors", cs.k(), priors.len())?;
    cs.validate()?;
    let posts = posteriors(priors, data)?;

    let prior = proportion_in_region(
        priors,
        cs,
        mc.prior_samples,
        StreamKey::new(mc.seed, PRIOR_STREAM_BASE),
        mc.chunk_size,
    )?;
    let post = proportion_in_region(
        &posts,
        cs,
        mc.posterior_samples,
        StreamKey::new(mc.seed, POSTERIOR_STREAM_BASE),
        mc.chunk_size,
    )?;
    estimate_from_counts(prior, post, mc.seed)
}

/// Builds the `BF_er` estimate from the two region counts.
pub fn estimate_from_counts(prior: RegionCount, post: RegionCount, seed: u64) -> Result<BayesFactorEstimate> {
    if prior.count == 0 || post.count == 0 {
        return Err(Error::DegenerateCount {
            prior_count: prior.count,
            prior_samples: prior.samples,
            posterior_count: post.count,
            posterior_samples: post.samples,
        });
    }
    let (p_prior, p_post) = (prior.proportion(), post.proportion());
    let log_bf = p_prior.ln() - p_post.ln();

    let mut warnings = Vec::new();
    // A leg at proportion 1 has zero delta-method variance; report that
    // rather than failing, since p = 1 is a legitimate outcome for weak
    // restrictions.
    let se = match mc_standard_error(p_prior, prior.samples, p_post, post.samples) {
        Ok(se) => se,
        Err(_) => {
            for (name, p) in [("prior", p_prior), ("posterior", p_post)] {
                if p >= 1.0 {
                    warnings.push(format!(
                        "all {name} draws satisfy the restriction; that leg contributes no Monte Carlo error estimate"
                    ));
                }
            }
            (leg_variance(p_prior, prior.samples) + leg_variance(p_post, post.samples)).sqrt()
        }
    };

    Ok(BayesFactorEstimate {
        numerator: Hypothesis::Encompassing,
        denominator: Hypothesis::Restricted,
        log_bf,
        bf: linear(log_bf),
        mc_log_se: LogSe::Estimated(se),
        method: Method::EncompassingMc,
        p_prior_hat: Some(p_prior),
        p_post_hat: Some(p_post),
        prior_count: Some(prior.count),
        posterior_count: Some(post.count),
        prior_samples: Some(prior.samples),
        posterior_samples: Some(post.samples),
        seed: Some(seed),
        warnings,
    })
}

/// Savage-Dickey density ratio `BF_e0`: joint prior density at the null point
/// over joint posterior density there.
pub fn savage_dickey_bf(
    priors: &[BetaParams],
    data: &[BinomialObservation],
    point: &PointNull,
) -> Result<BayesFactorEstimate> {
    check_len("point null", priors.len(), point.k())?;
    let posts = posteriors(priors, data)?;
    let at = ParamVector::new(point.values().to_vec())?;
    let log_bf = joint_log_pdf(priors, &at)? - joint_log_pdf(&posts, &at)?;
    Ok(BayesFactorEstimate::analytic(
        Hypothesis::Encompassing,
        Hypothesis::Null,
        log_bf,
        Method::SavageDickey,
    ))
}

/// Chains `BF_ab` and `BF_bc` into `BF_ac`.
pub fn compose(ab: &BayesFactorEstimate, bc: &BayesFactorEstimate) -> Result<BayesFactorEstimate> {
    if ab.denominator != bc.numerator {
        return Err(Error::LabelMismatch {
            first: format!("{}{}", ab.numerator.symbol(), ab.denominator.symbol()),
            second: format!("{}{}", bc.numerator.symbol(), bc.denominator.symbol()),
        });
    }
    let log_bf = ab.log_bf + bc.log_bf;
    let mc_log_se = match (ab.mc_log_se, bc.mc_log_se) {
        (LogSe::Exact, LogSe::Exact) => LogSe::Exact,
        (x, y) => LogSe::Estimated(x.value().hypot(y.value())),
    };
    let mut out = BayesFactorEstimate::analytic(ab.numerator, bc.denominator, log_bf, Method::Composed);
    out.mc_log_se = mc_log_se;
    out.seed = ab.seed.or(bc.seed);
    out.warnings = ab.warnings.iter().chain(&bc.warnings).cloned().collect();
    Ok(out)
}
