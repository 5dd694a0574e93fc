//! Deterministic reference values for small K.
//!
//! Nothing here touches the sampling path: region probabilities come from
//! one-dimensional adaptive quadrature (K = 2) or a midpoint grid (K ≤ 3),
//! with the Beta CDF from the continued-fraction incomplete beta function.

use std::f64::consts::FRAC_PI_2;

use crate::beta_binomial::BetaParams;
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::special::{ln_beta, reg_inc_beta};

/// Absolute error target of [`exact_pairwise_order_prob`].
pub const PAIRWISE_TOLERANCE: f64 = 1e-11;
/// Subdivision budget of the adaptive quadrature.
pub const MAX_SUBINTERVALS: usize = 4000;

fn beta_pdf(p: BetaParams, t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    ((p.alpha() - 1.0) * t.ln() + (p.beta() - 1.0) * (-t).ln_1p() - ln_beta(p.alpha(), p.beta())).exp()
}

/// `P(θ_a < θ_b)` for independent `θ_a ~ Beta(a)`, `θ_b ~ Beta(b)`, computed
/// as `∫ pdf_b(t) CDF_a(t) dt` over (0, 1).
///
/// The integral is taken in `u` with `t = sin²(u)`, whose Jacobian
/// `sin(2u)` cancels the endpoint singularities of shapes down to 0.5.
pub fn exact_pairwise_order_prob(a: BetaParams, b: BetaParams) -> Result<f64> {
    let to_u = |t: f64| t.sqrt().asin();
    // Seed the partition with both means so narrow peaks are not missed.
    let mut breaks = vec![0.0, FRAC_PI_2, to_u(a.mean()), to_u(b.mean())];
    breaks.extend((1..16).map(|i| FRAC_PI_2 * i as f64 / 16.0));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let integrand = |u: f64| {
        let s = u.sin();
        let t = s * s;
        beta_pdf(b, t) * reg_inc_beta(a.alpha(), a.beta(), t) * (2.0 * u).sin()
    };
    let value = integrate(integrand, &breaks, PAIRWISE_TOLERANCE)?;
    Ok(value.clamp(0.0, 1.0))
}

/// Natural log of `BF_er` for a single relation between two parameters,
/// from exact prior and posterior region probabilities.
pub fn exact_bf_er_pairwise(priors: [BetaParams; 2], posteriors: [BetaParams; 2], cs: &ConstraintSet) -> Result<f64> {
    if cs.k() != 2 || cs.relations().len() != 1 {
        return Err(Error::Unsupported(
            "exact pairwise Bayes factor needs K = 2 and exactly one relation".into(),
        ));
    }
    let (lo, hi) = cs.relations()[0];
    let prior = exact_pairwise_order_prob(priors[lo], priors[hi])?;
    let post = exact_pairwise_order_prob(posteriors[lo], posteriors[hi])?;
    Ok(prior.ln() - post.ln())
}

/// Midpoint-rule probability that joint Beta draws satisfy `cs`, for K ≤ 3.
///
/// Each axis is cut into `resolution` cells; a cell contributes its midpoint
/// density times its volume if its centre satisfies `cs`. The error is
/// O(1/resolution) from cells straddling the region boundary for shapes of
/// at least 1; shapes below 1 put unbounded density in the edge cells and
/// converge more slowly.
pub fn grid_order_prob(params: &[BetaParams], cs: &ConstraintSet, resolution: usize) -> Result<f64> {
    let k = params.len();
    if k != cs.k() {
        return Err(Error::DimensionMismatch {
            what: "params",
            expected: cs.k(),
            found: k,
        });
    }
    if k > 3 {
        return Err(Error::Unsupported(format!(
            "grid oracle is limited to K <= 3, got K = {k}"
        )));
    }
    if resolution < 100 {
        return Err(Error::Unsupported(format!(
            "grid resolution must be at least 100, got {resolution}"
        )));
    }
    let h = 1.0 / resolution as f64;
    let centers: Vec<f64> = (0..resolution).map(|i| (i as f64 + 0.5) * h).collect();
    let weights: Vec<Vec<f64>> = params
        .iter()
        .map(|p| centers.iter().map(|&c| beta_pdf(*p, c) * h).collect())
        .collect();

    let mut total = 0.0;
    let mut theta = [0.0; 3];
    let mut idx = [0usize; 3];
    let cells = resolution.pow(k as u32);
    for _ in 0..cells {
        let mut w = 1.0;
        for d in 0..k {
            theta[d] = centers[idx[d]];
            w *= weights[d][idx[d]];
        }
        if cs.contains(&theta[..k]) {
            total += w;
        }
        // odometer increment
        for slot in idx.iter_mut().take(k) {
            *slot += 1;
            if *slot < resolution {
                break;
            }
            *slot = 0;
        }
    }
    Ok(total)
}

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7-K15 panel: (Kronrod estimate, |Kronrod − Gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod integration over the partition `breaks`:
/// the panel with the largest error estimate is bisected until the summed
/// error drops below `tolerance`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tolerance: f64) -> Result<f64> {
    struct Panel {
        lo: f64,
        hi: f64,
        value: f64,
        error: f64,
    }
    let mut panels: Vec<Panel> = breaks
        .windows(2)
        .map(|w| {
            let (value, error) = gk15(&f, w[0], w[1]);
            Panel {
                lo: w[0],
                hi: w[1],
                value,
                error,
            }
        })
        .collect();

    loop {
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= tolerance {
            return Ok(panels.iter().map(|p| p.value).sum());
        }
        if panels.len() >= MAX_SUBINTERVALS {
            return Err(Error::Quadrature {
                achieved: error,
                tolerance,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { lo, hi, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature {
                achieved: error,
                tolerance,
            });
        }
        for (a, b) in [(lo, mid), (mid, hi)] {
            let (value, error) = gk15(&f, a, b);
            panels.push(Panel {
                lo: a,
                hi: b,
                value,
                error,
            });
        }
    }
}
