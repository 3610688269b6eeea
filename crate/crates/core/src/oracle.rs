//! Population-level criteria.
//!
//! Closed forms for a single Gaussian feature, and a Monte Carlo estimate for any
//! of the generative models in [`crate::simulate`], where the true density ratio
//! is known.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;
use thiserror::Error;

use crate::simulate::Model;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("standard deviations must be positive and finite (got {0}, {1})")]
    InvalidSigma(f64, f64),
    #[error("means must be finite")]
    InvalidMean,
    #[error("{name} must lie in (0, 1), got {value}")]
    OutOfUnitInterval { name: &'static str, value: f64 },
    #[error("sample size must be positive")]
    EmptySample,
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail `1 - Phi(x)`, accurate far into the tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile; `-inf` at 0 and `inf` at 1.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // Halley refinement against the accurate CDF
    for _ in 0..2 {
        let e = if x < 0.0 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - normal_sf(x)
        };
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf == 0.0 {
            break;
        }
        let u = e / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

fn unit(name: &'static str, value: f64) -> Result<f64, OracleError> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(OracleError::OutOfUnitInterval { name, value })
    }
}

/// Class-conditional normal distributions of one feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFeature {
    mu0: f64,
    sigma0: f64,
    mu1: f64,
    sigma1: f64,
}

impl GaussianFeature {
    pub fn new(mu0: f64, sigma0: f64, mu1: f64, sigma1: f64) -> Result<Self, OracleError> {
        let ok = |s: f64| s > 0.0 && s.is_finite();
        if !ok(sigma0) || !ok(sigma1) {
            return Err(OracleError::InvalidSigma(sigma0, sigma1));
        }
        if !mu0.is_finite() || !mu1.is_finite() {
            return Err(OracleError::InvalidMean);
        }
        Ok(Self {
            mu0,
            sigma0,
            mu1,
            sigma1,
        })
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }
    pub fn mu1(&self) -> f64 {
        self.mu1
    }
    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    /// `sigma0 / sigma1`.
    pub fn sd_ratio(&self) -> f64 {
        self.sigma0 / self.sigma1
    }

    /// `|mu1 - mu0| / sigma1`.
    pub fn standardized_gap(&self) -> f64 {
        (self.mu1 - self.mu0).abs() / self.sigma1
    }
}

/// Type II error of the level-`alpha` one-sided threshold rule that points
/// toward the class-1 mean.
pub fn gaussian_np_type2(f: &GaussianFeature, alpha: f64) -> Result<f64, OracleError> {
    let alpha = unit("alpha", alpha)?;
    Ok(if f.mu1 >= f.mu0 {
        let c = f.mu0 + f.sigma0 * normal_quantile(1.0 - alpha);
        normal_cdf((c - f.mu1) / f.sigma1)
    } else {
        let c = f.mu0 + f.sigma0 * normal_quantile(alpha);
        normal_sf((c - f.mu1) / f.sigma1)
    })
}

/// `P(a < X < b)` for `X ~ N(mu, sigma^2)`, with infinite ends allowed.
fn normal_interval(a: f64, b: f64, mu: f64, sigma: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let za = (a - mu) / sigma;
    let zb = (b - mu) / sigma;
    // use whichever tail keeps precision
    if za > 0.0 {
        normal_sf(za) - normal_sf(zb)
    } else {
        normal_cdf(zb) - normal_cdf(za)
    }
}

/// Risk of the Bayes rule `1(pi1 p1(x) > pi0 p0(x))` for one Gaussian feature.
///
/// The log-ratio is quadratic in `x`; its roots split the line into at most three
/// intervals, and the risk is a sum of normal interval probabilities.
pub fn gaussian_classical_risk(f: &GaussianFeature, pi0: f64) -> Result<f64, OracleError> {
    let pi0 = unit("pi0", pi0)?;
    let pi1 = 1.0 - pi0;
    let (v0, v1) = (f.sigma0 * f.sigma0, f.sigma1 * f.sigma1);
    // log(pi1 p1 / (pi0 p0)) = a x^2 + b x + c
    let a = 0.5 / v0 - 0.5 / v1;
    let b = f.mu1 / v1 - f.mu0 / v0;
    let c = f.mu0 * f.mu0 / (2.0 * v0) - f.mu1 * f.mu1 / (2.0 * v1)
        + (pi1 / pi0).ln()
        + (f.sigma0 / f.sigma1).ln();
    let q = |x: f64| (a * x + b) * x + c;

    let mut cuts: Vec<f64> = Vec::new();
    if a == 0.0 {
        if b != 0.0 {
            cuts.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc > 0.0 {
            let s = disc.sqrt();
            let t = -0.5 * (b + if b >= 0.0 { s } else { -s });
            let (r1, r2) = (t / a, c / t);
            cuts.push(r1.min(r2));
            cuts.push(r1.max(r2));
        }
    }
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(cuts);
    edges.push(f64::INFINITY);

    let mut risk = 0.0;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let probe = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0 + lo.abs(),
            (false, true) => hi - 1.0 - hi.abs(),
            (false, false) => 0.0,
        };
        if q(probe) > 0.0 {
            // predicted class 1: class-0 mass here is a false alarm
            risk += pi0 * normal_interval(lo, hi, f.mu0, f.sigma0);
        } else {
            risk += pi1 * normal_interval(lo, hi, f.mu1, f.sigma1);
        }
    }
    Ok(risk)
}

/// Whether NP rankings of two Gaussian features can be alpha-dependent:
/// `true` iff their `sigma0 / sigma1` ratios agree within `tol`.
pub fn alpha_invariant(f1: &GaussianFeature, f2: &GaussianFeature, tol: f64) -> bool {
    (f1.sd_ratio() - f2.sd_ratio()).abs() <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationCriterion {
    Classical,
    NeymanPearson { alpha: f64 },
}

/// A Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn estimate(hits: usize, total: usize) -> PopulationEstimate {
    let p = hits as f64 / total as f64;
    PopulationEstimate {
        value: p,
        std_error: (p * (1.0 - p) / total as f64).sqrt(),
    }
}

const POPULATION_STREAM: u64 = u64::MAX;

/// Population criterion of every feature of `model`, estimated from one large
/// sample scored with the model's true density ratio.
///
/// * Classical: risk of `1(p1/p0 > pi0/pi1)` over the whole sample.
/// * Neyman-Pearson: threshold at the empirical `1 - alpha` quantile of class-0
///   scores, then the fraction of class-1 scores at or below it.
pub fn mc_population_criterion(
    model: &Model,
    criterion: PopulationCriterion,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<PopulationEstimate>, OracleError> {
    if sample_size == 0 {
        return Err(OracleError::EmptySample);
    }
    if let PopulationCriterion::NeymanPearson { alpha } = criterion {
        unit("alpha", alpha)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stream 0 builds models and low streams draw replicates
    rng.set_stream(POPULATION_STREAM);
    let data = model.sample(sample_size, &mut rng);
    let labels = data.labels();
    let log_prior_ratio = ((1.0 - model.prior1) / model.prior1).ln();

    Ok(model
        .features
        .iter()
        .enumerate()
        .map(|(j, fm)| {
            let scores: Vec<f64> = data
                .column(j)
                .iter()
                .map(|&x| fm.log_density_ratio(x))
                .collect();
            match criterion {
                PopulationCriterion::Classical => {
                    let wrong = scores
                        .iter()
                        .zip(labels)
                        .filter(|(&s, &l)| (s > log_prior_ratio) != (l == 1))
                        .count();
                    estimate(wrong, scores.len())
                }
                PopulationCriterion::NeymanPearson { alpha } => {
                    let mut s0: Vec<f64> = scores
                        .iter()
                        .zip(labels)
                        .filter_map(|(&s, &l)| (l == 0).then_some(s))
                        .collect();
                    s0.sort_unstable_by(f64::total_cmp);
                    let k = ((1.0 - alpha) * s0.len() as f64).ceil() as usize;
                    let threshold = s0[k.clamp(1, s0.len()) - 1];
                    let s1: Vec<f64> = scores
                        .iter()
                        .zip(labels)
                        .filter_map(|(&s, &l)| (l == 1).then_some(s))
                        .collect();
                    let missed = s1.iter().filter(|&&s| s <= threshold).count();
                    estimate(missed, s1.len())
                }
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::ModelKind;

    fn g(mu0: f64, s0: f64, mu1: f64, s1: f64) -> GaussianFeature {
        GaussianFeature::new(mu0, s0, mu1, s1).unwrap()
    }

    #[test]
    fn normal_helpers() {
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
        assert!((normal_quantile(0.01) + 2.326347874040841).abs() < 1e-12);
        assert!((normal_sf(10.0) - 7.619853024160527e-24).abs() < 1e-35);
        for &p in &[1e-10, 0.001, 0.3, 0.5, 0.77, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-14 * p.max(1e-3));
        }
    }

    #[test]
    fn toy_np_values() {
        let f1 = g(-5.0, 2.0, 0.0, 2.0);
        let f2 = g(-5.0, 2.0, 1.5, 3.5);
        let r = |f: &GaussianFeature, a: f64| gaussian_np_type2(f, a).unwrap();
        assert!((r(&f1, 0.01) - 0.431).abs() < 1e-3);
        assert!((r(&f2, 0.01) - 0.299).abs() < 1e-3);
        assert!((r(&f1, 0.20) - 0.049).abs() < 1e-3);
        assert!((r(&f2, 0.20) - 0.084).abs() < 1e-3);
        let same = g(0.0, 1.0, 0.0, 1.0);
        for a in [0.01, 0.2, 0.7] {
            assert!((r(&same, a) - (1.0 - a)).abs() < 1e-14);
        }
        // mirrored means give the same error
        let mirror = g(5.0, 2.0, 0.0, 2.0);
        assert!((r(&mirror, 0.01) - r(&f1, 0.01)).abs() < 1e-12);
        assert!(gaussian_np_type2(&f1, 0.0).is_err());
    }

    #[test]
    fn toy_classical_values() {
        let r = |f: GaussianFeature| gaussian_classical_risk(&f, 0.5).unwrap();
        assert!((r(g(-5.0, 2.0, 0.0, 2.0)) - 0.106).abs() < 1e-3);
        assert!((r(g(-5.0, 2.0, 1.5, 3.5)) - 0.113).abs() < 1e-3);
        assert!((r(g(0.0, 1.0, 0.0, 1.0)) - 0.5).abs() < 1e-15);
        assert!(gaussian_classical_risk(&g(0.0, 1.0, 0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn classical_risk_matches_quadrature() {
        // numeric integral of min(pi0 p0, pi1 p1)
        let pdf = |x: f64, m: f64, s: f64| {
            (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
        };
        for (f, pi0) in [
            (g(-5.0, 2.0, 1.5, 3.5), 0.5),
            (g(0.0, 1.0, 0.5, 0.4), 0.3),
            (g(2.0, 3.0, -1.0, 1.0), 0.8),
            (g(0.0, 1.0, 0.0, 2.0), 0.5),
        ] {
            let h = 1e-3;
            let num: f64 = (0..80_000)
                .map(|i| {
                    let x = -40.0 + i as f64 * h;
                    (pi0 * pdf(x, f.mu0, f.sigma0)).min((1.0 - pi0) * pdf(x, f.mu1, f.sigma1)) * h
                })
                .sum();
            let exact = gaussian_classical_risk(&f, pi0).unwrap();
            assert!((num - exact).abs() < 1e-6, "{f:?}: {num} vs {exact}");
        }
    }

    #[test]
    fn equal_variance_closed_form() {
        for (mu0, mu1, s, pi0) in [
            (-5.0f64, 0.0, 2.0, 0.5f64),
            (1.0, 3.0, 0.7, 0.2),
            (2.0, -1.0, 1.5, 0.65),
        ] {
            let f = g(mu0, s, mu1, s);
            let d = mu1 - mu0;
            // boundary where pi1 p1 = pi0 p0
            let t = (mu0 + mu1) / 2.0 + s * s * (pi0 / (1.0 - pi0)).ln() / d;
            let explicit = if d > 0.0 {
                pi0 * normal_sf((t - mu0) / s) + (1.0 - pi0) * normal_cdf((t - mu1) / s)
            } else {
                pi0 * normal_cdf((t - mu0) / s) + (1.0 - pi0) * normal_sf((t - mu1) / s)
            };
            let r = gaussian_classical_risk(&f, pi0).unwrap();
            assert!((r - explicit).abs() < 1e-10, "{r} vs {explicit}");
        }
    }

    #[test]
    fn alpha_invariance_flags() {
        let f1 = g(-5.0, 2.0, 0.0, 2.0);
        let f2 = g(-5.0, 2.0, 1.5, 3.5);
        assert!(!alpha_invariant(&f1, &f2, 1e-12));
        assert!(alpha_invariant(
            &g(0.0, 2.0, 1.0, 2.0),
            &g(0.0, 3.0, 1.0, 3.0),
            1e-12
        ));
        assert!(alpha_invariant(&f2, &f2, 0.0));
    }

    #[test]
    fn type2_decreasing_in_alpha() {
        let f = g(0.3, 1.2, -0.8, 0.6);
        let vals: Vec<f64> = (1..100)
            .map(|i| gaussian_np_type2(&f, i as f64 / 100.0).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianFeature::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(GaussianFeature::new(0.0, 1.0, 1.0, -2.0).is_err());
        assert!(GaussianFeature::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn monte_carlo_matches_closed_form_on_toy() {
        let model = Model::new(ModelKind::Toy2D, 0);
        let cc =
            mc_population_criterion(&model, PopulationCriterion::Classical, 200_000, 1).unwrap();
        assert!((cc[0].value - 0.106).abs() < 4.0 * cc[0].std_error + 1e-3);
        assert!((cc[1].value - 0.113).abs() < 4.0 * cc[1].std_error + 1e-3);
        // the density ratio of feature 2 is not monotone, so its NP oracle can beat
        // the one-sided rule; feature 1 has equal variances and must agree
        let np = mc_population_criterion(
            &model,
            PopulationCriterion::NeymanPearson { alpha: 0.2 },
            200_000,
            2,
        )
        .unwrap();
        assert!((np[0].value - 0.049).abs() < 4.0 * np[0].std_error + 1e-3);
        assert!(np[1].value <= 0.084 + 4.0 * np[1].std_error);
    }
}
