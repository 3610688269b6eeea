//! One-dimensional kernel density estimates and density-ratio scores.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Densities below this value are treated as this value when forming ratios.
pub const DENSITY_FLOOR: f64 = 1e-30;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Beyond this many bandwidths `exp(-u^2 / 2)` is exactly zero in f64.
const GAUSSIAN_CUTOFF: f64 = 39.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdeError {
    #[error("cannot fit a density to an empty sample")]
    EmptySample,
    #[error("bandwidth selection needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample has zero standard deviation")]
    DegenerateSample,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    #[inline]
    fn weight(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width of the region, in bandwidths, where the kernel can be nonzero.
    fn reach(self) -> f64 {
        match self {
            Kernel::Gaussian => GAUSSIAN_CUTOFF,
            Kernel::Epanechnikov => 1.0,
        }
    }
}

/// Bandwidth selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthRule {
    /// `sd * (ln n / n)^(1/5)`, the second-order-kernel rate for one feature.
    #[default]
    PaperRate,
    /// Silverman's rule of thumb, `1.06 * sd * n^(-1/5)`.
    Silverman,
}

fn sample_sd(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

fn bandwidth_floor(sd: f64) -> f64 {
    1e-8 * sd.max(1.0)
}

/// Data-driven bandwidth for `samples`.
pub fn default_bandwidth(samples: &[f64], rule: BandwidthRule) -> Result<f64, KdeError> {
    if samples.len() < 2 {
        return Err(KdeError::TooFewSamples(samples.len()));
    }
    let sd = sample_sd(samples);
    if sd == 0.0 {
        return Err(KdeError::DegenerateSample);
    }
    let n = samples.len() as f64;
    let h = match rule {
        BandwidthRule::PaperRate => sd * (n.ln() / n).powf(0.2),
        BandwidthRule::Silverman => 1.06 * sd * n.powf(-0.2),
    };
    Ok(h.max(bandwidth_floor(sd)))
}

/// Like [`default_bandwidth`], but substitutes the clamp floor (with a warning) when
/// the sample is too small or constant to estimate a spread.
pub fn bandwidth_or_floor(samples: &[f64], rule: BandwidthRule) -> f64 {
    match default_bandwidth(samples, rule) {
        Ok(h) => h,
        Err(e) => {
            let floor = bandwidth_floor(0.0);
            log::warn!("bandwidth selection failed ({e}); using floor bandwidth {floor:e}");
            floor
        }
    }
}

/// A fitted kernel density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    // sorted ascending so evaluation can skip centers outside the kernel's reach
    centers: Vec<f64>,
    bandwidth: f64,
    kernel: Kernel,
    norm: f64,
}

impl DensityEstimate {
    pub fn fit(samples: &[f64], bandwidth: f64, kernel: Kernel) -> Result<Self, KdeError> {
        if samples.is_empty() {
            return Err(KdeError::EmptySample);
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(KdeError::InvalidBandwidth(bandwidth));
        }
        let mut centers = samples.to_vec();
        centers.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            norm: 1.0 / (centers.len() as f64 * bandwidth),
            centers,
            bandwidth,
            kernel,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// `(1 / (n h)) * sum_i K((x_i - x) / h)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let reach = self.kernel.reach() * self.bandwidth;
        let lo = self.centers.partition_point(|&c| c < x - reach);
        let hi = self.centers.partition_point(|&c| c <= x + reach);
        let inv_h = 1.0 / self.bandwidth;
        let sum: f64 = self.centers[lo..hi]
            .iter()
            .map(|&c| self.kernel.weight((c - x) * inv_h))
            .sum();
        sum * self.norm
    }
}

/// `fit_kde` under its operational name.
pub fn fit_kde(
    samples: &[f64],
    bandwidth: f64,
    kernel: Kernel,
) -> Result<DensityEstimate, KdeError> {
    DensityEstimate::fit(samples, bandwidth, kernel)
}

/// Kernel and bandwidth settings shared by both densities of a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct KdeConfig {
    pub kernel: Kernel,
    pub bandwidth_rule: BandwidthRule,
}

/// Estimated density ratio `p1(x) / p0(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFunction {
    numerator: DensityEstimate,
    denominator: DensityEstimate,
    floor: f64,
}

impl ScoreFunction {
    pub fn new(numerator: DensityEstimate, denominator: DensityEstimate, floor: f64) -> Self {
        Self {
            numerator,
            denominator,
            floor,
        }
    }

    pub fn numerator(&self) -> &DensityEstimate {
        &self.numerator
    }

    pub fn denominator(&self) -> &DensityEstimate {
        &self.denominator
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Both densities are clamped at the floor, so a point outside both supports
    /// scores exactly 1.
    pub fn score(&self, x: f64) -> f64 {
        self.numerator.evaluate(x).max(self.floor) / self.denominator.evaluate(x).max(self.floor)
    }
}

/// Fits the class-1 numerator and class-0 denominator, each with its own bandwidth.
pub fn make_score(
    class1_samples: &[f64],
    class0_samples: &[f64],
    config: &KdeConfig,
) -> Result<ScoreFunction, KdeError> {
    if class1_samples.is_empty() || class0_samples.is_empty() {
        return Err(KdeError::EmptySample);
    }
    let fit = |samples: &[f64]| {
        // sorting first makes the fit independent of sample order, down to the bit
        let mut sorted = samples.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let h = bandwidth_or_floor(&sorted, config.bandwidth_rule);
        DensityEstimate::fit(&sorted, h, config.kernel)
    };
    Ok(ScoreFunction::new(
        fit(class1_samples)?,
        fit(class0_samples)?,
        DENSITY_FLOOR,
    ))
}
