//! Order-statistic thresholds with high-probability type I error control.
//!
//! Given `m2` left-out class-0 scores, thresholding at the `k`-th smallest score
//! yields a classifier whose type I error exceeds `alpha` with probability at most
//! `P(Binomial(m2, 1 - alpha) >= k)`. The smallest `k` that keeps this below the
//! violation rate `delta1` is the umbrella order `k*`.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UmbrellaError {
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("delta1 must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("no order satisfies the violation bound with m2 = {m2}; at least {required} left-out class-0 points are needed")]
    NoFiniteOrder { m2: usize, required: usize },
    #[error("order {k} is outside 1..={m2}")]
    OrderOutOfRange { k: usize, m2: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UmbrellaConfig {
    alpha: f64,
    delta1: f64,
}

impl UmbrellaConfig {
    pub fn new(alpha: f64, delta1: f64) -> Result<Self, UmbrellaError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(UmbrellaError::InvalidAlpha(alpha));
        }
        if !(delta1 > 0.0 && delta1 < 1.0) {
            return Err(UmbrellaError::InvalidDelta(delta1));
        }
        Ok(Self { alpha, delta1 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn order(&self, m2: usize) -> Result<usize, UmbrellaError> {
        umbrella_order(m2, self.alpha, self.delta1)
    }
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log of `C(m2, j) (1 - alpha)^j alpha^(m2 - j)` for `j = 0..=m2`.
fn log_terms(m2: usize, alpha: f64) -> Vec<f64> {
    let ln_keep = (-alpha).ln_1p();
    let ln_alpha = alpha.ln();
    (0..=m2)
        .map(|j| ln_binomial(m2 as u64, j as u64) + j as f64 * ln_keep + (m2 - j) as f64 * ln_alpha)
        .collect()
}

/// All upper tails `P(Binomial(m2, 1 - alpha) >= k)` for `k = 1..=m2`, entry
/// `k - 1`. Accumulated from the top in log space so large `m2` cannot overflow.
pub fn binomial_tails(m2: usize, alpha: f64) -> Vec<f64> {
    let terms = log_terms(m2, alpha);
    let mut tails = vec![0.0; m2];
    let mut acc = f64::NEG_INFINITY;
    for k in (1..=m2).rev() {
        acc = log_add_exp(acc, terms[k]);
        tails[k - 1] = acc.exp().min(1.0);
    }
    tails
}

/// `sum_{j=k}^{m2} C(m2, j) (1 - alpha)^j alpha^(m2 - j)`.
///
/// Terms are scaled by their maximum and added with Neumaier compensation.
pub fn binomial_tail(m2: usize, k: usize, alpha: f64) -> f64 {
    assert!(k >= 1 && k <= m2, "k = {k} outside 1..={m2}");
    let terms = &log_terms(m2, alpha)[k..];
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &t in terms {
        let v = (t - top).exp();
        let s = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - s) + v
        } else {
            (v - s) + sum
        };
        sum = s;
    }
    ((sum + comp).ln() + top).exp().clamp(0.0, 1.0)
}

/// Smallest left-out class-0 size for which some order meets the bound:
/// `ceil(ln delta1 / ln(1 - alpha))`.
pub fn min_left_out_size(alpha: f64, delta1: f64) -> usize {
    let ratio = delta1.ln() / (-alpha).ln_1p();
    // guard against ratios like 3.0000000000000004 from rounding
    let rounded = ratio.round();
    let ratio = if (ratio - rounded).abs() < 1e-9 {
        rounded
    } else {
        ratio
    };
    (ratio.ceil() as usize).max(1)
}

/// `k* = min { k in 1..=m2 : binomial_tail(m2, k, alpha) <= delta1 }`.
pub fn umbrella_order(m2: usize, alpha: f64, delta1: f64) -> Result<usize, UmbrellaError> {
    UmbrellaConfig::new(alpha, delta1)?;
    let tails = binomial_tails(m2, alpha);
    // tails are nonincreasing in k, so the first hit is the minimum
    tails
        .iter()
        .position(|&t| t <= delta1)
        .map(|i| i + 1)
        .ok_or(UmbrellaError::NoFiniteOrder {
            m2,
            required: min_left_out_size(alpha, delta1),
        })
}

/// The `k_star`-th smallest score (1-indexed).
pub fn np_threshold(left_out_scores: &[f64], k_star: usize) -> Result<f64, UmbrellaError> {
    let m2 = left_out_scores.len();
    if k_star == 0 || k_star > m2 {
        return Err(UmbrellaError::OrderOutOfRange { k: k_star, m2 });
    }
    let mut buf = left_out_scores.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k_star - 1, f64::total_cmp);
    Ok(*kth)
}
