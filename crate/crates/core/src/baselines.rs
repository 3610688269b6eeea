//! Association-based marginal ranking criteria used for comparison.
//!
//! None of these look at a prediction objective; they are here to show how their
//! rankings can disagree with s-CC and s-NPC.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::criteria::ranks_from_order;
use crate::data::Dataset;
use crate::oracle::normal_sf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("input has zero variance")]
    ConstantInput,
    #[error("both classes are constant")]
    DegenerateVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("labels must contain both classes")]
    SingleClass,
    #[error("feature `{feature}`: {source}")]
    Feature {
        feature: String,
        #[source]
        source: Box<BaselineError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    PearsonCorrelation,
    DistanceCorrelation,
    WelchT,
    WilcoxonRankSum,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::PearsonCorrelation,
        BaselineKind::DistanceCorrelation,
        BaselineKind::WelchT,
        BaselineKind::WilcoxonRankSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::PearsonCorrelation => "pearson",
            BaselineKind::DistanceCorrelation => "dcor",
            BaselineKind::WelchT => "welch-t",
            BaselineKind::WilcoxonRankSum => "wilcoxon",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown baseline `{s}`"))
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with `n - 1` in the denominator.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), BaselineError> {
    if x.len() != y.len() {
        return Err(BaselineError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(BaselineError::TooFew {
            need: 2,
            got: x.len(),
        });
    }
    Ok(())
}

/// Product-moment correlation between a feature and 0/1 labels.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, BaselineError> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return Err(BaselineError::SingleClass);
    }
    if sxx == 0.0 {
        return Err(BaselineError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn row_means(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let rows: Vec<f64> = x
        .iter()
        .map(|&a| x.iter().map(|&b| (a - b).abs()).sum::<f64>() / n)
        .collect();
    let grand = rows.iter().sum::<f64>() / n;
    (rows, grand)
}

/// Sample distance correlation from doubly-centered distance matrices. The
/// matrices are never stored: entries are recomputed from row means.
pub fn distance_correlation(x: &[f64], y: &[f64]) -> Result<f64, BaselineError> {
    check_pair(x, y)?;
    let n = x.len();
    let (rx, gx) = row_means(x);
    let (ry, gy) = row_means(y);
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let a = (x[i] - x[j]).abs() - rx[i] - rx[j] + gx;
            let b = (y[i] - y[j]).abs() - ry[i] - ry[j] + gy;
            cov += a * b;
            vx += a * a;
            vy += b * b;
        }
    }
    if vx <= 0.0 || vy <= 0.0 {
        return Err(BaselineError::ConstantInput);
    }
    let r2 = cov.max(0.0) / (vx * vy).sqrt();
    Ok(r2.sqrt().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Welch's two-sample t test, statistic `(mean0 - mean1) / se`, two-sided p.
pub fn welch_t(class0: &[f64], class1: &[f64]) -> Result<TestResult, BaselineError> {
    for c in [class0, class1] {
        if c.len() < 2 {
            return Err(BaselineError::TooFew {
                need: 2,
                got: c.len(),
            });
        }
    }
    let (n0, n1) = (class0.len() as f64, class1.len() as f64);
    let (q0, q1) = (variance(class0) / n0, variance(class1) / n1);
    let se2 = q0 + q1;
    if se2 == 0.0 {
        return Err(BaselineError::DegenerateVariance);
    }
    let statistic = (mean(class0) - mean(class1)) / se2.sqrt();
    let df = se2 * se2 / (q0 * q0 / (n0 - 1.0) + q1 * q1 / (n1 - 1.0));
    let t = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p_value = (2.0 * t.sf(statistic.abs())).min(1.0);
    Ok(TestResult { statistic, p_value })
}

/// Midranks (1-based) of `values`.
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (ranks, tie_term)
}

/// Totals below this use the exact permutation distribution of the rank sum.
const WILCOXON_EXACT_BELOW: usize = 10;

/// Two-sample Wilcoxon rank-sum test. The statistic is the rank sum of class 1.
///
/// Small samples use the exact permutation distribution (midranks included);
/// otherwise a normal approximation with tie-corrected variance and continuity
/// correction.
pub fn wilcoxon_rank_sum(class0: &[f64], class1: &[f64]) -> Result<TestResult, BaselineError> {
    for c in [class0, class1] {
        if c.is_empty() {
            return Err(BaselineError::TooFew { need: 1, got: 0 });
        }
    }
    let all: Vec<f64> = class0.iter().chain(class1).copied().collect();
    let big_n = all.len();
    let (n0, n1) = (class0.len() as f64, class1.len() as f64);
    let (ranks, tie_term) = midranks(&all);
    let w: f64 = ranks[class0.len()..].iter().sum();
    let expected = n1 * (big_n as f64 + 1.0) / 2.0;
    let dev = w - expected;

    if big_n < WILCOXON_EXACT_BELOW {
        let (mut hits, mut total) = (0u32, 0u32);
        for mask in 0u32..(1 << big_n) {
            if mask.count_ones() as usize != class1.len() {
                continue;
            }
            total += 1;
            let s: f64 = (0..big_n)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| ranks[b])
                .sum();
            if (s - expected).abs() >= dev.abs() - 1e-9 {
                hits += 1;
            }
        }
        return Ok(TestResult {
            statistic: w,
            p_value: hits as f64 / total as f64,
        });
    }

    let nf = big_n as f64;
    let var = n0 * n1 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let p_value = if var <= 0.0 || dev.abs() <= 0.5 {
        1.0
    } else {
        let z = (dev.abs() - 0.5) / var.sqrt();
        (2.0 * normal_sf(z)).min(1.0)
    };
    Ok(TestResult {
        statistic: w,
        p_value,
    })
}

/// Ranking produced by one baseline over every feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRanking {
    pub kind: BaselineKind,
    pub feature_names: Vec<String>,
    /// |r|, dCor, or the p-value, depending on `kind`.
    pub values: Vec<f64>,
    pub ranks: Vec<usize>,
    pub order: Vec<usize>,
}

/// `(primary, secondary)` sort key, smaller is better.
fn baseline_key(
    kind: BaselineKind,
    x: &[f64],
    labels: &[f64],
    class0: &[f64],
    class1: &[f64],
) -> Result<(f64, f64, f64), BaselineError> {
    Ok(match kind {
        BaselineKind::PearsonCorrelation => {
            let r = pearson(x, labels)?.abs();
            (-r, 0.0, r)
        }
        BaselineKind::DistanceCorrelation => {
            let r = distance_correlation(x, labels)?;
            (-r, 0.0, r)
        }
        BaselineKind::WelchT => {
            let t = welch_t(class0, class1)?;
            (t.p_value, -t.statistic.abs(), t.p_value)
        }
        BaselineKind::WilcoxonRankSum => {
            let t = wilcoxon_rank_sum(class0, class1)?;
            let mid = class1.len() as f64 * (x.len() as f64 + 1.0) / 2.0;
            (t.p_value, -(t.statistic - mid).abs(), t.p_value)
        }
    })
}

/// Ranks features by |r| or dCor descending, or p-value ascending. Ties in p fall
/// back to the size of the statistic, then to feature index.
pub fn rank_by_baseline(
    dataset: &Dataset,
    kind: BaselineKind,
) -> Result<BaselineRanking, BaselineError> {
    let labels: Vec<f64> = dataset.labels().iter().map(|&l| l as f64).collect();
    let names = dataset.feature_names();
    let keys: Vec<(f64, f64, f64)> = (0..dataset.n_features())
        .into_par_iter()
        .map(|j| {
            baseline_key(
                kind,
                dataset.column(j),
                &labels,
                &dataset.class_values(j, 0),
                &dataset.class_values(j, 1),
            )
        })
        .collect::<Vec<_>>()
        .into_iter()
        .enumerate()
        .map(|(j, r)| {
            r.map_err(|e| BaselineError::Feature {
                feature: names[j].clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .0
            .total_cmp(&keys[b].0)
            .then(keys[a].1.total_cmp(&keys[b].1))
            .then(a.cmp(&b))
    });
    Ok(BaselineRanking {
        kind,
        feature_names: names.to_vec(),
        values: keys.iter().map(|k| k.2).collect(),
        ranks: ranks_from_order(&order),
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn draws(n: usize, mu: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(mu, 1.0).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn coin(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                if rand::Rng::random::<bool>(&mut rng) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn pearson_cases() {
        let y = [0.0, 1.0, 0.0, 1.0, 1.0];
        assert!((pearson(&y, &y).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[2.0; 5], &y), Err(BaselineError::ConstantInput));
        let r = pearson(&draws(10_000, 0.0, 1), &coin(10_000, 2)).unwrap();
        assert!(r.abs() < 0.05);
    }

    /// Explicit n x n matrices, the textbook definition.
    fn dcor_by_matrices(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let center = |v: &[f64]| {
            let d: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| (v[i] - v[j]).abs()).collect())
                .collect();
            let row: Vec<f64> = d.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
            let col: Vec<f64> = (0..n)
                .map(|j| d.iter().map(|r| r[j]).sum::<f64>() / n as f64)
                .collect();
            let all = row.iter().sum::<f64>() / n as f64;
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| d[i][j] - row[i] - col[j] + all)
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        let (a, b) = (center(x), center(y));
        let dot = |p: &Vec<Vec<f64>>, q: &Vec<Vec<f64>>| -> f64 {
            (0..n)
                .map(|i| (0..n).map(|j| p[i][j] * q[i][j]).sum::<f64>())
                .sum::<f64>()
                / (n * n) as f64
        };
        (dot(&a, &b) / (dot(&a, &a) * dot(&b, &b)).sqrt()).sqrt()
    }

    #[test]
    fn distance_correlation_cases() {
        let y = [0.0, 1.0, 1.0, 0.0, 1.0];
        assert!((distance_correlation(&y, &y).unwrap() - 1.0).abs() < 1e-12);
        let x = [1.0, 3.0, 2.0, 7.0];
        let y = [0.0, 1.0, 0.0, 1.0];
        let hand = dcor_by_matrices(&x, &y);
        assert!((distance_correlation(&x, &y).unwrap() - hand).abs() < 1e-12);
        // by hand: dCov^2 = 0.5625, dVar_x^2 = 3.390625, dVar_y^2 = 0.25
        assert!((hand - (0.5625f64 / (3.390625f64 * 0.25).sqrt()).sqrt()).abs() < 1e-12);
        assert!((hand - 0.781639).abs() < 1e-6);
        let d = distance_correlation(&draws(2000, 0.0, 3), &coin(2000, 4)).unwrap();
        assert!(d < 0.1, "{d}");
        assert_eq!(
            distance_correlation(&[1.0; 4], &y),
            Err(BaselineError::ConstantInput)
        );
    }

    /// Student t density integrated with Simpson's rule.
    fn t_sf_by_quadrature(t: f64, df: f64) -> f64 {
        let ln_c = statrs::function::gamma::ln_gamma((df + 1.0) / 2.0)
            - statrs::function::gamma::ln_gamma(df / 2.0)
            - 0.5 * (df * std::f64::consts::PI).ln();
        let pdf = |x: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
        // integrate over [0, t] and use symmetry
        let steps = 20_000;
        let h = t / steps as f64;
        let mut s = pdf(0.0) + pdf(t);
        for i in 1..steps {
            s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        0.5 - s * h / 3.0
    }

    #[test]
    fn welch_cases() {
        assert_eq!(
            welch_t(&[0.0; 4], &[1.0; 4]),
            Err(BaselineError::DegenerateVariance)
        );
        let a = [1.0, 4.0, 2.0, 8.0];
        let r = welch_t(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = welch_t(&[1.0, 2.0, 3.0, 4.0, 5.0], &[3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        assert!((r.statistic + 2.0).abs() < 1e-12);
        // equal variances and sizes: df = 8
        let oracle = 2.0 * t_sf_by_quadrature(2.0, 8.0);
        assert!(
            (r.p_value - oracle).abs() < 1e-8,
            "{} vs {oracle}",
            r.p_value
        );
    }

    #[test]
    fn wilcoxon_small_exact() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 7.0);
        // 6 arrangements, {3,4} and {1,2} are the two extremes
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
        let r = wilcoxon_rank_sum(&[1.0, 5.0, 2.0], &[2.0, 5.0, 1.0]).unwrap();
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let x = draws(30, 0.0, 7);
        let r = wilcoxon_rank_sum(&x, &x).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn wilcoxon_matches_permutation_oracle() {
        let c0 = draws(50, 0.0, 11);
        let c1 = draws(50, 0.5, 12);
        let r = wilcoxon_rank_sum(&c0, &c1).unwrap();
        // permutation oracle on raw rank sums
        let all: Vec<f64> = c0.iter().chain(&c1).copied().collect();
        let mut order: Vec<usize> = (0..100).collect();
        order.sort_by(|&a, &b| all[a].total_cmp(&all[b]));
        let mut rank = vec![0.0; 100];
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = pos as f64 + 1.0;
        }
        let observed: f64 = rank[50..].iter().sum::<f64>() - 50.0 * 101.0 / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut idx: Vec<usize> = (0..100).collect();
        let perms = 10_000;
        let mut hits = 0;
        for _ in 0..perms {
            idx.shuffle(&mut rng);
            let s: f64 = idx[..50].iter().map(|&i| rank[i]).sum::<f64>() - 50.0 * 101.0 / 2.0;
            if s.abs() >= observed.abs() {
                hits += 1;
            }
        }
        let oracle = hits as f64 / perms as f64;
        assert!(
            (r.p_value - oracle).abs() < 0.02,
            "{} vs {oracle}",
            r.p_value
        );
    }

    #[test]
    fn baseline_ranking() {
        let labels: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        let strong: Vec<f64> = labels
            .iter()
            .zip(draws(200, 0.0, 1))
            .map(|(&l, e)| 2.0 * l as f64 + e)
            .collect();
        let weak: Vec<f64> = labels
            .iter()
            .zip(draws(200, 0.0, 2))
            .map(|(&l, e)| 0.3 * l as f64 + e)
            .collect();
        let ds = Dataset::new(
            vec![weak, strong],
            labels,
            vec!["weak".into(), "strong".into()],
        )
        .unwrap();
        for kind in BaselineKind::ALL {
            let r = rank_by_baseline(&ds, kind).unwrap();
            assert_eq!(r.order, vec![1, 0], "{kind}");
            assert_eq!(r.ranks, vec![2, 1]);
        }
        assert_eq!(
            "dcor".parse::<BaselineKind>(),
            Ok(BaselineKind::DistanceCorrelation)
        );
        assert!("foo".parse::<BaselineKind>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn label_swap_symmetry(
            c0 in proptest::collection::vec(-10.0f64..10.0, 3..15),
            c1 in proptest::collection::vec(-10.0f64..10.0, 3..15),
        ) {
            let x: Vec<f64> = c0.iter().chain(&c1).copied().collect();
            let y: Vec<f64> = (0..x.len()).map(|i| if i < c0.len() { 0.0 } else { 1.0 }).collect();
            let y_sw: Vec<f64> = y.iter().map(|v| 1.0 - v).collect();
            if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&x, &y_sw)) {
                prop_assert!((a + b).abs() < 1e-12);
            }
            if let (Ok(a), Ok(b)) = (distance_correlation(&x, &y), distance_correlation(&x, &y_sw)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            if let (Ok(a), Ok(b)) = (welch_t(&c0, &c1), welch_t(&c1, &c0)) {
                prop_assert!((a.statistic + b.statistic).abs() < 1e-9);
                prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
            }
            let a = wilcoxon_rank_sum(&c0, &c1).unwrap();
            let b = wilcoxon_rank_sum(&c1, &c0).unwrap();
            prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
            prop_assert!(a.p_value > 0.0 && a.p_value <= 1.0);
        }

        #[test]
        fn positive_scaling_keeps_ranking(
            seed in 0u64..1000,
            scale in 0.01f64..100.0,
        ) {
            let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
            let f0: Vec<f64> = labels.iter().zip(draws(40, 0.0, seed)).map(|(&l, e)| l as f64 + e).collect();
            let f1: Vec<f64> = labels.iter().zip(draws(40, 0.0, seed + 7)).map(|(&l, e)| 0.5 * l as f64 + e).collect();
            let f2 = draws(40, 0.0, seed + 13);
            let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
            let ds = Dataset::new(vec![f0.clone(), f1.clone(), f2.clone()], labels.clone(), names.clone()).unwrap();
            let scaled = Dataset::new(
                vec![f0.iter().map(|v| v * scale).collect(), f1, f2],
                labels,
                names,
            ).unwrap();
            for kind in BaselineKind::ALL {
                let a = rank_by_baseline(&ds, kind).unwrap();
                let b = rank_by_baseline(&scaled, kind).unwrap();
                prop_assert_eq!(a.ranks[0], b.ranks[0]);
            }
        }
    }
}
