//! Sample-level classical (s-CC) and Neyman-Pearson (s-NPC) criteria.
//!
//! For every split the class-conditional densities of one feature are estimated
//! on the train-scoring halves and combined into a density-ratio score. The
//! left-out halves then measure how well that score separates the classes:
//!
//! * s-CC thresholds the score at `m1 / n1` (or a known prior ratio) and reports
//!   the misclassification rate over both left-out halves;
//! * s-NPC thresholds at the umbrella order statistic of the left-out class-0
//!   scores and reports the miss rate on the left-out class-1 half.
//!
//! Both are averaged over splits. Smaller is better.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{make_splits, DataError, Dataset, Split, SplitPlan};
use crate::kde::{make_score, KdeConfig, KdeError};
use crate::umbrella::{np_threshold, UmbrellaConfig, UmbrellaError};

/// Default number of random splits for ranking runs.
pub const DEFAULT_SPLITS: usize = 11;
/// Largest accepted number of random splits.
pub const MAX_SPLITS: usize = 1000;

#[derive(Debug, Error)]
pub enum CriterionError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Kde(#[from] KdeError),
    #[error(transparent)]
    Umbrella(#[from] UmbrellaError),
    #[error("split {split} has an empty {half} half")]
    DegenerateSplit { split: usize, half: &'static str },
    #[error("split plan is for class sizes ({plan_m}, {plan_n}) but the data has ({m}, {n})")]
    PlanMismatch {
        plan_m: usize,
        plan_n: usize,
        m: usize,
        n: usize,
    },
    #[error("every split was skipped: {0}")]
    AllSplitsSkipped(UmbrellaError),
    #[error("feature index {index} out of range for {d} features")]
    FeatureOutOfRange { index: usize, d: usize },
    #[error("number of splits must be in 1..={MAX_SPLITS}, got {0}")]
    InvalidSplitCount(usize),
    #[error("prior ratio must be positive and finite, got {0}")]
    InvalidPriorRatio(f64),
    #[error("the Neyman-Pearson criterion needs alpha and delta1")]
    MissingNpParameters,
    #[error("feature `{feature}`: {source}")]
    Feature {
        feature: String,
        #[source]
        source: Box<CriterionError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriterionKind {
    Classical,
    NeymanPearson(UmbrellaConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub kind: CriterionKind,
    pub splits: usize,
    pub seed: u64,
    pub kde: KdeConfig,
    /// Known `pi0 / pi1`; replaces the `m1 / n1` threshold of s-CC.
    pub prior_ratio: Option<f64>,
}

impl CriterionConfig {
    pub fn classical(splits: usize, seed: u64) -> Self {
        Self {
            kind: CriterionKind::Classical,
            splits,
            seed,
            kde: KdeConfig::default(),
            prior_ratio: None,
        }
    }

    pub fn neyman_pearson(
        alpha: f64,
        delta1: f64,
        splits: usize,
        seed: u64,
    ) -> Result<Self, CriterionError> {
        Ok(Self {
            kind: CriterionKind::NeymanPearson(UmbrellaConfig::new(alpha, delta1)?),
            splits,
            seed,
            kde: KdeConfig::default(),
            prior_ratio: None,
        })
    }

    pub fn with_kde(mut self, kde: KdeConfig) -> Self {
        self.kde = kde;
        self
    }

    pub fn with_prior_ratio(mut self, ratio: Option<f64>) -> Self {
        self.prior_ratio = ratio;
        self
    }

    pub fn validate(&self) -> Result<(), CriterionError> {
        if self.splits == 0 || self.splits > MAX_SPLITS {
            return Err(CriterionError::InvalidSplitCount(self.splits));
        }
        if let Some(r) = self.prior_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CriterionError::InvalidPriorRatio(r));
            }
        }
        if let CriterionKind::NeymanPearson(u) = self.kind {
            UmbrellaConfig::new(u.alpha(), u.delta1())?;
        }
        Ok(())
    }

    /// Short label such as `s-CC` or `s-NPC(alpha=0.05)`.
    pub fn label(&self) -> String {
        match self.kind {
            CriterionKind::Classical => "s-CC".to_string(),
            CriterionKind::NeymanPearson(u) => format!("s-NPC(alpha={})", u.alpha()),
        }
    }

    fn scoring_key(&self) -> (usize, u64, KdeConfig) {
        (self.splits, self.seed, self.kde)
    }
}

/// Density-ratio scores of the left-out points of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitScores {
    pub class0_lo: Vec<f64>,
    pub class1_lo: Vec<f64>,
    pub m1: usize,
    pub n1: usize,
}

impl SplitScores {
    /// Misclassification rate on both left-out halves of `1(score > threshold)`.
    pub fn classical_error(&self, threshold: f64) -> f64 {
        let missed1 = self.class1_lo.iter().filter(|&&s| s <= threshold).count();
        let false0 = self.class0_lo.iter().filter(|&&s| s > threshold).count();
        (missed1 + false0) as f64 / (self.class0_lo.len() + self.class1_lo.len()) as f64
    }

    /// Type II error on the left-out class-1 half at the umbrella threshold.
    pub fn np_error(&self, umbrella: &UmbrellaConfig) -> Result<f64, UmbrellaError> {
        let k = umbrella.order(self.class0_lo.len())?;
        let threshold = np_threshold(&self.class0_lo, k)?;
        let missed = self.class1_lo.iter().filter(|&&s| s <= threshold).count();
        Ok(missed as f64 / self.class1_lo.len() as f64)
    }

    fn evaluate(&self, config: &CriterionConfig) -> Result<f64, UmbrellaError> {
        match config.kind {
            CriterionKind::Classical => {
                let threshold = config
                    .prior_ratio
                    .unwrap_or(self.m1 as f64 / self.n1 as f64);
                Ok(self.classical_error(threshold))
            }
            CriterionKind::NeymanPearson(u) => self.np_error(&u),
        }
    }
}

fn check_plan(dataset: &Dataset, plan: &SplitPlan) -> Result<(), CriterionError> {
    let (m, n) = (dataset.class_count(0), dataset.class_count(1));
    if plan.m != m || plan.n != n {
        return Err(CriterionError::PlanMismatch {
            plan_m: plan.m,
            plan_n: plan.n,
            m,
            n,
        });
    }
    for (b, split) in plan.splits.iter().enumerate() {
        for (half, list) in [
            ("class-0 train-scoring", &split.class0_ts),
            ("class-0 left-out", &split.class0_lo),
            ("class-1 train-scoring", &split.class1_ts),
            ("class-1 left-out", &split.class1_lo),
        ] {
            if list.is_empty() {
                return Err(CriterionError::DegenerateSplit { split: b, half });
            }
        }
    }
    Ok(())
}

fn gather(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

fn score_split(
    class0: &[f64],
    class1: &[f64],
    split: &Split,
    kde: &KdeConfig,
) -> Result<SplitScores, KdeError> {
    let score = make_score(
        &gather(class1, &split.class1_ts),
        &gather(class0, &split.class0_ts),
        kde,
    )?;
    Ok(SplitScores {
        class0_lo: split
            .class0_lo
            .iter()
            .map(|&i| score.score(class0[i]))
            .collect(),
        class1_lo: split
            .class1_lo
            .iter()
            .map(|&i| score.score(class1[i]))
            .collect(),
        m1: split.class0_ts.len(),
        n1: split.class1_ts.len(),
    })
}

/// Left-out scores of one feature for every split of `plan`.
pub fn feature_split_scores(
    dataset: &Dataset,
    feature: usize,
    plan: &SplitPlan,
    kde: &KdeConfig,
) -> Result<Vec<SplitScores>, CriterionError> {
    if feature >= dataset.n_features() {
        return Err(CriterionError::FeatureOutOfRange {
            index: feature,
            d: dataset.n_features(),
        });
    }
    check_plan(dataset, plan)?;
    let class0 = dataset.class_values(feature, 0);
    let class1 = dataset.class_values(feature, 1);
    plan.splits
        .iter()
        .map(|s| score_split(&class0, &class1, s, kde).map_err(CriterionError::from))
        .collect()
}

/// Criterion value of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub score: f64,
    /// `None` marks a split skipped because no umbrella order exists.
    pub per_split: Vec<Option<f64>>,
    pub skipped: usize,
}

/// Averages a criterion over precomputed split scores.
pub fn aggregate(
    splits: &[SplitScores],
    config: &CriterionConfig,
) -> Result<FeatureScore, CriterionError> {
    let mut per_split = Vec::with_capacity(splits.len());
    let mut last_skip = None;
    for s in splits {
        match s.evaluate(config) {
            Ok(v) => per_split.push(Some(v)),
            Err(e @ UmbrellaError::NoFiniteOrder { .. }) => {
                per_split.push(None);
                last_skip = Some(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let kept: Vec<f64> = per_split.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(match last_skip {
            Some(e) => CriterionError::AllSplitsSkipped(e),
            None => CriterionError::InvalidSplitCount(0),
        });
    }
    Ok(FeatureScore {
        score: kept.iter().sum::<f64>() / kept.len() as f64,
        skipped: per_split.len() - kept.len(),
        per_split,
    })
}

/// s-CC of one feature. The criterion kind in `config` is ignored; its splits,
/// kernel settings and prior-ratio override are used.
pub fn s_cc_feature(
    dataset: &Dataset,
    feature: usize,
    plan: &SplitPlan,
    config: &CriterionConfig,
) -> Result<FeatureScore, CriterionError> {
    let cc = CriterionConfig {
        kind: CriterionKind::Classical,
        ..*config
    };
    cc.validate()?;
    aggregate(&feature_split_scores(dataset, feature, plan, &cc.kde)?, &cc)
}

/// s-NPC of one feature. `config` must carry Neyman-Pearson parameters.
pub fn s_npc_feature(
    dataset: &Dataset,
    feature: usize,
    plan: &SplitPlan,
    config: &CriterionConfig,
) -> Result<FeatureScore, CriterionError> {
    if config.kind == CriterionKind::Classical {
        return Err(CriterionError::MissingNpParameters);
    }
    config.validate()?;
    aggregate(
        &feature_split_scores(dataset, feature, plan, &config.kde)?,
        config,
    )
}

/// Indices sorted by ascending key; ties keep the lower index first.
pub fn ascending_order(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    order
}

/// 1-based rank of each position given a best-first order.
pub fn ranks_from_order(order: &[usize]) -> Vec<usize> {
    let mut ranks = vec![0; order.len()];
    for (pos, &j) in order.iter().enumerate() {
        ranks[j] = pos + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    /// 1-based rank of each feature.
    pub ranks: Vec<usize>,
    /// Feature indices, best first.
    pub order: Vec<usize>,
    /// `per_split_scores[b][j]`; `None` for skipped splits.
    pub per_split_scores: Vec<Vec<Option<f64>>>,
    pub skipped_splits: Vec<usize>,
}

impl RankingResult {
    fn from_features(names: Vec<String>, features: Vec<FeatureScore>) -> Self {
        let scores: Vec<f64> = features.iter().map(|f| f.score).collect();
        let order = ascending_order(&scores);
        let splits = features.first().map_or(0, |f| f.per_split.len());
        let per_split_scores = (0..splits)
            .map(|b| features.iter().map(|f| f.per_split[b]).collect())
            .collect();
        Self {
            feature_names: names,
            ranks: ranks_from_order(&order),
            order,
            per_split_scores,
            skipped_splits: features.iter().map(|f| f.skipped).collect(),
            scores,
        }
    }

    /// Feature names, best first.
    pub fn ranked_names(&self) -> Vec<String> {
        self.order
            .iter()
            .map(|&j| self.feature_names[j].clone())
            .collect()
    }
}

/// Ranks every feature by one criterion using a single shared split plan.
pub fn rank_features(
    dataset: &Dataset,
    config: &CriterionConfig,
) -> Result<RankingResult, CriterionError> {
    let mut out = rank_features_multi(dataset, std::slice::from_ref(config))?;
    Ok(out.remove(0))
}

/// Ranks by several criteria at once. Criteria that agree on splits, seed and
/// kernel settings share the density-ratio fits and left-out scores.
pub fn rank_features_multi(
    dataset: &Dataset,
    configs: &[CriterionConfig],
) -> Result<Vec<RankingResult>, CriterionError> {
    for c in configs {
        c.validate()?;
    }
    let (m, n) = (dataset.class_count(0), dataset.class_count(1));
    let mut keys: Vec<(usize, u64, KdeConfig)> = Vec::new();
    for c in configs {
        if !keys.contains(&c.scoring_key()) {
            keys.push(c.scoring_key());
        }
    }
    let plans = keys
        .iter()
        .map(|&(b, seed, _)| make_splits(m, n, b, seed))
        .collect::<Result<Vec<_>, _>>()?;

    let names = dataset.feature_names();
    let results: Vec<Result<Vec<FeatureScore>, CriterionError>> = (0..dataset.n_features())
        .into_par_iter()
        .map(|j| {
            let mut out: Vec<Option<FeatureScore>> = vec![None; configs.len()];
            for (key, plan) in keys.iter().zip(&plans) {
                let scores = feature_split_scores(dataset, j, plan, &key.2)?;
                for (slot, c) in out.iter_mut().zip(configs) {
                    if c.scoring_key() == *key {
                        *slot = Some(aggregate(&scores, c)?);
                    }
                }
            }
            Ok(out
                .into_iter()
                .map(|f| f.expect("every config has a key"))
                .collect())
        })
        .collect();
    // report the lowest-index failure so errors do not depend on scheduling
    let mut per_feature = Vec::with_capacity(results.len());
    for (j, r) in results.into_iter().enumerate() {
        per_feature.push(r.map_err(|e| CriterionError::Feature {
            feature: names[j].clone(),
            source: Box::new(e),
        })?);
    }

    Ok((0..configs.len())
        .map(|c| {
            let features = per_feature.iter().map(|f| f[c].clone()).collect();
            RankingResult::from_features(names.to_vec(), features)
        })
        .collect())
}
