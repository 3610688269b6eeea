//! Agreement between rank lists, and the class subsampling used to probe
//! robustness to disproportional training data.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{rank_features_multi, CriterionConfig, CriterionError, RankingResult};
use crate::data::{DataError, Dataset};

/// Fewest observations a subsampled class may keep.
pub const MIN_CLASS_SIZE: usize = 4;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("duplicate identifier {0:?} in rank list")]
    DuplicateIdentifier(String),
    #[error("rank lists do not cover the same features")]
    UniverseMismatch,
    #[error("keep fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("class {class} would keep only {remaining} observations; at least {MIN_CLASS_SIZE} are needed")]
    ClassTooSmall { class: u8, remaining: usize },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
}

/// Feature identifiers, best first, without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankList(Vec<String>);

impl RankList {
    pub fn new(ids: Vec<String>) -> Result<Self, MetricsError> {
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(MetricsError::DuplicateIdentifier(id.clone()));
            }
        }
        Ok(Self(ids))
    }

    pub fn from_ranking(result: &RankingResult) -> Self {
        Self(result.ranked_names())
    }

    pub fn ids(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `|top_j(a) ∩ top_j(b)| / j` for `j = 1..=d`.
pub fn consistency_curve(a: &RankList, b: &RankList) -> Result<Vec<f64>, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::UniverseMismatch);
    }
    let index: HashMap<&str, usize> =
        a.0.iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
    let b_idx =
        b.0.iter()
            .map(|s| {
                index
                    .get(s.as_str())
                    .copied()
                    .ok_or(MetricsError::UniverseMismatch)
            })
            .collect::<Result<Vec<_>, _>>()?;

    let d = a.len();
    let mut in_a = vec![false; d];
    let mut in_b = vec![false; d];
    let mut common = 0usize;
    let mut curve = Vec::with_capacity(d);
    for (j, &bj) in b_idx.iter().enumerate() {
        in_a[j] = true;
        if in_b[j] {
            common += 1;
        }
        in_b[bj] = true;
        if in_a[bj] {
            common += 1;
        }
        curve.push(common as f64 / (j + 1) as f64);
    }
    Ok(curve)
}

/// Mean of the first `j_max` entries (all entries if the curve is shorter).
pub fn mean_top(curve: &[f64], j_max: usize) -> f64 {
    let k = j_max.min(curve.len());
    if k == 0 {
        return f64::NAN;
    }
    curve[..k].iter().sum::<f64>() / k as f64
}

/// Keeps a uniform random `round(keep_fraction * count)` of one class, without
/// replacement. The other class and the row order are preserved.
pub fn subsample_class(
    dataset: &Dataset,
    class: u8,
    keep_fraction: f64,
    seed: u64,
) -> Result<Dataset, MetricsError> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(MetricsError::InvalidFraction(keep_fraction));
    }
    let rows = dataset.class_rows(class);
    let keep = (keep_fraction * rows.len() as f64).round() as usize;
    if keep < MIN_CLASS_SIZE {
        return Err(MetricsError::ClassTooSmall {
            class,
            remaining: keep,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = vec![false; dataset.n_samples()];
    for i in rand::seq::index::sample(&mut rng, rows.len(), keep) {
        kept[rows[i]] = true;
    }
    let labels = dataset.labels();
    let selected: Vec<usize> = (0..dataset.n_samples())
        .filter(|&r| labels[r] != class || kept[r])
        .collect();
    Ok(dataset.select_rows(&selected)?)
}

/// How the two disproportional datasets are built: one keeps
/// `class1_keep` of class 1, the other keeps `class0_keep` of class 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleProtocol {
    pub class1_keep: f64,
    pub class0_keep: f64,
}

impl SubsampleProtocol {
    /// Remove half of one class in each dataset.
    pub fn paper() -> Self {
        Self {
            class1_keep: 0.5,
            class0_keep: 0.5,
        }
    }
}

impl Default for SubsampleProtocol {
    fn default() -> Self {
        Self::paper()
    }
}

/// Class sizes `(m, n)` of the two subsampled datasets.
pub type PairSizes = [(usize, usize); 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRobustnessReport {
    pub protocol: SubsampleProtocol,
    pub sizes: PairSizes,
    pub cc: Vec<f64>,
    pub npc: Vec<f64>,
}

/// [`bias_robustness_report_with`] under [`SubsampleProtocol::paper`].
pub fn bias_robustness_report(
    dataset: &Dataset,
    cc: &CriterionConfig,
    npc: &CriterionConfig,
    seed: u64,
) -> Result<BiasRobustnessReport, MetricsError> {
    bias_robustness_report_with(dataset, cc, npc, SubsampleProtocol::paper(), seed)
}

/// Ranks two disproportionally subsampled copies of `dataset` with each criterion
/// and compares each criterion's two rank lists.
pub fn bias_robustness_report_with(
    dataset: &Dataset,
    cc: &CriterionConfig,
    npc: &CriterionConfig,
    protocol: SubsampleProtocol,
    seed: u64,
) -> Result<BiasRobustnessReport, MetricsError> {
    let (sizes, mut curves) = robustness_curves(dataset, &[*cc, *npc], protocol, seed)?;
    let npc = curves.pop().expect("two curves");
    let cc = curves.pop().expect("two curves");
    Ok(BiasRobustnessReport {
        protocol,
        sizes,
        cc,
        npc,
    })
}

/// One consistency curve per config over the same pair of subsampled datasets,
/// with split scores shared between configs. Also returns the `(m, n)` sizes of
/// the two datasets.
pub fn robustness_curves(
    dataset: &Dataset,
    configs: &[CriterionConfig],
    protocol: SubsampleProtocol,
    seed: u64,
) -> Result<(PairSizes, Vec<Vec<f64>>), MetricsError> {
    let first = subsample_class(dataset, 1, protocol.class1_keep, seed)?;
    let second = subsample_class(dataset, 0, protocol.class0_keep, seed.wrapping_add(1))?;
    let r1 = rank_features_multi(&first, configs)?;
    let r2 = rank_features_multi(&second, configs)?;
    let curves = r1
        .iter()
        .zip(&r2)
        .map(|(a, b)| consistency_curve(&RankList::from_ranking(a), &RankList::from_ranking(b)))
        .collect::<Result<Vec<_>, _>>()?;
    let sizes = [
        (first.class_count(0), first.class_count(1)),
        (second.class_count(0), second.class_count(1)),
    ];
    Ok((sizes, curves))
}
