//! Generative two-class models and repeated-ranking experiments.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::baselines::{rank_by_baseline, BaselineError, BaselineKind};
use crate::criteria::{rank_features_multi, CriterionConfig, CriterionError};
use crate::data::Dataset;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("sample size must be at least 4, got {0}")]
    SampleTooSmall(usize),
    #[error("reps must be at least 1")]
    NoReps,
    #[error("rep {rep}: {source}")]
    Criterion {
        rep: usize,
        #[source]
        source: CriterionError,
    },
    #[error("rep {rep}: {source}")]
    Baseline {
        rep: usize,
        #[source]
        source: BaselineError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Two Gaussian features whose NP ranking flips with alpha.
    Toy2D,
    /// 30 Gaussian features, first 10 informative.
    Gauss30,
    /// 30 chi-squared features, first 10 informative.
    Chisq30,
    /// 500 Gaussian features, first 10 informative.
    Gauss500,
    /// A mean shift versus a variance-only (mixture) difference.
    Mixture2D,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Toy2D,
        ModelKind::Gauss30,
        ModelKind::Chisq30,
        ModelKind::Gauss500,
        ModelKind::Mixture2D,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Toy2D => "toy",
            ModelKind::Gauss30 => "gauss30",
            ModelKind::Chisq30 => "chisq30",
            ModelKind::Gauss500 => "gauss500",
            ModelKind::Mixture2D => "mixture",
        }
    }

    pub fn n_features(self) -> usize {
        match self {
            ModelKind::Toy2D | ModelKind::Mixture2D => 2,
            ModelKind::Gauss30 | ModelKind::Chisq30 => 30,
            ModelKind::Gauss500 => 500,
        }
    }

    /// Sample size used by the reference experiments for this model.
    pub fn default_n(self) -> usize {
        match self {
            ModelKind::Toy2D => 2000,
            ModelKind::Gauss30 | ModelKind::Chisq30 => 1000,
            ModelKind::Gauss500 | ModelKind::Mixture2D => 400,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| {
                let ids: Vec<_> = ModelKind::ALL.iter().map(|k| k.id()).collect();
                format!("unknown model `{s}` (expected one of {})", ids.join(", "))
            })
    }
}

/// One-dimensional class-conditional distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Marginal {
    Normal {
        mean: f64,
        sd: f64,
    },
    ChiSquared {
        df: f64,
    },
    /// Components as `(weight, mean, sd)`.
    NormalMixture(Vec<(f64, f64, f64)>),
}

fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

impl Marginal {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Marginal::Normal { mean, sd } => Normal::new(*mean, *sd).unwrap().sample(rng),
            Marginal::ChiSquared { df } => ChiSquared::new(*df).unwrap().sample(rng),
            Marginal::NormalMixture(parts) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = parts.len() - 1;
                for (i, (w, _, _)) in parts.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                let (_, mean, sd) = parts[pick];
                Normal::new(mean, sd).unwrap().sample(rng)
            }
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Normal { mean, sd } => normal_ln_pdf(x, *mean, *sd),
            Marginal::ChiSquared { df } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let k = df / 2.0;
                (k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)
            }
            Marginal::NormalMixture(parts) => {
                let logs: Vec<f64> = parts
                    .iter()
                    .map(|(w, m, s)| w.ln() + normal_ln_pdf(x, *m, *s))
                    .collect();
                let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub class0: Marginal,
    pub class1: Marginal,
}

impl FeatureModel {
    /// `ln(p1(x) / p0(x))`.
    pub fn log_density_ratio(&self, x: f64) -> f64 {
        self.class1.ln_pdf(x) - self.class0.ln_pdf(x)
    }
}

/// A fully resolved generative model: class prior plus per-feature marginals.
/// Features are independent given the class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub prior1: f64,
    pub features: Vec<FeatureModel>,
}

const INFORMATIVE: usize = 10;

fn gaussian_block(d: usize, rng: &mut ChaCha8Rng) -> Vec<FeatureModel> {
    let sd = 2.0; // covariance 4 I
    let noise = Normal::new(0.0, 1.0).unwrap();
    (0..d)
        .map(|j| {
            let (mu0, mu1) = if j < INFORMATIVE {
                (-1.5, 1.0 - 0.1 * j as f64)
            } else {
                let mu = noise.sample(rng);
                (mu, mu)
            };
            FeatureModel {
                class0: Marginal::Normal { mean: mu0, sd },
                class1: Marginal::Normal { mean: mu1, sd },
            }
        })
        .collect()
}

impl Model {
    /// Resolves `kind`. Noise-feature means of the Gaussian models are drawn once
    /// from `seed` and stay fixed for every sample drawn from the model.
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        let normal = |mean, sd| Marginal::Normal { mean, sd };
        let features = match kind {
            ModelKind::Toy2D => vec![
                FeatureModel {
                    class0: normal(-5.0, 2.0),
                    class1: normal(0.0, 2.0),
                },
                FeatureModel {
                    class0: normal(-5.0, 2.0),
                    class1: normal(1.5, 3.5),
                },
            ],
            ModelKind::Gauss30 | ModelKind::Gauss500 => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(0);
                gaussian_block(kind.n_features(), &mut rng)
            }
            ModelKind::Chisq30 => (0..30)
                .map(|j| FeatureModel {
                    class0: Marginal::ChiSquared { df: 1.0 },
                    class1: Marginal::ChiSquared {
                        df: if j < INFORMATIVE {
                            11.0 - j as f64
                        } else {
                            1.0
                        },
                    },
                })
                .collect(),
            ModelKind::Mixture2D => vec![
                FeatureModel {
                    class0: normal(0.0, 1.0),
                    class1: normal(1.0, 1.0),
                },
                FeatureModel {
                    class0: normal(0.0, 1.0),
                    class1: Marginal::NormalMixture(vec![(0.5, -2.0, 1.0), (0.5, 2.0, 1.0)]),
                },
            ],
        };
        Self {
            kind,
            prior1: 0.5,
            features,
        }
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        (1..=self.n_features()).map(|j| format!("X{j}")).collect()
    }

    /// Draws `n` i.i.d. rows with Bernoulli(prior1) labels. A draw with an empty
    /// class is discarded and redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        loop {
            let labels: Vec<u8> = (0..n).map(|_| rng.random_bool(self.prior1) as u8).collect();
            let ones = labels.iter().filter(|&&l| l == 1).count();
            if ones == 0 || ones == n {
                continue;
            }
            let mut columns = vec![Vec::with_capacity(n); self.n_features()];
            for &l in &labels {
                for (col, f) in columns.iter_mut().zip(&self.features) {
                    let dist = if l == 0 { &f.class0 } else { &f.class1 };
                    col.push(dist.sample(rng));
                }
            }
            return Dataset::new(columns, labels, self.feature_names())
                .expect("generated data is valid");
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n: usize, seed: u64) -> Result<Self, SimulationError> {
        if n < 4 {
            return Err(SimulationError::SampleTooSmall(n));
        }
        Ok(Self { kind, n, seed })
    }

    pub fn model(&self) -> Model {
        Model::new(self.kind, self.seed)
    }
}

/// First dataset of `spec`; same as `generate_rep(spec, 0)`.
pub fn generate(spec: &ModelSpec) -> Dataset {
    generate_rep(spec, 0)
}

/// The `rep`-th dataset of `spec`, drawn from its own ChaCha stream so reps are
/// independent of evaluation order.
pub fn generate_rep(spec: &ModelSpec, rep: usize) -> Dataset {
    generate_with(&spec.model(), spec, rep)
}

fn generate_with(model: &Model, spec: &ModelSpec, rep: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(rep as u64 + 1);
    model.sample(spec.n, &mut rng)
}

/// A ranking method applied in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Ranker {
    Criterion(CriterionConfig),
    Baseline(BaselineKind),
}

impl Ranker {
    pub fn label(&self) -> String {
        match self {
            Ranker::Criterion(c) => c.label(),
            Ranker::Baseline(b) => b.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerReport {
    pub label: String,
    pub ranker: Ranker,
    /// Fraction of reps in which each feature was ranked first.
    pub top_frequency: Vec<f64>,
    pub average_ranks: Vec<f64>,
    /// `rank_histograms[j][r - 1]`: reps in which feature `j` got rank `r`.
    pub rank_histograms: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ModelSpec,
    pub reps: usize,
    pub feature_names: Vec<String>,
    pub rankers: Vec<RankerReport>,
}

impl ExperimentReport {
    pub fn ranker(&self, label: &str) -> Option<&RankerReport> {
        self.rankers.iter().find(|r| r.label == label)
    }
}

/// Ranks of every feature under every ranker for one dataset; `rep` only labels errors.
pub fn rank_all(
    dataset: &Dataset,
    rankers: &[Ranker],
    rep: usize,
) -> Result<Vec<Vec<usize>>, SimulationError> {
    let configs: Vec<CriterionConfig> = rankers
        .iter()
        .filter_map(|r| match r {
            Ranker::Criterion(c) => Some(*c),
            Ranker::Baseline(_) => None,
        })
        .collect();
    let mut criteria = rank_features_multi(dataset, &configs)
        .map_err(|source| SimulationError::Criterion { rep, source })?
        .into_iter();
    rankers
        .iter()
        .map(|r| match r {
            Ranker::Criterion(_) => Ok(criteria.next().expect("one result per config").ranks),
            Ranker::Baseline(b) => rank_by_baseline(dataset, *b)
                .map(|r| r.ranks)
                .map_err(|source| SimulationError::Baseline { rep, source }),
        })
        .collect()
}

/// Draws `reps` datasets from `spec` and ranks each with every ranker.
pub fn run_experiment(
    spec: &ModelSpec,
    rankers: &[Ranker],
    reps: usize,
) -> Result<ExperimentReport, SimulationError> {
    if reps == 0 {
        return Err(SimulationError::NoReps);
    }
    let model = spec.model();
    let d = model.n_features();
    let per_rep: Vec<Result<Vec<Vec<usize>>, SimulationError>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let ds = generate_with(&model, spec, rep);
            rank_all(&ds, rankers, rep)
        })
        .collect();

    let mut hist = vec![vec![vec![0u32; d]; d]; rankers.len()];
    for rep_ranks in per_rep {
        for (h, ranks) in hist.iter_mut().zip(rep_ranks?) {
            for (j, &r) in ranks.iter().enumerate() {
                h[j][r - 1] += 1;
            }
        }
    }
    let rankers = rankers
        .iter()
        .zip(hist)
        .map(|(ranker, h)| {
            let top_frequency = h.iter().map(|row| row[0] as f64 / reps as f64).collect();
            let average_ranks = h
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .map(|(r, &c)| (r + 1) as f64 * c as f64)
                        .sum::<f64>()
                        / reps as f64
                })
                .collect();
            RankerReport {
                label: ranker.label(),
                ranker: *ranker,
                top_frequency,
                average_ranks,
                rank_histograms: h,
            }
        })
        .collect();
    Ok(ExperimentReport {
        spec: *spec,
        reps,
        feature_names: model.feature_names(),
        rankers,
    })
}

/// Frequency with which each feature is ranked first.
pub fn run_rank_frequency(
    spec: &ModelSpec,
    rankers: &[Ranker],
    reps: usize,
) -> Result<ExperimentReport, SimulationError> {
    run_experiment(spec, rankers, reps)
}

/// Average rank and rank distribution of each feature.
pub fn run_average_ranks(
    spec: &ModelSpec,
    rankers: &[Ranker],
    reps: usize,
) -> Result<ExperimentReport, SimulationError> {
    run_experiment(spec, rankers, reps)
}
