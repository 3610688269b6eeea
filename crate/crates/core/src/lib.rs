//! Marginal feature ranking aligned with a prediction objective.
//!
//! Features of a labeled binary dataset are ranked by how well a classifier built
//! on each feature alone performs under either
//!
//! * the classical paradigm (overall misclassification rate), or
//! * the Neyman-Pearson paradigm (type II error subject to a type I error cap
//!   `alpha`, enforced with violation probability at most `delta1`).
//!
//! Both criteria are model-free: class-conditional densities are estimated with
//! kernel density estimators and combined into a density-ratio score.
//!
//! Modules:
//! - [`data`]: datasets, CSV ingestion, stratified split plans
//! - [`kde`]: kernel density estimates and density-ratio scores
//! - [`umbrella`]: binomial tails, umbrella order and threshold
//! - [`criteria`]: s-CC / s-NPC and feature ranking
//! - [`baselines`]: Pearson, distance correlation, Welch t, Wilcoxon rank-sum
//! - [`oracle`]: closed-form and Monte Carlo population criteria
//! - [`simulate`]: generative models and experiment drivers
//! - [`metrics`]: rank-list consistency and class subsampling

pub mod baselines;
pub mod criteria;
pub mod data;
pub mod kde;
pub mod metrics;
pub mod oracle;
pub mod simulate;
pub mod umbrella;

pub use criteria::{rank_features, CriterionConfig, CriterionKind, RankingResult};
pub use data::{load_csv, make_splits, Dataset, SplitPlan};
pub use kde::{BandwidthRule, KdeConfig, Kernel};
pub use umbrella::UmbrellaConfig;
