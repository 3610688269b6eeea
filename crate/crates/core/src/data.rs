//! Labeled binary datasets, CSV ingestion and stratified half-splits.
//!
//! Class 0 is the error-controlled class throughout the crate: the Neyman-Pearson
//! criterion bounds the probability of misclassifying a class-0 observation.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("input has no header row")]
    MissingHeader,
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("label column `{column}` row {row}: value `{value}` is not 0 or 1")]
    NonBinaryLabel {
        column: String,
        row: usize,
        value: String,
    },
    #[error("column `{column}` row {row}: cell `{value}` is not a number")]
    NonNumericCell {
        column: String,
        row: usize,
        value: String,
    },
    #[error("column `{column}` row {row}: value is not finite")]
    NonFiniteValue { column: String, row: usize },
    #[error("class {0} has no observations")]
    EmptyClass(u8),
    #[error("duplicate feature name `{0}`")]
    DuplicateFeatureName(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("class sizes m={m}, n={n} are too small for half-splitting (need at least 2 each)")]
    ClassTooSmall { m: usize, n: usize },
    #[error("number of splits must be positive")]
    NoSplits,
}

/// A labeled sample stored column-major: one vector per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from feature columns, validating every invariant.
    pub fn new(
        columns: Vec<Vec<f64>>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if columns.len() != feature_names.len() {
            return Err(DataError::Shape(format!(
                "{} feature columns but {} feature names",
                columns.len(),
                feature_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(DataError::DuplicateFeatureName(name.clone()));
            }
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != labels.len() {
                return Err(DataError::Shape(format!(
                    "column `{}` has {} values but there are {} labels",
                    feature_names[j],
                    col.len(),
                    labels.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFiniteValue {
                    column: feature_names[j].clone(),
                    row,
                });
            }
        }
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(DataError::NonBinaryLabel {
                column: "<labels>".into(),
                row,
                value: labels[row].to_string(),
            });
        }
        for class in [0u8, 1] {
            if !labels.contains(&class) {
                return Err(DataError::EmptyClass(class));
            }
        }
        Ok(Self {
            columns,
            labels,
            feature_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Number of observations in `class`.
    pub fn class_count(&self, class: u8) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }

    /// Row positions of `class`, in row order. Split plans index into this list.
    pub fn class_rows(&self, class: u8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect()
    }

    /// Values of one feature restricted to one class, in row order.
    pub fn class_values(&self, feature: usize, class: u8) -> Vec<f64> {
        self.columns[feature]
            .iter()
            .zip(&self.labels)
            .filter_map(|(&v, &l)| (l == class).then_some(v))
            .collect()
    }

    /// Exchanges the roles of class 0 and class 1 without touching the features.
    pub fn swap_labels(&self) -> Self {
        Self {
            columns: self.columns.clone(),
            labels: self.labels.iter().map(|&l| 1 - l).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Keeps only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, DataError> {
        let columns = self
            .columns
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Self::new(columns, labels, self.feature_names.clone())
    }
}

/// Reads a dataset from a CSV file. Every column other than `label_column` becomes
/// a feature, in header order.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label_column)
}

pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        return Err(DataError::MissingHeader);
    }
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DataError::MissingLabelColumn(label_column.to_string()))?;
    let feature_idx: Vec<usize> = (0..header.len()).filter(|&i| i != label_idx).collect();
    let names: Vec<String> = feature_idx.iter().map(|&i| header[i].to_string()).collect();

    let mut columns = vec![Vec::new(); feature_idx.len()];
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let raw_label = &record[label_idx];
        let label = match raw_label.parse::<f64>() {
            Ok(0.0) => 0,
            Ok(1.0) => 1,
            _ => {
                return Err(DataError::NonBinaryLabel {
                    column: label_column.to_string(),
                    row,
                    value: raw_label.to_string(),
                })
            }
        };
        labels.push(label);
        for (col, &i) in columns.iter_mut().zip(&feature_idx) {
            let cell = &record[i];
            let value: f64 = cell.parse().map_err(|_| DataError::NonNumericCell {
                column: header[i].to_string(),
                row,
                value: cell.to_string(),
            })?;
            col.push(value);
        }
    }
    Dataset::new(columns, labels, names)
}

/// One stratified half-split. Indices are positions within each class (see
/// [`Dataset::class_rows`]), not raw row numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub class0_ts: Vec<usize>,
    pub class0_lo: Vec<usize>,
    pub class1_ts: Vec<usize>,
    pub class1_lo: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub splits: Vec<Split>,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
}

impl SplitPlan {
    pub fn n_splits(&self) -> usize {
        self.splits.len()
    }
}

/// Derives `b`-th split from `(seed, b)` alone: the ChaCha stream id is the split
/// index, so splits can be generated in any order or in parallel.
pub fn make_split(m: usize, n: usize, seed: u64, b: usize) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    let (class0_ts, class0_lo) = halve(m, &mut rng);
    let (class1_ts, class1_lo) = halve(n, &mut rng);
    Split {
        class0_ts,
        class0_lo,
        class1_ts,
        class1_lo,
    }
}

fn halve(len: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(rng);
    let mut lo = idx.split_off(len / 2);
    let mut ts = idx;
    ts.sort_unstable();
    lo.sort_unstable();
    (ts, lo)
}

/// `B` independent stratified half-splits with `|ts| = floor(size / 2)` per class.
pub fn make_splits(m: usize, n: usize, b: usize, seed: u64) -> Result<SplitPlan, DataError> {
    if m < 2 || n < 2 {
        return Err(DataError::ClassTooSmall { m, n });
    }
    if b == 0 {
        return Err(DataError::NoSplits);
    }
    Ok(SplitPlan {
        splits: (0..b).map(|i| make_split(m, n, seed, i)).collect(),
        seed,
        m,
        n,
    })
}
