//! Binary-classification datasets: loading, splitting, island sharding,
//! column projection and standardization.
//!
//! A [`Dataset`] is immutable once built and can be shared freely between
//! worker threads.

mod io;
mod split;

pub use io::{load_csv, load_libsvm, read_csv, read_libsvm, write_csv, write_libsvm, CsvOptions, LabelColumn, LabelMap};
pub use split::{shard, stratified_split, DataShard};

use thiserror::Error;

use crate::mask::FeatureMask;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error at row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: cannot parse {value:?} as a finite number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown label column {0}")]
    UnknownLabelColumn(String),
    #[error("row {row}, column {column}: label {value:?} is not a recognised class token")]
    BadLabel {
        row: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: {message}")]
    Libsvm { line: usize, message: String },
    #[error("feature matrix has {rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("feature index {index} out of range for {n_features} features")]
    FeatureIndex { index: usize, n_features: usize },
    #[error("dataset must have at least one feature")]
    NoFeatures,
    #[error("labels must be 0 or 1, found {0}")]
    LabelValue(u8),
    #[error("class {class} has {count} rows, too few to {purpose}")]
    ClassTooSmall {
        class: u8,
        count: usize,
        purpose: String,
    },
    #[error("test fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("mask length {mask} does not match feature count {features}")]
    MaskLength { mask: usize, features: usize },
    #[error("mask selects no features")]
    EmptyMask,
    #[error("train has {train} features but test has {test}")]
    FeatureCountMismatch { train: usize, test: usize },
    #[error("dataset has no rows")]
    Empty,
}

/// Feature storage. Dense values are row-major; sparse rows hold
/// `(column, value)` pairs in strictly increasing column order.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(Vec<f64>),
    Sparse(Vec<Vec<(usize, f64)>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Features,
    labels: Vec<u8>,
    n_features: usize,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dense dataset from row-major values.
    pub fn dense(values: Vec<f64>, n_features: usize, labels: Vec<u8>) -> Result<Self, DataError> {
        if n_features == 0 {
            return Err(DataError::NoFeatures);
        }
        if values.len() != labels.len() * n_features {
            return Err(DataError::LabelCount {
                rows: values.len() / n_features,
                labels: labels.len(),
            });
        }
        check_labels(&labels)?;
        Ok(Self {
            features: Features::Dense(values),
            labels,
            n_features,
            feature_names: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self, DataError> {
        let n_features = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(DataError::Ragged {
                    row: i,
                    expected: n_features,
                    found: row.len(),
                });
            }
        }
        Self::dense(rows.concat(), n_features, labels)
    }

    pub fn sparse(
        rows: Vec<Vec<(usize, f64)>>,
        n_features: usize,
        labels: Vec<u8>,
    ) -> Result<Self, DataError> {
        if n_features == 0 {
            return Err(DataError::NoFeatures);
        }
        if rows.len() != labels.len() {
            return Err(DataError::LabelCount {
                rows: rows.len(),
                labels: labels.len(),
            });
        }
        for row in &rows {
            for (pos, &(index, _)) in row.iter().enumerate() {
                if index >= n_features {
                    return Err(DataError::FeatureIndex { index, n_features });
                }
                if pos > 0 && row[pos - 1].0 >= index {
                    return Err(DataError::FeatureIndex { index, n_features });
                }
            }
        }
        check_labels(&labels)?;
        Ok(Self {
            features: Features::Sparse(rows),
            labels,
            n_features,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.n_features, "one name per feature");
        self.feature_names = Some(names);
        self
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.features, Features::Sparse(_))
    }

    /// Row-major values when the storage is dense.
    pub fn dense_values(&self) -> Option<&[f64]> {
        match &self.features {
            Features::Dense(v) => Some(v),
            Features::Sparse(_) => None,
        }
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        match &self.features {
            Features::Dense(v) => v[row * self.n_features + col],
            Features::Sparse(rows) => rows[row]
                .binary_search_by_key(&col, |&(c, _)| c)
                .map_or(0.0, |pos| rows[row][pos].1),
        }
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        match &self.features {
            Features::Dense(v) => v[row * self.n_features..(row + 1) * self.n_features].to_vec(),
            Features::Sparse(rows) => {
                let mut out = vec![0.0; self.n_features];
                for &(c, x) in &rows[row] {
                    out[c] = x;
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> Dataset {
        match &self.features {
            Features::Dense(_) => self.clone(),
            Features::Sparse(_) => {
                let values = (0..self.n_rows()).flat_map(|r| self.row(r)).collect();
                Dataset {
                    features: Features::Dense(values),
                    labels: self.labels.clone(),
                    n_features: self.n_features,
                    feature_names: self.feature_names.clone(),
                }
            }
        }
    }

    /// `[negatives, positives]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let positives = self.labels.iter().filter(|&&y| y == 1).count();
        [self.labels.len() - positives, positives]
    }

    pub fn has_both_classes(&self) -> bool {
        let [neg, pos] = self.class_counts();
        neg > 0 && pos > 0
    }

    /// Copy of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let features = match &self.features {
            Features::Dense(v) => Features::Dense(
                rows.iter()
                    .flat_map(|&r| &v[r * self.n_features..(r + 1) * self.n_features])
                    .copied()
                    .collect(),
            ),
            Features::Sparse(s) => Features::Sparse(rows.iter().map(|&r| s[r].clone()).collect()),
        };
        Dataset {
            features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            n_features: self.n_features,
            feature_names: self.feature_names.clone(),
        }
    }

    /// Dense copy restricted to `columns`, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Dataset {
        let n = self.n_rows();
        let mut values = Vec::with_capacity(n * columns.len());
        match &self.features {
            Features::Dense(v) => {
                for r in 0..n {
                    let row = &v[r * self.n_features..(r + 1) * self.n_features];
                    values.extend(columns.iter().map(|&c| row[c]));
                }
            }
            Features::Sparse(_) => {
                for r in 0..n {
                    values.extend(columns.iter().map(|&c| self.value(r, c)));
                }
            }
        }
        Dataset {
            features: Features::Dense(values),
            labels: self.labels.clone(),
            n_features: columns.len(),
            feature_names: self
                .feature_names
                .as_ref()
                .map(|names| columns.iter().map(|&c| names[c].clone()).collect()),
        }
    }
}

fn check_labels(labels: &[u8]) -> Result<(), DataError> {
    match labels.iter().find(|&&y| y > 1) {
        Some(&bad) => Err(DataError::LabelValue(bad)),
        None => Ok(()),
    }
}

/// Keeps exactly the set-bit columns of `mask`, order preserved.
pub fn project(ds: &Dataset, mask: &FeatureMask) -> Result<Dataset, DataError> {
    if mask.len() != ds.n_features() {
        return Err(DataError::MaskLength {
            mask: mask.len(),
            features: ds.n_features(),
        });
    }
    let columns = mask.selected();
    if columns.is_empty() {
        return Err(DataError::EmptyMask);
    }
    Ok(ds.select_columns(&columns))
}

/// Per-column statistics fitted on the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Population standard deviations; 0 marks a zero-variance column.
    pub stds: Vec<f64>,
}

impl Standardization {
    pub fn fit(ds: &Dataset) -> Result<Self, DataError> {
        let n = ds.n_rows();
        if n == 0 {
            return Err(DataError::Empty);
        }
        let d = ds.n_features();
        let dense = ds.to_dense();
        let values = dense.dense_values().expect("dense");
        let mut means = vec![0.0; d];
        for row in values.chunks_exact(d) {
            for (m, &x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut vars = vec![0.0; d];
        for row in values.chunks_exact(d) {
            for ((v, &x), &m) in vars.iter_mut().zip(row).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let stds = vars
            .iter()
            .zip(&means)
            .map(|(&v, &m)| {
                let s = (v / n as f64).sqrt();
                // rounding noise on a constant column is not variance
                if s <= 1e-12 * m.abs().max(1.0) {
                    0.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { means, stds })
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset, DataError> {
        let d = self.means.len();
        if ds.n_features() != d {
            return Err(DataError::FeatureCountMismatch {
                train: d,
                test: ds.n_features(),
            });
        }
        let mut dense = ds.to_dense();
        if let Features::Dense(values) = &mut dense.features {
            for row in values.chunks_exact_mut(d) {
                for ((x, &m), &s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
                    *x -= m;
                    if s > 0.0 {
                        *x /= s;
                    }
                }
            }
        }
        Ok(dense)
    }
}

/// Standardizes `train` to zero mean and unit variance per column and
/// applies the same statistics to `test`.
pub fn standardize(
    train: &Dataset,
    test: &Dataset,
) -> Result<(Dataset, Dataset, Standardization), DataError> {
    let stats = Standardization::fit(train)?;
    Ok((stats.apply(train)?, stats.apply(test)?, stats))
}
