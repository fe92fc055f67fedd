//! Tabular datasets: synthetic generators, real-data CSV loaders, splitting
//! and standardization.

mod csv_loader;
mod standardize;
mod synthetic;
mod tweedie;

use std::collections::HashSet;
use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;

use crate::matrix::Matrix;
use crate::rng;

pub use csv_loader::{load_csv_dataset, CsvSchema};
pub use standardize::{standardize, standardize_with, StandardizeMode, Standardization, TargetTransform};
pub use synthetic::{
    gen_classification, gen_classification_with, gen_heteroscedastic, gen_normal, gen_normal_with, gen_tweedie,
    gen_tweedie_with, sample_mvn_isotropic, HeteroNoise, LinearCoefficients, SyntheticKind, LINEAR_DIM,
};
pub use tweedie::{sample_tweedie, TweedieParams};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("schema mismatch in {path}: expected columns {expected:?}, found {found:?}")]
    Schema {
        path: PathBuf,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{path} line {line}: cannot parse {column} value {value:?}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("tweedie parameters out of range: {0}")]
    Domain(String),
    #[error("target transform: {0}")]
    Transform(String),
    #[error("invalid split ratios {0:?}: must be non-negative and sum to 1")]
    Ratios([f64; 3]),
    #[error("dataset {0} is empty")]
    Empty(String),
    #[error("features hold {features} values, not a multiple of {n} rows")]
    Shape { features: usize, n: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Disjoint train/validation/test row indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl Split {
    pub fn indices(&self, which: SplitName) -> &[usize] {
        match which {
            SplitName::Train => &self.train,
            SplitName::Val => &self.val,
            SplitName::Test => &self.test,
        }
    }

    /// True when the three sets are disjoint and cover `0..n` exactly.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = HashSet::with_capacity(n);
        let all = self.train.iter().chain(&self.val).chain(&self.test);
        for &i in all {
            if i >= n || !seen.insert(i) {
                return false;
            }
        }
        seen.len() == n
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetMeta {
    pub name: String,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub standardized: bool,
    /// Free-form notes on generation choices (e.g. covariate distribution).
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub features: Matrix,
    pub targets: Vec<f64>,
    pub split: Split,
    pub meta: DatasetMeta,
}

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.6, 0.2, 0.2);

impl TabularDataset {
    /// Builds a dataset and assigns the default 60/20/20 split from `seed`.
    pub fn from_parts(
        name: &str,
        features: Matrix,
        targets: Vec<f64>,
        feature_names: Vec<String>,
        seed: u64,
    ) -> Result<Self, DatasetError> {
        if features.rows() != targets.len() {
            return Err(DatasetError::Shape { features: features.as_slice().len(), n: targets.len() });
        }
        if targets.is_empty() {
            return Err(DatasetError::Empty(name.to_string()));
        }
        let ds = Self {
            features,
            targets,
            split: Split::default(),
            meta: DatasetMeta { name: name.to_string(), seed, feature_names, ..DatasetMeta::default() },
        };
        split_dataset(ds, DEFAULT_RATIOS, seed)
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub fn split_features(&self, which: SplitName) -> Matrix {
        self.features.select_rows(self.split.indices(which))
    }

    pub fn split_targets(&self, which: SplitName) -> Vec<f64> {
        self.split.indices(which).iter().map(|&i| self.targets[i]).collect()
    }

    /// Writes `x_0..x_{d-1}, y` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.n_features()).map(|j| format!("x_{j}")).collect();
        header.push("y".to_string());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = self.features.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.targets[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seeded uniform shuffle into train/val/test by `ratios`.
///
/// Train and validation sizes are `round(ratio · n)`; test takes the rest.
pub fn split_dataset(
    mut ds: TabularDataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<TabularDataset, DatasetError> {
    let (a, b, c) = ratios;
    if [a, b, c].iter().any(|r| !(*r >= 0.0)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(DatasetError::Ratios([a, b, c]));
    }
    let n = ds.n_rows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, "split"));
    let n_train = ((a * n as f64).round() as usize).min(n);
    let n_val = ((b * n as f64).round() as usize).min(n - n_train);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    ds.split = Split { train: idx, val, test };
    Ok(ds)
}


/// A dataset on its original scale together with its standardized copy.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub raw: TabularDataset,
    pub scaled: TabularDataset,
    pub transform: Standardization,
}

impl PreparedData {
    pub fn new(raw: TabularDataset, mode: StandardizeMode) -> Result<Self, DatasetError> {
        Self::with_target_transform(raw, mode, TargetTransform::None)
    }

    pub fn with_target_transform(
        raw: TabularDataset,
        mode: StandardizeMode,
        target_transform: TargetTransform,
    ) -> Result<Self, DatasetError> {
        let (scaled, transform) = standardize_with(&raw, mode, target_transform)?;
        Ok(Self { raw, scaled, transform })
    }

    /// Wraps an already model-ready dataset with the identity transform.
    pub fn unscaled(raw: TabularDataset) -> Self {
        let transform = Standardization::identity(raw.n_features());
        Self { scaled: raw.clone(), raw, transform }
    }
}

#[cfg(test)]
mod tests;
