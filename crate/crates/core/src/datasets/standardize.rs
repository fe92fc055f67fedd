use super::{DatasetError, TabularDataset};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardizeMode {
    FeaturesOnly,
    FeaturesAndTarget,
}

/// Optional monotone map applied to the target before any z-scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetTransform {
    #[default]
    None,
    Log1p,
}

impl TargetTransform {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetTransform::None => "none",
            TargetTransform::Log1p => "log1p",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(TargetTransform::None),
            "log1p" => Some(TargetTransform::Log1p),
            _ => None,
        }
    }

    fn forward(self, y: f64) -> f64 {
        match self {
            TargetTransform::None => y,
            TargetTransform::Log1p => y.ln_1p(),
        }
    }

    fn inverse(self, y: f64) -> f64 {
        match self {
            TargetTransform::None => y,
            TargetTransform::Log1p => y.exp_m1(),
        }
    }
}

/// Affine z-score maps fitted on the training split.
///
/// Columns with (numerically) zero variance get the identity map.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mode: StandardizeMode,
    pub target_transform: TargetTransform,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub target_mean: f64,
    pub target_scale: f64,
}

fn mean_and_scale(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= 1e-12 * mean.abs().max(1.0) {
        (0.0, 1.0)
    } else {
        (mean, sd)
    }
}

impl Standardization {
    pub fn identity(d: usize) -> Self {
        Self {
            mode: StandardizeMode::FeaturesOnly,
            target_transform: TargetTransform::None,
            feature_mean: vec![0.0; d],
            feature_scale: vec![1.0; d],
            target_mean: 0.0,
            target_scale: 1.0,
        }
    }

    pub fn transform_features(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.feature_mean[j]) / self.feature_scale[j];
            }
        }
        out
    }

    pub fn transform_target(&self, y: f64) -> f64 {
        (self.target_transform.forward(y) - self.target_mean) / self.target_scale
    }

    pub fn inverse_target(&self, y: f64) -> f64 {
        self.target_transform.inverse(y * self.target_scale + self.target_mean)
    }

    pub fn inverse_targets(&self, ys: &mut [f64]) {
        ys.iter_mut().for_each(|y| *y = self.inverse_target(*y));
    }
}

/// Z-scores features (and optionally the target) with train-split statistics.
pub fn standardize(
    ds: &TabularDataset,
    mode: StandardizeMode,
) -> Result<(TabularDataset, Standardization), DatasetError> {
    standardize_with(ds, mode, TargetTransform::None)
}

/// [`standardize`] with `target_transform` applied to every target first;
/// target statistics are then taken on the transformed scale.
pub fn standardize_with(
    ds: &TabularDataset,
    mode: StandardizeMode,
    target_transform: TargetTransform,
) -> Result<(TabularDataset, Standardization), DatasetError> {
    if target_transform == TargetTransform::Log1p {
        if let Some(bad) = ds.targets.iter().find(|&&y| !(y > -1.0)) {
            return Err(DatasetError::Transform(format!("log1p needs targets > -1, found {bad}")));
        }
    }
    let train = &ds.split.train;
    if train.is_empty() {
        return Err(DatasetError::Empty(format!("{} train split", ds.name())));
    }
    let d = ds.n_features();
    let mut t = Standardization::identity(d);
    t.mode = mode;
    t.target_transform = target_transform;
    for j in 0..d {
        let (m, s) = mean_and_scale(train.iter().map(|&i| ds.features.get(i, j)));
        t.feature_mean[j] = m;
        t.feature_scale[j] = s;
    }
    if mode == StandardizeMode::FeaturesAndTarget {
        let (m, s) = mean_and_scale(train.iter().map(|&i| target_transform.forward(ds.targets[i])));
        t.target_mean = m;
        t.target_scale = s;
    }
    let mut out = ds.clone();
    out.features = t.transform_features(&ds.features);
    out.targets = ds.targets.iter().map(|&y| t.transform_target(y)).collect();
    out.meta.standardized = true;
    Ok((out, t))
}
