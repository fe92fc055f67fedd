//! Error metrics and split-level model evaluation.

use rand::Rng;

use crate::datasets::{PreparedData, SplitName};
use crate::gp::{GpError, GpModel};
use crate::models::{predict_point, FnnRegressor, GeneratorNet, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {0} targets vs {1} predictions")]
    Length(usize, usize),
    #[error("relative error undefined: every target is zero")]
    AllZero,
    #[error("empty split")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gp(#[from] GpError),
}

fn check(y: &[f64], yhat: &[f64]) -> Result<(), EvalError> {
    if y.len() != yhat.len() {
        return Err(EvalError::Length(y.len(), yhat.len()));
    }
    if y.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// Mean absolute error, `mean |y − ŷ|`.
pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    check(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// `mean |(y − ŷ)/y|` over rows with `y ≠ 0`, and the number of zero rows skipped.
pub fn relative_mae(y: &[f64], yhat: &[f64]) -> Result<(f64, usize), EvalError> {
    if y.len() != yhat.len() {
        return Err(EvalError::Length(y.len(), yhat.len()));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (a, b) in y.iter().zip(yhat) {
        if *a != 0.0 {
            sum += ((a - b) / a).abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(EvalError::AllZero);
    }
    Ok((sum / used as f64, y.len() - used))
}

/// One (dataset, model, split) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub dataset: String,
    pub model: String,
    pub split: String,
    pub n: usize,
    pub mae: f64,
    pub relative_mae: Option<f64>,
    pub excluded_zero_rows: usize,
    pub seed: u64,
    pub config_hash: String,
}

impl MetricsReport {
    pub const CSV_HEADER: [&'static str; 9] = [
        "dataset",
        "model",
        "split",
        "n",
        "mae",
        "relative_mae",
        "excluded_zero_rows",
        "seed",
        "config_hash",
    ];

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.dataset.clone(),
            self.model.clone(),
            self.split.clone(),
            self.n.to_string(),
            format!("{:e}", self.mae),
            self.relative_mae.map_or(String::new(), |v| format!("{v:e}")),
            self.excluded_zero_rows.to_string(),
            self.seed.to_string(),
            self.config_hash.clone(),
        ]
    }

    pub fn from_csv_fields(fields: &[&str]) -> Option<Self> {
        if fields.len() != Self::CSV_HEADER.len() {
            return None;
        }
        Some(Self {
            dataset: fields[0].to_string(),
            model: fields[1].to_string(),
            split: fields[2].to_string(),
            n: fields[3].parse().ok()?,
            mae: fields[4].parse().ok()?,
            relative_mae: if fields[5].is_empty() { None } else { Some(fields[5].parse().ok()?) },
            excluded_zero_rows: fields[6].parse().ok()?,
            seed: fields[7].parse().ok()?,
            config_hash: fields[8].to_string(),
        })
    }
}

/// A fitted model of any of the three families.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Generator(GeneratorNet),
    Fnn(FnnRegressor),
    Gp(GpModel),
}

impl TrainedModel {
    /// Predictions on the model's (standardized) target scale.
    pub fn predict(&self, x: &crate::Matrix, k_samples: usize, rng: &mut impl Rng) -> Result<Vec<f64>, EvalError> {
        Ok(match self {
            TrainedModel::Generator(g) => predict_point(g, x, k_samples, rng)?,
            TrainedModel::Fnn(f) => f.forward(x)?,
            TrainedModel::Gp(gp) => gp.predict_mean(x)?,
        })
    }
}

/// Predicts a split and scores it on the original target scale.
///
/// `model_name`, `seed` and `config_hash` only label the report.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_model(
    model: &TrainedModel,
    model_name: &str,
    data: &PreparedData,
    split: SplitName,
    k_samples: usize,
    seed: u64,
    config_hash: &str,
    rng: &mut impl Rng,
) -> Result<MetricsReport, EvalError> {
    let x = data.scaled.split_features(split);
    if x.rows() == 0 {
        return Err(EvalError::Empty);
    }
    let mut pred = model.predict(&x, k_samples, rng)?;
    data.transform.inverse_targets(&mut pred);
    let y = data.raw.split_targets(split);
    let mae_value = mae(&y, &pred)?;
    let (relative, excluded) = match relative_mae(&y, &pred) {
        Ok((v, e)) => (Some(v), e),
        Err(EvalError::AllZero) => (None, y.len()),
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        dataset: data.raw.name().to_string(),
        model: model_name.to_string(),
        split: split.as_str().to_string(),
        n: y.len(),
        mae: mae_value,
        relative_mae: relative,
        excluded_zero_rows: excluded,
        seed,
        config_hash: config_hash.to_string(),
    })
}
