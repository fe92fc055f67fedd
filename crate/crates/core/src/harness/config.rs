use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::datasets::{StandardizeMode, SyntheticKind, TargetTransform};
use crate::models::ArchConfig;
use crate::training::{GanTrainConfig, GeneratorLoss};

use super::HarnessError;

/// Model families a sweep can include.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    RegressGan,
    FnnMse,
    Gp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::RegressGan => "regressgan",
            ModelKind::FnnMse => "fnn_mse",
            ModelKind::Gp => "gp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [ModelKind::RegressGan, ModelKind::FnnMse, ModelKind::Gp].into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Synthetic(SyntheticKind),
    CarInsurance,
    HealthInsurance,
}

impl DatasetKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "car_insurance" => Some(DatasetKind::CarInsurance),
            "health_insurance" => Some(DatasetKind::HealthInsurance),
            other => SyntheticKind::parse(other).map(DatasetKind::Synthetic),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Synthetic(k) => k.name(),
            DatasetKind::CarInsurance => "car_insurance",
            DatasetKind::HealthInsurance => "health_insurance",
        }
    }
}

fn default_datasets() -> Vec<String> {
    SyntheticKind::ALL.iter().map(|k| k.name().to_string()).collect()
}

fn default_models() -> Vec<String> {
    vec!["regressgan".into(), "fnn_mse".into(), "gp".into()]
}

/// Experiment description read from a flat TOML file. Every key is optional
/// except `output_dir`; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    pub n_seeds: usize,
    /// Root seed; every cell's streams are derived from it.
    pub seed: u64,
    /// Rows generated per synthetic dataset.
    pub n_rows: usize,
    pub output_dir: PathBuf,
    pub car_frequency_path: Option<PathBuf>,
    pub car_severity_path: Option<PathBuf>,
    pub health_path: Option<PathBuf>,
    /// `features_and_target` or `features_only`.
    pub standardize: String,
    /// `none` or `log1p`, applied to the target before standardizing.
    pub target_transform: String,
    pub gp_subsample_cap: usize,
    /// Worker threads; `0` uses the available parallelism. Does not affect results.
    pub workers: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub d_steps_per_g_step: usize,
    pub max_steps: usize,
    pub eval_every: usize,
    /// `0` disables early stopping.
    pub patience: usize,
    pub generator_loss: String,
    pub k_samples_eval: usize,
    pub val_eval_rows: usize,
    pub jsd_eval_rows: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub noise_dim: usize,
    pub leaky_slope: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = GanTrainConfig::default();
        Self {
            datasets: default_datasets(),
            models: default_models(),
            n_seeds: 5,
            seed: 0,
            n_rows: 100_000,
            output_dir: PathBuf::new(),
            car_frequency_path: None,
            car_severity_path: None,
            health_path: None,
            standardize: "features_and_target".into(),
            target_transform: "none".into(),
            gp_subsample_cap: 2000,
            workers: 0,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            d_steps_per_g_step: t.d_steps_per_g_step,
            max_steps: t.max_steps,
            eval_every: t.eval_every,
            patience: t.patience.unwrap_or(0),
            generator_loss: t.generator_loss.as_str().into(),
            k_samples_eval: t.k_samples_eval,
            val_eval_rows: t.val_eval_rows,
            jsd_eval_rows: t.jsd_eval_rows,
            hidden_width: t.arch.hidden_width,
            hidden_layers: t.arch.hidden_layers,
            noise_dim: t.arch.noise_dim,
            leaky_slope: t.arch.leaky_slope,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn dataset_kinds(&self) -> Result<Vec<DatasetKind>, HarnessError> {
        self.datasets
            .iter()
            .map(|d| DatasetKind::parse(d).ok_or_else(|| HarnessError::Config(format!("unknown dataset `{d}`"))))
            .collect()
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>, HarnessError> {
        self.models
            .iter()
            .map(|m| ModelKind::parse(m).ok_or_else(|| HarnessError::Config(format!("unknown model `{m}`"))))
            .collect()
    }

    pub fn standardize_mode(&self) -> Result<StandardizeMode, HarnessError> {
        match self.standardize.as_str() {
            "features_and_target" => Ok(StandardizeMode::FeaturesAndTarget),
            "features_only" => Ok(StandardizeMode::FeaturesOnly),
            other => Err(HarnessError::Config(format!("unknown standardize mode `{other}`"))),
        }
    }

    pub fn target_transform(&self) -> Result<TargetTransform, HarnessError> {
        TargetTransform::parse(&self.target_transform)
            .ok_or_else(|| HarnessError::Config(format!("unknown target_transform `{}`", self.target_transform)))
    }

    /// Training settings for one cell, seeded with `seed`.
    pub fn train_config(&self, seed: u64) -> Result<GanTrainConfig, HarnessError> {
        let generator_loss = GeneratorLoss::parse(&self.generator_loss)
            .ok_or_else(|| HarnessError::Config(format!("unknown generator_loss `{}`", self.generator_loss)))?;
        let cfg = GanTrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            d_steps_per_g_step: self.d_steps_per_g_step,
            max_steps: self.max_steps,
            eval_every: self.eval_every,
            patience: (self.patience > 0).then_some(self.patience),
            generator_loss,
            k_samples_eval: self.k_samples_eval,
            val_eval_rows: self.val_eval_rows,
            jsd_eval_rows: self.jsd_eval_rows,
            arch: ArchConfig {
                hidden_width: self.hidden_width,
                hidden_layers: self.hidden_layers,
                noise_dim: self.noise_dim,
                leaky_slope: self.leaky_slope,
            },
            seed,
            ..GanTrainConfig::default()
        };
        cfg.validate().map_err(HarnessError::Config)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.datasets.is_empty() {
            return bad("at least one dataset is required");
        }
        if self.models.is_empty() {
            return bad("at least one model is required");
        }
        if self.n_seeds == 0 {
            return bad("n_seeds must be at least 1");
        }
        if self.n_rows < 10 {
            return bad("n_rows must be at least 10");
        }
        if self.gp_subsample_cap == 0 {
            return bad("gp_subsample_cap must be positive");
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("output_dir is required");
        }
        self.standardize_mode()?;
        self.target_transform()?;
        self.model_kinds()?;
        self.train_config(self.seed)?;
        for kind in self.dataset_kinds()? {
            let needed: &[(&str, &Option<PathBuf>)] = match kind {
                DatasetKind::Synthetic(_) => &[],
                DatasetKind::CarInsurance => {
                    &[("car_frequency_path", &self.car_frequency_path), ("car_severity_path", &self.car_severity_path)]
                }
                DatasetKind::HealthInsurance => &[("health_path", &self.health_path)],
            };
            for (key, path) in needed {
                match path {
                    None => return bad(&format!("{} requires `{key}`", kind.name())),
                    Some(p) if !p.exists() => {
                        return bad(&format!("{key} {} does not exist", p.display()));
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Settings that determine a cell's numbers, excluding paths and worker count.
    pub(crate) fn canonical_text(&self) -> String {
        format!(
            "n_rows={}\nstandardize={}\ntarget_transform={}\ngp_subsample_cap={}\nseed={}\n",
            self.n_rows, self.standardize, self.target_transform, self.gp_subsample_cap, self.seed
        )
    }
}
