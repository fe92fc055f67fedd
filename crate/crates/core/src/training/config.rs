use std::fmt;

use sha2::{Digest, Sha256};

use crate::models::ArchConfig;

/// Generator objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorLoss {
    /// Minimize `log(1 − D(x, G(x, z)))`.
    Minimax,
    /// Maximize `log D(x, G(x, z))`.
    NonSaturating,
}

impl GeneratorLoss {
    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorLoss::Minimax => "minimax",
            GeneratorLoss::NonSaturating => "non_saturating",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "minimax" => Some(GeneratorLoss::Minimax),
            "non_saturating" => Some(GeneratorLoss::NonSaturating),
            _ => None,
        }
    }
}

impl fmt::Display for GeneratorLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every training hyperparameter for the adversarial and MSE loops.
#[derive(Debug, Clone, PartialEq)]
pub struct GanTrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub d_steps_per_g_step: usize,
    pub max_steps: usize,
    pub eval_every: usize,
    /// Evaluations without improvement before stopping; `None` runs to `max_steps`.
    pub patience: Option<usize>,
    pub generator_loss: GeneratorLoss,
    pub k_samples_eval: usize,
    /// Validation rows scored at each periodic evaluation.
    pub val_eval_rows: usize,
    /// Validation rows used by the divergence diagnostic.
    pub jsd_eval_rows: usize,
    pub arch: ArchConfig,
    pub seed: u64,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
            d_steps_per_g_step: 1,
            max_steps: 20_000,
            eval_every: 500,
            patience: Some(10),
            generator_loss: GeneratorLoss::Minimax,
            k_samples_eval: 256,
            val_eval_rows: 2048,
            jsd_eval_rows: 2048,
            arch: ArchConfig::default(),
            seed: 0,
        }
    }
}

impl GanTrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("batch_size", self.batch_size),
            ("d_steps_per_g_step", self.d_steps_per_g_step),
            ("max_steps", self.max_steps),
            ("eval_every", self.eval_every),
            ("k_samples_eval", self.k_samples_eval),
            ("val_eval_rows", self.val_eval_rows),
            ("jsd_eval_rows", self.jsd_eval_rows),
            ("hidden_width", self.arch.hidden_width),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(format!("{name} must be positive"));
        }
        if self.patience == Some(0) {
            return Err("patience must be positive".into());
        }
        if !(self.learning_rate > 0.0) || !(self.epsilon > 0.0) {
            return Err("learning_rate and epsilon must be positive".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err("beta1 and beta2 must lie in [0, 1)".into());
        }
        Ok(())
    }

    /// Canonical `key=value` listing; the config hash is taken over this text.
    pub fn canonical_text(&self) -> String {
        let a = &self.arch;
        format!(
            "batch_size={}\nlearning_rate={:e}\nbeta1={:e}\nbeta2={:e}\nepsilon={:e}\nd_steps_per_g_step={}\n\
             max_steps={}\neval_every={}\npatience={}\ngenerator_loss={}\nk_samples_eval={}\nval_eval_rows={}\n\
             jsd_eval_rows={}\nhidden_width={}\nhidden_layers={}\nnoise_dim={}\nleaky_slope={:e}\n\
             init=kaiming_uniform_hidden,xavier_uniform_output\nseed={}\n",
            self.batch_size,
            self.learning_rate,
            self.beta1,
            self.beta2,
            self.epsilon,
            self.d_steps_per_g_step,
            self.max_steps,
            self.eval_every,
            self.patience.map_or("none".to_string(), |p| p.to_string()),
            self.generator_loss,
            self.k_samples_eval,
            self.val_eval_rows,
            self.jsd_eval_rows,
            a.hidden_width,
            a.hidden_layers,
            a.noise_dim,
            a.leaky_slope,
            self.seed,
        )
    }

    pub fn config_hash(&self) -> String {
        hash_text(&self.canonical_text())
    }
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn hash_text(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
