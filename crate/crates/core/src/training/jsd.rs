use rand::Rng;

use crate::datasets::{PreparedData, SplitName};
use crate::autodiff::kernels::log_sigmoid;
use crate::models::{DiscriminatorNet, GeneratorNet};

use super::TrainError;

/// Divergence read off a trained discriminator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsdEstimate {
    /// `(value_fn + ln 4) / 2` clamped to `[0, ln 2]`.
    pub value: f64,
    /// The same quantity before clamping.
    pub raw: f64,
    /// `mean log σ(D(real)) + mean log(1 − σ(D(fake)))`.
    pub value_fn: f64,
}

/// Builds the estimate from discriminator logits on real and generated pairs.
pub fn jsd_from_logits(real: &[f64], fake: &[f64]) -> JsdEstimate {
    assert!(!real.is_empty() && !fake.is_empty(), "jsd needs logits on both sides");
    let mean = |v: &[f64], f: &dyn Fn(f64) -> f64| v.iter().map(|&l| f(l)).sum::<f64>() / v.len() as f64;
    // log(1 − σ(l)) = log σ(−l)
    let value_fn = mean(real, &log_sigmoid) + mean(fake, &|l| log_sigmoid(-l));
    let raw = 0.5 * (value_fn + 4f64.ln());
    JsdEstimate { value: raw.clamp(0.0, 2f64.ln()), raw, value_fn }
}

/// Scores `disc` on up to `n_eval` validation rows against one generator draw per row.
pub fn estimate_jsd(
    disc: &DiscriminatorNet,
    gen: &GeneratorNet,
    data: &PreparedData,
    n_eval: usize,
    rng: &mut impl Rng,
) -> Result<JsdEstimate, TrainError> {
    let idx = data.scaled.split.indices(SplitName::Val);
    if idx.is_empty() {
        return Err(TrainError::EmptyVal);
    }
    let idx = &idx[..idx.len().min(n_eval)];
    let x = data.scaled.features.select_rows(idx);
    let y_real: Vec<f64> = idx.iter().map(|&i| data.scaled.targets[i]).collect();
    let z = gen.sample_noise(x.rows(), rng);
    let y_fake = gen.forward(&x, &z)?;
    let real = disc.forward(&x, &y_real)?;
    let fake = disc.forward(&x, &y_fake)?;
    Ok(jsd_from_logits(&real, &fake))
}
