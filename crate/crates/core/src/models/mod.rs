//! Network definitions: conditional generator, conditional discriminator and
//! the MSE regression baseline, plus median-of-samples point prediction.

mod checkpoint;
mod mlp;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::{Activation, AutodiffError, Tape, Var};
use crate::matrix::Matrix;

pub use checkpoint::{Checkpoint, CheckpointError, NamedArray};
pub use mlp::{Mlp, MlpBinding};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{what}: expected {expected} rows/columns, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Layer sizes shared by the generator, discriminator and MSE network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchConfig {
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub noise_dim: usize,
    pub leaky_slope: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self { hidden_width: 64, hidden_layers: 3, noise_dim: 10, leaky_slope: 0.2 }
    }
}

fn check_rows(what: &'static str, expected: usize, actual: usize) -> Result<(), ModelError> {
    if expected == actual {
        Ok(())
    } else {
        Err(ModelError::Shape { what, expected, actual })
    }
}

/// `G(x, z)`: relu MLP over `[x, z]` with one unconstrained output.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorNet {
    pub mlp: Mlp,
    pub x_dim: usize,
    pub noise_dim: usize,
}

impl GeneratorNet {
    pub fn new(x_dim: usize, arch: &ArchConfig, rng: &mut impl Rng) -> Self {
        let mlp = Mlp::new(x_dim + arch.noise_dim, arch.hidden_width, arch.hidden_layers, Activation::Relu, rng);
        Self { mlp, x_dim, noise_dim: arch.noise_dim }
    }

    /// `rows × noise_dim` standard normal draws.
    pub fn sample_noise(&self, rows: usize, rng: &mut impl Rng) -> Matrix {
        Matrix::from_fn(rows, self.noise_dim, |_, _| StandardNormal.sample(rng))
    }

    pub fn forward(&self, x: &Matrix, z: &Matrix) -> Result<Vec<f64>, ModelError> {
        check_rows("generator noise rows", x.rows(), z.rows())?;
        check_rows("generator covariates", self.x_dim, x.cols())?;
        check_rows("generator noise width", self.noise_dim, z.cols())?;
        let input = crate::autodiff::kernels::concat_cols(x.as_slice(), x.cols(), z.as_slice(), z.cols(), x.rows());
        Ok(self.mlp.forward_values(&input, x.rows()))
    }

    /// Records `G(x, z)` on the tape; `x` and `z` are `[b, ·]` nodes.
    pub fn forward_tape(&self, tape: &mut Tape, x: Var, z: Var) -> Result<(Var, MlpBinding), ModelError> {
        let input = tape.concat_cols(x, z)?;
        Ok(self.mlp.forward_tape(tape, input, true)?)
    }

    pub fn to_checkpoint(&self, config_hash: &str) -> Checkpoint {
        let mut ck = self.mlp.to_checkpoint("generator", config_hash);
        ck.set_meta("x_dim", self.x_dim);
        ck.set_meta("noise_dim", self.noise_dim);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, ModelError> {
        ck.expect_kind("generator")?;
        Ok(Self { mlp: Mlp::from_checkpoint(ck)?, x_dim: ck.meta_value("x_dim")?, noise_dim: ck.meta_value("noise_dim")? })
    }
}

/// `D(x, y)`: leaky-relu MLP over `[x, y]` returning logits.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorNet {
    pub mlp: Mlp,
    pub x_dim: usize,
}

impl DiscriminatorNet {
    pub fn new(x_dim: usize, arch: &ArchConfig, rng: &mut impl Rng) -> Self {
        let act = Activation::LeakyRelu(arch.leaky_slope);
        Self { mlp: Mlp::new(x_dim + 1, arch.hidden_width, arch.hidden_layers, act, rng), x_dim }
    }

    pub fn forward(&self, x: &Matrix, y: &[f64]) -> Result<Vec<f64>, ModelError> {
        check_rows("discriminator target rows", x.rows(), y.len())?;
        check_rows("discriminator covariates", self.x_dim, x.cols())?;
        let input = crate::autodiff::kernels::concat_cols(x.as_slice(), x.cols(), y, 1, x.rows());
        Ok(self.mlp.forward_values(&input, x.rows()))
    }

    /// Records `D(x, y)`; with `trainable = false` the weights are constants
    /// and only upstream nodes (e.g. generator output) receive gradients.
    pub fn forward_tape(
        &self,
        tape: &mut Tape,
        x: Var,
        y: Var,
        trainable: bool,
    ) -> Result<(Var, MlpBinding), ModelError> {
        let input = tape.concat_cols(x, y)?;
        Ok(self.mlp.forward_tape(tape, input, trainable)?)
    }

    pub fn to_checkpoint(&self, config_hash: &str) -> Checkpoint {
        let mut ck = self.mlp.to_checkpoint("discriminator", config_hash);
        ck.set_meta("x_dim", self.x_dim);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, ModelError> {
        ck.expect_kind("discriminator")?;
        Ok(Self { mlp: Mlp::from_checkpoint(ck)?, x_dim: ck.meta_value("x_dim")? })
    }
}

/// Deterministic regression network: the generator's wiring without noise input.
#[derive(Debug, Clone, PartialEq)]
pub struct FnnRegressor {
    pub mlp: Mlp,
    pub x_dim: usize,
}

impl FnnRegressor {
    pub fn new(x_dim: usize, arch: &ArchConfig, rng: &mut impl Rng) -> Self {
        Self { mlp: Mlp::new(x_dim, arch.hidden_width, arch.hidden_layers, Activation::Relu, rng), x_dim }
    }

    pub fn forward(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        check_rows("regressor covariates", self.x_dim, x.cols())?;
        Ok(self.mlp.forward_values(x.as_slice(), x.rows()))
    }

    pub fn forward_tape(&self, tape: &mut Tape, x: Var) -> Result<(Var, MlpBinding), ModelError> {
        Ok(self.mlp.forward_tape(tape, x, true)?)
    }

    pub fn to_checkpoint(&self, config_hash: &str) -> Checkpoint {
        let mut ck = self.mlp.to_checkpoint("fnn", config_hash);
        ck.set_meta("x_dim", self.x_dim);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, ModelError> {
        ck.expect_kind("fnn")?;
        Ok(Self { mlp: Mlp::from_checkpoint(ck)?, x_dim: ck.meta_value("x_dim")? })
    }
}

/// Anything that maps (covariates, noise) rows to scalar samples.
pub trait ConditionalSampler {
    fn x_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn sample_rows(&self, x: &Matrix, z: &Matrix) -> Result<Vec<f64>, ModelError>;
}

impl ConditionalSampler for GeneratorNet {
    fn x_dim(&self) -> usize {
        self.x_dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn sample_rows(&self, x: &Matrix, z: &Matrix) -> Result<Vec<f64>, ModelError> {
        self.forward(x, z)
    }
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let n = values.len();
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Samples evaluated per forward batch in [`predict_point`].
const PREDICT_BATCH: usize = 16_384;

/// Point prediction from a stochastic sampler: per row, the median of
/// `k_samples` outputs under fresh standard-normal noise.
pub fn predict_point<S: ConditionalSampler + ?Sized>(
    sampler: &S,
    x: &Matrix,
    k_samples: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, ModelError> {
    assert!(k_samples >= 1, "k_samples must be at least 1");
    check_rows("prediction covariates", sampler.x_dim(), x.cols())?;
    let chunk = (PREDICT_BATCH / k_samples).max(1);
    let mut out = Vec::with_capacity(x.rows());
    let mut start = 0;
    while start < x.rows() {
        let end = (start + chunk).min(x.rows());
        let rows: Vec<usize> = (start..end).flat_map(|i| std::iter::repeat_n(i, k_samples)).collect();
        let xs = x.select_rows(&rows);
        let z = Matrix::from_fn(rows.len(), sampler.noise_dim(), |_, _| StandardNormal.sample(rng));
        let mut samples = sampler.sample_rows(&xs, &z)?;
        out.extend(samples.chunks_exact_mut(k_samples).map(median));
        start = end;
    }
    Ok(out)
}
