//! Exact Gaussian-process regression with an RBF kernel.
//!
//! Fitting factors `K + σ²I` once by Cholesky; the posterior mean is a
//! kernel-weighted sum against `α = (K + σ²I)⁻¹ (y − ȳ)`.

mod linalg;

use std::f64::consts::PI;

use rand::seq::SliceRandom;

use crate::datasets::TabularDataset;
use crate::matrix::Matrix;
use crate::models::{Checkpoint, CheckpointError};
use crate::rng;

pub use linalg::{cholesky, solve_lower, solve_lower_transposed};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum GpError {
    #[error("kernel matrix not positive definite at max jitter (length_scale {length_scale}, m {m})")]
    IllConditioned { length_scale: f64, m: usize },
    #[error("input dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("need at least one finite training row")]
    Empty,
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfKernelParams {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl RbfKernelParams {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2 = linalg::squared_distance(a, b);
        self.signal_variance * (-r2 / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

/// `K[i, j] = σ_f² · exp(−‖a_i − b_j‖² / (2ℓ²))`.
pub fn rbf_kernel(a: &Matrix, b: &Matrix, params: &RbfKernelParams) -> Matrix {
    assert_eq!(a.cols(), b.cols(), "rbf_kernel inputs differ in width");
    Matrix::from_fn(a.rows(), b.rows(), |i, j| params.eval(a.row(i), b.row(j)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    pub train_inputs: Matrix,
    pub cholesky_factor: Matrix,
    pub alpha_weights: Vec<f64>,
    pub kernel: RbfKernelParams,
    pub target_mean: f64,
    /// Diagonal jitter that made the factorization succeed.
    pub jitter: f64,
    pub log_marginal_likelihood: f64,
}

fn validate(x: &Matrix, y: &[f64]) -> Result<(), GpError> {
    if x.rows() == 0 || x.rows() != y.len() {
        return Err(GpError::Empty);
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(GpError::Empty);
    }
    Ok(())
}

/// Factors `base + (noise + jitter)·I`, escalating the jitter by 10× up to 1e-4.
fn factor_with_jitter(base: &Matrix, noise: f64, length_scale: f64) -> Result<(Matrix, f64), GpError> {
    let m = base.rows();
    let mut jitter = JITTER_START;
    loop {
        let mut k = base.clone();
        for i in 0..m {
            k.set(i, i, base.get(i, i) + noise + jitter);
        }
        if let Some(l) = cholesky(&k) {
            return Ok((l, jitter));
        }
        jitter *= 10.0;
        if jitter > JITTER_MAX * (1.0 + 1e-9) {
            return Err(GpError::IllConditioned { length_scale, m });
        }
    }
}

fn fit_from_kernel(x: &Matrix, y: &[f64], base: &Matrix, params: RbfKernelParams) -> Result<GpModel, GpError> {
    let m = y.len();
    let target_mean = y.iter().sum::<f64>() / m as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - target_mean).collect();
    let (l, jitter) = factor_with_jitter(base, params.noise_variance, params.length_scale)?;
    let v = solve_lower(&l, &centered);
    let alpha = solve_lower_transposed(&l, &v);
    let data_fit: f64 = centered.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let log_det: f64 = (0..m).map(|i| l.get(i, i).ln()).sum();
    let lml = -0.5 * data_fit - log_det - 0.5 * m as f64 * (2.0 * PI).ln();
    Ok(GpModel {
        train_inputs: x.clone(),
        cholesky_factor: l,
        alpha_weights: alpha,
        kernel: params,
        target_mean,
        jitter,
        log_marginal_likelihood: lml,
    })
}

pub fn gp_fit(x: &Matrix, y: &[f64], params: &RbfKernelParams) -> Result<GpModel, GpError> {
    validate(x, y)?;
    let base = rbf_kernel(x, x, params);
    fit_from_kernel(x, y, &base, *params)
}

impl GpModel {
    fn check_width(&self, x: &Matrix) -> Result<(), GpError> {
        if x.cols() == self.train_inputs.cols() {
            Ok(())
        } else {
            Err(GpError::Dimension(x.cols(), self.train_inputs.cols()))
        }
    }

    pub fn predict_mean(&self, x_new: &Matrix) -> Result<Vec<f64>, GpError> {
        self.check_width(x_new)?;
        let train = &self.train_inputs;
        Ok((0..x_new.rows())
            .map(|i| {
                let xi = x_new.row(i);
                let s: f64 = (0..train.rows()).map(|j| self.kernel.eval(xi, train.row(j)) * self.alpha_weights[j]).sum();
                s + self.target_mean
            })
            .collect())
    }

    pub fn to_checkpoint(&self, config_hash: &str) -> Checkpoint {
        let mut ck = Checkpoint::new("gp", config_hash);
        ck.set_meta("length_scale", format!("{:e}", self.kernel.length_scale));
        ck.set_meta("signal_variance", format!("{:e}", self.kernel.signal_variance));
        ck.set_meta("noise_variance", format!("{:e}", self.kernel.noise_variance));
        ck.set_meta("target_mean", format!("{:e}", self.target_mean));
        ck.set_meta("jitter", format!("{:e}", self.jitter));
        ck.set_meta("log_marginal_likelihood", format!("{:e}", self.log_marginal_likelihood));
        let (m, d) = self.train_inputs.shape();
        ck.push_array("train_inputs", vec![m, d], self.train_inputs.as_slice().to_vec());
        ck.push_array("cholesky_factor", vec![m, m], self.cholesky_factor.as_slice().to_vec());
        ck.push_array("alpha_weights", vec![m], self.alpha_weights.clone());
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, GpError> {
        ck.expect_kind("gp")?;
        let arr = |name: &str| -> Result<Matrix, GpError> {
            let a = ck.array(name)?;
            let (r, c) = match a.shape.as_slice() {
                [r, c] => (*r, *c),
                [r] => (*r, 1),
                _ => return Err(CheckpointError::Missing(format!("shape of {name}")).into()),
            };
            Matrix::new(r, c, a.values.clone()).map_err(|_| CheckpointError::Missing(name.to_string()).into())
        };
        Ok(Self {
            train_inputs: arr("train_inputs")?,
            cholesky_factor: arr("cholesky_factor")?,
            alpha_weights: arr("alpha_weights")?.into_vec(),
            kernel: RbfKernelParams {
                length_scale: ck.meta_value("length_scale")?,
                signal_variance: ck.meta_value("signal_variance")?,
                noise_variance: ck.meta_value("noise_variance")?,
            },
            target_mean: ck.meta_value("target_mean")?,
            jitter: ck.meta_value("jitter")?,
            log_marginal_likelihood: ck.meta_value("log_marginal_likelihood")?,
        })
    }
}

/// Posterior mean and variance; variance is floored at zero.
pub fn gp_predict(model: &GpModel, x_new: &Matrix) -> Result<(Vec<f64>, Vec<f64>), GpError> {
    let mean = model.predict_mean(x_new)?;
    let train = &model.train_inputs;
    let variance = (0..x_new.rows())
        .map(|i| {
            let xi = x_new.row(i);
            let k_star: Vec<f64> = (0..train.rows()).map(|j| model.kernel.eval(xi, train.row(j))).collect();
            let v = solve_lower(&model.cholesky_factor, &k_star);
            let explained: f64 = v.iter().map(|t| t * t).sum();
            (model.kernel.eval(xi, xi) - explained).max(0.0)
        })
        .collect();
    Ok((mean, variance))
}

/// Candidate hyperparameters for [`hyperparam_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct GpGrid {
    pub length_scales: Vec<f64>,
    pub noise_variances: Vec<f64>,
    pub signal_variance: f64,
}

impl GpGrid {
    /// ℓ ∈ {0.1, 0.3, 1, 3, 10}·√d, σ_n² ∈ {1e-4, 1e-2, 1e-1, 1}·var(y), σ_f² = var(y).
    pub fn standard(d: usize, y: &[f64]) -> Self {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let var = if var > 0.0 && var.is_finite() { var } else { 1.0 };
        let root_d = (d as f64).sqrt();
        Self {
            length_scales: [0.1, 0.3, 1.0, 3.0, 10.0].iter().map(|s| s * root_d).collect(),
            noise_variances: [1e-4, 1e-2, 1e-1, 1.0].iter().map(|s| s * var).collect(),
            signal_variance: var,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = RbfKernelParams> + '_ {
        self.length_scales.iter().flat_map(move |&length_scale| {
            self.noise_variances.iter().map(move |&noise_variance| RbfKernelParams {
                length_scale,
                signal_variance: self.signal_variance,
                noise_variance,
            })
        })
    }
}

/// Grid point with the highest log marginal likelihood; the first one wins ties.
/// Grid points that cannot be factored are skipped.
pub fn hyperparam_search(x: &Matrix, y: &[f64], grid: &GpGrid) -> Result<RbfKernelParams, GpError> {
    validate(x, y)?;
    let mut best: Option<(f64, RbfKernelParams)> = None;
    let mut last_err = GpError::EmptyGrid;
    for &length_scale in &grid.length_scales {
        let shape = RbfKernelParams { length_scale, signal_variance: grid.signal_variance, noise_variance: 0.0 };
        let base = rbf_kernel(x, x, &shape);
        for &noise_variance in &grid.noise_variances {
            let params = RbfKernelParams { noise_variance, ..shape };
            match fit_from_kernel(x, y, &base, params) {
                Ok(fit) => {
                    if best.is_none_or(|(b, _)| fit.log_marginal_likelihood > b) {
                        best = Some((fit.log_marginal_likelihood, params));
                    }
                }
                Err(e) => last_err = e,
            }
        }
    }
    best.map(|(_, p)| p).ok_or(last_err)
}

/// Caps the training split at `cap` rows by seeded uniform subsampling.
pub fn subsample_for_gp(ds: &TabularDataset, cap: usize, seed: u64) -> TabularDataset {
    assert!(cap >= 1, "cap must be positive");
    let mut out = ds.clone();
    if out.split.train.len() > cap {
        out.split.train.shuffle(&mut rng::stream(seed, "gp_subsample"));
        out.split.train.truncate(cap);
        out.split.train.sort_unstable();
    }
    out
}

#[cfg(test)]
mod tests;
