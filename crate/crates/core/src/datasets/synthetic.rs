use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};

use super::{DatasetError, TabularDataset, TweedieParams};
use crate::autodiff::kernels::sigmoid;
use crate::matrix::Matrix;
use crate::rng::{self, Rng as StreamRng};

/// Covariate dimension of the linear synthetic datasets.
pub const LINEAR_DIM: usize = 25;

const COVARIATE_NOTE: &str = "covariates x_i ~ N(0, I)";

/// Clamp on the Tweedie linear predictor before `exp`.
const LOG_MEAN_CLAMP: f64 = 30.0;

/// i.i.d. `N(0, variance)` coordinates.
pub fn sample_mvn_isotropic(dim: usize, variance: f64, rng: &mut impl Rng) -> Vec<f64> {
    let sd = variance.sqrt();
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

/// Coefficient vector drawn once per dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCoefficients {
    pub beta: Vec<f64>,
    pub variance_scale: f64,
}

impl LinearCoefficients {
    pub fn sample(variance_scale: f64, rng: &mut impl Rng) -> Self {
        Self { beta: sample_mvn_isotropic(LINEAR_DIM, variance_scale, rng), variance_scale }
    }

    pub fn zeros() -> Self {
        Self { beta: vec![0.0; LINEAR_DIM], variance_scale: 0.0 }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.beta.iter().zip(x).map(|(b, v)| b * v).sum()
    }
}

/// Noise term of the heteroscedastic generator: `h = (0.001 + 0.5|x|)·z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeteroNoise {
    pub z: f64,
    pub h: f64,
}

impl HeteroNoise {
    pub fn new(x: f64, z: f64) -> Self {
        Self { z, h: Self::scale(x) * z }
    }

    pub fn scale(x: f64) -> f64 {
        0.001 + 0.5 * x.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    Normal,
    Heteroscedastic,
    Classification,
    Tweedie,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [
        SyntheticKind::Normal,
        SyntheticKind::Heteroscedastic,
        SyntheticKind::Classification,
        SyntheticKind::Tweedie,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::Normal => "normal",
            SyntheticKind::Heteroscedastic => "heteroscedastic",
            SyntheticKind::Classification => "classification",
            SyntheticKind::Tweedie => "tweedie",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn generate(self, n: usize, seed: u64) -> Result<TabularDataset, DatasetError> {
        match self {
            SyntheticKind::Normal => gen_normal(n, seed),
            SyntheticKind::Heteroscedastic => gen_heteroscedastic(n, seed),
            SyntheticKind::Classification => gen_classification(n, seed),
            SyntheticKind::Tweedie => gen_tweedie(n, seed),
        }
    }
}

fn gaussian_covariates(n: usize, d: usize, rng: &mut StreamRng) -> Matrix {
    Matrix::from_fn(n, d, |_, _| StandardNormal.sample(rng))
}

fn feature_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x_{j}")).collect()
}

fn linear_dataset(
    name: &str,
    n: usize,
    seed: u64,
    beta: &LinearCoefficients,
    mut target: impl FnMut(f64, &mut StreamRng) -> f64,
) -> Result<TabularDataset, DatasetError> {
    let x = gaussian_covariates(n, LINEAR_DIM, &mut rng::stream(seed, "covariates"));
    let mut noise = rng::stream(seed, "targets");
    let y: Vec<f64> = (0..n).map(|i| target(beta.dot(x.row(i)), &mut noise)).collect();
    let mut ds = TabularDataset::from_parts(name, x, y, feature_names(LINEAR_DIM), seed)?;
    ds.meta.notes.push(COVARIATE_NOTE.to_string());
    Ok(ds)
}

/// `y = x·β + ε`, `β ~ N(0, I/10)`, `ε ~ N(0, 1)`.
pub fn gen_normal(n: usize, seed: u64) -> Result<TabularDataset, DatasetError> {
    let beta = LinearCoefficients::sample(0.1, &mut rng::stream(seed, "beta"));
    gen_normal_with(n, &beta, seed)
}

pub fn gen_normal_with(n: usize, beta: &LinearCoefficients, seed: u64) -> Result<TabularDataset, DatasetError> {
    linear_dataset("normal", n, seed, beta, |eta, r| {
        let e: f64 = StandardNormal.sample(r);
        eta + e
    })
}

/// Scalar `x ~ N(0,1)`, `z ~ N(1,1)`, `y = x + (0.001 + 0.5|x|)·z`.
pub fn gen_heteroscedastic(n: usize, seed: u64) -> Result<TabularDataset, DatasetError> {
    let mut rx = rng::stream(seed, "covariates");
    let mut rz = rng::stream(seed, "targets");
    let z_dist = Normal::new(1.0, 1.0).expect("unit normal");
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = StandardNormal.sample(&mut rx);
        let noise = HeteroNoise::new(xi, z_dist.sample(&mut rz));
        x.push(xi);
        y.push(xi + noise.h);
    }
    TabularDataset::from_parts("heteroscedastic", Matrix::column(x), y, feature_names(1), seed)
}

/// `p = σ(x·β)`, `β ~ N(0, I/2)`, `y ~ Bernoulli(p)` stored as 0.0 / 1.0.
pub fn gen_classification(n: usize, seed: u64) -> Result<TabularDataset, DatasetError> {
    let beta = LinearCoefficients::sample(0.5, &mut rng::stream(seed, "beta"));
    gen_classification_with(n, &beta, seed)
}

pub fn gen_classification_with(
    n: usize,
    beta: &LinearCoefficients,
    seed: u64,
) -> Result<TabularDataset, DatasetError> {
    linear_dataset("classification", n, seed, beta, |eta, r| {
        let hit = Bernoulli::new(sigmoid(eta)).expect("probability in [0, 1]").sample(r);
        if hit {
            1.0
        } else {
            0.0
        }
    })
}

/// `μ = exp(x·β)`, `β ~ N(0, I/10)`, `y ~ Tweedie(μ, 1.5, 1)`.
pub fn gen_tweedie(n: usize, seed: u64) -> Result<TabularDataset, DatasetError> {
    let beta = LinearCoefficients::sample(0.1, &mut rng::stream(seed, "beta"));
    gen_tweedie_with(n, &beta, seed)
}

pub fn gen_tweedie_with(n: usize, beta: &LinearCoefficients, seed: u64) -> Result<TabularDataset, DatasetError> {
    let mut failure = None;
    let ds = linear_dataset("tweedie", n, seed, beta, |eta, r| {
        let mu = eta.clamp(-LOG_MEAN_CLAMP, LOG_MEAN_CLAMP).exp();
        match TweedieParams::new(mu, 1.5, 1.0) {
            Ok(p) => p.sample(r),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(ds),
    }
}
