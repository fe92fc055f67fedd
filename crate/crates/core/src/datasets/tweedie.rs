use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::DatasetError;

/// Tweedie parameters in the compound Poisson–Gamma regime `1 < p < 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweedieParams {
    pub power: f64,
    pub dispersion: f64,
    pub mean: f64,
}

impl TweedieParams {
    pub fn new(mean: f64, power: f64, dispersion: f64) -> Result<Self, DatasetError> {
        if !(power > 1.0 && power < 2.0) {
            return Err(DatasetError::Domain(format!("power {power} outside (1, 2)")));
        }
        if !(dispersion > 0.0) || !dispersion.is_finite() {
            return Err(DatasetError::Domain(format!("dispersion {dispersion} must be positive")));
        }
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(DatasetError::Domain(format!("mean {mean} must be positive")));
        }
        Ok(Self { power, dispersion, mean })
    }

    /// Poisson rate of the claim count, `μ^(2−p) / ((2−p)·φ)`.
    pub fn poisson_rate(&self) -> f64 {
        self.mean.powf(2.0 - self.power) / ((2.0 - self.power) * self.dispersion)
    }

    /// Shape of each Gamma summand, `(2−p)/(p−1)`.
    pub fn gamma_shape(&self) -> f64 {
        (2.0 - self.power) / (self.power - 1.0)
    }

    /// Scale of each Gamma summand, `φ·(p−1)·μ^(p−1)`.
    pub fn gamma_scale(&self) -> f64 {
        self.dispersion * (self.power - 1.0) * self.mean.powf(self.power - 1.0)
    }

    /// `P(Y = 0) = exp(−λ)`.
    pub fn zero_probability(&self) -> f64 {
        (-self.poisson_rate()).exp()
    }

    pub fn variance(&self) -> f64 {
        self.dispersion * self.mean.powf(self.power)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let rate = self.poisson_rate();
        let count = Poisson::new(rate).expect("validated rate").sample(rng) as u64;
        if count == 0 {
            return 0.0;
        }
        let gamma = Gamma::new(self.gamma_shape(), self.gamma_scale()).expect("validated gamma");
        (0..count).map(|_| gamma.sample(rng)).sum()
    }
}

/// One draw from Tweedie(μ, p, φ) as a Poisson number of Gamma claims.
pub fn sample_tweedie(mu: f64, p: f64, phi: f64, rng: &mut impl Rng) -> Result<f64, DatasetError> {
    Ok(TweedieParams::new(mu, p, phi)?.sample(rng))
}
