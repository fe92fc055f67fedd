use rand::Rng;
use rand_distr::{Distribution, Uniform};

fn uniform(bound: f64, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    if bound == 0.0 {
        return vec![0.0; n];
    }
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// He/Kaiming uniform init for a layer followed by a (leaky) ReLU with the
/// given negative slope: U(-b, b) with b = sqrt(6 / ((1 + slope^2) * fan_in)).
pub fn kaiming_uniform(fan_in: usize, fan_out: usize, negative_slope: f64, rng: &mut impl Rng) -> Vec<f64> {
    let gain_sq = 2.0 / (1.0 + negative_slope * negative_slope);
    let bound = (3.0 * gain_sq / fan_in as f64).sqrt();
    uniform(bound, fan_in * fan_out, rng)
}

/// Glorot/Xavier uniform init: U(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
pub fn xavier_uniform(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(bound, fan_in * fan_out, rng)
}
