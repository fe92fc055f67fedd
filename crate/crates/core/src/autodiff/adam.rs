use super::{AutodiffError, Tensor};

/// Bias-corrected Adam moments for a fixed, ordered list of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_count: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        param_lens: &[usize],
    ) -> Result<Self, AutodiffError> {
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(AutodiffError::Optimizer(format!("betas must lie in [0, 1): {beta1}, {beta2}")));
        }
        if !(epsilon > 0.0) || !(learning_rate > 0.0) {
            return Err(AutodiffError::Optimizer(format!(
                "learning rate and epsilon must be positive: {learning_rate}, {epsilon}"
            )));
        }
        Ok(Self {
            step_count: 0,
            first_moment: param_lens.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: param_lens.iter().map(|&n| vec![0.0; n]).collect(),
            learning_rate,
            beta1,
            beta2,
            epsilon,
        })
    }

    pub fn for_params(
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        params: &[&Tensor],
    ) -> Result<Self, AutodiffError> {
        let lens: Vec<usize> = params.iter().map(|p| p.len()).collect();
        Self::new(learning_rate, beta1, beta2, epsilon, &lens)
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }
}

/// One Adam update using the gradients currently stored on `params`.
///
/// Gradients are read, not cleared; the caller zeroes them before the next
/// accumulation round. Parameters without a gradient buffer are skipped.
pub fn adam_step(params: &mut [&mut Tensor], state: &mut AdamState) {
    assert_eq!(params.len(), state.first_moment.len(), "parameter list changed since AdamState::new");
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.learning_rate, state.epsilon);
    for ((p, m), v) in params.iter_mut().zip(&mut state.first_moment).zip(&mut state.second_moment) {
        let (values, grad) = p.values_and_grad_mut();
        let Some(grad) = grad else { continue };
        assert_eq!(m.len(), values.len(), "moment length mismatch");
        for i in 0..values.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            values[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
