use rand::Rng;

use super::{Checkpoint, CheckpointError};
use crate::autodiff::{
    kaiming_uniform, xavier_uniform, Activation, AutodiffError, DenseBinding, DenseParams, Tape, Tensor, Var,
};

/// Stack of dense layers: `hidden_layers` activated layers, then one linear
/// output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseParams>,
    hidden: Activation,
}

/// Tape handles for every layer of one recorded forward pass.
#[derive(Debug, Clone, Default)]
pub struct MlpBinding {
    layers: Vec<DenseBinding>,
}

fn activation_name(a: Activation) -> String {
    match a {
        Activation::Relu => "relu".into(),
        Activation::LeakyRelu(s) => format!("leaky_relu:{s:e}"),
        Activation::Sigmoid => "sigmoid".into(),
        Activation::Identity => "identity".into(),
    }
}

fn parse_activation(s: &str) -> Option<Activation> {
    match s {
        "relu" => Some(Activation::Relu),
        "sigmoid" => Some(Activation::Sigmoid),
        "identity" => Some(Activation::Identity),
        _ => s.strip_prefix("leaky_relu:")?.parse().ok().map(Activation::LeakyRelu),
    }
}

impl Mlp {
    /// Kaiming-uniform hidden layers, Xavier-uniform output layer, zero biases.
    pub fn new(input_dim: usize, width: usize, hidden_layers: usize, hidden: Activation, rng: &mut impl Rng) -> Self {
        let mut layers = Vec::with_capacity(hidden_layers + 1);
        let mut fan_in = input_dim;
        for _ in 0..hidden_layers {
            let w = kaiming_uniform(fan_in, width, hidden.negative_slope(), rng);
            layers.push(DenseParams::new(fan_in, width, w, vec![0.0; width]).expect("layer shape"));
            fan_in = width;
        }
        let w = xavier_uniform(fan_in, 1, rng);
        layers.push(DenseParams::new(fan_in, 1, w, vec![0.0]).expect("layer shape"));
        Self { layers, hidden }
    }

    pub fn from_layers(layers: Vec<DenseParams>, hidden: Activation) -> Self {
        Self { layers, hidden }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn layers(&self) -> &[DenseParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseParams] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }

    pub fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(DenseParams::zero_grad);
    }

    /// Tape-free forward; returns one output per input row.
    pub fn forward_values(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut h = self.layers[0].forward_values(x, rows);
        for layer in &self.layers[1..] {
            h.iter_mut().for_each(|v| *v = self.hidden.apply(*v));
            h = layer.forward_values(&h, rows);
        }
        h
    }

    pub fn forward_tape(&self, tape: &mut Tape, x: Var, trainable: bool) -> Result<(Var, MlpBinding), AutodiffError> {
        let mut binding = MlpBinding::default();
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                h = tape.activation(h, self.hidden);
            }
            let b = if trainable { layer.bind(tape) } else { layer.bind_frozen(tape) };
            h = tape.dense(h, b)?;
            binding.layers.push(b);
        }
        Ok((h, binding))
    }

    pub fn accumulate_grads(&mut self, tape: &Tape, binding: &MlpBinding) {
        for (layer, b) in self.layers.iter_mut().zip(&binding.layers) {
            layer.accumulate_grads(tape, *b);
        }
    }

    pub fn to_checkpoint(&self, kind: &str, config_hash: &str) -> Checkpoint {
        let mut ck = Checkpoint::new(kind, config_hash);
        ck.set_meta("hidden_activation", activation_name(self.hidden));
        ck.set_meta("layers", self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            ck.push_array(format!("layer{i}.weight"), l.weight.shape().to_vec(), l.weight.values().to_vec());
            ck.push_array(format!("layer{i}.bias"), l.bias.shape().to_vec(), l.bias.values().to_vec());
        }
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, CheckpointError> {
        let act_name: String = ck.meta_value("hidden_activation")?;
        let hidden = parse_activation(&act_name)
            .ok_or_else(|| CheckpointError::Missing(format!("known activation (got {act_name})")))?;
        let n: usize = ck.meta_value("layers")?;
        let mut layers = Vec::with_capacity(n);
        for i in 0..n {
            let w = ck.array(&format!("layer{i}.weight"))?;
            let b = ck.array(&format!("layer{i}.bias"))?;
            let (&[rows, cols], &[nb]) = (w.shape.as_slice(), b.shape.as_slice()) else {
                return Err(CheckpointError::Missing(format!("2-d weight and 1-d bias for layer {i}")));
            };
            let layer = DenseParams::new(rows, cols, w.values.clone(), b.values.clone())
                .ok()
                .filter(|_| nb == cols)
                .ok_or_else(|| CheckpointError::Missing(format!("consistent shapes for layer {i}")))?;
            layers.push(layer);
        }
        if layers.is_empty() {
            return Err(CheckpointError::Missing("layers".into()));
        }
        Ok(Self { layers, hidden })
    }
}
