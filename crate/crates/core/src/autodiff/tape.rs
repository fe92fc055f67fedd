use super::kernels;
use super::{AutodiffError, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Relu => t.max(0.0),
            Activation::LeakyRelu(slope) => {
                if t > 0.0 {
                    t
                } else {
                    slope * t
                }
            }
            Activation::Sigmoid => kernels::sigmoid(t),
            Activation::Identity => t,
        }
    }

    /// Derivative at input `t` with forward output `y`.
    fn derivative(self, t: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(slope) => {
                if t > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }

    /// Negative slope used for Kaiming init gain.
    pub fn negative_slope(self) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => slope,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    BceWithLogits,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    MatMul { a: usize, b: usize },
    AddBias { x: usize, bias: usize },
    Activation { x: usize, kind: Activation },
    ConcatCols { a: usize, b: usize },
    Loss { pred: usize, target: usize, kind: LossKind },
    Scale { x: usize, factor: f64 },
    Add { a: usize, b: usize },
}

#[derive(Debug, Clone)]
struct Node {
    shape: Vec<usize>,
    values: Vec<f64>,
    op: Op,
    requires_grad: bool,
}

/// Linear record of a forward computation.
///
/// Nodes are appended in evaluation order, so every node's inputs precede it.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn matrix_dims(shape: &[usize]) -> Option<(usize, usize)> {
    match shape {
        [r, c] => Some((*r, *c)),
        _ => None,
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, values: Vec<f64>, op: Op, requires_grad: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        self.nodes.push(Node { shape, values, op, requires_grad });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    /// Records a copy of `t`; it receives a gradient iff `t.requires_grad()`.
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        self.push(t.shape().to_vec(), t.values().to_vec(), Op::Leaf, t.requires_grad())
    }

    /// Records a copy of `t` that never receives a gradient.
    pub fn constant(&mut self, t: &Tensor) -> Var {
        self.push(t.shape().to_vec(), t.values().to_vec(), Op::Leaf, false)
    }

    /// Records a non-trainable input from raw parts.
    pub fn input(&mut self, shape: Vec<usize>, values: Vec<f64>) -> Result<Var, AutodiffError> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(AutodiffError::Shape { shape, expected, actual: values.len() });
        }
        Ok(self.push(shape, values, Op::Leaf, false))
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].values
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient from the most recent [`Tape::backward`], if the node received one.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    /// Adds this node's gradient into `t`'s gradient buffer.
    pub fn accumulate_into(&self, v: Var, t: &mut Tensor) {
        if let Some(g) = self.grad(v) {
            t.accumulate_grad(g);
        }
    }

    fn rg(&self, ids: &[usize]) -> bool {
        ids.iter().any(|&i| self.nodes[i].requires_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        let (Some((m, k)), Some((k2, n))) = (matrix_dims(&sa), matrix_dims(&sb)) else {
            return Err(AutodiffError::Dimension { op: "matmul", left: sa, right: sb });
        };
        if k != k2 {
            return Err(AutodiffError::Dimension { op: "matmul", left: sa, right: sb });
        }
        let mut out = vec![0.0; m * n];
        kernels::matmul(self.value(a), self.value(b), &mut out, m, k, n);
        let rg = self.rg(&[a.0, b.0]);
        Ok(self.push(vec![m, n], out, Op::MatMul { a: a.0, b: b.0 }, rg))
    }

    /// Adds a `[n]` bias to each row of a `[m, n]` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, AutodiffError> {
        let sx = self.shape(x).to_vec();
        let sb = self.shape(bias).to_vec();
        let ok = matches!((matrix_dims(&sx), sb.as_slice()), (Some((_, n)), [nb]) if n == *nb);
        if !ok {
            return Err(AutodiffError::Dimension { op: "add_bias", left: sx, right: sb });
        }
        let mut out = self.value(x).to_vec();
        kernels::add_row_bias(&mut out, self.value(bias));
        let rg = self.rg(&[x.0, bias.0]);
        Ok(self.push(sx, out, Op::AddBias { x: x.0, bias: bias.0 }, rg))
    }

    /// `x · W + b` for a `[batch, in]` input and bound dense parameters.
    pub fn dense(&mut self, x: Var, layer: DenseBinding) -> Result<Var, AutodiffError> {
        let sx = self.shape(x).to_vec();
        let sw = self.shape(layer.weight).to_vec();
        if matrix_dims(&sx).map(|d| d.1) != sw.first().copied() {
            return Err(AutodiffError::Dimension { op: "dense_forward", left: sx, right: sw });
        }
        let h = self.matmul(x, layer.weight)?;
        self.add_bias(h, layer.bias)
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Var {
        let out: Vec<f64> = self.value(x).iter().map(|&t| kind.apply(t)).collect();
        let shape = self.shape(x).to_vec();
        let rg = self.rg(&[x.0]);
        self.push(shape, out, Op::Activation { x: x.0, kind }, rg)
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        let (Some((m, p)), Some((m2, q))) = (matrix_dims(&sa), matrix_dims(&sb)) else {
            return Err(AutodiffError::Dimension { op: "concat_cols", left: sa, right: sb });
        };
        if m != m2 {
            return Err(AutodiffError::Dimension { op: "concat_cols", left: sa, right: sb });
        }
        let out = kernels::concat_cols(self.value(a), p, self.value(b), q, m);
        let rg = self.rg(&[a.0, b.0]);
        Ok(self.push(vec![m, p + q], out, Op::ConcatCols { a: a.0, b: b.0 }, rg))
    }

    /// Mean loss over all elements; returns a scalar node.
    pub fn loss(&mut self, pred: Var, target: Var, kind: LossKind) -> Result<Var, AutodiffError> {
        let sp = self.shape(pred).to_vec();
        let st = self.shape(target).to_vec();
        let (p, t) = (self.value(pred), self.value(target));
        if p.len() != t.len() || p.is_empty() {
            return Err(AutodiffError::Dimension { op: "loss", left: sp, right: st });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::Numeric("loss prediction"));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::Numeric("loss target"));
        }
        let n = p.len() as f64;
        let value = match kind {
            LossKind::Mse => p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n,
            LossKind::BceWithLogits => {
                debug_assert!(t.iter().all(|&y| y == 0.0 || y == 1.0));
                p.iter().zip(t).map(|(&l, &y)| kernels::bce_with_logits(l, y)).sum::<f64>() / n
            }
        };
        let rg = self.rg(&[pred.0, target.0]);
        Ok(self.push(vec![], vec![value], Op::Loss { pred: pred.0, target: target.0, kind }, rg))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let out: Vec<f64> = self.value(x).iter().map(|v| v * factor).collect();
        let shape = self.shape(x).to_vec();
        let rg = self.rg(&[x.0]);
        self.push(shape, out, Op::Scale { x: x.0, factor }, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        if self.shape(a) != self.shape(b) {
            return Err(AutodiffError::Dimension {
                op: "add",
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        let out: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.rg(&[a.0, b.0]);
        Ok(self.push(shape, out, Op::Add { a: a.0, b: b.0 }, rg))
    }

    fn grad_slot<'g>(grads: &'g mut [Option<Vec<f64>>], nodes: &[Node], i: usize) -> Option<&'g mut Vec<f64>> {
        if !nodes[i].requires_grad {
            return None;
        }
        let len = nodes[i].values.len();
        Some(grads[i].get_or_insert_with(|| vec![0.0; len]))
    }

    /// Reverse sweep from a scalar root. Clears gradients left by any earlier sweep.
    pub fn backward(&mut self, root: Var) -> Result<(), AutodiffError> {
        let root_node = &self.nodes[root.0];
        if root_node.values.len() != 1 {
            return Err(AutodiffError::NonScalarRoot(root_node.shape.clone()));
        }
        self.grads.iter_mut().for_each(|g| *g = None);
        if !root_node.requires_grad {
            return Ok(());
        }
        self.grads[root.0] = Some(vec![1.0]);
        let nodes = &self.nodes;
        let grads = &mut self.grads;
        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            match node.op {
                Op::Leaf => {}
                Op::MatMul { a, b } => {
                    let (m, k) = matrix_dims(&nodes[a].shape).expect("matmul lhs");
                    let n = nodes[b].shape[1];
                    if let Some(da) = Self::grad_slot(grads, nodes, a) {
                        kernels::matmul_grad_lhs(&g, &nodes[b].values, da, m, k, n);
                    }
                    if let Some(db) = Self::grad_slot(grads, nodes, b) {
                        kernels::matmul_grad_rhs(&nodes[a].values, &g, db, m, k, n);
                    }
                }
                Op::AddBias { x, bias } => {
                    if let Some(dx) = Self::grad_slot(grads, nodes, x) {
                        add_into(dx, &g);
                    }
                    if let Some(db) = Self::grad_slot(grads, nodes, bias) {
                        let n = db.len();
                        for row in g.chunks_exact(n) {
                            add_into(db, row);
                        }
                    }
                }
                Op::Activation { x, kind } => {
                    if let Some(dx) = Self::grad_slot(grads, nodes, x) {
                        let input = &nodes[x].values;
                        for i in 0..dx.len() {
                            dx[i] += g[i] * kind.derivative(input[i], node.values[i]);
                        }
                    }
                }
                Op::ConcatCols { a, b } => {
                    let (m, p) = matrix_dims(&nodes[a].shape).expect("concat lhs");
                    let q = nodes[b].shape[1];
                    if let Some(da) = Self::grad_slot(grads, nodes, a) {
                        for i in 0..m {
                            add_into(&mut da[i * p..(i + 1) * p], &g[i * (p + q)..i * (p + q) + p]);
                        }
                    }
                    if let Some(db) = Self::grad_slot(grads, nodes, b) {
                        for i in 0..m {
                            add_into(&mut db[i * q..(i + 1) * q], &g[i * (p + q) + p..(i + 1) * (p + q)]);
                        }
                    }
                }
                Op::Loss { pred, target, kind } => {
                    let p = &nodes[pred].values;
                    let t = &nodes[target].values;
                    let scale = g[0] / p.len() as f64;
                    let d_pred: Vec<f64> = match kind {
                        LossKind::Mse => p.iter().zip(t).map(|(a, b)| 2.0 * (a - b) * scale).collect(),
                        LossKind::BceWithLogits => p
                            .iter()
                            .zip(t)
                            .map(|(&l, &y)| (kernels::sigmoid(l) - y) * scale)
                            .collect(),
                    };
                    let d_target: Option<Vec<f64>> = nodes[target].requires_grad.then(|| match kind {
                        LossKind::Mse => d_pred.iter().map(|d| -d).collect(),
                        LossKind::BceWithLogits => p.iter().map(|&l| -l * scale).collect(),
                    });
                    if let Some(dp) = Self::grad_slot(grads, nodes, pred) {
                        add_into(dp, &d_pred);
                    }
                    if let (Some(dt), Some(src)) = (Self::grad_slot(grads, nodes, target), d_target) {
                        add_into(dt, &src);
                    }
                }
                Op::Scale { x, factor } => {
                    if let Some(dx) = Self::grad_slot(grads, nodes, x) {
                        for (d, gi) in dx.iter_mut().zip(&g) {
                            *d += factor * gi;
                        }
                    }
                }
                Op::Add { a, b } => {
                    if let Some(da) = Self::grad_slot(grads, nodes, a) {
                        add_into(da, &g);
                    }
                    if let Some(db) = Self::grad_slot(grads, nodes, b) {
                        add_into(db, &g);
                    }
                }
            }
            grads[id] = Some(g);
        }
        Ok(())
    }
}

/// Weight `[in_dim, out_dim]` and bias `[out_dim]` of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Tape handles of a layer's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseBinding {
    pub weight: Var,
    pub bias: Var,
}

impl DenseParams {
    pub fn new(in_dim: usize, out_dim: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self, AutodiffError> {
        Ok(Self {
            weight: Tensor::parameter(vec![in_dim, out_dim], weight)?,
            bias: Tensor::parameter(vec![out_dim], bias)?,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    /// Registers the parameters as trainable leaves.
    pub fn bind(&self, tape: &mut Tape) -> DenseBinding {
        DenseBinding { weight: tape.leaf(&self.weight), bias: tape.leaf(&self.bias) }
    }

    /// Registers the parameters as constants: gradients still flow to the
    /// layer input but not to the weights.
    pub fn bind_frozen(&self, tape: &mut Tape) -> DenseBinding {
        DenseBinding { weight: tape.constant(&self.weight), bias: tape.constant(&self.bias) }
    }

    pub fn accumulate_grads(&mut self, tape: &Tape, binding: DenseBinding) {
        tape.accumulate_into(binding.weight, &mut self.weight);
        tape.accumulate_into(binding.bias, &mut self.bias);
    }

    pub fn zero_grad(&mut self) {
        self.weight.zero_grad();
        self.bias.zero_grad();
    }

    /// Tape-free `x · W + b` for `x: [rows, in_dim]`.
    pub fn forward_values(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let (k, n) = (self.in_dim(), self.out_dim());
        let mut out = vec![0.0; rows * n];
        kernels::matmul(x, self.weight.values(), &mut out, rows, k, n);
        kernels::add_row_bias(&mut out, self.bias.values());
        out
    }
}

/// Binds `p` on the tape and applies it to `x`.
pub fn dense_forward(tape: &mut Tape, x: Var, p: &DenseParams) -> Result<(Var, DenseBinding), AutodiffError> {
    let binding = p.bind(tape);
    Ok((tape.dense(x, binding)?, binding))
}
