use super::AutodiffError;

/// Dense row-major `f64` array with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self, AutodiffError> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(AutodiffError::Shape { shape, expected, actual: values.len() });
        }
        Ok(Self { shape, values, requires_grad: false, grad: None })
    }

    /// Trainable tensor with a zeroed gradient buffer.
    pub fn parameter(shape: Vec<usize>, values: Vec<f64>) -> Result<Self, AutodiffError> {
        let mut t = Self::new(shape, values)?;
        t.requires_grad = true;
        t.grad = Some(vec![0.0; t.values.len()]);
        Ok(t)
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, AutodiffError> {
        Self::new(vec![rows, cols], values)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, values: vec![0.0; n], requires_grad: false, grad: None }
    }

    pub fn scalar(v: f64) -> Self {
        Self { shape: vec![], values: vec![v], requires_grad: false, grad: None }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.values.len() == 1
    }

    /// The single value of a scalar tensor.
    pub fn item(&self) -> f64 {
        assert!(self.is_scalar(), "item() on tensor of shape {:?}", self.shape);
        self.values[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn set_requires_grad(&mut self, on: bool) {
        self.requires_grad = on;
        if on && self.grad.is_none() {
            self.grad = Some(vec![0.0; self.values.len()]);
        }
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.fill(0.0);
        }
    }

    /// Adds `delta` into the gradient buffer, creating it if needed.
    pub fn accumulate_grad(&mut self, delta: &[f64]) {
        assert_eq!(delta.len(), self.values.len(), "gradient length mismatch");
        let g = self.grad.get_or_insert_with(|| vec![0.0; delta.len()]);
        for (a, d) in g.iter_mut().zip(delta) {
            *a += d;
        }
    }

    pub(crate) fn values_and_grad_mut(&mut self) -> (&mut [f64], Option<&[f64]>) {
        (&mut self.values, self.grad.as_deref())
    }
}
