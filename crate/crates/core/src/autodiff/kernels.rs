//! Raw numeric kernels shared by the tape and the tape-free inference path.
//!
//! Matrices are row-major slices. Both paths call the same functions so a
//! recorded forward and a plain forward produce bit-identical values.

/// `c = a · b` with `a: [m, k]`, `b: [k, n]`, `c: [m, n]` (overwritten).
pub fn matmul(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: slice lengths are checked above against the row-major strides.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), n as isize, 1,
            0.0,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `da += dc · bᵀ` with `dc: [m, n]`, `b: [k, n]`, `da: [m, k]`.
pub fn matmul_grad_lhs(dc: &[f64], b: &[f64], da: &mut [f64], m: usize, k: usize, n: usize) {
    assert_eq!(dc.len(), m * n);
    assert_eq!(b.len(), k * n);
    assert_eq!(da.len(), m * k);
    if m == 0 || k == 0 {
        return;
    }
    // SAFETY: bᵀ is read through swapped strides of the checked [k, n] buffer.
    unsafe {
        matrixmultiply::dgemm(
            m, n, k, 1.0,
            dc.as_ptr(), n as isize, 1,
            b.as_ptr(), 1, n as isize,
            1.0,
            da.as_mut_ptr(), k as isize, 1,
        );
    }
}

/// `db += aᵀ · dc` with `a: [m, k]`, `dc: [m, n]`, `db: [k, n]`.
pub fn matmul_grad_rhs(a: &[f64], dc: &[f64], db: &mut [f64], m: usize, k: usize, n: usize) {
    assert_eq!(a.len(), m * k);
    assert_eq!(dc.len(), m * n);
    assert_eq!(db.len(), k * n);
    if k == 0 || n == 0 {
        return;
    }
    // SAFETY: aᵀ is read through swapped strides of the checked [m, k] buffer.
    unsafe {
        matrixmultiply::dgemm(
            k, m, n, 1.0,
            a.as_ptr(), 1, k as isize,
            dc.as_ptr(), n as isize, 1,
            1.0,
            db.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// Adds `bias: [n]` to every row of `x: [m, n]`.
pub fn add_row_bias(x: &mut [f64], bias: &[f64]) {
    let n = bias.len();
    if n == 0 {
        return;
    }
    for row in x.chunks_exact_mut(n) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

/// Logistic function, branching on sign so `exp` never overflows.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `ln σ(t)`.
pub fn log_sigmoid(t: f64) -> f64 {
    -softplus(-t)
}

/// Binary cross-entropy of a logit against a {0, 1} target,
/// `max(l, 0) - l·y + ln(1 + e^{-|l|})`.
pub fn bce_with_logits(logit: f64, target: f64) -> f64 {
    logit.max(0.0) - logit * target + (-logit.abs()).exp().ln_1p()
}

/// Concatenates `a: [m, p]` and `b: [m, q]` column-wise into `[m, p + q]`.
pub fn concat_cols(a: &[f64], p: usize, b: &[f64], q: usize, m: usize) -> Vec<f64> {
    assert_eq!(a.len(), m * p);
    assert_eq!(b.len(), m * q);
    let mut out = Vec::with_capacity(m * (p + q));
    for i in 0..m {
        out.extend_from_slice(&a[i * p..(i + 1) * p]);
        out.extend_from_slice(&b[i * q..(i + 1) * q]);
    }
    out
}
