//! Cholesky factorization and triangular solves on row-major matrices.

use crate::matrix::Matrix;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Lower-triangular `L` with `L·Lᵀ = a`, or `None` if `a` is not numerically
/// positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "cholesky needs a square matrix");
    let mut l = Matrix::zeros(n, n);
    let data = l.as_mut_slice();
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&data[i * n..i * n + j], &data[j * n..j * n + j]);
            if i == j {
                let d = a.get(i, i) - s;
                if !(d > 0.0) || !d.is_finite() {
                    return None;
                }
                data[i * n + i] = d.sqrt();
            } else {
                data[i * n + j] = (a.get(i, j) - s) / data[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let row = l.row(i);
        x[i] = (b[i] - dot(&row[..i], &x[..i])) / row[i];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`, sweeping rows of `L`.
pub fn solve_lower_transposed(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let row = l.row(i);
        x[i] /= row[i];
        let xi = x[i];
        for (xj, lij) in x[..i].iter_mut().zip(&row[..i]) {
            *xj -= lij * xi;
        }
    }
    x
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
