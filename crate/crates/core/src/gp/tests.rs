use super::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn params(l: f64, sv: f64, nv: f64) -> RbfKernelParams {
    RbfKernelParams { length_scale: l, signal_variance: sv, noise_variance: nv }
}

/// Gauss–Jordan inverse with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn dense_inverse(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| aug[i][c].abs().total_cmp(&aug[j][c].abs())).unwrap();
        aug.swap(c, p);
        let piv = aug[c][c];
        aug[c].iter_mut().for_each(|v| *v /= piv);
        for r in 0..n {
            if r != c {
                let f = aug[r][c];
                for k in 0..2 * n {
                    aug[r][k] -= f * aug[c][k];
                }
            }
        }
    }
    Matrix::from_fn(n, n, |i, j| aug[i][n + j])
}

fn random_matrix(rows: usize, cols: usize, scale: f64, seed: u64) -> Matrix {
    let mut r = rng::stream(seed, "gp-test");
    Matrix::from_fn(rows, cols, |_, _| r.random_range(-scale..scale))
}

#[test]
fn rbf_kernel_examples() {
    let p = params(1.0, 1.0, 0.0);
    let a = Matrix::new(1, 2, vec![0.0, 0.0]).unwrap();
    let b = Matrix::new(3, 2, vec![0.0, 0.0, 1.0, 1.0, 1e3, 0.0]).unwrap();
    let k = rbf_kernel(&a, &b, &p);
    assert_eq!(k.get(0, 0), 1.0);
    assert!((k.get(0, 1) - (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(k.get(0, 2), 0.0);
    let k2 = rbf_kernel(&a, &a, &params(0.7, 2.5, 0.0));
    assert_eq!(k2.get(0, 0), 2.5);
}

#[test]
fn single_point_interpolates() {
    let x = Matrix::new(1, 3, vec![0.1, -0.2, 0.3]).unwrap();
    let m = gp_fit(&x, &[4.2], &params(1.0, 1.0, 0.0)).unwrap();
    let pred = m.predict_mean(&x).unwrap();
    assert!((pred[0] - 4.2).abs() < 1e-9);
}

#[test]
fn noiseless_interpolation_of_kernel_function() {
    // f is a finite kernel expansion, so it lies in the model class.
    let p = params(1.0, 1.0, 0.0);
    let centers = random_matrix(7, 3, 3.0, 1);
    let weights = [0.5, -1.2, 2.0, 0.3, -0.7, 1.1, -0.4];
    let f = |x: &[f64]| (0..7).map(|c| weights[c] * p.eval(x, centers.row(c))).sum::<f64>();
    let x = random_matrix(50, 3, 3.0, 2);
    let y: Vec<f64> = (0..50).map(|i| f(x.row(i))).collect();
    let model = gp_fit(&x, &y, &p).unwrap();
    let pred = model.predict_mean(&x).unwrap();
    let worst = pred.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    let (_, var) = gp_predict(&model, &x).unwrap();
    assert!(var.iter().all(|&v| (0.0..1e-6).contains(&v)));
}

#[test]
fn duplicate_rows_engage_jitter() {
    let x = Matrix::new(3, 1, vec![0.5, 0.5, 1.0]).unwrap();
    let model = gp_fit(&x, &[1.0, 1.0, 2.0], &params(1.0, 1.0, 0.0)).unwrap();
    assert!(model.jitter >= JITTER_START);
    assert!(model.predict_mean(&x).unwrap().iter().all(|v| v.is_finite()));

    // slightly indefinite kernel: escalation must kick in
    let base = Matrix::new(2, 2, vec![1.0, 1.0 + 1e-9, 1.0 + 1e-9, 1.0]).unwrap();
    let x2 = Matrix::new(2, 1, vec![0.0, 0.0]).unwrap();
    let fit = fit_from_kernel(&x2, &[0.0, 1.0], &base, params(1.0, 1.0, 0.0)).unwrap();
    assert!(fit.jitter > 1e-9, "{}", fit.jitter);
}

#[test]
fn ill_conditioned_error_reports_length_scale() {
    let x = Matrix::new(2, 1, vec![0.0, 0.0]).unwrap();
    let base = Matrix::new(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
    match fit_from_kernel(&x, &[0.0, 1.0], &base, params(3.0, 1.0, 0.0)) {
        Err(GpError::IllConditioned { length_scale, m }) => assert_eq!((length_scale, m), (3.0, 2)),
        other => panic!("expected ill-conditioned, got {other:?}"),
    }
}

#[test]
fn far_points_revert_to_prior() {
    let x = random_matrix(10, 2, 1.0, 3);
    let y: Vec<f64> = (0..10).map(|i| 5.0 + x.get(i, 0)).collect();
    let model = gp_fit(&x, &y, &params(0.5, 2.0, 0.01)).unwrap();
    let far = Matrix::new(1, 2, vec![1e4, -1e4]).unwrap();
    let (mean, var) = gp_predict(&model, &far).unwrap();
    assert!((mean[0] - model.target_mean).abs() < 1e-12);
    assert!((var[0] - 2.0).abs() < 1e-12);
}

#[test]
fn cholesky_reconstructs_kernel() {
    let x = random_matrix(40, 4, 2.0, 4);
    let p = params(1.5, 1.3, 0.05);
    let model = gp_fit(&x, &vec![0.0; 40], &p).unwrap();
    let k = rbf_kernel(&x, &x, &p);
    let l = &model.cholesky_factor;
    for i in 0..40 {
        for j in 0..40 {
            let llt: f64 = (0..40).map(|t| l.get(i, t) * l.get(j, t)).sum();
            let target = k.get(i, j) + if i == j { p.noise_variance + model.jitter } else { 0.0 };
            assert!((llt - target).abs() < 1e-8);
            if j > i {
                assert_eq!(l.get(i, j), 0.0);
            }
        }
    }
}

/// Posterior mean and variance through an explicit inverse.
fn dense_posterior(x: &Matrix, y: &[f64], p: &RbfKernelParams, q: &Matrix, jitter: f64) -> (Vec<f64>, Vec<f64>) {
    let m = x.rows();
    let ybar = y.iter().sum::<f64>() / m as f64;
    let mut k = rbf_kernel(x, x, p);
    for i in 0..m {
        k.set(i, i, k.get(i, i) + p.noise_variance + jitter);
    }
    let kinv = dense_inverse(&k);
    let ks = rbf_kernel(q, x, p);
    let mut mean = Vec::new();
    let mut var = Vec::new();
    for r in 0..q.rows() {
        let kr = ks.row(r);
        let w: Vec<f64> = (0..m).map(|i| (0..m).map(|j| kinv.get(i, j) * kr[j]).sum()).collect();
        mean.push(ybar + w.iter().zip(y).map(|(a, b)| a * (b - ybar)).sum::<f64>());
        var.push(p.signal_variance - w.iter().zip(kr).map(|(a, b)| a * b).sum::<f64>());
    }
    (mean, var)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn cholesky_path_matches_dense_inverse(
        m in 1usize..=5,
        seed in any::<u64>(),
        l in 0.3f64..3.0,
        sv in 0.2f64..3.0,
        nv in 0.0f64..0.5,
    ) {
        let p = params(l, sv, nv);
        let x = random_matrix(m, 2, 2.0, seed);
        let mut r = rng::stream(seed, "y");
        let y: Vec<f64> = (0..m).map(|_| r.random_range(-3.0..3.0)).collect();
        let q = random_matrix(6, 2, 3.0, seed ^ 1);
        let model = gp_fit(&x, &y, &p).unwrap();
        let (mean, var) = gp_predict(&model, &q).unwrap();
        let (dm, dv) = dense_posterior(&x, &y, &p, &q, model.jitter);
        for i in 0..6 {
            prop_assert!((mean[i] - dm[i]).abs() < 1e-8, "mean {} vs {}", mean[i], dm[i]);
            prop_assert!((var[i] - dv[i].max(0.0)).abs() < 1e-8, "var {} vs {}", var[i], dv[i]);
        }
    }

    #[test]
    fn posterior_variance_is_bounded(seed in any::<u64>(), nv in 0.0f64..0.3) {
        let p = params(1.0, 1.7, nv);
        let x = random_matrix(20, 3, 2.0, seed);
        let model = gp_fit(&x, &[1.0; 20], &p).unwrap();
        let q = random_matrix(30, 3, 4.0, seed ^ 7);
        let (_, var) = gp_predict(&model, &q).unwrap();
        prop_assert!(var.iter().all(|&v| v >= 0.0 && v <= p.signal_variance + 1e-8));
    }
}

#[test]
fn sine_smoke_benchmark() {
    let x = Matrix::from_fn(30, 1, |i, _| i as f64 * 2.0 * std::f64::consts::PI / 29.0);
    let y: Vec<f64> = (0..30).map(|i| x.get(i, 0).sin()).collect();
    let grid = GpGrid { length_scales: vec![0.3, 1.0, 3.0], noise_variances: vec![1e-6, 1e-4, 1e-2], signal_variance: 1.0 };
    let best = hyperparam_search(&x, &y, &grid).unwrap();
    let model = gp_fit(&x, &y, &best).unwrap();
    let q = Matrix::from_fn(200, 1, |i, _| 0.1 + i as f64 * 6.0 / 199.0);
    let pred = model.predict_mean(&q).unwrap();
    let mse = (0..200).map(|i| (pred[i] - q.get(i, 0).sin()).powi(2)).sum::<f64>() / 200.0;
    assert!(mse.sqrt() < 0.05, "rmse {}", mse.sqrt());
}

#[test]
fn search_recovers_generating_length_scale() {
    let truth = params(1.0, 1.0, 0.01);
    let mut r = rng::stream(21, "gp-draw");
    let x = Matrix::from_fn(200, 1, |_, _| r.random_range(0.0..10.0));
    let mut k = rbf_kernel(&x, &x, &truth);
    for i in 0..200 {
        k.set(i, i, k.get(i, i) + truth.noise_variance + 1e-8);
    }
    let l = cholesky(&k).unwrap();
    let z: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut r)).collect();
    let y: Vec<f64> = (0..200).map(|i| l.row(i).iter().zip(&z).map(|(a, b)| a * b).sum()).collect();
    let grid = GpGrid::standard(1, &y);
    let best = hyperparam_search(&x, &y, &grid).unwrap();
    assert!([0.3, 1.0, 3.0].contains(&best.length_scale), "{best:?}");
}

#[test]
fn search_on_pure_noise_picks_largest_noise() {
    let mut r = rng::stream(22, "noise");
    let x = random_matrix(150, 2, 2.0, 23);
    let y: Vec<f64> = (0..150).map(|_| StandardNormal.sample(&mut r)).collect();
    let grid = GpGrid::standard(2, &y);
    let best = hyperparam_search(&x, &y, &grid).unwrap();
    assert_eq!(best.noise_variance, *grid.noise_variances.last().unwrap());
}

#[test]
fn single_grid_point_is_returned() {
    let x = random_matrix(10, 2, 1.0, 5);
    let y = vec![0.5; 10];
    let grid = GpGrid { length_scales: vec![0.7], noise_variances: vec![0.2], signal_variance: 1.1 };
    assert_eq!(hyperparam_search(&x, &y, &grid).unwrap(), params(0.7, 1.1, 0.2));
    let empty = GpGrid { length_scales: vec![], noise_variances: vec![0.2], signal_variance: 1.0 };
    assert!(hyperparam_search(&x, &y, &empty).is_err());
}

#[test]
fn subsample_caps_train_only() {
    let ds = crate::datasets::gen_normal(100_000, 1).unwrap();
    let sub = subsample_for_gp(&ds, 2000, 4);
    assert_eq!(sub.split.train.len(), 2000);
    assert_eq!(sub.split.val, ds.split.val);
    assert_eq!(sub.split.test, ds.split.test);
    assert_eq!(subsample_for_gp(&ds, 2000, 4).split, sub.split);
    let set: std::collections::HashSet<_> = ds.split.train.iter().collect();
    assert!(sub.split.train.iter().all(|i| set.contains(i)));

    let small = crate::datasets::gen_normal(1666, 1).unwrap();
    assert_eq!(small.split.train.len(), 1000);
    assert_eq!(subsample_for_gp(&small, 2000, 4).split, small.split);
}

#[test]
fn checkpoint_round_trip() {
    let x = random_matrix(8, 2, 1.0, 9);
    let model = gp_fit(&x, &[1.0, 2.0, 0.5, 0.1, -1.0, 3.0, 2.2, 0.0], &params(0.9, 1.2, 0.03)).unwrap();
    let back = GpModel::from_checkpoint(&Checkpoint::parse(&model.to_checkpoint("h").to_text()).unwrap()).unwrap();
    assert_eq!(back, model);
}
