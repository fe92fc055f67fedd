use super::*;
use crate::autodiff::kernels::sigmoid;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn half_normal_mean() -> f64 {
    (2.0 / PI).sqrt()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

#[test]
fn mvn_moments_and_independence() {
    let mut r = rng::stream(1, "mvn");
    let pooled: Vec<f64> = (0..40_000).flat_map(|_| sample_mvn_isotropic(25, 0.1, &mut r)).collect();
    assert_eq!(pooled.len(), 1_000_000);
    let var = variance(&pooled);
    assert!((0.098..=0.102).contains(&var), "{var}");

    let pairs: Vec<Vec<f64>> = (0..1_000_000).map(|_| sample_mvn_isotropic(2, 0.1, &mut r)).collect();
    let a: Vec<f64> = pairs.iter().map(|p| p[0]).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p[1]).collect();
    let (ma, mb) = (mean(&a), mean(&b));
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    let rho = cov / (variance(&a) * variance(&b)).sqrt();
    assert!(rho.abs() < 0.01, "{rho}");

    let tiny = sample_mvn_isotropic(25, 1e-30, &mut r);
    assert!(tiny.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn generators_are_pure_functions_of_n_and_seed() {
    for kind in SyntheticKind::ALL {
        let a = kind.generate(500, 11).unwrap();
        let b = kind.generate(500, 11).unwrap();
        assert_eq!(a, b, "{}", kind.name());
        let c = kind.generate(500, 12).unwrap();
        assert_ne!(a.targets, c.targets);
    }
}

#[test]
fn normal_optimal_predictor_mae_is_half_normal_mean() {
    let beta = LinearCoefficients::sample(0.1, &mut rng::stream(5, "test-beta"));
    let ds = gen_normal_with(100_000, &beta, 5).unwrap();
    let test = &ds.split.test;
    let mae = test.iter().map(|&i| (ds.targets[i] - beta.dot(ds.features.row(i))).abs()).sum::<f64>()
        / test.len() as f64;
    assert!((mae - half_normal_mean()).abs() < 0.015, "{mae}");

    let zero = gen_normal_with(100_000, &LinearCoefficients::zeros(), 5).unwrap();
    let mae0 = mean(&zero.targets.iter().map(|y| y.abs()).collect::<Vec<_>>());
    assert!((mae0 - half_normal_mean()).abs() < 0.01, "{mae0}");
    assert!(ds.meta.notes.iter().any(|n| n.contains("N(0, I)")));
}

/// Least squares via normal equations and Gaussian elimination.
#[allow(clippy::needless_range_loop)]
fn ols(x: &Matrix, y: &[f64], rows: &[usize]) -> Vec<f64> {
    let d = x.cols();
    let mut a = vec![vec![0.0; d + 1]; d];
    for &i in rows {
        let r = x.row(i);
        for j in 0..d {
            for k in 0..d {
                a[j][k] += r[j] * r[k];
            }
            a[j][d] += r[j] * y[i];
        }
    }
    for c in 0..d {
        let p = (c..d).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        for r in 0..d {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=d {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..d).map(|j| a[j][d] / a[j][j]).collect()
}

#[test]
fn normal_ols_recovers_beta() {
    let beta = LinearCoefficients::sample(0.1, &mut rng::stream(9, "test-beta"));
    let ds = gen_normal_with(100_000, &beta, 9).unwrap();
    assert_eq!(ds.split.train.len(), 60_000);
    let est = ols(&ds.features, &ds.targets, &ds.split.train);
    let worst = est.iter().zip(&beta.beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 0.02, "{worst}");
}

#[test]
fn heteroscedastic_conditional_median_oracle() {
    // E|h − median h| = E[0.001 + 0.5|x|]·√(2/π) for x ~ N(0,1).
    let closed_form = (0.001 + 0.5 * half_normal_mean()) * half_normal_mean();
    assert!((closed_form - 0.319).abs() < 0.001);
    let ds = gen_heteroscedastic(100_000, 3).unwrap();
    let mae = (0..ds.n_rows())
        .map(|i| {
            let x = ds.features.get(i, 0);
            (ds.targets[i] - (x + HeteroNoise::scale(x))).abs()
        })
        .sum::<f64>()
        / ds.n_rows() as f64;
    assert!((mae - closed_form).abs() < 0.005, "{mae}");
    assert_eq!(ds.n_features(), 1);

    let at_zero = HeteroNoise::new(0.0, 1.7);
    assert_eq!(at_zero.h, 0.001 * 1.7);
    assert_eq!(HeteroNoise::new(-2.0, 0.5).h, (0.001 + 1.0) * 0.5);
}

#[test]
fn classification_targets_and_bayes_mae() {
    let ds = gen_classification(100_000, 4).unwrap();
    assert!(ds.targets.iter().all(|&y| y == 0.0 || y == 1.0));
    let m = mean(&ds.targets);
    assert!((0.45..=0.55).contains(&m), "{m}");

    // Bayes predictor 1[p > 1/2] on the generated rows vs E[min(p, 1−p)].
    let beta = LinearCoefficients::sample(0.5, &mut rng::stream(4, "beta"));
    let mut bayes = 0.0;
    let mut expected = 0.0;
    for i in 0..ds.n_rows() {
        let p = sigmoid(beta.dot(ds.features.row(i)));
        let pred = if p > 0.5 { 1.0 } else { 0.0 };
        bayes += (ds.targets[i] - pred).abs();
        expected += p.min(1.0 - p);
    }
    let n = ds.n_rows() as f64;
    assert!((bayes / n - expected / n).abs() < 0.005, "{} vs {}", bayes / n, expected / n);

    let flat = gen_classification_with(100_000, &LinearCoefficients::zeros(), 4).unwrap();
    let half = flat.targets.iter().map(|y| (y - 0.5).abs()).sum::<f64>() / 100_000.0;
    assert_eq!(half, 0.5);
}

#[test]
fn tweedie_sampler_moments() {
    let params = TweedieParams::new(1.0, 1.5, 1.0).unwrap();
    assert!((params.zero_probability() - (-2.0f64).exp()).abs() < 1e-15);
    let mut r = rng::stream(8, "tweedie-moments");
    let draws: Vec<f64> = (0..1_000_000).map(|_| sample_tweedie(1.0, 1.5, 1.0, &mut r).unwrap()).collect();
    let zeros = draws.iter().filter(|&&v| v == 0.0).count() as f64 / draws.len() as f64;
    assert!((zeros - (-2.0f64).exp()).abs() < 0.005, "{zeros}");
    let m = mean(&draws);
    assert!((m - 1.0).abs() < 0.01, "{m}");
    let v = variance(&draws);
    assert!((v - 1.0).abs() < 0.02, "{v}");
    assert!(draws.iter().all(|&v| v >= 0.0));
}

#[test]
fn tweedie_sampler_moments_off_unit_mean() {
    let (mu, p, phi) = (3.5, 1.3, 0.7);
    let params = TweedieParams::new(mu, p, phi).unwrap();
    let mut r = rng::stream(10, "tweedie-moments");
    let draws: Vec<f64> = (0..1_000_000).map(|_| params.sample(&mut r)).collect();
    assert!((mean(&draws) / mu - 1.0).abs() < 0.01);
    assert!((variance(&draws) / params.variance() - 1.0).abs() < 0.02);
    let zeros = draws.iter().filter(|&&v| v == 0.0).count() as f64 / draws.len() as f64;
    assert!((zeros - params.zero_probability()).abs() < 0.005);
}

#[test]
fn tweedie_domain_errors() {
    let mut r = rng::stream(0, "x");
    for (mu, p, phi) in [(1.0, 1.0, 1.0), (1.0, 2.0, 1.0), (1.0, 1.5, 0.0), (0.0, 1.5, 1.0), (-1.0, 1.5, 1.0)] {
        assert!(matches!(sample_tweedie(mu, p, phi, &mut r), Err(DatasetError::Domain(_))));
    }
}

#[test]
fn tweedie_dataset_is_zero_inflated() {
    let ds = gen_tweedie(100_000, 6).unwrap();
    let zeros = ds.targets.iter().filter(|&&y| y == 0.0).count() as f64 / ds.n_rows() as f64;
    assert!(zeros > 0.05 && zeros < 0.5, "{zeros}");
    assert!(ds.targets.iter().all(|y| y.is_finite() && *y >= 0.0));

    let unit = gen_tweedie_with(200_000, &LinearCoefficients::zeros(), 6).unwrap();
    let zeros = unit.targets.iter().filter(|&&y| y == 0.0).count() as f64 / unit.n_rows() as f64;
    assert!((zeros - (-2.0f64).exp()).abs() < 0.005);
    assert!((mean(&unit.targets) - 1.0).abs() < 0.02);
}

#[test]
fn tweedie_survives_extreme_linear_predictor() {
    let beta = LinearCoefficients { beta: vec![50.0; LINEAR_DIM], variance_scale: 0.0 };
    let ds = gen_tweedie_with(50, &beta, 1).unwrap();
    assert!(ds.targets.iter().all(|y| y.is_finite()));
}

#[test]
fn split_sizes_and_determinism() {
    let ds = TabularDataset::from_parts("t", Matrix::zeros(10, 1), vec![0.0; 10], vec!["a".into()], 3).unwrap();
    assert_eq!((ds.split.train.len(), ds.split.val.len(), ds.split.test.len()), (6, 2, 2));
    let again = split_dataset(ds.clone(), DEFAULT_RATIOS, 3).unwrap();
    assert_eq!(again.split, ds.split);
    assert!(split_dataset(ds, (0.5, 0.2, 0.2), 3).is_err());

    let big = gen_normal(100_000, 2).unwrap();
    assert!(big.split.is_partition_of(100_000));
    assert_eq!((big.split.train.len(), big.split.val.len(), big.split.test.len()), (60_000, 20_000, 20_000));
}

proptest! {
    #[test]
    fn split_is_partition_with_60_20_20(n in 1usize..3000, seed in any::<u64>()) {
        let ds = TabularDataset::from_parts("p", Matrix::zeros(n, 1), vec![0.0; n], vec!["a".into()], seed).unwrap();
        prop_assert!(ds.split.is_partition_of(n));
        let nf = n as f64;
        prop_assert!((ds.split.train.len() as f64 - 0.6 * nf).abs() <= 1.0);
        prop_assert!((ds.split.val.len() as f64 - 0.2 * nf).abs() <= 1.0);
        prop_assert!((ds.split.test.len() as f64 - 0.2 * nf).abs() <= 2.0);
    }
}

#[test]
fn standardize_uses_train_statistics() {
    let mut r = rng::stream(2, "std");
    let n = 1000;
    let x = Matrix::from_fn(n, 3, |_, j| match j {
        0 => r.random_range(5.0..9.0),
        1 => 4.25,
        _ => r.random_range(-100.0..300.0),
    });
    let y: Vec<f64> = (0..n).map(|i| 3.0 * x.get(i, 0) + 7.0).collect();
    let ds = TabularDataset::from_parts("s", x, y, vec!["a".into(), "b".into(), "c".into()], 1).unwrap();
    let (z, t) = standardize(&ds, StandardizeMode::FeaturesAndTarget).unwrap();
    for j in [0, 2] {
        let col: Vec<f64> = z.split.train.iter().map(|&i| z.features.get(i, j)).collect();
        assert!(mean(&col).abs() < 1e-10);
        assert!((variance(&col).sqrt() - 1.0).abs() < 1e-10);
    }
    // constant column unchanged
    assert!(z.split.train.iter().all(|&i| z.features.get(i, 1) == 4.25));
    for i in 0..n {
        assert!((t.inverse_target(z.targets[i]) - ds.targets[i]).abs() < 1e-12);
    }
    let (f, t2) = standardize(&ds, StandardizeMode::FeaturesOnly).unwrap();
    assert_eq!(f.targets, ds.targets);
    assert_eq!((t2.target_mean, t2.target_scale), (0.0, 1.0));
}

#[test]
fn log1p_target_round_trips_and_rejects_domain() {
    let ds = gen_tweedie(2000, 3).unwrap();
    let (z, t) = standardize_with(&ds, StandardizeMode::FeaturesAndTarget, TargetTransform::Log1p).unwrap();
    let logged: Vec<f64> = z.split.train.iter().map(|&i| ds.targets[i].ln_1p()).collect();
    let scaled: Vec<f64> = z.split.train.iter().map(|&i| z.targets[i]).collect();
    assert!((t.target_mean - mean(&logged)).abs() < 1e-12);
    assert!(mean(&scaled).abs() < 1e-10);
    for i in 0..ds.n_rows() {
        let back = t.inverse_target(z.targets[i]);
        assert!((back - ds.targets[i]).abs() <= 1e-9 * ds.targets[i].max(1.0));
    }
    let x = Matrix::from_fn(5, 1, |i, _| i as f64);
    let bad = TabularDataset::from_parts("neg", x, vec![0.0, 1.0, -1.0, 2.0, 3.0], vec!["x".into()], 0).unwrap();
    assert!(matches!(
        standardize_with(&bad, StandardizeMode::FeaturesOnly, TargetTransform::Log1p),
        Err(DatasetError::Transform(_))
    ));
    assert_eq!(TargetTransform::parse("log1p"), Some(TargetTransform::Log1p));
    assert_eq!(TargetTransform::parse(TargetTransform::None.as_str()), Some(TargetTransform::None));
}

#[test]
fn csv_export_has_header_and_rows() {
    let ds = gen_heteroscedastic(4, 1).unwrap();
    let mut buf = Vec::new();
    ds.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x_0,y");
    assert_eq!(lines.len(), 5);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first, vec![ds.features.get(0, 0), ds.targets[0]]);
}

mod csv_files {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    fn health_rows(n: usize) -> String {
        let mut s = String::from("age,sex,bmi,children,smoker,region,charges\n");
        let sexes = ["female", "male"];
        let smokers = ["no", "yes"];
        let regions = ["northeast", "northwest", "southeast", "southwest"];
        for i in 0..n {
            s.push_str(&format!(
                "{},{},{:.2},{},{},{},{:.3}\n",
                18 + i % 47,
                sexes[i % 2],
                20.0 + (i % 17) as f64,
                i % 5,
                smokers[(i / 3) % 2],
                regions[i % 4],
                1000.0 + 37.5 * i as f64
            ));
        }
        s
    }

    #[test]
    fn health_insurance_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "insurance.csv", &health_rows(1338));
        let ds = load_csv_dataset(&p, &CsvSchema::HealthInsurance, 0).unwrap();
        assert_eq!(ds.n_rows(), 1338);
        assert_eq!(ds.n_features(), 8);
        assert_eq!(
            ds.meta.feature_names,
            ["age", "bmi", "children", "sex_male", "smoker_yes", "region_northwest", "region_southeast", "region_southwest"]
        );
        assert!(ds.split.is_partition_of(1338));
        assert_eq!(ds.features.row(1), &[19.0, 21.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(ds.targets[1], 1037.5);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "bad.csv", "age,sex,bmi,children,region,charges\n30,male,22.1,0,northeast,100\n");
        let err = load_csv_dataset(&p, &CsvSchema::HealthInsurance, 0).unwrap_err();
        match err {
            DatasetError::Schema { expected, found, .. } => {
                assert!(expected.contains(&"smoker".to_string()));
                assert!(!found.contains(&"smoker".to_string()));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unparseable_cell_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let body = "age,sex,bmi,children,smoker,region,charges\n30,male,22.1,0,no,northeast,100\n31,female,abc,0,no,northeast,120\n";
        let p = write(&dir, "bad.csv", body);
        match load_csv_dataset(&p, &CsvSchema::HealthInsurance, 0).unwrap_err() {
            DatasetError::Parse { line, column, value, .. } => {
                assert_eq!((line, column.as_str(), value.as_str()), (3, "bmi", "abc"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn car_insurance_join_and_encoding() {
        let dir = tempfile::tempdir().unwrap();
        let freq = "IDpol,ClaimNb,Exposure,Area,VehPower,VehAge,DrivAge,BonusMalus,VehBrand,VehGas,Density,Region\n\
            1,1,0.1,'D',5,0,55,50,'B12',Regular,1217,R82\n\
            3,0,0.77,'B',5,0,55,50,'B12',Regular,1217,R82\n\
            5,2,1.5,'B',6,2,52,50,'B3',Diesel,54,R22\n\
            10,0,0.09,'E',7,0,46,50,'B12',Diesel,76,R72\n\
            11,0,0.84,'E',7,0,46,50,'B12',Diesel,76,R72\n";
        let sev = "IDpol,ClaimAmount\n1,995.2\n5,300\n5,45.5\n";
        let fp = write(&dir, "freq.csv", freq);
        let sp = write(&dir, "sev.csv", sev);
        let schema = CsvSchema::CarInsurance { severity_path: sp };
        let ds = load_csv_dataset(&fp, &schema, 0).unwrap();
        assert_eq!(ds.targets, vec![995.2, 0.0, 345.5, 0.0, 0.0]);
        let exposure: Vec<f64> = (0..5).map(|i| ds.features.get(i, 0)).collect();
        assert_eq!(exposure, vec![0.1, 0.77, 1.0, 0.09, 0.84]);
        let names = &ds.meta.feature_names;
        assert_eq!(&names[..6], &CAR_NUMERIC_NAMES);
        assert!(names.contains(&"Area_D".to_string()) && !names.contains(&"Area_B".to_string()));
        assert!(names.contains(&"VehBrand_B3".to_string()));
        // zero inflation gate on the toy join
        let zeros = ds.targets.iter().filter(|&&y| y == 0.0).count();
        assert!(zeros as f64 / ds.n_rows() as f64 > 0.5);
    }

    const CAR_NUMERIC_NAMES: [&str; 6] = ["Exposure", "VehPower", "VehAge", "DrivAge", "BonusMalus", "Density"];
}
