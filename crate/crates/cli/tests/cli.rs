use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regressgan")).args(args).output().expect("binary runs")
}

fn tiny_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    let out = dir.join("out");
    fs::write(
        &path,
        format!(
            "datasets = [\"normal\"]\nmodels = [\"regressgan\", \"fnn_mse\"]\nn_seeds = 1\nn_rows = 500\n\
             output_dir = {:?}\nworkers = 1\nbatch_size = 32\nmax_steps = 20\neval_every = 10\n\
             k_samples_eval = 8\nval_eval_rows = 40\njsd_eval_rows = 40\nhidden_width = 8\nhidden_layers = 1\n{extra}",
            out.display().to_string()
        ),
    )
    .unwrap();
    path
}

#[test]
fn gen_data_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = bin(&["gen-data", "--dataset", "tweedie", "--n", "50", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert!(text.starts_with("x_0,x_1,"));
}

#[test]
fn run_then_report_reproduces_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let o = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("regressgan") && stdout.contains("fnn_mse"), "{stdout}");
    let out = dir.path().join("out");
    let table = fs::read(out.join("table.csv")).unwrap();
    let o = bin(&["report", "--in", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(out.join("table.csv")).unwrap(), table);
    assert_eq!(fs::read_to_string(out.join("metrics.csv")).unwrap().lines().count(), 3);
}

#[test]
fn ablation_subcommand_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let o = bin(&["ablation", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/curves_normal_seed0.csv").exists());
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "dropout = 0.5\n");
    let o = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("dropout"));
}

#[test]
fn missing_real_data_path_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let text = fs::read_to_string(&cfg).unwrap().replace("[\"normal\"]", "[\"health_insurance\"]");
    fs::write(&cfg, text).unwrap();
    let o = bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("health_path"));
}
