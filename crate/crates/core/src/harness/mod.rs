//! Experiment orchestration: seeded (dataset × model × seed) sweeps on a
//! worker pool, per-cell artifacts, results tables and the generator-loss
//! ablation.

mod config;
mod table;

use std::fs;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::datasets::{
    load_csv_dataset, split_dataset, CsvSchema, DatasetError, PreparedData, SplitName, TabularDataset,
    DEFAULT_RATIOS,
};
use crate::eval::{evaluate_model, EvalError, MetricsReport, TrainedModel};
use crate::gp::{gp_fit, hyperparam_search, subsample_for_gp, GpGrid};
use crate::rng::{derive_seed, stream};
use crate::training::{hash_text, train_fnn_mse, train_gan, GeneratorLoss, TrainLog};

pub use config::{DatasetKind, ExperimentConfig, ModelKind};
pub use table::{CellStats, ResultsTable};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("malformed metrics file {path}: line {line}")]
    Metrics { path: PathBuf, line: usize },
    #[error("no reports to tabulate")]
    Empty,
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// One (dataset, model, seed index) job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellId {
    pub dataset: DatasetKind,
    pub model: ModelKind,
    pub seed_index: usize,
    /// Generator objective override used by the ablation.
    pub generator_loss: Option<GeneratorLoss>,
}

impl CellId {
    /// Name under which the cell is reported.
    pub fn model_label(&self) -> String {
        match self.generator_loss {
            Some(g) => format!("{}_{}", self.model.as_str(), g.as_str()),
            None => self.model.as_str().to_string(),
        }
    }

    /// File-name stem for the cell's artifacts.
    pub fn label(&self) -> String {
        format!("{}_{}_seed{}", self.dataset.name(), self.model_label(), self.seed_index)
    }

    /// Seed for model initialization, batching and noise. The ablation's two
    /// variants share it so that they differ only in the objective.
    pub fn train_seed(&self, root: u64) -> u64 {
        derive_seed(root, &format!("{}/{}/{}", self.dataset.name(), self.model.as_str(), self.seed_index))
    }

    /// Seed for data generation and splitting, shared by all models.
    pub fn data_seed(&self, root: u64) -> u64 {
        derive_seed(root, &format!("{}/data/{}", self.dataset.name(), self.seed_index))
    }
}

#[derive(Debug, Clone)]
pub enum CellOutcome {
    Ok(MetricsReport),
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub id: CellId,
    pub outcome: CellOutcome,
    /// Training curve for the neural models.
    pub log: Option<TrainLog>,
    /// Divergence estimate at the returned generator checkpoint.
    pub final_jsd: Option<f64>,
}

/// Everything a sweep produced, in config order.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
    pub table: ResultsTable,
}

impl ExperimentResult {
    pub fn reports(&self) -> Vec<&MetricsReport> {
        self.cells
            .iter()
            .filter_map(|c| match &c.outcome {
                CellOutcome::Ok(r) => Some(r),
                CellOutcome::Failed(_) => None,
            })
            .collect()
    }
}

/// Real datasets are read once; synthetic ones are generated per cell.
struct Sources {
    car: Option<TabularDataset>,
    health: Option<TabularDataset>,
}

impl Sources {
    fn load(cfg: &ExperimentConfig, kinds: &[DatasetKind]) -> Result<Self, HarnessError> {
        let mut s = Sources { car: None, health: None };
        if kinds.contains(&DatasetKind::CarInsurance) {
            let (freq, sev) = (cfg.car_frequency_path.as_ref(), cfg.car_severity_path.as_ref());
            let (Some(freq), Some(sev)) = (freq, sev) else {
                return Err(HarnessError::Config("car_insurance needs both table paths".into()));
            };
            let schema = CsvSchema::CarInsurance { severity_path: sev.clone() };
            s.car = Some(load_csv_dataset(freq, &schema, cfg.seed)?);
        }
        if kinds.contains(&DatasetKind::HealthInsurance) {
            let Some(path) = cfg.health_path.as_ref() else {
                return Err(HarnessError::Config("health_insurance needs health_path".into()));
            };
            s.health = Some(load_csv_dataset(path, &CsvSchema::HealthInsurance, cfg.seed)?);
        }
        Ok(s)
    }

    fn dataset(&self, cfg: &ExperimentConfig, id: &CellId) -> Result<TabularDataset, HarnessError> {
        let seed = id.data_seed(cfg.seed);
        let fixed = match id.dataset {
            DatasetKind::Synthetic(kind) => return Ok(kind.generate(cfg.n_rows, seed)?),
            DatasetKind::CarInsurance => self.car.as_ref(),
            DatasetKind::HealthInsurance => self.health.as_ref(),
        };
        let ds = fixed.expect("real datasets are loaded before cells run").clone();
        Ok(split_dataset(ds, DEFAULT_RATIOS, seed)?)
    }
}

fn run_cell(cfg: &ExperimentConfig, sources: &Sources, id: &CellId, ablation: bool) -> Result<CellResult, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let seed = id.train_seed(cfg.seed);
    let mut train_cfg = cfg.train_config(seed).map_err(|e| err(&e))?;
    if let Some(g) = id.generator_loss {
        train_cfg.generator_loss = g;
    }
    if ablation {
        // Both variants must be logged on the same evaluation grid.
        train_cfg.patience = None;
    }
    let config_hash = hash_text(&format!(
        "dataset={}\nmodel={}\nseed_index={}\n{}{}",
        id.dataset.name(),
        id.model.as_str(),
        id.seed_index,
        cfg.canonical_text(),
        train_cfg.canonical_text()
    ));
    let raw = sources.dataset(cfg, id).map_err(|e| err(&e))?;
    let mode = cfg.standardize_mode().map_err(|e| err(&e))?;
    let transform = cfg.target_transform().map_err(|e| err(&e))?;
    let data = PreparedData::with_target_transform(raw, mode, transform).map_err(|e| err(&e))?;
    let label = id.label();
    let out = &cfg.output_dir;
    let checkpoint_path = out.join(format!("checkpoint_{label}"));

    let (model, log, final_jsd) = match id.model {
        ModelKind::RegressGan => {
            let o = train_gan(&data, &train_cfg).map_err(|e| err(&e))?;
            o.discriminator
                .to_checkpoint(&config_hash)
                .save(&out.join(format!("checkpoint_{label}.discriminator")))
                .map_err(|e| err(&e))?;
            o.generator.to_checkpoint(&config_hash).save(&checkpoint_path).map_err(|e| err(&e))?;
            let jsd = o.log.records.iter().find(|r| r.step == o.log.best_step).and_then(|r| r.jsd);
            (TrainedModel::Generator(o.generator), Some(o.log), jsd)
        }
        ModelKind::FnnMse => {
            let o = train_fnn_mse(&data, &train_cfg).map_err(|e| err(&e))?;
            o.model.to_checkpoint(&config_hash).save(&checkpoint_path).map_err(|e| err(&e))?;
            (TrainedModel::Fnn(o.model), Some(o.log), None)
        }
        ModelKind::Gp => {
            let sub = subsample_for_gp(&data.scaled, cfg.gp_subsample_cap, seed);
            let x = sub.split_features(SplitName::Train);
            let y = sub.split_targets(SplitName::Train);
            let params = hyperparam_search(&x, &y, &GpGrid::standard(x.cols(), &y)).map_err(|e| err(&e))?;
            let gp = gp_fit(&x, &y, &params).map_err(|e| err(&e))?;
            gp.to_checkpoint(&config_hash).save(&checkpoint_path).map_err(|e| err(&e))?;
            (TrainedModel::Gp(gp), None, None)
        }
    };
    if let Some(log) = &log {
        let path = out.join(format!("trainlog_{label}.csv"));
        let file = fs::File::create(&path).map_err(|e| err(&HarnessError::io(&path, e)))?;
        log.write_csv(io::BufWriter::new(file)).map_err(|e| err(&e))?;
    }
    let report = evaluate_model(
        &model,
        &id.model_label(),
        &data,
        SplitName::Test,
        train_cfg.k_samples_eval,
        id.seed_index as u64,
        &config_hash,
        &mut stream(seed, "test_eval"),
    )
    .map_err(|e: EvalError| err(&e))?;
    Ok(CellResult { id: id.clone(), outcome: CellOutcome::Ok(report), log, final_jsd })
}

/// Runs a cell, converting errors and panics into a failed outcome.
fn run_cell_isolated(cfg: &ExperimentConfig, sources: &Sources, id: &CellId, ablation: bool) -> CellResult {
    let result = catch_unwind(AssertUnwindSafe(|| run_cell(cfg, sources, id, ablation)));
    let message = match result {
        Ok(Ok(cell)) => return cell,
        Ok(Err(msg)) => msg,
        Err(panic) => panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into()),
    };
    CellResult { id: id.clone(), outcome: CellOutcome::Failed(message), log: None, final_jsd: None }
}

fn run_cells(cfg: &ExperimentConfig, cells: &[CellId], ablation: bool) -> Result<Vec<CellResult>, HarnessError> {
    let kinds: Vec<DatasetKind> = cells.iter().map(|c| c.dataset).collect();
    let sources = Sources::load(cfg, &kinds)?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| HarnessError::io(&cfg.output_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(pool.install(|| cells.par_iter().map(|id| run_cell_isolated(cfg, &sources, id, ablation)).collect()))
}

fn table_for(cfg: &ExperimentConfig, results: &[CellResult], models: Vec<String>) -> ResultsTable {
    let reports: Vec<MetricsReport> = results
        .iter()
        .filter_map(|c| match &c.outcome {
            CellOutcome::Ok(r) => Some(r.clone()),
            CellOutcome::Failed(_) => None,
        })
        .collect();
    let failures: Vec<(String, String)> = results
        .iter()
        .filter(|c| matches!(c.outcome, CellOutcome::Failed(_)))
        .map(|c| (c.id.dataset.name().to_string(), c.id.model_label()))
        .collect();
    let mut table = ResultsTable::from_reports(&reports, &failures);
    table.datasets = cfg.datasets.clone();
    table.models = models;
    if cfg.models.iter().any(|m| m == "gp") {
        table.notes.push(format!(
            "gp is an exact GP fitted to a random {}-row subsample of the training split",
            cfg.gp_subsample_cap
        ));
    }
    table
}

fn write_metrics(path: &Path, results: &[CellResult]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::io(path, io::Error::other(e));
    w.write_record(MetricsReport::CSV_HEADER).map_err(csv_err)?;
    for c in results {
        if let CellOutcome::Ok(r) = &c.outcome {
            w.write_record(r.csv_fields()).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::io(path, io::Error::other(e.to_string())))?;
    write_file(path, &bytes)
}

fn write_failures(dir: &Path, results: &[CellResult]) -> Result<(), HarnessError> {
    let lines: String = results
        .iter()
        .filter_map(|c| match &c.outcome {
            CellOutcome::Failed(msg) => Some(format!("{}: {}\n", c.id.label(), msg.replace('\n', " "))),
            CellOutcome::Ok(_) => None,
        })
        .collect();
    let path = dir.join("failures.txt");
    if lines.is_empty() {
        if path.exists() {
            fs::remove_file(&path).map_err(|e| HarnessError::io(&path, e))?;
        }
        return Ok(());
    }
    write_file(&path, lines.as_bytes())
}

fn write_outputs(cfg: &ExperimentConfig, results: &[CellResult], table: &ResultsTable) -> Result<(), HarnessError> {
    let dir = &cfg.output_dir;
    write_metrics(&dir.join("metrics.csv"), results)?;
    write_file(&dir.join("table.txt"), table.to_text().as_bytes())?;
    write_file(&dir.join("table.csv"), table.to_csv().as_bytes())?;
    write_failures(dir, results)
}

/// Trains and evaluates every (dataset, model, seed) cell and writes
/// `metrics.csv`, `table.txt`, `table.csv` plus per-cell logs and checkpoints.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let datasets = cfg.dataset_kinds()?;
    let models = cfg.model_kinds()?;
    let mut cells = Vec::new();
    for &dataset in &datasets {
        for &model in &models {
            for seed_index in 0..cfg.n_seeds {
                cells.push(CellId { dataset, model, seed_index, generator_loss: None });
            }
        }
    }
    let results = run_cells(cfg, &cells, false)?;
    let table = table_for(cfg, &results, cfg.models.clone());
    write_outputs(cfg, &results, &table)?;
    Ok(ExperimentResult { cells: results, table })
}

/// Trains the generator twice per (dataset, seed), once per objective, with
/// identical seeds and evaluation grids. Adds `curves_<dataset>_seed<i>.csv`
/// holding both validation curves side by side.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    if !cfg.models.iter().any(|m| m == "regressgan") {
        return Err(HarnessError::Config("ablation requires the regressgan model".into()));
    }
    let variants = [GeneratorLoss::Minimax, GeneratorLoss::NonSaturating];
    let mut cells = Vec::new();
    for dataset in cfg.dataset_kinds()? {
        for seed_index in 0..cfg.n_seeds {
            for g in variants {
                cells.push(CellId { dataset, model: ModelKind::RegressGan, seed_index, generator_loss: Some(g) });
            }
        }
    }
    let results = run_cells(cfg, &cells, true)?;
    let labels = variants.iter().map(|&g| format!("regressgan_{}", g.as_str())).collect();
    let mut table = table_for(cfg, &results, labels);
    table.notes.clear();
    table.notes.push("both objectives share seeds; early stopping selects the checkpoint but never halts".into());
    write_outputs(cfg, &results, &table)?;
    for pair in results.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let name = format!("curves_{}_seed{}.csv", a.id.dataset.name(), a.id.seed_index);
        write_file(&cfg.output_dir.join(name), paired_curves(a.log.as_ref(), b.log.as_ref()).as_bytes())?;
    }
    Ok(ExperimentResult { cells: results, table })
}

fn paired_curves(minimax: Option<&TrainLog>, non_saturating: Option<&TrainLog>) -> String {
    let mut steps: Vec<usize> = minimax.into_iter().chain(non_saturating).flat_map(|l| l.steps()).collect();
    steps.sort_unstable();
    steps.dedup();
    let lookup = |log: Option<&TrainLog>, step: usize| {
        log.and_then(|l| l.records.iter().find(|r| r.step == step)).map_or(String::new(), |r| format!("{:e}", r.val_mae))
    };
    let mut out = String::from("step,val_mae_minimax,val_mae_non_saturating\n");
    for s in steps {
        out.push_str(&format!("{s},{},{}\n", lookup(minimax, s), lookup(non_saturating, s)));
    }
    out
}

/// Rebuilds `table.txt` and `table.csv` from `dir/metrics.csv`.
pub fn report(dir: &Path) -> Result<ResultsTable, HarnessError> {
    let path = dir.join("metrics.csv");
    let mut reader = csv::Reader::from_path(&path).map_err(|e| HarnessError::io(&path, io::Error::other(e)))?;
    let mut reports = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|_| HarnessError::Metrics { path: path.clone(), line })?;
        let fields: Vec<&str> = rec.iter().collect();
        let r = MetricsReport::from_csv_fields(&fields).ok_or(HarnessError::Metrics { path: path.clone(), line })?;
        reports.push(r);
    }
    if reports.is_empty() {
        return Err(HarnessError::Empty);
    }
    let table = ResultsTable::from_reports(&reports, &[]);
    write_file(&dir.join("table.txt"), table.to_text().as_bytes())?;
    write_file(&dir.join("table.csv"), table.to_csv().as_bytes())?;
    Ok(table)
}

/// Writes a synthetic dataset as CSV (`x_0, …, x_{d−1}, y`).
pub fn gen_data(dataset: &str, n: usize, seed: u64, out: &Path) -> Result<TabularDataset, HarnessError> {
    let kind = match DatasetKind::parse(dataset) {
        Some(DatasetKind::Synthetic(k)) => k,
        _ => return Err(HarnessError::Config(format!("`{dataset}` is not a synthetic dataset"))),
    };
    let ds = kind.generate(n, seed)?;
    let file = fs::File::create(out).map_err(|e| HarnessError::io(out, e))?;
    ds.write_csv(io::BufWriter::new(file))?;
    Ok(ds)
}
