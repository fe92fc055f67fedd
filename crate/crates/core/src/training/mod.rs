//! Training loops: alternating adversarial updates for the generator and
//! discriminator, the MSE baseline, and the divergence diagnostic.

mod config;
mod jsd;
mod log;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::autodiff::{adam_step, AdamState, AutodiffError, LossKind, Tape, Var};
use crate::datasets::{PreparedData, SplitName};
use crate::eval::mae;
use crate::matrix::Matrix;
use crate::models::{predict_point, DiscriminatorNet, FnnRegressor, GeneratorNet, Mlp, ModelError};
use crate::rng::stream;

pub use config::{hash_text, GanTrainConfig, GeneratorLoss};
pub use jsd::{estimate_jsd, jsd_from_logits, JsdEstimate};
pub use log::{TrainLog, TrainRecord};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training split has {0} rows; need at least one")]
    EmptyTrain(usize),
    #[error("validation split is empty")]
    EmptyVal,
    #[error("non-finite loss at step {step} (last record: {last:?})")]
    NonFinite { step: usize, last: Option<TrainRecord> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<AutodiffError> for TrainError {
    fn from(e: AutodiffError) -> Self {
        TrainError::Model(ModelError::Autodiff(e))
    }
}

/// The generator at its best validation checkpoint, with the discriminator
/// from the same step.
#[derive(Debug, Clone)]
pub struct GanOutcome {
    pub generator: GeneratorNet,
    pub discriminator: DiscriminatorNet,
    pub log: TrainLog,
}

#[derive(Debug, Clone)]
pub struct FnnOutcome {
    pub model: FnnRegressor,
    pub log: TrainLog,
}

/// Epoch-wise shuffled minibatch indices over `0..n`.
#[derive(Debug)]
pub struct Batcher {
    order: Vec<usize>,
    pos: usize,
}

impl Batcher {
    pub fn new(n: usize) -> Self {
        Self { order: (0..n).collect(), pos: n }
    }

    pub fn next_batch(&mut self, size: usize, rng: &mut impl Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            let take = (size - out.len()).min(self.order.len() - self.pos);
            out.extend_from_slice(&self.order[self.pos..self.pos + take]);
            self.pos += take;
        }
        out
    }
}

fn adam_for(mlp: &Mlp, cfg: &GanTrainConfig) -> Result<AdamState, TrainError> {
    Ok(AdamState::for_params(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, &mlp.params())?)
}

fn matrix_input(tape: &mut Tape, m: &Matrix) -> Result<Var, AutodiffError> {
    tape.input(vec![m.rows(), m.cols()], m.as_slice().to_vec())
}

fn column_input(tape: &mut Tape, v: &[f64]) -> Result<Var, AutodiffError> {
    tape.input(vec![v.len(), 1], v.to_vec())
}

fn update(mlp: &mut Mlp, adam: &mut AdamState) {
    adam_step(&mut mlp.params_mut(), adam);
    mlp.zero_grad();
}

/// One discriminator update on real targets versus generated ones, with
/// labels 1 and 0 respectively. Returns the two mean BCE terms before the step.
pub fn discriminator_step(
    disc: &mut DiscriminatorNet,
    adam: &mut AdamState,
    x: &Matrix,
    y_real: &[f64],
    y_fake: &[f64],
) -> Result<(f64, f64), TrainError> {
    let b = x.rows();
    let mut tape = Tape::new();
    let xv = matrix_input(&mut tape, x)?;
    let real = column_input(&mut tape, y_real)?;
    let fake = column_input(&mut tape, y_fake)?;
    let ones = column_input(&mut tape, &vec![1.0; b])?;
    let zeros = column_input(&mut tape, &vec![0.0; b])?;
    let (logit_real, bind_real) = disc.forward_tape(&mut tape, xv, real, true)?;
    let (logit_fake, bind_fake) = disc.forward_tape(&mut tape, xv, fake, true)?;
    let loss_real = tape.loss(logit_real, ones, LossKind::BceWithLogits)?;
    let loss_fake = tape.loss(logit_fake, zeros, LossKind::BceWithLogits)?;
    let total = tape.add(loss_real, loss_fake)?;
    tape.backward(total)?;
    disc.mlp.accumulate_grads(&tape, &bind_real);
    disc.mlp.accumulate_grads(&tape, &bind_fake);
    update(&mut disc.mlp, adam);
    Ok((tape.value(loss_real)[0], tape.value(loss_fake)[0]))
}

/// Records the generator objective for `(x, z)` against a frozen
/// discriminator and returns the loss node with the generator binding.
pub fn generator_objective(
    tape: &mut Tape,
    gen: &GeneratorNet,
    disc: &DiscriminatorNet,
    x: &Matrix,
    z: &Matrix,
    kind: GeneratorLoss,
) -> Result<(Var, crate::models::MlpBinding), TrainError> {
    let b = x.rows();
    let xv = matrix_input(tape, x)?;
    let zv = matrix_input(tape, z)?;
    let (y_fake, bind) = gen.forward_tape(tape, xv, zv)?;
    let (logit, _) = disc.forward_tape(tape, xv, y_fake, false)?;
    let loss = match kind {
        // mean log(1 − σ(l)) = −BCE(l, 0)
        GeneratorLoss::Minimax => {
            let zeros = column_input(tape, &vec![0.0; b])?;
            let bce = tape.loss(logit, zeros, LossKind::BceWithLogits)?;
            tape.scale(bce, -1.0)
        }
        // −mean log σ(l) = BCE(l, 1)
        GeneratorLoss::NonSaturating => {
            let ones = column_input(tape, &vec![1.0; b])?;
            tape.loss(logit, ones, LossKind::BceWithLogits)?
        }
    };
    Ok((loss, bind))
}

/// One generator update. Returns the objective value before the step.
pub fn generator_step(
    gen: &mut GeneratorNet,
    adam: &mut AdamState,
    disc: &DiscriminatorNet,
    x: &Matrix,
    z: &Matrix,
    kind: GeneratorLoss,
) -> Result<f64, TrainError> {
    let mut tape = Tape::new();
    let (loss, bind) = generator_objective(&mut tape, gen, disc, x, z, kind)?;
    tape.backward(loss)?;
    gen.mlp.accumulate_grads(&tape, &bind);
    update(&mut gen.mlp, adam);
    Ok(tape.value(loss)[0])
}

/// Validation rows scored during training (a fixed prefix of the shuffled split).
struct ValSet {
    x: Matrix,
    y_raw: Vec<f64>,
}

impl ValSet {
    fn new(data: &PreparedData, cap: usize) -> Result<Self, TrainError> {
        let idx = data.scaled.split.indices(SplitName::Val);
        if idx.is_empty() {
            return Err(TrainError::EmptyVal);
        }
        let idx = &idx[..idx.len().min(cap)];
        let x = data.scaled.features.select_rows(idx);
        let y_raw = idx.iter().map(|&i| data.raw.targets[i]).collect();
        Ok(Self { x, y_raw })
    }

    fn mae(&self, data: &PreparedData, mut pred: Vec<f64>) -> Result<f64, TrainError> {
        data.transform.inverse_targets(&mut pred);
        Ok(mae(&self.y_raw, &pred).expect("validation rows and predictions align"))
    }
}

struct TrainSet {
    x: Matrix,
    y: Vec<f64>,
}

impl TrainSet {
    fn new(data: &PreparedData) -> Result<Self, TrainError> {
        let x = data.scaled.split_features(SplitName::Train);
        if x.rows() == 0 {
            return Err(TrainError::EmptyTrain(0));
        }
        Ok(Self { x, y: data.scaled.split_targets(SplitName::Train) })
    }

    fn batch(&self, idx: &[usize]) -> (Matrix, Vec<f64>) {
        (self.x.select_rows(idx), idx.iter().map(|&i| self.y[i]).collect())
    }
}

/// Running means of the losses between two evaluations.
#[derive(Default)]
struct Window {
    d_real: f64,
    d_fake: f64,
    d_count: usize,
    g: f64,
    g_count: usize,
}

impl Window {
    fn mean(sum: f64, count: usize) -> Option<f64> {
        (count > 0).then(|| sum / count as f64)
    }
}

/// Tracks the best validation score and decides when to stop.
struct EarlyStop {
    best: f64,
    best_step: usize,
    stale: usize,
    patience: Option<usize>,
}

impl EarlyStop {
    fn new(patience: Option<usize>) -> Self {
        Self { best: f64::INFINITY, best_step: 0, stale: 0, patience }
    }

    /// Returns `(improved, should_stop)`.
    fn observe(&mut self, step: usize, val: f64) -> (bool, bool) {
        if val < self.best {
            self.best = val;
            self.best_step = step;
            self.stale = 0;
            (true, false)
        } else {
            self.stale += 1;
            (false, self.patience.is_some_and(|p| self.stale >= p))
        }
    }
}

fn non_finite(step: usize, log: &TrainLog) -> TrainError {
    TrainError::NonFinite { step, last: log.last().cloned() }
}

/// Maps loss-evaluation failures caused by NaN/inf inputs to a step-tagged abort.
fn tag_step<T>(r: Result<T, TrainError>, step: usize, log: &TrainLog) -> Result<T, TrainError> {
    match r {
        Err(TrainError::Model(ModelError::Autodiff(AutodiffError::Numeric(_)))) => Err(non_finite(step, log)),
        other => other,
    }
}

/// Adversarial training of `G(x, z)` against `D(x, y)` on the standardized
/// data. Validation MAE is reported on the original target scale.
pub fn train_gan(data: &PreparedData, cfg: &GanTrainConfig) -> Result<GanOutcome, TrainError> {
    cfg.validate().map_err(TrainError::Config)?;
    let train = TrainSet::new(data)?;
    let val = ValSet::new(data, cfg.val_eval_rows)?;
    let x_dim = train.x.cols();

    let mut gen = GeneratorNet::new(x_dim, &cfg.arch, &mut stream(cfg.seed, "generator_init"));
    let mut disc = DiscriminatorNet::new(x_dim, &cfg.arch, &mut stream(cfg.seed, "discriminator_init"));
    let mut adam_g = adam_for(&gen.mlp, cfg)?;
    let mut adam_d = adam_for(&disc.mlp, cfg)?;
    let mut batch_rng = stream(cfg.seed, "batches");
    let mut noise_rng = stream(cfg.seed, "noise");
    let mut eval_rng = stream(cfg.seed, "eval");
    let mut batcher = Batcher::new(train.y.len());

    let mut log = TrainLog::default();
    let mut stop = EarlyStop::new(cfg.patience);
    let mut best = (gen.clone(), disc.clone());
    let mut window = Window::default();

    for step in 1..=cfg.max_steps {
        for _ in 0..cfg.d_steps_per_g_step {
            let (x, y_real) = train.batch(&batcher.next_batch(cfg.batch_size, &mut batch_rng));
            let z = gen.sample_noise(x.rows(), &mut noise_rng);
            let y_fake = gen.forward(&x, &z)?;
            let (lr, lf) = tag_step(discriminator_step(&mut disc, &mut adam_d, &x, &y_real, &y_fake), step, &log)?;
            if !(lr.is_finite() && lf.is_finite()) {
                return Err(non_finite(step, &log));
            }
            window.d_real += lr;
            window.d_fake += lf;
            window.d_count += 1;
        }
        let (x, _) = train.batch(&batcher.next_batch(cfg.batch_size, &mut batch_rng));
        let z = gen.sample_noise(x.rows(), &mut noise_rng);
        let g_loss =
            tag_step(generator_step(&mut gen, &mut adam_g, &disc, &x, &z, cfg.generator_loss), step, &log)?;
        if !g_loss.is_finite() {
            return Err(non_finite(step, &log));
        }
        window.g += g_loss;
        window.g_count += 1;

        if step % cfg.eval_every == 0 || step == cfg.max_steps {
            let pred = predict_point(&gen, &val.x, cfg.k_samples_eval, &mut eval_rng)?;
            let val_mae = val.mae(data, pred)?;
            if !val_mae.is_finite() {
                return Err(non_finite(step, &log));
            }
            let jsd = estimate_jsd(&disc, &gen, data, cfg.jsd_eval_rows, &mut eval_rng)?;
            log.records.push(TrainRecord {
                step,
                d_loss_real: Window::mean(window.d_real, window.d_count),
                d_loss_fake: Window::mean(window.d_fake, window.d_count),
                g_loss: window.g / window.g_count as f64,
                val_mae,
                jsd: Some(jsd.value),
            });
            window = Window::default();
            let (improved, halt) = stop.observe(step, val_mae);
            if improved {
                best = (gen.clone(), disc.clone());
            }
            if halt {
                break;
            }
        }
    }
    log.best_step = stop.best_step;
    log.best_val_mae = stop.best;
    let (generator, discriminator) = best;
    Ok(GanOutcome { generator, discriminator, log })
}

/// The MSE baseline under the same batch size, optimizer and stopping rule.
pub fn train_fnn_mse(data: &PreparedData, cfg: &GanTrainConfig) -> Result<FnnOutcome, TrainError> {
    cfg.validate().map_err(TrainError::Config)?;
    let train = TrainSet::new(data)?;
    let val = ValSet::new(data, cfg.val_eval_rows)?;

    let mut model = FnnRegressor::new(train.x.cols(), &cfg.arch, &mut stream(cfg.seed, "fnn_init"));
    let mut adam = adam_for(&model.mlp, cfg)?;
    let mut batch_rng = stream(cfg.seed, "batches");
    let mut batcher = Batcher::new(train.y.len());

    let mut log = TrainLog::default();
    let mut stop = EarlyStop::new(cfg.patience);
    let mut best = model.clone();
    let mut window = Window::default();

    for step in 1..=cfg.max_steps {
        let (x, y) = train.batch(&batcher.next_batch(cfg.batch_size, &mut batch_rng));
        let mut tape = Tape::new();
        let loss = tag_step(
            (|| {
                let xv = matrix_input(&mut tape, &x)?;
                let yv = column_input(&mut tape, &y)?;
                let (pred, bind) = model.forward_tape(&mut tape, xv)?;
                let loss = tape.loss(pred, yv, LossKind::Mse)?;
                tape.backward(loss)?;
                Ok((loss, bind))
            })(),
            step,
            &log,
        );
        let (loss, bind) = loss?;
        let value = tape.value(loss)[0];
        if !value.is_finite() {
            return Err(non_finite(step, &log));
        }
        model.mlp.accumulate_grads(&tape, &bind);
        update(&mut model.mlp, &mut adam);
        window.g += value;
        window.g_count += 1;

        if step % cfg.eval_every == 0 || step == cfg.max_steps {
            let val_mae = val.mae(data, model.forward(&val.x)?)?;
            if !val_mae.is_finite() {
                return Err(non_finite(step, &log));
            }
            log.records.push(TrainRecord {
                step,
                d_loss_real: None,
                d_loss_fake: None,
                g_loss: window.g / window.g_count as f64,
                val_mae,
                jsd: None,
            });
            window = Window::default();
            let (improved, halt) = stop.observe(step, val_mae);
            if improved {
                best = model.clone();
            }
            if halt {
                break;
            }
        }
    }
    log.best_step = stop.best_step;
    log.best_val_mae = stop.best;
    Ok(FnnOutcome { model: best, log })
}
