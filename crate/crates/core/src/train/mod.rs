//! Cross-entropy training with Adam, stratified k-fold cross-validation and
//! the metric suite.

mod folds;
mod metrics;
mod optim;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use folds::{stratified_kfold, FoldPlan};
pub use metrics::{compute_metrics, confusion_matrix, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use optim::{adam_step, adam_update, AdamConfig, AdamState, Moments};

use crate::autodiff::{Mode, Tape, Var};
use crate::error::{Error, Result};
use crate::models::{build_model, Model, ModelHyper, ModelInput, ModelVariant, N_CLASSES};
use crate::nn::Session;
use crate::tensor::Tensor;

/// Mean `-log softmax(logits)[label]` over the batch.
pub fn cross_entropy(tape: &mut Tape, logits: Var, labels: &[usize]) -> Result<Var> {
    if let Some(&bad) = labels.iter().find(|&&l| l >= N_CLASSES) {
        return Err(Error::Label(format!("label {bad} outside 0..{N_CLASSES}")));
    }
    tape.softmax_cross_entropy(logits, labels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub optimizer: String,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub k_folds: usize,
    /// Evaluate the test split every this many epochs (and after the last).
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            lr: 1e-3,
            batch_size: 32,
            optimizer: "adam".into(),
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            k_folds: 5,
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.optimizer != "adam" {
            return Err(Error::Config(format!("unsupported optimizer {:?}; only adam", self.optimizer)));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(format!(
                "batch size {} is too small for batch normalization; use at least 2",
                self.batch_size
            )));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 || self.k_folds < 2 || self.eval_every == 0 {
            return Err(Error::Config(
                "lr must be positive, k_folds at least 2, eval_every at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

/// One clip's pre-extracted features.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: String,
    pub label: usize,
    /// `[1, n_mfcc, frames]`.
    pub mfcc: Option<Tensor>,
    /// `[1, samples]`.
    pub wave: Option<Tensor>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub examples: Vec<Example>,
}

fn stack(parts: &[&Tensor]) -> Result<Tensor> {
    let first = parts[0].shape();
    if parts.iter().any(|p| p.shape() != first) {
        return Err(Error::Data("features in one batch differ in shape".into()));
    }
    let mut shape = vec![parts.len()];
    shape.extend_from_slice(first);
    let data = parts.iter().flat_map(|p| p.data().iter().copied()).collect();
    Tensor::new(shape, data)
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label).collect()
    }

    /// Stacks the selected examples into model input plus labels.
    pub fn batch(&self, idx: &[usize]) -> Result<(ModelInput, Vec<usize>)> {
        if idx.is_empty() {
            return Err(Error::protocol("empty batch"));
        }
        let ex: Vec<&Example> = idx.iter().map(|&i| &self.examples[i]).collect();
        let gather = |f: fn(&Example) -> Option<&Tensor>| -> Result<Option<Tensor>> {
            let parts: Option<Vec<&Tensor>> = ex.iter().map(|e| f(e)).collect();
            parts.map(|p| stack(&p)).transpose()
        };
        let input = ModelInput {
            wave: gather(|e| e.wave.as_ref())?,
            mfcc: gather(|e| e.mfcc.as_ref())?,
        };
        Ok((input, ex.iter().map(|e| e.label).collect()))
    }
}

/// Minibatches of `size`, folding a trailing batch of one into its
/// predecessor so batch normalization always sees two samples.
pub fn minibatches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size.max(1)).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        out.pop();
        let n = out.len();
        let start = (n - 1) * size;
        out[n - 1] = &order[start..];
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_ua: Option<f64>,
    pub test_wa: Option<f64>,
    pub test_f1: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

/// Mean loss of one train-mode step on `idx`, and the gradients it implies.
fn train_step(model: &mut Model, data: &Dataset, idx: &[usize], state: &mut AdamState, cfg: &AdamConfig, seed: u64) -> Result<f64> {
    let (input, labels) = data.batch(idx)?;
    let (loss, grads, updates) = {
        let mut s = Session::new(&model.params, Mode::Train, seed);
        let logits = model.arch.forward(&mut s, &input)?;
        let loss = cross_entropy(&mut s.tape, logits, &labels)?;
        let value = s.tape.value(loss).item();
        if !value.is_finite() {
            return Err(Error::Numeric(format!("training loss became {value}")));
        }
        let grads = s.backward(loss)?;
        (value, grads, s.into_updates())
    };
    model.params.apply_updates(updates)?;
    adam_step(&mut model.params, &grads, state, cfg)?;
    Ok(loss)
}

/// Epoch-at-a-time training loop over one split.
pub struct Trainer<'a> {
    pub model: &'a mut Model,
    data: &'a Dataset,
    order: Vec<usize>,
    test_idx: Vec<usize>,
    cfg: TrainConfig,
    adam: AdamConfig,
    state: AdamState,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(model: &'a mut Model, data: &'a Dataset, train_idx: &[usize], test_idx: &[usize], cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if train_idx.len() < 2 {
            return Err(Error::protocol(format!(
                "training split has {} samples; need at least 2",
                train_idx.len()
            )));
        }
        if test_idx.is_empty() {
            return Err(Error::protocol("test split is empty"));
        }
        Ok(Trainer {
            model,
            data,
            order: train_idx.to_vec(),
            test_idx: test_idx.to_vec(),
            cfg: cfg.clone(),
            adam: cfg.adam(),
            state: AdamState::default(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            epoch: 0,
        })
    }

    /// One shuffled pass over the training split; scores the test split
    /// when `evaluate` is set.
    pub fn run_epoch(&mut self, evaluate_test: bool) -> Result<EpochRecord> {
        self.order.shuffle(&mut self.rng);
        let mut total = 0.0;
        for batch in minibatches(&self.order, self.cfg.batch_size) {
            let seed = self.rng.gen();
            total += train_step(self.model, self.data, batch, &mut self.state, &self.adam, seed)? * batch.len() as f64;
        }
        self.epoch += 1;
        let mut record = EpochRecord {
            epoch: self.epoch,
            train_loss: total / self.order.len() as f64,
            test_ua: None,
            test_wa: None,
            test_f1: None,
        };
        if evaluate_test {
            let m = evaluate(self.model, self.data, &self.test_idx, self.cfg.batch_size)?.1;
            record.test_ua = Some(m.ua);
            record.test_wa = Some(m.wa);
            record.test_f1 = Some(m.macro_f1);
        }
        log::info!(
            "epoch {:>3}  loss {:.4}  test UA {}",
            record.epoch,
            record.train_loss,
            record.test_ua.map_or("-".into(), |u| format!("{u:.3}"))
        );
        Ok(record)
    }
}

/// Trains `model` in place for `cfg.epochs` epochs on `train_idx`, scoring
/// `test_idx` every `cfg.eval_every` epochs and after the last.
pub fn train(model: &mut Model, data: &Dataset, train_idx: &[usize], test_idx: &[usize], cfg: &TrainConfig) -> Result<History> {
    let mut trainer = Trainer::new(model, data, train_idx, test_idx, cfg)?;
    let mut history = History::default();
    for epoch in 1..=cfg.epochs {
        let eval = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
        history.epochs.push(trainer.run_epoch(eval)?);
    }
    Ok(history)
}

/// Eval-mode predictions and metrics on `idx`.
pub fn evaluate(model: &Model, data: &Dataset, idx: &[usize], batch_size: usize) -> Result<(Vec<usize>, MetricsReport)> {
    if idx.is_empty() {
        return Err(Error::protocol("nothing to evaluate"));
    }
    let mut preds = Vec::with_capacity(idx.len());
    let mut labels = Vec::with_capacity(idx.len());
    for chunk in idx.chunks(batch_size.max(1)) {
        let (input, l) = data.batch(chunk)?;
        let logits = model.forward(&input, Mode::Eval)?;
        preds.extend(logits.data().chunks(N_CLASSES).map(argmax));
        labels.extend(l);
    }
    let cm = confusion_matrix(&preds, &labels, N_CLASSES)?;
    Ok((preds, compute_metrics(&cm)?))
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: MetricsReport,
    pub history: History,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub ua: f64,
    pub wa: f64,
    pub macro_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub variant: ModelVariant,
    pub plan: FoldPlan,
    pub folds: Vec<FoldReport>,
    /// Unweighted mean over folds.
    pub mean: MeanMetrics,
    /// Metrics of the summed fold confusion matrices.
    pub pooled: MetricsReport,
}

pub fn mean_metrics(folds: &[FoldReport]) -> MeanMetrics {
    let n = folds.len() as f64;
    MeanMetrics {
        ua: folds.iter().map(|f| f.metrics.ua).sum::<f64>() / n,
        wa: folds.iter().map(|f| f.metrics.wa).sum::<f64>() / n,
        macro_f1: folds.iter().map(|f| f.metrics.macro_f1).sum::<f64>() / n,
    }
}

/// Trains one fresh model per fold (seeded `cfg.seed + fold`) and scores
/// its held-out fold. Folds run in parallel.
pub fn cross_validate(variant: ModelVariant, hyper: &ModelHyper, data: &Dataset, cfg: &TrainConfig) -> Result<CvReport> {
    cfg.validate()?;
    let plan = stratified_kfold(&data.labels(), cfg.k_folds, cfg.seed)?;
    let folds = (0..cfg.k_folds)
        .into_par_iter()
        .map(|fold| {
            let start = Instant::now();
            let (train_idx, test_idx) = plan.split(fold)?;
            let seed = cfg.seed.wrapping_add(fold as u64);
            let mut model = build_model(variant, hyper, seed)?;
            let fold_cfg = TrainConfig { seed, ..cfg.clone() };
            let history = train(&mut model, data, &train_idx, &test_idx, &fold_cfg)?;
            let (_, metrics) = evaluate(&model, data, &test_idx, cfg.batch_size)?;
            log::info!("fold {fold}: UA {:.3} WA {:.3}", metrics.ua, metrics.wa);
            Ok(FoldReport {
                fold,
                seed,
                train_size: train_idx.len(),
                test_size: test_idx.len(),
                metrics,
                history,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pooled = ConfusionMatrix::zeros(N_CLASSES);
    for f in &folds {
        pooled.add(&f.metrics.confusion)?;
    }
    Ok(CvReport {
        variant,
        plan,
        mean: mean_metrics(&folds),
        pooled: compute_metrics(&pooled)?,
        folds,
    })
}
