//! Minibatch Adam training with early stopping, plus adversarial debiasing.
//!
//! All randomness (validation split, shuffling, adversary initialization) is
//! drawn from streams derived from `TrainConfig::seed`, so equal seeds give
//! bit-identical parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};
use crate::neural::mlp::{Head, MlpModel};
use crate::synthgen::Dataset;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

const STREAM_SPLIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_ADVERSARY: u64 = 3;
const STREAM_ADVERSARY_SHUFFLE: u64 = 4;

/// Which column of the dataset a model is trained to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetRole {
    Label,
    Protected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdversaryConfig {
    /// Initial weight of the adversary's negated loss.
    pub alpha: f64,
    /// Per-epoch multiplier applied to `alpha`.
    pub alpha_decay: f64,
    /// Adversary epochs per target epoch.
    pub n_adv: usize,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    /// Also show the adversary the true label, so only dependence on the
    /// protected attribute beyond what the label explains is penalized.
    pub condition_on_label: bool,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        Self {
            alpha: 100.0,
            alpha_decay: 0.99,
            n_adv: 3,
            hidden: vec![16],
            learning_rate: 0.001,
            condition_on_label: false,
        }
    }
}

impl AdversaryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.alpha_decay > 0.0 && self.alpha_decay <= 1.0) {
            return Err(Error::Config(format!(
                "alpha_decay must lie in (0, 1], got {}",
                self.alpha_decay
            )));
        }
        if self.n_adv == 0 {
            return Err(Error::Config("n_adv must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("adversary learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Fraction of the training rows held out for early stopping.
    pub validation_fraction: f64,
    pub adversary: Option<AdversaryConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 64,
            max_epochs: 200,
            patience: 10,
            seed: 0,
            validation_fraction: 0.15,
            adversary: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must lie in [0, 1)".into()));
        }
        if let Some(adv) = &self.adversary {
            adv.validate()?;
        }
        Ok(())
    }
}

/// What happened during a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Epoch whose parameters were returned; 0 is the initialization.
    pub best_epoch: usize,
    /// Validation task loss per evaluated epoch, starting with the initialization.
    pub val_losses: Vec<f64>,
    pub train_losses: Vec<f64>,
    pub stopped_early: bool,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    /// Accuracy of the final adversary on the validation rows (adversarial runs only).
    pub adversary_val_accuracy: Option<f64>,
}

/// Supervised examples: inputs and per-output targets in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Examples {
    pub inputs: Matrix,
    pub targets: Matrix,
}

impl Examples {
    fn len(&self) -> usize {
        self.inputs.rows()
    }

    fn select(&self, idx: &[usize]) -> Examples {
        Examples {
            inputs: self.inputs.select_rows(idx),
            targets: self.targets.select_rows(idx),
        }
    }
}

/// Target matrix for `role`, shaped for `model`'s head.
pub fn targets_for(dataset: &Dataset, role: TargetRole, model: &MlpModel) -> Result<Matrix> {
    let head = model
        .head()
        .ok_or_else(|| Error::invalid("training requires a sigmoid or softmax head"))?;
    let source = match role {
        TargetRole::Label => Matrix::column(&dataset.labels),
        TargetRole::Protected => {
            if dataset.n_protected() == 0 {
                return Err(Error::Config(
                    "dataset has no protected columns to train an auxiliary model on".into(),
                ));
            }
            dataset.protected.clone()
        }
    };
    shape_targets(&source, head, model.output_dim())
}

fn shape_targets(source: &Matrix, head: Head, out: usize) -> Result<Matrix> {
    match (head, source.cols()) {
        (Head::Sigmoid, k) if k == out => Ok(source.clone()),
        (Head::Softmax, 1) if out == 2 => {
            let mut t = Matrix::zeros(source.rows(), 2);
            for i in 0..source.rows() {
                let v = source[(i, 0)];
                t[(i, 0)] = 1.0 - v;
                t[(i, 1)] = v;
            }
            Ok(t)
        }
        (Head::Softmax, k) if k == out => Ok(source.clone()),
        (_, k) => Err(Error::DimensionMismatch {
            context: "training targets vs model outputs",
            expected: out,
            actual: k,
        }),
    }
}

/// Cross-entropy of one example and its gradient on the logits.
fn loss_and_grad(head: Head, logits: &[f64], probs: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let grad: Vec<f64> = probs.iter().zip(target).map(|(p, t)| p - t).collect();
    let loss = match head {
        Head::Sigmoid => logits
            .iter()
            .zip(target)
            .map(|(&z, &t)| z.max(0.0) - t * z + (-z.abs()).exp().ln_1p())
            .sum(),
        Head::Softmax => {
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            logits.iter().zip(target).map(|(z, t)| t * (lse - z)).sum()
        }
    };
    (loss, grad)
}

fn correct(head: Head, probs: &[f64], target: &[f64]) -> bool {
    match head {
        Head::Sigmoid => probs
            .iter()
            .zip(target)
            .all(|(&p, &t)| (p >= 0.5) == (t >= 0.5)),
        Head::Softmax => argmax(probs) == argmax(target),
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean loss and accuracy of `model` on `data`.
pub fn evaluate(model: &MlpModel, data: &Examples) -> Result<(f64, f64)> {
    let head = model
        .head()
        .ok_or_else(|| Error::invalid("evaluation requires a classifier head"))?;
    if data.len() == 0 {
        return Ok((0.0, 0.0));
    }
    let mut loss = 0.0;
    let mut hits = 0usize;
    for (x, t) in data.inputs.iter_rows().zip(data.targets.iter_rows()) {
        let trace = model.forward_trace(x)?;
        let (l, _) = loss_and_grad(head, trace.logits(), trace.output(), t);
        loss += l;
        hits += correct(head, trace.output(), t) as usize;
    }
    let n = data.len() as f64;
    Ok((loss / n, hits as f64 / n))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, model: &mut MlpModel, grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let (m, v, lr) = (&mut self.m, &mut self.v, self.lr);
        model.for_each_param_mut(|i, p| {
            let g = grad[i];
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        });
    }
}

/// Deterministic split of `0..n` into (train, validation) index sets.
pub fn validation_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut perm = Rng::derive(seed, STREAM_SPLIT).permutation(n);
    let mut n_val = (fraction * n as f64).round() as usize;
    if fraction > 0.0 && n >= 2 {
        n_val = n_val.clamp(1, n - 1);
    } else {
        n_val = 0;
    }
    let val = perm.split_off(n - n_val);
    let mut train = perm;
    train.sort_unstable();
    let mut val = val;
    val.sort_unstable();
    (train, val)
}

/// Trains `model_init` to predict `role`, carving a validation split from `dataset`.
pub fn train(
    model_init: &MlpModel,
    dataset: &Dataset,
    role: TargetRole,
    config: &TrainConfig,
) -> Result<MlpModel> {
    train_with_report(model_init, dataset, role, config).map(|(m, _)| m)
}

pub fn train_with_report(
    model_init: &MlpModel,
    dataset: &Dataset,
    role: TargetRole,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let examples = Examples {
        inputs: dataset.features.clone(),
        targets: targets_for(dataset, role, model_init)?,
    };
    let (tr, va) = validation_split(examples.len(), config.validation_fraction, config.seed);
    let train_set = examples.select(&tr);
    let val_set = if va.is_empty() {
        train_set.clone()
    } else {
        examples.select(&va)
    };
    fit(model_init, &train_set, &val_set, config, None)
}

/// Trains on explicit train and validation sets.
pub fn train_on_split(
    model_init: &MlpModel,
    train_set: &Dataset,
    val_set: &Dataset,
    role: TargetRole,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let tr = Examples {
        inputs: train_set.features.clone(),
        targets: targets_for(train_set, role, model_init)?,
    };
    let va = if val_set.is_empty() {
        tr.clone()
    } else {
        Examples {
            inputs: val_set.features.clone(),
            targets: targets_for(val_set, role, model_init)?,
        }
    };
    fit(model_init, &tr, &va, config, None)
}

/// Adversarial debiasing: the target minimizes its task loss minus `alpha`
/// times the loss of an adversary that predicts the protected attributes from
/// the target's output probabilities.
///
/// With `alpha == 0` this is exactly [`train`].
pub fn train_adversarial(
    model_init: &MlpModel,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<MlpModel> {
    train_adversarial_with_report(model_init, dataset, config).map(|(m, _)| m)
}

pub fn train_adversarial_with_report(
    model_init: &MlpModel,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    let adv = config
        .adversary
        .as_ref()
        .ok_or_else(|| Error::Config("adversarial training needs an adversary config".into()))?;
    if dataset.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    if dataset.n_protected() == 0 {
        return Err(Error::Config(
            "adversarial training needs protected attributes".into(),
        ));
    }
    let (tr, va) = validation_split(dataset.len(), config.validation_fraction, config.seed);
    let train_ds = dataset.subset(&tr);
    let val_ds = if va.is_empty() {
        train_ds.clone()
    } else {
        dataset.subset(&va)
    };
    adversarial_on_split(model_init, &train_ds, &val_ds, config, adv)
}

/// Adversarial debiasing on explicit train and validation sets.
pub fn train_adversarial_on_split(
    model_init: &MlpModel,
    train_set: &Dataset,
    val_set: &Dataset,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    let adv = config
        .adversary
        .as_ref()
        .ok_or_else(|| Error::Config("adversarial training needs an adversary config".into()))?;
    if train_set.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let val = if val_set.is_empty() { train_set } else { val_set };
    adversarial_on_split(model_init, train_set, val, config, adv)
}

fn adversarial_on_split(
    model_init: &MlpModel,
    train_ds: &Dataset,
    val_ds: &Dataset,
    config: &TrainConfig,
    adv: &AdversaryConfig,
) -> Result<(MlpModel, TrainReport)> {
    let train_set = Examples {
        inputs: train_ds.features.clone(),
        targets: targets_for(train_ds, TargetRole::Label, model_init)?,
    };
    let val_set = Examples {
        inputs: val_ds.features.clone(),
        targets: targets_for(val_ds, TargetRole::Label, model_init)?,
    };
    if adv.alpha == 0.0 {
        return fit(model_init, &train_set, &val_set, config, None);
    }
    let mut rng = Rng::derive(config.seed, STREAM_ADVERSARY);
    let label_inputs = if adv.condition_on_label { model_init.output_dim() } else { 0 };
    let adversary = MlpModel::init(
        model_init.output_dim() + label_inputs,
        &adv.hidden,
        train_ds.n_protected(),
        Head::Sigmoid,
        &mut rng,
    )?;
    let state = AdversaryState {
        config: adv.clone(),
        model: adversary.clone(),
        adam: Adam::new(adversary.param_count(), adv.learning_rate),
        rng: Rng::derive(config.seed, STREAM_ADVERSARY_SHUFFLE),
        train_protected: train_ds.protected.clone(),
        val_protected: val_ds.protected.clone(),
        alpha: adv.alpha,
    };
    fit(model_init, &train_set, &val_set, config, Some(state))
}

struct AdversaryState {
    config: AdversaryConfig,
    model: MlpModel,
    adam: Adam,
    rng: Rng,
    train_protected: Matrix,
    val_protected: Matrix,
    alpha: f64,
}

impl AdversaryState {
    /// The adversary's view of one row: the target output, then the label if conditioned.
    fn view(&self, target_out: &[f64], label: &[f64]) -> Vec<f64> {
        let mut v = target_out.to_vec();
        if self.config.condition_on_label {
            v.extend_from_slice(label);
        }
        v
    }

    fn adversary_examples(&self, target: &MlpModel, data: &Examples, protected: &Matrix) -> Result<Examples> {
        let mut rows = Vec::with_capacity(data.len());
        for (x, y) in data.inputs.iter_rows().zip(data.targets.iter_rows()) {
            rows.push(self.view(&target.forward(x)?, y));
        }
        Ok(Examples {
            inputs: Matrix::from_rows(&rows)?,
            targets: protected.clone(),
        })
    }

    /// Refreshes the adversary against the current target for `n_adv` epochs.
    fn refresh(&mut self, target: &MlpModel, train: &Examples, batch_size: usize) -> Result<()> {
        let data = self.adversary_examples(target, train, &self.train_protected)?;
        for _ in 0..self.config.n_adv {
            let order = self.rng.permutation(data.len());
            run_epoch(&mut self.model, &mut self.adam, &data, &order, batch_size, None)?;
        }
        Ok(())
    }

    /// Gradient of the adversary loss with respect to the target output.
    fn loss_and_input_grad(&self, target_out: &[f64], label: &[f64], protected: &[f64]) -> Result<(f64, Vec<f64>)> {
        let trace = self.model.forward_trace(&self.view(target_out, label))?;
        let (loss, d_logits) = loss_and_grad(Head::Sigmoid, trace.logits(), trace.output(), protected);
        let mut grad = self.model.backward_from_logits(&trace, &d_logits, None);
        grad.truncate(target_out.len());
        Ok((loss, grad))
    }

    fn validation(&self, target: &MlpModel, val: &Examples) -> Result<(f64, f64)> {
        let data = self.adversary_examples(target, val, &self.val_protected)?;
        evaluate(&self.model, &data)
    }
}

/// One pass over `order` in minibatches. Returns the mean training loss.
fn run_epoch(
    model: &mut MlpModel,
    adam: &mut Adam,
    data: &Examples,
    order: &[usize],
    batch_size: usize,
    adversary: Option<(&AdversaryState, &Matrix)>,
) -> Result<f64> {
    let head = model.head().expect("validated classifier head");
    let mut grad = vec![0.0; model.param_count()];
    let mut total = 0.0;
    for batch in order.chunks(batch_size) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for &i in batch {
            let x = data.inputs.row(i);
            let trace = model.forward_trace(x)?;
            let (loss, d_logits) = loss_and_grad(head, trace.logits(), trace.output(), data.targets.row(i));
            total += loss;
            model.backward_from_logits(&trace, &d_logits, Some(&mut grad));
            if let Some((adv, protected)) = adversary {
                let (adv_loss, d_out) = adv.loss_and_input_grad(trace.output(), data.targets.row(i), protected.row(i))?;
                total -= adv.alpha * adv_loss;
                let scaled: Vec<f64> = d_out.iter().map(|g| -adv.alpha * g).collect();
                model.backward_from_output(&trace, &scaled, Some(&mut grad));
            }
        }
        let scale = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        adam.step(model, &grad);
    }
    Ok(total / order.len().max(1) as f64)
}

fn fit(
    model_init: &MlpModel,
    train_set: &Examples,
    val_set: &Examples,
    config: &TrainConfig,
    mut adversary: Option<AdversaryState>,
) -> Result<(MlpModel, TrainReport)> {
    let mut model = model_init.clone();
    let mut adam = Adam::new(model.param_count(), config.learning_rate);
    let mut shuffle = Rng::derive(config.seed, STREAM_SHUFFLE);
    // Epochs are compared on the task loss alone, also in adversarial runs:
    // with a large alpha the combined objective is lowest for a constant
    // model, so selecting on it would return the untrained initialization.
    let objective = |model: &MlpModel, _: &Option<AdversaryState>| -> Result<f64> {
        Ok(evaluate(model, val_set)?.0)
    };

    let mut best = model.clone();
    let mut best_loss = objective(&model, &adversary)?;
    let mut best_epoch = 0;
    let mut val_losses = vec![best_loss];
    let mut train_losses = Vec::new();
    let mut since_improvement = 0;
    let mut stopped_early = false;
    let mut epochs_run = 0;

    for epoch in 1..=config.max_epochs {
        let order = shuffle.permutation(train_set.len());
        if let Some(adv) = adversary.as_mut() {
            adv.refresh(&model, train_set, config.batch_size)?;
        }
        let adv_ref = adversary.as_ref().map(|a| (a, &a.train_protected));
        let train_loss = run_epoch(&mut model, &mut adam, train_set, &order, config.batch_size, adv_ref)?;
        epochs_run = epoch;
        if !train_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: train_loss,
            });
        }
        let val_loss = objective(&model, &adversary)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: val_loss,
            });
        }
        train_losses.push(train_loss);
        val_losses.push(val_loss);
        if val_loss < best_loss {
            best_loss = val_loss;
            best = model.clone();
            best_epoch = epoch;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= config.patience {
                stopped_early = true;
                break;
            }
        }
        if let Some(adv) = adversary.as_mut() {
            adv.alpha *= adv.config.alpha_decay;
        }
    }

    let (_, train_accuracy) = evaluate(&best, train_set)?;
    let (_, val_accuracy) = evaluate(&best, val_set)?;
    let adversary_val_accuracy = match &adversary {
        Some(adv) => Some(adv.validation(&best, val_set)?.1),
        None => None,
    };
    Ok((
        best,
        TrainReport {
            epochs_run,
            best_epoch,
            val_losses,
            train_losses,
            stopped_early,
            train_accuracy,
            val_accuracy,
            adversary_val_accuracy,
        },
    ))
}
