//! Linear classifier trained with class-weighted cross-entropy by mini-batch
//! gradient descent.
//!
//! Two modes share one parameterization: multinomial softmax for single-label
//! classification, and independent sigmoids for multi-label targets. The
//! per-example loss is `-sum_c w_c * 1{y=c} * log(p_c)`, optionally with a
//! focal factor `(1 - p_t)^gamma`; in multi-label mode the weighted binary
//! cross-entropies of all labels are summed, with `w_c` applied to the
//! positive term of label `c`.
//!
//! Training is single-threaded and fully deterministic given the seed:
//! parameters start at zero and only the per-epoch shuffle consumes
//! randomness.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::imbalance::ClassWeights;
use crate::metrics;

/// Probabilities are clamped to at least this inside logarithms, so a
/// confident mistake yields a large finite loss instead of infinity.
pub const PROB_FLOOR: f64 = 1e-12;

const MODEL_VERSION: u32 = 1;

/// Output head: softmax over classes, or one sigmoid per label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    Softmax,
    MultilabelSigmoid,
}

/// Gradient-descent hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    /// Epochs without a dev macro-F1 improvement before stopping. Ignored
    /// when no dev set is given.
    pub early_stop_patience: usize,
    /// 0 disables the focal factor and leaves plain weighted cross-entropy.
    pub focal_gamma: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 32,
            l2: 1e-4,
            early_stop_patience: 10,
            focal_gamma: 0.0,
            seed: 0,
        }
    }
}

/// Training targets: one class index per example, or one boolean per label.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes(Vec<usize>),
    MultiLabel(Vec<Vec<bool>>),
}

impl Targets {
    fn len(&self) -> usize {
        match self {
            Targets::Classes(v) => v.len(),
            Targets::MultiLabel(v) => v.len(),
        }
    }
}

/// Feature vectors paired with targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<SparseVector>,
    targets: Targets,
}

impl Dataset {
    pub fn single_label(features: Vec<SparseVector>, classes: Vec<usize>) -> Result<Self> {
        Dataset::new(features, Targets::Classes(classes))
    }

    pub fn multi_label(features: Vec<SparseVector>, labels: Vec<Vec<bool>>) -> Result<Self> {
        Dataset::new(features, Targets::MultiLabel(labels))
    }

    fn new(features: Vec<SparseVector>, targets: Targets) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::LengthMismatch {
                left: features.len(),
                right: targets.len(),
            });
        }
        if let Some(first) = features.first() {
            let dim = first.dim;
            if let Some(bad) = features.iter().find(|x| x.dim != dim) {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: bad.dim,
                });
            }
        }
        Ok(Dataset { features, targets })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[SparseVector] {
        &self.features
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn dim(&self) -> usize {
        self.features.first().map(|x| x.dim).unwrap_or(0)
    }
}

/// Label decision of a prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicted {
    /// Argmax class; ties resolve to the lowest index.
    Class(usize),
    /// Indices of labels with probability at or above the threshold.
    Labels(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub predicted: Predicted,
    pub probs: Vec<f64>,
}

/// Linear model: weight matrix `C x V` (row-major), bias, and output mode.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    mode: ModelMode,
    class_names: Vec<String>,
    dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    seed: u64,
    train_config: Option<TrainConfig>,
}

#[derive(Serialize, Deserialize)]
struct ModelWire {
    version: u32,
    mode: ModelMode,
    class_names: Vec<String>,
    dim: usize,
    #[serde(rename = "W")]
    weights: Vec<f64>,
    #[serde(rename = "b")]
    bias: Vec<f64>,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train_config: Option<TrainConfig>,
}

impl LinearModel {
    /// Fresh model with all parameters zero.
    pub fn zeros(mode: ModelMode, class_names: Vec<String>, dim: usize, seed: u64) -> Self {
        let c = class_names.len();
        LinearModel {
            mode,
            class_names,
            dim,
            weights: vec![0.0; c * dim],
            bias: vec![0.0; c],
            seed,
            train_config: None,
        }
    }

    /// Build from explicit parameters (row-major weights).
    pub fn from_parameters(
        mode: ModelMode,
        class_names: Vec<String>,
        dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let c = class_names.len();
        if weights.len() != c * dim {
            return Err(Error::LengthMismatch {
                left: weights.len(),
                right: c * dim,
            });
        }
        if bias.len() != c {
            return Err(Error::LengthMismatch {
                left: bias.len(),
                right: c,
            });
        }
        if weights.iter().chain(&bias).any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite model parameter".into()));
        }
        Ok(LinearModel {
            mode,
            class_names,
            dim,
            weights,
            bias,
            seed,
            train_config: None,
        })
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn logits(&self, x: &SparseVector) -> Vec<f64> {
        let c = self.num_classes();
        let mut z = self.bias.clone();
        for (&i, &v) in x.indices.iter().zip(&x.values) {
            for (k, zk) in z.iter_mut().enumerate().take(c) {
                *zk += self.weights[k * self.dim + i] * v;
            }
        }
        z
    }

    /// Class probabilities for one input. Softmax mode sums to 1; in
    /// multi-label mode each component is an independent sigmoid.
    pub fn forward(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: x.dim,
            });
        }
        let z = self.logits(x);
        Ok(match self.mode {
            ModelMode::Softmax => softmax(&z),
            ModelMode::MultilabelSigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
        })
    }

    /// Predict the label set (or the argmax class) plus probabilities.
    pub fn predict(&self, x: &SparseVector, threshold: f64) -> Result<Prediction> {
        let probs = self.forward(x)?;
        let predicted = match self.mode {
            ModelMode::Softmax => Predicted::Class(argmax(&probs)),
            ModelMode::MultilabelSigmoid => Predicted::Labels(
                probs
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p >= threshold)
                    .map(|(i, _)| i)
                    .collect(),
            ),
        };
        Ok(Prediction { predicted, probs })
    }

    /// Mean weighted loss over a batch, including the L2 term.
    pub fn weighted_loss(
        &self,
        batch: &Dataset,
        weights: &ClassWeights,
        config: &TrainConfig,
    ) -> Result<f64> {
        self.check_batch(batch, weights)?;
        let n = batch.len() as f64;
        let mut total = 0.0;
        for (i, x) in batch.features.iter().enumerate() {
            let probs = self.forward(x)?;
            total += self.example_loss(&probs, &batch.targets, i, weights, config.focal_gamma);
        }
        Ok(total / n + 0.5 * config.l2 * self.weights.iter().map(|w| w * w).sum::<f64>())
    }

    /// Analytic gradient of [`weighted_loss`] with respect to the weights
    /// (row-major) and bias.
    pub fn gradient(
        &self,
        batch: &Dataset,
        weights: &ClassWeights,
        config: &TrainConfig,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_batch(batch, weights)?;
        let c = self.num_classes();
        let n = batch.len() as f64;
        let mut dw = vec![0.0; c * self.dim];
        let mut db = vec![0.0; c];
        for (i, x) in batch.features.iter().enumerate() {
            let probs = self.forward(x)?;
            let dz = self.example_dz(&probs, &batch.targets, i, weights, config.focal_gamma);
            for (k, &dzk) in dz.iter().enumerate() {
                db[k] += dzk;
                for (&col, &val) in x.indices.iter().zip(&x.values) {
                    dw[k * self.dim + col] += dzk * val;
                }
            }
        }
        for g in dw.iter_mut() {
            *g /= n;
        }
        for g in db.iter_mut() {
            *g /= n;
        }
        for (g, w) in dw.iter_mut().zip(&self.weights) {
            *g += config.l2 * w;
        }
        Ok((dw, db))
    }

    fn check_batch(&self, batch: &Dataset, weights: &ClassWeights) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if batch.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: batch.dim(),
            });
        }
        if weights.len() != self.num_classes() {
            return Err(Error::LengthMismatch {
                left: weights.len(),
                right: self.num_classes(),
            });
        }
        let mode_ok = matches!(
            (self.mode, &batch.targets),
            (ModelMode::Softmax, Targets::Classes(_))
                | (ModelMode::MultilabelSigmoid, Targets::MultiLabel(_))
        );
        if !mode_ok {
            return Err(Error::InvalidInput(
                "target kind does not match model mode".into(),
            ));
        }
        Ok(())
    }

    fn example_loss(
        &self,
        probs: &[f64],
        targets: &Targets,
        i: usize,
        weights: &ClassWeights,
        gamma: f64,
    ) -> f64 {
        match (self.mode, targets) {
            (ModelMode::Softmax, Targets::Classes(ys)) => {
                let y = ys[i];
                let p = probs[y];
                weights.weights[y] * (1.0 - p).powf(gamma) * (-p.max(PROB_FLOOR).ln())
            }
            (ModelMode::MultilabelSigmoid, Targets::MultiLabel(ys)) => {
                let mut loss = 0.0;
                for (k, &p) in probs.iter().enumerate() {
                    if ys[i][k] {
                        loss += weights.weights[k]
                            * (1.0 - p).powf(gamma)
                            * (-p.max(PROB_FLOOR).ln());
                    } else {
                        loss += p.powf(gamma) * (-(1.0 - p).max(PROB_FLOOR).ln());
                    }
                }
                loss
            }
            _ => unreachable!("checked in check_batch"),
        }
    }

    /// d(loss)/d(logit) for one example.
    fn example_dz(
        &self,
        probs: &[f64],
        targets: &Targets,
        i: usize,
        weights: &ClassWeights,
        gamma: f64,
    ) -> Vec<f64> {
        match (self.mode, targets) {
            (ModelMode::Softmax, Targets::Classes(ys)) => {
                let y = ys[i];
                let p = probs[y];
                let q = 1.0 - p;
                // g = w * (gamma * p * q^(gamma-1) * ln p - q^gamma); the
                // first term's limit is 0 as q -> 0.
                let g = if gamma == 0.0 {
                    -weights.weights[y]
                } else {
                    let log_term = if q > 0.0 {
                        gamma * p * q.powf(gamma - 1.0) * p.max(PROB_FLOOR).ln()
                    } else {
                        0.0
                    };
                    weights.weights[y] * (log_term - q.powf(gamma))
                };
                probs
                    .iter()
                    .enumerate()
                    .map(|(k, &pk)| {
                        let indicator = if k == y { 1.0 } else { 0.0 };
                        g * (indicator - pk)
                    })
                    .collect()
            }
            (ModelMode::MultilabelSigmoid, Targets::MultiLabel(ys)) => {
                probs
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| {
                        let q = 1.0 - p;
                        if ys[i][k] {
                            let w = weights.weights[k];
                            if gamma == 0.0 {
                                w * (p - 1.0)
                            } else {
                                w * (gamma * p * q.powf(gamma) * p.max(PROB_FLOOR).ln()
                                    - q.powf(gamma + 1.0))
                            }
                        } else if gamma == 0.0 {
                            p
                        } else {
                            -gamma * p.powf(gamma) * q * q.max(PROB_FLOOR).ln()
                                + p.powf(gamma + 1.0)
                        }
                    })
                    .collect()
            }
            _ => unreachable!("checked in check_batch"),
        }
    }

    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(ModelWire {
            version: MODEL_VERSION,
            mode: self.mode,
            class_names: self.class_names.clone(),
            dim: self.dim,
            weights: self.weights.clone(),
            bias: self.bias.clone(),
            seed: self.seed,
            train_config: self.train_config.clone(),
        })?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(&self.to_json_value()?)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let wire: ModelWire = serde_json::from_str(&raw)?;
        if wire.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion {
                path: path.to_path_buf(),
                version: wire.version,
            });
        }
        let mut model = LinearModel::from_parameters(
            wire.mode,
            wire.class_names,
            wire.dim,
            wire.weights,
            wire.bias,
            wire.seed,
        )?;
        model.train_config = wire.train_config;
        Ok(model)
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// One epoch of the training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_macro_f1: Option<f64>,
}

/// A trained model plus its per-epoch log.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearModel,
    pub log: Vec<EpochRecord>,
    /// Epoch of the returned parameters when dev-based selection ran.
    pub best_epoch: Option<usize>,
}

/// Mini-batch gradient descent from zero parameters, shuffling each epoch
/// with a ChaCha stream seeded by `config.seed`. With a non-empty dev set the
/// parameters achieving the best dev macro-F1 are returned and training stops
/// after `early_stop_patience` epochs without improvement.
pub fn train(
    mode: ModelMode,
    class_names: Vec<String>,
    train_data: &Dataset,
    dev_data: Option<&Dataset>,
    weights: &ClassWeights,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if train_data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if config.learning_rate <= 0.0 || config.batch_size == 0 {
        return Err(Error::InvalidInput(
            "learning_rate must be > 0 and batch_size >= 1".into(),
        ));
    }
    let mut model = LinearModel::zeros(mode, class_names, train_data.dim(), config.seed);
    model.train_config = Some(config.clone());
    model.check_batch(train_data, weights)?;

    let dev = dev_data.filter(|d| !d.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_data.len()).collect();

    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, LinearModel, usize)> = None;
    let mut epochs_since_best = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch = Dataset {
                features: chunk.iter().map(|&i| train_data.features[i].clone()).collect(),
                targets: match &train_data.targets {
                    Targets::Classes(ys) => {
                        Targets::Classes(chunk.iter().map(|&i| ys[i]).collect())
                    }
                    Targets::MultiLabel(ys) => {
                        Targets::MultiLabel(chunk.iter().map(|&i| ys[i].clone()).collect())
                    }
                },
            };
            let (dw, db) = model.gradient(&batch, weights, config)?;
            for (w, g) in model.weights.iter_mut().zip(&dw) {
                *w -= config.learning_rate * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&db) {
                *b -= config.learning_rate * g;
            }
        }

        let train_loss = model.weighted_loss(train_data, weights, config)?;
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                loss: train_loss,
            });
        }

        let dev_macro_f1 = match dev {
            Some(dev_set) => Some(dev_macro_f1(&model, dev_set)?),
            None => None,
        };
        log.push(EpochRecord {
            epoch,
            train_loss,
            dev_macro_f1,
        });

        if let Some(f1) = dev_macro_f1 {
            let improved = best.as_ref().map(|(b, _, _)| f1 > *b).unwrap_or(true);
            if improved {
                best = Some((f1, model.clone(), epoch));
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if epochs_since_best >= config.early_stop_patience {
                    break;
                }
            }
        }
    }

    match best {
        Some((_, best_model, best_epoch)) => Ok(TrainOutcome {
            model: best_model,
            log,
            best_epoch: Some(best_epoch),
        }),
        None => Ok(TrainOutcome {
            model,
            log,
            best_epoch: None,
        }),
    }
}

fn dev_macro_f1(model: &LinearModel, dev: &Dataset) -> Result<f64> {
    match &dev.targets {
        Targets::Classes(golds) => {
            let mut preds = Vec::with_capacity(dev.len());
            for x in &dev.features {
                let probs = model.forward(x)?;
                preds.push(argmax(&probs));
            }
            let cm = metrics::confusion(&preds, golds, model.num_classes())?;
            Ok(metrics::classification_report(&cm, model.class_names()).macro_f1)
        }
        Targets::MultiLabel(golds) => {
            let mut preds = Vec::with_capacity(dev.len());
            for x in &dev.features {
                let probs = model.forward(x)?;
                preds.push(probs.iter().map(|&p| p >= 0.5).collect());
            }
            Ok(metrics::multilabel_report(&preds, golds, model.class_names())?.macro_f1)
        }
    }
}
