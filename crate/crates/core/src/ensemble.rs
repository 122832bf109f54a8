//! Seed ensembles: independently trained members combined by averaging
//! predicted probabilities.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::imbalance::ClassWeights;
use crate::linear::{self, Dataset, EpochRecord, LinearModel, ModelMode, Predicted, Prediction, TrainConfig};

const MANIFEST_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";

/// Models differing only in training seed; predictions are the arithmetic
/// mean of member probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<LinearModel>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    seeds: Vec<u64>,
    member_files: Vec<String>,
}

impl Ensemble {
    /// Wrap existing members. All must agree on mode, dimensionality, and
    /// class names.
    pub fn new(members: Vec<LinearModel>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyEnsemble)?;
        for m in &members[1..] {
            if m.mode() != first.mode() {
                return Err(Error::EnsembleMismatch("mode"));
            }
            if m.dim() != first.dim() {
                return Err(Error::EnsembleMismatch("dimension"));
            }
            if m.class_names() != first.class_names() {
                return Err(Error::EnsembleMismatch("class names"));
            }
        }
        Ok(Ensemble { members })
    }

    pub fn members(&self) -> &[LinearModel] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn mode(&self) -> ModelMode {
        self.members[0].mode()
    }

    pub fn class_names(&self) -> &[String] {
        self.members[0].class_names()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.members.iter().map(|m| m.seed()).collect()
    }

    /// Mean member probabilities for one input. Contributions are combined
    /// in a canonical per-class order, so the result is independent of
    /// member order down to the last bit, and identical members average to
    /// exactly their own output.
    pub fn forward(&self, x: &SparseVector) -> Result<Vec<f64>> {
        let c = self.class_names().len();
        let mut per_class: Vec<Vec<f64>> = vec![Vec::with_capacity(self.members.len()); c];
        for member in &self.members {
            let probs = member.forward(x)?;
            for (k, p) in probs.into_iter().enumerate() {
                per_class[k].push(p);
            }
        }
        let k = self.members.len() as f64;
        Ok(per_class
            .into_iter()
            .map(|mut vals| {
                vals.sort_by(f64::total_cmp);
                // Shifted mean: exact when all values coincide (the
                // corrections are all zero).
                let base = vals[0];
                base + vals.iter().map(|v| v - base).sum::<f64>() / k
            })
            .collect())
    }

    /// Averaged prediction: argmax of mean probabilities (softmax mode) or
    /// thresholding them (multi-label mode), ties to the lowest index.
    pub fn predict(&self, x: &SparseVector, threshold: f64) -> Result<Prediction> {
        let probs = self.forward(x)?;
        let predicted = match self.mode() {
            ModelMode::Softmax => {
                let mut best = 0;
                for (i, &p) in probs.iter().enumerate().skip(1) {
                    if p > probs[best] {
                        best = i;
                    }
                }
                Predicted::Class(best)
            }
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

    /// Persist as a directory: one JSON file per member plus a manifest.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut member_files = Vec::with_capacity(self.members.len());
        for (i, member) in self.members.iter().enumerate() {
            let name = format!("member_{i:03}.json");
            member.save(dir.join(&name))?;
            member_files.push(name);
        }
        let manifest = Manifest {
            version: MANIFEST_VERSION,
            seeds: self.seeds(),
            member_files,
        };
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(path, e))
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST_FILE);
        let raw = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&raw)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::UnsupportedVersion {
                path,
                version: manifest.version,
            });
        }
        let members = manifest
            .member_files
            .iter()
            .map(|name| LinearModel::load(dir.join(name)))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(members)
    }
}

/// Training log of one ensemble member.
#[derive(Debug, Clone, Serialize)]
pub struct MemberLog {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

/// Train one member per seed (seeds must be distinct) and assemble them in
/// seed order.
pub fn train_ensemble(
    mode: ModelMode,
    class_names: Vec<String>,
    train_data: &Dataset,
    dev_data: Option<&Dataset>,
    weights: &ClassWeights,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<(Ensemble, Vec<MemberLog>)> {
    if seeds.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut seen = BTreeSet::new();
    for &seed in seeds {
        if !seen.insert(seed) {
            return Err(Error::DuplicateSeed(seed));
        }
    }
    let mut members = Vec::with_capacity(seeds.len());
    let mut logs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let member_config = TrainConfig {
            seed,
            ..config.clone()
        };
        let outcome = linear::train(
            mode,
            class_names.clone(),
            train_data,
            dev_data,
            weights,
            &member_config,
        )?;
        logs.push(MemberLog {
            seed,
            epochs: outcome.log,
            best_epoch: outcome.best_epoch,
        });
        members.push(outcome.model);
    }
    Ok((Ensemble::new(members)?, logs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn member_with_bias(bias: Vec<f64>) -> LinearModel {
        let c = bias.len();
        LinearModel::from_parameters(ModelMode::Softmax, names(c), 1, vec![0.0; c], bias, 0)
            .unwrap()
    }

    fn toy_dataset() -> Dataset {
        let xs: Vec<SparseVector> = (0..10)
            .map(|i| {
                SparseVector::from_dense(if i % 2 == 0 {
                    &[1.0, 0.0]
                } else {
                    &[0.0, 1.0]
                })
            })
            .collect();
        let ys: Vec<usize> = (0..10).map(|i| i % 2).collect();
        Dataset::single_label(xs, ys).unwrap()
    }

    #[test]
    fn averaging_matches_hand_arithmetic() {
        // Biases chosen so members emit (0.6,0.4) and (0.2,0.8).
        let b1 = (0.6f64 / 0.4).ln();
        let b2 = (0.2f64 / 0.8).ln();
        let e = Ensemble::new(vec![
            member_with_bias(vec![b1, 0.0]),
            member_with_bias(vec![b2, 0.0]),
        ])
        .unwrap();
        let x = SparseVector::zero(1);
        let pred = e.predict(&x, 0.5).unwrap();
        assert!((pred.probs[0] - 0.4).abs() < 1e-12);
        assert!((pred.probs[1] - 0.6).abs() < 1e-12);
        assert_eq!(pred.predicted, Predicted::Class(1));
    }

    #[test]
    fn identical_members_equal_single_member() {
        let m = member_with_bias(vec![0.3, -0.3]);
        let e = Ensemble::new(vec![m.clone(), m.clone(), m.clone()]).unwrap();
        let x = SparseVector::zero(1);
        assert_eq!(e.forward(&x).unwrap(), m.forward(&x).unwrap());
    }

    #[test]
    fn uniform_members_tie_break_to_class_zero() {
        let e = Ensemble::new(vec![
            member_with_bias(vec![0.0, 0.0, 0.0]),
            member_with_bias(vec![0.0, 0.0, 0.0]),
        ])
        .unwrap();
        let pred = e.predict(&SparseVector::zero(1), 0.5).unwrap();
        assert_eq!(pred.predicted, Predicted::Class(0));
    }

    #[test]
    fn duplicate_seeds_rejected() {
        let data = toy_dataset();
        let err = train_ensemble(
            ModelMode::Softmax,
            names(2),
            &data,
            None,
            &ClassWeights::uniform(2),
            &TrainConfig {
                epochs: 1,
                ..TrainConfig::default()
            },
            &[1, 1],
        );
        assert!(matches!(err, Err(Error::DuplicateSeed(1))));
    }

    #[test]
    fn five_seeds_give_five_reproducible_members() {
        let data = toy_dataset();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let seeds = [1u64, 2, 3, 4, 5];
        let (e1, _) = train_ensemble(
            ModelMode::Softmax,
            names(2),
            &data,
            None,
            &ClassWeights::uniform(2),
            &cfg,
            &seeds,
        )
        .unwrap();
        assert_eq!(e1.len(), 5);
        assert_eq!(e1.seeds(), seeds.to_vec());
        let (e2, _) = train_ensemble(
            ModelMode::Softmax,
            names(2),
            &data,
            None,
            &ClassWeights::uniform(2),
            &cfg,
            &seeds,
        )
        .unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn single_seed_ensemble_equals_lone_model() {
        let data = toy_dataset();
        let cfg = TrainConfig {
            epochs: 5,
            seed: 7,
            ..TrainConfig::default()
        };
        let (e, _) = train_ensemble(
            ModelMode::Softmax,
            names(2),
            &data,
            None,
            &ClassWeights::uniform(2),
            &cfg,
            &[7],
        )
        .unwrap();
        let lone = linear::train(
            ModelMode::Softmax,
            names(2),
            &data,
            None,
            &ClassWeights::uniform(2),
            &cfg,
        )
        .unwrap()
        .model;
        for x in data.features() {
            assert_eq!(e.forward(x).unwrap(), lone.forward(x).unwrap());
        }
    }

    #[test]
    fn mode_mismatch_rejected() {
        let softmax = member_with_bias(vec![0.0, 0.0]);
        let multi = LinearModel::zeros(ModelMode::MultilabelSigmoid, names(2), 1, 0);
        assert!(matches!(
            Ensemble::new(vec![softmax, multi]),
            Err(Error::EnsembleMismatch("mode"))
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let data = toy_dataset();
        let (e, _) = train_ensemble(
            ModelMode::Softmax,
            names(2),
            &data,
            None,
            &ClassWeights::uniform(2),
            &TrainConfig {
                epochs: 3,
                ..TrainConfig::default()
            },
            &[10, 20],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ensemble");
        e.save_dir(&path).unwrap();
        let loaded = Ensemble::load_dir(&path).unwrap();
        assert_eq!(e, loaded);
    }
}
