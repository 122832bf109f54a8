//! Class-imbalance countermeasures: balanced class weights from empirical
//! frequencies, and SMOTE oversampling in dense feature space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighting convention. `Balanced` sets `w_c = N / (C * n_c)`, so uniform
/// class counts give weight 1 everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    #[default]
    Balanced,
}

/// Per-class loss weights with the empirical frequencies they came from.
///
/// For single-label data `freqs` sums to 1. For multi-label data (see
/// [`ClassWeights::balanced_multilabel`]) `freqs[c]` is the positive rate of
/// label `c` and the weights apply to the positive term of each label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub freqs: Vec<f64>,
    pub weights: Vec<f64>,
    pub convention: WeightConvention,
}

impl ClassWeights {
    /// Balanced weights from single-label class indices:
    /// `w_c = N / (C * n_c)`, `pi_c = n_c / N`. Every class in `0..num_classes`
    /// must appear at least once.
    pub fn balanced(labels: &[usize], num_classes: usize) -> Result<Self> {
        let mut counts = vec![0usize; num_classes];
        for &y in labels {
            if y >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "label {y} out of range for {num_classes} classes"
                )));
            }
            counts[y] += 1;
        }
        if let Some(class) = counts.iter().position(|&c| c == 0) {
            return Err(Error::AbsentClass { class });
        }
        let n = labels.len() as f64;
        let c = num_classes as f64;
        Ok(ClassWeights {
            freqs: counts.iter().map(|&k| k as f64 / n).collect(),
            weights: counts.iter().map(|&k| n / (c * k as f64)).collect(),
            convention: WeightConvention::Balanced,
        })
    }

    /// Per-label positive-class weights for multi-label targets:
    /// `w_c = N / (2 * n_pos_c)`, the two-class balanced weight of the
    /// positive side. Every label needs at least one positive example.
    pub fn balanced_multilabel(golds: &[Vec<bool>], label_names: &[String]) -> Result<Self> {
        if golds.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let l = label_names.len();
        let n = golds.len() as f64;
        let mut freqs = Vec::with_capacity(l);
        let mut weights = Vec::with_capacity(l);
        for k in 0..l {
            let pos = golds.iter().filter(|g| g[k]).count();
            if pos == 0 {
                return Err(Error::AbsentLabel {
                    label: label_names[k].clone(),
                });
            }
            freqs.push(pos as f64 / n);
            weights.push(n / (2.0 * pos as f64));
        }
        Ok(ClassWeights {
            freqs,
            weights,
            convention: WeightConvention::Balanced,
        })
    }

    /// All-ones weights (plain unweighted loss).
    pub fn uniform(num_classes: usize) -> Self {
        ClassWeights {
            freqs: vec![1.0 / num_classes as f64; num_classes],
            weights: vec![1.0; num_classes],
            convention: WeightConvention::Balanced,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Multiply every weight by a positive factor.
    pub fn scaled(&self, factor: f64) -> Self {
        ClassWeights {
            freqs: self.freqs.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
            convention: self.convention,
        }
    }
}

/// What the oversampler equalizes towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmoteTarget {
    #[default]
    EqualizeToMajority,
}

/// SMOTE settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub target: SmoteTarget,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target: SmoteTarget::EqualizeToMajority,
            seed: 0,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// SMOTE oversampling: every minority class is grown to the majority count
/// by interpolating between a class point and one of its `k` nearest
/// same-class neighbors (`x_new = x_i + u * (x_nn - x_i)`, `u ~ U[0,1)`).
///
/// Originals are preserved unchanged at the front of the output; synthetic
/// points follow, grouped by ascending class. Deterministic given the seed:
/// each class draws from its own stream seeded with `seed ^ class`.
pub fn smote_oversample(
    vectors: &[Vec<f64>],
    labels: &[usize],
    config: &SmoteConfig,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: vectors.len(),
            right: labels.len(),
        });
    }
    if vectors.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    if config.k_neighbors == 0 {
        return Err(Error::InvalidInput("k_neighbors must be >= 1".into()));
    }
    let dim = vectors[0].len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            got: bad.len(),
        });
    }

    let classes: Vec<usize> = {
        let mut cs: Vec<usize> = labels.to_vec();
        cs.sort_unstable();
        cs.dedup();
        cs
    };
    let majority = classes
        .iter()
        .map(|&c| labels.iter().filter(|&&y| y == c).count())
        .max()
        .unwrap_or(0);

    let mut out_vectors = vectors.to_vec();
    let mut out_labels = labels.to_vec();

    for &class in &classes {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let need = majority - members.len();
        if need == 0 {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::SingletonClass { class });
        }
        let k = config.k_neighbors.min(members.len() - 1);

        // k nearest same-class neighbors per member; distance ties break on
        // the lower member index.
        let neighbors: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut dists: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (sq_dist(&vectors[i], &vectors[j]), j))
                    .collect();
                dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                dists.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ class as u64);
        for _ in 0..need {
            let pick = rng.gen_range(0..members.len());
            let base = members[pick];
            let nn = neighbors[pick][rng.gen_range(0..k)];
            let u: f64 = rng.gen();
            let synthetic: Vec<f64> = vectors[base]
                .iter()
                .zip(&vectors[nn])
                .map(|(a, b)| a + u * (b - a))
                .collect();
            out_vectors.push(synthetic);
            out_labels.push(class);
        }
    }

    Ok((out_vectors, out_labels))
}
