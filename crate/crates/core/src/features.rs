//! TF-IDF vectorizer: fit a vocabulary and smoothed IDF weights on training
//! texts, transform texts into L2-normalized sparse vectors.
//!
//! Conventions are pinned so results are exactly reproducible:
//! raw term counts for TF, `idf(t) = ln((1+N)/(1+df_t)) + 1`, columns in
//! lexicographic term order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{self, PrepConfig};

/// Vectorizer settings: preprocessing plus document-frequency thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VectorizerConfig {
    pub prep: PrepConfig,
    /// Keep terms appearing in at least this many documents.
    pub min_df: usize,
    /// Drop terms appearing in more than this fraction of documents.
    pub max_df_ratio: f64,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            prep: PrepConfig::default(),
            min_df: 1,
            max_df_ratio: 1.0,
        }
    }
}

/// A sparse vector with strictly increasing indices and nonzero values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub dim: usize,
}

impl SparseVector {
    pub fn zero(dim: usize) -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    /// Build from (index, value) pairs; zeros are dropped, indices must be
    /// unique and in range.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>, dim: usize) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::DimMismatch { expected: dim, got: i });
            }
            if v != 0.0 {
                if map.insert(i, v).is_some() {
                    return Err(Error::InvalidInput(format!("duplicate index {i}")));
                }
            }
        }
        Ok(SparseVector {
            indices: map.keys().copied().collect(),
            values: map.values().copied().collect(),
            dim,
        })
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        SparseVector {
            indices,
            values,
            dim: dense.len(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// A fitted TF-IDF model: vocabulary, per-term IDF, and the config it was
/// fitted with.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    terms: Vec<String>,
    vocab: BTreeMap<String, usize>,
    idf: Vec<f64>,
    config: VectorizerConfig,
    n_docs_fitted: usize,
}

const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TfIdfWire {
    version: u32,
    config: VectorizerConfig,
    terms: Vec<String>,
    idf: Vec<f64>,
    n_docs_fitted: usize,
}

impl TfIdfModel {
    /// Fit vocabulary and IDF weights on training texts.
    pub fn fit<S: AsRef<str>>(train_texts: &[S], config: &VectorizerConfig) -> Result<Self> {
        if train_texts.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        config.prep.validate()?;

        let n_docs = train_texts.len();
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for text in train_texts {
            let distinct: BTreeSet<String> =
                textprep::terms(text.as_ref(), &config.prep).into_iter().collect();
            for term in distinct {
                *df.entry(term).or_insert(0) += 1;
            }
        }

        let mut terms = Vec::new();
        let mut idf = Vec::new();
        for (term, count) in df {
            if count < config.min_df {
                continue;
            }
            if count as f64 / n_docs as f64 > config.max_df_ratio {
                continue;
            }
            idf.push(((1.0 + n_docs as f64) / (1.0 + count as f64)).ln() + 1.0);
            terms.push(term);
        }
        let vocab = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();

        Ok(TfIdfModel {
            terms,
            vocab,
            idf,
            config: config.clone(),
            n_docs_fitted: n_docs,
        })
    }

    /// Transform a text into an L2-normalized sparse TF-IDF vector.
    /// Out-of-vocabulary terms are dropped; an all-OOV text maps to the zero
    /// vector.
    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in textprep::terms(text, &self.config.prep) {
            if let Some(&col) = self.vocab.get(&term) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
        }
        if counts.is_empty() {
            return SparseVector::zero(self.dim());
        }
        let mut indices = Vec::with_capacity(counts.len());
        let mut values = Vec::with_capacity(counts.len());
        for (col, count) in counts {
            indices.push(col);
            values.push(count * self.idf[col]);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut values {
            *v /= norm;
        }
        SparseVector {
            indices,
            values,
            dim: self.dim(),
        }
    }

    pub fn transform_batch<S: AsRef<str>>(&self, texts: &[S]) -> Vec<SparseVector> {
        texts.iter().map(|t| self.transform(t.as_ref())).collect()
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocab.get(term).map(|&i| self.idf[i])
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.vocab.get(term).copied()
    }

    pub fn config(&self) -> &VectorizerConfig {
        &self.config
    }

    pub fn n_docs_fitted(&self) -> usize {
        self.n_docs_fitted
    }

    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(TfIdfWire {
            version: MODEL_VERSION,
            config: self.config.clone(),
            terms: self.terms.clone(),
            idf: self.idf.clone(),
            n_docs_fitted: self.n_docs_fitted,
        })?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(&self.to_json_value()?)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let wire: TfIdfWire = serde_json::from_str(&raw)?;
        if wire.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion {
                path: path.to_path_buf(),
                version: wire.version,
            });
        }
        if wire.terms.len() != wire.idf.len() {
            return Err(Error::LengthMismatch {
                left: wire.terms.len(),
                right: wire.idf.len(),
            });
        }
        let vocab = wire
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(TfIdfModel {
            terms: wire.terms,
            vocab,
            idf: wire.idf,
            config: wire.config,
            n_docs_fitted: wire.n_docs_fitted,
        })
    }
}
