//! Binary linear SVM on bag-of-words counts, used to find the words that
//! best separate a marked group from the unmarked group.

mod train;

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::preprocess::TokenList;

pub use train::{train_linear_svm, TrainConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SvmError {
    #[error("class {class} has {size} member(s); at least 2 are required")]
    ClassTooSmall { class: &'static str, size: usize },
    #[error("train fraction must be in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("all labels belong to one class")]
    SingleClass,
    #[error("{rows} rows but {labels} labels")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("feature space is empty")]
    EmptyFeatureSpace,
    #[error("training stopped after {epochs} epochs without converging")]
    NoConvergence { epochs: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Word to column mapping, columns assigned in alphabetical order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureSpace {
    index: BTreeMap<String, usize>,
    words: Vec<String>,
}

impl FeatureSpace {
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a TokenList>) -> Self {
        let mut words: Vec<String> = docs
            .into_iter()
            .flat_map(|d| d.iter().map(str::to_string))
            .collect();
        words.sort_unstable();
        words.dedup();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        FeatureSpace { index, words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn column(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, column: usize) -> &str {
        &self.words[column]
    }
}

/// Sparse row-major count matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    n_cols: usize,
}

impl CountMatrix {
    /// Builds from dense rows, dropping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        CountMatrix {
            rows: rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(j, v)| (j, *v))
                        .collect()
                })
                .collect(),
            n_cols,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub(crate) fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for &(j, v) in &self.rows[i] {
            out[j] = v;
        }
        out
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> CountMatrix {
        CountMatrix {
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            n_cols: self.n_cols,
        }
    }
}

/// Raw token counts per document; out-of-vocabulary tokens are ignored.
pub fn vectorize(docs: &[TokenList], space: &FeatureSpace) -> Result<CountMatrix, SvmError> {
    if space.is_empty() {
        return Err(SvmError::EmptyFeatureSpace);
    }
    let rows = docs
        .iter()
        .map(|doc| {
            let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
            for col in doc.iter().filter_map(|t| space.column(t)) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
            counts.into_iter().collect()
        })
        .collect();
    Ok(CountMatrix {
        rows,
        n_cols: space.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class seeded shuffle, then the first `round(n · fraction)` of each
/// class (clamped so both sides keep at least one) go to training.
/// Returned index lists are sorted.
pub fn stratified_split(
    labels: &[bool],
    train_fraction: f64,
    seed: u64,
) -> Result<Split, SvmError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SvmError::InvalidFraction(train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, name) in [(true, "marked"), (false, "unmarked")] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(SvmError::ClassTooSmall {
                class: name,
                size: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let n_train =
            ((members.len() as f64 * train_fraction).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub reg_c: f64,
    pub seed: u64,
    pub epochs: usize,
    pub converged: bool,
    /// Final objective value.
    pub objective: f64,
    /// Objective after initialization and after every kept epoch.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl LinearModel {
    pub fn decision(&self, row: &[(usize, f64)]) -> f64 {
        row.iter().map(|&(j, v)| self.weights[j] * v).sum::<f64>() + self.bias
    }

    /// `sign(0)` predicts the positive class.
    pub fn predict(&self, row: &[(usize, f64)]) -> bool {
        self.decision(row) >= 0.0
    }

    pub fn ensure_converged(&self) -> Result<&Self, SvmError> {
        if self.converged {
            Ok(self)
        } else {
            Err(SvmError::NoConvergence {
                epochs: self.epochs,
            })
        }
    }

    /// Plain-text export: a header of settings, then `word<TAB>coefficient`
    /// lines in column order.
    pub fn write_text<W: Write>(&self, space: &FeatureSpace, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# linear svm")?;
        writeln!(out, "reg_c\t{:?}", self.reg_c)?;
        writeln!(out, "seed\t{}", self.seed)?;
        writeln!(out, "epochs\t{}", self.epochs)?;
        writeln!(out, "converged\t{}", self.converged)?;
        writeln!(out, "objective\t{:?}", self.objective)?;
        writeln!(out, "bias\t{:?}", self.bias)?;
        for (j, w) in self.weights.iter().enumerate() {
            writeln!(out, "{}\t{:?}", space.word(j), w)?;
        }
        Ok(())
    }
}

/// Fraction of rows whose predicted class matches the label. An empty set
/// scores 0.
pub fn evaluate(model: &LinearModel, x: &CountMatrix, y: &[bool]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let hits = x
        .rows()
        .iter()
        .zip(y)
        .filter(|(row, &label)| model.predict(row) == label)
        .count();
    hits as f64 / y.len() as f64
}

fn ranked(
    model: &LinearModel,
    space: &FeatureSpace,
    k: usize,
    key: impl Fn(f64) -> f64,
) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = model
        .weights
        .iter()
        .enumerate()
        .map(|(j, &w)| (space.word(j).to_string(), w))
        .collect();
    all.sort_by(|a, b| key(b.1).total_cmp(&key(a.1)).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// The `k` largest signed coefficients (marked-class direction).
pub fn top_features(model: &LinearModel, space: &FeatureSpace, k: usize) -> Vec<(String, f64)> {
    ranked(model, space, k, |w| w)
}

/// The `k` most negative coefficients (unmarked-class direction).
pub fn bottom_features(model: &LinearModel, space: &FeatureSpace, k: usize) -> Vec<(String, f64)> {
    ranked(model, space, k, |w| -w)
}

/// The `k` coefficients of largest magnitude.
pub fn top_features_abs(model: &LinearModel, space: &FeatureSpace, k: usize) -> Vec<(String, f64)> {
    ranked(model, space, k, f64::abs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmTaskConfig {
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub top_k: usize,
    /// Rank by absolute coefficient instead of signed.
    pub rank_by_abs: bool,
}

impl Default for SvmTaskConfig {
    fn default() -> Self {
        SvmTaskConfig {
            train: TrainConfig::default(),
            train_fraction: 0.8,
            top_k: 10,
            rank_by_abs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub train_fraction: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub vocab_size: usize,
    pub converged: bool,
    pub epochs: usize,
    /// Marked-direction words, coefficient descending.
    pub top_features: Vec<(String, f64)>,
    /// Unmarked-direction words, most negative first.
    pub bottom_features: Vec<(String, f64)>,
}

/// One binary task: split, fit on the training part, score both parts.
pub fn run_task(
    docs: &[TokenList],
    labels: &[bool],
    config: &SvmTaskConfig,
) -> Result<(TrainReport, LinearModel, FeatureSpace), SvmError> {
    if docs.len() != labels.len() {
        return Err(SvmError::ShapeMismatch {
            rows: docs.len(),
            labels: labels.len(),
        });
    }
    let split = stratified_split(labels, config.train_fraction, config.train.seed)?;
    let train_docs: Vec<TokenList> = split.train.iter().map(|&i| docs[i].clone()).collect();
    let space = FeatureSpace::from_documents(&train_docs);
    let x_all = vectorize(docs, &space)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
    let (x_train, y_train) = (x_all.select(&split.train), pick(&split.train));
    let (x_test, y_test) = (x_all.select(&split.test), pick(&split.test));

    let model = train_linear_svm(&x_train, &y_train, &config.train)?;
    let k = config.top_k;
    let top = if config.rank_by_abs {
        top_features_abs(&model, &space, k)
    } else {
        top_features(&model, &space, k)
    };
    let report = TrainReport {
        train_accuracy: evaluate(&model, &x_train, &y_train),
        test_accuracy: evaluate(&model, &x_test, &y_test),
        train_fraction: config.train_fraction,
        seed: config.train.seed,
        n_train: split.train.len(),
        n_test: split.test.len(),
        vocab_size: space.len(),
        converged: model.converged,
        epochs: model.epochs,
        top_features: top,
        bottom_features: bottom_features(&model, &space, k),
    };
    Ok((report, model, space))
}

/// Mean and population standard deviation, e.g. of per-task accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(MeanStd {
            mean,
            std: var.sqrt(),
            n: values.len(),
        })
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}
