//! Gender and race inference from names using 26-letter count features.
//!
//! A name is lowercased, stripped to ASCII letters and summarized by how often
//! each letter occurs. Three classifiers are available over that vector:
//! multinomial naive Bayes, k-nearest neighbours and a CART decision tree.

mod tree;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricsReport;
pub use tree::Node as TreeNode;

pub const ALPHABET: usize = 26;
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum NameError {
    #[error("empty name")]
    EmptyName,
    #[error("need at least {needed} examples, got {got}")]
    TooFewExamples { needed: usize, got: usize },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("label `{0}` has no training examples")]
    LabelWithoutExamples(String),
    #[error("example label `{0}` is not in the configured label set")]
    UnknownLabel(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("unsupported model format version {0}")]
    FormatVersion(u32),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-letter counts `a..z` of a normalized name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AlphabetFeatures([u32; ALPHABET]);

impl AlphabetFeatures {
    pub fn counts(&self) -> &[u32; ALPHABET] {
        &self.0
    }

    pub fn count(&self, letter: char) -> u32 {
        let l = letter.to_ascii_lowercase();
        if l.is_ascii_lowercase() {
            self.0[(l as u8 - b'a') as usize]
        } else {
            0
        }
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// Lowercased ASCII letters of `name`, everything else dropped.
pub fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

pub fn letter_counts(name: &str) -> Result<AlphabetFeatures, NameError> {
    let mut counts = [0u32; ALPHABET];
    let mut any = false;
    for b in normalize_name(name).bytes() {
        counts[(b - b'a') as usize] += 1;
        any = true;
    }
    if any {
        Ok(AlphabetFeatures(counts))
    } else {
        Err(NameError::EmptyName)
    }
}

/// First and last name tokens of a free-text display name.
///
/// Tokens without any letter are ignored. A single remaining token is a first
/// name only.
pub fn split_display_name(display: &str) -> (Option<String>, Option<String>) {
    let tokens: Vec<&str> = display
        .split_whitespace()
        .filter(|t| t.chars().any(|c| c.is_ascii_alphabetic()))
        .collect();
    match tokens.as_slice() {
        [] => (None, None),
        [only] => (Some(only.to_string()), None),
        [first, .., last] => (Some(first.to_string()), Some(last.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Gender,
    Race,
}

impl Task {
    pub fn canonical_labels(self) -> Vec<String> {
        let l: &[&str] = match self {
            Task::Gender => &["Female", "Male"],
            Task::Race => &["Asian", "Black", "Hispanic", "White"],
        };
        l.iter().map(|s| s.to_string()).collect()
    }
}

impl FromStr for Task {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gender" => Ok(Task::Gender),
            "race" => Ok(Task::Race),
            other => Err(NameError::UnknownTask(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NaiveBayes,
    Knn,
    DecisionTree,
}

impl FromStr for Algorithm {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive_bayes" | "nb" => Ok(Algorithm::NaiveBayes),
            "knn" => Ok(Algorithm::Knn),
            "decision_tree" | "dt" => Ok(Algorithm::DecisionTree),
            other => Err(NameError::UnknownAlgorithm(other.to_string())),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::Knn => "knn",
            Algorithm::DecisionTree => "decision_tree",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Laplace smoothing for naive Bayes.
    pub alpha: f64,
    /// Neighbour count for KNN.
    pub k: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            k: 5,
            max_depth: 12,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub task: Task,
    pub algorithm: Algorithm,
    pub hyper: Hyperparams,
    pub seed: u64,
    /// Label set to train over; defaults to the labels observed in the data.
    pub labels: Option<Vec<String>>,
}

impl TrainConfig {
    pub fn new(task: Task, algorithm: Algorithm) -> Self {
        Self {
            task,
            algorithm,
            hyper: Hyperparams::default(),
            seed: 0,
            labels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameExample {
    pub name: String,
    pub label: String,
}

impl NameExample {
    pub fn new(name: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredExample {
    pub counts: [u32; ALPHABET],
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    NaiveBayes {
        log_priors: Vec<f64>,
        /// `letter_log_probs[label][letter]`.
        letter_log_probs: Vec<Vec<f64>>,
    },
    Knn {
        k: usize,
        examples: Vec<StoredExample>,
    },
    DecisionTree {
        max_depth: usize,
        root: TreeNode,
    },
}

/// Trained, immutable name classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameModel {
    pub format_version: u32,
    pub task: Task,
    pub algorithm: Algorithm,
    /// Sorted label set; indices below refer to it.
    pub labels: Vec<String>,
    pub training_seed: u64,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub label: String,
    /// Posterior (naive Bayes), vote fraction (KNN) or leaf purity (tree).
    pub score: f64,
}

fn resolve_labels(
    examples: &[NameExample],
    configured: Option<&[String]>,
) -> Result<Vec<String>, NameError> {
    let mut labels: Vec<String> = match configured {
        Some(l) => l.to_vec(),
        None => examples.iter().map(|e| e.label.clone()).collect(),
    };
    labels.sort();
    labels.dedup();
    Ok(labels)
}

pub fn train(examples: &[NameExample], config: &TrainConfig) -> Result<NameModel, NameError> {
    if examples.is_empty() {
        return Err(NameError::TooFewExamples { needed: 1, got: 0 });
    }
    let labels = resolve_labels(examples, config.labels.as_deref())?;
    let mut features = Vec::with_capacity(examples.len());
    let mut targets = Vec::with_capacity(examples.len());
    for ex in examples {
        let idx = labels
            .binary_search(&ex.label)
            .map_err(|_| NameError::UnknownLabel(ex.label.clone()))?;
        features.push(*letter_counts(&ex.name)?.counts());
        targets.push(idx);
    }
    let mut class_sizes = vec![0usize; labels.len()];
    for &t in &targets {
        class_sizes[t] += 1;
    }
    if let Some(missing) = class_sizes.iter().position(|&c| c == 0) {
        return Err(NameError::LabelWithoutExamples(labels[missing].clone()));
    }

    let h = &config.hyper;
    let params = match config.algorithm {
        Algorithm::NaiveBayes => {
            let n = examples.len() as f64;
            let log_priors = class_sizes.iter().map(|&c| (c as f64 / n).ln()).collect();
            let mut letter_totals = vec![[0u64; ALPHABET]; labels.len()];
            for (f, &t) in features.iter().zip(&targets) {
                for (acc, &c) in letter_totals[t].iter_mut().zip(f) {
                    *acc += u64::from(c);
                }
            }
            let letter_log_probs = letter_totals
                .iter()
                .map(|totals| {
                    let denom = totals.iter().sum::<u64>() as f64 + h.alpha * ALPHABET as f64;
                    totals
                        .iter()
                        .map(|&c| ((c as f64 + h.alpha) / denom).ln())
                        .collect()
                })
                .collect();
            ModelParams::NaiveBayes {
                log_priors,
                letter_log_probs,
            }
        }
        Algorithm::Knn => {
            if h.k == 0 {
                return Err(NameError::ZeroK);
            }
            ModelParams::Knn {
                k: h.k,
                examples: features
                    .iter()
                    .zip(&targets)
                    .map(|(&counts, &label)| StoredExample { counts, label })
                    .collect(),
            }
        }
        Algorithm::DecisionTree => {
            let builder = tree::TreeBuilder {
                features: &features,
                labels: &targets,
                n_labels: labels.len(),
                max_depth: h.max_depth,
                min_leaf: h.min_leaf,
            };
            ModelParams::DecisionTree {
                max_depth: h.max_depth,
                root: builder.build((0..examples.len()).collect()),
            }
        }
    };

    Ok(NameModel {
        format_version: MODEL_FORMAT_VERSION,
        task: config.task,
        algorithm: config.algorithm,
        labels,
        training_seed: config.seed,
        params,
    })
}

impl NameModel {
    /// Label index and score for a feature vector.
    pub fn predict_features(&self, features: &AlphabetFeatures) -> (usize, f64) {
        let x = features.counts();
        match &self.params {
            ModelParams::NaiveBayes {
                log_priors,
                letter_log_probs,
            } => {
                let scores: Vec<f64> = log_priors
                    .iter()
                    .zip(letter_log_probs)
                    .map(|(&lp, probs)| {
                        lp + x
                            .iter()
                            .zip(probs)
                            .map(|(&c, &p)| f64::from(c) * p)
                            .sum::<f64>()
                    })
                    .collect();
                let posterior = softmax(&scores);
                let best = argmax_first(&posterior);
                (best, posterior[best])
            }
            ModelParams::Knn { k, examples } => {
                let mut dist: Vec<(u64, usize)> = examples
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let d = e
                            .counts
                            .iter()
                            .zip(x)
                            .map(|(&a, &b)| {
                                let diff = i64::from(a) - i64::from(b);
                                (diff * diff) as u64
                            })
                            .sum();
                        (d, i)
                    })
                    .collect();
                dist.sort_unstable();
                let k_eff = (*k).min(examples.len());
                let mut votes = vec![0usize; self.labels.len()];
                for &(_, i) in &dist[..k_eff] {
                    votes[examples[i].label] += 1;
                }
                let best = argmax_first(&votes);
                (best, votes[best] as f64 / k_eff as f64)
            }
            ModelParams::DecisionTree { root, .. } => root.predict(x),
        }
    }

    pub fn predict(&self, name: &str) -> Result<Prediction, NameError> {
        let (idx, score) = self.predict_features(&letter_counts(name)?);
        Ok(Prediction {
            label: self.labels[idx].clone(),
            score,
        })
    }

    pub fn to_json(&self) -> Result<String, NameError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, NameError> {
        let model: NameModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(NameError::FormatVersion(model.format_version));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), NameError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NameError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Index of the largest value; the earliest index wins ties.
fn argmax_first<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Seeded shuffle followed by a cut at `round(train_fraction * N)`.
pub fn split_train_test(
    data: &[NameExample],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<NameExample>, Vec<NameExample>), NameError> {
    if data.len() < 2 {
        return Err(NameError::TooFewExamples {
            needed: 2,
            got: data.len(),
        });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(NameError::BadFraction(train_fraction));
    }
    let n = data.len();
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = idx[..n_train].iter().map(|&i| data[i].clone()).collect();
    let test = idx[n_train..].iter().map(|&i| data[i].clone()).collect();
    Ok((train, test))
}

pub fn evaluate(model: &NameModel, test: &[NameExample]) -> Result<MetricsReport, NameError> {
    let mut truth = Vec::with_capacity(test.len());
    let mut predicted = Vec::with_capacity(test.len());
    for ex in test {
        let t = model
            .labels
            .binary_search(&ex.label)
            .map_err(|_| NameError::UnknownLabel(ex.label.clone()))?;
        truth.push(t);
        predicted.push(model.predict_features(&letter_counts(&ex.name)?).0);
    }
    Ok(MetricsReport::from_indices(
        &model.labels,
        &truth,
        &predicted,
    ))
}

/// Seeded partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(idx[start..start + size].to_vec());
        start += size;
    }
    folds
}

/// k-fold cross-validation with metrics pooled over every held-out fold.
pub fn cross_validate(
    data: &[NameExample],
    k: usize,
    config: &TrainConfig,
) -> Result<MetricsReport, NameError> {
    if k < 2 || data.len() < k {
        return Err(NameError::TooFewExamples {
            needed: k.max(2),
            got: data.len(),
        });
    }
    let labels = resolve_labels(data, config.labels.as_deref())?;
    let fold_config = TrainConfig {
        labels: Some(labels.clone()),
        ..config.clone()
    };
    let folds = kfold_partition(data.len(), k, config.seed);
    let mut truth = Vec::with_capacity(data.len());
    let mut predicted = Vec::with_capacity(data.len());
    let mut fold_scores = Vec::with_capacity(k);
    for (f, test_idx) in folds.iter().enumerate() {
        let train_set: Vec<NameExample> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idx)| idx.iter().map(|&i| data[i].clone()))
            .collect();
        let model = train(&train_set, &fold_config)?;
        let mut correct = 0;
        for &i in test_idx {
            let t = labels
                .binary_search(&data[i].label)
                .map_err(|_| NameError::UnknownLabel(data[i].label.clone()))?;
            let p = model.predict_features(&letter_counts(&data[i].name)?).0;
            correct += usize::from(t == p);
            truth.push(t);
            predicted.push(p);
        }
        fold_scores.push(correct as f64 / test_idx.len() as f64);
    }
    let mut report = MetricsReport::from_indices(&labels, &truth, &predicted);
    report.fold_scores = Some(fold_scores);
    Ok(report)
}

/// Reads a `name,label` CSV with a header row.
pub fn load_examples(path: &Path) -> Result<Vec<NameExample>, NameError> {
    let input_err = |message: String| NameError::Input {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| input_err(e.to_string()))?;
    let mut out = Vec::new();
    for (row, rec) in reader.deserialize::<NameExample>().enumerate() {
        let ex = rec.map_err(|e| input_err(e.to_string()))?;
        if normalize_name(&ex.name).is_empty() {
            return Err(input_err(format!(
                "row {}: name `{}` has no letters",
                row + 2,
                ex.name
            )));
        }
        out.push(ex);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(name: &str, label: &str, times: usize) -> Vec<NameExample> {
        vec![NameExample::new(name, label); times]
    }

    fn nb_toy() -> NameModel {
        let mut data = ex("aa", "F", 3);
        data.extend(ex("bb", "M", 1));
        train(
            &data,
            &TrainConfig::new(Task::Gender, Algorithm::NaiveBayes),
        )
        .unwrap()
    }

    #[test]
    fn letter_count_examples() {
        let anna = letter_counts("Anna").unwrap();
        assert_eq!((anna.count('a'), anna.count('n'), anna.total()), (2, 2, 4));
        let bob = letter_counts("bob").unwrap();
        assert_eq!((bob.count('b'), bob.count('o'), bob.total()), (2, 1, 3));
        let mj = letter_counts("Mary-Jane").unwrap();
        assert_eq!(mj, letter_counts("maryjane").unwrap());
        assert_eq!(mj.count('a'), 2);
        assert_eq!(mj.total(), 8);
        assert!(matches!(letter_counts("123 -"), Err(NameError::EmptyName)));
    }

    #[test]
    fn display_name_split() {
        assert_eq!(
            split_display_name("Maria  del Carmen Lopez"),
            (Some("Maria".into()), Some("Lopez".into()))
        );
        assert_eq!(split_display_name("🚇 Ann"), (Some("Ann".into()), None));
        assert_eq!(split_display_name("  "), (None, None));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let data: Vec<_> = (0..10)
            .map(|i| NameExample::new(format!("n{}", "a".repeat(i + 1)), "X"))
            .collect();
        let (tr, te) = split_train_test(&data, 0.7, 9).unwrap();
        assert_eq!((tr.len(), te.len()), (7, 3));
        assert_eq!(
            split_train_test(&data, 0.7, 9).unwrap(),
            (tr.clone(), te.clone())
        );
        let mut all: Vec<_> = tr.into_iter().chain(te).collect();
        all.sort_by(|a, b| a.name.cmp(&b.name));
        let mut orig = data.clone();
        orig.sort_by(|a, b| a.name.cmp(&b.name));
        assert_eq!(all, orig);
        let (tr, te) = split_train_test(&data[..3], 0.7, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (2, 1));
        assert!(split_train_test(&data[..1], 0.7, 1).is_err());
        assert!(split_train_test(&data, 1.0, 1).is_err());
    }

    #[test]
    fn nb_hand_laplace() {
        let m = nb_toy();
        let ModelParams::NaiveBayes {
            log_priors,
            letter_log_probs,
        } = &m.params
        else {
            panic!("expected naive Bayes");
        };
        assert_eq!(m.labels, ["F", "M"]);
        assert!((log_priors[0].exp() - 0.75).abs() < 1e-12);
        assert!((letter_log_probs[0][0].exp() - 7.0 / 32.0).abs() < 1e-12);
        for probs in letter_log_probs {
            let s: f64 = probs.iter().map(|p| p.exp()).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn nb_hand_posterior() {
        let p = nb_toy().predict("a").unwrap();
        let f = 0.75 * 7.0 / 32.0;
        let m = 0.25 * 1.0 / 28.0;
        assert_eq!(p.label, "F");
        assert!((p.score - f / (f + m)).abs() < 1e-9);
        assert!((p.score - 0.948).abs() < 1e-3);
    }

    #[test]
    fn knn_stores_everything_and_matches_exactly() {
        let mut data = ex("anna", "F", 1);
        data.extend(ex("bob", "M", 1));
        data.extend(ex("carl", "M", 1));
        let mut cfg = TrainConfig::new(Task::Gender, Algorithm::Knn);
        cfg.hyper.k = 1;
        let m = train(&data, &cfg).unwrap();
        let ModelParams::Knn { examples, .. } = &m.params else {
            panic!()
        };
        assert_eq!(examples.len(), 3);
        assert_eq!(
            m.predict("anna").unwrap(),
            Prediction {
                label: "F".into(),
                score: 1.0
            }
        );
    }

    #[test]
    fn knn_tie_goes_to_smallest_label() {
        let data = vec![NameExample::new("ab", "Z"), NameExample::new("ab", "B")];
        let mut cfg = TrainConfig::new(Task::Race, Algorithm::Knn);
        cfg.hyper.k = 2;
        let p = train(&data, &cfg).unwrap().predict("ab").unwrap();
        assert_eq!(p.label, "B");
        assert_eq!(p.score, 0.5);
    }

    #[test]
    fn tree_fits_separable_set() {
        let mut data = ex("aaa", "X", 6);
        data.extend(ex("bbb", "Y", 6));
        let m = train(
            &data,
            &TrainConfig::new(Task::Race, Algorithm::DecisionTree),
        )
        .unwrap();
        assert_eq!(evaluate(&m, &data).unwrap().accuracy, 1.0);
        let ModelParams::DecisionTree { root, max_depth } = &m.params else {
            panic!()
        };
        assert!(root.depth() <= *max_depth);
    }

    #[test]
    fn configured_label_without_examples_fails() {
        let mut cfg = TrainConfig::new(Task::Gender, Algorithm::NaiveBayes);
        cfg.labels = Some(Task::Gender.canonical_labels());
        let err = train(&ex("ann", "Female", 2), &cfg).unwrap_err();
        assert!(matches!(err, NameError::LabelWithoutExamples(l) if l == "Male"));
        assert!(matches!(
            train(&ex("ann", "Other", 2), &cfg),
            Err(NameError::UnknownLabel(_))
        ));
        assert!(matches!(
            "svm".parse::<Algorithm>(),
            Err(NameError::UnknownAlgorithm(_))
        ));
    }

    #[test]
    fn predict_rejects_empty_name() {
        assert!(matches!(nb_toy().predict("42"), Err(NameError::EmptyName)));
    }

    #[test]
    fn kfold_sizes_and_cover() {
        let folds = kfold_partition(100, 10, 3);
        assert!(folds.iter().all(|f| f.len() == 10));
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        let uneven = kfold_partition(23, 10, 3);
        assert!(uneven.iter().all(|f| f.len() == 2 || f.len() == 3));
    }

    #[test]
    fn cross_validate_needs_k_examples() {
        let data = ex("ann", "F", 5);
        let cfg = TrainConfig::new(Task::Gender, Algorithm::NaiveBayes);
        assert!(cross_validate(&data, 10, &cfg).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let m = nb_toy();
        let back = NameModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let mut bad: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        bad["format_version"] = 99.into();
        assert!(matches!(
            NameModel::from_json(&bad.to_string()),
            Err(NameError::FormatVersion(99))
        ));
    }

    #[test]
    fn nb_argmax_shift_invariant() {
        let scores = [-3.2, -1.1, -7.0];
        let shifted: Vec<f64> = scores.iter().map(|s| s + 123.4).collect();
        assert_eq!(
            argmax_first(&softmax(&scores)),
            argmax_first(&softmax(&shifted))
        );
    }
}
