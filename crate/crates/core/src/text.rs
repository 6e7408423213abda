//! Topic category and sentiment labels for posts.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{clean_text, tokenize, Stopwords, TokenizedDoc};
use crate::metrics::MetricsReport;
use crate::names::softmax;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("no labeled documents")]
    Empty,
    #[error("category {0} has no labeled documents")]
    MissingCategory(Category),
    #[error("invalid category `{0}` (expected 0-3)")]
    BadCategory(String),
    #[error("invalid sentiment `{0}`")]
    BadSentiment(String),
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("lexicon entry `{0}` has zero polarity")]
    ZeroPolarity(String),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
}

/// Post topic category, numbered as in the classifier output tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Category {
    PublicTransportInfrastructure = 0,
    SocioeconomicDisparity = 1,
    Accessibility = 2,
    Others = 3,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::PublicTransportInfrastructure,
        Category::SocioeconomicDisparity,
        Category::Accessibility,
        Category::Others,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::PublicTransportInfrastructure => "Public Transport Infrastructure",
            Category::SocioeconomicDisparity => "Socioeconomic Disparity",
            Category::Accessibility => "Accessibility",
            Category::Others => "Others",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

impl TryFrom<u8> for Category {
    type Error = TextError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Self::from_id(v).ok_or_else(|| TextError::BadCategory(v.to_string()))
    }
}

impl From<Category> for u8 {
    fn from(c: Category) -> u8 {
        c.id()
    }
}

impl FromStr for Category {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .parse::<u8>()
            .ok()
            .and_then(Self::from_id)
            .ok_or_else(|| TextError::BadCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Neutral,
    Negative,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Positive, Sentiment::Neutral, Sentiment::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Neutral => "neutral",
            Sentiment::Negative => "negative",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "positive" => Ok(Sentiment::Positive),
            "neutral" => Ok(Sentiment::Neutral),
            "negative" => Ok(Sentiment::Negative),
            other => Err(TextError::BadSentiment(other.to_string())),
        }
    }
}

/// Anything that can assign a category to a tokenized post.
pub trait Categorizer {
    /// Returns the chosen category and its posterior probability.
    fn classify(&self, tokens: &[String]) -> (Category, f64);

    /// Posterior over all four categories, in id order.
    fn posteriors(&self, tokens: &[String]) -> [f64; 4];
}

/// Multinomial naive Bayes over the training vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextModel {
    pub vocabulary: Vec<String>,
    pub log_priors: [f64; 4],
    /// `word_log_probs[category][word]`.
    pub word_log_probs: [Vec<f64>; 4],
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TextModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut m: TextModel = serde_json::from_str(text)?;
        m.rebuild_index();
        Ok(m)
    }
}

/// Trains with Laplace smoothing `α = 1`; all four categories must appear.
pub fn train_text(labeled: &[(TokenizedDoc, Category)]) -> Result<TextModel, TextError> {
    if labeled.is_empty() {
        return Err(TextError::Empty);
    }
    let mut class_docs = [0usize; 4];
    let mut counts: [BTreeMap<&str, u64>; 4] = Default::default();
    for (doc, cat) in labeled {
        let c = cat.id() as usize;
        class_docs[c] += 1;
        for t in &doc.tokens {
            *counts[c].entry(t.as_str()).or_insert(0) += 1;
        }
    }
    if let Some(c) = class_docs.iter().position(|&n| n == 0) {
        return Err(TextError::MissingCategory(Category::ALL[c]));
    }
    let mut vocab: Vec<String> = counts
        .iter()
        .flat_map(|m| m.keys().map(|w| w.to_string()))
        .collect();
    vocab.sort();
    vocab.dedup();
    let v = vocab.len() as f64;
    let n = labeled.len() as f64;
    let log_priors = class_docs.map(|c| (c as f64 / n).ln());
    let word_log_probs = std::array::from_fn(|c| {
        let total: u64 = counts[c].values().sum();
        let denom = total as f64 + v;
        vocab
            .iter()
            .map(|w| ((counts[c].get(w.as_str()).copied().unwrap_or(0) as f64 + 1.0) / denom).ln())
            .collect()
    });
    let mut model = TextModel {
        vocabulary: vocab,
        log_priors,
        word_log_probs,
        index: HashMap::new(),
    };
    model.rebuild_index();
    Ok(model)
}

impl Categorizer for TextModel {
    fn posteriors(&self, tokens: &[String]) -> [f64; 4] {
        let mut scores = self.log_priors;
        for t in tokens {
            if let Some(&w) = self.index.get(t) {
                for (c, s) in scores.iter_mut().enumerate() {
                    *s += self.word_log_probs[c][w];
                }
            }
        }
        let p = softmax(&scores);
        [p[0], p[1], p[2], p[3]]
    }

    fn classify(&self, tokens: &[String]) -> (Category, f64) {
        let p = self.posteriors(tokens);
        let mut best = 0;
        for c in 1..4 {
            if p[c] > p[best] {
                best = c;
            }
        }
        (Category::ALL[best], p[best])
    }
}

/// Classifies held-out documents and reports the 4×4 confusion layout.
pub fn evaluate_text<C: Categorizer + ?Sized>(
    model: &C,
    held_out: &[(TokenizedDoc, Category)],
) -> MetricsReport {
    let labels: Vec<String> = Category::ALL.iter().map(|c| c.to_string()).collect();
    let truth: Vec<usize> = held_out.iter().map(|(_, c)| c.id() as usize).collect();
    let predicted: Vec<usize> = held_out
        .iter()
        .map(|(d, _)| model.classify(&d.tokens).0.id() as usize)
        .collect();
    MetricsReport::from_indices(&labels, &truth, &predicted)
}

/// Reads a `text,label` CSV, cleaning and tokenizing each text.
pub fn load_labeled(
    path: &Path,
    stopwords: &Stopwords,
) -> Result<Vec<(TokenizedDoc, Category)>, TextError> {
    #[derive(Deserialize)]
    struct Row {
        text: String,
        label: String,
    }
    let input_err = |message: String| TextError::Input {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| input_err(e.to_string()))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| input_err(e.to_string()))?;
        let cat: Category = row.label.parse()?;
        let doc = TokenizedDoc {
            post_id: format!("labeled-{}", i + 1),
            tokens: tokenize(&clean_text(&row.text), stopwords),
        };
        out.push((doc, cat));
    }
    Ok(out)
}

/// Word polarities; every entry is nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentLexicon(HashMap<String, i32>);

impl SentimentLexicon {
    pub fn new<I, S>(entries: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = (S, i32)>,
        S: Into<String>,
    {
        let mut map = HashMap::new();
        for (w, p) in entries {
            let w = w.into();
            if p == 0 {
                return Err(TextError::ZeroPolarity(w));
            }
            map.insert(w.to_lowercase(), p);
        }
        if map.is_empty() {
            return Err(TextError::EmptyLexicon);
        }
        Ok(Self(map))
    }

    /// Reads a `word,polarity` CSV with a header row.
    pub fn from_csv(path: &Path) -> Result<Self, TextError> {
        #[derive(Deserialize)]
        struct Row {
            word: String,
            polarity: i32,
        }
        let input_err = |message: String| TextError::Input {
            path: path.display().to_string(),
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| input_err(e.to_string()))?;
        let rows = reader
            .deserialize::<Row>()
            .map(|r| r.map(|r| (r.word, r.polarity)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| input_err(e.to_string()))?;
        Self::new(rows)
    }

    pub fn polarity(&self, word: &str) -> Option<i32> {
        self.0.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Sum of lexicon polarities over the document's tokens.
pub fn sentiment_score(tokens: &[String], lexicon: &SentimentLexicon) -> i64 {
    tokens
        .iter()
        .filter_map(|t| lexicon.polarity(t))
        .map(i64::from)
        .sum()
}

pub fn score_sentiment(tokens: &[String], lexicon: &SentimentLexicon) -> Sentiment {
    match sentiment_score(tokens, lexicon) {
        s if s > 0 => Sentiment::Positive,
        s if s < 0 => Sentiment::Negative,
        _ => Sentiment::Neutral,
    }
}
