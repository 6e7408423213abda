//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.
//!
//! Each token's topic is resampled from
//! `p(z = k) ∝ (n_dk + α)(n_kw + β) / (n_k + Vβ)` with the token's own
//! assignment removed from the counts. Topic quality is scored with UMass
//! coherence over document co-occurrence in the training corpus.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TokenizedDoc;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopicError {
    #[error("vocabulary is empty after document-frequency filtering")]
    EmptyVocabulary,
    #[error("topic count must be at least 1")]
    ZeroTopics,
    #[error("alpha and beta must be positive")]
    BadSmoothing,
    #[error("at least one iteration is required")]
    ZeroIterations,
    #[error("{k} topics exceed the corpus token count {tokens}")]
    TooManyTopics { k: usize, tokens: usize },
    #[error("topic {topic} out of range for {k} topics")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("coherence needs top_n >= 2, got {0}")]
    TopN(usize),
    #[error("word `{0}` has no document support in the corpus")]
    Unsupported(String),
    #[error("invalid topic range {k_min}..={k_max}")]
    BadRange { k_min: usize, k_max: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Self { words, index }
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub vocabulary: Vocabulary,
    pub docs: Vec<Vec<usize>>,
    /// Post id of each retained document.
    pub doc_ids: Vec<String>,
}

impl Corpus {
    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }
}

/// Builds a corpus over words that occur in at least `min_doc_freq` documents.
/// The vocabulary is sorted; documents left empty are dropped.
pub fn build_corpus(docs: &[TokenizedDoc], min_doc_freq: usize) -> Result<Corpus, TopicError> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let uniq: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for w in uniq {
            *df.entry(w).or_insert(0) += 1;
        }
    }
    let words: Vec<String> = df
        .into_iter()
        .filter(|&(_, c)| c >= min_doc_freq)
        .map(|(w, _)| w.to_string())
        .collect();
    if words.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    let vocabulary = Vocabulary::from_words(words);
    let mut out_docs = Vec::new();
    let mut doc_ids = Vec::new();
    for doc in docs {
        let ids: Vec<usize> = doc.tokens.iter().filter_map(|t| vocabulary.id(t)).collect();
        if !ids.is_empty() {
            out_docs.push(ids);
            doc_ids.push(doc.post_id.clone());
        }
    }
    Ok(Corpus {
        vocabulary,
        docs: out_docs,
        doc_ids,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    /// Document-topic smoothing; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 0.01,
            iterations: 200,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha_for(&self, k: usize) -> f64 {
        self.alpha.unwrap_or(50.0 / k as f64)
    }
}

/// Final state of a Gibbs chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub vocabulary: Vocabulary,
    pub assignments: Vec<Vec<usize>>,
    /// `n_kw[k][w]`
    pub topic_word: Vec<Vec<u32>>,
    /// `n_dk[d][k]`
    pub doc_topic: Vec<Vec<u32>>,
    pub topic_totals: Vec<u32>,
}

impl TopicModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// `φ_k(w) = (n_kw + β) / (n_k + Vβ)`.
    pub fn phi(&self, topic: usize, word: usize) -> f64 {
        let v = self.vocab_size() as f64;
        (f64::from(self.topic_word[topic][word]) + self.beta)
            / (f64::from(self.topic_totals[topic]) + v * self.beta)
    }

    pub fn phi_row(&self, topic: usize) -> Vec<f64> {
        (0..self.vocab_size()).map(|w| self.phi(topic, w)).collect()
    }

    /// `θ_d(k) = (n_dk + α) / (n_d + Kα)`.
    pub fn theta(&self, doc: usize) -> Vec<f64> {
        let n_d: u32 = self.doc_topic[doc].iter().sum();
        let denom = f64::from(n_d) + self.k as f64 * self.alpha;
        self.doc_topic[doc]
            .iter()
            .map(|&c| (f64::from(c) + self.alpha) / denom)
            .collect()
    }

    /// Most probable topic of a document; ties go to the lower topic id.
    pub fn dominant_topic(&self, doc: usize) -> usize {
        let row = &self.doc_topic[doc];
        (0..self.k).fold(0, |best, k| if row[k] > row[best] { k } else { best })
    }

    /// Serializable dump: hyperparameters, vocabulary and the φ matrix.
    pub fn dump(&self) -> TopicDump {
        TopicDump {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
            iterations: self.iterations,
            vocabulary: self.vocabulary.words().to_vec(),
            phi: (0..self.k).map(|t| self.phi_row(t)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDump {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub vocabulary: Vec<String>,
    pub phi: Vec<Vec<f64>>,
}

/// Collapsed Gibbs chain that can be advanced one sweep at a time.
pub struct GibbsSampler<'a> {
    corpus: &'a Corpus,
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    sweeps: usize,
    rng: ChaCha8Rng,
    z: Vec<Vec<usize>>,
    n_kw: Vec<Vec<u32>>,
    n_dk: Vec<Vec<u32>>,
    n_k: Vec<u32>,
    weights: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(
        corpus: &'a Corpus,
        k: usize,
        alpha: f64,
        beta: f64,
        seed: u64,
    ) -> Result<Self, TopicError> {
        if k == 0 {
            return Err(TopicError::ZeroTopics);
        }
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(TopicError::BadSmoothing);
        }
        let tokens = corpus.total_tokens();
        if k > tokens {
            return Err(TopicError::TooManyTopics { k, tokens });
        }
        let v = corpus.vocabulary.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n_kw = vec![vec![0u32; v]; k];
        let mut n_dk = vec![vec![0u32; k]; corpus.docs.len()];
        let mut n_k = vec![0u32; k];
        let z = corpus
            .docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.gen_range(0..k);
                        n_kw[t][w] += 1;
                        n_dk[d][t] += 1;
                        n_k[t] += 1;
                        t
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            corpus,
            k,
            alpha,
            beta,
            seed,
            sweeps: 0,
            rng,
            z,
            n_kw,
            n_dk,
            n_k,
            weights: vec![0.0; k],
        })
    }

    /// Resamples every token once, in document order.
    pub fn sweep(&mut self) {
        let vbeta = self.corpus.vocabulary.len() as f64 * self.beta;
        for (d, doc) in self.corpus.docs.iter().enumerate() {
            for (pos, &w) in doc.iter().enumerate() {
                let old = self.z[d][pos];
                self.n_kw[old][w] -= 1;
                self.n_dk[d][old] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..self.k {
                    let p = (f64::from(self.n_dk[d][t]) + self.alpha)
                        * (f64::from(self.n_kw[t][w]) + self.beta)
                        / (f64::from(self.n_k[t]) + vbeta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self
                    .weights
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(self.k - 1);

                self.z[d][pos] = new;
                self.n_kw[new][w] += 1;
                self.n_dk[d][new] += 1;
                self.n_k[new] += 1;
            }
        }
        self.sweeps += 1;
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    /// Recomputes all count tables from the assignments and compares them
    /// with the incrementally maintained ones.
    pub fn counts_consistent(&self) -> bool {
        let v = self.corpus.vocabulary.len();
        let mut n_kw = vec![vec![0u32; v]; self.k];
        let mut n_dk = vec![vec![0u32; self.k]; self.corpus.docs.len()];
        let mut n_k = vec![0u32; self.k];
        for (d, doc) in self.corpus.docs.iter().enumerate() {
            for (&w, &t) in doc.iter().zip(&self.z[d]) {
                n_kw[t][w] += 1;
                n_dk[d][t] += 1;
                n_k[t] += 1;
            }
        }
        n_kw == self.n_kw && n_dk == self.n_dk && n_k == self.n_k
    }

    pub fn into_model(self) -> TopicModel {
        TopicModel {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
            iterations: self.sweeps,
            vocabulary: self.corpus.vocabulary.clone(),
            assignments: self.z,
            topic_word: self.n_kw,
            doc_topic: self.n_dk,
            topic_totals: self.n_k,
        }
    }
}

pub fn fit_lda(corpus: &Corpus, k: usize, config: &LdaConfig) -> Result<TopicModel, TopicError> {
    if config.iterations == 0 {
        return Err(TopicError::ZeroIterations);
    }
    let mut sampler = GibbsSampler::new(corpus, k, config.alpha_for(k), config.beta, config.seed)?;
    for _ in 0..config.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}

/// The `n` most probable words of a topic; ties go to the lower word id.
/// `n` larger than the vocabulary is truncated.
pub fn top_words(
    model: &TopicModel,
    topic: usize,
    n: usize,
) -> Result<Vec<(String, f64)>, TopicError> {
    Ok(top_word_ids(model, topic, n)?
        .into_iter()
        .map(|(w, p)| (model.vocabulary.word(w).to_string(), p))
        .collect())
}

fn top_word_ids(
    model: &TopicModel,
    topic: usize,
    n: usize,
) -> Result<Vec<(usize, f64)>, TopicError> {
    if topic >= model.k {
        return Err(TopicError::TopicOutOfRange { topic, k: model.k });
    }
    let mut ranked: Vec<(usize, f64)> = (0..model.vocab_size())
        .map(|w| (w, model.phi(topic, w)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(n);
    Ok(ranked)
}

/// `word (0.131)` style label used in topic tables.
pub fn format_top_word(word: &str, probability: f64) -> String {
    format!("{word} ({probability:.3})")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceScore {
    pub value: f64,
    pub per_topic: Vec<f64>,
    pub top_n: usize,
}

/// Document frequencies of single words and word pairs.
pub struct CoOccurrence {
    doc_sets: Vec<HashSet<usize>>,
    df: Vec<usize>,
}

impl CoOccurrence {
    pub fn new(corpus: &Corpus) -> Self {
        let doc_sets: Vec<HashSet<usize>> = corpus
            .docs
            .iter()
            .map(|d| d.iter().copied().collect())
            .collect();
        let mut df = vec![0; corpus.vocabulary.len()];
        for set in &doc_sets {
            for &w in set {
                df[w] += 1;
            }
        }
        Self { doc_sets, df }
    }

    pub fn doc_freq(&self, w: usize) -> usize {
        self.df[w]
    }

    pub fn co_doc_freq(&self, a: usize, b: usize) -> usize {
        self.doc_sets
            .iter()
            .filter(|s| s.contains(&a) && s.contains(&b))
            .count()
    }
}

/// UMass score of one ranked word list:
/// `Σ_{i>j} ln((D(w_i, w_j) + 1) / D(w_j))`.
pub fn umass_topic(
    ranked: &[usize],
    co: &CoOccurrence,
    vocab: &Vocabulary,
) -> Result<f64, TopicError> {
    let mut score = 0.0;
    for i in 1..ranked.len() {
        for j in 0..i {
            let dj = co.doc_freq(ranked[j]);
            if dj == 0 {
                return Err(TopicError::Unsupported(vocab.word(ranked[j]).to_string()));
            }
            let dij = co.co_doc_freq(ranked[i], ranked[j]);
            score += ((dij as f64 + 1.0) / dj as f64).ln();
        }
    }
    Ok(score)
}

pub fn coherence(
    model: &TopicModel,
    corpus: &Corpus,
    top_n: usize,
) -> Result<CoherenceScore, TopicError> {
    if top_n < 2 {
        return Err(TopicError::TopN(top_n));
    }
    let co = CoOccurrence::new(corpus);
    let per_topic = (0..model.k)
        .map(|t| {
            let ids: Vec<usize> = top_word_ids(model, t, top_n)?
                .into_iter()
                .map(|(w, _)| w)
                .collect();
            umass_topic(&ids, &co, &corpus.vocabulary)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let value = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceScore {
        value,
        per_topic,
        top_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub best_k: usize,
    pub scores: Vec<(usize, f64)>,
}

/// Relative gap below which two coherence scores count as tied.
const TIE_TOL: f64 = 1e-9;

/// Fits every K in `k_min..=k_max` with the same seed and keeps the most
/// coherent; ties, up to rounding, go to the smaller K.
pub fn select_k(
    corpus: &Corpus,
    k_min: usize,
    k_max: usize,
    config: &LdaConfig,
    top_n: usize,
) -> Result<KSelection, TopicError> {
    if k_min == 0 || k_min > k_max {
        return Err(TopicError::BadRange { k_min, k_max });
    }
    let mut scores = Vec::with_capacity(k_max - k_min + 1);
    let mut best: Option<(usize, f64)> = None;
    for k in k_min..=k_max {
        let model = fit_lda(corpus, k, config)?;
        let c = coherence(&model, corpus, top_n)?.value;
        scores.push((k, c));
        if best.is_none_or(|(_, b)| c > b + TIE_TOL * b.abs().max(1.0)) {
            best = Some((k, c));
        }
    }
    Ok(KSelection {
        best_k: best.map(|(k, _)| k).expect("range is nonempty"),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, toks: &[&str]) -> TokenizedDoc {
        TokenizedDoc {
            post_id: id.into(),
            tokens: toks.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn corpus_thresholds() {
        let docs = [doc("1", &["bus", "late"]), doc("2", &["bus", "rain"])];
        let c = build_corpus(&docs, 2).unwrap();
        assert_eq!(c.vocabulary.words(), ["bus"]);
        let all = build_corpus(&docs, 1).unwrap();
        assert_eq!(all.vocabulary.words(), ["bus", "late", "rain"]);
        assert_eq!(all.docs, vec![vec![0, 1], vec![0, 2]]);
        assert_eq!(
            build_corpus(&[doc("1", &[]), doc("2", &[])], 1),
            Err(TopicError::EmptyVocabulary)
        );
        let dropped = build_corpus(
            &[doc("1", &["x"]), doc("2", &["y", "x"]), doc("3", &["y"])],
            2,
        )
        .unwrap();
        assert_eq!(dropped.docs.len(), 3);
        let only =
            build_corpus(&[doc("1", &["z"]), doc("2", &["x"]), doc("3", &["x"])], 2).unwrap();
        assert_eq!(only.doc_ids, ["2", "3"]);
    }

    #[test]
    fn single_word_vocab_phi_is_one() {
        let docs: Vec<_> = (0..5)
            .map(|i| doc(&i.to_string(), &["bus", "bus", "bus"]))
            .collect();
        let c = build_corpus(&docs, 1).unwrap();
        let m = fit_lda(
            &c,
            3,
            &LdaConfig {
                iterations: 5,
                ..LdaConfig::default()
            },
        )
        .unwrap();
        for k in 0..3 {
            assert_eq!(m.phi(k, 0), 1.0);
        }
        assert_eq!(top_words(&m, 0, 5).unwrap(), vec![("bus".to_string(), 1.0)]);
    }

    #[test]
    fn single_topic_theta_is_one() {
        let docs = [doc("1", &["a", "b", "c"]), doc("2", &["b", "d"])];
        let c = build_corpus(&docs, 1).unwrap();
        let m = fit_lda(
            &c,
            1,
            &LdaConfig {
                iterations: 3,
                ..LdaConfig::default()
            },
        )
        .unwrap();
        assert!(m.assignments.iter().flatten().all(|&t| t == 0));
        for d in 0..2 {
            assert_eq!(m.theta(d), vec![1.0]);
        }
    }

    #[test]
    fn fit_errors() {
        let c = build_corpus(&[doc("1", &["a", "b"])], 1).unwrap();
        let cfg = LdaConfig::default();
        assert_eq!(
            fit_lda(&c, 3, &cfg),
            Err(TopicError::TooManyTopics { k: 3, tokens: 2 })
        );
        assert_eq!(fit_lda(&c, 0, &cfg), Err(TopicError::ZeroTopics));
        assert_eq!(
            fit_lda(&c, 1, &LdaConfig { beta: 0.0, ..cfg }),
            Err(TopicError::BadSmoothing)
        );
        assert_eq!(
            fit_lda(
                &c,
                1,
                &LdaConfig {
                    iterations: 0,
                    ..cfg
                }
            ),
            Err(TopicError::ZeroIterations)
        );
    }

    #[test]
    fn reproducible_given_seed() {
        let docs: Vec<_> = (0..20)
            .map(|i| {
                doc(
                    &i.to_string(),
                    if i % 2 == 0 {
                        &["a", "b", "c", "a"]
                    } else {
                        &["x", "y", "z", "y"]
                    },
                )
            })
            .collect();
        let c = build_corpus(&docs, 1).unwrap();
        let cfg = LdaConfig {
            iterations: 20,
            seed: 11,
            ..LdaConfig::default()
        };
        assert_eq!(
            fit_lda(&c, 2, &cfg).unwrap().assignments,
            fit_lda(&c, 2, &cfg).unwrap().assignments
        );
    }

    #[test]
    fn top_words_sorted_and_truncated() {
        let docs = [doc("1", &["a", "a", "b"]), doc("2", &["c"])];
        let c = build_corpus(&docs, 1).unwrap();
        let m = fit_lda(
            &c,
            1,
            &LdaConfig {
                iterations: 2,
                ..LdaConfig::default()
            },
        )
        .unwrap();
        let top = top_words(&m, 0, 10).unwrap();
        assert_eq!(top.len(), 3);
        assert_eq!(top[0].0, "a");
        // b and c tie; lower id first
        assert_eq!((top[1].0.as_str(), top[2].0.as_str()), ("b", "c"));
        assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(matches!(
            top_words(&m, 1, 3),
            Err(TopicError::TopicOutOfRange { .. })
        ));
        assert_eq!(format_top_word("station", 0.1314), "station (0.131)");
    }

    #[test]
    fn umass_hand_terms() {
        // w2 occurs in 4 docs, always with w1
        let docs = [
            doc("1", &["w1", "w2"]),
            doc("2", &["w1", "w2"]),
            doc("3", &["w1", "w2"]),
            doc("4", &["w1", "w2"]),
            doc("5", &["w1"]),
        ];
        let c = build_corpus(&docs, 1).unwrap();
        let co = CoOccurrence::new(&c);
        let (w1, w2) = (
            c.vocabulary.id("w1").unwrap(),
            c.vocabulary.id("w2").unwrap(),
        );
        let s = umass_topic(&[w2, w1], &co, &c.vocabulary).unwrap();
        assert!((s - (5.0_f64 / 4.0).ln()).abs() < 1e-12);
        assert!((s - 0.2231).abs() < 1e-4);

        let apart = [
            doc("1", &["p"]),
            doc("2", &["p"]),
            doc("3", &["p"]),
            doc("4", &["p"]),
            doc("5", &["q"]),
        ];
        let c = build_corpus(&apart, 1).unwrap();
        let co = CoOccurrence::new(&c);
        let (p, q) = (c.vocabulary.id("p").unwrap(), c.vocabulary.id("q").unwrap());
        let s = umass_topic(&[p, q], &co, &c.vocabulary).unwrap();
        assert!((s + 1.3863).abs() < 1e-4);
    }

    #[test]
    fn coherence_is_mean_of_topics() {
        let docs: Vec<_> = (0..12)
            .map(|i| {
                doc(
                    &i.to_string(),
                    if i % 3 == 0 {
                        &["a", "b", "c"]
                    } else {
                        &["x", "y", "a"]
                    },
                )
            })
            .collect();
        let c = build_corpus(&docs, 1).unwrap();
        let m = fit_lda(
            &c,
            2,
            &LdaConfig {
                iterations: 10,
                ..LdaConfig::default()
            },
        )
        .unwrap();
        let s = coherence(&m, &c, 3).unwrap();
        let mean = s.per_topic.iter().sum::<f64>() / 2.0;
        assert!((s.value - mean).abs() < 1e-15);
        assert_eq!(coherence(&m, &c, 1), Err(TopicError::TopN(1)));
    }

    #[test]
    fn select_k_singleton_and_range() {
        let docs: Vec<_> = (0..10)
            .map(|i| doc(&i.to_string(), &["a", "b", "c", "d"]))
            .collect();
        let c = build_corpus(&docs, 1).unwrap();
        let cfg = LdaConfig {
            iterations: 5,
            ..LdaConfig::default()
        };
        let s = select_k(&c, 3, 3, &cfg, 3).unwrap();
        assert_eq!(s.best_k, 3);
        assert_eq!(s.scores.len(), 1);
        assert_eq!(select_k(&c, 1, 4, &cfg, 3).unwrap().scores.len(), 4);
        assert!(select_k(&c, 4, 2, &cfg, 3).is_err());
    }
}
