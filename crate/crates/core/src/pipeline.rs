//! End-to-end runs: ingest, filter, demographics, topics, classification,
//! sentiment, fusion, model fitting and reporting, all driven by one TOML
//! config and its named seeds.
//!
//! Each stage writes its artifacts as soon as it finishes, so a failed run
//! leaves the outputs of every completed stage in place.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geo::{
    derive_features, join_attributes, load_polygons, resolve_geoid, AttributeTable, FeatureRecipe,
    FeatureSpec, FusedObservation, GeoidSource, RemoteGeocoder,
};
use crate::ingest::{
    filter_window, parse_posts, relevance_filter, KeywordSet, PostFormat, Stopwords, TokenizedDoc,
};
use crate::logit::{fit, DesignData, FitOptions};
use crate::metrics::MetricsReport;
use crate::names::{self, Algorithm, Hyperparams, NameModel, Task, TrainConfig};
use crate::report::{
    categorical_summary, descriptive_stats, round3, topic_sentiment_crosstab, FitReport, Format,
    Render,
};
use crate::text::{
    evaluate_text, load_labeled, score_sentiment, train_text, Categorizer, Category, Sentiment,
    SentimentLexicon,
};
use crate::topics::{
    build_corpus, coherence, fit_lda, format_top_word, select_k, top_words, LdaConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Filter,
    Demographics,
    Topics,
    Classify,
    Sentiment,
    Fuse,
    Fit,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Ingest => "ingest",
            Stage::Filter => "filter",
            Stage::Demographics => "demographics",
            Stage::Topics => "topics",
            Stage::Classify => "classify",
            Stage::Sentiment => "sentiment",
            Stage::Fuse => "fuse",
            Stage::Fit => "fit",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

fn fail(stage: Stage, e: impl fmt::Display) -> PipelineError {
    PipelineError {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}: not found")]
    NotFound(String),
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stage(#[from] PipelineError),
}

impl RunError {
    /// 2 for configuration problems, 1 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Stage(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub posts: PathBuf,
    #[serde(default = "default_format")]
    pub posts_format: PostFormat,
    pub names_gender: PathBuf,
    pub names_race: PathBuf,
    pub polygons: PathBuf,
    pub attributes: PathBuf,
    pub keywords: PathBuf,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    pub lexicon: PathBuf,
    pub labeled_categories: PathBuf,
}

fn default_format() -> PostFormat {
    PostFormat::Jsonl
}

impl Inputs {
    /// `(name, path)` of every configured input, in a fixed order.
    pub fn named_paths(&self) -> Vec<(&'static str, &Path)> {
        let mut v: Vec<(&'static str, &Path)> = vec![
            ("posts", &self.posts),
            ("names_gender", &self.names_gender),
            ("names_race", &self.names_race),
            ("polygons", &self.polygons),
            ("attributes", &self.attributes),
            ("keywords", &self.keywords),
        ];
        if let Some(s) = &self.stopwords {
            v.push(("stopwords", s));
        }
        v.push(("lexicon", &self.lexicon));
        v.push(("labeled_categories", &self.labeled_categories));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    #[serde(default)]
    pub from: Option<DateTime<Utc>>,
    #[serde(default)]
    pub to: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Train/test splits of the name and category classifiers.
    pub split: u64,
    /// Cross-validation fold assignment.
    pub cv: u64,
    /// Gibbs sampler.
    pub lda: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemographicsConfig {
    pub gender_algorithm: Algorithm,
    pub race_algorithm: Algorithm,
    pub train_fraction: f64,
    pub folds: usize,
    pub hyper: Hyperparams,
}

impl Default for DemographicsConfig {
    fn default() -> Self {
        Self {
            gender_algorithm: Algorithm::NaiveBayes,
            race_algorithm: Algorithm::NaiveBayes,
            train_fraction: 0.7,
            folds: 10,
            hyper: Hyperparams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub iterations: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub top_n: usize,
    pub min_doc_freq: usize,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 8,
            iterations: 200,
            alpha: None,
            beta: 0.01,
            top_n: 10,
            min_doc_freq: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    /// Outcome is 1 when a post is classified into this category.
    pub category: Category,
    /// One of the built-in recipes; ignored when `features` is given.
    #[serde(default)]
    pub recipe: Option<String>,
    #[serde(default)]
    pub features: Option<Vec<FeatureSpec>>,
}

pub const BUILTIN_RECIPES: [&str; 3] = [
    "transport_accessibility",
    "socioeconomic_disparity",
    "public_transport_infrastructure",
];

pub fn builtin_recipe(name: &str) -> Option<FeatureRecipe> {
    match name {
        "transport_accessibility" => Some(FeatureRecipe::transport_accessibility()),
        "socioeconomic_disparity" => Some(FeatureRecipe::socioeconomic_disparity()),
        "public_transport_infrastructure" => Some(FeatureRecipe::public_transport_infrastructure()),
        _ => None,
    }
}

impl ModelSpec {
    pub fn recipe(&self) -> Result<FeatureRecipe, ConfigError> {
        let recipe = match (&self.features, &self.recipe) {
            (Some(f), _) => FeatureRecipe {
                features: f.clone(),
            },
            (None, Some(r)) => builtin_recipe(r).ok_or_else(|| {
                ConfigError::Invalid(format!("model {}: unknown recipe `{r}`", self.name))
            })?,
            (None, None) => {
                return Err(ConfigError::Invalid(format!(
                    "model {}: needs `recipe` or `features`",
                    self.name
                )))
            }
        };
        recipe
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("model {}: {e}", self.name)))?;
        Ok(recipe)
    }
}

fn default_models() -> Vec<ModelSpec> {
    [
        ("transport_accessibility", Category::Accessibility),
        ("socioeconomic_disparity", Category::SocioeconomicDisparity),
        (
            "public_transport_infrastructure",
            Category::PublicTransportInfrastructure,
        ),
    ]
    .into_iter()
    .map(|(name, category)| ModelSpec {
        name: name.to_string(),
        category,
        recipe: Some(name.to_string()),
        features: None,
    })
    .collect()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub inputs: Inputs,
    #[serde(default)]
    pub window: Window,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub demographics: DemographicsConfig,
    #[serde(default)]
    pub topics: TopicsConfig,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Invalid(e.message().to_string()))?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Checks every input exists and every model spec is usable.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, p) in self.inputs.named_paths() {
            if !self.resolve(p).is_file() {
                return Err(ConfigError::NotFound(name.to_string()));
            }
        }
        let t = &self.topics;
        if t.k_min == 0 || t.k_min > t.k_max {
            return Err(ConfigError::Invalid(format!(
                "topics: bad K range {}..={}",
                t.k_min, t.k_max
            )));
        }
        if t.iterations == 0
            || t.top_n < 2
            || !(t.beta > 0.0)
            || t.alpha.is_some_and(|a| !(a > 0.0))
        {
            return Err(ConfigError::Invalid(
                "topics: iterations, top_n, alpha or beta out of range".into(),
            ));
        }
        let d = &self.demographics;
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) || d.folds < 2 {
            return Err(ConfigError::Invalid(
                "demographics: train_fraction or folds out of range".into(),
            ));
        }
        if self.models.is_empty() {
            return Err(ConfigError::Invalid("no models configured".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.models {
            let ok = !m.name.is_empty()
                && m.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok || !seen.insert(m.name.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "model name `{}` is empty, duplicated or not file-safe",
                    m.name
                )));
            }
            m.recipe()?;
        }
        Ok(())
    }

    pub fn lda_config(&self) -> LdaConfig {
        LdaConfig {
            alpha: self.topics.alpha,
            beta: self.topics.beta,
            iterations: self.topics.iterations,
            seed: self.seeds.lda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StageCounts {
    pub parsed: usize,
    pub rejected: usize,
    pub in_window: usize,
    pub relevant: usize,
    pub with_first_name: usize,
    pub with_last_name: usize,
    pub located: usize,
    pub located_remote: usize,
    pub unlocated: usize,
    pub unmatched_attributes: usize,
    pub fused: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub name: String,
    pub n_obs: usize,
    pub positives: usize,
    pub iterations: usize,
    pub converged: bool,
    pub adjusted_rho_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub version: String,
    pub seeds: Seeds,
    /// SHA-256 of each input file.
    pub inputs: BTreeMap<String, String>,
    pub counts: StageCounts,
    pub topics_k: usize,
    pub models: Vec<ModelSummary>,
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, bytes: &[u8], stage: Stage) -> Result<(), PipelineError> {
        fs::write(self.dir.join(name), bytes).map_err(|e| PipelineError {
            stage,
            message: format!("writing {name}: {e}"),
        })?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(
        &mut self,
        name: &str,
        value: &T,
        stage: Stage,
    ) -> Result<(), PipelineError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| fail(stage, e))?;
        bytes.push(b'\n');
        self.write(name, &bytes, stage)
    }
}

#[derive(Debug, Clone, Serialize)]
struct ClassifierReport {
    algorithm: Algorithm,
    holdout: MetricsReport,
    cross_validation: MetricsReport,
}

struct Demographics {
    gender: NameModel,
    race: NameModel,
}

fn demographics_stage(cfg: &RunConfig, out: &mut Outputs) -> Result<Demographics, PipelineError> {
    let d = cfg.demographics;
    let mut reports = BTreeMap::new();
    let mut fitted = Vec::new();
    for (task, path, algorithm) in [
        (Task::Gender, &cfg.inputs.names_gender, d.gender_algorithm),
        (Task::Race, &cfg.inputs.names_race, d.race_algorithm),
    ] {
        let examples =
            names::load_examples(&cfg.resolve(path)).map_err(|e| fail(Stage::Demographics, e))?;
        let config = TrainConfig {
            task,
            algorithm,
            hyper: d.hyper,
            seed: cfg.seeds.split,
            labels: None,
        };
        let (train_set, test_set) =
            names::split_train_test(&examples, d.train_fraction, cfg.seeds.split)
                .map_err(|e| fail(Stage::Demographics, e))?;
        let labels: Vec<String> = {
            let mut l: Vec<String> = examples.iter().map(|e| e.label.clone()).collect();
            l.sort();
            l.dedup();
            l
        };
        let holdout_config = TrainConfig {
            labels: Some(labels),
            ..config.clone()
        };
        let holdout_model =
            names::train(&train_set, &holdout_config).map_err(|e| fail(Stage::Demographics, e))?;
        let holdout =
            names::evaluate(&holdout_model, &test_set).map_err(|e| fail(Stage::Demographics, e))?;
        let cv_config = TrainConfig {
            seed: cfg.seeds.cv,
            ..config.clone()
        };
        let cross_validation = names::cross_validate(&examples, d.folds, &cv_config)
            .map_err(|e| fail(Stage::Demographics, e))?;
        let model = names::train(&examples, &config).map_err(|e| fail(Stage::Demographics, e))?;
        let key = match task {
            Task::Gender => "gender",
            Task::Race => "race",
        };
        out.write(
            &format!("{key}_model.json"),
            model
                .to_json()
                .map_err(|e| fail(Stage::Demographics, e))?
                .as_bytes(),
            Stage::Demographics,
        )?;
        reports.insert(
            key,
            ClassifierReport {
                algorithm,
                holdout,
                cross_validation,
            },
        );
        fitted.push(model);
    }
    out.json("demographics.json", &reports, Stage::Demographics)?;
    let race = fitted.pop().expect("two models trained");
    let gender = fitted.pop().expect("two models trained");
    Ok(Demographics { gender, race })
}

#[derive(Serialize)]
struct TopicWordRow<'a> {
    topic: usize,
    rank: usize,
    word: &'a str,
    probability: String,
    label: String,
}

fn topics_stage(
    cfg: &RunConfig,
    docs: &[TokenizedDoc],
    out: &mut Outputs,
) -> Result<usize, PipelineError> {
    let corpus = build_corpus(docs, cfg.topics.min_doc_freq).map_err(|e| fail(Stage::Topics, e))?;
    let lda = cfg.lda_config();
    let selection = select_k(
        &corpus,
        cfg.topics.k_min,
        cfg.topics.k_max,
        &lda,
        cfg.topics.top_n,
    )
    .map_err(|e| fail(Stage::Topics, e))?;
    let model = fit_lda(&corpus, selection.best_k, &lda).map_err(|e| fail(Stage::Topics, e))?;
    let score = coherence(&model, &corpus, cfg.topics.top_n).map_err(|e| fail(Stage::Topics, e))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for t in 0..model.k {
        for (rank, (word, p)) in top_words(&model, t, cfg.topics.top_n)
            .map_err(|e| fail(Stage::Topics, e))?
            .iter()
            .enumerate()
        {
            w.serialize(TopicWordRow {
                topic: t,
                rank: rank + 1,
                word,
                probability: format!("{p:.3}"),
                label: format_top_word(word, *p),
            })
            .map_err(|e| fail(Stage::Topics, e))?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| fail(Stage::Topics, e.into_error()))?;
    out.write("topics.csv", &bytes, Stage::Topics)?;
    out.json(
        "topic_selection.json",
        &serde_json::json!({
            "documents": corpus.docs.len(),
            "vocabulary": corpus.vocabulary.len(),
            "tokens": corpus.total_tokens(),
            "best_k": selection.best_k,
            "scores": selection.scores,
            "coherence": score,
        }),
        Stage::Topics,
    )?;
    Ok(selection.best_k)
}

fn classify_stage(
    cfg: &RunConfig,
    stopwords: &Stopwords,
    out: &mut Outputs,
) -> Result<crate::text::TextModel, PipelineError> {
    let labeled = load_labeled(&cfg.resolve(&cfg.inputs.labeled_categories), stopwords)
        .map_err(|e| fail(Stage::Classify, e))?;
    let mut idx: Vec<usize> = (0..labeled.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seeds.split));
    let cut = ((cfg.demographics.train_fraction * labeled.len() as f64).round() as usize)
        .clamp(1, labeled.len());
    let train_part: Vec<_> = idx[..cut].iter().map(|&i| labeled[i].clone()).collect();
    let test_part: Vec<_> = idx[cut..].iter().map(|&i| labeled[i].clone()).collect();
    let holdout_model = train_text(&train_part).map_err(|e| fail(Stage::Classify, e))?;
    let holdout = evaluate_text(&holdout_model, &test_part);
    let model = train_text(&labeled).map_err(|e| fail(Stage::Classify, e))?;
    out.write(
        "text_model.json",
        serde_json::to_string(&model)
            .map_err(|e| fail(Stage::Classify, e))?
            .as_bytes(),
        Stage::Classify,
    )?;
    out.json(
        "classifier.json",
        &serde_json::json!({
            "training_documents": labeled.len(),
            "vocabulary": model.vocab_size(),
            "holdout": holdout,
        }),
        Stage::Classify,
    )?;
    Ok(model)
}

#[derive(Serialize)]
struct LabeledPostRow<'a> {
    post_id: &'a str,
    category: u8,
    category_score: String,
    sentiment: &'static str,
    female: u8,
    race: &'a str,
    geoid: &'a str,
}

fn percentage_rows(values: Vec<String>) -> crate::report::CategoricalSummary {
    categorical_summary(&values)
}

fn report_stage(
    obs: &[FusedObservation],
    classified: &[(Category, Sentiment)],
    out: &mut Outputs,
) -> Result<(), PipelineError> {
    let dummy = |f: &dyn Fn(&FusedObservation) -> bool| -> Vec<f64> {
        obs.iter().map(|o| if f(o) { 1.0 } else { 0.0 }).collect()
    };
    let attr = |name: &str| -> Vec<f64> {
        obs.iter()
            .map(|o| {
                o.attributes
                    .as_ref()
                    .and_then(|a| a.field(name))
                    .unwrap_or(f64::NAN)
            })
            .collect()
    };
    let columns: Vec<(&str, Vec<f64>)> = vec![
        (
            "Public Transport Infrastructure",
            dummy(&|o| o.category == Category::PublicTransportInfrastructure),
        ),
        (
            "Socioeconomic Disparity",
            dummy(&|o| o.category == Category::SocioeconomicDisparity),
        ),
        (
            "Transport Accessibility",
            dummy(&|o| o.category == Category::Accessibility),
        ),
        (
            "Positive Sentiment",
            dummy(&|o| o.sentiment == Sentiment::Positive),
        ),
        (
            "Neutral Sentiment",
            dummy(&|o| o.sentiment == Sentiment::Neutral),
        ),
        (
            "Negative Sentiment",
            dummy(&|o| o.sentiment == Sentiment::Negative),
        ),
        ("Percent unemployed", attr("percent_unemployed")),
        ("Median income", attr("median_income")),
        ("Identified as disadvantaged", attr("disadvantaged")),
        (
            "Expected agricultural loss rate (percentile)",
            attr("agri_loss_pctile"),
        ),
        (
            "Expected building loss rate (percentile)",
            attr("building_loss_pctile"),
        ),
        ("Energy burden (percentile)", attr("energy_burden_pctile")),
        ("PM2.5 in the air (percentile)", attr("pm25_pctile")),
        (
            "Diesel particulate matter exposure (percentile)",
            attr("diesel_pctile"),
        ),
        (
            "Traffic proximity and volume (percentile)",
            attr("traffic_pctile"),
        ),
        (
            "Low income and high share of non-student residents",
            attr("low_income_nonstudent"),
        ),
    ];
    let stats = descriptive_stats(&columns).map_err(|e| fail(Stage::Report, e))?;
    out.write(
        "stats.csv",
        &stats
            .render(Format::Csv)
            .map_err(|e| fail(Stage::Report, e))?,
        Stage::Report,
    )?;

    let gender = percentage_rows(
        obs.iter()
            .map(|o| if o.female == 1 { "Female" } else { "Other" }.to_string())
            .collect(),
    );
    out.write(
        "gender_summary.csv",
        &gender
            .render(Format::Csv)
            .map_err(|e| fail(Stage::Report, e))?,
        Stage::Report,
    )?;
    let race = percentage_rows(
        obs.iter()
            .map(|o| o.race.clone().unwrap_or_else(|| "Unknown".to_string()))
            .collect(),
    );
    out.write(
        "race_summary.csv",
        &race
            .render(Format::Csv)
            .map_err(|e| fail(Stage::Report, e))?,
        Stage::Report,
    )?;

    let crosstab = topic_sentiment_crosstab(classified.iter().copied());
    out.write(
        "crosstab.csv",
        &crosstab
            .render(Format::Csv)
            .map_err(|e| fail(Stage::Report, e))?,
        Stage::Report,
    )?;
    Ok(())
}

/// Model file names written for `name`, in csv, json, markdown order.
pub fn model_files(name: &str) -> [String; 3] {
    [Format::Csv, Format::Json, Format::Markdown].map(|f| format!("model_{name}.{}", f.extension()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

/// Validates the config, then runs every stage in order.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let recipes: Vec<FeatureRecipe> = cfg
        .models
        .iter()
        .map(ModelSpec::recipe)
        .collect::<Result<_, _>>()?;
    let dir = cfg.output_path();
    fs::create_dir_all(&dir).map_err(|e| ConfigError::Invalid(format!("output_dir: {e}")))?;
    let mut out = Outputs {
        dir: dir.clone(),
        written: Vec::new(),
    };
    let mut counts = StageCounts::default();

    let mut inputs = BTreeMap::new();
    for (name, p) in cfg.inputs.named_paths() {
        let digest = sha256_file(&cfg.resolve(p)).map_err(|e| ConfigError::Read {
            path: p.display().to_string(),
            message: e.to_string(),
        })?;
        inputs.insert(name.to_string(), digest);
    }

    // ingest
    let parsed = parse_posts(&cfg.resolve(&cfg.inputs.posts), cfg.inputs.posts_format)
        .map_err(|e| fail(Stage::Ingest, e))?;
    counts.parsed = parsed.records.len();
    counts.rejected = parsed.errors.len();
    out.json("ingest_errors.json", &parsed.errors, Stage::Ingest)?;

    // filter
    let stopwords = match &cfg.inputs.stopwords {
        Some(p) => Stopwords::from_file(&cfg.resolve(p)).map_err(|e| fail(Stage::Filter, e))?,
        None => Stopwords::english(),
    };
    let keywords = KeywordSet::from_file(&cfg.resolve(&cfg.inputs.keywords))
        .map_err(|e| fail(Stage::Filter, e))?;
    let windowed = filter_window(parsed.records, cfg.window.from, cfg.window.to);
    counts.in_window = windowed.len();
    let mut relevant = Vec::new();
    for rec in windowed {
        let doc = TokenizedDoc::from_text(rec.post_id.clone(), &rec.text, &stopwords);
        if relevance_filter(&doc, &keywords).map_err(|e| fail(Stage::Filter, e))? {
            relevant.push((rec, doc));
        }
    }
    counts.relevant = relevant.len();
    if relevant.is_empty() {
        return Err(fail(Stage::Filter, "no relevant posts after filtering").into());
    }

    let demo = demographics_stage(cfg, &mut out)?;
    let docs: Vec<TokenizedDoc> = relevant.iter().map(|(_, d)| d.clone()).collect();
    let topics_k = topics_stage(cfg, &docs, &mut out)?;
    let text_model = classify_stage(cfg, &stopwords, &mut out)?;

    // sentiment
    let lexicon = SentimentLexicon::from_csv(&cfg.resolve(&cfg.inputs.lexicon))
        .map_err(|e| fail(Stage::Sentiment, e))?;

    // fuse
    let polygons =
        load_polygons(&cfg.resolve(&cfg.inputs.polygons)).map_err(|e| fail(Stage::Fuse, e))?;
    let table = AttributeTable::from_csv(&cfg.resolve(&cfg.inputs.attributes))
        .map_err(|e| fail(Stage::Fuse, e))?;
    let remote = RemoteGeocoder::from_env();
    let mut fused = Vec::new();
    let mut classified = Vec::with_capacity(relevant.len());
    let mut unmatched = Vec::new();
    let mut labeled_rows = csv::Writer::from_writer(Vec::new());
    for (rec, doc) in &relevant {
        let (category, category_score) = text_model.classify(&doc.tokens);
        let sentiment = score_sentiment(&doc.tokens, &lexicon);
        classified.push((category, sentiment));
        let (first, last) = names::split_display_name(&rec.display_name);
        let female = match &first {
            Some(f) => {
                counts.with_first_name += 1;
                u8::from(
                    demo.gender
                        .predict(f)
                        .map_err(|e| fail(Stage::Demographics, e))?
                        .label
                        == "Female",
                )
            }
            None => 0,
        };
        let race = match &last {
            Some(l) => {
                counts.with_last_name += 1;
                Some(
                    demo.race
                        .predict(l)
                        .map_err(|e| fail(Stage::Demographics, e))?
                        .label,
                )
            }
            None => None,
        };
        let resolution = resolve_geoid(rec.latitude, rec.longitude, &polygons, remote.as_ref());
        let attributes = match &resolution.geoid {
            Some(g) => {
                counts.located += 1;
                if resolution.source == GeoidSource::Remote {
                    counts.located_remote += 1;
                }
                match join_attributes(g, &table) {
                    Ok(a) => Some(a.clone()),
                    Err(e) => {
                        unmatched.push(
                            serde_json::json!({"post_id": rec.post_id, "error": e.to_string()}),
                        );
                        None
                    }
                }
            }
            None => {
                counts.unlocated += 1;
                None
            }
        };
        labeled_rows
            .serialize(LabeledPostRow {
                post_id: &rec.post_id,
                category: category.id(),
                category_score: format!("{category_score:.6}"),
                sentiment: sentiment.as_str(),
                female,
                race: race.as_deref().unwrap_or(""),
                geoid: resolution.geoid.as_ref().map_or("", |g| g.as_str()),
            })
            .map_err(|e| fail(Stage::Fuse, e))?;
        if attributes.is_some() {
            fused.push(FusedObservation {
                post_id: rec.post_id.clone(),
                category,
                sentiment,
                female,
                race,
                geoid: resolution.geoid.clone(),
                attributes,
            });
        }
    }
    counts.unmatched_attributes = unmatched.len();
    counts.fused = fused.len();
    let bytes = labeled_rows
        .into_inner()
        .map_err(|e| fail(Stage::Fuse, e.into_error()))?;
    out.write("posts_labeled.csv", &bytes, Stage::Fuse)?;
    out.json(
        "fusion.json",
        &serde_json::json!({
            "relevant": counts.relevant,
            "located": counts.located,
            "located_remote": counts.located_remote,
            "unlocated": counts.unlocated,
            "unmatched_attributes": unmatched,
            "fused": counts.fused,
        }),
        Stage::Fuse,
    )?;
    if fused.is_empty() {
        return Err(fail(
            Stage::Fuse,
            "no observation could be joined to block-group attributes",
        )
        .into());
    }

    // fit
    let mut models = Vec::new();
    for (spec, recipe) in cfg.models.iter().zip(&recipes) {
        let merr = |e: &dyn fmt::Display| PipelineError {
            stage: Stage::Fit,
            message: format!("model {}: {e}", spec.name),
        };
        let rows = fused
            .iter()
            .map(|o| derive_features(o, recipe))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| merr(&e))?;
        let y: Vec<bool> = fused.iter().map(|o| o.category == spec.category).collect();
        let design = DesignData::from_features(&y, &rows, &recipe.names()).map_err(|e| merr(&e))?;
        let fitted = fit(&design, &FitOptions::default()).map_err(|e| merr(&e))?;
        let report = FitReport::from_fit(spec.name.clone(), &fitted);
        for (f, name) in [Format::Csv, Format::Json, Format::Markdown]
            .into_iter()
            .zip(model_files(&spec.name))
        {
            out.write(&name, &report.render(f).map_err(|e| merr(&e))?, Stage::Fit)?;
        }
        models.push(ModelSummary {
            name: spec.name.clone(),
            n_obs: fitted.n_obs,
            positives: y.iter().filter(|&&b| b).count(),
            iterations: fitted.iterations,
            converged: fitted.converged,
            adjusted_rho_sq: round3(fitted.adjusted_rho_sq),
        });
    }

    report_stage(&fused, &classified, &mut out)?;

    let mut outputs = out.written.clone();
    outputs.push(MANIFEST_FILE.to_string());
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seeds: cfg.seeds,
        inputs,
        counts,
        topics_k,
        models,
        outputs,
    };
    out.json(MANIFEST_FILE, &manifest, Stage::Report)?;
    Ok(RunSummary {
        output_dir: dir,
        manifest,
    })
}
