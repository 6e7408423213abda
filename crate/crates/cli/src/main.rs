use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use civic_core::attention::{head_weights, multi_head};
use civic_core::geo::{self, AttributeTable};
use civic_core::ingest::{self, KeywordSet, PostFormat, Stopwords, TokenizedDoc};
use civic_core::logit::{fit, DesignData};
use civic_core::names::{self, Algorithm, Hyperparams, NameModel, Task, TrainConfig};
use civic_core::pipeline::{self, RunConfig};
use civic_core::report::{CategoricalSummary, CrossTab, FitReport, Format, Render, StatTable};
use civic_core::text::{self, Categorizer};
use civic_core::topics::{self, LdaConfig};
use civic_core::{fixture, AttentionParams, FitOptions, Matrix};

#[derive(Parser)]
#[command(
    name = "civic",
    version,
    about = "Social-media attitude modeling toolkit"
)]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage from a TOML config.
    Pipeline(PipelineArgs),
    /// Parse, window and relevance-filter a post archive.
    Ingest(IngestArgs),
    /// Train a name classifier and report hold-out and cross-validated metrics.
    DemoTrain(DemoTrainArgs),
    /// Predict labels for names with a saved name model.
    DemoPredict(DemoPredictArgs),
    /// Fit LDA topics to relevant posts.
    Topics(TopicsArgs),
    /// Train the category classifier and label texts.
    Classify(ClassifyArgs),
    /// Score texts against a polarity lexicon.
    Sentiment(SentimentArgs),
    /// Assign coordinates to block groups and join their attributes.
    Fuse(FuseArgs),
    /// Fit a binary logit to a CSV of 0/1 outcomes and numeric regressors.
    Fit(FitArgs),
    /// Re-render a CSV table in another format.
    Report(ReportArgs),
    /// Scaled dot-product attention on a JSON input.
    Attention(AttentionArgs),
    /// Write the seeded synthetic input set.
    MakeFixture(MakeFixtureArgs),
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed_split: Option<u64>,
    #[arg(long)]
    seed_cv: Option<u64>,
    #[arg(long)]
    seed_lda: Option<u64>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    gender_algorithm: Option<AlgoArg>,
    #[arg(long)]
    race_algorithm: Option<AlgoArg>,
}

#[derive(Args)]
struct InputFilter {
    /// Post archive.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: String,
    /// Inclusive RFC 3339 window start.
    #[arg(long)]
    from: Option<String>,
    /// Inclusive RFC 3339 window end.
    #[arg(long)]
    to: Option<String>,
    #[arg(long)]
    keywords: Option<PathBuf>,
    /// Stopword file; the built-in English list is used otherwise.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    filter: InputFilter,
    /// Write the relevant tokenized posts here as JSON lines.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    NaiveBayes,
    Knn,
    DecisionTree,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::NaiveBayes => Algorithm::NaiveBayes,
            AlgoArg::Knn => Algorithm::Knn,
            AlgoArg::DecisionTree => Algorithm::DecisionTree,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Gender,
    Race,
}

#[derive(Args)]
struct DemoTrainArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    /// `name,label` CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "naive-bayes")]
    algorithm: AlgoArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 12)]
    max_depth: usize,
    #[arg(long, default_value_t = 5)]
    min_leaf: usize,
    /// Save the model trained on all examples.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoPredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(required = true)]
    names: Vec<String>,
}

#[derive(Args)]
struct TopicsArgs {
    #[command(flatten)]
    filter: InputFilter,
    /// Fixed topic count; otherwise K is chosen by coherence over the range.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    top_n: usize,
    #[arg(long, default_value_t = 2)]
    min_doc_freq: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    /// `text,label` CSV of labelled examples.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    texts: Vec<String>,
}

#[derive(Args)]
struct SentimentArgs {
    /// `word,polarity` CSV.
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(required = true)]
    texts: Vec<String>,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long)]
    polygons: PathBuf,
    #[arg(long)]
    attributes: PathBuf,
    /// Coordinates as `lat,lon`; repeatable.
    #[arg(long = "point", required = true, allow_hyphen_values = true)]
    points: Vec<String>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// 0/1 outcome column.
    #[arg(long)]
    outcome: String,
    /// Regressor columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    #[arg(long, default_value = "model")]
    name: String,
    #[arg(long, default_value = "markdown")]
    format: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableKind {
    Model,
    Stats,
    Summary,
    Crosstab,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "model")]
    kind: TableKind,
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Model name for markdown and JSON headers.
    #[arg(long, default_value = "model")]
    name: String,
}

#[derive(Args)]
struct AttentionArgs {
    /// JSON object `{"y": [[..]], "heads": [{"w_q": .., "w_k": .., "w_v": ..}]}`.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct MakeFixtureArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long, default_value_t = fixture::DEFAULT_SEED)]
    seed: u64,
}

/// Error tagged with the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: e.into(),
    }
}

fn stage_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: e.into(),
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        stage_err(e)
    }
}

type CmdResult = Result<Output, Failure>;

/// Result of a subcommand: JSON for `--json`, text otherwise.
struct Output {
    json: Value,
    text: String,
}

fn require(name: &str, path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(config_err(anyhow!("{name}: not found")))
    }
}

fn load_stopwords(path: Option<&Path>) -> Result<Stopwords, Failure> {
    match path {
        Some(p) => {
            require("stopwords", p)?;
            Ok(Stopwords::from_file(p)?)
        }
        None => Ok(Stopwords::english()),
    }
}

fn parse_time(
    s: Option<&str>,
    name: &str,
) -> Result<Option<chrono::DateTime<chrono::Utc>>, Failure> {
    s.map(|v| {
        chrono::DateTime::parse_from_rfc3339(v)
            .map(|t| t.with_timezone(&chrono::Utc))
            .map_err(|e| config_err(anyhow!("{name}: {e}")))
    })
    .transpose()
}

struct Filtered {
    parsed: usize,
    rejected: Vec<ingest::RecordError>,
    in_window: usize,
    docs: Vec<TokenizedDoc>,
}

fn filter_posts(f: &InputFilter) -> Result<Filtered, Failure> {
    require("input", &f.input)?;
    let format: PostFormat = f.format.parse().map_err(config_err)?;
    let from = parse_time(f.from.as_deref(), "from")?;
    let to = parse_time(f.to.as_deref(), "to")?;
    let keywords = match &f.keywords {
        Some(p) => {
            require("keywords", p)?;
            Some(KeywordSet::from_file(p)?)
        }
        None => None,
    };
    let stopwords = load_stopwords(f.stopwords.as_deref())?;
    let parsed = ingest::parse_posts(&f.input, format)?;
    let n_parsed = parsed.records.len();
    let windowed = ingest::filter_window(parsed.records, from, to);
    let in_window = windowed.len();
    let mut docs = Vec::new();
    for r in &windowed {
        let doc = TokenizedDoc::from_text(r.post_id.clone(), &r.text, &stopwords);
        let keep = match &keywords {
            Some(k) => ingest::relevance_filter(&doc, k)?,
            None => true,
        };
        if keep {
            docs.push(doc);
        }
    }
    Ok(Filtered {
        parsed: n_parsed,
        rejected: parsed.errors,
        in_window,
        docs,
    })
}

fn cmd_pipeline(a: &PipelineArgs) -> CmdResult {
    let mut cfg = RunConfig::load(&a.config).map_err(config_err)?;
    if let Some(d) = &a.output_dir {
        // flag paths are relative to the working directory, not the config
        cfg.output_dir = std::env::current_dir().map_err(config_err)?.join(d);
    }
    if let Some(s) = a.seed_split {
        cfg.seeds.split = s;
    }
    if let Some(s) = a.seed_cv {
        cfg.seeds.cv = s;
    }
    if let Some(s) = a.seed_lda {
        cfg.seeds.lda = s;
    }
    if let Some(k) = a.k_min {
        cfg.topics.k_min = k;
    }
    if let Some(k) = a.k_max {
        cfg.topics.k_max = k;
    }
    if let Some(i) = a.iterations {
        cfg.topics.iterations = i;
    }
    if let Some(g) = a.gender_algorithm {
        cfg.demographics.gender_algorithm = g.into();
    }
    if let Some(r) = a.race_algorithm {
        cfg.demographics.race_algorithm = r.into();
    }
    let summary = pipeline::run(&cfg).map_err(|e| Failure {
        code: e.exit_code() as u8,
        error: e.into(),
    })?;
    let c = summary.manifest.counts;
    let mut text = format!(
        "parsed {} (rejected {}), in window {}, relevant {}, fused {}\n",
        c.parsed, c.rejected, c.in_window, c.relevant, c.fused
    );
    for m in &summary.manifest.models {
        text.push_str(&format!(
            "model {}: N={} positives={} rho-bar^2={:.3}\n",
            m.name, m.n_obs, m.positives, m.adjusted_rho_sq
        ));
    }
    text.push_str(&format!("outputs in {}\n", summary.output_dir.display()));
    Ok(Output {
        json: serde_json::to_value(&summary)?,
        text,
    })
}

fn cmd_ingest(a: &IngestArgs) -> CmdResult {
    let f = filter_posts(&a.filter)?;
    if let Some(out) = &a.output {
        let mut buf = String::new();
        for d in &f.docs {
            buf.push_str(&serde_json::to_string(
                &json!({"post_id": d.post_id, "tokens": d.tokens}),
            )?);
            buf.push('\n');
        }
        fs::write(out, buf).with_context(|| format!("writing {}", out.display()))?;
    }
    let mut text = format!(
        "parsed {}, rejected {}, in window {}, relevant {}\n",
        f.parsed,
        f.rejected.len(),
        f.in_window,
        f.docs.len()
    );
    for e in &f.rejected {
        text.push_str(&format!("  line {}: {}\n", e.line, e.message));
    }
    Ok(Output {
        json: json!({
            "parsed": f.parsed,
            "rejected": f.rejected,
            "in_window": f.in_window,
            "relevant": f.docs.len(),
        }),
        text,
    })
}

fn cmd_demo_train(a: &DemoTrainArgs) -> CmdResult {
    require("input", &a.input)?;
    let examples = names::load_examples(&a.input).map_err(config_err)?;
    let task = match a.task {
        TaskArg::Gender => Task::Gender,
        TaskArg::Race => Task::Race,
    };
    let config = TrainConfig {
        task,
        algorithm: a.algorithm.into(),
        hyper: Hyperparams {
            alpha: a.alpha,
            k: a.k,
            max_depth: a.max_depth,
            min_leaf: a.min_leaf,
        },
        seed: a.seed,
        labels: None,
    };
    let (train, test) = names::split_train_test(&examples, a.train_fraction, a.seed)?;
    let mut labels: Vec<String> = examples.iter().map(|e| e.label.clone()).collect();
    labels.sort();
    labels.dedup();
    let holdout_model = names::train(
        &train,
        &TrainConfig {
            labels: Some(labels),
            ..config.clone()
        },
    )?;
    let holdout = names::evaluate(&holdout_model, &test)?;
    let cv = names::cross_validate(&examples, a.folds, &config)?;
    let model = names::train(&examples, &config)?;
    if let Some(p) = &a.model_out {
        model.save(p)?;
    }
    let text = format!(
        "{} {}: hold-out accuracy {:.3} (macro F1 {:.3}), {}-fold accuracy {:.3}\n",
        config.algorithm,
        match task {
            Task::Gender => "gender",
            Task::Race => "race",
        },
        holdout.accuracy,
        holdout.macro_f1(),
        a.folds,
        cv.accuracy
    );
    Ok(Output {
        json: json!({"holdout": holdout, "cross_validation": cv}),
        text,
    })
}

fn cmd_demo_predict(a: &DemoPredictArgs) -> CmdResult {
    require("model", &a.model)?;
    let model = NameModel::load(&a.model).map_err(config_err)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    for n in &a.names {
        let p = model.predict(n)?;
        text.push_str(&format!("{n}\t{}\t{:.3}\n", p.label, p.score));
        rows.push(json!({"name": n, "label": p.label, "score": p.score}));
    }
    Ok(Output {
        json: Value::Array(rows),
        text,
    })
}

fn cmd_topics(a: &TopicsArgs) -> CmdResult {
    let f = filter_posts(&a.filter)?;
    let corpus = topics::build_corpus(&f.docs, a.min_doc_freq)?;
    let config = LdaConfig {
        alpha: a.alpha,
        beta: a.beta,
        iterations: a.iterations,
        seed: a.seed,
    };
    let (k, scores) = match a.k {
        Some(k) => (k, None),
        None => {
            let s = topics::select_k(&corpus, a.k_min, a.k_max, &config, a.top_n)?;
            (s.best_k, Some(s.scores))
        }
    };
    let model = topics::fit_lda(&corpus, k, &config)?;
    let score = topics::coherence(&model, &corpus, a.top_n)?;
    let mut text = format!("K = {k}, UMass coherence {:.4}\n", score.value);
    let mut table = Vec::new();
    for t in 0..k {
        let words = topics::top_words(&model, t, a.top_n)?;
        let labels: Vec<String> = words
            .iter()
            .map(|(w, p)| topics::format_top_word(w, *p))
            .collect();
        text.push_str(&format!("topic {t}: {}\n", labels.join(", ")));
        table.push(json!({"topic": t, "words": words}));
    }
    Ok(Output {
        json: json!({"k": k, "selection": scores, "coherence": score, "topics": table}),
        text,
    })
}

fn cmd_classify(a: &ClassifyArgs) -> CmdResult {
    require("train", &a.train)?;
    let stopwords = load_stopwords(a.stopwords.as_deref())?;
    let labeled = text::load_labeled(&a.train, &stopwords).map_err(config_err)?;
    let model = text::train_text(&labeled)?;
    let mut rows = Vec::new();
    let mut out = String::new();
    for t in &a.texts {
        let tokens = ingest::tokenize(&ingest::clean_text(t), &stopwords);
        let (c, p) = model.classify(&tokens);
        out.push_str(&format!("{}\t{}\t{:.3}\t{t}\n", c.id(), c.name(), p));
        rows.push(json!({"text": t, "category": c.id(), "name": c.name(), "posterior": p}));
    }
    if a.texts.is_empty() {
        out = format!(
            "trained on {} documents, vocabulary {}\n",
            labeled.len(),
            model.vocab_size()
        );
    }
    Ok(Output {
        json: json!({"training_documents": labeled.len(), "vocabulary": model.vocab_size(), "predictions": rows}),
        text: out,
    })
}

fn cmd_sentiment(a: &SentimentArgs) -> CmdResult {
    require("lexicon", &a.lexicon)?;
    let lexicon = text::SentimentLexicon::from_csv(&a.lexicon).map_err(config_err)?;
    let stopwords = load_stopwords(a.stopwords.as_deref())?;
    let mut rows = Vec::new();
    let mut out = String::new();
    for t in &a.texts {
        let tokens = ingest::tokenize(&ingest::clean_text(t), &stopwords);
        let score = text::sentiment_score(&tokens, &lexicon);
        let label = text::score_sentiment(&tokens, &lexicon);
        out.push_str(&format!("{label}\t{score}\t{t}\n"));
        rows.push(json!({"text": t, "score": score, "sentiment": label}));
    }
    Ok(Output {
        json: Value::Array(rows),
        text: out,
    })
}

fn parse_point(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || config_err(anyhow!("point `{s}` must be `lat,lon`"));
    let (lat, lon) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        lat.trim().parse().map_err(|_| bad())?,
        lon.trim().parse().map_err(|_| bad())?,
    ))
}

fn cmd_fuse(a: &FuseArgs) -> CmdResult {
    require("polygons", &a.polygons)?;
    require("attributes", &a.attributes)?;
    let polygons = geo::load_polygons(&a.polygons)?;
    let table = AttributeTable::from_csv(&a.attributes)?;
    let remote = geo::RemoteGeocoder::from_env();
    let mut rows = Vec::new();
    let mut out = String::new();
    let mut errors = Vec::new();
    for p in &a.points {
        let (lat, lon) = parse_point(p)?;
        let r = geo::resolve_geoid(lat, lon, &polygons, remote.as_ref());
        let attrs = r.geoid.as_ref().map(|g| geo::join_attributes(g, &table));
        let (attrs, err) = match attrs {
            Some(Ok(a)) => (Some(a.clone()), None),
            Some(Err(e)) => (None, Some(e.to_string())),
            None => (None, None),
        };
        if let Some(e) = &err {
            errors.push(e.clone());
        }
        let geoid = r.geoid.as_ref().map(|g| g.to_string());
        out.push_str(&format!(
            "{lat},{lon}\t{}\n",
            geoid.as_deref().unwrap_or("-")
        ));
        rows.push(
            json!({"lat": lat, "lon": lon, "geoid": geoid, "attributes": attrs, "error": err}),
        );
    }
    for e in &errors {
        out.push_str(&format!("error: {e}\n"));
    }
    Ok(Output {
        json: json!({"points": rows, "errors": errors}),
        text: out,
    })
}

fn cmd_fit(a: &FitArgs, as_json: bool) -> CmdResult {
    require("data", &a.data)?;
    let format: Format = if as_json {
        Format::Json
    } else {
        a.format.parse().map_err(config_err)?
    };
    let mut reader = csv::Reader::from_path(&a.data).map_err(config_err)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| config_err(anyhow!("column `{name}` not in {}", a.data.display())))
    };
    let y_col = col(&a.outcome)?;
    let features: Vec<String> = if a.features.is_empty() {
        header
            .iter()
            .filter(|h| **h != a.outcome)
            .cloned()
            .collect()
    } else {
        a.features.clone()
    };
    let cols = features
        .iter()
        .map(|f| col(f))
        .collect::<Result<Vec<_>, _>>()?;
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64, Failure> {
            rec[c]
                .trim()
                .parse()
                .map_err(|_| stage_err(anyhow!("row {}: `{}` is not a number", i + 2, &rec[c])))
        };
        y.push(match rec[y_col].trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(stage_err(anyhow!(
                    "row {}: outcome `{other}` is not 0 or 1",
                    i + 2
                )))
            }
        });
        rows.push(
            cols.iter()
                .map(|&c| num(c))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    let design = DesignData::from_features(&y, &rows, &features)?;
    let fitted = fit(&design, &FitOptions::default())?;
    let report = FitReport::from_fit(a.name.clone(), &fitted);
    let bytes = report.render(format)?;
    Ok(Output {
        json: report.to_json_value(),
        text: String::from_utf8(bytes)?,
    })
}

fn cmd_report(a: &ReportArgs, as_json: bool) -> CmdResult {
    require("input", &a.input)?;
    let format: Format = if as_json {
        Format::Json
    } else {
        a.format.parse().map_err(config_err)?
    };
    let csv_text = fs::read_to_string(&a.input).map_err(config_err)?;
    let table: Box<dyn Render> = match a.kind {
        TableKind::Model => Box::new(FitReport::from_csv(a.name.clone(), &csv_text)?),
        TableKind::Stats => Box::new(StatTable::from_csv(&csv_text)?),
        TableKind::Summary => Box::new(CategoricalSummary::from_csv(&csv_text)?),
        TableKind::Crosstab => Box::new(CrossTab::from_csv(&csv_text)?),
    };
    Ok(Output {
        json: table.to_json_value(),
        text: String::from_utf8(table.render(format)?)?,
    })
}

fn cmd_attention(a: &AttentionArgs) -> CmdResult {
    #[derive(serde::Deserialize)]
    struct Input {
        y: Matrix,
        #[serde(flatten)]
        params: AttentionParams,
    }
    require("input", &a.input)?;
    let text = fs::read_to_string(&a.input).map_err(config_err)?;
    let input: Input = serde_json::from_str(&text).map_err(config_err)?;
    let weights = head_weights(&input.y, &input.params)?;
    let output = multi_head(&input.y, &input.params)?;
    let weights_rows: Vec<Vec<Vec<f64>>> = weights.iter().map(|w| w.to_rows()).collect();
    let mut out = String::new();
    for (h, w) in weights_rows.iter().enumerate() {
        out.push_str(&format!("head {h} weights:\n"));
        for row in w {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            out.push_str(&format!("  {}\n", cells.join(" ")));
        }
    }
    out.push_str("output:\n");
    for row in output.to_rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        out.push_str(&format!("  {}\n", cells.join(" ")));
    }
    Ok(Output {
        json: json!({"weights": weights_rows, "output": output.to_rows()}),
        text: out,
    })
}

fn cmd_make_fixture(a: &MakeFixtureArgs) -> CmdResult {
    let s = fixture::generate(&a.dir, a.seed)?;
    Ok(Output {
        json: json!({
            "dir": a.dir,
            "seed": a.seed,
            "posts": s.posts,
            "users": s.users,
            "block_groups": s.block_groups,
            "malformed": s.malformed,
            "files": fixture::FILES,
        }),
        text: format!(
            "wrote {} posts and {} block groups to {}\n",
            s.posts,
            s.block_groups,
            a.dir.display()
        ),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::DemoTrain(a) => cmd_demo_train(a),
        Command::DemoPredict(a) => cmd_demo_predict(a),
        Command::Topics(a) => cmd_topics(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Sentiment(a) => cmd_sentiment(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Fit(a) => cmd_fit(a, cli.json),
        Command::Report(a) => cmd_report(a, cli.json),
        Command::Attention(a) => cmd_attention(a),
        Command::MakeFixture(a) => cmd_make_fixture(a),
    };
    match result {
        Ok(out) => {
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&out.json).expect("values serialize")
                );
            } else {
                print!("{}", out.text);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
