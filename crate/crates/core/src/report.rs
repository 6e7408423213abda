//! Descriptive statistics, topic-by-sentiment crosstabs and model tables.
//!
//! Every table renders to CSV, JSON or Markdown. Numbers are printed with
//! three decimals; JSON output also carries the unrounded values under
//! `*_exact` keys. CSV output parses back into the same table, so a
//! csv -> parse -> csv cycle reproduces the original bytes.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::logit::LogitFit;
use crate::text::{Category, Sentiment};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("column `{0}` is empty")]
    EmptyColumn(String),
    #[error("column `{0}` contains a non-finite value")]
    NonFinite(String),
    #[error("unknown output format `{0}` (expected csv, json or markdown)")]
    UnknownFormat(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "markdown",
        })
    }
}

/// Three-decimal fixed formatting; negative zero prints as `0.000`.
pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// `x` rounded half away from zero to three decimals.
pub fn round3(x: f64) -> f64 {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub trait Render {
    fn to_csv(&self) -> Result<Vec<u8>, ReportError>;
    fn to_json_value(&self) -> Value;
    fn to_markdown(&self) -> String;

    fn render(&self, format: Format) -> Result<Vec<u8>, ReportError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.to_json_value())?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Markdown => Ok(self.to_markdown().into_bytes()),
        }
    }
}

/// Renders by format name; unknown names are an error.
pub fn render<R: Render + ?Sized>(table: &R, format: &str) -> Result<Vec<u8>, ReportError> {
    table.render(format.parse()?)
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, ReportError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner()
        .map_err(|e| ReportError::Csv(e.into_error().into()))
}

fn csv_records(text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>, ReportError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(ReportError::Parse {
            line: 1,
            message: format!(
                "expected header {}, found {}",
                header.join(","),
                found.join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        out.push(rec?);
    }
    Ok(out)
}

fn parse_num<T: FromStr>(field: &str, line: usize, what: &str) -> Result<T, ReportError> {
    field.trim().parse().map_err(|_| ReportError::Parse {
        line,
        message: format!("invalid {what} `{field}`"),
    })
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

fn md_table(header: &[&str], align: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!("|{}|\n", align.join("|")));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| md_cell(c)).collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatRow {
    pub variable: String,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StatTable {
    pub rows: Vec<StatRow>,
}

/// Mean, sample standard deviation (N - 1 denominator), minimum and maximum
/// of each named column. A single observation has standard deviation 0.
pub fn descriptive_stats<S: AsRef<str>>(
    columns: &[(S, Vec<f64>)],
) -> Result<StatTable, ReportError> {
    let mut rows = Vec::with_capacity(columns.len());
    for (name, values) in columns {
        let name = name.as_ref();
        if values.is_empty() {
            return Err(ReportError::EmptyColumn(name.to_string()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ReportError::NonFinite(name.to_string()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let std_dev = if values.len() > 1 {
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // summation rounding can leave the mean a hair outside [min, max]
        let mean = mean.clamp(min, max);
        rows.push(StatRow {
            variable: name.to_string(),
            mean,
            std_dev,
            min,
            max,
        });
    }
    Ok(StatTable { rows })
}

const STAT_HEADER: [&str; 5] = ["variable", "mean", "std_dev", "min", "max"];

impl StatTable {
    pub fn row(&self, variable: &str) -> Option<&StatRow> {
        self.rows.iter().find(|r| r.variable == variable)
    }

    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut rows = Vec::new();
        for (i, rec) in csv_records(text, &STAT_HEADER)?.iter().enumerate() {
            let line = i + 2;
            rows.push(StatRow {
                variable: rec[0].to_string(),
                mean: parse_num(&rec[1], line, "mean")?,
                std_dev: parse_num(&rec[2], line, "std_dev")?,
                min: parse_num(&rec[3], line, "min")?,
                max: parse_num(&rec[4], line, "max")?,
            });
        }
        Ok(Self { rows })
    }

    fn formatted(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.variable.clone(),
                    fmt3(r.mean),
                    fmt3(r.std_dev),
                    fmt3(r.min),
                    fmt3(r.max),
                ]
            })
            .collect()
    }
}

impl Render for StatTable {
    fn to_csv(&self) -> Result<Vec<u8>, ReportError> {
        csv_bytes(&STAT_HEADER, self.formatted())
    }

    fn to_json_value(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "variable": r.variable,
                    "mean": round3(r.mean),
                    "std_dev": round3(r.std_dev),
                    "min": round3(r.min),
                    "max": round3(r.max),
                    "mean_exact": r.mean,
                    "std_dev_exact": r.std_dev,
                    "min_exact": r.min,
                    "max_exact": r.max,
                })
            })
            .collect();
        json!({ "rows": rows })
    }

    fn to_markdown(&self) -> String {
        md_table(
            &[
                "Variable",
                "Mean",
                "Standard Deviation",
                "Minimum",
                "Maximum",
            ],
            &["---", "---:", "---:", "---:", "---:"],
            &self.formatted(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCount {
    pub level: String,
    pub count: u64,
    /// `100 * count / N`, rounded to three decimals.
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CategoricalSummary {
    pub rows: Vec<LevelCount>,
}

/// Level counts and percentages, ordered by descending count with ties
/// broken by level name.
pub fn categorical_summary<S: AsRef<str>>(column: &[S]) -> CategoricalSummary {
    let mut counts: std::collections::BTreeMap<&str, u64> = Default::default();
    for v in column {
        *counts.entry(v.as_ref()).or_default() += 1;
    }
    summary_from_counts(counts.into_iter().map(|(k, v)| (k.to_string(), v)))
}

/// Builds a summary from precomputed `(level, count)` pairs.
pub fn summary_from_counts<I: IntoIterator<Item = (String, u64)>>(counts: I) -> CategoricalSummary {
    let mut pairs: Vec<(String, u64)> = counts.into_iter().collect();
    let total: u64 = pairs.iter().map(|p| p.1).sum();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let rows = pairs
        .into_iter()
        .map(|(level, count)| LevelCount {
            percentage: if total == 0 {
                0.0
            } else {
                round3(100.0 * count as f64 / total as f64)
            },
            level,
            count,
        })
        .collect();
    CategoricalSummary { rows }
}

const LEVEL_HEADER: [&str; 3] = ["level", "count", "percentage"];

impl CategoricalSummary {
    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn level(&self, name: &str) -> Option<&LevelCount> {
        self.rows.iter().find(|r| r.level == name)
    }

    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut rows = Vec::new();
        for (i, rec) in csv_records(text, &LEVEL_HEADER)?.iter().enumerate() {
            let line = i + 2;
            rows.push(LevelCount {
                level: rec[0].to_string(),
                count: parse_num(&rec[1], line, "count")?,
                percentage: parse_num(&rec[2], line, "percentage")?,
            });
        }
        Ok(Self { rows })
    }

    fn formatted(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| vec![r.level.clone(), r.count.to_string(), fmt3(r.percentage)])
            .collect()
    }
}

impl Render for CategoricalSummary {
    fn to_csv(&self) -> Result<Vec<u8>, ReportError> {
        csv_bytes(&LEVEL_HEADER, self.formatted())
    }

    fn to_json_value(&self) -> Value {
        let total = self.total();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let exact = if total == 0 {
                    0.0
                } else {
                    100.0 * r.count as f64 / total as f64
                };
                json!({
                    "level": r.level,
                    "count": r.count,
                    "percentage": r.percentage,
                    "percentage_exact": exact,
                })
            })
            .collect();
        json!({ "total": total, "rows": rows })
    }

    fn to_markdown(&self) -> String {
        md_table(
            &["Level", "Count", "Percentage"],
            &["---", "---:", "---:"],
            &self.formatted(),
        )
    }
}

/// Count matrix with labelled rows and columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossTab {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// Posts per (category, sentiment) cell; rows follow category ids 0-3 and
/// columns are positive, neutral, negative.
pub fn topic_sentiment_crosstab<I>(observations: I) -> CrossTab
where
    I: IntoIterator<Item = (Category, Sentiment)>,
{
    let mut counts = vec![vec![0u64; Sentiment::ALL.len()]; Category::ALL.len()];
    for (c, s) in observations {
        counts[c.id() as usize][s.index()] += 1;
    }
    CrossTab {
        row_labels: Category::ALL.iter().map(|c| c.name().to_string()).collect(),
        col_labels: Sentiment::ALL
            .iter()
            .map(|s| s.as_str().to_string())
            .collect(),
        counts,
    }
}

impl CrossTab {
    pub fn get(&self, category: Category, sentiment: Sentiment) -> u64 {
        self.counts[category.id() as usize][sentiment.index()]
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        let mut out = vec![0; self.col_labels.len()];
        for row in &self.counts {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.row_totals().iter().sum()
    }

    fn header(&self) -> Vec<&str> {
        let mut h = vec!["topic"];
        h.extend(self.col_labels.iter().map(String::as_str));
        h
    }

    fn formatted(&self) -> Vec<Vec<String>> {
        self.row_labels
            .iter()
            .zip(&self.counts)
            .map(|(label, row)| {
                let mut cells = vec![label.clone()];
                cells.extend(row.iter().map(u64::to_string));
                cells
            })
            .collect()
    }

    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.first().map(String::as_str) != Some("topic") {
            return Err(ReportError::Parse {
                line: 1,
                message: "first column must be `topic`".to_string(),
            });
        }
        let col_labels = header[1..].to_vec();
        let mut row_labels = Vec::new();
        let mut counts = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            row_labels.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|f| parse_num(f, line, "count"))
                .collect::<Result<Vec<u64>, _>>()?;
            counts.push(row);
        }
        Ok(Self {
            row_labels,
            col_labels,
            counts,
        })
    }
}

impl Render for CrossTab {
    fn to_csv(&self) -> Result<Vec<u8>, ReportError> {
        csv_bytes(&self.header(), self.formatted())
    }

    fn to_json_value(&self) -> Value {
        json!({
            "rows": self.row_labels,
            "columns": self.col_labels,
            "counts": self.counts,
            "row_totals": self.row_totals(),
            "col_totals": self.col_totals(),
            "total": self.total(),
        })
    }

    fn to_markdown(&self) -> String {
        let mut header = vec!["Topic"];
        header.extend(self.col_labels.iter().map(String::as_str));
        let mut align = vec!["---"];
        align.extend(std::iter::repeat_n("---:", self.col_labels.len()));
        md_table(&header, &align, &self.formatted())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefRow {
    pub variable: String,
    pub parameter: f64,
    pub t_stat: f64,
}

/// One binary logit model in the layout of a published estimation table:
/// header statistics followed by one parameter / t-stat row per variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub model: String,
    pub n_obs: usize,
    pub ll_full: f64,
    pub ll_null: f64,
    pub adjusted_rho_sq: f64,
    pub coefficients: Vec<CoefRow>,
}

pub const ROW_N_OBS: &str = "Number of observations";
pub const ROW_LL_FULL: &str = "Log-likelihood value of full model";
pub const ROW_LL_NULL: &str = "Log-likelihood value of null model";
pub const ROW_RHO: &str = "Adjusted Rho-squared value against null model";
const FIT_HEADER: [&str; 3] = ["variable", "parameter", "t-stat"];

impl FitReport {
    pub fn from_fit(model: impl Into<String>, fit: &LogitFit<f64>) -> Self {
        let coefficients = fit
            .names
            .iter()
            .zip(&fit.beta)
            .zip(&fit.t_stats)
            .map(|((name, &parameter), &t_stat)| CoefRow {
                variable: name.clone(),
                parameter,
                t_stat,
            })
            .collect();
        Self {
            model: model.into(),
            n_obs: fit.n_obs,
            ll_full: fit.ll,
            ll_null: fit.ll_null,
            adjusted_rho_sq: fit.adjusted_rho_sq,
            coefficients,
        }
    }

    pub fn coefficient(&self, variable: &str) -> Option<&CoefRow> {
        self.coefficients.iter().find(|c| c.variable == variable)
    }

    fn formatted(&self) -> Vec<Vec<String>> {
        let mut rows = vec![
            vec![ROW_N_OBS.to_string(), self.n_obs.to_string(), String::new()],
            vec![ROW_LL_FULL.to_string(), fmt3(self.ll_full), String::new()],
            vec![ROW_LL_NULL.to_string(), fmt3(self.ll_null), String::new()],
            vec![
                ROW_RHO.to_string(),
                fmt3(self.adjusted_rho_sq),
                String::new(),
            ],
        ];
        rows.extend(
            self.coefficients
                .iter()
                .map(|c| vec![c.variable.clone(), fmt3(c.parameter), fmt3(c.t_stat)]),
        );
        rows
    }

    /// Parses the CSV layout written by [`Render::to_csv`]; the model name is
    /// not part of that layout and is supplied by the caller.
    pub fn from_csv(model: impl Into<String>, text: &str) -> Result<Self, ReportError> {
        let recs = csv_records(text, &FIT_HEADER)?;
        if recs.len() < 4 {
            return Err(ReportError::Parse {
                line: recs.len() + 2,
                message: "missing header statistics rows".to_string(),
            });
        }
        let expect = |i: usize, label: &str| -> Result<&str, ReportError> {
            if &recs[i][0] != label {
                return Err(ReportError::Parse {
                    line: i + 2,
                    message: format!("expected `{label}`, found `{}`", &recs[i][0]),
                });
            }
            Ok(&recs[i][1])
        };
        let n_obs = parse_num(expect(0, ROW_N_OBS)?, 2, "observation count")?;
        let ll_full = parse_num(expect(1, ROW_LL_FULL)?, 3, "log-likelihood")?;
        let ll_null = parse_num(expect(2, ROW_LL_NULL)?, 4, "log-likelihood")?;
        let adjusted_rho_sq = parse_num(expect(3, ROW_RHO)?, 5, "rho-squared")?;
        let mut coefficients = Vec::new();
        for (i, rec) in recs.iter().enumerate().skip(4) {
            let line = i + 2;
            coefficients.push(CoefRow {
                variable: rec[0].to_string(),
                parameter: parse_num(&rec[1], line, "parameter")?,
                t_stat: parse_num(&rec[2], line, "t-stat")?,
            });
        }
        Ok(Self {
            model: model.into(),
            n_obs,
            ll_full,
            ll_null,
            adjusted_rho_sq,
            coefficients,
        })
    }
}

impl Render for FitReport {
    fn to_csv(&self) -> Result<Vec<u8>, ReportError> {
        csv_bytes(&FIT_HEADER, self.formatted())
    }

    fn to_json_value(&self) -> Value {
        let coefficients: Vec<Value> = self
            .coefficients
            .iter()
            .map(|c| {
                json!({
                    "variable": c.variable,
                    "parameter": round3(c.parameter),
                    "t_stat": round3(c.t_stat),
                    "parameter_exact": c.parameter,
                    "t_stat_exact": c.t_stat,
                })
            })
            .collect();
        json!({
            "model": self.model,
            "n_obs": self.n_obs,
            "ll_full": round3(self.ll_full),
            "ll_null": round3(self.ll_null),
            "adjusted_rho_sq": round3(self.adjusted_rho_sq),
            "ll_full_exact": self.ll_full,
            "ll_null_exact": self.ll_null,
            "adjusted_rho_sq_exact": self.adjusted_rho_sq,
            "coefficients": coefficients,
        })
    }

    fn to_markdown(&self) -> String {
        let mut out = format!("### {}\n\n", self.model);
        out.push_str(&md_table(
            &["Variable", "Parameter", "t-stat"],
            &["---", "---:", "---:"],
            &self.formatted(),
        ));
        out
    }
}
