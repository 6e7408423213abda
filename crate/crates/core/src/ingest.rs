//! Archived post parsing, text cleaning, tokenization and keyword relevance.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: &'static str },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown post format `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),
    #[error("keyword set is empty")]
    EmptyKeywords,
}

/// One geotagged post with author metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: String,
    pub user_id: String,
    pub display_name: String,
    pub profile_description: String,
    pub text: String,
    pub latitude: f64,
    pub longitude: f64,
    pub timestamp: DateTime<Utc>,
}

/// A rejected input row; parsing continues past it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordError {
    pub line: usize,
    pub post_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedPosts {
    pub records: Vec<PostRecord>,
    pub errors: Vec<RecordError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostFormat {
    Jsonl,
    Csv,
}

impl FromStr for PostFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdValue {
    Text(String),
    Int(i64),
    Uint(u64),
}

impl From<IdValue> for String {
    fn from(v: IdValue) -> Self {
        match v {
            IdValue::Text(s) => s,
            IdValue::Int(i) => i.to_string(),
            IdValue::Uint(u) => u.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct JsonPost {
    id: IdValue,
    user_id: IdValue,
    #[serde(default)]
    name: String,
    #[serde(default)]
    description: String,
    text: String,
    lat: f64,
    lon: f64,
    created_at: String,
}

struct RawPost {
    id: String,
    user_id: String,
    name: String,
    description: String,
    text: String,
    lat: f64,
    lon: f64,
    created_at: String,
}

impl From<JsonPost> for RawPost {
    fn from(j: JsonPost) -> Self {
        Self {
            id: j.id.into(),
            user_id: j.user_id.into(),
            name: j.name,
            description: j.description,
            text: j.text,
            lat: j.lat,
            lon: j.lon,
            created_at: j.created_at,
        }
    }
}

impl RawPost {
    fn validate(self) -> Result<PostRecord, String> {
        if self.id.trim().is_empty() {
            return Err("empty post id".into());
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err("latitude out of range".into());
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err("longitude out of range".into());
        }
        let timestamp = DateTime::parse_from_rfc3339(self.created_at.trim())
            .map_err(|e| format!("bad created_at `{}`: {e}", self.created_at))?
            .with_timezone(&Utc);
        Ok(PostRecord {
            post_id: self.id,
            user_id: self.user_id,
            display_name: self.name,
            profile_description: self.description,
            text: self.text,
            latitude: self.lat,
            longitude: self.lon,
            timestamp,
        })
    }
}

/// Reads an archived post file. Malformed rows, out-of-range coordinates and
/// repeated ids become [`RecordError`]s; only I/O and header problems abort.
pub fn parse_posts(path: &Path, format: PostFormat) -> Result<ParsedPosts, IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let rows: Vec<(usize, Result<RawPost, String>)> = match format {
        PostFormat::Jsonl => {
            let mut rows = Vec::new();
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str::<JsonPost>(&line)
                    .map(RawPost::from)
                    .map_err(|e| format!("malformed line: {e}"));
                rows.push((idx + 1, parsed));
            }
            rows
        }
        PostFormat::Csv => read_csv_rows(path, file)?,
    };

    let mut out = ParsedPosts::default();
    let mut seen = HashSet::new();
    for (line, raw) in rows {
        let id_hint = raw.as_ref().ok().map(|r| r.id.clone());
        match raw.and_then(RawPost::validate) {
            Ok(rec) => {
                if seen.insert(rec.post_id.clone()) {
                    out.records.push(rec);
                } else {
                    out.errors.push(RecordError {
                        line,
                        message: format!("duplicate post id `{}`", rec.post_id),
                        post_id: Some(rec.post_id),
                    });
                }
            }
            Err(message) => out.errors.push(RecordError {
                line,
                post_id: id_hint,
                message,
            }),
        }
    }
    Ok(out)
}

/// Source line number with the parsed record or the reason it was rejected.
type NumberedRow = (usize, Result<RawPost, String>);

fn read_csv_rows(path: &Path, file: fs::File) -> Result<Vec<NumberedRow>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |column: &'static str| {
        headers
            .iter()
            .position(|h| h.trim() == column)
            .ok_or(IngestError::MissingColumn {
                path: path.display().to_string(),
                column,
            })
    };
    let idx = [
        col("id")?,
        col("user_id")?,
        col("name")?,
        col("description")?,
        col("text")?,
        col("lat")?,
        col("lon")?,
        col("created_at")?,
    ];
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                rows.push((line, Err(format!("malformed line: {e}"))));
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| rec.get(idx[i]).map(str::to_string);
        let parse = || -> Result<RawPost, String> {
            let get = |i: usize, name: &str| {
                field(i).ok_or_else(|| format!("malformed line: missing {name}"))
            };
            let num = |i: usize, name: &str| -> Result<f64, String> {
                get(i, name)?
                    .trim()
                    .parse()
                    .map_err(|_| format!("malformed line: {name} is not a number"))
            };
            Ok(RawPost {
                id: get(0, "id")?,
                user_id: get(1, "user_id")?,
                name: get(2, "name")?,
                description: get(3, "description")?,
                text: get(4, "text")?,
                lat: num(5, "lat")?,
                lon: num(6, "lon")?,
                created_at: get(7, "created_at")?,
            })
        };
        rows.push((line, parse()));
    }
    Ok(rows)
}

/// Keeps records whose timestamp lies in `[from, to]` (either bound optional).
pub fn filter_window(
    records: Vec<PostRecord>,
    from: Option<DateTime<Utc>>,
    to: Option<DateTime<Utc>>,
) -> Vec<PostRecord> {
    records
        .into_iter()
        .filter(|r| from.is_none_or(|f| r.timestamp >= f) && to.is_none_or(|t| r.timestamp <= t))
        .collect()
}

fn tag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^>]*>").expect("valid regex"))
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").expect("valid regex"))
}

/// Strips HTML tags and URLs, drops everything but ASCII letters and
/// whitespace, lowercases, and collapses whitespace.
pub fn clean_text(raw: &str) -> String {
    let no_tags = tag_re().replace_all(raw, " ");
    let no_urls = url_re().replace_all(&no_tags, " ");
    let kept: String = no_urls
        .chars()
        .filter_map(|c| {
            if c.is_ascii_alphabetic() {
                Some(c.to_ascii_lowercase())
            } else if c.is_whitespace() {
                Some(' ')
            } else {
                None
            }
        })
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Set of tokens removed during tokenization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

impl Stopwords {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Common English function words.
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    /// One token per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Self {
        Self(read_token_lines(text).collect())
    }

    pub fn from_file(path: &Path) -> Result<Self, IngestError> {
        Ok(Self::parse(&read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

fn read_token_lines(text: &str) -> impl Iterator<Item = String> + '_ {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Splits on whitespace and removes stopwords, preserving order.
pub fn tokenize(cleaned: &str, stopwords: &Stopwords) -> Vec<String> {
    cleaned
        .split_whitespace()
        .filter(|t| !stopwords.contains(t))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub post_id: String,
    pub tokens: Vec<String>,
}

impl TokenizedDoc {
    pub fn from_text(post_id: impl Into<String>, raw: &str, stopwords: &Stopwords) -> Self {
        Self {
            post_id: post_id.into(),
            tokens: tokenize(&clean_text(raw), stopwords),
        }
    }
}

/// Curated relevance keywords.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordSet(BTreeSet<String>);

impl KeywordSet {
    pub fn parse(text: &str) -> Self {
        Self(read_token_lines(text).collect())
    }

    pub fn from_file(path: &Path) -> Result<Self, IngestError> {
        Ok(Self::parse(&read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &Self) -> Self {
        Self(self.0.union(&other.0).cloned().collect())
    }
}

impl<S: Into<String>> FromIterator<S> for KeywordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

/// True iff the document shares at least one token with the keyword set.
pub fn relevance_filter(doc: &TokenizedDoc, keywords: &KeywordSet) -> Result<bool, IngestError> {
    if keywords.is_empty() {
        return Err(IngestError::EmptyKeywords);
    }
    Ok(doc.tokens.iter().any(|t| keywords.contains(t)))
}
