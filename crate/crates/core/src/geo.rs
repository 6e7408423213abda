//! Block-group assignment by point-in-polygon, attribute joins and the
//! indicator features that enter the choice models.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::text::{Category, Sentiment};

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("geoid `{0}` must be 12 characters")]
    BadGeoid(String),
    #[error("feature {index}: {message}")]
    Feature { index: usize, message: String },
    #[error("duplicate geoid `{0}` in attribute table")]
    DuplicateGeoid(String),
    #[error("attribute `{field}` = {value} out of range for geoid {geoid}")]
    OutOfRange {
        geoid: String,
        field: &'static str,
        value: f64,
    },
    #[error("unmatched block group {0}")]
    UnmatchedBlockGroup(Geoid),
    #[error("recipe references unknown field `{0}`")]
    UnknownField(String),
    #[error("observation {0} has no block-group attributes")]
    MissingAttributes(String),
}

/// 12-character census block-group identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Geoid(String);

impl Geoid {
    pub fn new(s: impl Into<String>) -> Result<Self, GeoError> {
        let s = s.into();
        if s.chars().count() == 12 {
            Ok(Self(s))
        } else {
            Err(GeoError::BadGeoid(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Geoid {
    type Error = GeoError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<Geoid> for String {
    fn from(g: Geoid) -> String {
        g.0
    }
}

impl fmt::Display for Geoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Closed ring of `(longitude, latitude)` vertices; the closing vertex is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring(Vec<(f64, f64)>);

impl Ring {
    pub fn new(mut pts: Vec<(f64, f64)>) -> Result<Self, String> {
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        let mut distinct = pts.clone();
        distinct.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        distinct.dedup();
        if distinct.len() < 3 {
            return Err("ring needs at least 3 distinct vertices".into());
        }
        if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err("ring has non-finite coordinates".into());
        }
        Ok(Self(pts))
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.0
    }

    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.0.len();
        (0..n).map(move |i| (self.0[i], self.0[(i + 1) % n]))
    }

    fn on_boundary(&self, x: f64, y: f64) -> bool {
        self.edges().any(|(a, b)| on_segment(a, b, (x, y)))
    }

    /// Even-odd ray cast toward +x.
    fn crosses_odd(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for ((xi, yi), (xj, yj)) in self.edges() {
            if (yi > y) != (yj > y) {
                let x_cross = xi + (y - yi) * (xj - xi) / (yj - yi);
                if x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn translated(&self, dx: f64, dy: f64) -> Self {
        Self(self.0.iter().map(|&(x, y)| (x + dx, y + dy)).collect())
    }
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    let len = (b.0 - a.0).abs().max((b.1 - a.1).abs()).max(1.0);
    if cross.abs() > 1e-12 * len * len {
        return false;
    }
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// One polygon: outer boundary plus holes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonPart {
    pub outer: Ring,
    pub holes: Vec<Ring>,
}

impl PolygonPart {
    /// Boundary points (of the outer ring or of a hole) count as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        if self.outer.on_boundary(x, y) {
            return true;
        }
        if !self.outer.crosses_odd(x, y) {
            return false;
        }
        for hole in &self.holes {
            if hole.on_boundary(x, y) {
                return true;
            }
            if hole.crosses_odd(x, y) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGroupPolygon {
    pub geoid: Geoid,
    pub parts: Vec<PolygonPart>,
    bbox: (f64, f64, f64, f64),
}

impl BlockGroupPolygon {
    pub fn new(geoid: Geoid, parts: Vec<PolygonPart>) -> Self {
        let mut bbox = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for p in &parts {
            for &(x, y) in p.outer.vertices() {
                bbox = (bbox.0.min(x), bbox.1.min(y), bbox.2.max(x), bbox.3.max(y));
            }
        }
        Self { geoid, parts, bbox }
    }

    /// Single-ring polygon from `(lon, lat)` vertices.
    pub fn simple(geoid: Geoid, outer: Vec<(f64, f64)>) -> Result<Self, String> {
        Ok(Self::new(
            geoid,
            vec![PolygonPart {
                outer: Ring::new(outer)?,
                holes: vec![],
            }],
        ))
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.bbox
    }

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        let (x0, y0, x1, y1) = self.bbox;
        if lon < x0 || lon > x1 || lat < y0 || lat > y1 {
            return false;
        }
        self.parts.iter().any(|p| p.contains(lon, lat))
    }

    pub fn translated(&self, dlon: f64, dlat: f64) -> Self {
        let parts = self
            .parts
            .iter()
            .map(|p| PolygonPart {
                outer: p.outer.translated(dlon, dlat),
                holes: p.holes.iter().map(|h| h.translated(dlon, dlat)).collect(),
            })
            .collect();
        Self::new(self.geoid.clone(), parts)
    }
}

/// First polygon (in input order) containing the point.
pub fn locate(lat: f64, lon: f64, polygons: &[BlockGroupPolygon]) -> Option<&Geoid> {
    polygons
        .iter()
        .find(|p| p.contains(lon, lat))
        .map(|p| &p.geoid)
}

/// Parses a GeoJSON FeatureCollection with `properties.GEOID` and
/// Polygon/MultiPolygon geometries.
pub fn parse_geojson(text: &str) -> Result<Vec<BlockGroupPolygon>, GeoError> {
    let root: Value = serde_json::from_str(text).map_err(|e| GeoError::Feature {
        index: 0,
        message: e.to_string(),
    })?;
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| GeoError::Feature {
            index: 0,
            message: "expected a FeatureCollection".into(),
        })?;
    features
        .iter()
        .enumerate()
        .map(|(index, f)| {
            let err = |message: String| GeoError::Feature { index, message };
            let geoid = f
                .pointer("/properties/GEOID")
                .and_then(|g| match g {
                    Value::String(s) => Some(s.clone()),
                    Value::Number(n) => Some(n.to_string()),
                    _ => None,
                })
                .ok_or_else(|| err("missing properties.GEOID".into()))?;
            let geoid = Geoid::new(geoid)?;
            let geom = f
                .get("geometry")
                .ok_or_else(|| err("missing geometry".into()))?;
            let coords = geom
                .get("coordinates")
                .ok_or_else(|| err("missing coordinates".into()))?;
            let parts = match geom.get("type").and_then(Value::as_str) {
                Some("Polygon") => vec![parse_polygon(coords).map_err(err)?],
                Some("MultiPolygon") => coords
                    .as_array()
                    .ok_or_else(|| err("MultiPolygon coordinates must be an array".into()))?
                    .iter()
                    .map(parse_polygon)
                    .collect::<Result<_, _>>()
                    .map_err(err)?,
                other => return Err(err(format!("unsupported geometry type {other:?}"))),
            };
            Ok(BlockGroupPolygon::new(geoid, parts))
        })
        .collect()
}

fn parse_polygon(v: &Value) -> Result<PolygonPart, String> {
    let rings = v.as_array().ok_or("polygon must be an array of rings")?;
    let mut parsed = rings.iter().map(parse_ring);
    let outer = parsed.next().ok_or("polygon has no rings")??;
    let holes = parsed.collect::<Result<_, _>>()?;
    Ok(PolygonPart { outer, holes })
}

fn parse_ring(v: &Value) -> Result<Ring, String> {
    let pts = v
        .as_array()
        .ok_or("ring must be an array of positions")?
        .iter()
        .map(|p| match p.as_array().map(Vec::as_slice) {
            Some([x, y, ..]) => match (x.as_f64(), y.as_f64()) {
                (Some(x), Some(y)) => Ok((x, y)),
                _ => Err("non-numeric position".to_string()),
            },
            _ => Err("position needs two numbers".to_string()),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ring::new(pts)
}

pub fn load_polygons(path: &Path) -> Result<Vec<BlockGroupPolygon>, GeoError> {
    let text = std::fs::read_to_string(path).map_err(|e| GeoError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_geojson(&text)
}

fn flex_bool<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "1.0" => Ok(true),
        "0" | "false" | "no" | "0.0" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!(
            "not a boolean: `{other}`"
        ))),
    }
}

/// Socioeconomic and environmental attributes of one block group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGroupAttributes {
    pub geoid: Geoid,
    pub per_capita_income: f64,
    pub median_income: f64,
    pub percent_unemployed: f64,
    pub poverty_rate: f64,
    pub mean_travel_time: f64,
    pub hs_completion: f64,
    pub pm25_pctile: f64,
    pub diesel_pctile: f64,
    pub traffic_pctile: f64,
    pub agri_loss_pctile: f64,
    pub building_loss_pctile: f64,
    pub energy_burden_pctile: f64,
    #[serde(deserialize_with = "flex_bool")]
    pub disadvantaged: bool,
    #[serde(deserialize_with = "flex_bool")]
    pub low_income_nonstudent: bool,
}

/// Numeric fields a recipe may reference.
pub const ATTRIBUTE_FIELDS: [&str; 14] = [
    "per_capita_income",
    "median_income",
    "percent_unemployed",
    "poverty_rate",
    "mean_travel_time",
    "hs_completion",
    "pm25_pctile",
    "diesel_pctile",
    "traffic_pctile",
    "agri_loss_pctile",
    "building_loss_pctile",
    "energy_burden_pctile",
    "disadvantaged",
    "low_income_nonstudent",
];

impl BlockGroupAttributes {
    pub fn field(&self, name: &str) -> Option<f64> {
        Some(match name {
            "per_capita_income" => self.per_capita_income,
            "median_income" => self.median_income,
            "percent_unemployed" => self.percent_unemployed,
            "poverty_rate" => self.poverty_rate,
            "mean_travel_time" => self.mean_travel_time,
            "hs_completion" => self.hs_completion,
            "pm25_pctile" => self.pm25_pctile,
            "diesel_pctile" => self.diesel_pctile,
            "traffic_pctile" => self.traffic_pctile,
            "agri_loss_pctile" => self.agri_loss_pctile,
            "building_loss_pctile" => self.building_loss_pctile,
            "energy_burden_pctile" => self.energy_burden_pctile,
            "disadvantaged" => f64::from(u8::from(self.disadvantaged)),
            "low_income_nonstudent" => f64::from(u8::from(self.low_income_nonstudent)),
            _ => return None,
        })
    }

    pub fn is_percentile(name: &str) -> bool {
        name.ends_with("_pctile")
    }

    fn validate(&self) -> Result<(), GeoError> {
        let check = |field: &'static str, value: f64, lo: f64, hi: f64| {
            if value.is_finite() && value >= lo && value <= hi {
                Ok(())
            } else {
                Err(GeoError::OutOfRange {
                    geoid: self.geoid.to_string(),
                    field,
                    value,
                })
            }
        };
        check("per_capita_income", self.per_capita_income, 0.0, f64::MAX)?;
        check("median_income", self.median_income, 0.0, f64::MAX)?;
        check("mean_travel_time", self.mean_travel_time, 0.0, f64::MAX)?;
        for (field, v) in [
            ("percent_unemployed", self.percent_unemployed),
            ("poverty_rate", self.poverty_rate),
            ("hs_completion", self.hs_completion),
            ("pm25_pctile", self.pm25_pctile),
            ("diesel_pctile", self.diesel_pctile),
            ("traffic_pctile", self.traffic_pctile),
            ("agri_loss_pctile", self.agri_loss_pctile),
            ("building_loss_pctile", self.building_loss_pctile),
            ("energy_burden_pctile", self.energy_burden_pctile),
        ] {
            check(field, v, 0.0, 100.0)?;
        }
        Ok(())
    }
}

/// Read-only `geoid → attributes` lookup.
#[derive(Debug, Clone, Default)]
pub struct AttributeTable(HashMap<Geoid, BlockGroupAttributes>);

impl AttributeTable {
    pub fn from_rows(rows: Vec<BlockGroupAttributes>) -> Result<Self, GeoError> {
        let mut map = HashMap::with_capacity(rows.len());
        for row in rows {
            row.validate()?;
            let key = row.geoid.clone();
            if map.insert(key.clone(), row).is_some() {
                return Err(GeoError::DuplicateGeoid(key.to_string()));
            }
        }
        Ok(Self(map))
    }

    pub fn from_csv(path: &Path) -> Result<Self, GeoError> {
        let input_err = |message: String| GeoError::Input {
            path: path.display().to_string(),
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| input_err(e.to_string()))?;
        let rows = reader
            .deserialize::<BlockGroupAttributes>()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| input_err(e.to_string()))?;
        Self::from_rows(rows)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, geoid: &Geoid) -> Option<&BlockGroupAttributes> {
        self.0.get(geoid)
    }
}

pub fn join_attributes<'a>(
    geoid: &Geoid,
    table: &'a AttributeTable,
) -> Result<&'a BlockGroupAttributes, GeoError> {
    table
        .get(geoid)
        .ok_or_else(|| GeoError::UnmatchedBlockGroup(geoid.clone()))
}

/// A post enriched with inferred demographics, labels and block-group data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedObservation {
    pub post_id: String,
    pub category: Category,
    pub sentiment: Sentiment,
    /// 1 for a Female prediction, 0 otherwise.
    pub female: u8,
    /// Predicted race label, `None` when the name could not be classified.
    pub race: Option<String>,
    pub geoid: Option<Geoid>,
    pub attributes: Option<BlockGroupAttributes>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dummy {
    Female,
    White,
    Asian,
    Positive,
    Neutral,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    /// `1` when `field > threshold`, else `0`.
    Indicator {
        field: String,
        threshold: f64,
    },
    /// `field / divisor`.
    Scaled {
        field: String,
        divisor: f64,
    },
    /// The field value as-is (booleans map to 0/1).
    Raw {
        field: String,
    },
    Dummy {
        dummy: Dummy,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Row label in model reports.
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    fn new(name: &str, kind: FeatureKind) -> Self {
        Self {
            name: name.to_string(),
            kind,
        }
    }

    fn dummy(name: &str, dummy: Dummy) -> Self {
        Self::new(name, FeatureKind::Dummy { dummy })
    }

    fn indicator(name: &str, field: &str, threshold: f64) -> Self {
        Self::new(
            name,
            FeatureKind::Indicator {
                field: field.into(),
                threshold,
            },
        )
    }

    fn raw(name: &str, field: &str) -> Self {
        Self::new(
            name,
            FeatureKind::Raw {
                field: field.into(),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecipe {
    pub features: Vec<FeatureSpec>,
}

mod labels {
    pub const FEMALE: &str = "Female (1=Female, 0=Other)";
    pub const WHITE: &str = "Race: White (1=White, 0=Other)";
    pub const ASIAN: &str = "Race: Asian (1=Asian, 0=Other)";
    pub const NEUTRAL: &str = "Sentiment: Neutral";
    pub const NEGATIVE: &str = "Sentiment: Negative";
    pub const UNEMPLOYED: &str = "Percent unemployed greater than 0.01 (%)";
    pub const INCOME: &str = "Median income more than 50,000 ($) (1=Yes, 0=No)";
    pub const DISADVANTAGED: &str = "Identified as disadvantaged (1=Yes, 0=No)";
    pub const TRAFFIC: &str = "Traffic proximity and volume (percentile)";
    pub const AGRI: &str = "Expected agricultural loss rate greater than 0.01 (1=Yes, 0=No)";
    pub const BUILDING: &str = "Expected building loss rate greater than 0.01 (1=Yes, 0=No)";
    pub const ENERGY: &str = "Energy burden greater than 0.01 (percentile) (1=Yes, 0=No)";
    pub const PM25: &str = "PM2.5 in the air greater than 0.01 (1=Yes, 0=No)";
    pub const DIESEL: &str = "Diesel particulate matter exposure greater than 0.01 (1=Yes, 0=No)";
    pub const LOW_INCOME: &str = "Low income and high share of non-student residents (1=Yes, 0=No)";
}

impl FeatureRecipe {
    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    fn common(with_negative: bool, with_traffic: bool) -> Vec<FeatureSpec> {
        let mut v = vec![
            FeatureSpec::dummy(labels::FEMALE, Dummy::Female),
            FeatureSpec::dummy(labels::WHITE, Dummy::White),
            FeatureSpec::dummy(labels::ASIAN, Dummy::Asian),
            FeatureSpec::dummy(labels::NEUTRAL, Dummy::Neutral),
        ];
        if with_negative {
            v.push(FeatureSpec::dummy(labels::NEGATIVE, Dummy::Negative));
        }
        v.push(FeatureSpec::indicator(
            labels::UNEMPLOYED,
            "percent_unemployed",
            0.01,
        ));
        v.push(FeatureSpec::indicator(
            labels::INCOME,
            "median_income",
            50_000.0,
        ));
        v.push(FeatureSpec::raw(labels::DISADVANTAGED, "disadvantaged"));
        if with_traffic {
            v.push(FeatureSpec::new(
                labels::TRAFFIC,
                FeatureKind::Scaled {
                    field: "traffic_pctile".into(),
                    divisor: 100.0,
                },
            ));
        }
        v.push(FeatureSpec::indicator(
            labels::AGRI,
            "agri_loss_pctile",
            0.01,
        ));
        v
    }

    /// Regressors of the transport-accessibility model (15 plus constant).
    pub fn transport_accessibility() -> Self {
        let mut f = Self::common(true, true);
        f.push(FeatureSpec::indicator(
            labels::BUILDING,
            "building_loss_pctile",
            0.01,
        ));
        f.push(FeatureSpec::indicator(
            labels::ENERGY,
            "energy_burden_pctile",
            0.01,
        ));
        f.push(FeatureSpec::indicator(labels::PM25, "pm25_pctile", 0.01));
        f.push(FeatureSpec::indicator(
            labels::DIESEL,
            "diesel_pctile",
            0.01,
        ));
        f.push(FeatureSpec::raw(
            labels::LOW_INCOME,
            "low_income_nonstudent",
        ));
        Self { features: f }
    }

    /// Regressors of the socioeconomic-disparity model (14 plus constant).
    pub fn socioeconomic_disparity() -> Self {
        let mut f = Self::common(true, true);
        f.push(FeatureSpec::indicator(
            labels::BUILDING,
            "building_loss_pctile",
            0.01,
        ));
        f.push(FeatureSpec::indicator(
            labels::ENERGY,
            "energy_burden_pctile",
            0.01,
        ));
        f.push(FeatureSpec::indicator(labels::PM25, "pm25_pctile", 0.01));
        f.push(FeatureSpec::indicator(
            labels::DIESEL,
            "diesel_pctile",
            0.01,
        ));
        Self { features: f }
    }

    /// Regressors of the public-transport-infrastructure model (10 plus constant).
    pub fn public_transport_infrastructure() -> Self {
        let mut f = Self::common(false, false);
        f.push(FeatureSpec::indicator(labels::PM25, "pm25_pctile", 0.01));
        f.push(FeatureSpec::indicator(
            labels::DIESEL,
            "diesel_pctile",
            0.01,
        ));
        Self { features: f }
    }

    /// Fails on the first feature naming an unknown attribute field.
    pub fn validate(&self) -> Result<(), GeoError> {
        for f in &self.features {
            match &f.kind {
                FeatureKind::Indicator { field, .. }
                | FeatureKind::Scaled { field, .. }
                | FeatureKind::Raw { field } => {
                    if !ATTRIBUTE_FIELDS.contains(&field.as_str()) {
                        return Err(GeoError::UnknownField(field.clone()));
                    }
                }
                FeatureKind::Dummy { .. } => {}
            }
        }
        Ok(())
    }
}

/// Evaluates a recipe on one observation, in recipe order.
pub fn derive_features(
    obs: &FusedObservation,
    recipe: &FeatureRecipe,
) -> Result<Vec<f64>, GeoError> {
    let attrs = obs
        .attributes
        .as_ref()
        .ok_or_else(|| GeoError::MissingAttributes(obs.post_id.clone()))?;
    let field = |name: &str| {
        attrs
            .field(name)
            .ok_or_else(|| GeoError::UnknownField(name.to_string()))
    };
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    recipe
        .features
        .iter()
        .map(|f| {
            Ok(match &f.kind {
                FeatureKind::Indicator {
                    field: name,
                    threshold,
                } => flag(field(name)? > *threshold),
                FeatureKind::Scaled {
                    field: name,
                    divisor,
                } => field(name)? / divisor,
                FeatureKind::Raw { field: name } => field(name)?,
                FeatureKind::Dummy { dummy } => flag(match dummy {
                    Dummy::Female => obs.female == 1,
                    Dummy::White => obs.race.as_deref() == Some("White"),
                    Dummy::Asian => obs.race.as_deref() == Some("Asian"),
                    Dummy::Positive => obs.sentiment == Sentiment::Positive,
                    Dummy::Neutral => obs.sentiment == Sentiment::Neutral,
                    Dummy::Negative => obs.sentiment == Sentiment::Negative,
                }),
            })
        })
        .collect()
}

/// Environment variable naming the optional reverse-geocoding endpoint.
pub const GEOCODER_ENV: &str = "CIVIC_GEOCODER_URL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RemoteError {
    #[error("geocoder request timed out")]
    Timeout,
    #[error("geocoder returned HTTP {0}")]
    Status(u16),
    #[error("geocoder response malformed: {0}")]
    Malformed(String),
    #[error("geocoder transport failure: {0}")]
    Transport(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal blocking GET used by [`RemoteGeocoder`].
pub trait HttpTransport: Send + Sync {
    fn get(&self, url: &str, timeout: Duration) -> Result<HttpResponse, RemoteError>;
}

/// `ureq`-backed transport.
#[derive(Debug, Default, Clone, Copy)]
pub struct UreqTransport;

impl HttpTransport for UreqTransport {
    fn get(&self, url: &str, timeout: Duration) -> Result<HttpResponse, RemoteError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut resp = agent.get(url).call().map_err(|e| match e {
            ureq::Error::Timeout(_) => RemoteError::Timeout,
            other => RemoteError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => RemoteError::Timeout,
            other => RemoteError::Transport(other.to_string()),
        })?;
        Ok(HttpResponse { status, body })
    }
}

/// Client for `GET {endpoint}?lat={lat}&lon={lon}` returning `{"geoid": "..."}`.
pub struct RemoteGeocoder {
    endpoint: String,
    transport: Box<dyn HttpTransport>,
    timeout: Duration,
}

impl RemoteGeocoder {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self::with_transport(endpoint, Box::new(UreqTransport))
    }

    pub fn with_transport(endpoint: impl Into<String>, transport: Box<dyn HttpTransport>) -> Self {
        Self {
            endpoint: endpoint.into(),
            transport,
            timeout: Duration::from_secs(10),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Client for the endpoint in [`GEOCODER_ENV`], if set and nonempty.
    pub fn from_env() -> Option<Self> {
        std::env::var(GEOCODER_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .map(Self::new)
    }

    pub fn request_url(&self, lat: f64, lon: f64) -> String {
        let sep = if self.endpoint.contains('?') {
            '&'
        } else {
            '?'
        };
        format!("{}{sep}lat={lat}&lon={lon}", self.endpoint)
    }

    pub fn fetch_geoid(&self, lat: f64, lon: f64) -> Result<Geoid, RemoteError> {
        let resp = self
            .transport
            .get(&self.request_url(lat, lon), self.timeout)?;
        if !(200..300).contains(&resp.status) {
            return Err(RemoteError::Status(resp.status));
        }
        let v: Value =
            serde_json::from_str(&resp.body).map_err(|e| RemoteError::Malformed(e.to_string()))?;
        let raw = v
            .get("geoid")
            .and_then(Value::as_str)
            .ok_or_else(|| RemoteError::Malformed("missing `geoid` string".into()))?;
        Geoid::new(raw).map_err(|e| RemoteError::Malformed(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoidSource {
    Remote,
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub geoid: Option<Geoid>,
    pub source: GeoidSource,
    pub remote_error: Option<RemoteError>,
}

/// Uses the remote geocoder when configured, falling back to [`locate`] on
/// any remote failure.
pub fn resolve_geoid(
    lat: f64,
    lon: f64,
    polygons: &[BlockGroupPolygon],
    remote: Option<&RemoteGeocoder>,
) -> Resolution {
    let mut remote_error = None;
    if let Some(client) = remote {
        match client.fetch_geoid(lat, lon) {
            Ok(g) => {
                return Resolution {
                    geoid: Some(g),
                    source: GeoidSource::Remote,
                    remote_error: None,
                }
            }
            Err(e) => remote_error = Some(e),
        }
    }
    Resolution {
        geoid: locate(lat, lon, polygons).cloned(),
        source: GeoidSource::Local,
        remote_error,
    }
}
