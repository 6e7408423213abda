//! Turns archived geotagged posts into fitted binary-logit models of public
//! attitude toward transport accessibility, socioeconomic disparity and
//! public-transport infrastructure.
//!
//! Stages, each in its own module:
//!
//! * [`ingest`]: post parsing, text cleaning, tokenization, keyword relevance
//! * [`names`]: gender and race inference from letter-count name features
//! * [`topics`]: LDA by collapsed Gibbs sampling and UMass coherence
//! * [`attention`]: scaled dot-product multi-head attention kernel
//! * [`text`]: topic category classifier and lexicon sentiment
//! * [`geo`]: point-in-polygon block-group assignment and feature recipes
//! * [`logit`]: binary logit maximum likelihood and adjusted rho-squared
//! * [`report`]: descriptive statistics, crosstabs and model tables
//! * [`pipeline`]: end-to-end runs driven by a TOML config
//!
//! The numeric kernels in [`logit`], [`attention`] and [`linalg`] are generic
//! over [`Scalar`]; the aliases below fix them to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attention;
pub mod fixture;
pub mod geo;
pub mod ingest;
pub mod linalg;
pub mod logit;
pub mod metrics;
pub mod names;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod text;
pub mod topics;

pub use scalar::Scalar;

pub type Matrix = linalg::Matrix<f64>;
pub type MatrixF32 = linalg::Matrix<f32>;
pub type DesignData = logit::DesignData<f64>;
pub type LogitFit = logit::LogitFit<f64>;
pub type FitOptions = logit::FitOptions<f64>;
pub type AttentionParams = attention::AttentionParams<f64>;
pub type AttentionHead = attention::AttentionHead<f64>;
