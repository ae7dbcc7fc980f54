//! Visual attention entropy (VAE), base and relative VAE, AOI gaze-transition
//! entropy, classical fixation indices, and the inference layer that relates
//! them to per-page aesthetic ratings.
//!
//! The crate is organized bottom-up:
//!
//! - [`gaze_data`]: fixation records, TSV/CSV ingestion, rating aggregation.
//! - [`entropy`] and [`attention_map`]: Gaussian-mixture heatmaps and their
//!   Shannon entropy.
//! - [`aoi`]: AOI clustering and first-order Markov transition entropy.
//! - [`descriptive`]: the eight traditional indices.
//! - [`stats`] and [`sweep`]: Pearson correlation, one-way ANOVA with exact
//!   F-distribution p-values, and the time/sigma/subject-count sweeps.
//! - [`synth`]: seeded synthetic studies and the untruncated reference oracle.
//! - [`report`]: the end-to-end per-page metrics report.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aoi;
pub mod attention_map;
pub mod descriptive;
pub mod entropy;
pub mod error;
pub mod format;
pub mod gaze_data;
pub mod report;
pub mod stats;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
