//! Association auditing for contrastive image/text embedding spaces.
//!
//! The crate scores how strongly each text statement leans toward one of two
//! image galleries (difference of mean cosine similarities), attaches
//! percentile-bootstrap intervals, aggregates by category and calibrates the
//! overall magnitude against a label-swap null model.
//!
//! Modules, bottom-up:
//!
//! * [`embedding_io`]: the `emba/1` manifest + raw `f32le` payload format and a CSV alternative.
//! * [`taxonomy`]: statements, categories and prompt templates.
//! * [`association`]: normalization, template averaging, similarity matrices, scores.
//! * [`resampling`]: bootstrap intervals, the label-swap null and top-k ranking.
//! * [`audit`] and [`report`]: the end-to-end pipeline and its JSON/CSV/Markdown output.
//! * [`tools`]: file validation, plot data and cross-report comparison.

pub mod association;
pub mod audit;
pub mod embedding_io;
mod error;
pub mod report;
pub mod resampling;
pub mod rng;
pub mod taxonomy;
pub mod tools;

pub use error::{Error, Result};
