//! Evaluation of text detectors with tightness-aware IoU metrics.
//!
//! Exact polygon areas feed pair scores (IoU, TIoU recall and precision,
//! coverage ratios), which feed the matching protocols (one-to-one IoU,
//! IC03, DetEval in either stage order, joint word and text-line), which
//! feed dataset-level summaries. [`run::run_eval`] drives the whole
//! pipeline from annotation files to a report.

pub mod aggregate;
pub mod annotation;
mod error;
pub mod eval;
pub mod geometry;
pub mod harness;
pub mod joint;
pub mod matching;
pub mod pair;
pub mod run;

pub use error::Error;
