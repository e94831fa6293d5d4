use thiserror::Error;

use crate::aggregate::AggregateError;
use crate::annotation::AnnotationError;
use crate::harness::HarnessError;
use crate::matching::ConfigError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{0}")]
    Usage(String),
    #[error("strict format checking rejected {} input issue(s):\n{}", .0.len(), .0.join("\n"))]
    Strict(Vec<String>),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error("malformed report: {0}")]
    Report(#[from] serde_json::Error),
}
