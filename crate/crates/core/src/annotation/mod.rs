//! Ground-truth, detection and line-annotation records, plus ICDAR-style
//! text formats and dataset loading.

mod dataset;
mod parse;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Polygon};
use crate::joint::{JointError, LineAnnotation};

pub use dataset::{load_dataset, read_archive, Dataset, DatasetOptions, KeyPattern};
pub use parse::{
    format_detection_file, format_gt_file, format_line_file, format_membership,
    parse_detection_file, parse_gt_word_file, parse_line_file, parse_membership, Parsed,
};

pub const DEFAULT_SENTINEL: &str = "###";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Word,
    Line,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtInstance {
    pub id: usize,
    pub polygon: Polygon,
    pub transcription: Option<String>,
    pub dont_care: bool,
    pub granularity: Granularity,
}

impl GtInstance {
    pub fn word(id: usize, polygon: Polygon, transcription: Option<String>) -> Self {
        GtInstance {
            id,
            polygon,
            transcription,
            dont_care: false,
            granularity: Granularity::Word,
        }
    }

    pub fn dont_care(id: usize, polygon: Polygon) -> Self {
        GtInstance {
            id,
            polygon,
            transcription: Some(DEFAULT_SENTINEL.to_string()),
            dont_care: true,
            granularity: Granularity::Word,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: usize,
    pub polygon: Polygon,
    pub confidence: Option<f64>,
    pub transcription: Option<String>,
}

impl Detection {
    pub fn new(id: usize, polygon: Polygon) -> Self {
        Detection {
            id,
            polygon,
            confidence: None,
            transcription: None,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = Some(confidence);
        self
    }

    pub fn with_transcription(mut self, text: impl Into<String>) -> Self {
        self.transcription = Some(text.into());
        self
    }
}

/// Everything evaluated for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub key: String,
    pub gts: Vec<GtInstance>,
    /// Empty when the image has no line annotations.
    pub lines: Vec<LineAnnotation>,
    pub dets: Vec<Detection>,
}

impl ImageRecord {
    pub fn new(key: impl Into<String>, gts: Vec<GtInstance>, dets: Vec<Detection>) -> Self {
        ImageRecord {
            key: key.into(),
            gts,
            lines: Vec::new(),
            dets,
        }
    }
}

/// Coordinate columns of a text annotation line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoordFormat {
    /// `xmin,ymin,xmax,ymax`
    #[serde(rename = "icdar13-rect")]
    Icdar13Rect,
    /// `x1,y1,x2,y2,x3,y3,x4,y4`
    #[default]
    #[serde(rename = "icdar15-quad")]
    Icdar15Quad,
}

impl CoordFormat {
    pub fn columns(self) -> usize {
        match self {
            CoordFormat::Icdar13Rect => 4,
            CoordFormat::Icdar15Quad => 8,
        }
    }
}

impl FromStr for CoordFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "icdar13-rect" | "rect" => Ok(CoordFormat::Icdar13Rect),
            "icdar15-quad" | "quad" => Ok(CoordFormat::Icdar15Quad),
            other => Err(format!(
                "unknown coordinate format `{other}` (expected icdar13-rect or icdar15-quad)"
            )),
        }
    }
}

impl fmt::Display for CoordFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoordFormat::Icdar13Rect => "icdar13-rect",
            CoordFormat::Icdar15Quad => "icdar15-quad",
        })
    }
}

/// Column layout of a detection file, e.g. `quad+conf+text`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetLayout {
    pub coords: CoordFormat,
    pub confidence: bool,
    pub transcription: bool,
}

impl FromStr for DetLayout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('+');
        let coords = parts.next().unwrap_or_default().parse::<CoordFormat>()?;
        let mut layout = DetLayout {
            coords,
            confidence: false,
            transcription: false,
        };
        for p in parts {
            match p {
                "conf" if !layout.confidence && !layout.transcription => layout.confidence = true,
                "text" if !layout.transcription => layout.transcription = true,
                other => {
                    return Err(format!(
                        "bad detection layout `{s}` near `{other}` (expected e.g. quad+conf+text)"
                    ))
                }
            }
        }
        Ok(layout)
    }
}

impl fmt::Display for DetLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coords = match self.coords {
            CoordFormat::Icdar13Rect => "rect",
            CoordFormat::Icdar15Quad => "quad",
        };
        f.write_str(coords)?;
        if self.confidence {
            f.write_str("+conf")?;
        }
        if self.transcription {
            f.write_str("+text")?;
        }
        Ok(())
    }
}

impl Serialize for DetLayout {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DetLayout {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: invalid polygon: {source}")]
    InvalidPolygon {
        file: String,
        line: usize,
        #[source]
        source: GeometryError,
    },
    #[error("{file}: not valid UTF-8")]
    Encoding { file: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read archive {path}: {message}")]
    Archive { path: String, message: String },
    #[error("duplicate entry `{name}` in {path}")]
    Duplicate { name: String, path: String },
    #[error("detection file for image `{key}` has no ground-truth file")]
    OrphanDetection { key: String },
    #[error("line annotation file for image `{key}` has no ground-truth file")]
    OrphanLines { key: String },
    #[error("key pattern `{0}` must contain `{{key}}` exactly once")]
    BadPattern(String),
    #[error("cannot write {0}")]
    Unrepresentable(String),
    #[error("image `{key}`: {source}")]
    Lines {
        key: String,
        #[source]
        source: JointError,
    },
}
