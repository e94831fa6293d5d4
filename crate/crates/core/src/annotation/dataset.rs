//! Joining per-image files from directories or zip archives.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;

use super::parse::{parse_detection_file, parse_gt_word_file, parse_line_file, parse_membership};
use super::{AnnotationError, CoordFormat, DetLayout, ImageRecord, DEFAULT_SENTINEL};
use crate::joint::{build_line_index, line_index_from_membership};

/// File-name pattern with a single `{key}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPattern {
    prefix: String,
    suffix: String,
}

impl KeyPattern {
    pub fn new(pattern: &str) -> Result<Self, AnnotationError> {
        match pattern.split_once("{key}") {
            Some((prefix, suffix)) if !suffix.contains("{key}") => Ok(KeyPattern {
                prefix: prefix.to_string(),
                suffix: suffix.to_string(),
            }),
            _ => Err(AnnotationError::BadPattern(pattern.to_string())),
        }
    }

    pub fn key_of<'a>(&self, name: &'a str) -> Option<&'a str> {
        let key = name
            .strip_prefix(&self.prefix)?
            .strip_suffix(&self.suffix)?;
        (!key.is_empty()).then_some(key)
    }

    pub fn file_name(&self, key: &str) -> String {
        format!("{}{}{}", self.prefix, key, self.suffix)
    }

    /// Name of the membership sidecar for a line file with this pattern.
    pub fn sidecar_name(&self, key: &str) -> String {
        format!("{}{}.members", self.prefix, key)
    }

    fn sidecar_key<'a>(&self, name: &'a str) -> Option<&'a str> {
        let key = name.strip_prefix(&self.prefix)?.strip_suffix(".members")?;
        (!key.is_empty()).then_some(key)
    }
}

impl std::fmt::Display for KeyPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{{key}}{}", self.prefix, self.suffix)
    }
}

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub gt_format: CoordFormat,
    pub det_layout: DetLayout,
    pub line_format: CoordFormat,
    pub gt_pattern: KeyPattern,
    pub det_pattern: KeyPattern,
    pub line_pattern: KeyPattern,
    pub sentinel: String,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            gt_format: CoordFormat::Icdar15Quad,
            det_layout: DetLayout::default(),
            line_format: CoordFormat::Icdar15Quad,
            gt_pattern: KeyPattern::new("gt_img_{key}.txt").expect("valid pattern"),
            det_pattern: KeyPattern::new("res_img_{key}.txt").expect("valid pattern"),
            line_pattern: KeyPattern::new("gt_img_{key}.txt").expect("valid pattern"),
            sentinel: DEFAULT_SENTINEL.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Sorted by key; numeric keys in numeric order.
    pub records: Vec<ImageRecord>,
    pub warnings: Vec<String>,
}

/// Integer keys first in numeric order, then the rest lexicographically.
pub(crate) fn compare_keys(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

/// Reads every file of a directory (recursively) or zip archive, keyed by
/// base name.
pub fn read_archive(path: &Path) -> Result<BTreeMap<String, Vec<u8>>, AnnotationError> {
    let display = path.display().to_string();
    let io = |source| AnnotationError::Io {
        path: display.clone(),
        source,
    };
    let meta = fs::metadata(path).map_err(io)?;
    let mut out = BTreeMap::new();
    let mut insert = |name: String, bytes: Vec<u8>| {
        if out.insert(name.clone(), bytes).is_some() {
            return Err(AnnotationError::Duplicate {
                name,
                path: display.clone(),
            });
        }
        Ok(())
    };
    if meta.is_dir() {
        let mut stack = vec![path.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(&dir).map_err(io)? {
                let p = entry.map_err(io)?.path();
                if p.is_dir() {
                    stack.push(p);
                } else if let Some(name) = p.file_name().and_then(|n| n.to_str()) {
                    let bytes = fs::read(&p).map_err(|source| AnnotationError::Io {
                        path: p.display().to_string(),
                        source,
                    })?;
                    insert(name.to_string(), bytes)?;
                }
            }
        }
    } else {
        let archive_err = |e: zip::result::ZipError| AnnotationError::Archive {
            path: display.clone(),
            message: e.to_string(),
        };
        let file = fs::File::open(path).map_err(io)?;
        let mut zip = zip::ZipArchive::new(file).map_err(archive_err)?;
        for i in 0..zip.len() {
            let mut entry = zip.by_index(i).map_err(archive_err)?;
            if entry.is_dir() {
                continue;
            }
            let name = entry
                .name()
                .rsplit('/')
                .next()
                .unwrap_or_default()
                .to_string();
            let mut bytes = Vec::new();
            entry.read_to_end(&mut bytes).map_err(io)?;
            insert(name, bytes)?;
        }
    }
    Ok(out)
}

/// Reads ground truth, detections and optional text lines and joins them
/// by image key.
pub fn load_dataset(
    gt: &Path,
    det: &Path,
    lines: Option<&Path>,
    opts: &DatasetOptions,
) -> Result<Dataset, AnnotationError> {
    let mut warnings = Vec::new();
    let gt_files = keyed(read_archive(gt)?, &opts.gt_pattern, None, &mut warnings)?;
    let det_files = keyed(read_archive(det)?, &opts.det_pattern, None, &mut warnings)?;
    let (line_files, sidecars) = match lines {
        Some(p) => {
            let mut sidecars = BTreeMap::new();
            let files = keyed(
                read_archive(p)?,
                &opts.line_pattern,
                Some(&mut sidecars),
                &mut warnings,
            )?;
            (files, sidecars)
        }
        None => Default::default(),
    };
    if let Some(key) = det_files.keys().find(|k| !gt_files.contains_key(*k)) {
        return Err(AnnotationError::OrphanDetection { key: key.clone() });
    }
    if let Some(key) = line_files.keys().find(|k| !gt_files.contains_key(*k)) {
        return Err(AnnotationError::OrphanLines { key: key.clone() });
    }
    let mut keys: Vec<&String> = gt_files.keys().collect();
    keys.sort_by(|a, b| compare_keys(a, b));

    let loaded: Vec<(ImageRecord, Vec<String>)> = keys
        .par_iter()
        .map(|&key| {
            let mut notes = Vec::new();
            let gt_name = opts.gt_pattern.file_name(key);
            let gts = parse_gt_word_file(&gt_files[key], opts.gt_format, &opts.sentinel, &gt_name)?;
            notes.extend(gts.warnings);
            let dets = match det_files.get(key) {
                Some(bytes) => {
                    let parsed = parse_detection_file(
                        bytes,
                        opts.det_layout,
                        &opts.det_pattern.file_name(key),
                    )?;
                    notes.extend(parsed.warnings);
                    parsed.items
                }
                None => {
                    notes.push(format!(
                        "image `{key}`: no detection file, all ground truth counts as missed"
                    ));
                    Vec::new()
                }
            };
            let mut record = ImageRecord::new(key.clone(), gts.items, dets);
            if let Some(bytes) = line_files.get(key) {
                let line_name = opts.line_pattern.file_name(key);
                let polys = parse_line_file(bytes, opts.line_format, &line_name)?;
                notes.extend(polys.warnings);
                let lines_err = |source| AnnotationError::Lines {
                    key: key.clone(),
                    source,
                };
                let index = match sidecars.get(key) {
                    Some(bytes) => {
                        let members =
                            parse_membership(bytes, &opts.line_pattern.sidecar_name(key))?;
                        line_index_from_membership(&record.gts, &polys.items, &members)
                            .map_err(lines_err)?
                    }
                    None => build_line_index(&record.gts, &polys.items).map_err(lines_err)?,
                };
                notes.extend(
                    index
                        .warnings
                        .into_iter()
                        .map(|w| format!("{line_name}: {w}")),
                );
                record.lines = index.lines;
            }
            Ok((record, notes))
        })
        .collect::<Result<_, AnnotationError>>()?;

    let mut records = Vec::with_capacity(loaded.len());
    for (record, notes) in loaded {
        warnings.extend(notes);
        records.push(record);
    }
    Ok(Dataset { records, warnings })
}

fn keyed(
    files: BTreeMap<String, Vec<u8>>,
    pattern: &KeyPattern,
    mut sidecars: Option<&mut BTreeMap<String, Vec<u8>>>,
    warnings: &mut Vec<String>,
) -> Result<BTreeMap<String, Vec<u8>>, AnnotationError> {
    let mut out = BTreeMap::new();
    for (name, bytes) in files {
        if let Some(key) = pattern.key_of(&name) {
            out.insert(key.to_string(), bytes);
        } else if let (Some(side), Some(key)) =
            (sidecars.as_deref_mut(), pattern.sidecar_key(&name))
        {
            side.insert(key.to_string(), bytes);
        } else {
            warnings.push(format!("ignoring `{name}`: does not match `{pattern}`"));
        }
    }
    Ok(out)
}
