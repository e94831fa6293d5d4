//! Line-oriented ICDAR text formats.
//!
//! Every format is comma separated with coordinates first. Anything after
//! the fixed columns is the transcription, which may itself contain commas;
//! it is trimmed and one layer of surrounding double quotes is removed.

use std::fmt::Write as _;

use super::{AnnotationError, CoordFormat, DetLayout, Detection, GtInstance};
use crate::geometry::{GeometryError, Point, Polygon};

/// Parsed items plus warnings about input that was repaired or dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub items: Vec<T>,
    pub warnings: Vec<String>,
}

fn decode<'a>(bytes: &'a [u8], file: &str) -> Result<&'a str, AnnotationError> {
    let text = std::str::from_utf8(bytes).map_err(|_| AnnotationError::Encoding {
        file: file.to_string(),
    })?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text))
}

/// Non-blank lines with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

struct Ctx<'a> {
    file: &'a str,
    line: usize,
}

impl Ctx<'_> {
    fn malformed(&self, message: impl Into<String>) -> AnnotationError {
        AnnotationError::Malformed {
            file: self.file.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn number(&self, field: &str) -> Result<f64, AnnotationError> {
        let t = field.trim();
        t.parse::<f64>()
            .map_err(|_| self.malformed(format!("expected a number, found `{t}`")))
    }

    fn vertices(
        &self,
        fields: &[&str],
        format: CoordFormat,
    ) -> Result<Vec<Point>, AnnotationError> {
        let v: Vec<f64> = fields
            .iter()
            .map(|f| self.number(f))
            .collect::<Result<_, _>>()?;
        Ok(match format {
            CoordFormat::Icdar13Rect => {
                let (x0, x1) = (v[0].min(v[2]), v[0].max(v[2]));
                let (y0, y1) = (v[1].min(v[3]), v[1].max(v[3]));
                vec![
                    Point::new(x0, y0),
                    Point::new(x1, y0),
                    Point::new(x1, y1),
                    Point::new(x0, y1),
                ]
            }
            CoordFormat::Icdar15Quad => v.chunks(2).map(|c| Point::new(c[0], c[1])).collect(),
        })
    }

    /// Polygon that may be degenerate; other geometric faults are errors.
    fn polygon(&self, fields: &[&str], format: CoordFormat) -> Result<Polygon, AnnotationError> {
        Polygon::sliver(self.vertices(fields, format)?).map_err(|source| self.invalid(source))
    }

    fn invalid(&self, source: GeometryError) -> AnnotationError {
        AnnotationError::InvalidPolygon {
            file: self.file.to_string(),
            line: self.line,
            source,
        }
    }

    fn warn(&self, message: &str) -> String {
        format!("{}:{}: {}", self.file, self.line, message)
    }
}

fn transcription(fields: &[&str]) -> Option<String> {
    let joined = fields.join(",");
    let t = joined.trim();
    let t = if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') {
        &t[1..t.len() - 1]
    } else {
        t
    };
    (!t.is_empty()).then(|| t.to_string())
}

/// Parses a word-level ground-truth file. A transcription equal to
/// `sentinel` marks the instance as don't-care; so does a degenerate
/// polygon, with a warning.
pub fn parse_gt_word_file(
    bytes: &[u8],
    format: CoordFormat,
    sentinel: &str,
    file: &str,
) -> Result<Parsed<GtInstance>, AnnotationError> {
    let text = decode(bytes, file)?;
    let n = format.columns();
    let mut out = Parsed {
        items: Vec::new(),
        warnings: Vec::new(),
    };
    for (line, raw) in records(text) {
        let ctx = Ctx { file, line };
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() < n {
            return Err(ctx.malformed(format!(
                "expected at least {n} coordinates, found {} fields",
                fields.len()
            )));
        }
        let polygon = ctx.polygon(&fields[..n], format)?;
        let transcription = transcription(&fields[n..]);
        let mut dont_care = transcription.as_deref() == Some(sentinel);
        if polygon.is_degenerate() && !dont_care {
            out.warnings
                .push(ctx.warn("degenerate ground-truth polygon treated as don't-care"));
            dont_care = true;
        }
        let mut gt = GtInstance::word(out.items.len(), polygon, transcription);
        gt.dont_care = dont_care;
        out.items.push(gt);
    }
    Ok(out)
}

/// Parses a detection file with the given column layout. Degenerate
/// detections are dropped with a warning; ids stay dense.
pub fn parse_detection_file(
    bytes: &[u8],
    layout: DetLayout,
    file: &str,
) -> Result<Parsed<Detection>, AnnotationError> {
    let text = decode(bytes, file)?;
    let n = layout.coords.columns();
    let fixed = n + usize::from(layout.confidence);
    let mut out = Parsed {
        items: Vec::new(),
        warnings: Vec::new(),
    };
    for (line, raw) in records(text) {
        let ctx = Ctx { file, line };
        let fields: Vec<&str> = raw.split(',').collect();
        let ok = if layout.transcription {
            fields.len() > fixed
        } else {
            fields.len() == fixed
        };
        if !ok {
            let expected = if layout.transcription {
                format!("more than {fixed}")
            } else {
                fixed.to_string()
            };
            return Err(ctx.malformed(format!(
                "layout {layout} expects {expected} fields, found {}",
                fields.len()
            )));
        }
        let polygon = ctx.polygon(&fields[..n], layout.coords)?;
        if polygon.is_degenerate() {
            out.warnings.push(ctx.warn("degenerate detection dropped"));
            continue;
        }
        let mut det = Detection::new(out.items.len(), polygon);
        if layout.confidence {
            let c = ctx.number(fields[n])?;
            if !(0.0..=1.0).contains(&c) {
                return Err(ctx.malformed(format!("confidence {c} outside [0, 1]")));
            }
            det.confidence = Some(c);
        }
        if layout.transcription {
            det.transcription = transcription(&fields[fixed..]);
        }
        out.items.push(det);
    }
    Ok(out)
}

/// Parses a text-line annotation file; any transcription column is
/// ignored. Degenerate lines are kept as empty regions so that positions
/// stay aligned with a membership sidecar.
pub fn parse_line_file(
    bytes: &[u8],
    format: CoordFormat,
    file: &str,
) -> Result<Parsed<Polygon>, AnnotationError> {
    let text = decode(bytes, file)?;
    let n = format.columns();
    let mut out = Parsed {
        items: Vec::new(),
        warnings: Vec::new(),
    };
    for (line, raw) in records(text) {
        let ctx = Ctx { file, line };
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() < n {
            return Err(ctx.malformed(format!(
                "expected at least {n} coordinates, found {} fields",
                fields.len()
            )));
        }
        let polygon = ctx.polygon(&fields[..n], format)?;
        if polygon.is_degenerate() {
            out.warnings
                .push(ctx.warn("degenerate text-line polygon matches nothing"));
        }
        out.items.push(polygon);
    }
    Ok(out)
}

/// Parses a membership sidecar: line `k` lists the word ids of text line
/// `k`, separated by commas or whitespace.
pub fn parse_membership(bytes: &[u8], file: &str) -> Result<Vec<Vec<usize>>, AnnotationError> {
    let text = decode(bytes, file)?;
    records(text)
        .map(|(line, raw)| {
            let ctx = Ctx { file, line };
            raw.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| ctx.malformed(format!("expected a word id, found `{t}`")))
                })
                .collect()
        })
        .collect()
}

fn write_coords(
    out: &mut String,
    polygon: &Polygon,
    format: CoordFormat,
) -> Result<(), AnnotationError> {
    let v = polygon.vertices();
    match format {
        CoordFormat::Icdar13Rect => {
            let b = polygon.bbox();
            let exact = v.len() == 4
                && v.iter().all(|p| {
                    (p.x == b.min.x || p.x == b.max.x) && (p.y == b.min.y || p.y == b.max.y)
                });
            if !exact {
                return Err(AnnotationError::Unrepresentable(format!(
                    "polygon {polygon} as an axis-aligned rectangle"
                )));
            }
            write!(out, "{},{},{},{}", b.min.x, b.min.y, b.max.x, b.max.y)
                .expect("write to string");
        }
        CoordFormat::Icdar15Quad => {
            if v.len() != 4 {
                return Err(AnnotationError::Unrepresentable(format!(
                    "{}-vertex polygon as a quadrilateral",
                    v.len()
                )));
            }
            let parts: Vec<String> = v.iter().map(|p| format!("{},{}", p.x, p.y)).collect();
            out.push_str(&parts.join(","));
        }
    }
    Ok(())
}

fn write_text(out: &mut String, text: &str) -> Result<(), AnnotationError> {
    if text.contains(['\n', '\r']) {
        return Err(AnnotationError::Unrepresentable(format!(
            "transcription {text:?} on one line"
        )));
    }
    let quote =
        text.trim() != text || (text.len() >= 2 && text.starts_with('"') && text.ends_with('"'));
    out.push(',');
    if quote {
        out.push('"');
        out.push_str(text);
        out.push('"');
    } else {
        out.push_str(text);
    }
    Ok(())
}

/// Canonical ground-truth text. Don't-care instances without a
/// transcription are written with `sentinel`.
pub fn format_gt_file(
    gts: &[GtInstance],
    format: CoordFormat,
    sentinel: &str,
) -> Result<String, AnnotationError> {
    let mut out = String::new();
    for g in gts {
        write_coords(&mut out, &g.polygon, format)?;
        match (&g.transcription, g.dont_care) {
            (Some(t), _) if !t.is_empty() => write_text(&mut out, t)?,
            (_, true) => write_text(&mut out, sentinel)?,
            _ => {}
        }
        out.push('\n');
    }
    Ok(out)
}

/// Canonical detection text for `layout`; missing confidences are written
/// as 0 and missing transcriptions as an empty column.
pub fn format_detection_file(
    dets: &[Detection],
    layout: DetLayout,
) -> Result<String, AnnotationError> {
    let mut out = String::new();
    for d in dets {
        write_coords(&mut out, &d.polygon, layout.coords)?;
        if layout.confidence {
            write!(out, ",{}", d.confidence.unwrap_or(0.0)).expect("write to string");
        }
        if layout.transcription {
            write_text(&mut out, d.transcription.as_deref().unwrap_or(""))?;
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn format_line_file(
    lines: &[&Polygon],
    format: CoordFormat,
) -> Result<String, AnnotationError> {
    let mut out = String::new();
    for p in lines {
        write_coords(&mut out, p, format)?;
        out.push('\n');
    }
    Ok(out)
}

pub fn format_membership(members: &[&[usize]]) -> String {
    members
        .iter()
        .map(|m| {
            m.iter()
                .map(|id| id.to_string())
                .collect::<Vec<_>>()
                .join(" ")
                + "\n"
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::DEFAULT_SENTINEL;

    fn gt(text: &str, format: CoordFormat) -> Parsed<GtInstance> {
        parse_gt_word_file(text.as_bytes(), format, DEFAULT_SENTINEL, "gt.txt").unwrap()
    }

    #[test]
    fn quad_and_rect_give_same_region() {
        let q = gt("0,0,100,0,100,20,0,20,hello", CoordFormat::Icdar15Quad);
        let r = gt("0,0,100,20,hello", CoordFormat::Icdar13Rect);
        assert_eq!(q.items[0].polygon.area(), 2000.0);
        assert_eq!(q.items[0].polygon, r.items[0].polygon);
        assert_eq!(q.items[0].transcription.as_deref(), Some("hello"));
        assert!(!q.items[0].dont_care);
    }

    #[test]
    fn sentinel_marks_dont_care() {
        let p = gt("0,0,10,0,10,10,0,10,###", CoordFormat::Icdar15Quad);
        assert!(p.items[0].dont_care);
    }

    #[test]
    fn quoted_text_with_commas_and_spaces() {
        let p = gt(
            "38, 43, 920, 215, \"Tired, ness\"\r\n\n",
            CoordFormat::Icdar13Rect,
        );
        assert_eq!(p.items.len(), 1);
        assert_eq!(p.items[0].transcription.as_deref(), Some("Tired, ness"));
    }

    #[test]
    fn bom_is_stripped() {
        let p = gt("\u{feff}0,0,100,20,a", CoordFormat::Icdar13Rect);
        assert_eq!(p.items[0].polygon.area(), 2000.0);
    }

    #[test]
    fn malformed_line_reports_position() {
        let err = parse_gt_word_file(
            b"0,0,100,20,a\n0,x,1,1,b\n",
            CoordFormat::Icdar13Rect,
            "###",
            "gt_img_7.txt",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("gt_img_7.txt:2:"), "{msg}");
    }

    #[test]
    fn self_intersecting_quad_is_an_error() {
        let err = parse_gt_word_file(
            b"0,0,10,10,10,0,0,10,a",
            CoordFormat::Icdar15Quad,
            "###",
            "g",
        )
        .unwrap_err();
        assert!(matches!(
            err,
            AnnotationError::InvalidPolygon { line: 1, .. }
        ));
    }

    #[test]
    fn degenerate_gt_becomes_dont_care() {
        let p = gt("0,0,100,0,200,0,50,0,word", CoordFormat::Icdar15Quad);
        assert!(p.items[0].dont_care);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn detection_layouts() {
        let quad: DetLayout = "quad".parse().unwrap();
        let d = parse_detection_file(b"0,0,100,0,100,20,0,20", quad, "d").unwrap();
        assert_eq!(d.items[0].confidence, None);

        let conf: DetLayout = "quad+conf".parse().unwrap();
        let d = parse_detection_file(b"0,0,100,0,100,20,0,20,0.93", conf, "d").unwrap();
        assert_eq!(d.items[0].confidence, Some(0.93));

        let full: DetLayout = "quad+conf+text".parse().unwrap();
        let d = parse_detection_file(b"0,0,100,0,100,20,0,20,0.93,hello", full, "d").unwrap();
        assert_eq!(d.items[0].confidence, Some(0.93));
        assert_eq!(d.items[0].transcription.as_deref(), Some("hello"));
    }

    #[test]
    fn detection_errors() {
        let conf: DetLayout = "quad+conf".parse().unwrap();
        assert!(parse_detection_file(b"0,0,100,0,100,20,0,20,1.5", conf, "d").is_err());
        assert!(parse_detection_file(b"0,0,100,0,100,20,0,20", conf, "d").is_err());
        assert!(parse_detection_file(b"0,0,100,0,100,20,0,20,0.5,extra", conf, "d").is_err());
        assert!("quad+text+conf".parse::<DetLayout>().is_err());
        assert!("poly".parse::<DetLayout>().is_err());
    }

    #[test]
    fn degenerate_detection_dropped_and_ids_dense() {
        let d = parse_detection_file(
            b"0,0,0,0,0,0,0,0\n0,0,10,0,10,10,0,10\n",
            DetLayout::default(),
            "d",
        )
        .unwrap();
        assert_eq!(d.items.len(), 1);
        assert_eq!(d.items[0].id, 0);
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn membership_sidecar() {
        let m = parse_membership(b"0 1\n2,3, 4\n", "m").unwrap();
        assert_eq!(m, vec![vec![0, 1], vec![2, 3, 4]]);
        assert!(parse_membership(b"0 x", "m").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "0,0,100,0,100,20,0,20,hello\n5,5,15,5,15,15,5,15,###\n0,30,10,30,10,40,0,40,\" padded \"\n";
        let p = gt(text, CoordFormat::Icdar15Quad);
        let again = format_gt_file(&p.items, CoordFormat::Icdar15Quad, DEFAULT_SENTINEL).unwrap();
        assert_eq!(gt(&again, CoordFormat::Icdar15Quad), p);
    }
}
