//! Prediction interchange: one JSON object per line.
//!
//! ```text
//! {"doc_id":"a17","start":4,"end":10,"surface":"Paris","label":"Location","lat":48.856600,"lon":2.352200}
//! ```
//!
//! Written with fixed field order (`doc_id`, `start`, `end`, `surface`,
//! `label`, `lat`, `lon`) and six fractional digits for coordinates. `label`,
//! `lat` and `lon` may be `null`; `lat` and `lon` are null together. Offsets
//! are Unicode scalar values. Readers accept any key order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Span;
use crate::geodesy::Coordinate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub span: Span,
    pub surface: String,
    pub predicted_label: Option<String>,
    pub predicted_coord: Option<Coordinate>,
}

impl PredictionRecord {
    pub fn new(doc_id: impl Into<String>, span: Span, surface: impl Into<String>) -> Self {
        PredictionRecord {
            doc_id: doc_id.into(),
            span,
            surface: surface.into(),
            predicted_label: None,
            predicted_coord: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.predicted_label = Some(label.into());
        self
    }

    pub fn with_coord(mut self, coord: Coordinate) -> Self {
        self.predicted_coord = Some(coord);
        self
    }

    /// The interchange line for this record, without the trailing newline.
    pub fn to_line(&self) -> String {
        let json_str = |s: &str| serde_json::to_string(s).expect("strings always serialise");
        let label = self.predicted_label.as_deref().map_or_else(|| "null".to_string(), json_str);
        let (lat, lon) = match self.predicted_coord {
            Some(c) => (format!("{:.6}", c.lat()), format!("{:.6}", c.lon())),
            None => ("null".to_string(), "null".to_string()),
        };
        format!(
            r#"{{"doc_id":{},"start":{},"end":{},"surface":{},"label":{},"lat":{},"lon":{}}}"#,
            json_str(&self.doc_id),
            self.span.start,
            self.span.end,
            json_str(&self.surface),
            label,
            lat,
            lon
        )
    }
}

#[derive(Deserialize)]
struct RawRecord {
    doc_id: String,
    start: u64,
    end: u64,
    surface: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionLoad {
    pub records: Vec<PredictionRecord>,
    /// Lines that could not be read; the caller decides whether to fail.
    pub errors: Vec<LineError>,
}

fn parse_line(line: &str) -> Result<PredictionRecord, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let (start, end) = (raw.start as usize, raw.end as usize);
    let span = Span::new(start, end).map_err(|e| e.to_string())?;
    let predicted_coord = match (raw.lat, raw.lon) {
        (Some(lat), Some(lon)) => Some(Coordinate::new(lat, lon).map_err(|e| e.to_string())?),
        (None, None) => None,
        _ => return Err("lat and lon must be given together".into()),
    };
    Ok(PredictionRecord {
        doc_id: raw.doc_id,
        span,
        surface: raw.surface,
        predicted_label: raw.label,
        predicted_coord,
    })
}

/// Reads prediction lines. Blank lines are skipped; bad lines are reported
/// with their 1-based line number.
pub fn load_predictions<R: BufRead>(input: R) -> std::io::Result<PredictionLoad> {
    let mut load = PredictionLoad::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line) {
            Ok(r) => load.records.push(r),
            Err(message) => load.errors.push(LineError { line: i + 1, message }),
        }
    }
    Ok(load)
}

pub fn write_predictions<W: Write>(mut out: W, records: &[PredictionRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_line())?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_record() {
        let load = load_predictions(
            &br#"{"doc_id":"d1","start":4,"end":10,"surface":"Paris!","label":"Location","lat":48.85,"lon":2.35}"#[..],
        )
        .unwrap();
        assert!(load.errors.is_empty());
        let r = &load.records[0];
        assert_eq!(r.span, Span { start: 4, end: 10 });
        assert_eq!(r.predicted_coord, Some(Coordinate::new(48.85, 2.35).unwrap()));
    }

    #[test]
    fn missing_coordinates_are_geotagging_only() {
        let load = load_predictions(&br#"{"doc_id":"d1","start":4,"end":10,"surface":"Paris!"}"#[..]).unwrap();
        assert_eq!(load.records[0].predicted_coord, None);
        assert_eq!(load.records[0].predicted_label, None);
    }

    #[test]
    fn invalid_lines_are_reported() {
        let input = "{\"doc_id\":\"d1\",\"start\":10,\"end\":10,\"surface\":\"\"}\n\n\
                     not json\n\
                     {\"doc_id\":\"d1\",\"start\":1,\"end\":3,\"surface\":\"ab\",\"lat\":5.0}\n\
                     {\"doc_id\":\"d1\",\"start\":1,\"end\":3,\"surface\":\"ab\",\"lat\":95.0,\"lon\":0.0}\n";
        let load = load_predictions(input.as_bytes()).unwrap();
        assert!(load.records.is_empty());
        let lines: Vec<usize> = load.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, [1, 3, 4, 5]);
    }

    #[test]
    fn writer_is_fixed_format() {
        let r = PredictionRecord::new("d\"1", Span { start: 4, end: 10 }, "Paris")
            .with_label("Location")
            .with_coord(Coordinate::new(48.85, 2.35).unwrap());
        assert_eq!(
            r.to_line(),
            r#"{"doc_id":"d\"1","start":4,"end":10,"surface":"Paris","label":"Location","lat":48.850000,"lon":2.350000}"#
        );
        let bare = PredictionRecord::new("d1", Span { start: 0, end: 1 }, "X");
        assert_eq!(
            bare.to_line(),
            r#"{"doc_id":"d1","start":0,"end":1,"surface":"X","label":null,"lat":null,"lon":null}"#
        );
    }

    proptest! {
        #[test]
        fn written_lines_read_back(
            doc in "[a-z0-9_\"\\\\ é]{1,12}",
            start in 0usize..10_000,
            len in 1usize..50,
            surface in "\\PC{0,20}",
            coord in proptest::option::of((-90.0f64..=90.0, -180.0f64..=180.0)),
        ) {
            let mut r = PredictionRecord::new(doc, Span { start, end: start + len }, surface).with_label("Location");
            if let Some((lat, lon)) = coord {
                r = r.with_coord(Coordinate::new(lat, lon).unwrap());
            }
            let mut buf = Vec::new();
            write_predictions(&mut buf, std::slice::from_ref(&r)).unwrap();
            let back = load_predictions(buf.as_slice()).unwrap();
            prop_assert!(back.errors.is_empty());
            let got = &back.records[0];
            prop_assert_eq!(&got.doc_id, &r.doc_id);
            prop_assert_eq!(got.span, r.span);
            prop_assert_eq!(&got.surface, &r.surface);
            match (got.predicted_coord, r.predicted_coord) {
                (Some(a), Some(b)) => {
                    prop_assert!((a.lat() - b.lat()).abs() <= 5e-7);
                    prop_assert!((a.lon() - b.lon()).abs() <= 5e-7);
                }
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }
}
