//! Evaluation reports: JSON document, flat CSV row and a short text summary.

use std::fmt::Write as _;
use std::io::Write;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::{FScore, MatchMode, TaggingCounts};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaggingScores {
    pub mode: MatchMode,
    #[serde(flatten)]
    pub counts: TaggingCounts,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub degenerate: bool,
}

impl TaggingScores {
    pub fn new(mode: MatchMode, counts: TaggingCounts, score: FScore) -> Self {
        TaggingScores {
            mode,
            counts,
            precision: score.precision,
            recall: score.recall,
            f_score: score.f_score,
            degenerate: score.degenerate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyAt {
    pub threshold_km: f64,
    pub accuracy: f64,
}

fn accuracy_map<S: Serializer>(values: &[AccuracyAt], s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(values.len()))?;
    for a in values {
        map.serialize_entry(&threshold_label(a.threshold_km), &a.accuracy)?;
    }
    map.end()
}

fn threshold_label(km: f64) -> String {
    if km.fract() == 0.0 {
        format!("{km:.0}")
    } else {
        km.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeocodingScores {
    pub n_errors: usize,
    pub mean_error_km: f64,
    pub median_error_km: f64,
    pub auc: f64,
    #[serde(serialize_with = "accuracy_map")]
    pub accuracy_at_km: Vec<AccuracyAt>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceTest {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub significant_at_05: bool,
    pub significant_at_01: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EvalReport {
    pub system: String,
    pub dataset_id: String,
    pub gazetteer_version: String,
    pub n_gold: usize,
    pub n_predicted: usize,
    pub n_resolved: usize,
    pub tagging: Option<TaggingScores>,
    pub geocoding: Option<GeocodingScores>,
    pub significance: Vec<SignificanceTest>,
    pub warnings: Vec<String>,
}

const BASE_COLUMNS: [&str; 18] = [
    "system",
    "dataset_id",
    "gazetteer_version",
    "n_gold",
    "n_predicted",
    "n_resolved",
    "match_mode",
    "precision",
    "recall",
    "f_score",
    "mean_error_km",
    "median_error_km",
    "auc",
    "n_errors",
    "test",
    "test_statistic",
    "test_p_value",
    "test_n",
];

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    fn thresholds(&self) -> Vec<f64> {
        self.geocoding
            .as_ref()
            .map(|g| g.accuracy_at_km.iter().map(|a| a.threshold_km).collect())
            .unwrap_or_default()
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut cols: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
        cols.extend(self.thresholds().into_iter().map(|t| format!("accuracy_at_{}km", threshold_label(t))));
        cols
    }

    /// Values in [`csv_header`](Self::csv_header) order. Missing values are
    /// empty; several significance tests are joined with `|`.
    pub fn csv_row(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let t = self.tagging.as_ref();
        let g = self.geocoding.as_ref();
        let joined = |f: &dyn Fn(&SignificanceTest) -> String| {
            self.significance.iter().map(f).collect::<Vec<_>>().join("|")
        };
        let mut row = vec![
            self.system.clone(),
            self.dataset_id.clone(),
            self.gazetteer_version.clone(),
            self.n_gold.to_string(),
            self.n_predicted.to_string(),
            self.n_resolved.to_string(),
            t.map(|t| t.mode.to_string()).unwrap_or_default(),
            num(t.map(|t| t.precision)),
            num(t.map(|t| t.recall)),
            num(t.map(|t| t.f_score)),
            num(g.map(|g| g.mean_error_km)),
            num(g.map(|g| g.median_error_km)),
            num(g.map(|g| g.auc)),
            g.map(|g| g.n_errors.to_string()).unwrap_or_default(),
            joined(&|s| s.test.clone()),
            joined(&|s| s.statistic.to_string()),
            joined(&|s| s.p_value.to_string()),
            joined(&|s| s.n.to_string()),
        ];
        if let Some(g) = g {
            row.extend(g.accuracy_at_km.iter().map(|a| a.accuracy.to_string()));
        }
        row
    }

    /// Header plus one data row.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        write_csv(out, std::slice::from_ref(self))
    }

    /// Human-readable summary with percentages.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "system {}  dataset {}  gazetteer {}", self.system, self.dataset_id, self.gazetteer_version);
        let _ = writeln!(s, "gold {}  predicted {}  resolved {}", self.n_gold, self.n_predicted, self.n_resolved);
        if let Some(t) = &self.tagging {
            let _ = writeln!(
                s,
                "geotagging ({}): P {:.1}  R {:.1}  F {:.1}  (tp {} fp {} fn {})",
                t.mode,
                t.precision * 100.0,
                t.recall * 100.0,
                t.f_score * 100.0,
                t.counts.tp,
                t.counts.fp,
                t.counts.fn_
            );
        }
        if let Some(g) = &self.geocoding {
            let acc: Vec<String> = g
                .accuracy_at_km
                .iter()
                .map(|a| format!("acc@{} {:.1}", threshold_label(a.threshold_km), a.accuracy * 100.0))
                .collect();
            let _ = writeln!(
                s,
                "geocoding over {} errors: {}  AUC {:.3}  mean {:.1} km  median {:.1} km",
                g.n_errors,
                acc.join("  "),
                g.auc,
                g.mean_error_km,
                g.median_error_km
            );
        }
        for t in &self.significance {
            let _ = writeln!(s, "{}: statistic {:.4}  p {:.3e}  n {}", t.test, t.statistic, t.p_value, t.n);
            for note in &t.notes {
                let _ = writeln!(s, "  note: {note}");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// One header, taken from the first report, then a row per report.
pub fn write_csv<W: Write>(out: W, reports: &[EvalReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = reports.first() {
        w.write_record(first.csv_header())?;
    }
    for r in reports {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> EvalReport {
        EvalReport {
            system: "sys".into(),
            dataset_id: "fixture".into(),
            gazetteer_version: "geonames-sha256:00".into(),
            n_gold: 4,
            n_predicted: 4,
            n_resolved: 3,
            tagging: None,
            geocoding: Some(GeocodingScores {
                n_errors: 3,
                mean_error_km: 10.0,
                median_error_km: 5.0,
                auc: 0.25,
                accuracy_at_km: vec![
                    AccuracyAt { threshold_km: 161.0, accuracy: 1.0 },
                    AccuracyAt { threshold_km: 1000.0, accuracy: 1.0 },
                ],
            }),
            significance: vec![],
            warnings: vec!["careful".into()],
        }
    }

    #[test]
    fn json_has_threshold_map_and_versions() {
        let v: serde_json::Value = serde_json::from_str(&report().to_json()).unwrap();
        assert_eq!(v["geocoding"]["accuracy_at_km"]["161"], 1.0);
        assert_eq!(v["gazetteer_version"], "geonames-sha256:00");
        assert_eq!(v["dataset_id"], "fixture");
        assert!(v["tagging"].is_null());
    }

    #[test]
    fn csv_row_matches_header() {
        let r = report();
        assert_eq!(r.csv_header().len(), r.csv_row().len());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().ends_with("accuracy_at_161km,accuracy_at_1000km"));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn summary_uses_percentages() {
        let s = report().summary();
        assert!(s.contains("acc@161 100.0"));
        assert!(s.contains("warning: careful"));
    }
}
