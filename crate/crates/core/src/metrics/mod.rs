//! Geotagging and geocoding metrics.
//!
//! Geotagging is scored with precision, recall and F-score over matched spans.
//! Geocoding is scored on the geotagging true positives only, from the
//! distribution of great-circle errors: mean error, accuracy within X km
//! (inclusive), and the area under the log-error curve. Median error is
//! reported too but is a weak summary of a heavy-tailed distribution.
//!
//! All values are fractions internally; percentages are a presentation concern.

pub mod report;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{GoldToponym, PredictionRecord, Span};
use crate::geodesy::{great_circle_distance, Coordinate, MAX_ERROR_KM};

pub use report::{write_csv, AccuracyAt, EvalReport, GeocodingScores, SignificanceTest, TaggingScores};

/// Accuracy threshold recommended for geocoding: 161 km, i.e. 100 miles.
pub const DEFAULT_THRESHOLD_KM: f64 = 161.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("metric undefined on an empty error distribution")]
    EmptyDistribution,
    #[error("geocoding error {0} km outside [0, {MAX_ERROR_KM}]")]
    ErrorOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Identical start and end.
    #[default]
    Exact,
    /// Any shared character.
    Overlap,
}

impl std::str::FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(MatchMode::Exact),
            "overlap" => Ok(MatchMode::Overlap),
            other => Err(format!("unknown match mode {other:?} (expected exact or overlap)")),
        }
    }
}

impl std::fmt::Display for MatchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatchMode::Exact => "exact",
            MatchMode::Overlap => "overlap",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaggingCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpanMatching {
    pub counts: TaggingCounts,
    /// `(gold index, prediction index)`, ordered by gold index.
    pub pairs: Vec<(usize, usize)>,
}

impl SpanMatching {
    /// Prediction matched to each gold item, by gold index.
    pub fn gold_to_pred(&self, n_gold: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n_gold];
        for &(g, p) in &self.pairs {
            out[g] = Some(p);
        }
        out
    }
}

/// One-to-one span matching within each document.
///
/// Gold spans are visited left to right (document id, then offsets). Each
/// takes the unmatched prediction of the same document that qualifies under
/// `mode` and shares the most characters with it; equal overlaps go to the
/// leftmost prediction. Unmatched predictions are false positives, unmatched
/// gold spans false negatives.
pub fn match_spans(gold: &[GoldToponym], pred: &[PredictionRecord], mode: MatchMode) -> SpanMatching {
    let mut by_doc: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, p) in pred.iter().enumerate() {
        by_doc.entry(p.doc_id.as_str()).or_default().push(i);
    }
    for list in by_doc.values_mut() {
        list.sort_by_key(|&i| (pred[i].span, i));
    }

    let mut gold_order: Vec<usize> = (0..gold.len()).collect();
    gold_order.sort_by(|&a, &b| {
        (gold[a].doc_id.as_str(), gold[a].span(), a).cmp(&(gold[b].doc_id.as_str(), gold[b].span(), b))
    });

    let mut taken = vec![false; pred.len()];
    let mut pairs = Vec::new();
    for g in gold_order {
        let gspan = gold[g].span();
        let Some(candidates) = by_doc.get(gold[g].doc_id.as_str()) else {
            continue;
        };
        let mut best: Option<(usize, usize)> = None;
        for &p in candidates {
            if taken[p] {
                continue;
            }
            let qualifies = match mode {
                MatchMode::Exact => pred[p].span == gspan,
                MatchMode::Overlap => pred[p].span.intersects(&gspan),
            };
            if !qualifies {
                continue;
            }
            let overlap = pred[p].span.overlap(&gspan);
            if best.is_none_or(|(_, o)| overlap > o) {
                best = Some((p, overlap));
            }
        }
        if let Some((p, _)) = best {
            taken[p] = true;
            pairs.push((g, p));
        }
    }
    pairs.sort_unstable();

    let tp = pairs.len();
    SpanMatching {
        counts: TaggingCounts { tp, fp: pred.len() - tp, fn_: gold.len() - tp },
        pairs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FScore {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// A denominator was zero and the affected value was set to 0.
    pub degenerate: bool,
}

impl FScore {
    /// Harmonic mean of given precision and recall.
    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        let sum = precision + recall;
        let (f_score, degenerate) = if sum > 0.0 { (2.0 * precision * recall / sum, false) } else { (0.0, true) };
        FScore { precision, recall, f_score, degenerate }
    }
}

pub fn f_score(c: &TaggingCounts) -> FScore {
    let ratio = |num: usize, den: usize| if den == 0 { None } else { Some(num as f64 / den as f64) };
    let p = ratio(c.tp, c.tp + c.fp);
    let r = ratio(c.tp, c.tp + c.fn_);
    let mut score = FScore::from_precision_recall(p.unwrap_or(0.0), r.unwrap_or(0.0));
    score.degenerate |= p.is_none() || r.is_none();
    score
}

/// Geocoding errors in km, sorted ascending.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ErrorDistribution {
    errors: Vec<f64>,
}

impl ErrorDistribution {
    pub fn new(mut errors: Vec<f64>) -> Result<Self, MetricError> {
        if let Some(&bad) = errors.iter().find(|e| !(e.is_finite() && (0.0..=MAX_ERROR_KM).contains(*e))) {
            return Err(MetricError::ErrorOutOfRange(bad));
        }
        errors.sort_by(f64::total_cmp);
        Ok(ErrorDistribution { errors })
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.errors
    }

    fn non_empty(&self) -> Result<&[f64], MetricError> {
        if self.errors.is_empty() {
            Err(MetricError::EmptyDistribution)
        } else {
            Ok(&self.errors)
        }
    }
}

pub fn mean_error(e: &ErrorDistribution) -> Result<f64, MetricError> {
    let xs = e.non_empty()?;
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn median_error(e: &ErrorDistribution) -> Result<f64, MetricError> {
    let xs = e.non_empty()?;
    let mid = xs.len() / 2;
    Ok(if xs.len() % 2 == 1 { xs[mid] } else { (xs[mid - 1] + xs[mid]) / 2.0 })
}

/// Fraction of errors `<= threshold_km`.
pub fn accuracy_at(e: &ErrorDistribution, threshold_km: f64) -> Result<f64, MetricError> {
    let xs = e.non_empty()?;
    let within = xs.partition_point(|&x| x <= threshold_km);
    Ok(within as f64 / xs.len() as f64)
}

/// Area under the log-error curve, normalised to [0, 1]; lower is better.
///
/// Sorted errors are mapped through `ln(1 + x) / ln(1 + 20039)` and integrated
/// with the trapezoid rule over unit index steps, then divided by the `n - 1`
/// steps. A single error reduces to its own normalised height. `ln(1 + x)`
/// rather than `ln(x)` keeps zero errors finite; the matching normaliser keeps
/// an all-maximum distribution at exactly 1.
pub fn auc(e: &ErrorDistribution) -> Result<f64, MetricError> {
    let xs = e.non_empty()?;
    let max_log = MAX_ERROR_KM.ln_1p();
    let heights: Vec<f64> = xs.iter().map(|x| x.ln_1p() / max_log).collect();
    if heights.len() == 1 {
        return Ok(heights[0]);
    }
    let area: f64 = heights.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum();
    Ok((area / (heights.len() - 1) as f64).clamp(0.0, 1.0))
}

/// Identifies one gold toponym across systems.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ToponymKey {
    pub doc_id: String,
    pub span: Span,
}

/// One matched geotagging true positive, ready for geocoding scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct GeocodingPair {
    pub key: ToponymKey,
    pub gold: Option<Coordinate>,
    pub predicted: Option<Coordinate>,
}

/// Pairs of matched gold/prediction coordinates from a span matching.
pub fn geocoding_pairs(gold: &[GoldToponym], pred: &[PredictionRecord], matching: &SpanMatching) -> Vec<GeocodingPair> {
    matching
        .pairs
        .iter()
        .map(|&(g, p)| GeocodingPair {
            key: ToponymKey { doc_id: gold[g].doc_id.clone(), span: gold[g].span() },
            gold: gold[g].annotation.coord,
            predicted: pred[p].predicted_coord,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeocodingErrors {
    pub distribution: ErrorDistribution,
    /// Error per scored toponym, ordered by key.
    pub keyed: Vec<(ToponymKey, f64)>,
    /// Matched pairs whose prediction has no coordinates.
    pub unresolved: usize,
    /// Matched pairs whose gold annotation has no coordinates.
    pub gold_without_coord: usize,
}

impl GeocodingErrors {
    pub fn resolved(&self) -> usize {
        self.keyed.len()
    }
}

/// One great-circle distance per pair with both coordinates; the others are counted.
pub fn geocoding_errors(pairs: &[GeocodingPair]) -> GeocodingErrors {
    let mut out = GeocodingErrors::default();
    for pair in pairs {
        match (pair.gold, pair.predicted) {
            (Some(g), Some(p)) => out.keyed.push((pair.key.clone(), great_circle_distance(p, g).km())),
            (None, _) => out.gold_without_coord += 1,
            (Some(_), None) => out.unresolved += 1,
        }
    }
    out.keyed.sort_by(|a, b| a.0.cmp(&b.0));
    out.distribution = ErrorDistribution::new(out.keyed.iter().map(|(_, e)| *e).collect())
        .expect("great-circle distances are within bounds");
    out
}
