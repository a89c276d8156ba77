//! Report assembly for geotagging and geocoding runs, and paired comparisons.

use std::collections::HashMap;

use crate::corpus::{GoldToponym, PredictionRecord};
use crate::metrics::{
    accuracy_at, auc, f_score, geocoding_errors, geocoding_pairs, match_spans, mean_error, median_error, AccuracyAt,
    EvalReport, GeocodingErrors, GeocodingScores, MatchMode, SpanMatching, TaggingScores,
};
use crate::resolver::check_representativeness;
use crate::stats::{mcnemar, wilcoxon_signed_rank, McNemarTable, StatsError, TestResult, WilcoxonOptions};

/// Identification carried into every report.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunInfo {
    pub system: String,
    pub dataset_id: String,
    pub gazetteer_version: String,
}

impl RunInfo {
    fn report(&self, n_gold: usize, n_predicted: usize) -> EvalReport {
        EvalReport {
            system: self.system.clone(),
            dataset_id: self.dataset_id.clone(),
            gazetteer_version: self.gazetteer_version.clone(),
            n_gold,
            n_predicted,
            ..EvalReport::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggingEvaluation {
    pub report: EvalReport,
    pub matching: SpanMatching,
}

pub fn evaluate_tagging(
    info: &RunInfo,
    gold: &[GoldToponym],
    pred: &[PredictionRecord],
    mode: MatchMode,
) -> TaggingEvaluation {
    let matching = match_spans(gold, pred, mode);
    let mut report = info.report(gold.len(), pred.len());
    report.tagging = Some(TaggingScores::new(mode, matching.counts, f_score(&matching.counts)));
    if report.tagging.as_ref().is_some_and(|t| t.degenerate) {
        report.warnings.push("precision or recall undefined (no predictions or no gold); reported as 0".into());
    }
    TaggingEvaluation { report, matching }
}

/// McNemar's test over gold items: an item counts as correct for a system
/// when one of its predictions matched it.
pub fn compare_tagging(
    n_gold: usize,
    a: &SpanMatching,
    b: &SpanMatching,
    continuity_correction: bool,
) -> Result<TestResult, StatsError> {
    let hits = |m: &SpanMatching| m.gold_to_pred(n_gold).iter().map(Option::is_some).collect::<Vec<_>>();
    Ok(mcnemar(McNemarTable::from_outcomes(&hits(a), &hits(b))?, continuity_correction))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeocodingEvaluation {
    pub report: EvalReport,
    pub errors: GeocodingErrors,
}

/// Geocoding metrics over the geotagging true positives, plus the tagging
/// scores those true positives come from.
pub fn evaluate_geocoding(
    info: &RunInfo,
    gold: &[GoldToponym],
    pred: &[PredictionRecord],
    mode: MatchMode,
    thresholds_km: &[f64],
) -> GeocodingEvaluation {
    let TaggingEvaluation { mut report, matching } = evaluate_tagging(info, gold, pred, mode);
    let errors = geocoding_errors(&geocoding_pairs(gold, pred, &matching));
    report.n_resolved = errors.resolved();

    let dist = &errors.distribution;
    report.geocoding = match (mean_error(dist), median_error(dist), auc(dist)) {
        (Ok(mean), Ok(median), Ok(area)) => Some(GeocodingScores {
            n_errors: dist.len(),
            mean_error_km: mean,
            median_error_km: median,
            auc: area,
            accuracy_at_km: thresholds_km
                .iter()
                .map(|&t| AccuracyAt { threshold_km: t, accuracy: accuracy_at(dist, t).expect("non-empty") })
                .collect(),
        }),
        _ => {
            report.warnings.push("no resolved true positives; geocoding metrics undefined".into());
            None
        }
    };
    if errors.unresolved > 0 {
        report.warnings.push(format!("{} matched toponyms have no predicted coordinates", errors.unresolved));
    }
    if errors.gold_without_coord > 0 {
        report.warnings.push(format!("{} matched gold toponyms have no coordinates", errors.gold_without_coord));
    }
    if let Some(w) = check_representativeness(errors.resolved(), gold.len()) {
        report.warnings.push(w.to_string());
    }
    GeocodingEvaluation { report, errors }
}

/// Wilcoxon signed-rank test on the toponyms both systems resolved; `a`'s
/// errors come first, so a positive z means `a` errs more.
pub fn compare_geocoding(
    a: &GeocodingErrors,
    b: &GeocodingErrors,
    options: WilcoxonOptions,
) -> Result<(TestResult, usize), StatsError> {
    let b_errors: HashMap<_, f64> = b.keyed.iter().map(|(k, e)| (k, *e)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        a.keyed.iter().filter_map(|(k, e)| b_errors.get(k).map(|f| (*e, *f))).unzip();
    let paired = xs.len();
    Ok((wilcoxon_signed_rank(&xs, &ys, options)?, paired))
}
