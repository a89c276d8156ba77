//! Significance tests and cross-validation folds.
//!
//! McNemar's test compares two geotaggers on the same gold items, the Wilcoxon
//! signed-rank test compares two geocoders on paired errors, and the paired
//! t-test compares per-fold scores. Tail probabilities use closed forms built
//! on `erfc`, so results are reproducible bit for bit.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::metrics::SignificanceTest;

pub const ALPHA_05: f64 = 0.05;
pub const ALPHA_01: f64 = 0.01;
/// Below this many disagreements the chi-squared approximation is poor.
pub const MCNEMAR_MIN_DISAGREEMENTS: u64 = 25;
/// Below this many non-zero pairs the normal approximation is poor.
pub const WILCOXON_MIN_PAIRS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} paired values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("k must be between 2 and the number of documents ({n}), got {k}")]
    FoldCount { k: usize, n: usize },
    #[error("document id {0:?} listed twice")]
    DuplicateDocument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFlag {
    /// McNemar with `b + c = 0`.
    NoDisagreements,
    /// McNemar with `b + c < 25`.
    SmallTable,
    /// Wilcoxon where every pair is equal.
    AllDifferencesZero,
    /// Wilcoxon with fewer than ten non-zero differences.
    FewPairs,
    /// Paired t-test whose differences have no spread.
    ZeroVariance,
}

impl fmt::Display for TestFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestFlag::NoDisagreements => "no disagreements between the systems",
            TestFlag::SmallTable => "fewer than 25 disagreements; chi-squared approximation unreliable",
            TestFlag::AllDifferencesZero => "all paired differences are zero",
            TestFlag::FewPairs => "fewer than 10 non-zero differences; normal approximation weak",
            TestFlag::ZeroVariance => "paired differences have zero variance",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Observations the statistic is based on.
    pub n: usize,
    pub flags: Vec<TestFlag>,
}

impl TestResult {
    pub fn significant_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    pub fn to_report(&self, test: &str) -> SignificanceTest {
        SignificanceTest {
            test: test.to_string(),
            statistic: self.statistic,
            p_value: self.p_value,
            n: self.n,
            significant_at_05: self.significant_at(ALPHA_05),
            significant_at_01: self.significant_at(ALPHA_01),
            notes: self.flags.iter().map(ToString::to_string).collect(),
        }
    }
}

/// Upper tail of the chi-squared distribution with one degree of freedom.
pub fn chi2_1_upper_tail(s: f64) -> f64 {
    erfc((s.max(0.0) / 2.0).sqrt()).clamp(0.0, 1.0)
}

/// Two-tailed standard normal probability of `|Z| >= |z|`.
pub fn normal_two_tailed(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Discordant cells of a paired 2x2 table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct McNemarTable {
    /// System A right, B wrong.
    pub b: u64,
    /// System A wrong, B right.
    pub c: u64,
}

impl McNemarTable {
    pub fn from_outcomes(a_correct: &[bool], b_correct: &[bool]) -> Result<Self, StatsError> {
        if a_correct.len() != b_correct.len() {
            return Err(StatsError::LengthMismatch(a_correct.len(), b_correct.len()));
        }
        let mut t = McNemarTable::default();
        for (&a, &b) in a_correct.iter().zip(b_correct) {
            match (a, b) {
                (true, false) => t.b += 1,
                (false, true) => t.c += 1,
                _ => {}
            }
        }
        Ok(t)
    }

    pub fn disagreements(&self) -> u64 {
        self.b + self.c
    }
}

/// Chi-squared statistic `(|b - c| - 1)^2 / (b + c)` with continuity
/// correction, or `(b - c)^2 / (b + c)` without.
pub fn mcnemar(t: McNemarTable, continuity_correction: bool) -> TestResult {
    let n = t.disagreements();
    if n == 0 {
        return TestResult { statistic: 0.0, p_value: 1.0, n: 0, flags: vec![TestFlag::NoDisagreements] };
    }
    let diff = t.b.abs_diff(t.c) as f64;
    let numerator = if continuity_correction { (diff - 1.0).max(0.0) } else { diff };
    let statistic = numerator * numerator / n as f64;
    let mut flags = Vec::new();
    if n < MCNEMAR_MIN_DISAGREEMENTS {
        flags.push(TestFlag::SmallTable);
    }
    TestResult { statistic, p_value: chi2_1_upper_tail(statistic), n: n as usize, flags }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WilcoxonOptions {
    /// Subtract `sum(t^3 - t) / 48` from the variance for each group of `t` tied ranks.
    pub tie_correction: bool,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        WilcoxonOptions { tie_correction: true }
    }
}

/// Two-tailed Wilcoxon signed-rank test, normal approximation.
///
/// Differences are `a - b`; zeros are dropped and tied magnitudes share their
/// mid-rank. `z = (W+ - W-) / (2 sigma)`, positive when `a` tends to exceed
/// `b`, so swapping the arguments negates it exactly.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], options: WilcoxonOptions) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(TestResult { statistic: 0.0, p_value: 1.0, n: 0, flags: vec![TestFlag::AllDifferencesZero] });
    }
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));

    let (mut w_plus, mut w_minus, mut tie_term) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let rank = (i + j + 2) as f64 / 2.0;
        for d in &diffs[i..=j] {
            if *d > 0.0 {
                w_plus += rank;
            } else {
                w_minus += rank;
            }
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }

    let nf = n as f64;
    let mut variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    if options.tie_correction {
        variance -= tie_term / 48.0;
    }
    let mut flags = Vec::new();
    if n < WILCOXON_MIN_PAIRS {
        flags.push(TestFlag::FewPairs);
    }
    let z = if variance > 0.0 { (w_plus - w_minus) / (2.0 * variance.sqrt()) } else { 0.0 };
    Ok(TestResult { statistic: z, p_value: normal_two_tailed(z), n, flags })
}

/// Paired two-tailed t-test with `k - 1` degrees of freedom.
///
/// Differences whose spread is negligible against the scores themselves are
/// reported as zero variance: `t = 0, p = 1` when the mean difference is also
/// negligible, else `t = ±inf, p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let k = a.len();
    if k < 2 {
        return Err(StatsError::TooFewValues { needed: 2, got: k });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let kf = k as f64;
    let mean = diffs.iter().sum::<f64>() / kf;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (kf - 1.0)).sqrt();
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    let tiny = 1e-12 * scale;

    if sd <= tiny {
        let (statistic, p_value) = if mean.abs() <= tiny { (0.0, 1.0) } else { (mean.signum() * f64::INFINITY, 0.0) };
        return Ok(TestResult { statistic, p_value, n: k, flags: vec![TestFlag::ZeroVariance] });
    }
    let t = mean / (sd / kf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, kf - 1.0).expect("degrees of freedom are positive");
    let p_value = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TestResult { statistic: t, p_value, n: k, flags: Vec::new() })
}

/// Article-level cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<String>>,
}

impl FoldPlan {
    pub fn fold_of(&self, doc_id: &str) -> Option<usize> {
        self.folds.iter().position(|f| f.iter().any(|d| d == doc_id))
    }

    /// Training documents (all other folds, in fold order) and test documents for fold `i`.
    pub fn split(&self, i: usize) -> (Vec<&str>, Vec<&str>) {
        let train = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().map(String::as_str))
            .collect();
        let test = self.folds.get(i).map(|f| f.iter().map(String::as_str).collect()).unwrap_or_default();
        (train, test)
    }
}

/// Shuffles whole documents with a seeded ChaCha8 generator and deals them
/// into `k` contiguous blocks; the first `n % k` folds take one extra.
pub fn make_folds(doc_ids: &[String], k: usize, seed: u64) -> Result<FoldPlan, StatsError> {
    let n = doc_ids.len();
    if k < 2 || k > n {
        return Err(StatsError::FoldCount { k, n });
    }
    let mut seen = HashSet::new();
    for id in doc_ids {
        if !seen.insert(id.as_str()) {
            return Err(StatsError::DuplicateDocument(id.clone()));
        }
    }
    let mut shuffled = doc_ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut rest = shuffled.as_slice();
    for i in 0..k {
        let (fold, tail) = rest.split_at(base + usize::from(i < extra));
        folds.push(fold.to_vec());
        rest = tail;
    }
    Ok(FoldPlan { k, seed, folds })
}
