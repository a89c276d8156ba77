//! Toponym resolution by population, and database alignment.

use std::collections::HashMap;
use std::io::BufRead;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{LineError, PredictionRecord};
use crate::gazetteer::{GazetteerEntry, GazetteerIndex};
use crate::text::case_fold;

/// Geocoding needs at least this fraction of gold toponyms resolved to be representative.
pub const MIN_REPRESENTATIVE_FRACTION: f64 = 0.5;

/// Maps non-standard surface forms ("Russian", "Congolese") to gazetteer names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon(HashMap<String, String>);

impl Lexicon {
    /// Two tab-separated UTF-8 columns: surface form, canonical name. Blank
    /// lines and `#` comments are skipped; other malformed lines are returned.
    pub fn from_reader<R: BufRead>(input: R) -> std::io::Result<(Self, Vec<LineError>)> {
        let mut map = HashMap::new();
        let mut errors = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match trimmed.split('\t').collect::<Vec<_>>().as_slice() {
                [surface, canonical] if !surface.trim().is_empty() && !canonical.trim().is_empty() => {
                    map.insert(case_fold(surface.trim()), canonical.trim().to_string());
                }
                _ => errors.push(LineError { line: i + 1, message: "expected two tab-separated columns".into() }),
            }
        }
        Ok((Lexicon(map), errors))
    }

    pub fn insert(&mut self, surface: &str, canonical: impl Into<String>) {
        self.0.insert(case_fold(surface), canonical.into());
    }

    pub fn canonical(&self, surface: &str) -> Option<&str> {
        self.0.get(&case_fold(surface.trim())).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ResolverOptions {
    /// Restrict candidates to populated places (feature class `P`).
    pub populated_only: bool,
    pub lexicon: Option<Lexicon>,
}

impl ResolverOptions {
    /// Candidates for `surface`: direct name matches, else the lexicon's
    /// canonical name. Ordered by descending population then ascending id.
    pub fn candidates<'a>(&self, index: &'a GazetteerIndex, surface: &str) -> Vec<&'a GazetteerEntry> {
        let mut found = index.lookup(surface);
        if found.is_empty() {
            if let Some(canonical) = self.lexicon.as_ref().and_then(|l| l.canonical(surface)) {
                found = index.lookup(canonical);
            }
        }
        if self.populated_only {
            found.retain(|e| e.is_populated_place());
        }
        found
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Resolution {
    pub records: Vec<PredictionRecord>,
    /// Positions of records left without coordinates.
    pub unresolved: Vec<usize>,
}

impl Resolution {
    pub fn resolved_count(&self) -> usize {
        self.records.len() - self.unresolved.len()
    }
}

/// Population heuristic: each record gets the coordinates of its most
/// populous candidate (ties to the lowest id). Records without candidates
/// come back with no coordinates and are listed in `unresolved`.
pub fn resolve_population(
    records: &[PredictionRecord],
    index: &GazetteerIndex,
    options: &ResolverOptions,
) -> Resolution {
    let resolved: Vec<PredictionRecord> = records
        .par_iter()
        .map(|r| {
            let best = options
                .candidates(index, &r.surface)
                .into_iter()
                .max_by(|a, b| a.population.cmp(&b.population).then(b.id.cmp(&a.id)));
            PredictionRecord { predicted_coord: best.map(|e| e.coord), ..r.clone() }
        })
        .collect();
    let unresolved = positions_without_coord(&resolved);
    Resolution { records: resolved, unresolved }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Alignment {
    pub records: Vec<PredictionRecord>,
    /// Positions of records passed through unchanged: no coordinates, or no
    /// same-name gazetteer candidate.
    pub flagged: Vec<usize>,
}

/// Database alignment: replaces each predicted coordinate, which may come from
/// another knowledge base, with that of the nearest same-name gazetteer entry.
pub fn align_to_gazetteer(
    records: &[PredictionRecord],
    index: &GazetteerIndex,
    options: &ResolverOptions,
) -> Alignment {
    let aligned: Vec<(PredictionRecord, bool)> = records
        .par_iter()
        .map(|r| {
            let Some(coord) = r.predicted_coord else {
                return (r.clone(), true);
            };
            let nearest = options.candidates(index, &r.surface).into_iter().min_by(|a, b| {
                let da = a.coord.distance_to(&coord).km();
                let db = b.coord.distance_to(&coord).km();
                da.total_cmp(&db).then(a.id.cmp(&b.id))
            });
            match nearest {
                Some(e) => (PredictionRecord { predicted_coord: Some(e.coord), ..r.clone() }, false),
                None => (r.clone(), true),
            }
        })
        .collect();
    let flagged = aligned.iter().enumerate().filter(|(_, (_, f))| *f).map(|(i, _)| i).collect();
    Alignment { records: aligned.into_iter().map(|(r, _)| r).collect(), flagged }
}

fn positions_without_coord(records: &[PredictionRecord]) -> Vec<usize> {
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.predicted_coord.is_none())
        .map(|(i, _)| i)
        .collect()
}

/// Warning emitted when fewer than half of the gold toponyms were resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentativenessWarning {
    pub resolved: usize,
    pub gold: usize,
    pub fraction: f64,
}

impl std::fmt::Display for RepresentativenessWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "only {} of {} gold toponyms ({:.1}%) were geotagged and resolved; at least {:.0}% are needed for a representative geocoding sample",
            self.resolved,
            self.gold,
            self.fraction * 100.0,
            MIN_REPRESENTATIVE_FRACTION * 100.0
        )
    }
}

pub fn check_representativeness(resolved: usize, gold: usize) -> Option<RepresentativenessWarning> {
    if gold == 0 {
        return None;
    }
    let fraction = resolved as f64 / gold as f64;
    (fraction < MIN_REPRESENTATIVE_FRACTION).then_some(RepresentativenessWarning { resolved, gold, fraction })
}
