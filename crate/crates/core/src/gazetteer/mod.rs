//! Geonames-backed name index.
//!
//! [`ingest`] reads the tab-separated Geonames main table (the layout of
//! `allCountries.txt`) into an immutable [`GazetteerIndex`] keyed by
//! case-folded name. Every record is reachable under its canonical name,
//! its ASCII name and each of its alternate names. Multi-word names are
//! single keys; tokenisation is the tagger's business.

pub mod cache;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geodesy::{great_circle_distance, Coordinate};
use crate::text::case_fold;

/// Number of tab-separated columns in the Geonames main table.
pub const GEONAMES_COLUMNS: usize = 19;

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("failed to read gazetteer dump: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid feature class {0:?}: expected a single letter")]
    FeatureClass(String),
    #[error("gazetteer cache: {0}")]
    Cache(String),
}

/// One gazetteer record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerEntry {
    pub id: u64,
    pub canonical_name: String,
    pub alternate_names: BTreeSet<String>,
    pub coord: Coordinate,
    pub population: u64,
    pub feature_class: char,
    pub feature_code: String,
    pub country_code: String,
}

impl GazetteerEntry {
    /// Geonames feature class `P`: cities, towns, villages.
    pub fn is_populated_place(&self) -> bool {
        self.feature_class == 'P'
    }
}

/// Set of Geonames feature classes to keep during ingest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureClassFilter(BTreeSet<char>);

impl FeatureClassFilter {
    pub fn new(classes: impl IntoIterator<Item = char>) -> Self {
        FeatureClassFilter(classes.into_iter().map(|c| c.to_ascii_uppercase()).collect())
    }

    /// Parses a comma-separated list such as `"P,A"`.
    pub fn parse_csv(csv: &str) -> Result<Self, GazetteerError> {
        let mut classes = BTreeSet::new();
        for part in csv.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let mut chars = part.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_alphabetic() => {
                    classes.insert(c.to_ascii_uppercase());
                }
                _ => return Err(GazetteerError::FeatureClass(part.to_string())),
            }
        }
        Ok(FeatureClassFilter(classes))
    }

    pub fn accepts(&self, class: char) -> bool {
        self.0.contains(&class)
    }

    pub fn classes(&self) -> impl Iterator<Item = char> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for FeatureClassFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(char::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// A line that could not be ingested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

/// Counts produced by [`ingest`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestSummary {
    pub lines: usize,
    pub indexed: usize,
    pub filtered_out: usize,
    pub skipped: Vec<SkippedLine>,
    /// Lowercase hex SHA-256 of the raw dump bytes.
    pub checksum: String,
}

/// Immutable name → candidates index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GazetteerIndex {
    /// Sorted by id.
    entries: Vec<GazetteerEntry>,
    by_id: HashMap<u64, usize>,
    /// Case-folded name → positions in `entries`, ordered by descending
    /// population then ascending id.
    name_map: HashMap<String, Vec<usize>>,
    checksum: String,
    filter: Option<FeatureClassFilter>,
}

impl GazetteerIndex {
    /// Builds an index from already-parsed entries. Later duplicates of an id are dropped.
    pub fn from_entries(
        entries: impl IntoIterator<Item = GazetteerEntry>,
        checksum: impl Into<String>,
        filter: Option<FeatureClassFilter>,
    ) -> Self {
        let mut seen = BTreeSet::new();
        let mut entries: Vec<GazetteerEntry> =
            entries.into_iter().filter(|e| seen.insert(e.id)).collect();
        entries.sort_by_key(|e| e.id);

        let by_id = entries.iter().enumerate().map(|(pos, e)| (e.id, pos)).collect();
        let mut name_map: HashMap<String, Vec<usize>> = HashMap::new();
        for (pos, entry) in entries.iter().enumerate() {
            let keys: BTreeSet<String> = std::iter::once(&entry.canonical_name)
                .chain(entry.alternate_names.iter())
                .map(|n| case_fold(n.trim()))
                .filter(|n| !n.is_empty())
                .collect();
            for key in keys {
                name_map.entry(key).or_default().push(pos);
            }
        }
        for positions in name_map.values_mut() {
            positions.sort_by(|&a, &b| {
                let (ea, eb) = (&entries[a], &entries[b]);
                eb.population.cmp(&ea.population).then(ea.id.cmp(&eb.id))
            });
        }

        GazetteerIndex { entries, by_id, name_map, checksum: checksum.into(), filter }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn get(&self, id: u64) -> Option<&GazetteerEntry> {
        self.by_id.get(&id).map(|&pos| &self.entries[pos])
    }

    pub fn contains(&self, id: u64) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn filter(&self) -> Option<&FeatureClassFilter> {
        self.filter.as_ref()
    }

    /// Snapshot identifier recorded in evaluation reports.
    pub fn version(&self) -> String {
        snapshot_version(&self.checksum, &self.filter.as_ref().map(|f| f.to_string()).unwrap_or_default())
    }

    /// Every entry whose canonical or alternate name matches `name` after case
    /// folding, by descending population then ascending id.
    pub fn lookup(&self, name: &str) -> Vec<&GazetteerEntry> {
        self.name_map
            .get(&case_fold(name.trim()))
            .map(|positions| positions.iter().map(|&p| &self.entries[p]).collect())
            .unwrap_or_default()
    }

    pub fn has_name(&self, name: &str) -> bool {
        self.name_map.contains_key(&case_fold(name.trim()))
    }

    /// The same-name candidate closest to `coord`; ties go to the lower id.
    pub fn nearest_entry(&self, name: &str, coord: Coordinate) -> Option<&GazetteerEntry> {
        self.lookup(name).into_iter().min_by(|a, b| {
            let da = great_circle_distance(a.coord, coord).km();
            let db = great_circle_distance(b.coord, coord).km();
            da.total_cmp(&db).then(a.id.cmp(&b.id))
        })
    }
}

/// Snapshot identifier from a dump checksum and a feature-class filter string
/// (empty when unfiltered).
pub fn snapshot_version(checksum: &str, filter: &str) -> String {
    let short = &checksum[..checksum.len().min(16)];
    if filter.is_empty() {
        format!("geonames-sha256:{short}")
    } else {
        format!("geonames-sha256:{short}+classes:{filter}")
    }
}

/// Reads a Geonames main-table dump.
///
/// Malformed lines are logged, skipped and listed in the summary; blank lines
/// are ignored. Only an I/O failure aborts the ingest.
pub fn ingest<R: BufRead>(
    mut dump: R,
    filter: Option<&FeatureClassFilter>,
) -> Result<(GazetteerIndex, IngestSummary), GazetteerError> {
    let mut hasher = Sha256::new();
    let mut summary = IngestSummary::default();
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    let mut buf = Vec::new();

    loop {
        buf.clear();
        if dump.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        hasher.update(&buf);
        summary.lines += 1;
        let line_no = summary.lines;

        let mut skip = |reason: String| {
            log::warn!("gazetteer line {line_no}: {reason}");
            summary.skipped.push(SkippedLine { line: line_no, reason });
        };

        let Ok(line) = std::str::from_utf8(&buf) else {
            skip("invalid UTF-8".into());
            continue;
        };
        let line = line.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        let entry = match parse_record(line) {
            Ok(e) => e,
            Err(reason) => {
                skip(reason);
                continue;
            }
        };
        if filter.is_some_and(|f| !f.accepts(entry.feature_class)) {
            summary.filtered_out += 1;
            continue;
        }
        if !seen.insert(entry.id) {
            skip(format!("duplicate id {}", entry.id));
            continue;
        }
        entries.push(entry);
    }

    summary.indexed = entries.len();
    summary.checksum = hex(&hasher.finalize());
    let index = GazetteerIndex::from_entries(entries, summary.checksum.clone(), filter.cloned());
    Ok((index, summary))
}

/// SHA-256 of a whole stream, as lowercase hex. Matches [`IngestSummary::checksum`].
pub fn dump_checksum<R: std::io::Read>(mut dump: R) -> Result<String, GazetteerError> {
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = dump.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_record(line: &str) -> Result<GazetteerEntry, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < GEONAMES_COLUMNS {
        return Err(format!("expected {GEONAMES_COLUMNS} tab-separated fields, found {}", fields.len()));
    }
    let id: u64 = fields[0].trim().parse().map_err(|_| format!("invalid id {:?}", fields[0]))?;
    let canonical_name = fields[1].trim().to_string();
    if canonical_name.is_empty() {
        return Err("empty name".into());
    }
    let lat: f64 = fields[4].trim().parse().map_err(|_| format!("invalid latitude {:?}", fields[4]))?;
    let lon: f64 = fields[5].trim().parse().map_err(|_| format!("invalid longitude {:?}", fields[5]))?;
    let coord = Coordinate::new(lat, lon).map_err(|e| e.to_string())?;
    let feature_class = match fields[6].trim() {
        "" => ' ',
        s if s.chars().count() == 1 => s.chars().next().unwrap_or(' '),
        s => return Err(format!("invalid feature class {s:?}")),
    };
    let population = match fields[14].trim() {
        "" => 0,
        s => s.parse::<u64>().map_err(|_| format!("invalid population {s:?}"))?,
    };

    let alternate_names = std::iter::once(fields[2])
        .chain(fields[3].split(','))
        .map(str::trim)
        .filter(|n| !n.is_empty() && *n != canonical_name)
        .map(str::to_string)
        .collect();

    Ok(GazetteerEntry {
        id,
        canonical_name,
        alternate_names,
        coord,
        population,
        feature_class,
        feature_code: fields[7].trim().to_string(),
        country_code: fields[8].trim().to_string(),
    })
}
