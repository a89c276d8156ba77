//! Gold documents, system predictions and the evaluation exclusion policy.

pub mod brat;
pub mod predictions;

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gazetteer::GazetteerIndex;
use crate::geodesy::Coordinate;
use crate::taxonomy::{TaxonomyType, TopLevel};
use crate::text::CharIndex;

pub use brat::{load_brat, parse_brat, write_ann, AnnotationIssue, BratConfig, BratDocument};
pub use predictions::{load_predictions, write_predictions, LineError, PredictionLoad, PredictionRecord};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{doc_id}.ann line {line}: {message}")]
    Parse { doc_id: String, line: usize, message: String },
    #[error("invalid span {start}..{end}: start must be before end")]
    Span { start: usize, end: usize },
}

/// Half-open character range `[start, end)` in scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Result<Self, CorpusError> {
        if start < end {
            Ok(Span { start, end })
        } else {
            Err(CorpusError::Span { start, end })
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// Number of shared characters.
    pub fn overlap(&self, other: &Span) -> usize {
        self.end.min(other.end).saturating_sub(self.start.max(other.start))
    }

    pub fn intersects(&self, other: &Span) -> bool {
        self.overlap(other) > 0
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModifierType {
    Adjective,
    Noun,
}

impl ModifierType {
    pub fn label(self) -> &'static str {
        match self {
            ModifierType::Adjective => "Adjective",
            ModifierType::Noun => "Noun",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adjective" | "adj" | "adjectival" => Some(ModifierType::Adjective),
            "noun" => Some(ModifierType::Noun),
            _ => None,
        }
    }
}

/// One gold toponym.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToponymAnnotation {
    /// BRAT entity id, e.g. `T12`.
    pub id: String,
    pub span: Span,
    pub surface: String,
    pub toponym_type: TaxonomyType,
    pub modifier_type: Option<ModifierType>,
    pub non_locational: Option<bool>,
    pub gazetteer_id: Option<u64>,
    pub coord: Option<Coordinate>,
}

impl ToponymAnnotation {
    pub fn top_level(&self) -> TopLevel {
        self.toponym_type.top_level()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExpressionKind {
    LiteralExpression,
    AssociativeExpression,
}

impl ExpressionKind {
    pub fn top_level(self) -> TopLevel {
        match self {
            ExpressionKind::LiteralExpression => TopLevel::Literal,
            ExpressionKind::AssociativeExpression => TopLevel::Associative,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ExpressionKind::LiteralExpression => "Literal_Expression",
            ExpressionKind::AssociativeExpression => "Associative_Expression",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExpressionRole {
    /// A noun-phrase slot whose clause fixes the kind; augmentation refills it.
    Context,
    /// A noun-phrase head usable as filler.
    Head,
}

impl ExpressionRole {
    pub fn label(self) -> &'static str {
        match self {
            ExpressionRole::Context => "Context",
            ExpressionRole::Head => "Head",
        }
    }
}

/// A literal or associative noun-phrase expression, used for augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionAnnotation {
    pub id: String,
    pub doc_id: String,
    pub span: Span,
    pub surface: String,
    pub kind: ExpressionKind,
    pub role: ExpressionRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    /// Sorted by start offset.
    pub annotations: Vec<ToponymAnnotation>,
    pub expressions: Vec<ExpressionAnnotation>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            text: text.into(),
            annotations: Vec::new(),
            expressions: Vec::new(),
        }
    }

    pub fn char_index(&self) -> CharIndex<'_> {
        CharIndex::new(&self.text)
    }

    /// Text under `span`, if it lies inside the document.
    pub fn slice(&self, span: Span) -> Option<&str> {
        self.char_index().slice(span.start, span.end)
    }

    /// Fills `coord` of every annotation whose gazetteer id is known, using the
    /// gazetteer's coordinates. Returns annotations whose previous coordinate
    /// disagreed with the gazetteer by more than 0.01 degrees.
    pub fn attach_coordinates(&mut self, gazetteer: &GazetteerIndex) -> Vec<CoordinateMismatch> {
        let mut mismatches = Vec::new();
        for ann in &mut self.annotations {
            let Some(entry) = ann.gazetteer_id.and_then(|id| gazetteer.get(id)) else {
                continue;
            };
            if let Some(old) = ann.coord {
                if (old.lat() - entry.coord.lat()).abs() > 0.01
                    || (old.lon() - entry.coord.lon()).abs() > 0.01
                {
                    mismatches.push(CoordinateMismatch {
                        doc_id: self.doc_id.clone(),
                        annotation_id: ann.id.clone(),
                        annotated: old,
                        gazetteer: entry.coord,
                    });
                }
            }
            ann.coord = Some(entry.coord);
        }
        mismatches
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateMismatch {
    pub doc_id: String,
    pub annotation_id: String,
    pub annotated: Coordinate,
    pub gazetteer: Coordinate,
}

/// A gold annotation together with the document it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldToponym {
    pub doc_id: String,
    pub annotation: ToponymAnnotation,
}

impl GoldToponym {
    pub fn span(&self) -> Span {
        self.annotation.span
    }
}

/// Every annotation of every document, in document order.
pub fn all_toponyms(docs: &[Document]) -> Vec<GoldToponym> {
    docs.iter()
        .flat_map(|d| {
            d.annotations
                .iter()
                .map(|a| GoldToponym { doc_id: d.doc_id.clone(), annotation: a.clone() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExclusionReason {
    /// No gazetteer entry: facilities, streets, venues and the like.
    NotInGazetteer,
    /// Demonym, homonym or language without coordinates.
    NonLocationalType,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExclusionReason::NotInGazetteer => "not in gazetteer",
            ExclusionReason::NonLocationalType => "non-locational type",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedToponym {
    pub toponym: GoldToponym,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExclusionOutcome {
    /// Kept annotations, coordinates taken from the gazetteer.
    pub kept: Vec<GoldToponym>,
    pub excluded: Vec<ExcludedToponym>,
}

/// Splits gold annotations into the geocoding test set and the excluded rest.
///
/// Demonyms, homonyms and languages with no coordinate at all are excluded as
/// non-locational. Any other annotation without an entry in `gazetteer` is
/// excluded as not resolvable. Everything else is kept. `kept` and `excluded`
/// partition the input.
pub fn apply_exclusion_policy(docs: &[Document], gazetteer: &GazetteerIndex) -> ExclusionOutcome {
    let mut outcome = ExclusionOutcome::default();
    for toponym in all_toponyms(docs) {
        let entry = toponym.annotation.gazetteer_id.and_then(|id| gazetteer.get(id));
        let has_coord = entry.is_some() || toponym.annotation.coord.is_some();
        let reason = if toponym.annotation.toponym_type.is_non_locational() && !has_coord {
            Some(ExclusionReason::NonLocationalType)
        } else if entry.is_none() {
            Some(ExclusionReason::NotInGazetteer)
        } else {
            None
        };
        match (reason, entry) {
            (None, Some(entry)) => {
                let mut kept = toponym;
                kept.annotation.coord = Some(entry.coord);
                outcome.kept.push(kept);
            }
            (Some(reason), _) => outcome.excluded.push(ExcludedToponym { toponym, reason }),
            (None, None) => unreachable!("annotations without an entry are excluded"),
        }
    }
    outcome
}

/// A directory of BRAT `.txt`/`.ann` pairs.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    /// Sorted by doc id.
    pub documents: Vec<Document>,
    pub issues: Vec<(String, AnnotationIssue)>,
}

impl Corpus {
    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.doc_id.clone()).collect()
    }

    pub fn annotation_count(&self) -> usize {
        self.documents.iter().map(|d| d.annotations.len()).sum()
    }
}

/// Loads every `*.txt` file in `dir` with its sibling `.ann` (a missing `.ann`
/// means no annotations). The doc id is the file stem.
pub fn load_corpus_dir(dir: &Path, config: &BratConfig) -> Result<Corpus, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut stems: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .filter_map(|p| Some((p.file_stem()?.to_str()?.to_string(), p)))
        .collect();
    stems.sort();

    let loaded: Vec<BratDocument> = stems
        .par_iter()
        .map(|(doc_id, txt)| {
            let text = std::fs::read_to_string(txt).map_err(io_err(txt))?;
            let ann_path = txt.with_extension("ann");
            let ann = match std::fs::read_to_string(&ann_path) {
                Ok(s) => s,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
                Err(e) => return Err(io_err(&ann_path)(e)),
            };
            parse_brat(doc_id, text, &ann, config)
        })
        .collect::<Result<_, _>>()?;

    let mut corpus = Corpus::default();
    for doc in loaded {
        let id = doc.document.doc_id.clone();
        corpus.issues.extend(doc.issues.into_iter().map(|i| (id.clone(), i)));
        corpus.documents.push(doc.document);
    }
    Ok(corpus)
}

/// Writes `doc` as `<dir>/<doc_id>.txt` and `<doc_id>.ann`.
pub fn save_brat(dir: &Path, doc: &Document, config: &BratConfig) -> Result<(), CorpusError> {
    let txt = dir.join(format!("{}.txt", doc.doc_id));
    let ann = dir.join(format!("{}.ann", doc.doc_id));
    std::fs::write(&txt, &doc.text).map_err(|source| CorpusError::Io { path: txt, source })?;
    std::fs::write(&ann, write_ann(doc, config)).map_err(|source| CorpusError::Io { path: ann, source })
}
