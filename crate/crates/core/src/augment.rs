//! Training-data augmentation by recombining expression contexts and heads.
//!
//! A `Context` expression marks a noun-phrase slot inside a literal or
//! associative clause. Each slot is refilled with fillers of the same kind:
//! gold toponyms of that top-level class, tagged in the output, and `Head`
//! expressions of that kind, left untagged. Output is one token and tag per
//! line with blank lines between sentences.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Document, ExpressionAnnotation, ExpressionRole, Span};
use crate::taxonomy::TopLevel;
use crate::text::{sentence_spans, tagging_tokens, CharIndex};

pub const OUTSIDE_TAG: &str = "O";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Filler {
    surface: String,
    /// Toponyms are tagged; other heads are not.
    toponym: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaggedToken {
    pub text: String,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaggedSentence {
    pub doc_id: String,
    pub context_id: String,
    pub filler: String,
    pub kind: TopLevel,
    pub text: String,
    pub tokens: Vec<TaggedToken>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AugmentWarning {
    pub doc_id: String,
    pub expression_id: String,
    pub message: String,
}

impl fmt::Display for AugmentWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.doc_id, self.expression_id, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Augmentation {
    pub sentences: Vec<TaggedSentence>,
    pub warnings: Vec<AugmentWarning>,
}

struct Slot<'a> {
    doc: &'a Document,
    expr: &'a ExpressionAnnotation,
}

fn surface_matches(doc: &Document, span: Span, surface: &str) -> bool {
    doc.slice(span) == Some(surface)
}

/// Up to `max_per_source` variants per context, drawn without replacement.
///
/// Context `i` (document order, then offset) samples from a ChaCha8 stream
/// seeded with `seed` on stream `i`, so output depends only on the inputs and
/// the seed. Expressions or toponyms whose surface disagrees with the text
/// are skipped with a warning.
pub fn generate_augmented(docs: &[Document], max_per_source: usize, seed: u64) -> Augmentation {
    let mut warnings = Vec::new();
    let mut literal = BTreeSet::new();
    let mut associative = BTreeSet::new();
    let mut slots = Vec::new();

    for doc in docs {
        for a in &doc.annotations {
            if !surface_matches(doc, a.span, &a.surface) {
                warnings.push(AugmentWarning {
                    doc_id: doc.doc_id.clone(),
                    expression_id: a.id.clone(),
                    message: "toponym surface does not match the text".into(),
                });
                continue;
            }
            let pool = match a.top_level() {
                TopLevel::Literal => &mut literal,
                TopLevel::Associative => &mut associative,
            };
            pool.insert(Filler { surface: a.surface.clone(), toponym: true });
        }
        for e in &doc.expressions {
            if !surface_matches(doc, e.span, &e.surface) {
                warnings.push(AugmentWarning {
                    doc_id: doc.doc_id.clone(),
                    expression_id: e.id.clone(),
                    message: format!("expression span {} does not match {:?}", e.span, e.surface),
                });
                continue;
            }
            match e.role {
                ExpressionRole::Context => slots.push(Slot { doc, expr: e }),
                ExpressionRole::Head => {
                    let pool = match e.kind.top_level() {
                        TopLevel::Literal => &mut literal,
                        TopLevel::Associative => &mut associative,
                    };
                    pool.insert(Filler { surface: e.surface.clone(), toponym: false });
                }
            }
        }
    }
    let literal: Vec<Filler> = literal.into_iter().collect();
    let associative: Vec<Filler> = associative.into_iter().collect();

    let sentences = slots
        .par_iter()
        .enumerate()
        .map(|(i, slot)| {
            let kind = slot.expr.kind.top_level();
            let pool: Vec<&Filler> = match kind {
                TopLevel::Literal => &literal,
                TopLevel::Associative => &associative,
            }
            .iter()
            .filter(|f| f.surface != slot.expr.surface)
            .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let amount = max_per_source.min(pool.len());
            rand::seq::index::sample(&mut rng, pool.len(), amount)
                .into_iter()
                .map(|j| substitute(slot, pool[j], kind))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Augmentation { sentences, warnings }
}

fn capitalise(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn substitute(slot: &Slot<'_>, filler: &Filler, kind: TopLevel) -> TaggedSentence {
    let doc = slot.doc;
    let span = slot.expr.span;
    let chars = CharIndex::new(&doc.text);
    // Sentences covering the slot; a slot across a boundary takes both.
    let sentences = sentence_spans(&doc.text);
    let s_start = sentences.iter().filter(|s| s.0 <= span.start).map(|s| s.0).max().unwrap_or(0);
    let s_end = sentences.iter().filter(|s| s.1 >= span.end).map(|s| s.1).min().unwrap_or(chars.len());
    let sentence = chars.slice(s_start, s_end).unwrap_or_default();
    let lead = sentence.chars().take_while(|c| c.is_whitespace()).count();

    let before = chars.slice(s_start + lead, span.start).unwrap_or_default();
    let after = chars.slice(span.end, s_end).unwrap_or_default().trim_end();
    let inserted = if before.is_empty() { capitalise(&filler.surface) } else { filler.surface.clone() };

    let offset = s_start + lead;
    let before_len = before.chars().count();
    let filler_len = inserted.chars().count();
    // Original offset after the slot to offset in the new sentence.
    let moved = |p: usize| p - span.end + before_len + filler_len;

    // Tagged spans in the new sentence: the filler, plus gold toponyms left intact.
    let mut tagged: Vec<(Span, TopLevel)> = Vec::new();
    if filler.toponym {
        tagged.push((Span { start: before_len, end: before_len + filler_len }, kind));
    }
    for a in &doc.annotations {
        if a.span.intersects(&span) || a.span.start < offset || a.span.end > s_end {
            continue;
        }
        let s = if a.span.end <= span.start {
            Span { start: a.span.start - offset, end: a.span.end - offset }
        } else {
            Span { start: moved(a.span.start), end: moved(a.span.end) }
        };
        tagged.push((s, a.top_level()));
    }
    tagged.sort_by_key(|t| t.0);

    let text = format!("{before}{inserted}{after}");
    let mut previous: Option<usize> = None;
    let tokens = tagging_tokens(&text)
        .into_iter()
        .map(|t| {
            let hit = tagged.iter().position(|(s, _)| s.start <= t.start && t.start < s.end);
            let tag = match hit {
                Some(k) => {
                    let prefix = if previous == Some(k) { "I" } else { "B" };
                    format!("{prefix}-{}", tagged[k].1.label())
                }
                None => OUTSIDE_TAG.to_string(),
            };
            previous = hit;
            TaggedToken { text: t.text.to_string(), tag }
        })
        .collect();

    TaggedSentence {
        doc_id: doc.doc_id.clone(),
        context_id: slot.expr.id.clone(),
        filler: filler.surface.clone(),
        kind,
        text,
        tokens,
    }
}

/// Writes `token<TAB>tag` lines, one blank line after each sentence.
pub fn write_tagged<W: Write>(mut out: W, sentences: &[TaggedSentence]) -> std::io::Result<()> {
    for s in sentences {
        for t in &s.tokens {
            writeln!(out, "{}\t{}", t.text, t.tag)?;
        }
        writeln!(out)?;
    }
    out.flush()
}
