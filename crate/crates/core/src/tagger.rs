//! Baseline geotaggers: gazetteer dictionary matching and Oracle NER.

use std::collections::HashSet;
use std::io::BufRead;

use rayon::prelude::*;

use crate::corpus::{Document, GoldToponym, PredictionRecord, Span};
use crate::gazetteer::GazetteerIndex;
use crate::text::{case_fold, sentence_spans, word_tokens};

pub const DEFAULT_MAX_NGRAM: usize = 4;
pub const LOCATION_LABEL: &str = "Location";

const DEFAULT_BLOCKLIST: &str = include_str!("../data/blocklist_en.txt");

/// Words never tagged on their own.
///
/// An entry blocks a candidate whose surface equals it exactly, and also a
/// capitalised candidate that opens a sentence ("Nice weather today").
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blocklist(HashSet<String>);

impl Blocklist {
    pub fn empty() -> Self {
        Blocklist::default()
    }

    /// Built-in list of frequent lowercase English words.
    pub fn default_english() -> Self {
        Self::from_lines(DEFAULT_BLOCKLIST.lines())
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn from_reader<R: BufRead>(input: R) -> std::io::Result<Self> {
        let lines = input.lines().collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_lines(lines.iter().map(String::as_str)))
    }

    fn from_lines<'a>(lines: impl Iterator<Item = &'a str>) -> Self {
        Blocklist(
            lines
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn insert(&mut self, word: impl Into<String>) {
        self.0.insert(word.into());
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn blocks(&self, surface: &str, sentence_initial: bool) -> bool {
        self.0.contains(surface) || (sentence_initial && self.0.contains(&case_fold(surface)))
    }
}

/// Longest-match dictionary tagging.
///
/// Scans word tokens left to right; at each position tries the longest n-gram
/// (up to `max_ngram` tokens) whose text, taken verbatim from the document and
/// case-folded, is a gazetteer name and is not blocklisted. Matches never
/// overlap. Records are labelled [`LOCATION_LABEL`] and carry no coordinates.
pub fn gazetteer_tag(
    doc: &Document,
    index: &GazetteerIndex,
    blocklist: &Blocklist,
    max_ngram: usize,
) -> Vec<PredictionRecord> {
    let max_ngram = max_ngram.max(1);
    let tokens = word_tokens(&doc.text);
    let chars = doc.char_index();

    let mut sentence_initial = vec![false; tokens.len()];
    let mut t = 0;
    for (s_start, s_end) in sentence_spans(&doc.text) {
        while t < tokens.len() && tokens[t].start < s_start {
            t += 1;
        }
        if t < tokens.len() && tokens[t].start < s_end {
            sentence_initial[t] = true;
        }
    }

    let mut records = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let longest = (1..=max_ngram.min(tokens.len() - i)).rev().find_map(|n| {
            let (start, end) = (tokens[i].start, tokens[i + n - 1].end);
            let surface = chars.slice(start, end)?;
            (index.has_name(surface) && !blocklist.blocks(surface, sentence_initial[i]))
                .then_some((n, start, end, surface))
        });
        match longest {
            Some((n, start, end, surface)) => {
                records.push(
                    PredictionRecord::new(&doc.doc_id, Span { start, end }, surface).with_label(LOCATION_LABEL),
                );
                i += n;
            }
            None => i += 1,
        }
    }
    records
}

/// [`gazetteer_tag`] over many documents in parallel, output in document order.
pub fn tag_corpus(
    docs: &[Document],
    index: &GazetteerIndex,
    blocklist: &Blocklist,
    max_ngram: usize,
) -> Vec<PredictionRecord> {
    docs.par_iter()
        .map(|d| gazetteer_tag(d, index, blocklist, max_ngram))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Perfect geotagging: one record per gold toponym, span copied verbatim.
pub fn oracle_spans(gold: &[GoldToponym]) -> Vec<PredictionRecord> {
    gold.iter()
        .map(|g| {
            PredictionRecord::new(&g.doc_id, g.annotation.span, &g.annotation.surface).with_label(LOCATION_LABEL)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gazetteer::ingest;
    use crate::gazetteer::tests::record;

    fn index(names: &[&str]) -> GazetteerIndex {
        let dump: String = names
            .iter()
            .enumerate()
            .map(|(i, n)| record(i as u64 + 1, n, "", 10.0, 10.0, 'P', 100))
            .collect();
        ingest(dump.as_bytes(), None).unwrap().0
    }

    fn surfaces(records: &[PredictionRecord]) -> Vec<&str> {
        records.iter().map(|r| r.surface.as_str()).collect()
    }

    #[test]
    fn single_match() {
        let doc = Document::new("d", "Accident in Melbourne.");
        let out = gazetteer_tag(&doc, &index(&["Melbourne"]), &Blocklist::default_english(), 4);
        assert_eq!(surfaces(&out), ["Melbourne"]);
        assert_eq!(out[0].span, Span { start: 12, end: 21 });
        assert_eq!(out[0].predicted_label.as_deref(), Some("Location"));
        assert!(out[0].predicted_coord.is_none());
    }

    #[test]
    fn longest_match_wins() {
        let doc = Document::new("d", "Inmates at Waldo County Jail escaped.");
        let out = gazetteer_tag(&doc, &index(&["Waldo County Jail", "Waldo"]), &Blocklist::empty(), 4);
        assert_eq!(surfaces(&out), ["Waldo County Jail"]);
        // With a shorter window only the single token fits.
        let out = gazetteer_tag(&doc, &index(&["Waldo County Jail", "Waldo"]), &Blocklist::empty(), 2);
        assert_eq!(surfaces(&out), ["Waldo"]);
    }

    #[test]
    fn blocklisted_common_word() {
        let idx = index(&["Nice"]);
        let mut block = Blocklist::empty();
        block.insert("nice");
        assert!(gazetteer_tag(&Document::new("d", "What a nice view"), &idx, &block, 4).is_empty());
        assert!(gazetteer_tag(&Document::new("d", "Nice view. Really."), &idx, &block, 4).is_empty());
        let out = gazetteer_tag(&Document::new("d", "We flew to Nice yesterday."), &idx, &block, 4);
        assert_eq!(surfaces(&out), ["Nice"]);
        assert!(gazetteer_tag(&Document::new("d", "What a nice view"), &idx, &Blocklist::empty(), 4).len() == 1);
    }

    #[test]
    fn matches_do_not_overlap() {
        let doc = Document::new("d", "From New York City to York.");
        let out = gazetteer_tag(&doc, &index(&["New York", "York City", "York"]), &Blocklist::empty(), 4);
        assert_eq!(surfaces(&out), ["New York", "York"]);
        for w in out.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
        }
    }

    #[test]
    fn default_blocklist_loads() {
        let b = Blocklist::default_english();
        assert!(b.len() > 300);
        assert!(b.blocks("nice", false));
        assert!(b.blocks("Reading", true));
        assert!(!b.blocks("Reading", false));
    }

    #[test]
    fn oracle_copies_spans() {
        assert!(oracle_spans(&[]).is_empty());
    }
}
