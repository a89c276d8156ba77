//! Text helpers shared by the gazetteer, corpus, tagger and augmentation code.
//!
//! All offsets exposed by this crate count Unicode scalar values (the BRAT
//! convention), never bytes.

use unicode_segmentation::UnicodeSegmentation;

/// Unicode simple case folding, applied per scalar value.
///
/// No normalisation or diacritic stripping: "Münster" and "Munster" stay distinct.
pub fn case_fold(s: &str) -> String {
    s.chars()
        .map(|c| {
            unicode_case_mapping::case_folded(c)
                .and_then(|cp| char::from_u32(cp.get()))
                .unwrap_or(c)
        })
        .collect()
}

/// Maps between scalar-value offsets and byte offsets of one string.
#[derive(Debug, Clone)]
pub struct CharIndex<'a> {
    text: &'a str,
    /// Byte offset of every char, plus `text.len()` as the final sentinel.
    byte_at: Vec<usize>,
}

impl<'a> CharIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut byte_at: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        byte_at.push(text.len());
        CharIndex { text, byte_at }
    }

    /// Length in scalar values.
    pub fn len(&self) -> usize {
        self.byte_at.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn byte_offset(&self, char_offset: usize) -> Option<usize> {
        self.byte_at.get(char_offset).copied()
    }

    /// Char offset of a byte offset that lies on a char boundary.
    pub fn char_offset(&self, byte_offset: usize) -> Option<usize> {
        self.byte_at.binary_search(&byte_offset).ok()
    }

    /// Slice by scalar-value offsets; `None` when out of range or reversed.
    pub fn slice(&self, start: usize, end: usize) -> Option<&'a str> {
        if start > end {
            return None;
        }
        let (s, e) = (self.byte_offset(start)?, self.byte_offset(end)?);
        Some(&self.text[s..e])
    }
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// A word token with scalar-value offsets into its source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub start: usize,
    pub end: usize,
    pub text: &'a str,
}

/// Word tokens along Unicode (UAX #29) word boundaries.
///
/// Whitespace and punctuation segments are dropped, so hyphenated words split
/// into their parts ("Jean-Paul" gives "Jean", "Paul").
pub fn word_tokens(text: &str) -> Vec<Token<'_>> {
    let index = CharIndex::new(text);
    text.split_word_bound_indices()
        .filter(|(_, w)| w.chars().any(char::is_alphanumeric))
        .map(|(b, w)| {
            let start = index.char_offset(b).expect("segment starts on a char boundary");
            Token { start, end: start + char_len(w), text: w }
        })
        .collect()
}

/// Tokens for sequence-tagging output: every non-whitespace word-boundary segment,
/// punctuation included.
pub fn tagging_tokens(text: &str) -> Vec<Token<'_>> {
    let index = CharIndex::new(text);
    text.split_word_bound_indices()
        .filter(|(_, w)| !w.chars().all(char::is_whitespace))
        .map(|(b, w)| {
            let start = index.char_offset(b).expect("segment starts on a char boundary");
            Token { start, end: start + char_len(w), text: w }
        })
        .collect()
}

/// Sentence spans (scalar-value offsets) along UAX #29 sentence boundaries.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let index = CharIndex::new(text);
    text.split_sentence_bound_indices()
        .map(|(b, s)| {
            let start = index.char_offset(b).expect("segment starts on a char boundary");
            (start, start + char_len(s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_is_simple_and_keeps_diacritics() {
        assert_eq!(case_fold("PARIS"), "paris");
        assert_eq!(case_fold("Münster"), "münster");
        assert_ne!(case_fold("Münster"), case_fold("Munster"));
        // Simple folding keeps sharp s as a single scalar value.
        assert_eq!(case_fold("STRAẞE"), "straße");
        assert_eq!(case_fold("ΣΊΣΥΦΟΣ"), case_fold("σίσυφος"));
    }

    #[test]
    fn char_offsets_are_scalar_values() {
        let text = "Zürich – Genève";
        let idx = CharIndex::new(text);
        assert_eq!(idx.len(), 15);
        assert_eq!(idx.slice(9, 15), Some("Genève"));
        assert_eq!(idx.slice(0, 16), None);
        assert_eq!(idx.slice(3, 2), None);
    }

    #[test]
    fn hyphens_split_and_punctuation_dropped() {
        let toks: Vec<_> = word_tokens("Accident in Stratford-upon-Avon, UK.")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(toks, ["Accident", "in", "Stratford", "upon", "Avon", "UK"]);
    }

    #[test]
    fn token_offsets_match_text() {
        let text = "Café in Zürich.";
        let idx = CharIndex::new(text);
        for t in word_tokens(text) {
            assert_eq!(idx.slice(t.start, t.end), Some(t.text));
        }
    }
}
