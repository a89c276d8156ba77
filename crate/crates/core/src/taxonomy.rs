//! The pragmatic toponym taxonomy.
//!
//! Eleven fine-grained types grouped into two top-level classes. Five are
//! literal (the toponym names the physical place where something happens or
//! is located) and six are associative (the toponym stands for something merely
//! associated with a place). [`classify_top_level`] decides the class from
//! annotated context and noun-phrase features; it does not look at raw text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TopLevel {
    Literal,
    Associative,
}

impl TopLevel {
    pub fn label(self) -> &'static str {
        match self {
            TopLevel::Literal => "Literal",
            TopLevel::Associative => "Associative",
        }
    }
}

impl fmt::Display for TopLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaxonomyType {
    Literal,
    LiteralModifier,
    Mixed,
    Coercion,
    EmbeddedLiteral,
    EmbeddedAssociative,
    Metonymy,
    Language,
    Demonym,
    NonLitModifier,
    Homonym,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown toponym type label {0:?}")]
pub struct UnknownLabel(pub String);

impl TaxonomyType {
    pub const ALL: [TaxonomyType; 11] = [
        TaxonomyType::Literal,
        TaxonomyType::LiteralModifier,
        TaxonomyType::Mixed,
        TaxonomyType::Coercion,
        TaxonomyType::EmbeddedLiteral,
        TaxonomyType::EmbeddedAssociative,
        TaxonomyType::Metonymy,
        TaxonomyType::Language,
        TaxonomyType::Demonym,
        TaxonomyType::NonLitModifier,
        TaxonomyType::Homonym,
    ];

    /// Entity label written to BRAT `.ann` files.
    pub fn label(self) -> &'static str {
        match self {
            TaxonomyType::Literal => "Literal",
            TaxonomyType::LiteralModifier => "Literal_Modifier",
            TaxonomyType::Mixed => "Mixed",
            TaxonomyType::Coercion => "Coercion",
            TaxonomyType::EmbeddedLiteral => "Embedded_Literal",
            TaxonomyType::EmbeddedAssociative => "Embedded_Non_Lit",
            TaxonomyType::Metonymy => "Metonymy",
            TaxonomyType::Language => "Language",
            TaxonomyType::Demonym => "Demonym",
            TaxonomyType::NonLitModifier => "Non_Lit_Modifier",
            TaxonomyType::Homonym => "Homonym",
        }
    }

    pub fn top_level(self) -> TopLevel {
        top_level(self)
    }

    /// Types that denote a concept rather than a place and may legitimately
    /// lack coordinates.
    pub fn is_non_locational(self) -> bool {
        matches!(self, TaxonomyType::Demonym | TaxonomyType::Homonym | TaxonomyType::Language)
    }
}

impl fmt::Display for TaxonomyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TaxonomyType {
    type Err = UnknownLabel;

    /// Accepts the canonical labels and common spellings: case, `_`, `-` and
    /// spaces are ignored, and "NonLit", "Non_Literal" and "Associative" are
    /// interchangeable.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        let key = key
            .replace("nonliteral", "nonlit")
            .replace("associative", "nonlit")
            .replace("modifiers", "modifier");
        let t = match key.as_str() {
            "literal" => TaxonomyType::Literal,
            "literalmodifier" | "litmodifier" => TaxonomyType::LiteralModifier,
            "mixed" => TaxonomyType::Mixed,
            "coercion" => TaxonomyType::Coercion,
            "embeddedliteral" | "embeddedlit" => TaxonomyType::EmbeddedLiteral,
            "embeddednonlit" => TaxonomyType::EmbeddedAssociative,
            "metonymy" | "metonym" => TaxonomyType::Metonymy,
            "language" | "languages" => TaxonomyType::Language,
            "demonym" | "demonyms" => TaxonomyType::Demonym,
            "nonlitmodifier" => TaxonomyType::NonLitModifier,
            "homonym" | "homonyms" => TaxonomyType::Homonym,
            _ => return Err(UnknownLabel(s.to_string())),
        };
        Ok(t)
    }
}

/// The fixed type → class mapping: the first five types are literal, the rest associative.
pub fn top_level(t: TaxonomyType) -> TopLevel {
    use TaxonomyType::*;
    match t {
        Literal | LiteralModifier | Mixed | Coercion | EmbeddedLiteral => TopLevel::Literal,
        EmbeddedAssociative | Metonymy | Language | Demonym | NonLitModifier | Homonym => {
            TopLevel::Associative
        }
    }
}

/// What the surrounding clause says about the toponym.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContextKind {
    LiteralContext,
    AssociativeContext,
    AmbiguousOrMixed,
}

/// What the noun phrase itself suggests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NpSemantics {
    NounLiteral,
    AdjectivalLiteral,
    NonToponym,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ToponymFeatures {
    pub context_kind: ContextKind,
    /// The toponym modifies a noun-phrase head rather than being the head.
    pub is_modifier: bool,
    /// Head is concrete/static (accident, airport) as opposed to abstract/mobile
    /// (promise, troops). Only consulted for modifiers.
    pub head_concrete: bool,
    pub np_semantics: NpSemantics,
}

/// Decides literal vs associative from annotated features.
///
/// Literal or ambiguous/mixed context gives a literal toponym. In an associative
/// context a non-modifier is associative, and a modifier is literal only when
/// its head is concrete/static.
pub fn classify_top_level(f: &ToponymFeatures) -> TopLevel {
    match f.context_kind {
        ContextKind::LiteralContext | ContextKind::AmbiguousOrMixed => TopLevel::Literal,
        ContextKind::AssociativeContext if f.is_modifier && f.head_concrete => TopLevel::Literal,
        ContextKind::AssociativeContext => TopLevel::Associative,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(context_kind: ContextKind, is_modifier: bool, head_concrete: bool) -> ToponymFeatures {
        ToponymFeatures { context_kind, is_modifier, head_concrete, np_semantics: NpSemantics::NounLiteral }
    }

    #[test]
    fn classification_examples() {
        use ContextKind::*;
        // "The British weather": associative context, concrete head.
        assert_eq!(classify_top_level(&features(AssociativeContext, true, true)), TopLevel::Literal);
        for m in [false, true] {
            for h in [false, true] {
                assert_eq!(classify_top_level(&features(LiteralContext, m, h)), TopLevel::Literal);
            }
        }
        assert_eq!(classify_top_level(&features(AssociativeContext, false, false)), TopLevel::Associative);
        assert_eq!(classify_top_level(&features(AssociativeContext, false, true)), TopLevel::Associative);
    }

    #[test]
    fn fixed_mapping() {
        assert_eq!(top_level(TaxonomyType::Coercion), TopLevel::Literal);
        assert_eq!(top_level(TaxonomyType::Metonymy), TopLevel::Associative);
        assert_eq!(top_level(TaxonomyType::Mixed), TopLevel::Literal);
        let literal = TaxonomyType::ALL.iter().filter(|t| t.top_level() == TopLevel::Literal).count();
        assert_eq!(literal, 5);
        assert!(TaxonomyType::ALL[..5].iter().all(|t| t.top_level() == TopLevel::Literal));
    }

    #[test]
    fn labels_round_trip_and_aliases() {
        for t in TaxonomyType::ALL {
            assert_eq!(t.label().parse::<TaxonomyType>(), Ok(t));
        }
        assert_eq!("LiteralModifier".parse(), Ok(TaxonomyType::LiteralModifier));
        assert_eq!("Non_Literal_Modifier".parse(), Ok(TaxonomyType::NonLitModifier));
        assert_eq!("Embedded_NonLit".parse(), Ok(TaxonomyType::EmbeddedAssociative));
        assert_eq!("embedded-associative".parse(), Ok(TaxonomyType::EmbeddedAssociative));
        assert!("Facility".parse::<TaxonomyType>().is_err());
    }
}
