//! BRAT standoff reader and writer.
//!
//! Recognised `.ann` lines (fields separated by tabs):
//!
//! ```text
//! T1	Literal 0 6	Russia                  entity: type, char offsets, surface
//! A1	modifier_type T1 Adjective              attribute with value
//! A2	non_locational T1                       binary attribute (true)
//! N1	Reference T1 Geonames:2017370	Russia  gazetteer link
//! N2	Reference T1 Coordinates:55.75,37.61	Russia
//! #1	AnnotatorNotes T1	55.75, 37.61        note; a "lat, lon" note is a coordinate
//! ```
//!
//! `R`, `E` and `*` lines are accepted and ignored. Offsets count Unicode scalar
//! values. Problems confined to one annotation (bad offsets, surface mismatch,
//! dangling references) are collected as [`AnnotationIssue`]s; a line that is
//! not BRAT at all fails the whole file.

use std::collections::HashMap;
use std::io::Read;

use serde::Serialize;

use super::{
    CorpusError, Document, ExpressionAnnotation, ExpressionKind, ExpressionRole, ModifierType, Span,
    ToponymAnnotation,
};
use crate::geodesy::Coordinate;
use crate::taxonomy::TaxonomyType;
use crate::text::CharIndex;

/// Attribute and normalisation names. Defaults follow the GeoWebNews annotation scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BratConfig {
    pub modifier_attribute: String,
    pub non_locational_attribute: String,
    pub role_attribute: String,
    /// Normalisation database prefix carrying gazetteer ids.
    pub gazetteer_db: String,
    /// Normalisation database prefix carrying `lat,lon` pairs.
    pub coordinate_db: String,
}

impl Default for BratConfig {
    fn default() -> Self {
        BratConfig {
            modifier_attribute: "modifier_type".into(),
            non_locational_attribute: "non_locational".into(),
            role_attribute: "role".into(),
            gazetteer_db: "Geonames".into(),
            coordinate_db: "Coordinates".into(),
        }
    }
}

/// A problem with one annotation line; the rest of the document still loads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotationIssue {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BratDocument {
    pub document: Document,
    pub issues: Vec<AnnotationIssue>,
}

/// Reads a `.txt`/`.ann` pair from two streams.
pub fn load_brat<T: Read, A: Read>(
    doc_id: &str,
    mut text: T,
    mut ann: A,
    config: &BratConfig,
) -> Result<BratDocument, CorpusError> {
    let io = |source| CorpusError::Io { path: doc_id.into(), source };
    let mut text_buf = String::new();
    text.read_to_string(&mut text_buf).map_err(io)?;
    let mut ann_buf = String::new();
    ann.read_to_string(&mut ann_buf).map_err(io)?;
    parse_brat(doc_id, text_buf, &ann_buf, config)
}

enum Target {
    Toponym(usize),
    Expression(usize),
}

struct Reference<'a> {
    line: usize,
    kind: char,
    name: &'a str,
    target: &'a str,
    value: Option<&'a str>,
    note: &'a str,
}

pub fn parse_brat(
    doc_id: &str,
    text: String,
    ann: &str,
    config: &BratConfig,
) -> Result<BratDocument, CorpusError> {
    let fatal = |line: usize, message: String| CorpusError::Parse { doc_id: doc_id.to_string(), line, message };
    let index = CharIndex::new(&text);
    let mut issues = Vec::new();
    let mut annotations: Vec<ToponymAnnotation> = Vec::new();
    let mut expressions: Vec<ExpressionAnnotation> = Vec::new();
    let mut targets: HashMap<String, Target> = HashMap::new();
    let mut references = Vec::new();

    for (i, raw) in ann.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            continue;
        }
        let mut fields = raw.splitn(3, '\t');
        let id = fields.next().unwrap_or_default().trim();
        let middle = fields.next();
        let tail = fields.next().unwrap_or_default();
        let kind = id.chars().next().unwrap_or(' ');

        match kind {
            'T' => {
                // Tolerate space-separated entity lines: "T1 Literal 0 6 Russia".
                let (id, header, surface) = match middle {
                    Some(m) => (id.to_string(), m.to_string(), tail.to_string()),
                    None => {
                        let parts: Vec<&str> = raw.split_whitespace().collect();
                        if parts.len() < 4 {
                            return Err(fatal(line, format!("malformed entity line {raw:?}")));
                        }
                        let surface = raw
                            .splitn(5, char::is_whitespace)
                            .nth(4)
                            .unwrap_or_default()
                            .to_string();
                        (parts[0].to_string(), parts[1..4].join(" "), surface)
                    }
                };
                let mut head = header.split_whitespace();
                let (Some(label), Some(start), Some(end)) = (head.next(), head.next(), head.next()) else {
                    return Err(fatal(line, format!("malformed entity line {raw:?}")));
                };
                if header.contains(';') {
                    issues.push(AnnotationIssue { line, message: format!("{id}: discontinuous spans are not supported") });
                    continue;
                }
                let (Ok(start), Ok(end)) = (start.parse::<usize>(), end.parse::<usize>()) else {
                    return Err(fatal(line, format!("non-numeric offsets in {raw:?}")));
                };
                let span = match Span::new(start, end) {
                    Ok(s) if end <= index.len() => s,
                    _ => {
                        issues.push(AnnotationIssue {
                            line,
                            message: format!("{id}: offsets {start}..{end} outside text of length {}", index.len()),
                        });
                        continue;
                    }
                };
                let actual = index.slice(start, end).unwrap_or_default();
                if actual != surface {
                    issues.push(AnnotationIssue {
                        line,
                        message: format!("{id}: surface {surface:?} does not match text {actual:?}"),
                    });
                    continue;
                }
                if targets.contains_key(&id) {
                    return Err(fatal(line, format!("duplicate id {id}")));
                }
                if let Some(kind) = expression_kind(label) {
                    targets.insert(id.clone(), Target::Expression(expressions.len()));
                    expressions.push(ExpressionAnnotation {
                        id,
                        doc_id: doc_id.to_string(),
                        span,
                        surface,
                        kind,
                        role: ExpressionRole::Context,
                    });
                    continue;
                }
                match label.parse::<TaxonomyType>() {
                    Ok(toponym_type) => {
                        targets.insert(id.clone(), Target::Toponym(annotations.len()));
                        annotations.push(ToponymAnnotation {
                            id,
                            span,
                            surface,
                            toponym_type,
                            modifier_type: None,
                            non_locational: None,
                            gazetteer_id: None,
                            coord: None,
                        });
                    }
                    Err(e) => issues.push(AnnotationIssue { line, message: format!("{id}: {e}") }),
                }
            }
            'A' | 'M' | 'N' | '#' => {
                let Some(middle) = middle else {
                    return Err(fatal(line, format!("malformed line {raw:?}")));
                };
                let mut parts = middle.split_whitespace();
                let (Some(name), Some(target)) = (parts.next(), parts.next()) else {
                    return Err(fatal(line, format!("malformed line {raw:?}")));
                };
                references.push(Reference {
                    line,
                    kind: if kind == 'M' { 'A' } else { kind },
                    name,
                    target,
                    value: parts.next(),
                    note: tail,
                });
            }
            'R' | 'E' | '*' => {}
            _ => return Err(fatal(line, format!("unrecognised annotation line {raw:?}"))),
        }
    }

    for r in references {
        let issue = |message: String| AnnotationIssue { line: r.line, message };
        let Some(target) = targets.get(r.target) else {
            issues.push(issue(format!("reference to unknown annotation {}", r.target)));
            continue;
        };
        match (r.kind, target) {
            ('A', Target::Toponym(i)) => {
                let ann = &mut annotations[*i];
                if r.name == config.modifier_attribute {
                    match r.value.and_then(ModifierType::parse) {
                        Some(m) => ann.modifier_type = Some(m),
                        None => issues.push(issue(format!("invalid {} value {:?}", r.name, r.value))),
                    }
                } else if r.name == config.non_locational_attribute {
                    match parse_flag(r.value) {
                        Some(b) => ann.non_locational = Some(b),
                        None => issues.push(issue(format!("invalid {} value {:?}", r.name, r.value))),
                    }
                }
            }
            ('A', Target::Expression(i)) => {
                let expr = &mut expressions[*i];
                if r.name == config.role_attribute {
                    match r.value.map(str::to_ascii_lowercase).as_deref() {
                        Some("context") => expr.role = ExpressionRole::Context,
                        Some("head") => expr.role = ExpressionRole::Head,
                        _ => issues.push(issue(format!("invalid {} value {:?}", r.name, r.value))),
                    }
                } else if r.name == config.non_locational_attribute {
                    match parse_flag(r.value) {
                        Some(true) => expr.kind = ExpressionKind::AssociativeExpression,
                        Some(false) => expr.kind = ExpressionKind::LiteralExpression,
                        None => issues.push(issue(format!("invalid {} value {:?}", r.name, r.value))),
                    }
                }
            }
            ('N', Target::Toponym(i)) => {
                let ann = &mut annotations[*i];
                let Some((db, key)) = r.value.and_then(|v| v.split_once(':')) else {
                    issues.push(issue(format!("normalisation without DB:ID reference: {:?}", r.value)));
                    continue;
                };
                if db == config.gazetteer_db {
                    match key.parse::<u64>() {
                        Ok(id) => ann.gazetteer_id = Some(id),
                        Err(_) => issues.push(issue(format!("invalid gazetteer id {key:?}"))),
                    }
                } else if db == config.coordinate_db {
                    match parse_lat_lon(key) {
                        Some(c) => ann.coord = Some(c),
                        None => issues.push(issue(format!("invalid coordinates {key:?}"))),
                    }
                }
            }
            ('#', Target::Toponym(i)) => {
                if let Some(c) = parse_lat_lon(r.note) {
                    annotations[*i].coord = Some(c);
                }
            }
            _ => {}
        }
    }

    annotations.sort_by(|a, b| a.span.cmp(&b.span).then_with(|| a.id.cmp(&b.id)));
    expressions.sort_by(|a, b| a.span.cmp(&b.span).then_with(|| a.id.cmp(&b.id)));
    Ok(BratDocument {
        document: Document { doc_id: doc_id.to_string(), text, annotations, expressions },
        issues,
    })
}

fn expression_kind(label: &str) -> Option<ExpressionKind> {
    let key: String = label
        .chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .flat_map(char::to_lowercase)
        .collect();
    match key.as_str() {
        "literalexpression" => Some(ExpressionKind::LiteralExpression),
        "associativeexpression" | "nonliteralexpression" | "nonlitexpression" => {
            Some(ExpressionKind::AssociativeExpression)
        }
        _ => None,
    }
}

fn parse_flag(value: Option<&str>) -> Option<bool> {
    match value.map(str::to_ascii_lowercase).as_deref() {
        None | Some("true") | Some("yes") => Some(true),
        Some("false") | Some("no") => Some(false),
        _ => None,
    }
}

/// Parses `"lat,lon"`, `"lat, lon"` or `"lat lon"`.
fn parse_lat_lon(s: &str) -> Option<Coordinate> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    let mut parts = s.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty());
    let lat = parts.next()?.parse().ok()?;
    let lon = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Coordinate::new(lat, lon).ok()
}

/// Serialises the annotations of `doc` as `.ann` content.
///
/// Coordinates are written whenever present so that re-reading the output
/// reproduces every field.
pub fn write_ann(doc: &Document, config: &BratConfig) -> String {
    let mut out = String::new();
    let mut attr = 0;
    let mut norm = 0;
    for a in &doc.annotations {
        out += &format!("{}\t{} {} {}\t{}\n", a.id, a.toponym_type.label(), a.span.start, a.span.end, a.surface);
        if let Some(m) = a.modifier_type {
            attr += 1;
            out += &format!("A{attr}\t{} {} {}\n", config.modifier_attribute, a.id, m.label());
        }
        if let Some(flag) = a.non_locational {
            attr += 1;
            let value = if flag { "True" } else { "False" };
            out += &format!("A{attr}\t{} {} {value}\n", config.non_locational_attribute, a.id);
        }
        if let Some(id) = a.gazetteer_id {
            norm += 1;
            out += &format!("N{norm}\tReference {} {}:{id}\t{}\n", a.id, config.gazetteer_db, a.surface);
        }
        if let Some(c) = a.coord {
            norm += 1;
            // `{}` on f64 prints the shortest string that parses back to the same value.
            out += &format!("N{norm}\tReference {} {}:{},{}\t{}\n", a.id, config.coordinate_db, c.lat(), c.lon(), a.surface);
        }
    }
    for e in &doc.expressions {
        out += &format!("{}\t{} {} {}\t{}\n", e.id, e.kind.label(), e.span.start, e.span.end, e.surface);
        if e.role != ExpressionRole::Context {
            attr += 1;
            out += &format!("A{attr}\t{} {} {}\n", config.role_attribute, e.id, e.role.label());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::TaxonomyType;

    fn parse(text: &str, ann: &str) -> BratDocument {
        parse_brat("doc", text.to_string(), ann, &BratConfig::default()).unwrap()
    }

    #[test]
    fn single_entity() {
        let d = parse("Russia won.", "T1\tLiteral 0 6\tRussia\n");
        assert!(d.issues.is_empty());
        let a = &d.document.annotations[0];
        assert_eq!(a.span, Span { start: 0, end: 6 });
        assert_eq!(a.toponym_type, TaxonomyType::Literal);
        // Space-separated variant from hand-written fixtures.
        let d = parse("Russia won.", "T1 Literal 0 6 Russia\n");
        assert_eq!(d.document.annotations.len(), 1);
    }

    #[test]
    fn modifier_attribute() {
        let d = parse(
            "Russian troops.",
            "T1\tNon_Lit_Modifier 0 7\tRussian\nA1\tmodifier_type T1 Adjective\nA2\tnon_locational T1\n",
        );
        let a = &d.document.annotations[0];
        assert_eq!(a.modifier_type, Some(ModifierType::Adjective));
        assert_eq!(a.non_locational, Some(true));
    }

    #[test]
    fn empty_ann() {
        let d = parse("Nothing here.", "");
        assert!(d.document.annotations.is_empty());
        assert!(d.issues.is_empty());
    }

    #[test]
    fn normalisations_and_notes() {
        let d = parse(
            "Paris and Lyon and Nice",
            "T1\tLiteral 0 5\tParis\nN1\tReference T1 Geonames:2988507\tParis\n\
             T2\tLiteral 10 14\tLyon\n#1\tAnnotatorNotes T2\t45.75, 4.85\n\
             T3\tLiteral 19 23\tNice\nN2\tReference T3 Coordinates:43.7,7.27\tNice\n",
        );
        let a = &d.document.annotations;
        assert_eq!(a[0].gazetteer_id, Some(2988507));
        assert_eq!(a[1].coord, Some(Coordinate::new(45.75, 4.85).unwrap()));
        assert_eq!(a[2].coord, Some(Coordinate::new(43.7, 7.27).unwrap()));
    }

    #[test]
    fn per_annotation_issues_carry_line_numbers() {
        let d = parse(
            "Paris is nice.",
            "T1\tLiteral 0 5\tParis\nT2\tLiteral 0 5\tLondon\nT3\tLiteral 9 40\tnice\nA1\tmodifier_type T9 Noun\nT4\tFacility 9 13\tnice\n",
        );
        assert_eq!(d.document.annotations.len(), 1);
        let lines: Vec<usize> = d.issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, [2, 3, 5, 4]);
    }

    #[test]
    fn garbage_is_fatal() {
        let err = parse_brat("doc", "x".into(), "hello world\n", &BratConfig::default()).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }));
    }

    #[test]
    fn unicode_offsets() {
        let d = parse("In Zürich, São Paulo.", "T1\tLiteral 3 9\tZürich\nT2\tLiteral 11 20\tSão Paulo\n");
        assert!(d.issues.is_empty(), "{:?}", d.issues);
        assert_eq!(d.document.annotations.len(), 2);
    }

    #[test]
    fn expressions_and_roles() {
        let d = parse(
            "The deal was agreed by the chief engineer.",
            "T1\tAssociative_Expression 23 41\tthe chief engineer\nT2\tLiteral_Expression 33 41\tengineer\nA1\trole T2 Head\n",
        );
        let e = &d.document.expressions;
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].kind, ExpressionKind::AssociativeExpression);
        assert_eq!(e[0].role, ExpressionRole::Context);
        assert_eq!(e[1].role, ExpressionRole::Head);
    }

    #[test]
    fn writer_round_trips() {
        let text = "Russian troops left Moscow for Kiev.";
        let ann = "T1\tNon_Lit_Modifier 0 7\tRussian\nA1\tmodifier_type T1 Adjective\n\
                   T2\tLiteral 20 26\tMoscow\nN1\tReference T2 Geonames:524901\tMoscow\n\
                   T3\tLiteral 31 35\tKiev\nN2\tReference T3 Coordinates:50.45466,30.5238\tKiev\nA2\tnon_locational T3 False\n\
                   T4\tLiteral_Expression 8 14\ttroops\nA3\trole T4 Head\n";
        let first = parse(text, ann).document;
        let again = parse(text, &write_ann(&first, &BratConfig::default())).document;
        assert_eq!(first, again);
    }
}
