//! SKOS mapping triples in N-Triples form.
//!
//! Concepts are named `urn:kos:<vocab>:<term>` with both parts
//! percent-encoded (everything but `A-Z a-z 0-9 - . _ ~`), so `isdn device`
//! in vocabulary `A` becomes `<urn:kos:A:isdn%20device>`.
//!
//! SKOS has neither a null relation, term combinations nor relevance
//! ratings: null and combination mappings are skipped and counted, ratings
//! are dropped, and imported mappings come back unrated. The TSV format is
//! the lossless one.

use std::io::{BufRead, Write};

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use crate::error::{Error, Result};
use crate::store::{
    Concept, CrosswalkId, LineError, Mapping, RelationType, RelevanceRating, Store,
};

pub const SKOS_NS: &str = "http://www.w3.org/2004/02/skos/core#";

const URN_PREFIX: &str = "urn:kos:";

const COMPONENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

/// Full predicate URI for a relation; `None` for the null relation.
pub fn predicate_uri(relation: RelationType) -> Option<String> {
    let local = match relation {
        RelationType::Eq => "exactMatch",
        RelationType::BroaderTarget => "broadMatch",
        RelationType::NarrowerTarget => "narrowMatch",
        RelationType::Assoc => "relatedMatch",
        RelationType::Null => return None,
    };
    Some(format!("{SKOS_NS}{local}"))
}

fn relation_for(predicate: &str) -> Option<RelationType> {
    match predicate.strip_prefix(SKOS_NS)? {
        "exactMatch" => Some(RelationType::Eq),
        "broadMatch" => Some(RelationType::BroaderTarget),
        "narrowMatch" => Some(RelationType::NarrowerTarget),
        "relatedMatch" => Some(RelationType::Assoc),
        _ => None,
    }
}

pub fn concept_uri(vocab: &str, term: &str) -> String {
    format!(
        "{URN_PREFIX}{}:{}",
        utf8_percent_encode(vocab, COMPONENT),
        utf8_percent_encode(term, COMPONENT)
    )
}

/// Splits a concept URI into (vocabulary id, term).
pub fn parse_concept_uri(uri: &str) -> Result<(String, String)> {
    let rest = uri
        .strip_prefix(URN_PREFIX)
        .ok_or_else(|| Error::Format(format!("not a urn:kos concept: {uri}")))?;
    let (vocab, term) = rest
        .rsplit_once(':')
        .ok_or_else(|| Error::Format(format!("concept URI lacks a term: {uri}")))?;
    let decode = |part: &str| {
        percent_decode_str(part)
            .decode_utf8()
            .map(|s| s.into_owned())
            .map_err(|_| Error::Format(format!("bad percent-encoding in {uri}")))
    };
    Ok((decode(vocab)?, decode(term)?))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkosExportReport {
    pub triples: usize,
    pub skipped_null: usize,
    pub skipped_combination: usize,
}

/// Writes one triple per single-target, non-null mapping of the given
/// crosswalks, sorted by subject (then predicate and object).
pub fn export_skos<W: Write>(
    store: &Store,
    crosswalks: &[CrosswalkId],
    mut out: W,
) -> Result<SkosExportReport> {
    let mut report = SkosExportReport::default();
    let mut lines = Vec::new();
    for id in crosswalks {
        for record in store.crosswalk_mappings(id)? {
            let m = &record.mapping;
            let Some(predicate) = predicate_uri(m.relation) else {
                report.skipped_null += 1;
                continue;
            };
            let Some(target) = m.target.as_ref().and_then(Concept::as_single) else {
                report.skipped_combination += 1;
                continue;
            };
            lines.push(format!(
                "<{}> <{predicate}> <{}> .",
                concept_uri(&id.source, &m.source),
                concept_uri(&id.target, target)
            ));
        }
    }
    lines.sort();
    for line in &lines {
        writeln!(out, "{line}")?;
    }
    report.triples = lines.len();
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkosImportReport {
    pub mappings_added: usize,
    pub errors: Vec<LineError>,
    /// Well-formed triples with a predicate outside the four mapping
    /// relations.
    pub warnings: Vec<LineError>,
}

/// A parsed `<s> <p> <o> .` line.
struct Triple<'a> {
    subject: &'a str,
    predicate: &'a str,
    object: &'a str,
}

fn take_iri<'a>(rest: &mut &'a str) -> Result<&'a str> {
    let s = rest.trim_start();
    let Some(body) = s.strip_prefix('<') else {
        return Err(Error::Format(format!(
            "expected '<' at {:?}",
            s.chars().take(12).collect::<String>()
        )));
    };
    let end = body
        .find('>')
        .ok_or_else(|| Error::Format("unterminated IRI".into()))?;
    let iri = &body[..end];
    if iri
        .chars()
        .any(|c| c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
    {
        return Err(Error::Format(format!("invalid character in IRI {iri:?}")));
    }
    *rest = &body[end + 1..];
    Ok(iri)
}

fn parse_triple(line: &str) -> Result<Triple<'_>> {
    let mut rest = line;
    let subject = take_iri(&mut rest)?;
    let predicate = take_iri(&mut rest)?;
    let object = take_iri(&mut rest)?;
    let tail = rest.trim();
    let tail = tail
        .strip_prefix('.')
        .ok_or_else(|| Error::Format("triple must end with ' .'".into()))?;
    let tail = tail.trim();
    if !tail.is_empty() && !tail.starts_with('#') {
        return Err(Error::Format(format!("trailing text {tail:?}")));
    }
    Ok(Triple {
        subject,
        predicate,
        object,
    })
}

/// Reads mapping triples from `source_vocab` concepts to `target_vocab`
/// concepts into the `source_vocab-target_vocab` crosswalk. Terms and
/// vocabularies are registered as needed; imported mappings are unrated.
pub fn import_skos<R: BufRead>(
    store: &mut Store,
    reader: R,
    source_vocab: &str,
    target_vocab: &str,
) -> Result<SkosImportReport> {
    let mut report = SkosImportReport::default();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let line_no = index + 1;
        let outcome = parse_triple(trimmed).and_then(|triple| {
            let Some(relation) = relation_for(triple.predicate) else {
                report.warnings.push(LineError {
                    line: line_no,
                    reason: format!("unsupported predicate <{}> skipped", triple.predicate),
                });
                return Ok(());
            };
            import_triple(store, &triple, relation, source_vocab, target_vocab)?;
            report.mappings_added += 1;
            Ok(())
        });
        if let Err(err) = outcome {
            report.errors.push(LineError {
                line: line_no,
                reason: err.to_string(),
            });
        }
    }
    Ok(report)
}

fn import_triple(
    store: &mut Store,
    triple: &Triple<'_>,
    relation: RelationType,
    source_vocab: &str,
    target_vocab: &str,
) -> Result<()> {
    let (subject_vocab, subject_term) = parse_concept_uri(triple.subject)?;
    let (object_vocab, object_term) = parse_concept_uri(triple.object)?;
    if subject_vocab != source_vocab || object_vocab != target_vocab {
        return Err(Error::InvalidMapping(format!(
            "triple maps {subject_vocab} to {object_vocab}, expected {source_vocab} to {target_vocab}"
        )));
    }
    let target = Concept::single(&object_term)?;
    Concept::single(&subject_term)?;
    let registry = store.registry_mut();
    registry.ensure_vocabulary(source_vocab)?;
    registry.ensure_vocabulary(target_vocab)?;
    let (crosswalk, _) = store.ensure_crosswalk(source_vocab, target_vocab)?;
    store.add_term(source_vocab, &subject_term)?;
    store.add_term(target_vocab, &object_term)?;
    store.add_mapping(
        &crosswalk,
        Mapping::new(&subject_term, relation, target, RelevanceRating::Unrated),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::tests::tab1_store;

    fn export(store: &Store, ids: &[CrosswalkId]) -> (String, SkosExportReport) {
        let mut out = Vec::new();
        let report = export_skos(store, ids, &mut out).unwrap();
        (String::from_utf8(out).unwrap(), report)
    }

    #[test]
    fn tab1_export() {
        let store = tab1_store();
        let (text, report) = export(&store, &[CrosswalkId::new("A", "B")]);
        assert_eq!(
            report,
            SkosExportReport {
                triples: 3,
                skipped_null: 1,
                skipped_combination: 2
            }
        );
        assert_eq!(
            text,
            "<urn:kos:A:documentation%20system> <http://www.w3.org/2004/02/skos/core#narrowMatch> <urn:kos:B:abstracting%20services> .\n\
<urn:kos:A:hacker> <http://www.w3.org/2004/02/skos/core#exactMatch> <urn:kos:B:hacking> .\n\
<urn:kos:A:isdn> <http://www.w3.org/2004/02/skos/core#broadMatch> <urn:kos:B:telecommunications> .\n"
        );
    }

    #[test]
    fn unknown_crosswalk() {
        let store = tab1_store();
        assert!(matches!(
            export_skos(&store, &[CrosswalkId::new("B", "A")], Vec::new()),
            Err(Error::NotFound { .. })
        ));
    }

    #[test]
    fn uri_encoding_round_trips() {
        for (vocab, term) in [
            ("A", "isdn device"),
            ("iz-soz", "jugend/älter"),
            ("x:y", "a:b%c"),
        ] {
            let uri = concept_uri(vocab, term);
            assert!(!uri.contains(' '));
            assert_eq!(
                parse_concept_uri(&uri).unwrap(),
                (vocab.to_string(), term.to_string())
            );
        }
        assert_eq!(concept_uri("A", "isdn device"), "urn:kos:A:isdn%20device");
    }

    #[test]
    fn import_recovers_representable_subset() {
        let store = tab1_store();
        let (text, _) = export(&store, &[CrosswalkId::new("A", "B")]);
        let mut fresh = Store::new();
        let report = import_skos(&mut fresh, text.as_bytes(), "A", "B").unwrap();
        assert_eq!(report.mappings_added, 3);
        assert!(report.errors.is_empty() && report.warnings.is_empty());
        let (again, _) = export(&fresh, &[CrosswalkId::new("A", "B")]);
        assert_eq!(again, text);
        assert!(fresh
            .mappings()
            .all(|r| r.mapping.rating == RelevanceRating::Unrated));
    }

    #[test]
    fn import_warnings_and_errors() {
        let text = "# comment\n\
<urn:kos:A:x> <http://www.w3.org/2004/02/skos/core#closeMatch> <urn:kos:B:y> .\n\
<urn:kos:A:x> <http://www.w3.org/2004/02/skos/core#exactMatch> \"y\" .\n\
<urn:kos:A:x> <http://www.w3.org/2004/02/skos/core#exactMatch> <urn:kos:B:y>\n\
<urn:kos:C:x> <http://www.w3.org/2004/02/skos/core#exactMatch> <urn:kos:B:y> .\n\
<http://example.org/x> <http://www.w3.org/2004/02/skos/core#exactMatch> <urn:kos:B:y> .\n\
<urn:kos:A:x> <http://www.w3.org/2004/02/skos/core#exactMatch> <urn:kos:B:y> .\n\
<urn:kos:A:x> <http://www.w3.org/2004/02/skos/core#exactMatch> <urn:kos:B:y> .\n";
        let mut store = Store::new();
        let report = import_skos(&mut store, text.as_bytes(), "A", "B").unwrap();
        assert_eq!(report.mappings_added, 1);
        assert_eq!(
            report.warnings.iter().map(|w| w.line).collect::<Vec<_>>(),
            [2]
        );
        assert_eq!(
            report.errors.iter().map(|e| e.line).collect::<Vec<_>>(),
            [3, 4, 5, 6, 8]
        );
    }

    #[test]
    fn empty_stream() {
        let mut store = Store::new();
        let report = import_skos(&mut store, &b""[..], "A", "B").unwrap();
        assert_eq!(report.mappings_added, 0);
        assert!(store.crosswalks().next().is_none());
    }

    #[test]
    fn lines_are_valid_ntriples() {
        let mut store = Store::new();
        store
            .import_tsv("#komohe-tsv v1\nA\tÄrger <x>\t^\tB\t\"quoted\" {y}|z\t\n".as_bytes())
            .unwrap();
        let (text, report) = export(&store, &[CrosswalkId::new("A", "B")]);
        assert_eq!(report.triples, 1);
        for line in text.lines() {
            let triple = parse_triple(line).unwrap();
            assert!(triple.subject.is_ascii() && triple.object.is_ascii());
        }
        let mut back = Store::new();
        import_skos(&mut back, text.as_bytes(), "A", "B").unwrap();
        assert_eq!(back.mappings().next().unwrap().mapping.source, "ärger <x>");
    }
}
