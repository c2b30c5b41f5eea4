//! Cross-language lookup: follow equivalence mappings from a term into the
//! vocabularies of another language.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::registry::Language;
use crate::store::{CrosswalkId, LookupFilter, RelationType, RelevanceRating, Store};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    /// Normalized target term.
    pub term: String,
    pub vocab: String,
    pub rating: RelevanceRating,
    /// Crosswalk the candidate came through.
    pub crosswalk: CrosswalkId,
}

/// Candidates for `term` in vocabularies of `target_lang`, reached through
/// single-target equivalence mappings from vocabularies of `source_lang`
/// (any language when `None`). Ordered by rating (best first), then term and
/// vocabulary; one entry per (term, vocabulary).
pub fn translate(
    store: &Store,
    term: &str,
    source_lang: Option<&Language>,
    target_lang: &Language,
) -> Result<Vec<Translation>> {
    let registry = store.registry();
    let language_of = |vocab: &str| registry.vocabulary(vocab).and_then(|v| v.language.as_ref());
    if !registry
        .vocabularies()
        .any(|v| v.language.as_ref() == Some(target_lang))
    {
        return Err(Error::not_found(
            "vocabulary in language",
            target_lang.as_str(),
        ));
    }

    let filter = LookupFilter::default().relations([RelationType::Eq]);
    let mut best: HashMap<(&str, &str), Translation> = HashMap::new();
    for record in store.mappings_from(term, &filter) {
        let cw = &record.crosswalk;
        if source_lang.is_some_and(|lang| language_of(&cw.source) != Some(lang)) {
            continue;
        }
        if language_of(&cw.target) != Some(target_lang) {
            continue;
        }
        let Some(target) = record.mapping.target.as_ref().and_then(|c| c.as_single()) else {
            continue;
        };
        let candidate = Translation {
            term: target.to_string(),
            vocab: cw.target.clone(),
            rating: record.mapping.rating,
            crosswalk: cw.clone(),
        };
        best.entry((target, cw.target.as_str()))
            .and_modify(|kept| {
                if candidate.rating > kept.rating {
                    *kept = candidate.clone();
                }
            })
            .or_insert(candidate);
    }
    let mut out: Vec<Translation> = best.into_values().collect();
    out.sort_by(|a, b| {
        b.rating
            .cmp(&a.rating)
            .then_with(|| a.term.cmp(&b.term))
            .then_with(|| a.vocab.cmp(&b.vocab))
    });
    Ok(out)
}
