//! Vocabularies, their term lists and term normalization.
//!
//! Every lookup key in the crate goes through [`normalize_term`]: canonical
//! Unicode composition, lower-case folding and whitespace collapsing. There is
//! no stemming and no diacritic stripping, so `"Jugend"` and `"jugend"` share
//! a key but `"Müller"` and `"Muller"` do not.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::error::{Error, Result};

/// Canonical lookup key for a controlled term.
pub fn normalize_term(raw: &str) -> Result<String> {
    if raw.trim().is_empty() {
        return Err(Error::InvalidTerm(raw.to_string()));
    }
    let folded = if raw.is_ascii() {
        raw.to_ascii_lowercase()
    } else {
        let composed: String = raw.nfc().collect();
        let lower = composed.to_lowercase();
        // lower-casing can decompose (U+0130 -> i + U+0307)
        if is_nfc(&lower) {
            lower
        } else {
            lower.nfc().collect()
        }
    };
    Ok(collapse_whitespace(&folded))
}

/// Trims and collapses internal whitespace runs to single spaces.
pub(crate) fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// ISO 639-1 language code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Language(String);

impl Language {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let code = s.trim().to_ascii_lowercase();
        if ISO_639_1.binary_search(&code.as_str()).is_ok() {
            Ok(Language(code))
        } else {
            Err(Error::InvalidVocabulary(format!(
                "unrecognized language code {s:?}"
            )))
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub id: String,
    pub name: String,
    /// `None` only for vocabularies auto-registered by a crosswalk import
    /// that carried no declaration.
    pub language: Option<Language>,
    pub discipline: String,
}

impl Vocabulary {
    pub fn new(id: &str, language: &str) -> Result<Self> {
        Ok(Vocabulary {
            id: id.to_string(),
            name: id.to_string(),
            language: Some(language.parse()?),
            discipline: String::new(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_discipline(mut self, discipline: impl Into<String>) -> Self {
        self.discipline = discipline.into();
        self
    }

    /// A vocabulary without declared metadata.
    pub fn undeclared(id: &str) -> Self {
        Vocabulary {
            id: id.to_string(),
            name: id.to_string(),
            language: None,
            discipline: String::new(),
        }
    }
}

/// Checks the id constraints shared by every file format: non-empty, no
/// whitespace, and no leading `#` (which would read as a comment line).
pub fn validate_vocab_id(id: &str) -> Result<()> {
    if id.is_empty() {
        return Err(Error::InvalidVocabulary("empty vocabulary id".into()));
    }
    if id.chars().any(char::is_whitespace) {
        return Err(Error::InvalidVocabulary(format!(
            "vocabulary id {id:?} contains whitespace"
        )));
    }
    if id.starts_with('#') {
        return Err(Error::InvalidVocabulary(format!(
            "vocabulary id {id:?} starts with '#'"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub vocabulary: String,
    pub normalized: String,
    pub display: String,
}

#[derive(Debug, Clone)]
struct VocabEntry {
    vocabulary: Vocabulary,
    // normalized -> display
    terms: BTreeMap<String, String>,
}

/// Owns all vocabularies and their term lists.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    vocabs: BTreeMap<String, VocabEntry>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_vocabulary(&mut self, vocabulary: Vocabulary) -> Result<String> {
        validate_vocab_id(&vocabulary.id)?;
        if self.vocabs.contains_key(&vocabulary.id) {
            return Err(Error::Conflict(format!(
                "vocabulary {} already registered",
                vocabulary.id
            )));
        }
        let id = vocabulary.id.clone();
        self.vocabs.insert(
            id.clone(),
            VocabEntry {
                vocabulary,
                terms: BTreeMap::new(),
            },
        );
        Ok(id)
    }

    /// Registers `vocabulary`, or fills in the metadata of an existing
    /// undeclared entry with the same id. Declared metadata is never
    /// overwritten.
    pub fn declare_vocabulary(&mut self, vocabulary: Vocabulary) -> Result<String> {
        validate_vocab_id(&vocabulary.id)?;
        match self.vocabs.get_mut(&vocabulary.id) {
            Some(entry) => {
                let existing = &mut entry.vocabulary;
                if existing.language.is_none() {
                    *existing = vocabulary;
                }
                Ok(existing.id.clone())
            }
            None => self.register_vocabulary(vocabulary),
        }
    }

    /// Registers an undeclared vocabulary if `id` is unknown.
    pub fn ensure_vocabulary(&mut self, id: &str) -> Result<()> {
        if !self.vocabs.contains_key(id) {
            self.register_vocabulary(Vocabulary::undeclared(id))?;
        }
        Ok(())
    }

    pub fn vocabulary(&self, id: &str) -> Option<&Vocabulary> {
        self.vocabs.get(id).map(|e| &e.vocabulary)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vocabs.contains_key(id)
    }

    /// Vocabularies in id order.
    pub fn vocabularies(&self) -> impl Iterator<Item = &Vocabulary> {
        self.vocabs.values().map(|e| &e.vocabulary)
    }

    pub fn term_count(&self, id: &str) -> Result<usize> {
        Ok(self.entry(id)?.terms.len())
    }

    pub fn add_term(&mut self, vocab: &str, display: &str) -> Result<Term> {
        let normalized = normalize_term(display)?;
        let display = self.insert_term(vocab, &normalized, display)?.to_string();
        Ok(Term {
            vocabulary: vocab.to_string(),
            normalized,
            display,
        })
    }

    /// Adds a term whose key is already normalized; returns the kept
    /// display form.
    pub(crate) fn insert_term(
        &mut self,
        vocab: &str,
        normalized: &str,
        display: &str,
    ) -> Result<&str> {
        let entry = self
            .vocabs
            .get_mut(vocab)
            .ok_or_else(|| Error::not_found("vocabulary", vocab))?;
        if !entry.terms.contains_key(normalized) {
            entry
                .terms
                .insert(normalized.to_string(), collapse_whitespace(display));
        }
        Ok(&entry.terms[normalized])
    }

    pub fn lookup_term(&self, vocab: &str, raw: &str) -> Result<Option<Term>> {
        let entry = self.entry(vocab)?;
        let normalized = normalize_term(raw)?;
        Ok(entry.terms.get(&normalized).map(|display| Term {
            vocabulary: vocab.to_string(),
            normalized,
            display: display.clone(),
        }))
    }

    /// Whether `normalized` (already a canonical key) is a term of `vocab`.
    pub fn has_term(&self, vocab: &str, normalized: &str) -> bool {
        self.vocabs
            .get(vocab)
            .is_some_and(|e| e.terms.contains_key(normalized))
    }

    /// Display form for a canonical key, falling back to the key itself.
    pub fn display<'a>(&'a self, vocab: &str, normalized: &'a str) -> &'a str {
        self.vocabs
            .get(vocab)
            .and_then(|e| e.terms.get(normalized))
            .map_or(normalized, String::as_str)
    }

    /// All terms of `vocab` as (normalized, display), in key order.
    pub fn terms(&self, vocab: &str) -> Result<impl Iterator<Item = (&str, &str)>> {
        Ok(self
            .entry(vocab)?
            .terms
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str())))
    }

    /// Reads a term-list file: a `#terms <vocab-id>` header line followed by
    /// one display term per line. Blank lines and later `#` lines are
    /// skipped. The header may carry optional `<lang> <discipline> <name...>`
    /// tokens which declare the vocabulary when it is not yet known.
    ///
    /// Returns the vocabulary id and the number of newly added terms.
    pub fn import_term_list<R: BufRead>(&mut self, reader: R) -> Result<(String, usize)> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(Error::Format("empty term list".into())),
        };
        let header = parse_term_list_header(&header)?;
        let id = header.id.clone();
        if header.language.is_some() {
            self.declare_vocabulary(header)?;
        } else {
            self.ensure_vocabulary(&id)?;
        }
        let before = self.term_count(&id)?;
        for line in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            self.add_term(&id, trimmed)?;
        }
        Ok((id.clone(), self.term_count(&id)? - before))
    }

    fn entry(&self, id: &str) -> Result<&VocabEntry> {
        self.vocabs
            .get(id)
            .ok_or_else(|| Error::not_found("vocabulary", id))
    }
}

fn parse_term_list_header(line: &str) -> Result<Vocabulary> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("#terms") {
        return Err(Error::Format(format!(
            "term list must start with '#terms <vocab-id>', got {line:?}"
        )));
    }
    let id = tokens
        .next()
        .ok_or_else(|| Error::Format("term list header lacks a vocabulary id".into()))?;
    validate_vocab_id(id)?;
    let mut vocab = Vocabulary::undeclared(id);
    if let Some(lang) = tokens.next() {
        vocab.language = Some(lang.parse()?);
    }
    if let Some(discipline) = tokens.next() {
        vocab.discipline = discipline.to_string();
    }
    let name: Vec<&str> = tokens.collect();
    if !name.is_empty() {
        vocab.name = name.join(" ");
    }
    Ok(vocab)
}

// Sorted for binary search.
const ISO_639_1: &[&str] = &[
    "aa", "ab", "ae", "af", "ak", "am", "an", "ar", "as", "av", "ay", "az", "ba", "be", "bg", "bh",
    "bi", "bm", "bn", "bo", "br", "bs", "ca", "ce", "ch", "co", "cr", "cs", "cu", "cv", "cy", "da",
    "de", "dv", "dz", "ee", "el", "en", "eo", "es", "et", "eu", "fa", "ff", "fi", "fj", "fo", "fr",
    "fy", "ga", "gd", "gl", "gn", "gu", "gv", "ha", "he", "hi", "ho", "hr", "ht", "hu", "hy", "hz",
    "ia", "id", "ie", "ig", "ii", "ik", "io", "is", "it", "iu", "ja", "jv", "ka", "kg", "ki", "kj",
    "kk", "kl", "km", "kn", "ko", "kr", "ks", "ku", "kv", "kw", "ky", "la", "lb", "lg", "li", "ln",
    "lo", "lt", "lu", "lv", "mg", "mh", "mi", "mk", "ml", "mn", "mr", "ms", "mt", "my", "na", "nb",
    "nd", "ne", "ng", "nl", "nn", "no", "nr", "nv", "ny", "oc", "oj", "om", "or", "os", "pa", "pi",
    "pl", "ps", "pt", "qu", "rm", "rn", "ro", "ru", "rw", "sa", "sc", "sd", "se", "sg", "si", "sk",
    "sl", "sm", "sn", "so", "sq", "sr", "ss", "st", "su", "sv", "sw", "ta", "te", "tg", "th", "ti",
    "tk", "tl", "tn", "to", "tr", "ts", "tt", "tw", "ty", "ug", "uk", "ur", "uz", "ve", "vi", "vo",
    "wa", "wo", "xh", "yi", "yo", "za", "zh", "zu",
];
