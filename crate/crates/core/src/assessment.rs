//! Spot checks of mappings against the descriptor field of a document
//! corpus.
//!
//! A mapping is checked by counting the documents indexed with its source
//! term and those indexed with its target concept. For a combination every
//! member must be present on the same document. A target that no document
//! carries is flagged `EMPTY_TARGET`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::registry::normalize_term;
use crate::store::{CrosswalkId, LineError, MappingRecord, RelationType, Store};

pub const CORPUS_HEADER: &str = "#corpus v1";

type Descriptor = (String, String);

/// Documents and their (vocabulary, normalized term) descriptors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    docs: BTreeMap<String, BTreeSet<Descriptor>>,
    postings: HashMap<Descriptor, BTreeSet<String>>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one descriptor to a document, creating the document on first use.
    pub fn add(&mut self, doc_id: &str, vocab: &str, term: &str) -> Result<()> {
        if doc_id.trim().is_empty() {
            return Err(Error::InvalidArgument("empty document id".into()));
        }
        if vocab.trim().is_empty() {
            return Err(Error::InvalidArgument("empty vocabulary id".into()));
        }
        let descriptor = (vocab.to_string(), normalize_term(term)?);
        self.postings
            .entry(descriptor.clone())
            .or_default()
            .insert(doc_id.to_string());
        self.docs
            .entry(doc_id.to_string())
            .or_default()
            .insert(descriptor);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn descriptors(&self, doc_id: &str) -> Option<&BTreeSet<Descriptor>> {
        self.docs.get(doc_id)
    }

    /// Number of documents carrying every one of `terms` under `vocab`.
    pub fn count_all(&self, vocab: &str, terms: &[String]) -> usize {
        let mut sets: Vec<&BTreeSet<String>> = Vec::with_capacity(terms.len());
        for term in terms {
            match self.postings.get(&(vocab.to_string(), term.clone())) {
                Some(docs) => sets.push(docs),
                None => return 0,
            }
        }
        sets.sort_by_key(|s| s.len());
        let Some((smallest, rest)) = sets.split_first() else {
            return 0;
        };
        smallest
            .iter()
            .filter(|doc| rest.iter().all(|s| s.contains(*doc)))
            .count()
    }
}

/// Reads a `#corpus v1` TSV stream of `doc_id<TAB>vocab<TAB>term` lines.
/// Malformed lines are reported and skipped.
pub fn load_corpus<R: Read>(mut reader: R) -> Result<(Corpus, Vec<LineError>)> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::Format(format!("unreadable corpus: {e}")))?;
    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == CORPUS_HEADER => {}
        _ => {
            return Err(Error::Format(format!(
                "corpus must start with {CORPUS_HEADER:?}"
            )))
        }
    }
    let mut corpus = Corpus::new();
    let mut errors = Vec::new();
    for (index, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let outcome = match line.split('\t').collect::<Vec<_>>().as_slice() {
            [doc, vocab, term] => corpus.add(doc, vocab, term),
            fields => Err(Error::Format(format!(
                "expected 3 fields, found {}",
                fields.len()
            ))),
        };
        if let Err(err) = outcome {
            errors.push(LineError {
                line: index + 1,
                reason: err.to_string(),
            });
        }
    }
    Ok((corpus, errors))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    EmptyTarget,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Ok => "OK",
            Verdict::EmptyTarget => "EMPTY_TARGET",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assessment {
    pub source_hits: usize,
    pub target_hits: usize,
    pub verdict: Verdict,
}

pub fn assess_mapping(record: &MappingRecord, corpus: &Corpus) -> Result<Assessment> {
    let mapping = &record.mapping;
    if mapping.relation == RelationType::Null {
        return Err(Error::InvalidArgument(format!(
            "null mapping {mapping} has no target to assess"
        )));
    }
    let source_hits = corpus.count_all(
        &record.crosswalk.source,
        std::slice::from_ref(&mapping.source),
    );
    let target_hits = corpus.count_all(&record.crosswalk.target, mapping.target_members());
    let verdict = if target_hits > 0 {
        Verdict::Ok
    } else {
        Verdict::EmptyTarget
    };
    Ok(Assessment {
        source_hits,
        target_hits,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssessmentRow {
    pub mapping: MappingRecord,
    pub assessment: Assessment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentReport {
    pub crosswalk: CrosswalkId,
    pub seed: u64,
    /// Sampled mappings in crosswalk order.
    pub rows: Vec<AssessmentRow>,
}

impl AssessmentReport {
    pub fn empty_target_count(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.assessment.verdict == Verdict::EmptyTarget)
            .count()
    }

    /// Share of sampled mappings whose target no document carries; 0 for an
    /// empty sample.
    pub fn empty_target_rate(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.empty_target_count() as f64 / self.rows.len() as f64
        }
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#mapping\tsource_hits\ttarget_hits\tverdict")?;
        for row in &self.rows {
            let a = &row.assessment;
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                row.mapping.mapping, a.source_hits, a.target_hits, a.verdict
            )?;
        }
        writeln!(
            out,
            "# empty_target_rate\t{}/{}\t{:.4}",
            self.empty_target_count(),
            self.rows.len(),
            self.empty_target_rate()
        )?;
        Ok(())
    }
}

/// Assesses a seeded pseudo-random sample of `min(sample_size, non-null
/// mappings)` mappings of one crosswalk.
pub fn sample_assessment(
    store: &Store,
    crosswalk: &CrosswalkId,
    corpus: &Corpus,
    sample_size: usize,
    seed: u64,
) -> Result<AssessmentReport> {
    if sample_size == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let candidates: Vec<&MappingRecord> = store
        .crosswalk_mappings(crosswalk)?
        .into_iter()
        .filter(|r| r.mapping.relation != RelationType::Null)
        .collect();
    let amount = sample_size.min(candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, candidates.len(), amount).into_vec();
    picked.sort_unstable();
    let rows = picked
        .into_iter()
        .map(|i| {
            let record = candidates[i];
            Ok(AssessmentRow {
                mapping: record.clone(),
                assessment: assess_mapping(record, corpus)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AssessmentReport {
        crosswalk: crosswalk.clone(),
        seed,
        rows,
    })
}
