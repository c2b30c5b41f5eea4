//! Directed cross-concordances and their mappings.
//!
//! A crosswalk is identified by its (source, target) vocabulary pair; `A-B`
//! and `B-A` are independent and nothing keeps them symmetric. Every stored
//! mapping is indexed by its source term and by each member term of its
//! target so lookups work in both directions.

mod tsv;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::registry::{collapse_whitespace, normalize_term, Registry, Term, Vocabulary};

pub use tsv::{format_mapping_line, ImportReport, LineError, TSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationType {
    /// `=` identity, synonym or quasi-synonym.
    Eq,
    /// `<` the target is broader than the source.
    BroaderTarget,
    /// `>` the target is narrower than the source.
    NarrowerTarget,
    /// `^` related term.
    Assoc,
    /// `0` the source has no counterpart in the target vocabulary.
    Null,
}

impl RelationType {
    pub const ALL: [RelationType; 5] = [
        RelationType::Eq,
        RelationType::BroaderTarget,
        RelationType::NarrowerTarget,
        RelationType::Assoc,
        RelationType::Null,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            RelationType::Eq => "=",
            RelationType::BroaderTarget => "<",
            RelationType::NarrowerTarget => ">",
            RelationType::Assoc => "^",
            RelationType::Null => "0",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Parses a comma-separated list of relation symbols such as `=,^`.
    pub fn parse_set(list: &str) -> Result<BTreeSet<RelationType>> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl FromStr for RelationType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "=" => Ok(RelationType::Eq),
            "<" => Ok(RelationType::BroaderTarget),
            ">" => Ok(RelationType::NarrowerTarget),
            "^" => Ok(RelationType::Assoc),
            "0" => Ok(RelationType::Null),
            other => Err(Error::InvalidArgument(format!(
                "unknown relation symbol {other:?}"
            ))),
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Mapper-assigned quality tag. Ordered `Unrated < Low < Medium < High`, so
/// the minimum over a chain propagates `Unrated` and a `min_rating` filter
/// never admits unrated mappings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum RelevanceRating {
    #[default]
    Unrated,
    Low,
    Medium,
    High,
}

impl RelevanceRating {
    pub const ALL: [RelevanceRating; 4] = [
        RelevanceRating::Unrated,
        RelevanceRating::Low,
        RelevanceRating::Medium,
        RelevanceRating::High,
    ];

    /// TSV spelling; empty for `Unrated`.
    pub fn as_str(self) -> &'static str {
        match self {
            RelevanceRating::Unrated => "",
            RelevanceRating::Low => "low",
            RelevanceRating::Medium => "medium",
            RelevanceRating::High => "high",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RelevanceRating::Unrated => "unrated",
            other => other.as_str(),
        }
    }

    /// One level weaker; `Low` and `Unrated` are fixed points.
    pub fn degrade(self) -> Self {
        match self {
            RelevanceRating::High => RelevanceRating::Medium,
            RelevanceRating::Medium | RelevanceRating::Low => RelevanceRating::Low,
            RelevanceRating::Unrated => RelevanceRating::Unrated,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for RelevanceRating {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "unrated" => Ok(RelevanceRating::Unrated),
            "low" => Ok(RelevanceRating::Low),
            "medium" => Ok(RelevanceRating::Medium),
            "high" => Ok(RelevanceRating::High),
            _ => Err(Error::InvalidArgument(format!("unknown rating {s:?}"))),
        }
    }
}

/// A single controlled term or an ordered combination of at least two terms.
/// Member strings are normalized keys.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Concept {
    Single(String),
    Combination(Vec<String>),
}

impl Concept {
    pub fn single(raw: &str) -> Result<Self> {
        let term = normalize_term(raw)?;
        check_member(&term)?;
        Ok(Concept::Single(term))
    }

    pub fn combination<S: AsRef<str>>(raws: &[S]) -> Result<Self> {
        let members = raws
            .iter()
            .map(|raw| {
                let term = normalize_term(raw.as_ref())?;
                check_member(&term)?;
                Ok(term)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_members(members)
    }

    /// Parses the ` + `-joined text form, e.g. `"computers + crime"`.
    pub fn parse(raw: &str) -> Result<Self> {
        let parts = split_members(raw);
        if parts.len() == 1 {
            Self::single(&parts[0])
        } else {
            Self::combination(&parts)
        }
    }

    fn from_members(members: Vec<String>) -> Result<Self> {
        match members.len() {
            0 => Err(Error::InvalidMapping("empty concept".into())),
            1 => Ok(Concept::Single(members.into_iter().next().unwrap())),
            _ => {
                let distinct: HashSet<&String> = members.iter().collect();
                if distinct.len() != members.len() {
                    return Err(Error::InvalidMapping(format!(
                        "combination repeats a member: {}",
                        members.join(" + ")
                    )));
                }
                Ok(Concept::Combination(members))
            }
        }
    }

    pub fn members(&self) -> &[String] {
        match self {
            Concept::Single(term) => std::slice::from_ref(term),
            Concept::Combination(terms) => terms,
        }
    }

    pub fn is_combination(&self) -> bool {
        matches!(self, Concept::Combination(_))
    }

    pub fn as_single(&self) -> Option<&str> {
        match self {
            Concept::Single(term) => Some(term),
            Concept::Combination(_) => None,
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.members().join(" + "))
    }
}

/// Splits the ` + ` combination syntax after collapsing whitespace. Members
/// keep their original orthography.
pub(crate) fn split_members(raw: &str) -> Vec<String> {
    collapse_whitespace(raw)
        .split(" + ")
        .map(str::to_string)
        .collect()
}

/// A standalone `+` word would make the ` + ` join ambiguous.
pub(crate) fn check_member(term: &str) -> Result<()> {
    if term.split(' ').any(|w| w == "+") {
        return Err(Error::InvalidMapping(format!(
            "term {term:?} contains a standalone '+'"
        )));
    }
    Ok(())
}

/// One directed relation inside a crosswalk.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mapping {
    pub source: String,
    pub relation: RelationType,
    pub target: Option<Concept>,
    pub rating: RelevanceRating,
}

impl Mapping {
    pub fn new(
        source: &str,
        relation: RelationType,
        target: Concept,
        rating: RelevanceRating,
    ) -> Self {
        Mapping {
            source: source.to_string(),
            relation,
            target: Some(target),
            rating,
        }
    }

    /// A `0` mapping: the source cannot be mapped.
    pub fn null(source: &str, rating: RelevanceRating) -> Self {
        Mapping {
            source: source.to_string(),
            relation: RelationType::Null,
            target: None,
            rating,
        }
    }

    /// Checks the relation/target invariant and normalizes every term.
    fn normalized(&self) -> Result<Mapping> {
        let source = normalize_term(&self.source)?;
        check_member(&source)?;
        let target = match (&self.relation, &self.target) {
            (RelationType::Null, None) => None,
            (RelationType::Null, Some(t)) => {
                return Err(Error::InvalidMapping(format!(
                    "null mapping of {source:?} carries target {t}"
                )))
            }
            (rel, None) => {
                return Err(Error::InvalidMapping(format!(
                    "{source:?} {rel} has no target"
                )))
            }
            (_, Some(t)) => Some(Concept::combination(t.members())?),
        };
        Ok(Mapping {
            source,
            relation: self.relation,
            target,
            rating: self.rating,
        })
    }

    /// Target member terms (empty for null mappings).
    pub fn target_members(&self) -> &[String] {
        self.target.as_ref().map_or(&[], Concept::members)
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.source, self.relation)?;
        if let Some(target) = &self.target {
            write!(f, " {target}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CrosswalkId {
    pub source: String,
    pub target: String,
}

impl CrosswalkId {
    pub fn new(source: &str, target: &str) -> Self {
        CrosswalkId {
            source: source.to_string(),
            target: target.to_string(),
        }
    }
}

impl fmt::Display for CrosswalkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MappingId(pub usize);

impl fmt::Display for MappingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingRecord {
    pub id: MappingId,
    pub crosswalk: CrosswalkId,
    pub mapping: Mapping,
}

/// Filters for [`Store::mappings_from`]. Unset fields match everything.
#[derive(Debug, Clone, Default)]
pub struct LookupFilter {
    pub source_vocab: Option<String>,
    pub target_vocab: Option<String>,
    pub relations: Option<BTreeSet<RelationType>>,
    pub min_rating: Option<RelevanceRating>,
}

impl LookupFilter {
    pub fn source_vocab(mut self, vocab: &str) -> Self {
        self.source_vocab = Some(vocab.to_string());
        self
    }

    pub fn target_vocab(mut self, vocab: &str) -> Self {
        self.target_vocab = Some(vocab.to_string());
        self
    }

    pub fn relations(mut self, relations: impl IntoIterator<Item = RelationType>) -> Self {
        self.relations = Some(relations.into_iter().collect());
        self
    }

    pub fn min_rating(mut self, rating: RelevanceRating) -> Self {
        self.min_rating = Some(rating);
        self
    }

    fn matches(&self, record: &MappingRecord) -> bool {
        self.source_vocab
            .as_ref()
            .is_none_or(|v| *v == record.crosswalk.source)
            && self
                .target_vocab
                .as_ref()
                .is_none_or(|v| *v == record.crosswalk.target)
            && self
                .relations
                .as_ref()
                .is_none_or(|set| set.contains(&record.mapping.relation))
            && self
                .min_rating
                .is_none_or(|min| record.mapping.rating >= min)
    }
}

/// Per-crosswalk tallies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrosswalkStats {
    pub mapping_count: usize,
    by_relation: [usize; 5],
    by_rating: [usize; 4],
}

impl CrosswalkStats {
    pub fn relation(&self, relation: RelationType) -> usize {
        self.by_relation[relation.index()]
    }

    pub fn rating(&self, rating: RelevanceRating) -> usize {
        self.by_rating[rating.index()]
    }

    fn record(&mut self, mapping: &Mapping) {
        self.mapping_count += 1;
        self.by_relation[mapping.relation.index()] += 1;
        self.by_rating[mapping.rating.index()] += 1;
    }
}

type TripleKey = (CrosswalkId, String, RelationType, Option<Concept>);

/// In-memory indexed cross-concordance store.
///
/// Mutation goes through `&mut self`; share a finished store as
/// `Arc<Store>` for concurrent readers.
#[derive(Debug, Clone, Default)]
pub struct Store {
    registry: Registry,
    crosswalks: BTreeMap<CrosswalkId, Vec<MappingId>>,
    records: Vec<MappingRecord>,
    by_source: HashMap<String, Vec<MappingId>>,
    by_target: HashMap<String, Vec<MappingId>>,
    triples: HashSet<TripleKey>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut Registry {
        &mut self.registry
    }

    pub fn register_vocabulary(&mut self, vocabulary: Vocabulary) -> Result<String> {
        self.registry.register_vocabulary(vocabulary)
    }

    pub fn add_term(&mut self, vocab: &str, display: &str) -> Result<Term> {
        self.registry.add_term(vocab, display)
    }

    pub fn create_crosswalk(&mut self, source: &str, target: &str) -> Result<CrosswalkId> {
        let id = self.check_crosswalk_pair(source, target)?;
        if self.crosswalks.contains_key(&id) {
            return Err(Error::Conflict(format!("crosswalk {id} already exists")));
        }
        self.crosswalks.insert(id.clone(), Vec::new());
        Ok(id)
    }

    /// Creates the crosswalk if missing; the flag reports whether it was new.
    pub fn ensure_crosswalk(&mut self, source: &str, target: &str) -> Result<(CrosswalkId, bool)> {
        let id = self.check_crosswalk_pair(source, target)?;
        if self.crosswalks.contains_key(&id) {
            return Ok((id, false));
        }
        self.crosswalks.insert(id.clone(), Vec::new());
        Ok((id, true))
    }

    fn check_crosswalk_pair(&self, source: &str, target: &str) -> Result<CrosswalkId> {
        for vocab in [source, target] {
            if !self.registry.contains(vocab) {
                return Err(Error::not_found("vocabulary", vocab));
            }
        }
        if source == target {
            return Err(Error::InvalidArgument(format!(
                "crosswalk source and target are both {source}"
            )));
        }
        Ok(CrosswalkId::new(source, target))
    }

    pub fn has_crosswalk(&self, id: &CrosswalkId) -> bool {
        self.crosswalks.contains_key(id)
    }

    /// Crosswalk ids in (source, target) order.
    pub fn crosswalks(&self) -> impl Iterator<Item = &CrosswalkId> {
        self.crosswalks.keys()
    }

    /// Resolves the `SOURCE-TARGET` text form. Vocabulary ids may contain
    /// hyphens, so every split point is tried against the stored crosswalks.
    pub fn resolve_crosswalk(&self, text: &str) -> Result<CrosswalkId> {
        let candidates: Vec<CrosswalkId> = text
            .match_indices('-')
            .map(|(i, _)| CrosswalkId::new(&text[..i], &text[i + 1..]))
            .filter(|id| self.crosswalks.contains_key(id))
            .collect();
        match candidates.len() {
            1 => Ok(candidates.into_iter().next().unwrap()),
            0 => Err(Error::not_found("crosswalk", text)),
            _ => Err(Error::InvalidArgument(format!(
                "crosswalk name {text:?} is ambiguous"
            ))),
        }
    }

    /// Mappings of one crosswalk in insertion order.
    pub fn crosswalk_mappings(&self, id: &CrosswalkId) -> Result<Vec<&MappingRecord>> {
        let ids = self
            .crosswalks
            .get(id)
            .ok_or_else(|| Error::not_found("crosswalk", id.to_string()))?;
        Ok(ids.iter().map(|&m| &self.records[m.0]).collect())
    }

    pub fn mapping(&self, id: MappingId) -> Option<&MappingRecord> {
        self.records.get(id.0)
    }

    /// All mappings in insertion order.
    pub fn mappings(&self) -> impl Iterator<Item = &MappingRecord> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn add_mapping(&mut self, crosswalk: &CrosswalkId, mapping: Mapping) -> Result<MappingId> {
        if !self.crosswalks.contains_key(crosswalk) {
            return Err(Error::not_found("crosswalk", crosswalk.to_string()));
        }
        let mapping = mapping.normalized()?;
        self.insert_normalized(crosswalk, mapping)
    }

    /// [`Store::add_mapping`] for a mapping whose terms are already
    /// normalized and checked.
    pub(crate) fn insert_normalized(
        &mut self,
        crosswalk: &CrosswalkId,
        mapping: Mapping,
    ) -> Result<MappingId> {
        if !self.registry.has_term(&crosswalk.source, &mapping.source) {
            return Err(Error::not_found(
                "term",
                format!("{}:{}", crosswalk.source, mapping.source),
            ));
        }
        for member in mapping.target_members() {
            if !self.registry.has_term(&crosswalk.target, member) {
                return Err(Error::not_found(
                    "term",
                    format!("{}:{member}", crosswalk.target),
                ));
            }
        }
        let key = (
            crosswalk.clone(),
            mapping.source.clone(),
            mapping.relation,
            mapping.target.clone(),
        );
        if self.triples.contains(&key) {
            return Err(Error::Conflict(format!(
                "duplicate mapping {mapping} in {crosswalk}"
            )));
        }
        self.triples.insert(key);

        let id = MappingId(self.records.len());
        self.by_source
            .entry(mapping.source.clone())
            .or_default()
            .push(id);
        for member in mapping.target_members() {
            self.by_target.entry(member.clone()).or_default().push(id);
        }
        self.crosswalks
            .get_mut(crosswalk)
            .expect("checked above")
            .push(id);
        self.records.push(MappingRecord {
            id,
            crosswalk: crosswalk.clone(),
            mapping,
        });
        Ok(id)
    }

    /// Mappings whose source is `term`, ordered by crosswalk then insertion.
    pub fn mappings_from(&self, term: &str, filter: &LookupFilter) -> Vec<&MappingRecord> {
        let Ok(key) = normalize_term(term) else {
            return Vec::new();
        };
        self.collect(self.by_source.get(&key), |r| filter.matches(r))
    }

    /// Mappings whose target is `term` or a combination containing it.
    /// Null mappings have no target and never appear.
    pub fn mappings_to(&self, term: &str, target_vocab: Option<&str>) -> Vec<&MappingRecord> {
        let Ok(key) = normalize_term(term) else {
            return Vec::new();
        };
        self.collect(self.by_target.get(&key), |r| {
            target_vocab.is_none_or(|v| v == r.crosswalk.target)
        })
    }

    fn collect(
        &self,
        ids: Option<&Vec<MappingId>>,
        keep: impl Fn(&MappingRecord) -> bool,
    ) -> Vec<&MappingRecord> {
        let mut out: Vec<&MappingRecord> = ids
            .into_iter()
            .flatten()
            .map(|&id| &self.records[id.0])
            .filter(|r| keep(r))
            .collect();
        out.sort_by(|a, b| a.crosswalk.cmp(&b.crosswalk).then(a.id.cmp(&b.id)));
        out
    }

    pub fn stats(&self) -> BTreeMap<CrosswalkId, CrosswalkStats> {
        self.crosswalks
            .iter()
            .map(|(id, mappings)| {
                let mut stats = CrosswalkStats::default();
                for m in mappings {
                    stats.record(&self.records[m.0].mapping);
                }
                (id.clone(), stats)
            })
            .collect()
    }
}
