//! Indirect mappings through a pivot vocabulary and variant-mapping checks.
//!
//! Composition is deliberately conservative: only chains whose relations
//! have a determined result are joined, only through single-term concepts,
//! and every inferred mapping is one rating level weaker than the weaker
//! link of its chain. Inferred mappings are returned to the caller; the store
//! is only changed by an explicit [`promote`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use crate::error::{Error, Result};
use crate::store::{
    format_mapping_line, Concept, CrosswalkId, Mapping, MappingId, MappingRecord, RelationType,
    RelevanceRating, Store, TSV_HEADER,
};

/// Relation implied by `a r1 b` and `b r2 c` between `a` and `c`, if any.
///
/// | r1 \ r2 | `=` | `<` | `>` | `^` | `0` |
/// |---------|-----|-----|-----|-----|-----|
/// | `=`     | `=` | `<` | `>` | `^` |  -  |
/// | `<`     | `<` | `<` |  -  |  -  |  -  |
/// | `>`     | `>` |  -  | `>` |  -  |  -  |
/// | `^`     | `^` |  -  |  -  |  -  |  -  |
/// | `0`     |  -  |  -  |  -  |  -  |  -  |
pub fn compose_relations(first: RelationType, second: RelationType) -> Option<RelationType> {
    use RelationType::*;
    match (first, second) {
        (Null, _) | (_, Null) => None,
        (Eq, r) | (r, Eq) => Some(r),
        (BroaderTarget, BroaderTarget) => Some(BroaderTarget),
        (NarrowerTarget, NarrowerTarget) => Some(NarrowerTarget),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferredMapping {
    pub source: Concept,
    pub target: Concept,
    pub relation: RelationType,
    pub confidence: RelevanceRating,
    /// The two stored mappings the inference went through.
    pub path: [MappingId; 2],
    pub crosswalk: CrosswalkId,
    pub pivot_vocab: String,
}

impl InferredMapping {
    pub fn to_mapping(&self) -> Mapping {
        Mapping {
            source: self.source.to_string(),
            relation: self.relation,
            target: Some(self.target.clone()),
            rating: self.confidence,
        }
    }
}

fn single_target(record: &MappingRecord) -> Option<&str> {
    record.mapping.target.as_ref().and_then(Concept::as_single)
}

/// Joins the `from→via` and `via→to` crosswalks on the pivot term.
///
/// Duplicate (source, relation, target) results keep the highest confidence,
/// and among equals the lexicographically smallest path. Output is ordered
/// by source, relation, target.
pub fn infer_pivot(store: &Store, from: &str, to: &str, via: &str) -> Result<Vec<InferredMapping>> {
    if from == to {
        return Err(Error::InvalidArgument(format!(
            "pivot inference needs distinct end vocabularies, got {from} twice"
        )));
    }
    let first = store.crosswalk_mappings(&CrosswalkId::new(from, via))?;
    let second = store.crosswalk_mappings(&CrosswalkId::new(via, to))?;

    let mut by_pivot: HashMap<&str, Vec<&MappingRecord>> = HashMap::new();
    for record in second {
        if single_target(record).is_some() {
            by_pivot
                .entry(record.mapping.source.as_str())
                .or_default()
                .push(record);
        }
    }

    let crosswalk = CrosswalkId::new(from, to);
    let mut best: BTreeMap<(String, RelationType, String), InferredMapping> = BTreeMap::new();
    for m1 in first {
        let Some(pivot) = single_target(m1) else {
            continue;
        };
        for m2 in by_pivot.get(pivot).into_iter().flatten() {
            let Some(relation) = compose_relations(m1.mapping.relation, m2.mapping.relation) else {
                continue;
            };
            let target = single_target(m2).expect("indexed with single targets");
            let candidate = InferredMapping {
                source: Concept::Single(m1.mapping.source.clone()),
                target: Concept::Single(target.to_string()),
                relation,
                confidence: m1.mapping.rating.min(m2.mapping.rating).degrade(),
                path: [m1.id, m2.id],
                crosswalk: crosswalk.clone(),
                pivot_vocab: via.to_string(),
            };
            let key = (m1.mapping.source.clone(), relation, target.to_string());
            match best.get(&key) {
                Some(kept)
                    if (kept.confidence, std::cmp::Reverse(kept.path))
                        >= (candidate.confidence, std::cmp::Reverse(candidate.path)) => {}
                _ => {
                    best.insert(key, candidate);
                }
            }
        }
    }
    Ok(best.into_values().collect())
}

/// TSV line for an inferred mapping: the six standard columns plus a
/// trailing `# via:<pivot>` comment column.
pub fn format_inferred_line(store: &Store, inferred: &InferredMapping) -> String {
    let record = MappingRecord {
        id: MappingId(usize::MAX),
        crosswalk: inferred.crosswalk.clone(),
        mapping: inferred.to_mapping(),
    };
    format!(
        "{}\t# via:{}",
        format_mapping_line(store, &record),
        inferred.pivot_vocab
    )
}

pub fn export_inferred<W: Write>(
    store: &Store,
    inferred: &[InferredMapping],
    mut out: W,
) -> Result<()> {
    writeln!(out, "{TSV_HEADER}")?;
    for m in inferred {
        writeln!(out, "{}", format_inferred_line(store, m))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromotionReport {
    pub added: usize,
    pub duplicates: usize,
}

/// Writes inferred mappings into their `from→to` crosswalk, creating it when
/// needed. Mappings already present are counted, not re-added.
pub fn promote(store: &mut Store, inferred: &[InferredMapping]) -> Result<PromotionReport> {
    let mut report = PromotionReport::default();
    for m in inferred {
        let (crosswalk, _) = store.ensure_crosswalk(&m.crosswalk.source, &m.crosswalk.target)?;
        match store.add_mapping(&crosswalk, m.to_mapping()) {
            Ok(_) => report.added += 1,
            Err(Error::Conflict(_)) => report.duplicates += 1,
            Err(other) => return Err(other),
        }
    }
    Ok(report)
}

/// The same term, present in two source vocabularies, mapped by equivalence
/// to different concepts of one target vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct VariantConflict {
    pub term: String,
    pub vocab_pair: (String, String),
    pub target_vocab: String,
    pub targets: (Concept, Concept),
}

/// Reports variant mappings into `target_vocab`. Conflicts are only
/// reported; deciding whether they are intended is left to a reviewer.
pub fn detect_variant_mappings(store: &Store, target_vocab: &str) -> Vec<VariantConflict> {
    // term -> source vocab -> equivalence targets
    let mut targets: BTreeMap<&str, BTreeMap<&str, BTreeSet<&Concept>>> = BTreeMap::new();
    for crosswalk in store.crosswalks().filter(|c| c.target == target_vocab) {
        for record in store.crosswalk_mappings(crosswalk).unwrap_or_default() {
            if record.mapping.relation != RelationType::Eq {
                continue;
            }
            if let Some(target) = &record.mapping.target {
                targets
                    .entry(record.mapping.source.as_str())
                    .or_default()
                    .entry(crosswalk.source.as_str())
                    .or_default()
                    .insert(target);
            }
        }
    }

    let mut conflicts = Vec::new();
    for (term, per_vocab) in targets {
        let vocabs: Vec<(&&str, &BTreeSet<&Concept>)> = per_vocab.iter().collect();
        for (i, (v1, set1)) in vocabs.iter().enumerate() {
            for (v2, set2) in &vocabs[i + 1..] {
                if set1 == set2 {
                    continue;
                }
                for c1 in set1.iter() {
                    for c2 in set2.iter() {
                        if c1 != c2 && (!set2.contains(c1) || !set1.contains(c2)) {
                            conflicts.push(VariantConflict {
                                term: term.to_string(),
                                vocab_pair: (v1.to_string(), v2.to_string()),
                                target_vocab: target_vocab.to_string(),
                                targets: ((*c1).clone(), (*c2).clone()),
                            });
                        }
                    }
                }
            }
        }
    }
    conflicts
}
