use std::collections::{BTreeSet, HashSet};

use super::QueryAst;
use crate::error::{Error, Result};
use crate::store::{Concept, LookupFilter, RelationType, RelevanceRating, Store};

/// Which mappings feed expansion. Built through the `with_*` methods, which
/// keep the null relation out of the relation set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionConfig {
    relations: BTreeSet<RelationType>,
    target_vocabs: Option<BTreeSet<String>>,
    min_rating: Option<RelevanceRating>,
    max_terms_per_leaf: usize,
    expand_under_not: bool,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            relations: BTreeSet::from([RelationType::Eq]),
            target_vocabs: None,
            min_rating: None,
            max_terms_per_leaf: 32,
            expand_under_not: false,
        }
    }
}

impl ExpansionConfig {
    pub fn with_relations(
        mut self,
        relations: impl IntoIterator<Item = RelationType>,
    ) -> Result<Self> {
        let relations: BTreeSet<RelationType> = relations.into_iter().collect();
        if relations.contains(&RelationType::Null) {
            return Err(Error::InvalidArgument(
                "the null relation cannot drive expansion".into(),
            ));
        }
        self.relations = relations;
        Ok(self)
    }

    pub fn with_target_vocabs<S: Into<String>>(
        mut self,
        vocabs: impl IntoIterator<Item = S>,
    ) -> Self {
        self.target_vocabs = Some(vocabs.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_min_rating(mut self, rating: RelevanceRating) -> Self {
        self.min_rating = Some(rating);
        self
    }

    pub fn with_max_terms(mut self, max: usize) -> Result<Self> {
        if max == 0 {
            return Err(Error::InvalidArgument(
                "max terms per leaf must be positive".into(),
            ));
        }
        self.max_terms_per_leaf = max;
        Ok(self)
    }

    pub fn with_expand_under_not(mut self, expand: bool) -> Self {
        self.expand_under_not = expand;
        self
    }

    pub fn relations(&self) -> &BTreeSet<RelationType> {
        &self.relations
    }

    pub fn max_terms_per_leaf(&self) -> usize {
        self.max_terms_per_leaf
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    /// Added concept in ` + ` text form.
    pub term: String,
    pub source_vocab: String,
    pub target_vocab: String,
    pub relation: RelationType,
    pub rating: RelevanceRating,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafTrace {
    pub leaf: String,
    pub added: Vec<TraceEntry>,
}

/// What expansion added, one entry per expanded leaf in query order. Leaves
/// that gained nothing are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpansionTrace {
    pub leaves: Vec<LeafTrace>,
}

impl ExpansionTrace {
    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }
}

/// Rewrites every eligible leaf `L` into `Or(L, e1, .., ek)`. Operator nodes
/// are copied unchanged, so the Boolean skeleton of the input survives.
pub fn expand_query(
    store: &Store,
    ast: &QueryAst,
    cfg: &ExpansionConfig,
) -> (QueryAst, ExpansionTrace) {
    let mut trace = ExpansionTrace::default();
    let expanded = expand_node(store, ast, cfg, false, &mut trace);
    (expanded, trace)
}

fn expand_node(
    store: &Store,
    node: &QueryAst,
    cfg: &ExpansionConfig,
    under_not: bool,
    trace: &mut ExpansionTrace,
) -> QueryAst {
    match node {
        QueryAst::Term(text) | QueryAst::Phrase(text) => {
            if under_not && !cfg.expand_under_not {
                return node.clone();
            }
            expand_leaf(store, node, text, cfg, trace)
        }
        QueryAst::And(children) => QueryAst::And(
            children
                .iter()
                .map(|c| expand_node(store, c, cfg, under_not, trace))
                .collect(),
        ),
        QueryAst::Or(children) => QueryAst::Or(
            children
                .iter()
                .map(|c| expand_node(store, c, cfg, under_not, trace))
                .collect(),
        ),
        QueryAst::Not(child) => QueryAst::negate(expand_node(store, child, cfg, true, trace)),
    }
}

fn expand_leaf(
    store: &Store,
    leaf: &QueryAst,
    text: &str,
    cfg: &ExpansionConfig,
    trace: &mut ExpansionTrace,
) -> QueryAst {
    let filter = LookupFilter {
        relations: Some(
            cfg.relations
                .iter()
                .copied()
                .filter(|r| *r != RelationType::Null)
                .collect(),
        ),
        min_rating: cfg.min_rating,
        ..LookupFilter::default()
    };
    let mut candidates = store.mappings_from(text, &filter);
    if let Some(vocabs) = &cfg.target_vocabs {
        candidates.retain(|r| vocabs.contains(&r.crosswalk.target));
    }
    // equivalents first so a tight cap keeps them
    candidates.sort_by_key(|r| r.mapping.relation);

    let original = Concept::Single(text.to_string());
    let mut seen: HashSet<&Concept> = HashSet::from([&original]);
    let mut group = vec![leaf.clone()];
    let mut added = Vec::new();
    for record in candidates {
        if added.len() == cfg.max_terms_per_leaf {
            break;
        }
        let Some(target) = record.mapping.target.as_ref() else {
            continue;
        };
        if !seen.insert(target) {
            continue;
        }
        group.push(concept_node(target));
        added.push(TraceEntry {
            term: target.to_string(),
            source_vocab: record.crosswalk.source.clone(),
            target_vocab: record.crosswalk.target.clone(),
            relation: record.mapping.relation,
            rating: record.mapping.rating,
        });
    }
    if added.is_empty() {
        return leaf.clone();
    }
    trace.leaves.push(LeafTrace {
        leaf: text.to_string(),
        added,
    });
    QueryAst::Or(group)
}

fn concept_node(concept: &Concept) -> QueryAst {
    let leaf = |t: &String| QueryAst::leaf(t).expect("stored terms are normalized and non-empty");
    match concept {
        Concept::Single(t) => leaf(t),
        Concept::Combination(members) => QueryAst::And(members.iter().map(leaf).collect()),
    }
}
