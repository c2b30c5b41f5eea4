//! Terminology mapping engine for controlled vocabularies.
//!
//! The crate stores directed cross-concordances (crosswalks) between
//! vocabularies and builds the lookup features on top of them:
//!
//! - [`registry`]: vocabularies, term lists and the canonical term normalization
//! - [`store`]: crosswalks, forward/reverse mapping indexes and TSV persistence
//! - [`query`]: Boolean query parsing, structure-preserving expansion and rendering
//! - [`inference`]: pivot-vocabulary composition and variant-mapping detection
//! - [`skos`]: N-Triples exchange using the SKOS mapping predicates
//! - [`assessment`]: spot checks of mappings against indexed document corpora
//! - [`translate`]: cross-language lookup of preferred controlled terms

pub mod assessment;
pub mod error;
pub mod inference;
pub mod query;
pub mod registry;
pub mod skos;
pub mod store;
pub mod translate;

pub use error::{Error, Result};
pub use registry::{normalize_term, Language, Registry, Term, Vocabulary};
pub use store::{
    Concept, CrosswalkId, ImportReport, Mapping, MappingId, MappingRecord, RelationType,
    RelevanceRating, Store,
};
