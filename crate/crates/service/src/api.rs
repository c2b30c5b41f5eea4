//! HTTP routes. Every handler is a projection of one library call onto a
//! JSON body with a top-level `"v": 1`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::PathRejection;
use axum::extract::{Path, RawQuery, State};
use axum::http::{StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use komohe::query::{expand_query, parse_query, ExpansionConfig};
use komohe::store::LookupFilter;
use komohe::translate::translate;
use komohe::{Error, Language, RelationType, RelevanceRating, Store};
use serde::Serialize;

const SCHEMA_VERSION: u32 = 1;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub max_expansion_terms: usize,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/vocabularies", get(vocabularies))
        .route("/terms/{vocab}/{term}/mappings", get(term_mappings))
        .route("/expand", get(expand))
        .route("/translate", get(translate_term))
        .fallback(not_found)
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    position: Option<usize>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
            position: None,
        }
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::NotFound { .. } => StatusCode::NOT_FOUND,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        let position = match &err {
            Error::Parse { position, .. } => Some(*position),
            _ => None,
        };
        ApiError {
            status,
            message: err.to_string(),
            position,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    v: u32,
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    position: Option<usize>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            v: SCHEMA_VERSION,
            error: &self.message,
            position: self.position,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn not_found(uri: Uri) -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        message: format!("no route for {}", uri.path()),
        position: None,
    }
}

/// Query string parameters. Unknown and repeated keys are rejected; empty
/// values count as absent.
struct Params(BTreeMap<String, String>);

impl Params {
    fn parse(raw: Option<String>, allowed: &[&str]) -> Result<Self, ApiError> {
        let mut map = BTreeMap::new();
        for (key, value) in form_urlencoded::parse(raw.unwrap_or_default().as_bytes()) {
            if !allowed.contains(&key.as_ref()) {
                return Err(ApiError::bad_request(format!("unknown parameter {key:?}")));
            }
            if map.insert(key.to_string(), value.into_owned()).is_some() {
                return Err(ApiError::bad_request(format!("repeated parameter {key:?}")));
            }
        }
        Ok(Params(map))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .filter(|v| !v.trim().is_empty())
    }

    fn require(&self, key: &str) -> Result<&str, ApiError> {
        self.get(key)
            .ok_or_else(|| ApiError::bad_request(format!("missing parameter {key:?}")))
    }

    fn language(&self, key: &str) -> Result<Option<Language>, ApiError> {
        self.get(key)
            .map(|v| v.parse().map_err(ApiError::from))
            .transpose()
    }
}

#[derive(Serialize)]
struct VocabulariesBody<'a> {
    v: u32,
    vocabularies: Vec<VocabularyJson<'a>>,
}

#[derive(Serialize)]
struct VocabularyJson<'a> {
    id: &'a str,
    name: &'a str,
    language: Option<&'a str>,
    discipline: &'a str,
    term_count: usize,
}

async fn vocabularies(State(state): State<AppState>) -> Response {
    let registry = state.store.registry();
    let vocabularies = registry
        .vocabularies()
        .map(|v| VocabularyJson {
            id: &v.id,
            name: &v.name,
            language: v.language.as_ref().map(Language::as_str),
            discipline: &v.discipline,
            term_count: registry.term_count(&v.id).unwrap_or(0),
        })
        .collect();
    Json(VocabulariesBody {
        v: SCHEMA_VERSION,
        vocabularies,
    })
    .into_response()
}

#[derive(Serialize)]
struct MappingsBody {
    v: u32,
    mappings: Vec<MappingJson>,
}

#[derive(Serialize)]
struct MappingJson {
    relation: &'static str,
    target_vocab: String,
    target_terms: Vec<String>,
    rating: &'static str,
}

async fn term_mappings(
    State(state): State<AppState>,
    path: Result<Path<(String, String)>, PathRejection>,
    RawQuery(query): RawQuery,
) -> ApiResult<MappingsBody> {
    let Path((vocab, term)) = path.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let params = Params::parse(query, &["relation", "target", "min_rating"])?;
    if !state.store.registry().contains(&vocab) {
        return Err(Error::NotFound {
            kind: "vocabulary",
            id: vocab,
        }
        .into());
    }
    komohe::normalize_term(&term)?;

    let mut filter = LookupFilter::default().source_vocab(&vocab);
    if let Some(relations) = params.get("relation") {
        filter = filter.relations(RelationType::parse_set(relations)?);
    }
    if let Some(target) = params.get("target") {
        filter = filter.target_vocab(target);
    }
    if let Some(rating) = params.get("min_rating") {
        filter = filter.min_rating(rating.parse::<RelevanceRating>()?);
    }
    let mappings = state
        .store
        .mappings_from(&term, &filter)
        .into_iter()
        .map(|record| MappingJson {
            relation: record.mapping.relation.symbol(),
            target_vocab: record.crosswalk.target.clone(),
            target_terms: record.mapping.target_members().to_vec(),
            rating: record.mapping.rating.name(),
        })
        .collect();
    Ok(Json(MappingsBody {
        v: SCHEMA_VERSION,
        mappings,
    }))
}

#[derive(Serialize)]
struct ExpandBody {
    v: u32,
    original: String,
    expanded: String,
    trace: Vec<LeafJson>,
}

#[derive(Serialize)]
struct LeafJson {
    leaf: String,
    added: Vec<AddedJson>,
}

#[derive(Serialize)]
struct AddedJson {
    term: String,
    source_vocab: String,
    target_vocab: String,
    relation: &'static str,
    rating: &'static str,
}

async fn expand(State(state): State<AppState>, RawQuery(query): RawQuery) -> ApiResult<ExpandBody> {
    let params = Params::parse(query, &["q", "relations", "vocabs", "max"])?;
    let ast = parse_query(params.require("q")?)?;

    let mut cfg = ExpansionConfig::default();
    if let Some(relations) = params.get("relations") {
        cfg = cfg.with_relations(RelationType::parse_set(relations)?)?;
    }
    if let Some(vocabs) = params.get("vocabs") {
        cfg = cfg.with_target_vocabs(vocabs.split(',').map(str::trim).filter(|s| !s.is_empty()));
    }
    let max = match params.get("max") {
        Some(raw) => raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                ApiError::bad_request(format!("max must be a positive integer, got {raw:?}"))
            })?,
        None => cfg.max_terms_per_leaf(),
    };
    cfg = cfg.with_max_terms(max.min(state.max_expansion_terms))?;

    let (expanded, trace) = expand_query(&state.store, &ast, &cfg);
    let trace = trace
        .leaves
        .into_iter()
        .map(|leaf| LeafJson {
            leaf: leaf.leaf,
            added: leaf
                .added
                .into_iter()
                .map(|e| AddedJson {
                    term: e.term,
                    source_vocab: e.source_vocab,
                    target_vocab: e.target_vocab,
                    relation: e.relation.symbol(),
                    rating: e.rating.name(),
                })
                .collect(),
        })
        .collect();
    Ok(Json(ExpandBody {
        v: SCHEMA_VERSION,
        original: ast.render(),
        expanded: expanded.render(),
        trace,
    }))
}

#[derive(Serialize)]
struct TranslateBody {
    v: u32,
    candidates: Vec<CandidateJson>,
}

#[derive(Serialize)]
struct CandidateJson {
    term: String,
    vocab: String,
    rating: &'static str,
    crosswalk: String,
}

async fn translate_term(
    State(state): State<AppState>,
    RawQuery(query): RawQuery,
) -> ApiResult<TranslateBody> {
    let params = Params::parse(query, &["term", "from_lang", "to_lang"])?;
    let term = params.require("term")?;
    let from = params.language("from_lang")?;
    let Some(to) = params.language("to_lang")? else {
        return Err(ApiError::bad_request("missing parameter \"to_lang\""));
    };
    komohe::normalize_term(term)?;
    let candidates = translate(&state.store, term, from.as_ref(), &to)?
        .into_iter()
        .map(|t| CandidateJson {
            term: t.term,
            vocab: t.vocab,
            rating: t.rating.name(),
            crosswalk: t.crosswalk.to_string(),
        })
        .collect();
    Ok(Json(TranslateBody {
        v: SCHEMA_VERSION,
        candidates,
    }))
}
