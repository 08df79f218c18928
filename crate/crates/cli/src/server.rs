//! HTTP review service: documents, candidates, expert decisions,
//! vocabulary pages and acceptance statistics under `/api/`, and the UI at `/`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use mathtag::corpus::Document;
use mathtag::keyphrase::{Candidate, Extractor, Reason, Tier};
use mathtag::msc::MscCode;
use mathtag::vocabstore::{
    DecisionCounts, DecisionOutcome, Status, VocabError, VocabStore, VocabularyLookup, Verdict,
};

use crate::commands::SharedVocabulary;
use crate::config::PipelineConfig;
use crate::CliError;

const INDEX_HTML: &str = include_str!("../static/index.html");
pub const DEFAULT_PAGE_SIZE: usize = 50;

pub struct AppState {
    corpus: Vec<Document>,
    by_id: HashMap<String, usize>,
    extractor: Extractor,
    vocab: SharedVocabulary,
}

impl AppState {
    /// Builds the service state; `extractor` should read its vocabulary
    /// from `vocab`.
    pub fn new(corpus: Vec<Document>, extractor: Extractor, vocab: SharedVocabulary) -> Self {
        let by_id = corpus.iter().enumerate().map(|(i, d)| (d.id.clone(), i)).collect();
        AppState {
            corpus,
            by_id,
            extractor,
            vocab,
        }
    }

    pub fn from_config(config: &PipelineConfig, corpus: Vec<Document>) -> Result<Self, CliError> {
        let store = match &config.vocab_path {
            Some(dir) => VocabStore::open(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?,
            None => VocabStore::in_memory(),
        };
        let vocab: SharedVocabulary = Arc::new(RwLock::new(store));
        let extractor = config.extractor(vocab.clone() as Arc<dyn VocabularyLookup>)?;
        Ok(Self::new(corpus, extractor, vocab))
    }

    pub fn vocabulary(&self) -> &SharedVocabulary {
        &self.vocab
    }
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

fn poisoned<T>(_: T) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, "vocabulary lock poisoned".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentSummary {
    pub id: String,
    pub title: String,
    pub n_candidates: usize,
    pub n_decided: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub phrase: String,
    pub tier: Tier,
    pub weight: f64,
    pub reasons: Vec<Reason>,
    pub group_members: Vec<String>,
    pub status: Option<Status>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub doc_id: String,
    pub phrase: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct VocabularyQuery {
    pub status: Option<String>,
    pub page: Option<usize>,
    pub page_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyItem {
    pub phrase: String,
    pub status: Status,
    pub frequency: u64,
    pub msc_top: Option<MscCode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyPage {
    pub page: usize,
    pub page_size: usize,
    pub total: usize,
    pub entries: Vec<VocabularyItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub accepted: u64,
    pub rejected: u64,
    pub edited: u64,
    pub decisions: u64,
    pub acceptance_rate: f64,
    pub good: usize,
    pub bad: usize,
    pub candidate: usize,
}

type Shared = Arc<AppState>;

fn candidates(state: &AppState, doc: &Document) -> Result<Vec<Candidate>, ApiError> {
    state
        .extractor
        .extract_detailed(doc)
        .map(|e| e.candidates)
        .map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
}

fn status_of(vocab: &VocabStore, phrase: &str) -> Option<Status> {
    vocab.lookup(phrase).map(|e| e.status)
}

async fn list_documents(State(state): State<Shared>) -> Result<Json<Vec<DocumentSummary>>, ApiError> {
    let mut out = Vec::with_capacity(state.corpus.len());
    for doc in &state.corpus {
        let cands = candidates(&state, doc).unwrap_or_default();
        let vocab = state.vocab.read().map_err(poisoned)?;
        let n_decided = cands
            .iter()
            .filter(|c| matches!(status_of(&vocab, &c.scored.surface), Some(Status::Good | Status::Bad)))
            .count();
        out.push(DocumentSummary {
            id: doc.id.clone(),
            title: doc.title.clone(),
            n_candidates: cands.len(),
            n_decided,
        });
    }
    Ok(Json(out))
}

async fn document_candidates(
    State(state): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<Vec<CandidateView>>, ApiError> {
    let doc = state
        .by_id
        .get(&id)
        .map(|&i| &state.corpus[i])
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown document {id:?}")))?;
    let cands = candidates(&state, doc)?;
    let vocab = state.vocab.read().map_err(poisoned)?;
    Ok(Json(
        cands
            .into_iter()
            .map(|c| CandidateView {
                status: status_of(&vocab, &c.scored.surface),
                phrase: c.scored.surface,
                tier: c.scored.tier,
                weight: c.scored.weight,
                reasons: c.scored.reasons,
                group_members: c.group_members,
            })
            .collect(),
    ))
}

async fn post_decision(
    State(state): State<Shared>,
    Json(req): Json<DecisionRequest>,
) -> Result<Json<DecisionOutcome>, ApiError> {
    if !state.by_id.contains_key(&req.doc_id) {
        return Err(ApiError(StatusCode::NOT_FOUND, format!("unknown document {:?}", req.doc_id)));
    }
    let mut vocab = state.vocab.write().map_err(poisoned)?;
    match vocab.record_decision(&req.phrase, &req.verdict, &req.doc_id) {
        Ok(outcome) => Ok(Json(outcome)),
        Err(e @ (VocabError::EmptyPhrase | VocabError::SelfEdit(_))) => {
            Err(ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
        }
        Err(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

async fn vocabulary(
    State(state): State<Shared>,
    Query(q): Query<VocabularyQuery>,
) -> Result<Json<VocabularyPage>, ApiError> {
    let status = q
        .status
        .as_deref()
        .map(str::parse::<Status>)
        .transpose()
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e))?;
    let page = q.page.unwrap_or(1).max(1);
    let page_size = q.page_size.unwrap_or(DEFAULT_PAGE_SIZE).clamp(1, 1000);
    let vocab = state.vocab.read().map_err(poisoned)?;
    let all = vocab.entries(status);
    let entries = all
        .iter()
        .skip((page - 1) * page_size)
        .take(page_size)
        .map(|e| VocabularyItem {
            phrase: e.phrase.clone(),
            status: e.status,
            frequency: e.frequency,
            msc_top: e.msc_top,
        })
        .collect();
    Ok(Json(VocabularyPage {
        page,
        page_size,
        total: all.len(),
        entries,
    }))
}

async fn stats(State(state): State<Shared>) -> Result<Json<Stats>, ApiError> {
    let vocab = state.vocab.read().map_err(poisoned)?;
    let d: DecisionCounts = vocab.decision_counts();
    Ok(Json(Stats {
        accepted: d.accepted,
        rejected: d.rejected,
        edited: d.edited,
        decisions: d.total(),
        acceptance_rate: d.acceptance_rate(),
        good: vocab.count(Status::Good),
        bad: vocab.count(Status::Bad),
        candidate: vocab.count(Status::Candidate),
    }))
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/documents", get(list_documents))
        .route("/api/documents/{id}/candidates", get(document_candidates))
        .route("/api/decisions", post(post_decision))
        .route("/api/vocabulary", get(vocabulary))
        .route("/api/stats", get(stats))
        .with_state(Arc::new(state))
}

/// Binds the configured port and serves until the process is stopped.
pub fn serve_blocking(config: &PipelineConfig, corpus: Vec<Document>, stderr: &mut dyn Write) -> Result<(), CliError> {
    let state = AppState::from_config(config, corpus)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Service(e.to_string()))?;
    runtime.block_on(async {
        let addr = ("127.0.0.1", config.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Service(format!("port {}: {e}", config.port)))?;
        let local = listener.local_addr().map_err(|e| CliError::Service(e.to_string()))?;
        writeln!(stderr, "serving on http://{local}/")?;
        log::info!("serving on http://{local}/");
        axum::serve(listener, router(state))
            .await
            .map_err(|e| CliError::Service(e.to_string()))
    })
}
