//! Local HTTP API over a project directory.
//!
//! No authentication: bind to a loopback address only. Every response body
//! carries the alias-table version and provenance head it was computed from.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;

use std::sync::{Arc, Mutex, OnceLock, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use capta_core::communities::{louvain, Partition};
use capta_core::context::{window, ContextSnippet, SNIPPET_RADIUS_CHARS};
use capta_core::corpus::Corpus;
use capta_core::graph::FilterCriterion;
use capta_core::provenance::{Ledger, ProvenanceRecord, StepKind};
use capta_core::resolution::{Decision, DecisionLog, ResolutionError, ResolutionStatus, ReviewItem};
use capta_core::{Digest, EntityId};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::analysis::{
    build_network, extract_corpus, filter_network, lay_out, parse_corpus, parse_params, read_volumes,
    resolve_all, AnalysisError, Built, BuildParams, ExtractParams, FilterParams, LayoutStepParams, Resolved,
};
use crate::pipeline::PipelineError;
use crate::project::{submit_decision, Project, StoreError};

pub const DEFAULT_ADDR: &str = "127.0.0.1:7878";
pub const DEFAULT_QUEUE_LIMIT: usize = 50;
pub const DEFAULT_CONTEXT_LIMIT: usize = 20;
pub const UI_DIR: &str = "ui";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server: {0}")]
    Serve(std::io::Error),
}

/// Structured error body `{code, message, detail}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>, detail: Value) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            detail,
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message, Value::Null)
    }

    fn not_found(message: impl Into<String>, detail: Value) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message, detail)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, Value::Null)
    }
}

impl From<ResolutionError> for ApiError {
    fn from(e: ResolutionError) -> Self {
        let status = match e.code() {
            "not_found" => StatusCode::NOT_FOUND,
            "conflict" => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let code = match e.code() {
            "not_found" => "not_found",
            "conflict" => "conflict",
            _ => "validation",
        };
        let detail = match &e {
            ResolutionError::NotFound(id) => json!({ "id": id }),
            ResolutionError::AliasConflict { alias, holder } => json!({ "alias": alias, "holder": holder }),
            ResolutionError::IdConflict(id) => json!({ "id": id }),
            ResolutionError::Validation(_) => Value::Null,
        };
        Self::new(status, code, e.to_string(), detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct NetworkKey {
    criterion: FilterCriterion,
    with_layout: bool,
    with_communities: bool,
}

/// Everything derived from one alias-table version. Replaced, never mutated,
/// when a decision lands; its network cache goes with it.
struct Snapshot {
    alias_version: u64,
    provenance_head: Digest,
    provenance_seq: u64,
    corpus: Arc<Corpus>,
    resolved: Resolved,
    built: Built,
    full_partition: OnceLock<Partition>,
    networks: Mutex<HashMap<NetworkKey, Arc<Value>>>,
}

struct Writer {
    decisions: DecisionLog,
    ledger: Ledger,
}

pub struct AppState {
    project: Project,
    corpus: Arc<Corpus>,
    snapshot: RwLock<Arc<Snapshot>>,
    writer: tokio::sync::Mutex<Writer>,
}

fn ledger_head(ledger: &Ledger) -> (Digest, u64) {
    (ledger.head(), ledger.records().last().map_or(0, |r| r.seq))
}

impl AppState {
    /// Parse the corpus once and derive the first snapshot.
    pub fn load(project: Project) -> Result<Self, ServiceError> {
        let decisions = project.load_decisions()?;
        let ledger = project.load_ledger()?;
        let params = parse_params(&project.root, &project.config)?;
        let sources = read_volumes(&project.root, &params)?;
        let (corpus, _) = parse_corpus(&params, &sources)?;
        let corpus = Arc::new(corpus);
        let snapshot = Self::derive(&project, corpus.clone(), &decisions, &ledger)?;
        Ok(Self {
            project,
            corpus,
            snapshot: RwLock::new(Arc::new(snapshot)),
            writer: tokio::sync::Mutex::new(Writer { decisions, ledger }),
        })
    }

    fn derive(
        project: &Project,
        corpus: Arc<Corpus>,
        decisions: &DecisionLog,
        ledger: &Ledger,
    ) -> Result<Snapshot, AnalysisError> {
        let c = &project.config;
        let table = decisions.table();
        let extract = ExtractParams {
            alias_version: table.version(),
            alias_digest: table.digest(),
            honorifics: c.extraction.honorifics.clone(),
            honorific_candidates: c.extraction.honorific_candidates,
            max_candidate_tokens: c.extraction.max_candidate_tokens,
        };
        let mentions = extract_corpus(&corpus, table, &extract)?;
        let resolved = resolve_all(&corpus, &mentions, table);
        let built = build_network(
            &corpus,
            &resolved,
            &BuildParams {
                ego: c.graph.ego.iter().cloned().collect(),
                window_days: c.graph.window_days,
            },
        );
        let (provenance_head, provenance_seq) = ledger_head(ledger);
        Ok(Snapshot {
            alias_version: table.version(),
            provenance_head,
            provenance_seq,
            corpus,
            resolved,
            built,
            full_partition: OnceLock::new(),
            networks: Mutex::new(HashMap::new()),
        })
    }

    fn current(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }
}

fn envelope(s: &Snapshot, body: Value) -> Json<Value> {
    let mut v = json!({
        "alias_version": s.alias_version,
        "provenance_head": s.provenance_head,
    });
    if let (Value::Object(out), Value::Object(extra)) = (&mut v, body) {
        out.extend(extra);
    }
    Json(v)
}

pub fn router(state: Arc<AppState>) -> Router {
    let ui = state.project.root.join(UI_DIR);
    Router::new()
        .route("/api/queue", get(get_queue))
        .route("/api/decisions", post(post_decision))
        .route("/api/network", get(get_network))
        .route("/api/persons/{id}/contexts", get(get_contexts))
        .route("/api/provenance", get(get_provenance))
        .route("/api/stats", get(get_stats))
        .route("/api/histogram", get(get_histogram))
        .fallback_service(ServeDir::new(ui))
        .with_state(state)
}

/// Serve until interrupted.
pub async fn serve(project: Project, addr: SocketAddr) -> Result<(), ServiceError> {
    if !addr.ip().is_loopback() {
        log::warn!("binding {addr}: the API has no authentication");
    }
    let state = Arc::new(tokio::task::spawn_blocking(move || AppState::load(project)).await.expect("loader")?);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    log::info!("listening on http://{}", listener.local_addr().map_err(ServiceError::Serve)?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}

#[derive(Debug, Deserialize)]
struct Page {
    offset: Option<usize>,
    limit: Option<usize>,
}

async fn get_queue(State(state): State<Arc<AppState>>, Query(page): Query<Page>) -> Json<Value> {
    let s = state.current();
    let queue: &[ReviewItem] = &s.resolved.queue;
    let offset = page.offset.unwrap_or(0).min(queue.len());
    let limit = page.limit.unwrap_or(DEFAULT_QUEUE_LIMIT);
    let items = &queue[offset..(offset.saturating_add(limit)).min(queue.len())];
    envelope(
        &s,
        json!({ "total": queue.len(), "offset": offset, "limit": limit, "items": items }),
    )
}

async fn post_decision(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let decision: Decision = serde_json::from_slice(&body)
        .map_err(|e| ApiError::validation(format!("bad decision body: {e}")))?;
    let mut w = state.writer.lock().await;
    let Writer { decisions, ledger } = &mut *w;
    let record = match submit_decision(&state.project, decisions, ledger, decision) {
        Ok(r) => r,
        Err(StoreError::Rejected(e)) => return Err(e.into()),
        Err(e) => return Err(ApiError::internal(e.to_string())),
    };
    let project = state.project.clone();
    let corpus = state.corpus.clone();
    let (d, l) = (decisions.clone(), ledger.clone());
    let snapshot = tokio::task::spawn_blocking(move || AppState::derive(&project, corpus, &d, &l))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::internal(e.to_string()))?;
    *state.snapshot.write().expect("snapshot lock") = Arc::new(snapshot);
    let s = state.current();
    drop(w);
    Ok(envelope(&s, json!({ "provenance_seq": record.seq })))
}

#[derive(Debug, Deserialize)]
struct NetworkQuery {
    min_days: Option<u32>,
    top_n: Option<usize>,
    #[serde(default)]
    with_layout: bool,
    #[serde(default)]
    with_communities: bool,
}

fn network_view(state: &AppState, s: &Snapshot, key: NetworkKey) -> Result<Value, AnalysisError> {
    let c = &state.project.config;
    let full = &s.built.graph;
    let filtered = filter_network(full, &FilterParams { criterion: key.criterion });
    let full_partition = s
        .full_partition
        .get_or_init(|| louvain(full, c.communities.seed, c.communities.gamma));
    let partition = louvain(&filtered.graph, c.communities.seed, c.communities.gamma);
    let labels = partition.assignment();
    let agreement = if filtered.retained.is_empty() {
        None
    } else {
        capta_core::communities::partition_agreement(&labels, &full_partition.assignment(), &filtered.retained).ok()
    };
    let laid = if key.with_layout {
        Some(lay_out(
            &filtered.graph,
            &LayoutStepParams {
                seed: c.layout.seed,
                forces: c.layout.forces.clone(),
                labels: c.layout.labels.clone(),
            },
        )?)
    } else {
        None
    };
    let nodes: Vec<Value> = filtered
        .graph
        .nodes
        .iter()
        .map(|(id, n)| {
            let mut v = json!({
                "id": id,
                "display_name": n.display_name,
                "days_mentioned": n.days_mentioned,
                "total_mentions": n.total_mentions,
            });
            if key.with_communities {
                v["community"] = json!(labels[id]);
            }
            if let Some(l) = &laid {
                let [x, y] = l.positions[id];
                v["x"] = json!(x);
                v["y"] = json!(y);
            }
            v
        })
        .collect();
    let mut body = json!({
        "filter": key.criterion,
        "provenance_seq": s.provenance_seq,
        "nodes": nodes,
        "edges": filtered.graph.edges,
        "full_node_count": full.node_count(),
        "hidden_count": full.node_count() - filtered.graph.node_count(),
        "agreement": agreement,
    });
    if key.with_communities {
        body["community_count"] = json!(partition.community_count());
        body["modularity"] = json!(partition.final_modularity());
    }
    if let Some(l) = &laid {
        body["layout"] = json!({
            "iterations": l.iterations,
            "converged": l.converged,
            "remaining_overlaps": l.remaining_overlaps,
        });
    }
    Ok(body)
}

async fn get_network(
    State(state): State<Arc<AppState>>,
    Query(q): Query<NetworkQuery>,
) -> Result<Json<Value>, ApiError> {
    let criterion = match (q.min_days, q.top_n) {
        (Some(_), Some(_)) => return Err(ApiError::validation("give min_days or top_n, not both")),
        (Some(0), None) => return Err(ApiError::validation("min_days must be at least 1")),
        (Some(k), None) => FilterCriterion::MinDays(k),
        (None, Some(n)) => FilterCriterion::TopN(n),
        (None, None) => state.project.config.graph.filter,
    };
    let key = NetworkKey {
        criterion,
        with_layout: q.with_layout,
        with_communities: q.with_communities,
    };
    let s = state.current();
    if let Some(v) = s.networks.lock().expect("cache lock").get(&key) {
        return Ok(envelope(&s, (**v).clone()));
    }
    let (st, snap) = (state.clone(), s.clone());
    let body = tokio::task::spawn_blocking(move || network_view(&st, &snap, key))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let body = Arc::new(body);
    s.networks.lock().expect("cache lock").insert(key, body.clone());
    Ok(envelope(&s, (*body).clone()))
}

#[derive(Debug, Deserialize)]
struct ContextQuery {
    limit: Option<usize>,
}

async fn get_contexts(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ContextQuery>,
) -> Result<Json<Value>, ApiError> {
    let s = state.current();
    let id = EntityId::new(id);
    let Some(display_name) = s.resolved.names.get(&id) else {
        return Err(ApiError::not_found(format!("no entity {id}"), json!({ "id": id })));
    };
    let mut hits = Vec::new();
    for er in &s.resolved.resolutions {
        for r in &er.resolutions {
            if matches!(&r.status, ResolutionStatus::Resolved { entity } if *entity == id) {
                hits.push((er.entry, &r.mention));
            }
        }
    }
    // Newest first; within a day, later entries and later mentions first.
    hits.sort_by(|a, b| {
        let (ea, eb) = (&s.corpus.entries[a.0], &s.corpus.entries[b.0]);
        (eb.date, b.0, b.1.span.start).cmp(&(ea.date, a.0, a.1.span.start))
    });
    let limit = q.limit.unwrap_or(DEFAULT_CONTEXT_LIMIT);
    let contexts: Vec<ContextSnippet> = hits
        .iter()
        .take(limit)
        .map(|(entry, m)| {
            let e = &s.corpus.entries[*entry];
            let (text, highlight) = window(&e.text, m.span, SNIPPET_RADIUS_CHARS);
            ContextSnippet {
                entry: *entry,
                volume_id: e.volume_id.clone(),
                date: e.date,
                text,
                highlight,
            }
        })
        .collect();
    Ok(envelope(
        &s,
        json!({ "id": id, "display_name": display_name, "total": hits.len(), "contexts": contexts }),
    ))
}

async fn get_provenance(State(state): State<Arc<AppState>>) -> Json<Value> {
    let records: Vec<ProvenanceRecord> = state.writer.lock().await.ledger.records().to_vec();
    let s = state.current();
    let human: BTreeSet<u64> = records
        .iter()
        .filter(|r| r.step == StepKind::Decision)
        .map(|r| r.seq)
        .collect();
    envelope(&s, json!({ "records": records, "decision_seqs": human }))
}

async fn get_stats(State(state): State<Arc<AppState>>) -> Json<Value> {
    let s = state.current();
    let g = &s.built.graph;
    envelope(
        &s,
        json!({
            "stats": s.built.stats,
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "queue_length": s.resolved.queue.len(),
            "entries": s.corpus.entries.len(),
        }),
    )
}

async fn get_histogram(State(state): State<Arc<AppState>>) -> Json<Value> {
    let s = state.current();
    let rows: Vec<Value> = s
        .built
        .histogram
        .bins
        .iter()
        .map(|(d, n)| json!({ "days_mentioned": d, "persons": n }))
        .collect();
    envelope(&s, json!({ "bins": rows }))
}
