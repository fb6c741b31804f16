//! Local HTTP JSON API over a loaded corpus.
//!
//! Reads share the current session snapshot; `POST /assess`,
//! `DELETE /assess/{block}` and `POST /reload` take the write lock in turn.

mod error;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as JsonValue};
use tower_http::cors::CorsLayer;

use sachs_core::depgraph::GraphFormat;
use sachs_core::helpgen::{capability_presets, cooccurrence, coverage, Annotation, CapabilityProfile};
use sachs_core::{
    Arg, AssessmentReport, CellAddress, Color, ConceptGraph, Engine, ExplanationType, Granularity, Judgment,
};

pub use error::ApiError;

pub const DEFAULT_PORT: u16 = 7423;

/// Files a session is (re)loaded from.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub workbook: PathBuf,
    pub ontology: PathBuf,
    pub mapping: PathBuf,
    pub annotation: Option<PathBuf>,
}

impl CorpusPaths {
    fn load(&self) -> Result<(Engine, Option<Annotation>), String> {
        let engine = Engine::load(&self.workbook, &self.ontology, &self.mapping).map_err(|e| e.to_string())?;
        let annotation = match &self.annotation {
            Some(p) => Some(Annotation::load(p).map_err(|e| e.to_string())?),
            None => None,
        };
        Ok((engine, annotation))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub block: String,
    pub rule: String,
    pub report: AssessmentReport,
}

struct Session {
    id: String,
    engine: Arc<Engine>,
    annotation: Option<Arc<Annotation>>,
    overlays: BTreeMap<String, Overlay>,
}

pub struct AppState {
    paths: Option<CorpusPaths>,
    counter: AtomicU64,
    session: RwLock<Session>,
}

impl AppState {
    pub fn new(engine: Engine, annotation: Option<Annotation>, paths: Option<CorpusPaths>) -> Arc<Self> {
        Arc::new(Self {
            paths,
            counter: AtomicU64::new(1),
            session: RwLock::new(Session {
                id: "s1".into(),
                engine: Arc::new(engine),
                annotation: annotation.map(Arc::new),
                overlays: BTreeMap::new(),
            }),
        })
    }

    pub fn from_paths(paths: CorpusPaths) -> Result<Arc<Self>, String> {
        let (engine, annotation) = paths.load()?;
        Ok(Self::new(engine, annotation, Some(paths)))
    }

    fn read(&self) -> (String, Arc<Engine>) {
        let s = self.session.read().expect("session lock");
        (s.id.clone(), s.engine.clone())
    }

    fn annotation(&self) -> Result<Arc<Annotation>, ApiError> {
        self.session
            .read()
            .expect("session lock")
            .annotation
            .clone()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no_annotation", "the server was started without an annotation file"))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", get(session))
        .route("/cell/{addr}/help", get(help))
        .route("/cell/{addr}/resolve", get(resolve))
        .route("/assess", post(assess))
        .route("/assess/{block}", delete(clear_assessment))
        .route("/overlay", get(overlay))
        .route("/trace/{addr}", get(trace))
        .route("/graph/expand", post(expand))
        .route("/graph/{concept}", get(graph))
        .route("/coverage", get(coverage_report))
        .route("/cooccurrence", get(cooccurrence_report))
        .route("/variant", post(variant))
        .route("/reload", post(reload))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until ctrl-c on 127.0.0.1:`port`.
pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn parse_addr(s: &str) -> Result<CellAddress, ApiError> {
    s.parse()
        .map_err(|e| ApiError::bad_request("bad_address", format!("{s}: {e}")))
}

async fn session(State(state): State<Arc<AppState>>) -> Json<JsonValue> {
    let (id, engine) = state.read();
    let sheets: Vec<JsonValue> = engine
        .workbook()
        .sheets()
        .iter()
        .map(|s| {
            let (cols, rows) = s.extent().unwrap_or((0, 0));
            json!({"name": s.name(), "cells": s.len(), "columns": cols, "rows": rows})
        })
        .collect();
    let blocks: Vec<JsonValue> = engine
        .interpretation()
        .blocks()
        .iter()
        .map(|b| {
            let rules: Vec<&str> = engine
                .ontology()
                .rules()
                .filter(|r| r.concept_id == b.concept_id)
                .map(|r| r.id.as_str())
                .collect();
            json!({
                "id": b.id,
                "concept": b.concept_id,
                "region": b.region.to_string(),
                "legend": b.legend.to_string(),
                "rules": rules,
            })
        })
        .collect();
    let concepts: Vec<JsonValue> = engine
        .ontology()
        .concepts()
        .iter()
        .map(|c| json!({"id": c.id, "name": c.name, "depends_on": c.depends_on}))
        .collect();
    Json(json!({"id": id, "sheets": sheets, "blocks": blocks, "concepts": concepts}))
}

#[derive(Deserialize)]
struct HelpQuery {
    granularity: Option<String>,
    /// Comma-separated explanation types.
    types: Option<String>,
}

async fn help(
    State(state): State<Arc<AppState>>,
    Path(addr): Path<String>,
    Query(q): Query<HelpQuery>,
) -> Result<Response, ApiError> {
    let addr = parse_addr(&addr)?;
    let granularity: Granularity = match q.granularity {
        Some(g) => g.parse().map_err(|e| ApiError::bad_request("bad_granularity", e))?,
        None => Granularity::Label,
    };
    let types = match q.types.as_deref().filter(|t| !t.is_empty()) {
        Some(list) => list
            .split(',')
            .map(|t| t.parse::<ExplanationType>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ApiError::bad_request("bad_type", e))?,
        None => Vec::new(),
    };
    let (_, engine) = state.read();
    Ok(Json(engine.help(addr, &types, granularity)).into_response())
}

async fn resolve(State(state): State<Arc<AppState>>, Path(addr): Path<String>) -> Result<Response, ApiError> {
    let addr = parse_addr(&addr)?;
    let (_, engine) = state.read();
    Ok(Json(engine.resolve(addr)).into_response())
}

#[derive(Deserialize)]
struct AssessRequest {
    #[serde(default)]
    block: Option<String>,
    rule: String,
    #[serde(default)]
    profile: Option<String>,
}

async fn assess(State(state): State<Arc<AppState>>, Json(req): Json<AssessRequest>) -> Result<Json<Overlay>, ApiError> {
    let mut session = state.session.write().expect("session lock");
    let engine = session.engine.clone();
    let rule = engine
        .ontology()
        .rule(&req.rule)
        .ok_or_else(|| ApiError::not_found("unknown_rule", format!("unknown rule `{}`", req.rule)))?;
    let block = match req.block {
        Some(b) => b,
        None if rule.mode == sachs_core::RuleMode::Invariant => rule.id.clone(),
        None => return Err(ApiError::bad_request("missing_block", "value and domain rules need a block")),
    };
    let report = engine.assess(&block, &req.rule, req.profile.as_deref())?;
    let overlay = Overlay {
        block: block.clone(),
        rule: req.rule,
        report,
    };
    session.overlays.insert(block, overlay.clone());
    Ok(Json(overlay))
}

async fn clear_assessment(State(state): State<Arc<AppState>>, Path(block): Path<String>) -> Result<StatusCode, ApiError> {
    let mut session = state.session.write().expect("session lock");
    match session.overlays.remove(&block) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found("no_overlay", format!("no assessment is shown for `{block}`"))),
    }
}

/// Per-cell colors: a cell judged by several overlays shows the worst judgment.
fn cell_colors(overlays: &BTreeMap<String, Overlay>) -> BTreeMap<String, Color> {
    let mut judgments: BTreeMap<CellAddress, Judgment> = BTreeMap::new();
    for o in overlays.values() {
        for v in &o.report.verdicts {
            judgments
                .entry(v.addr)
                .and_modify(|j| *j = j.combine(v.judgment))
                .or_insert(v.judgment);
        }
    }
    judgments.into_iter().map(|(a, j)| (a.to_string(), j.color())).collect()
}

async fn overlay(State(state): State<Arc<AppState>>) -> Json<JsonValue> {
    let session = state.session.read().expect("session lock");
    let overlays: Vec<&Overlay> = session.overlays.values().collect();
    Json(json!({
        "session": session.id,
        "overlays": overlays,
        "cells": cell_colors(&session.overlays),
    }))
}

#[derive(Deserialize)]
struct DepthQuery {
    depth: Option<usize>,
}

async fn trace(
    State(state): State<Arc<AppState>>,
    Path(addr): Path<String>,
    Query(q): Query<DepthQuery>,
) -> Result<Json<JsonValue>, ApiError> {
    let addr = parse_addr(&addr)?;
    let (_, engine) = state.read();
    let trace = engine.trace(addr, q.depth.unwrap_or(1))?;
    let graph = engine.trace_graph(&trace)?;
    Ok(Json(json!({"trace": trace, "graph": graph})))
}

#[derive(Deserialize)]
struct GraphQuery {
    levels: Option<usize>,
    format: Option<String>,
}

fn graph_response(graph: &ConceptGraph, format: GraphFormat) -> Response {
    match format {
        GraphFormat::Json => Json(graph).into_response(),
        GraphFormat::Dot => ([(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")], graph.to_dot()).into_response(),
    }
}

/// `concept` may also be a cell address, which roots the graph at the cell's concept.
async fn graph(
    State(state): State<Arc<AppState>>,
    Path(concept): Path<String>,
    Query(q): Query<GraphQuery>,
) -> Result<Response, ApiError> {
    let format: GraphFormat = match q.format.as_deref() {
        Some(f) => f.parse().map_err(|e| ApiError::bad_request("bad_format", e))?,
        None => GraphFormat::Json,
    };
    let levels = q.levels.unwrap_or(2);
    let (_, engine) = state.read();
    let graph = match (engine.ontology().concept(&concept), concept.parse::<CellAddress>()) {
        (None, Ok(addr)) => engine.graph_for_cell(addr, levels)?,
        _ => engine.graph(&concept, levels)?,
    };
    Ok(graph_response(&graph, format))
}

#[derive(Deserialize)]
struct ExpandRequest {
    graph: ConceptGraph,
    node: String,
    /// Switch the node's text instead of expanding it.
    #[serde(default)]
    granularity: Option<Granularity>,
}

async fn expand(State(state): State<Arc<AppState>>, Json(req): Json<ExpandRequest>) -> Result<Json<ConceptGraph>, ApiError> {
    let (_, engine) = state.read();
    let graph = match req.granularity {
        Some(g) => engine.set_granularity(&req.graph, &req.node, g)?,
        None => engine.expand(&req.graph, &req.node)?,
    };
    Ok(Json(graph))
}

#[derive(Deserialize)]
struct CoverageQuery {
    /// Comma-separated explanation types forming an extra ad-hoc profile.
    capability: Option<String>,
}

async fn coverage_report(
    State(state): State<Arc<AppState>>,
    Query(q): Query<CoverageQuery>,
) -> Result<Json<sachs_core::helpgen::CoverageReport>, ApiError> {
    let annotation = state.annotation()?;
    let mut profiles = capability_presets();
    if let Some(list) = q.capability.as_deref().filter(|c| !c.is_empty()) {
        let types = list
            .split(',')
            .map(|t| t.parse::<ExplanationType>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ApiError::bad_request("bad_type", e))?;
        profiles.push(CapabilityProfile::new(list, &types));
    }
    Ok(Json(coverage(&annotation, &profiles)?))
}

#[derive(Deserialize)]
struct TopQuery {
    top: Option<usize>,
}

async fn cooccurrence_report(State(state): State<Arc<AppState>>, Query(q): Query<TopQuery>) -> Result<Json<JsonValue>, ApiError> {
    let annotation = state.annotation()?;
    let m = cooccurrence(&annotation)?;
    Ok(Json(json!({
        "types": ExplanationType::ALL,
        "counts": m.counts,
        "top_pairs": m.top_pairs(q.top.unwrap_or(5)),
    })))
}

#[derive(Deserialize)]
struct VariantRequest {
    block: String,
    frame: String,
    label: String,
    target_arg: serde_json::Value,
}

async fn variant(State(state): State<Arc<AppState>>, Json(req): Json<VariantRequest>) -> Result<Json<sachs_core::VariantResult>, ApiError> {
    let target = Arg::from_value(&match req.target_arg {
        serde_json::Value::String(s) => sachs_core::Value::Text(s),
        n @ serde_json::Value::Number(_) => sachs_core::Value::Number(
            sachs_core::num::parse(&n.to_string()).map_err(|e| ApiError::bad_request("bad_target", e))?,
        ),
        other => return Err(ApiError::bad_request("bad_target", format!("not an argument: {other}"))),
    })
    .ok_or_else(|| ApiError::bad_request("bad_target", "empty argument"))?;
    let (_, engine) = state.read();
    Ok(Json(engine.variant(&req.block, &req.frame, &req.label, &target)?))
}

async fn reload(State(state): State<Arc<AppState>>) -> Result<Json<JsonValue>, ApiError> {
    let mut session = state.session.write().expect("session lock");
    let (engine, annotation) = match &state.paths {
        Some(paths) => {
            let (e, a) = paths
                .load()
                .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "load_failed", e))?;
            (Arc::new(e), a.map(Arc::new))
        }
        None => (session.engine.clone(), session.annotation.clone()),
    };
    let n = state.counter.fetch_add(1, Ordering::SeqCst) + 1;
    *session = Session {
        id: format!("s{n}"),
        engine,
        annotation,
        overlays: BTreeMap::new(),
    };
    Ok(Json(json!({"id": session.id})))
}
