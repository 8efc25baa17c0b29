//! HTTP/JSON service: grounding with cached traces, belief downloads, area
//! planning, and a simulated robot that advances one area per poll.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use beliefnav::grounder::rank_areas;
use beliefnav::map::{GridGeometry, MapDocument};
use beliefnav::{
    build_adjacency, ground, AreaGraph, AreaMap, BeliefTrace, GroundError, ModelParams, ParseError,
    PlanError, Search, UpdateType,
};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ServerConfig;
use crate::AppError;

/// Least-recently-used map from trace id to trace.
pub struct TraceCache {
    capacity: usize,
    entries: IndexMap<String, Arc<BeliefTrace>>,
}

impl TraceCache {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), entries: IndexMap::new() }
    }

    pub fn get(&mut self, id: &str) -> Option<Arc<BeliefTrace>> {
        let (k, v) = self.entries.shift_remove_entry(id)?;
        self.entries.insert(k, v.clone());
        Some(v)
    }

    pub fn insert(&mut self, id: String, trace: Arc<BeliefTrace>) {
        self.entries.shift_remove(&id);
        while self.entries.len() >= self.capacity {
            self.entries.shift_remove_index(0);
        }
        self.entries.insert(id, trace);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotState {
    pub area: String,
    pub remaining: Vec<String>,
    pub moving: bool,
    pub ticks: u64,
}

struct Robot {
    area: String,
    pending: VecDeque<String>,
    ticks: u64,
}

impl Robot {
    fn state(&self) -> RobotState {
        RobotState {
            area: self.area.clone(),
            remaining: self.pending.iter().cloned().collect(),
            moving: !self.pending.is_empty(),
            ticks: self.ticks,
        }
    }
}

pub struct AppState {
    map: Arc<AreaMap>,
    params: Arc<ModelParams>,
    graph: AreaGraph,
    search: Search,
    ranked_areas: usize,
    start_area: String,
    traces: Mutex<TraceCache>,
    robot: Mutex<Robot>,
}

impl AppState {
    pub fn new(map: AreaMap, params: ModelParams, config: &ServerConfig) -> Result<Self, AppError> {
        let tolerance = config.gap_tolerance.unwrap_or(map.grid().resolution);
        let graph = build_adjacency(&map, tolerance);
        let start_area = match &config.start_area {
            Some(id) if map.area_index(id).is_some() => id.clone(),
            Some(id) => return Err(AppError::Input(format!("start area {id:?} is not on the map"))),
            None => {
                let mut ids: Vec<&String> = graph.nodes().iter().collect();
                ids.sort_by(|a, b| beliefnav::map::compare_ids(a, b));
                ids.first().map(|s| s.to_string()).ok_or_else(|| AppError::Input("map has no areas".into()))?
            }
        };
        Ok(Self {
            map: Arc::new(map),
            params: Arc::new(params),
            graph,
            search: config.search,
            ranked_areas: config.ranked_areas.max(1),
            robot: Mutex::new(Robot { area: start_area.clone(), pending: VecDeque::new(), ticks: 0 }),
            start_area,
            traces: Mutex::new(TraceCache::new(config.trace_cache)),
        })
    }

    pub fn cached_traces(&self) -> usize {
        self.traces.lock().expect("trace cache lock").len()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/map", get(get_map))
        .route("/ground", post(post_ground))
        .route("/belief/{trace_id}/{step}", get(get_belief))
        .route("/plan", post(post_plan))
        .route("/robot/move", post(post_move))
        .route("/robot", get(get_robot))
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        Self { status, body: json!({ "error": message.into(), "kind": kind }) }
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.body[key] = value;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn plan_error(e: PlanError) -> ApiError {
    match &e {
        PlanError::UnknownArea(id) => {
            ApiError::new(StatusCode::NOT_FOUND, "unknown_area", e.to_string()).with("area", json!(id))
        }
        PlanError::Unreachable { .. } => ApiError::new(StatusCode::CONFLICT, "unreachable", e.to_string()),
    }
}

fn parse_error(e: &ParseError) -> ApiError {
    let err = ApiError::new(StatusCode::BAD_REQUEST, "unparseable", e.to_string());
    let offending = match e {
        ParseError::Unsupported { word, .. } => Some(word.clone()),
        ParseError::DanglingPreposition { preposition, .. } => Some(preposition.clone()),
        ParseError::ModifierTooLong { modifier, .. } => Some(modifier.clone()),
        _ => None,
    };
    match offending {
        Some(text) => err.with("offending", json!(text)),
        None => err,
    }
}

#[derive(Serialize)]
struct AreaLayout {
    id: String,
    category: String,
    subcategory: Option<String>,
    name: Option<String>,
    centroid: [f64; 2],
    cells: usize,
}

#[derive(Serialize)]
struct MapResponse {
    document: MapDocument,
    grid: GridGeometry,
    areas: Vec<AreaLayout>,
    start_area: String,
}

async fn get_map(State(state): State<Arc<AppState>>) -> Json<MapResponse> {
    let map = &state.map;
    let areas = map
        .areas()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let c = a.centroid();
            AreaLayout {
                id: a.id.clone(),
                category: a.category.clone(),
                subcategory: a.subcategory.clone(),
                name: a.name.clone(),
                centroid: [c.x, c.y],
                cells: map.area_cells(k).len(),
            }
        })
        .collect();
    Json(MapResponse {
        document: map.to_document(),
        grid: map.grid(),
        areas,
        start_area: state.start_area.clone(),
    })
}

#[derive(Debug, Clone, Deserialize)]
pub struct GroundRequest {
    pub instruction: String,
    #[serde(default)]
    pub robot_area: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedWeight {
    pub id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub modifier: String,
    pub update: UpdateType,
    pub entropy: f64,
    pub top_area: Option<RankedWeight>,
    pub attention_fallback: bool,
    pub heatmap: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub attention_fallback_steps: Vec<usize>,
    pub plan_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundResponse {
    pub trace_id: String,
    pub instruction: String,
    pub steps: Vec<StepRecord>,
    pub ranked: Vec<RankedWeight>,
    pub goal: String,
    pub plan_start: String,
    pub plan: Option<Vec<String>>,
    pub diagnostics: Diagnostics,
}

/// Traces depend only on the instruction, so the id is a digest of it.
pub fn trace_id(instruction: &str) -> String {
    Sha256::digest(instruction.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

async fn post_ground(
    State(state): State<Arc<AppState>>,
    Json(req): Json<GroundRequest>,
) -> Result<Json<GroundResponse>, ApiError> {
    let plan_start = match &req.robot_area {
        Some(id) if state.map.area_index(id).is_none() => {
            return Err(ApiError::new(StatusCode::NOT_FOUND, "unknown_area", format!("unknown area {id:?}"))
                .with("area", json!(id)));
        }
        Some(id) => id.clone(),
        None => state.robot.lock().expect("robot lock").area.clone(),
    };
    let id = trace_id(&req.instruction);
    let cached = state.traces.lock().expect("trace cache lock").get(&id);
    let trace = match cached {
        Some(t) => t,
        None => {
            let (map, params, text) = (state.map.clone(), state.params.clone(), req.instruction.clone());
            let result = tokio::task::spawn_blocking(move || ground(&text, &map, &params))
                .await
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
            let trace = Arc::new(result.map_err(|e| match &e {
                GroundError::Parse(p) => parse_error(p),
                GroundError::Step { step, modifier, source } => {
                    ApiError::new(StatusCode::CONFLICT, "degenerate", e.to_string())
                        .with("step", json!(step))
                        .with("offending", json!(modifier))
                        .with("diagnostics", json!({ "cause": source.to_string() }))
                }
            })?);
            state.traces.lock().expect("trace cache lock").insert(id.clone(), trace.clone());
            trace
        }
    };
    let steps: Vec<StepRecord> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(k, s)| StepRecord {
            index: k,
            modifier: s.modifier.clone(),
            update: s.update,
            entropy: s.posterior.entropy(),
            top_area: rank_areas(&state.map, &s.posterior)
                .into_iter()
                .next()
                .map(|r| RankedWeight { id: r.id, weight: r.weight }),
            attention_fallback: s.attention_fallback,
            heatmap: format!("/belief/{id}/{k}"),
        })
        .collect();
    let ranked: Vec<RankedWeight> = trace
        .ranked
        .iter()
        .take(state.ranked_areas)
        .map(|r| RankedWeight { id: r.id.clone(), weight: r.weight })
        .collect();
    let goal = ranked.first().map(|r| r.id.clone()).ok_or_else(|| {
        ApiError::new(StatusCode::CONFLICT, "degenerate", "final belief holds no area mass")
    })?;
    let (plan, plan_err) = match state.graph.plan(&plan_start, &goal, state.search) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Json(GroundResponse {
        trace_id: id,
        instruction: req.instruction,
        diagnostics: Diagnostics {
            attention_fallback_steps: steps.iter().filter(|s| s.attention_fallback).map(|s| s.index).collect(),
            plan_error: plan_err,
        },
        steps,
        ranked,
        goal,
        plan_start,
        plan,
    }))
}

#[derive(Deserialize)]
struct BeliefQuery {
    format: Option<String>,
}

async fn get_belief(
    State(state): State<Arc<AppState>>,
    Path((trace_id, step)): Path<(String, usize)>,
    Query(q): Query<BeliefQuery>,
) -> Result<Response, ApiError> {
    let trace = state
        .traces
        .lock()
        .expect("trace cache lock")
        .get(&trace_id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_trace", format!("unknown trace {trace_id:?}")))?;
    let s = trace.steps.get(step).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_step",
            format!("trace has {} steps, asked for {step}", trace.steps.len()),
        )
    })?;
    match q.format.as_deref().unwrap_or("json") {
        "json" => Ok(Json(json!({
            "trace_id": trace_id,
            "step": step,
            "modifier": s.modifier,
            "update": s.update,
            "grid": s.posterior.to_dump(),
        }))
        .into_response()),
        "pgm" => Ok(([(header::CONTENT_TYPE, "image/x-portable-graymap")], s.posterior.to_pgm()).into_response()),
        other => Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_format", format!("unknown format {other:?}"))),
    }
}

#[derive(Deserialize)]
struct PlanRequest {
    start: String,
    goal: String,
    search: Option<Search>,
}

async fn post_plan(
    State(state): State<Arc<AppState>>,
    Json(req): Json<PlanRequest>,
) -> Result<Json<Value>, ApiError> {
    let search = req.search.unwrap_or(state.search);
    let plan = state.graph.plan(&req.start, &req.goal, search).map_err(plan_error)?;
    Ok(Json(json!({ "start": req.start, "goal": req.goal, "search": search, "plan": plan })))
}

#[derive(Deserialize)]
struct MoveRequest {
    plan: Vec<String>,
}

async fn post_move(
    State(state): State<Arc<AppState>>,
    Json(req): Json<MoveRequest>,
) -> Result<Json<RobotState>, ApiError> {
    if let Some(id) = req.plan.iter().find(|id| state.map.area_index(id).is_none()) {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "unknown_area", format!("unknown area {id:?}"))
            .with("area", json!(id)));
    }
    let (Some(first), Some(last)) = (req.plan.first(), req.plan.last()) else {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_plan", "plan is empty"));
    };
    if !state.graph.validate_plan(&req.plan, first, last) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_plan",
            "consecutive plan areas must be adjacent and distinct",
        ));
    }
    let mut robot = state.robot.lock().expect("robot lock");
    if *first != robot.area {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "wrong_start",
            format!("robot is in {:?}, plan starts at {first:?}", robot.area),
        ));
    }
    robot.pending = req.plan[1..].iter().cloned().collect();
    Ok(Json(robot.state()))
}

/// Each poll is one tick: a moving robot enters the next planned area.
async fn get_robot(State(state): State<Arc<AppState>>) -> Json<RobotState> {
    let mut robot = state.robot.lock().expect("robot lock");
    if let Some(next) = robot.pending.pop_front() {
        robot.area = next;
        robot.ticks += 1;
    }
    Json(robot.state())
}

pub async fn serve(state: AppState, host: &str, port: u16) -> Result<(), AppError> {
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .map_err(|e| AppError::Input(format!("bind {host}:{port}: {e}")))?;
    tracing::info!("listening on {}", listener.local_addr().map_err(|e| AppError::Input(e.to_string()))?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| AppError::Input(format!("server: {e}")))
}
