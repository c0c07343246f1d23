//! Read-only HTTP/JSON API over fitted team models.
//!
//! Every response is an envelope `{"api_version": 1, "data": ...}` or
//! `{"api_version": 1, "error": {"status": .., "message": ..}}`. Numbers
//! are rounded exactly like the command-line reports.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pitchmdp::analysis::{heatmap, AnalysisError, PreparedModel};
use pitchmdp::export::round_json;
use pitchmdp::grid::{GridSpec, RegionMask};
use pitchmdp::policy::PolicyError;
use pitchmdp::scenario::ScenarioError;
use pitchmdp::{Analysis, TeamModel, WhatIfRequest};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const API_VERSION: u32 = 1;
/// Optional `team_id → display name` file next to the models.
pub const TEAM_NAMES_FILE: &str = "team_names.json";

#[derive(Debug)]
pub struct TeamEntry {
    pub name: Option<String>,
    pub prepared: PreparedModel,
}

/// An immutable set of teams with their cached baselines.
#[derive(Debug, Default)]
pub struct Snapshot {
    pub teams: BTreeMap<String, TeamEntry>,
    pub masks: Vec<RegionMask>,
}

impl Snapshot {
    pub fn new(
        models: Vec<TeamModel>,
        names: &BTreeMap<String, String>,
        masks: Vec<RegionMask>,
    ) -> Result<Self, AnalysisError> {
        let mut teams = BTreeMap::new();
        for m in models {
            let name = names.get(&m.team_id).cloned();
            teams.insert(
                m.team_id.clone(),
                TeamEntry {
                    name,
                    prepared: PreparedModel::new(m)?,
                },
            );
        }
        Ok(Self { teams, masks })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Model { path: PathBuf, message: String },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Reads every `*.json` model in `dir` (except the team-name file).
pub fn load_models(dir: &Path) -> Result<(Vec<TeamModel>, BTreeMap<String, String>), LoadError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| LoadError::Io { path, source }
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut models = Vec::new();
    let mut names = BTreeMap::new();
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        if path.file_name().is_some_and(|n| n == TEAM_NAMES_FILE) {
            names = serde_json::from_str(&text).map_err(|e| LoadError::Model {
                path: path.clone(),
                message: e.to_string(),
            })?;
            continue;
        }
        models.push(TeamModel::from_json(&text).map_err(|e| LoadError::Model {
            path: path.clone(),
            message: e.to_string(),
        })?);
    }
    Ok((models, names))
}

/// Holds the current snapshot; a reload swaps it atomically.
#[derive(Debug, Default)]
pub struct ModelStore {
    current: RwLock<Arc<Snapshot>>,
}

impl ModelStore {
    pub fn new(snapshot: Snapshot) -> Self {
        Self {
            current: RwLock::new(Arc::new(snapshot)),
        }
    }

    pub fn load_dir(dir: &Path, masks: Vec<RegionMask>) -> Result<Self, LoadError> {
        let (models, names) = load_models(dir)?;
        Ok(Self::new(Snapshot::new(models, &names, masks)?))
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("store lock").clone()
    }

    pub fn replace(&self, snapshot: Snapshot) {
        *self.current.write().expect("store lock") = Arc::new(snapshot);
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn unknown_team(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown team {id:?}"))
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        let status = match &e {
            AnalysisError::UnknownAnalysis(_)
            | AnalysisError::Policy(PolicyError::BadFactor(_) | PolicyError::UnknownZone(_))
            | AnalysisError::Scenario(ScenarioError::UnknownZone(_) | ScenarioError::ZeroMoves) => {
                StatusCode::BAD_REQUEST
            }
            AnalysisError::MissingMask(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "api_version": API_VERSION,
            "error": {"status": self.status.as_u16(), "message": self.message},
        });
        (self.status, Json(body)).into_response()
    }
}

fn envelope<T: Serialize>(data: &T) -> Result<Json<Value>, ApiError> {
    let value =
        serde_json::to_value(data).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(json!({"api_version": API_VERSION, "data": round_json(value)})))
}

type AppState = Arc<ModelStore>;

#[derive(Debug, Serialize)]
struct TeamInfo<'a> {
    team_id: &'a str,
    name: Option<&'a str>,
    grid: GridSpec,
    possessions: u64,
    goals: u64,
    baseline_goals: f64,
}

async fn health(State(store): State<AppState>) -> Result<Json<Value>, ApiError> {
    envelope(&json!({"status": "ok", "teams": store.snapshot().teams.len()}))
}

async fn teams(State(store): State<AppState>) -> Result<Json<Value>, ApiError> {
    let snap = store.snapshot();
    let list: Vec<TeamInfo> = snap
        .teams
        .iter()
        .map(|(id, t)| TeamInfo {
            team_id: id,
            name: t.name.as_deref(),
            grid: t.prepared.model.grid,
            possessions: t.prepared.model.possession_count,
            goals: t.prepared.model.goal_count,
            baseline_goals: t.prepared.baseline.goals,
        })
        .collect();
    envelope(&list)
}

#[derive(Debug, Deserialize)]
struct HeatmapQuery {
    analysis: Option<String>,
    k: Option<usize>,
}

async fn team_heatmap(
    State(store): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<HeatmapQuery>,
) -> Result<Json<Value>, ApiError> {
    let snap = store.snapshot();
    if !snap.teams.contains_key(&id) {
        return Err(ApiError::unknown_team(&id));
    }
    let name = q.analysis.as_deref().unwrap_or("shoot_vs_move");
    let analysis = Analysis::parse(name, q.k)?;
    let h = run_blocking(move || {
        let team = &snap.teams[&id];
        heatmap(&team.prepared.model, analysis, &snap.masks)
    })
    .await?;
    envelope(&h)
}

async fn team_whatif(
    State(store): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let snap = store.snapshot();
    if !snap.teams.contains_key(&id) {
        return Err(ApiError::unknown_team(&id));
    }
    let req: WhatIfRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid what-if body: {e}")))?;
    let report = run_blocking(move || snap.teams[&id].prepared.whatif(&req)).await?;
    envelope(&report)
}

async fn run_blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, AnalysisError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such endpoint")
}

/// The API routes; `static_dir`, when given, is served for every other path.
pub fn router(store: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/teams", get(teams))
        .route("/teams/{id}/heatmap", get(team_heatmap))
        .route("/teams/{id}/whatif", post(team_whatif))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

pub async fn serve(addr: SocketAddr, app: Router) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await
}
