use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use flybench_core::bridge::{PROTOCOL_DOC, PROTOCOL_VERSION};
use flybench_core::campaign::{self, CampaignConfig, CampaignError, Progress, Summary};
use flybench_core::env::{env_metrics, EnvMetrics, TraversabilityConfig};
use flybench_core::geometry::{rasterize_occupancy, ObstacleMap, World};
use flybench_core::mapgen::{generate_map, generate_trial, MapSpec, TrialConstraints, TrialSpec};
use flybench_core::metrics::{contrast_factor, contrast_factor_raw, SuccessAtDistance};
use flybench_core::path::{shortest_flyable_path, PathResult};
use flybench_core::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Campaign configuration rejected.
    Config,
    /// Request body or parameters rejected.
    Invalid,
    NotFound,
    /// Results directory unreadable or inconsistent.
    Results,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub kind: ErrorKind,
    pub message: String,
}

impl ApiError {
    fn new(kind: ErrorKind, message: impl ToString) -> Self {
        Self { kind, message: message.to_string() }
    }
}

impl From<CampaignError> for ApiError {
    fn from(e: CampaignError) -> Self {
        let kind = match e {
            CampaignError::Config(_) => ErrorKind::Config,
            CampaignError::Map { .. } => ErrorKind::Invalid,
            CampaignError::Io { .. } | CampaignError::Document(_) => ErrorKind::Results,
        };
        Self::new(kind, e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.kind {
            ErrorKind::Config | ErrorKind::Invalid => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Results => StatusCode::UNPROCESSABLE_ENTITY,
        };
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub protocol_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMetricsRequest {
    pub map: ObstacleMap,
    pub r_poisson: f64,
    #[serde(default = "default_altitude")]
    pub altitude: f64,
    #[serde(default = "default_diameter")]
    pub d_drone: f64,
    /// Defaults to a fortieth of the map width and 16 directions.
    #[serde(default)]
    pub grid_spacing: Option<f64>,
    #[serde(default)]
    pub directions: Option<usize>,
}

fn default_altitude() -> f64 {
    1.5
}
fn default_diameter() -> f64 {
    0.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRequest {
    pub map: ObstacleMap,
    pub seed: u64,
    pub constraints: TrialConstraints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRequest {
    pub map: ObstacleMap,
    pub start: Vec2,
    pub goal: Vec2,
    /// Grid resolution; defaults to a third of the drone diameter.
    #[serde(default)]
    pub cell_size: Option<f64>,
    #[serde(default = "default_diameter")]
    pub d_drone: f64,
    #[serde(default = "default_altitude")]
    pub altitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastRequest {
    pub a: SuccessAtDistance,
    pub b: SuccessAtDistance,
    /// Half-count clamping of both success rates; without it a success rate
    /// of 0 or 1 is an error.
    #[serde(default = "yes")]
    pub clamp: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReply {
    pub cf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRequest {
    /// Campaign config, TOML text.
    pub config: String,
    /// Replaces the config's output directory.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignState {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStatus {
    pub id: u64,
    pub state: CampaignState,
    pub output_dir: PathBuf,
    /// Trials finished in this run, out of `total` still to run.
    pub done: usize,
    pub total: usize,
    /// Trials already on disk when the run started.
    pub skipped: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ApiError>,
    /// Algorithms whose fault fraction exceeded the threshold.
    #[serde(default)]
    pub over_fault_threshold: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRequest {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReply {
    pub checked: usize,
    pub mismatches: Vec<String>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportReply {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

struct Job {
    output_dir: PathBuf,
    progress: Progress,
    result: Mutex<Option<Result<campaign::RunOutcome, ApiError>>>,
}

#[derive(Default)]
struct AppState {
    next_id: AtomicU64,
    jobs: Mutex<HashMap<u64, Arc<Job>>>,
}

pub fn router() -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/protocol", get(protocol))
        .route("/maps/generate", post(maps_generate))
        .route("/maps/metrics", post(maps_metrics))
        .route("/trials/generate", post(trials_generate))
        .route("/path", post(path))
        .route("/metrics/contrast", post(contrast))
        .route("/campaigns", post(start_campaign))
        .route("/campaigns/{id}", get(campaign_status))
        .route("/results/metrics", post(results_metrics))
        .route("/results/report", post(results_report))
        .with_state(Arc::new(AppState::default()))
}

/// Runs blocking work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::new(ErrorKind::Results, format!("worker panicked: {e}")))?.map(Json)
}

async fn health() -> Json<Health> {
    Json(Health { status: "ok".into(), version: env!("CARGO_PKG_VERSION").into(), protocol_version: PROTOCOL_VERSION })
}

async fn protocol() -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], PROTOCOL_DOC)
}

async fn maps_generate(Json(spec): Json<MapSpec>) -> ApiResult<ObstacleMap> {
    blocking(move || generate_map(&spec).map_err(|e| ApiError::new(ErrorKind::Invalid, e))).await
}

async fn maps_metrics(Json(req): Json<MapMetricsRequest>) -> ApiResult<EnvMetrics> {
    blocking(move || {
        let world = World::new(req.map);
        let mut cfg = TraversabilityConfig::for_bounds(world.bounds(), req.altitude, req.d_drone);
        cfg.grid_spacing = req.grid_spacing.unwrap_or(cfg.grid_spacing);
        cfg.directions = req.directions.unwrap_or(cfg.directions);
        env_metrics(&world, &cfg, req.r_poisson).map_err(|e| ApiError::new(ErrorKind::Invalid, e))
    })
    .await
}

async fn trials_generate(Json(req): Json<TrialRequest>) -> ApiResult<TrialSpec> {
    blocking(move || generate_trial(&World::new(req.map), req.seed, &req.constraints).map_err(|e| ApiError::new(ErrorKind::Invalid, e))).await
}

async fn path(Json(req): Json<PathRequest>) -> ApiResult<PathResult> {
    blocking(move || {
        let cell = req.cell_size.unwrap_or(req.d_drone / 3.0);
        if !(cell > 0.0 && req.d_drone > 0.0) {
            return Err(ApiError::new(ErrorKind::Invalid, "cell_size and d_drone must be positive"));
        }
        let world = World::new(req.map);
        let grid = rasterize_occupancy(&world, cell, req.d_drone, req.altitude);
        shortest_flyable_path(&world, &grid, req.start, req.goal, req.d_drone, req.altitude).map_err(|e| ApiError::new(ErrorKind::Invalid, e))
    })
    .await
}

async fn contrast(Json(req): Json<ContrastRequest>) -> ApiResult<ContrastReply> {
    let cf = if req.clamp { contrast_factor(req.a, req.b) } else { contrast_factor_raw(req.a, req.b) };
    cf.map(|cf| Json(ContrastReply { cf })).map_err(|e| ApiError::new(ErrorKind::Invalid, e))
}

fn status(id: u64, job: &Job) -> CampaignStatus {
    let (done, total) = job.progress.snapshot();
    let skipped = job.progress.skipped.load(Ordering::Relaxed);
    let mut s = CampaignStatus {
        id,
        state: CampaignState::Running,
        output_dir: job.output_dir.clone(),
        done,
        total,
        skipped,
        error: None,
        over_fault_threshold: Vec::new(),
        summary: None,
    };
    match &*job.result.lock().unwrap() {
        None => {}
        Some(Ok(out)) => {
            s.state = CampaignState::Succeeded;
            s.over_fault_threshold = out.over_fault_threshold.clone();
            s.summary = Some(out.summary.clone());
        }
        Some(Err(e)) => {
            s.state = CampaignState::Failed;
            s.error = Some(e.clone());
        }
    }
    s
}

async fn start_campaign(State(state): State<Arc<AppState>>, Json(req): Json<CampaignRequest>) -> Result<(StatusCode, Json<CampaignStatus>), ApiError> {
    let mut cfg: CampaignConfig = CampaignConfig::from_toml(&req.config)?;
    if let Some(dir) = req.output_dir {
        cfg.output_dir = dir;
    }
    if cfg.output_dir.is_relative() {
        let cwd = std::env::current_dir().map_err(|e| ApiError::new(ErrorKind::Results, e))?;
        cfg.output_dir = cwd.join(&cfg.output_dir);
    }
    campaign::preflight(&cfg)?;

    let id = state.next_id.fetch_add(1, Ordering::Relaxed) + 1;
    let job = Arc::new(Job { output_dir: cfg.output_dir.clone(), progress: Progress::default(), result: Mutex::new(None) });
    state.jobs.lock().unwrap().insert(id, job.clone());
    tracing::info!(id, dir = %cfg.output_dir.display(), "campaign started");
    let worker = job.clone();
    tokio::task::spawn_blocking(move || {
        let out = campaign::run_campaign(&cfg, &worker.progress).map_err(ApiError::from);
        if let Err(e) = &out {
            tracing::warn!(id, error = %e.message, "campaign failed");
        }
        *worker.result.lock().unwrap() = Some(out);
    });
    Ok((StatusCode::ACCEPTED, Json(status(id, &job))))
}

async fn campaign_status(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<CampaignStatus> {
    let job = state.jobs.lock().unwrap().get(&id).cloned();
    match job {
        Some(job) => Ok(Json(status(id, &job))),
        None => Err(ApiError::new(ErrorKind::NotFound, format!("no campaign {id}"))),
    }
}

async fn results_metrics(Json(req): Json<ResultsRequest>) -> ApiResult<MetricsReply> {
    blocking(move || {
        let r = campaign::recompute_metrics(&req.dir)?;
        Ok(MetricsReply { checked: r.checked, mismatches: r.mismatches, summary: r.summary })
    })
    .await
}

async fn results_report(Json(req): Json<ResultsRequest>) -> ApiResult<ReportReply> {
    blocking(move || {
        let r = campaign::emit_report(&req.dir)?;
        Ok(ReportReply { dir: r.dir, files: r.files })
    })
    .await
}
