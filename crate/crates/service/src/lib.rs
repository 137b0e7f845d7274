//! HTTP planning service.
//!
//! Endpoints: `GET /district`, `POST /solve`, `POST /sweep`, `POST /compare`.
//! Bodies are JSON; successful payloads are byte-identical to what the
//! command line prints for the same parameters.

use std::future::IntoFuture;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::cors::{Any, CorsLayer};
use vaxplan_core::allocation::{solve_allocation, AllocationError, AllocationOutcome, BuildError, PlanningParams};
use vaxplan_core::district::{load_district, District, DistrictError};
use vaxplan_core::need::{compute_need, NeedMatrix};
use vaxplan_core::report::{district_summary, to_json};
use vaxplan_core::scenario::{compare_models, sweep};
use vaxplan_core::traveltime::{build_matrix, TravelTimeError};
use vaxplan_core::{SpeedModel, TravelTimeMatrix};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Parameters shared by `/solve`, `/sweep` and `/compare`, and by the
/// matching command-line subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    /// 1 is locality-bound, 2 cross-boundary.
    pub model: u8,
    pub total_vaccinators: u32,
    #[serde(default = "default_epsilon")]
    pub equity_deviation: f64,
    #[serde(default = "default_round_trip")]
    pub round_trip_factor: f64,
    #[serde(default = "default_children_per_day")]
    pub children_per_day: u32,
    #[serde(default = "default_working_days")]
    pub working_days: u32,
    /// Defaults to true for model 2 and false for model 1.
    #[serde(default)]
    pub exact_equity: Option<bool>,
    /// Path of a district file to use instead of the loaded one. Empty means the loaded one.
    #[serde(default)]
    pub district: Option<String>,
}

fn default_epsilon() -> f64 {
    PlanningParams::default().equity_deviation
}

fn default_round_trip() -> f64 {
    PlanningParams::default().round_trip_factor
}

fn default_children_per_day() -> u32 {
    PlanningParams::default().children_per_day
}

fn default_working_days() -> u32 {
    PlanningParams::default().working_days
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RequestError {
    #[error("model must be 1 or 2 (got {0})")]
    Model(u8),
    #[error(transparent)]
    Params(#[from] vaxplan_core::allocation::ParamsError),
}

impl SolveRequest {
    pub fn new(model: u8, total_vaccinators: u32) -> Self {
        SolveRequest {
            model,
            total_vaccinators,
            equity_deviation: default_epsilon(),
            round_trip_factor: default_round_trip(),
            children_per_day: default_children_per_day(),
            working_days: default_working_days(),
            exact_equity: None,
            district: None,
        }
    }

    pub fn params(&self) -> Result<PlanningParams, RequestError> {
        let cross_boundary = match self.model {
            1 => false,
            2 => true,
            other => return Err(RequestError::Model(other)),
        };
        let params = PlanningParams {
            children_per_day: self.children_per_day,
            working_days: self.working_days,
            total_vaccinators: self.total_vaccinators,
            equity_deviation: self.equity_deviation,
            round_trip_factor: self.round_trip_factor,
            cross_boundary,
            exact_equity: self.exact_equity.unwrap_or(cross_boundary),
        };
        params.validate()?;
        Ok(params)
    }

    fn district_override(&self) -> Option<&str> {
        self.district.as_deref().filter(|p| !p.trim().is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub epsilons: Vec<f64>,
    #[serde(flatten)]
    pub request: SolveRequest,
}

/// A district with its derived need and travel-time matrices.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub district: District,
    pub need: NeedMatrix,
    pub times: TravelTimeMatrix,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    District(#[from] DistrictError),
    #[error(transparent)]
    TravelTime(#[from] TravelTimeError),
}

impl Workspace {
    pub fn new(district: District, speeds: &SpeedModel) -> Result<Self, TravelTimeError> {
        let need = compute_need(&district);
        let times = build_matrix(&district, speeds)?;
        Ok(Workspace {
            district,
            need,
            times,
        })
    }

    pub fn load(path: impl AsRef<Path>, speeds: &SpeedModel) -> Result<Self, LoadError> {
        Ok(Self::new(load_district(path)?, speeds)?)
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub timeout: Duration,
    /// `None` disables cross-origin headers; `"*"` allows any origin.
    pub cors_origin: Option<String>,
    pub speeds: SpeedModel,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            timeout: DEFAULT_TIMEOUT,
            cors_origin: None,
            speeds: SpeedModel::default(),
        }
    }
}

/// Shared handler state. The workspace slot is filled once loading finishes.
#[derive(Debug, Clone)]
pub struct AppState {
    workspace: Arc<OnceLock<Arc<Workspace>>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState {
            workspace: Arc::new(OnceLock::new()),
            config: Arc::new(config),
        }
    }

    pub fn loaded(config: ServiceConfig, workspace: Workspace) -> Self {
        let state = Self::new(config);
        state.install(workspace);
        state
    }

    /// Makes `workspace` the served district. Later calls are ignored.
    pub fn install(&self, workspace: Workspace) {
        if self.workspace.set(Arc::new(workspace)).is_err() {
            warn!("district already loaded, ignoring a second load");
        }
    }

    pub fn is_ready(&self) -> bool {
        self.workspace.get().is_some()
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        body,
    )
        .into_response()
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
}

fn error_response(status: StatusCode, message: &str) -> Response {
    json_response(status, to_json(&ErrorBody { error: message }))
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        error_response(self.0, &self.1)
    }
}

impl From<RequestError> for ApiError {
    fn from(err: RequestError) -> Self {
        ApiError(StatusCode::BAD_REQUEST, err.to_string())
    }
}

impl From<AllocationError> for ApiError {
    fn from(err: AllocationError) -> Self {
        let status = match &err {
            AllocationError::InvalidGrid | AllocationError::Build(BuildError::Params(_)) => {
                StatusCode::BAD_REQUEST
            }
            AllocationError::Build(_) => StatusCode::UNPROCESSABLE_ENTITY,
            AllocationError::Solver(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, err.to_string())
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))
}

fn current(state: &AppState) -> Result<Arc<Workspace>, ApiError> {
    state.workspace.get().cloned().ok_or_else(|| {
        ApiError(
            StatusCode::SERVICE_UNAVAILABLE,
            "district is still loading".into(),
        )
    })
}

/// Resolves the district a request runs against, loading an override file if named.
fn resolve(state: &AppState, override_path: Option<&str>) -> Result<Arc<Workspace>, ApiError> {
    let loaded = current(state)?;
    match override_path {
        None => Ok(loaded),
        Some(path) => Workspace::load(PathBuf::from(path), &state.config.speeds)
            .map(Arc::new)
            .map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("district {path}: {e}"))),
    }
}

/// Runs `job` on the blocking pool under the configured timeout.
async fn run_blocking<F>(state: &AppState, job: F) -> Result<Response, ApiError>
where
    F: FnOnce() -> Result<Response, ApiError> + Send + 'static,
{
    let limit = state.config.timeout;
    match tokio::time::timeout(limit, tokio::task::spawn_blocking(job)).await {
        Ok(Ok(result)) => result,
        Ok(Err(join)) => Err(ApiError(
            StatusCode::INTERNAL_SERVER_ERROR,
            format!("solver task failed: {join}"),
        )),
        Err(_) => Err(ApiError(
            StatusCode::GATEWAY_TIMEOUT,
            format!("solve did not finish within {} s", limit.as_secs_f64()),
        )),
    }
}

#[derive(Debug, Deserialize)]
struct DistrictQuery {
    #[serde(default)]
    district: Option<String>,
}

async fn get_district(
    State(state): State<AppState>,
    Query(query): Query<DistrictQuery>,
) -> Result<Response, ApiError> {
    let path = query.district.filter(|p| !p.trim().is_empty());
    let workspace = resolve(&state, path.as_deref())?;
    let summary = district_summary(&workspace.district, &workspace.need, &workspace.times);
    Ok(json_response(StatusCode::OK, to_json(&summary)))
}

/// Status for a solve outcome: infeasibility is reported with 422.
pub fn outcome_status(outcome: &AllocationOutcome) -> StatusCode {
    match outcome {
        AllocationOutcome::Optimal(_) => StatusCode::OK,
        AllocationOutcome::Infeasible(_) => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

async fn post_solve(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: SolveRequest = parse_body(&body)?;
    let params = request.params()?;
    let workspace = resolve(&state, request.district_override())?;
    run_blocking(&state, move || {
        let ws = &*workspace;
        let outcome = solve_allocation(&ws.district, &ws.need, &ws.times, &params)?;
        Ok(json_response(outcome_status(&outcome), to_json(&outcome)))
    })
    .await
}

async fn post_sweep(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: SweepRequest = parse_body(&body)?;
    let params = request.request.params()?;
    let workspace = resolve(&state, request.request.district_override())?;
    run_blocking(&state, move || {
        let ws = &*workspace;
        let table = sweep(&ws.district, &ws.need, &ws.times, &params, &request.epsilons)?;
        Ok(json_response(StatusCode::OK, to_json(&table)))
    })
    .await
}

async fn post_compare(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: SolveRequest = parse_body(&body)?;
    let params = request.params()?;
    let workspace = resolve(&state, request.district_override())?;
    run_blocking(&state, move || {
        let ws = &*workspace;
        let comparison = compare_models(&ws.district, &ws.need, &ws.times, &params)?;
        Ok(json_response(StatusCode::OK, to_json(&comparison)))
    })
    .await
}

fn cors_layer(origin: &str) -> Option<CorsLayer> {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    if origin == "*" {
        return Some(layer.allow_origin(Any));
    }
    match HeaderValue::from_str(origin) {
        Ok(value) => Some(layer.allow_origin(value)),
        Err(_) => {
            warn!("ignoring unusable CORS origin {origin:?}");
            None
        }
    }
}

pub fn router(state: AppState) -> Router {
    let cors = state.config.cors_origin.as_deref().and_then(cors_layer);
    let router = Router::new()
        .route("/district", get(get_district))
        .route("/solve", post(post_solve))
        .route("/sweep", post(post_sweep))
        .route("/compare", post(post_compare))
        .with_state(state);
    match cors {
        Some(layer) => router.layer(layer),
        None => router,
    }
}

/// Serves on `listener`, loading `district` in the background. Requests that
/// need the district get 503 until it is ready. Returns an error if loading fails.
pub async fn serve(
    listener: tokio::net::TcpListener,
    config: ServiceConfig,
    district: PathBuf,
) -> Result<(), ServeError> {
    let speeds = config.speeds;
    let state = AppState::new(config);
    let app = router(state.clone());
    let loader = tokio::task::spawn_blocking(move || Workspace::load(&district, &speeds));
    if let Ok(addr) = listener.local_addr() {
        info!("listening on {addr}");
    }
    let server = axum::serve(listener, app).into_future();
    tokio::pin!(server);
    tokio::select! {
        result = &mut server => return result.map_err(ServeError::Io),
        loaded = loader => {
            let workspace = loaded.map_err(|e| ServeError::Load(e.to_string()))?
                .map_err(|e| ServeError::Load(e.to_string()))?;
            info!(
                "district ready: {} union councils, {} centres",
                workspace.district.union_councils().len(),
                workspace.district.centres().len()
            );
            state.install(workspace);
        }
    }
    server.await.map_err(ServeError::Io)
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("could not load district: {0}")]
    Load(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
