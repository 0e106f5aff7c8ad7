//! Local HTTP API. Request and response bodies are JSON envelopes whose
//! document fields carry `.mpx` / `.mps` / `.mpt` text verbatim. Every
//! response, errors included, has `schema_version`.
//!
//! | route | body | reply |
//! |---|---|---|
//! | `GET /api/templates` | | names and default dims |
//! | `GET /api/templates/{name}` | `?dims=RxC` | `encoding` |
//! | `POST /api/validate` | `encoding` | `valid`, `violations` |
//! | `POST /api/simulate` | `encoding`, `field_mt`?, `steps`?, `max_iterations`?, `query`? | `displacement_mm`, `poses`, `obj`, `trace_csv` |
//! | `POST /api/reprogram` | `encoding`, `session` | `encoding`, `notices` |
//! | `POST /api/imagemap` | `encoding`, `z_mm`, `resolution` | `values`, `csv`, `min`, `max` |
//! | `POST /api/invert` | `targets`, `mask_encoding`?, `seed`?, `starts`?, `max_iterations`? | `encoding`, `trace_csv`, `loss`, `converged` |
//! | `GET/PUT /api/session/{id}` | `encoding`, `history`?, `revision`? | stored session |

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query as UrlQuery, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use magpixel::mechanics::SolverOptions;
use serde_json::{json, Value};

use crate::ops::{self, ErrorKind, OpError};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StoredSession {
    pub encoding: String,
    #[serde(default)]
    pub history: Vec<String>,
    #[serde(default)]
    pub revision: u64,
}

/// Named design sessions. One lock guards the map, so writes to a session
/// are serialized.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, StoredSession>>>,
}

struct ApiError {
    status: StatusCode,
    error: OpError,
}

impl From<OpError> for ApiError {
    fn from(error: OpError) -> Self {
        let status = match error.kind {
            ErrorKind::Validation => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::NoConvergence => StatusCode::CONFLICT,
            ErrorKind::Io => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self { status, error }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "schema_version": SCHEMA_VERSION,
            "error": { "kind": self.error.kind.as_str(), "message": self.error.message },
        });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn reply(mut v: Value) -> ApiResult {
    v["schema_version"] = json!(SCHEMA_VERSION);
    Ok(Json(v))
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError { status: StatusCode::BAD_REQUEST, error: OpError::validation(format!("request body: {e}")) })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, OpError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::from(OpError::io(format!("worker failed: {e}"))))?.map_err(ApiError::from)
}

pub fn router() -> Router {
    Router::new()
        .route("/api/templates", get(templates))
        .route("/api/templates/{name}", get(template_doc))
        .route("/api/validate", post(validate))
        .route("/api/simulate", post(simulate))
        .route("/api/reprogram", post(reprogram))
        .route("/api/imagemap", post(imagemap))
        .route("/api/invert", post(invert))
        .route("/api/session/{id}", get(get_session).put(put_session))
        .fallback(|| async { ApiError { status: StatusCode::NOT_FOUND, error: OpError::validation("no such endpoint") } })
        .with_state(AppState::default())
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr) -> Result<(), OpError> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => OpError::io(format!("PortInUse: {addr} is already bound")),
        _ => OpError::io(format!("cannot bind {addr}: {e}")),
    })?;
    eprintln!("magpixel: serving on http://{addr}");
    axum::serve(listener, router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| OpError::io(e.to_string()))
}

async fn templates() -> ApiResult {
    let list: Vec<Value> = ops::template_names()
        .iter()
        .map(|name| {
            let (r, c) = name.parse::<magpixel::encode::TemplateName>().expect("listed names parse").default_dims();
            json!({ "name": name, "dims": [r, c] })
        })
        .collect();
    reply(json!({ "templates": list }))
}

async fn template_doc(Path(name): Path<String>, UrlQuery(q): UrlQuery<BTreeMap<String, String>>) -> ApiResult {
    let dims = q.get("dims").map(|d| ops::parse_dims(d)).transpose().map_err(|e| ApiError::from(OpError::validation(e)))?;
    reply(json!({ "encoding": ops::template_text(&name, dims)? }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateRequest {
    encoding: String,
}

async fn validate(bytes: Bytes) -> ApiResult {
    let req: ValidateRequest = body(&bytes)?;
    let violations = ops::validate_text(&req.encoding)?;
    let list: Vec<Value> = violations
        .iter()
        .map(|v| json!({ "cell": v.cell.map(|(r, c)| [r, c]), "rule": format!("{:?}", v.rule), "message": v.to_string() }))
        .collect();
    reply(json!({ "valid": list.is_empty(), "violations": list }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateRequest {
    encoding: String,
    field_mt: Option<[f64; 3]>,
    #[serde(default = "default_steps")]
    steps: usize,
    query: Option<String>,
    max_iterations: Option<usize>,
    gravity_density: Option<f64>,
}

fn default_steps() -> usize {
    20
}

async fn simulate(bytes: Bytes) -> ApiResult {
    let req: SimulateRequest = body(&bytes)?;
    let mut options = SolverOptions { steps: req.steps, ..SolverOptions::default() };
    if let Some(n) = req.max_iterations {
        options.max_iterations = n;
    }
    let sim = blocking(move || ops::simulate_text(&req.encoding, req.field_mt.map(Into::into), req.gravity_density, &options, req.query.as_deref())).await?;
    let poses: Vec<Value> = sim
        .plates
        .iter()
        .zip(&sim.poses)
        .map(|(id, p)| {
            let r = p.rotation;
            json!({
                "plate": id.to_string(),
                "rotation": [[r[(0, 0)], r[(0, 1)], r[(0, 2)]], [r[(1, 0)], r[(1, 1)], r[(1, 2)]], [r[(2, 0)], r[(2, 1)], r[(2, 2)]]],
                "translation_mm": [p.translation.x, p.translation.y, p.translation.z],
            })
        })
        .collect();
    reply(json!({
        "query": sim.query.to_string(),
        "displacement_mm": sim.displacement,
        "poses": poses,
        "obj": sim.obj,
        "trace_csv": sim.trace_csv,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReprogramRequest {
    encoding: String,
    session: String,
}

async fn reprogram(bytes: Bytes) -> ApiResult {
    let req: ReprogramRequest = body(&bytes)?;
    let out = ops::reprogram_text(&req.encoding, &req.session)?;
    let notices: Vec<Value> = out.notices.iter().map(|(step, n)| json!({ "step": step, "kind": "NoMelt", "message": n.to_string() })).collect();
    reply(json!({ "encoding": out.mpx, "notices": notices }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImagemapRequest {
    encoding: String,
    z_mm: f64,
    resolution: (usize, usize),
}

async fn imagemap(bytes: Bytes) -> ApiResult {
    let req: ImagemapRequest = body(&bytes)?;
    let map = blocking(move || ops::imagemap_text(&req.encoding, req.z_mm, req.resolution)).await?;
    let (min, max) = map.min_max();
    reply(json!({ "rows": map.resolution.0, "cols": map.resolution.1, "z_mm": map.z, "values_mt": map.values, "min": min, "max": max, "csv": map.to_csv() }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InvertRequest {
    targets: String,
    mask_encoding: Option<String>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_starts")]
    starts: usize,
    #[serde(default = "default_iterations")]
    max_iterations: usize,
}

fn default_starts() -> usize {
    4
}

fn default_iterations() -> usize {
    100
}

async fn invert(bytes: Bytes) -> ApiResult {
    let req: InvertRequest = body(&bytes)?;
    let out = blocking(move || {
        let mask = req.mask_encoding;
        ops::invert_text(&req.targets, move |_| mask.ok_or_else(|| "send the mask document as `mask_encoding`".to_string()), req.seed, req.starts, req.max_iterations)
    })
    .await?;
    reply(json!({
        "encoding": out.mpx,
        "trace_csv": out.trace_csv,
        "loss": out.loss,
        "converged": out.converged,
        "iterations": out.iterations,
    }))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let sessions = state.sessions.lock().expect("session lock");
    match sessions.get(&id) {
        Some(s) => reply(json!({ "id": id, "session": s })),
        None => Err(ApiError { status: StatusCode::NOT_FOUND, error: OpError::validation(format!("no session {id:?}")) }),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PutSession {
    encoding: String,
    #[serde(default)]
    history: Vec<String>,
    /// When given, the write only succeeds if the stored revision matches.
    revision: Option<u64>,
}

async fn put_session(State(state): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: PutSession = body(&bytes)?;
    // stored sessions may hold invalid vectors mid-edit, but must parse
    ops::validate_text(&req.encoding)?;
    let mut sessions = state.sessions.lock().expect("session lock");
    let current = sessions.get(&id).map_or(0, |s| s.revision);
    if let Some(expected) = req.revision {
        if expected != current {
            return Err(ApiError {
                status: StatusCode::CONFLICT,
                error: OpError::validation(format!("session {id:?} is at revision {current}, not {expected}")),
            });
        }
    }
    let stored = StoredSession { encoding: req.encoding, history: req.history, revision: current + 1 };
    sessions.insert(id.clone(), stored.clone());
    reply(json!({ "id": id, "session": stored }))
}
