//! JSON-over-HTTP front end for the session store.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use speechedit::pipeline::EditScript;
use speechedit::prosody::ProsodyConstraints;

use crate::session::{ApiError, Diagnostic, Session, SessionStore, Upload};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Busy(_) => StatusCode::CONFLICT,
            ApiError::Invalid(_) | ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Pipeline(e) if e.is_validation() => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Pipeline(_) | ApiError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            log::error!("{self}");
        }
        let body = match &self {
            ApiError::Invalid(d) => json!({ "error": self.to_string(), "diagnostics": d }),
            _ => json!({ "error": self.to_string() }),
        };
        (status, Json(body)).into_response()
    }
}

type Store = Arc<SessionStore>;

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::Unprocessable(format!("request body: {e}")))
}

/// Runs `f` on the locked session off the async runtime.
async fn with_session<T, F>(store: &Store, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> Result<T, ApiError> + Send + 'static,
{
    let mut guard = store.acquire(id)?;
    tokio::task::spawn_blocking(move || f(guard.get()?))
        .await
        .map_err(|e| ApiError::Storage(format!("worker: {e}")))?
}

fn json_value<T: serde::Serialize>(v: &T) -> Result<Value, ApiError> {
    serde_json::to_value(v).map_err(|e| ApiError::Storage(e.to_string()))
}

#[derive(Deserialize)]
struct UploadBody {
    id: String,
    wav_base64: String,
    /// The alignment document, inline or as a JSON string.
    alignment: Value,
}

#[derive(Deserialize)]
struct CreateBody {
    recordings: Vec<UploadBody>,
    seed: Option<u64>,
}

async fn create_session(State(store): State<Store>, body: Bytes) -> Result<Response, ApiError> {
    let body: CreateBody = parse(&body)?;
    let mut diagnostics = Vec::new();
    let mut uploads = Vec::new();
    for u in body.recordings {
        let wav = match BASE64.decode(u.wav_base64.as_bytes()) {
            Ok(wav) => wav,
            Err(e) => {
                diagnostics.push(Diagnostic {
                    file: format!("{}.wav", u.id),
                    message: format!("base64: {e}"),
                });
                continue;
            }
        };
        let alignment = match u.alignment {
            Value::String(s) => s,
            other => other.to_string(),
        };
        uploads.push(Upload { id: u.id, wav, alignment });
    }
    if !diagnostics.is_empty() {
        return Err(ApiError::Invalid(diagnostics));
    }
    let id = tokio::task::spawn_blocking(move || store.create(&uploads, body.seed))
        .await
        .map_err(|e| ApiError::Storage(format!("worker: {e}")))??;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))).into_response())
}

async fn transcript(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    with_session(&store, &id, |s| {
        let edited = s.state().result.as_ref().map(|r| &r.transcript);
        Ok(Json(json!({ "recordings": s.transcripts(), "edited": edited })))
    })
    .await
}

#[derive(Deserialize)]
struct SeedQuery {
    seed: Option<u64>,
}

async fn submit_edit(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<SeedQuery>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    with_session(&store, &id, move |s| {
        let script: EditScript = parse(&body)?;
        Ok(Json(json_value(s.submit_edit(script, q.seed)?)?))
    })
    .await
}

#[derive(Deserialize)]
struct CandidateQuery {
    n: Option<usize>,
    seed: Option<u64>,
}

async fn candidates(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<CandidateQuery>,
) -> Result<Json<Value>, ApiError> {
    with_session(&store, &id, move |s| {
        let list = s.candidates(q.n, q.seed)?;
        let seed = s.state().candidates.map(|c| c.seed);
        let list: Vec<Value> = list
            .iter()
            .map(|c| json!({ "k": c.k, "targets": c.targets, "preview_wav_base64": BASE64.encode(&c.preview) }))
            .collect();
        Ok(Json(json!({ "seed": seed, "candidates": list })))
    })
    .await
}

async fn select(State(store): State<Store>, Path((id, k)): Path<(String, usize)>) -> Result<Json<Value>, ApiError> {
    with_session(&store, &id, move |s| Ok(Json(json_value(s.select_candidate(k)?)?))).await
}

async fn overrides(State(store): State<Store>, Path(id): Path<String>, body: Bytes) -> Result<Json<Value>, ApiError> {
    with_session(&store, &id, move |s| {
        let pins: ProsodyConstraints = parse(&body)?;
        Ok(Json(json_value(s.submit_overrides(pins)?)?))
    })
    .await
}

async fn render(State(store): State<Store>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let wav = with_session(&store, &id, |s| s.render()).await?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], wav).into_response())
}

#[derive(Deserialize)]
struct ProsodyQuery {
    recording: Option<String>,
}

async fn prosody(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<ProsodyQuery>,
) -> Result<Json<Value>, ApiError> {
    with_session(&store, &id, move |s| Ok(Json(json_value(&s.prosody(q.recording.as_deref())?)?))).await
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/edits", post(submit_edit))
        .route("/sessions/{id}/candidates", post(candidates))
        .route("/sessions/{id}/candidates/{k}/select", post(select))
        .route("/sessions/{id}/overrides", post(overrides))
        .route("/sessions/{id}/render", get(render))
        .route("/sessions/{id}/prosody", get(prosody))
        .with_state(store)
}

/// Serves until ctrl-c.
pub async fn serve(store: Arc<SessionStore>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
