//! HTTP session service for interactive searches.
//!
//! A session holds the posterior over a dataset; the client is shown a query,
//! answers with the 1-based position of the closest point to what it has in
//! mind (or reports that the target is shown) and gets the next query.
//!
//! Routes:
//! - `POST /sessions` create, returns the session with point coordinates
//! - `GET /sessions/{id}` current state
//! - `POST /sessions/{id}/answer` `{"response": r}` or `{"found": true}`
//! - `DELETE /sessions/{id}`

pub mod error;
pub mod session;
pub mod store;

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use noisy_search::harness::DatasetSpec;

pub use error::ApiError;
pub use session::{AnswerRequest, CreateRequest, HistoryEntry, PosteriorSummary, SessionSummary, Status};
pub use store::{Store, DEFAULT_TTL};

type AppState = Arc<Store>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::BadRequest(e.body_text()))
}

/// Runs store work off the async executor; updates on large datasets are slow.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ApiError::Conflict(format!("request aborted: {e}"))))
}

async fn create(
    State(store): State<AppState>,
    payload: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionSummary>), ApiError> {
    let req = body(payload)?;
    let summary = blocking(move || store.create(req)).await?;
    log::info!("session {} created", summary.id);
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn show(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionSummary>, ApiError> {
    Ok(Json(blocking(move || store.summary(&id)).await?))
}

async fn answer(
    State(store): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<AnswerRequest>, JsonRejection>,
) -> Result<Json<SessionSummary>, ApiError> {
    let req = body(payload)?;
    Ok(Json(blocking(move || store.answer(&id, &req)).await?))
}

async fn remove(State(store): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    store.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show).delete(remove))
        .route("/sessions/{id}/answer", post(answer))
        .with_state(store)
}

/// Serves until `shutdown` resolves, evicting idle sessions once a minute.
pub async fn serve(
    addr: SocketAddr,
    default_dataset: Option<DatasetSpec>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let store = Arc::new(Store::new(default_dataset, DEFAULT_TTL));
    let sweeper = {
        let store = store.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(60));
            loop {
                tick.tick().await;
                let dropped = store.evict_expired(Instant::now());
                if dropped > 0 {
                    log::info!("evicted {dropped} idle sessions");
                }
            }
        })
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let result = axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await;
    sweeper.abort();
    result
}
