//! HTTP transport for the scoring service.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use qpop::service::{Bundle, QuestionInput};
use qpop::Error;

pub const DEFAULT_MAX_SUGGESTIONS: usize = 5;
pub const DEFAULT_KEYWORDS: usize = 10;

/// Shared handle to the current bundle. Handlers clone the inner `Arc` once per
/// request, so a reload never changes the bundle under a running request.
#[derive(Clone, Default)]
pub struct AppState {
    bundle: Arc<RwLock<Option<Arc<Bundle>>>>,
    dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(bundle: Option<Bundle>) -> Self {
        AppState {
            bundle: Arc::new(RwLock::new(bundle.map(Arc::new))),
            dir: None,
        }
    }

    /// State backed by a bundle directory; a missing bundle leaves the service up
    /// but answering 503 until [`AppState::reload`] succeeds.
    pub fn from_dir(dir: impl Into<PathBuf>) -> (Self, Option<Error>) {
        let dir = dir.into();
        let (bundle, err) = match Bundle::load(&dir) {
            Ok(b) => (Some(b), None),
            Err(e) => (None, Some(e)),
        };
        let mut state = AppState::new(bundle);
        state.dir = Some(dir);
        (state, err)
    }

    pub fn current(&self) -> Option<Arc<Bundle>> {
        self.bundle.read().expect("bundle lock poisoned").clone()
    }

    pub fn swap(&self, bundle: Bundle) {
        *self.bundle.write().expect("bundle lock poisoned") = Some(Arc::new(bundle));
    }

    /// Reloads from the bundle directory. The old bundle stays in place on failure.
    pub fn reload(&self) -> qpop::Result<()> {
        let dir = self
            .dir
            .as_ref()
            .ok_or_else(|| Error::Unavailable("no bundle directory configured".into()))?;
        self.swap(Bundle::load(dir)?);
        Ok(())
    }

    fn bundle(&self) -> Result<Arc<Bundle>, ApiError> {
        self.current()
            .ok_or_else(|| ApiError(Error::Unavailable("no model bundle loaded".into())))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

pub struct ApiError(pub Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, field) = match &self.0 {
            Error::Validation { field, .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, Some(field.clone()))
            }
            Error::Unavailable(_) => (StatusCode::SERVICE_UNAVAILABLE, None),
            Error::InvalidInput(_) | Error::MissingFeature(_) => (StatusCode::BAD_REQUEST, None),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, None),
        };
        let body = ErrorBody {
            error: self.0.to_string(),
            field,
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuggestRequest {
    #[serde(flatten)]
    pub question: QuestionInput,
    #[serde(default)]
    pub max_n: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhatIfRequest {
    pub original: QuestionInput,
    pub edited: QuestionInput,
}

#[derive(Debug, Deserialize)]
pub struct TopicsQuery {
    pub k: Option<usize>,
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn score(
    State(s): State<AppState>,
    Json(q): Json<QuestionInput>,
) -> ApiResult<qpop::service::ScoreResponse> {
    Ok(Json(s.bundle()?.score(&q)?))
}

async fn suggest(
    State(s): State<AppState>,
    Json(r): Json<SuggestRequest>,
) -> ApiResult<qpop::service::SuggestResponse> {
    Ok(Json(s.bundle()?.suggest(
        &r.question,
        r.max_n.unwrap_or(DEFAULT_MAX_SUGGESTIONS),
    )?))
}

async fn whatif(
    State(s): State<AppState>,
    Json(r): Json<WhatIfRequest>,
) -> ApiResult<qpop::service::WhatIfResponse> {
    Ok(Json(s.bundle()?.whatif(&r.original, &r.edited)?))
}

async fn uplift(
    State(s): State<AppState>,
    Json(q): Json<QuestionInput>,
) -> ApiResult<qpop::service::UpliftResponse> {
    Ok(Json(s.bundle()?.uplift(&q)?))
}

async fn topics(
    State(s): State<AppState>,
    Query(q): Query<TopicsQuery>,
) -> ApiResult<qpop::service::TopicsResponse> {
    Ok(Json(
        s.bundle()?.topic_list(q.k.unwrap_or(DEFAULT_KEYWORDS)),
    ))
}

async fn health(State(s): State<AppState>) -> ApiResult<qpop::service::HealthResponse> {
    Ok(Json(s.bundle()?.health()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/score", post(score))
        .route("/v1/suggest", post(suggest))
        .route("/v1/whatif", post(whatif))
        .route("/v1/uplift", post(uplift))
        .route("/v1/topics", get(topics))
        .route("/v1/health", get(health))
        .with_state(state)
}

/// Serves until interrupted. On Unix, SIGHUP reloads the bundle directory.
pub async fn serve(state: AppState, port: u16) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    #[cfg(unix)]
    {
        let s = state.clone();
        tokio::spawn(async move {
            use tokio::signal::unix::{signal, SignalKind};
            let Ok(mut hup) = signal(SignalKind::hangup()) else {
                return;
            };
            while hup.recv().await.is_some() {
                match s.reload() {
                    Ok(()) => eprintln!("bundle reloaded"),
                    Err(e) => eprintln!("reload failed, keeping current bundle: {e}"),
                }
            }
        });
    }
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
