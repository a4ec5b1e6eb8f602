//! HTTP API over the latest concept-tree snapshot.
//!
//! Readers load the served snapshot once per request from an `ArcSwapOption`,
//! so a concurrent refresh never mixes two snapshots in one response. At most
//! one refresh builds at a time; others get `409 busy`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use arc_swap::ArcSwapOption;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use conbrowse_core::ingest::{ingest, SourceConfig};
use conbrowse_core::snapshot::{load_latest, persist_snapshot, snapshot_build, BuildOptions, Snapshot, Stats};
use conbrowse_core::tree::{articles_for_node, TreeNode};
use serde::Serialize;
use tokio::net::TcpListener;
use tokio::sync::{oneshot, Mutex};
use tokio::task::JoinHandle;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] conbrowse_core::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub snapshot_dir: PathBuf,
    pub addr: SocketAddr,
    /// Sources for `POST /v1/refresh`; refresh is unavailable without them.
    pub sources: Option<Vec<SourceConfig>>,
    pub build: BuildOptions,
}

impl ServiceConfig {
    pub fn new(snapshot_dir: impl Into<PathBuf>, port: u16) -> Self {
        ServiceConfig {
            snapshot_dir: snapshot_dir.into(),
            addr: SocketAddr::from(([127, 0, 0, 1], port)),
            sources: None,
            build: BuildOptions::default(),
        }
    }
}

pub struct AppState {
    current: ArcSwapOption<Snapshot>,
    building: Arc<Mutex<()>>,
    config: ServiceConfig,
}

impl AppState {
    /// Loads the latest snapshot from the configured directory, if any.
    pub fn load(config: ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        let current = load_latest(&config.snapshot_dir)?.map(Arc::new);
        Ok(Arc::new(AppState {
            current: ArcSwapOption::new(current),
            building: Arc::new(Mutex::new(())),
            config,
        }))
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.current.load_full()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/tree", get(tree))
        .route("/v1/nodes/{id}/articles", get(node_articles))
        .route("/v1/refresh", post(refresh))
        .route("/v1/health", get(health))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

/// A bound, running server.
pub struct ServiceHandle {
    addr: SocketAddr,
    state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    /// Runs until the server stops on its own.
    pub async fn wait(mut self) -> Result<(), ServiceError> {
        self.shutdown.take();
        let task = &mut self.task;
        Ok(task.await.map_err(std::io::Error::other)??)
    }

    pub async fn shutdown(mut self) -> Result<(), ServiceError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let task = &mut self.task;
        Ok(task.await.map_err(std::io::Error::other)??)
    }
}

/// Loads the latest snapshot (if present), binds, and starts serving.
pub async fn serve(config: ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    let addr = config.addr;
    let state = AppState::load(config)?;
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(state.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                // A dropped sender means "run forever".
                if rx.await.is_err() {
                    std::future::pending::<()>().await;
                }
            })
            .await
    });
    Ok(ServiceHandle {
        addr,
        state,
        shutdown: Some(tx),
        task,
    })
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    detail: String,
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, detail: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error,
                detail: detail.into(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Debug, Serialize)]
struct TreeBody<'a> {
    snapshot_id: Option<&'a str>,
    created_at: Option<DateTime<Utc>>,
    stats: Option<Stats>,
    arity: usize,
    root: Option<&'a str>,
    nodes: &'a [TreeNode],
}

async fn tree(State(state): State<Arc<AppState>>) -> Response {
    let current = state.snapshot();
    let body = match current.as_deref() {
        Some(s) => TreeBody {
            snapshot_id: Some(&s.id),
            created_at: Some(s.created_at),
            stats: Some(s.stats),
            arity: s.tree.arity,
            root: s.tree.root.as_deref(),
            nodes: &s.tree.nodes,
        },
        None => TreeBody {
            snapshot_id: None,
            created_at: None,
            stats: None,
            arity: state.config.build.arity,
            root: None,
            nodes: &[],
        },
    };
    Json(body).into_response()
}

#[derive(Debug, Serialize)]
struct ArticleBody<'a> {
    title: &'a str,
    description: &'a str,
    url: &'a str,
    source: &'a str,
}

async fn node_articles(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(snapshot) = state.snapshot() else {
        return ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("node {id}: no snapshot yet")).into_response();
    };
    let ids = match articles_for_node(&snapshot.tree, &id) {
        Ok(ids) => ids,
        Err(e) => return ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string()).into_response(),
    };
    let mut body = Vec::with_capacity(ids.len());
    for article_id in &ids {
        match snapshot.article(article_id) {
            Some(a) => body.push(ArticleBody {
                title: &a.title,
                description: &a.description,
                url: &a.url,
                source: &a.source,
            }),
            None => {
                return ApiError::new(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "internal",
                    format!("article {article_id} missing from snapshot {}", snapshot.id),
                )
                .into_response()
            }
        }
    }
    Json(body).into_response()
}

#[derive(Debug, Serialize)]
struct RefreshBody {
    snapshot_id: String,
    stats: Stats,
}

async fn refresh(State(state): State<Arc<AppState>>) -> Response {
    let Some(sources) = state.config.sources.clone() else {
        return ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "not_configured",
            "refresh needs a source configuration",
        )
        .into_response();
    };
    let Ok(guard) = state.building.clone().try_lock_owned() else {
        return ApiError::new(StatusCode::CONFLICT, "busy", "a refresh is already running").into_response();
    };
    // The guard and the swap live in the blocking task, so a client that
    // disconnects mid-build neither frees the lock early nor loses the result.
    let worker = state.clone();
    let built = tokio::task::spawn_blocking(move || {
        let _guard = guard;
        let ingested = ingest(&sources)?;
        let snapshot = snapshot_build(ingested.articles, &worker.config.build)?;
        persist_snapshot(&snapshot, &worker.config.snapshot_dir)?;
        let body = RefreshBody {
            snapshot_id: snapshot.id.clone(),
            stats: snapshot.stats,
        };
        worker.current.store(Some(Arc::new(snapshot)));
        Ok::<_, conbrowse_core::Error>(body)
    })
    .await;
    match built {
        Ok(Ok(body)) => Json(body).into_response(),
        Ok(Err(e)) => {
            let status = match e {
                conbrowse_core::Error::Storage { .. } | conbrowse_core::Error::Internal(_) => {
                    StatusCode::INTERNAL_SERVER_ERROR
                }
                _ => StatusCode::BAD_GATEWAY,
            };
            ApiError::new(status, "refresh_failed", e.to_string()).into_response()
        }
        Err(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()).into_response(),
    }
}

#[derive(Debug, Serialize)]
struct HealthBody {
    status: &'static str,
    snapshot_id: Option<String>,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<HealthBody> {
    Json(HealthBody {
        status: "ok",
        snapshot_id: state.snapshot().map(|s| s.id.clone()),
    })
}
