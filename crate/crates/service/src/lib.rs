//! Read-only HTTP+JSON lookup service over a [`komohe::Store`] snapshot.
//!
//! Endpoints:
//!
//! - `GET /vocabularies`
//! - `GET /terms/{vocab}/{term}/mappings?relation=&target=&min_rating=`
//! - `GET /expand?q=&relations=&vocabs=&max=`
//! - `GET /translate?term=&from_lang=&to_lang=`

mod api;
mod config;

use std::fs::File;
use std::io::{self, BufReader};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::http::StatusCode;
use komohe::{RelationType, Store};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;
use tower_http::timeout::TimeoutLayer;

pub use api::{router, ApiError, AppState};
pub use config::{ServiceConfig, DEFAULT_MAX_EXPANSION_TERMS, DEFAULT_PORT, DEFAULT_READ_TIMEOUT};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("loading {path}: {source}")]
    Load { path: String, source: komohe::Error },
    #[error("binding {addr}: {source}")]
    Bind { addr: SocketAddr, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Builds the store from the configured files: term lists first, then
/// crosswalk files. Rejected TSV lines are logged and skipped; unreadable or
/// malformed files are fatal.
pub fn load_store(config: &ServiceConfig) -> Result<Store, ServiceError> {
    let mut store = Store::new();
    let load_err = |path: &Path, source: komohe::Error| ServiceError::Load {
        path: path.display().to_string(),
        source,
    };
    for path in &config.term_lists {
        let file = File::open(path).map_err(|e| load_err(path, e.into()))?;
        let (vocab, added) = store
            .registry_mut()
            .import_term_list(BufReader::new(file))
            .map_err(|e| load_err(path, e))?;
        tracing::info!(path = %path.display(), vocab, added, "term list loaded");
    }
    for path in &config.crosswalks {
        let file = File::open(path).map_err(|e| load_err(path, e.into()))?;
        let report = store
            .import_tsv(BufReader::new(file))
            .map_err(|e| load_err(path, e))?;
        for err in &report.errors {
            tracing::warn!(path = %path.display(), line = err.line, reason = %err.reason, "line skipped");
        }
        tracing::info!(
            path = %path.display(),
            mappings = report.mappings_added,
            crosswalks = report.crosswalks_created,
            "crosswalk file loaded"
        );
    }
    Ok(store)
}

fn log_stats(store: &Store) {
    let stats = store.stats();
    let mut relation_totals = [0usize; RelationType::ALL.len()];
    for s in stats.values() {
        for (total, relation) in relation_totals.iter_mut().zip(RelationType::ALL) {
            *total += s.relation(relation);
        }
    }
    let by_relation: Vec<String> = RelationType::ALL
        .iter()
        .zip(relation_totals)
        .map(|(r, n)| format!("{}:{n}", r.symbol()))
        .collect();
    tracing::info!(
        vocabularies = store.registry().vocabularies().count(),
        crosswalks = stats.len(),
        mappings = store.len(),
        relations = %by_relation.join(" "),
        "store ready"
    );
}

/// A running service. Dropping the handle leaves the server running until
/// the runtime shuts down; use [`ServiceHandle::shutdown`] to stop it.
pub struct ServiceHandle {
    local_addr: SocketAddr,
    shutdown: oneshot::Sender<()>,
    task: JoinHandle<io::Result<()>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(self) -> io::Result<()> {
        let _ = self.shutdown.send(());
        self.task.await.map_err(io::Error::other)?
    }

    /// Serves until ctrl-c (or SIGTERM on unix), then shuts down gracefully.
    pub async fn run_until_signal(self) -> io::Result<()> {
        shutdown_signal().await;
        tracing::info!("shutting down");
        self.shutdown().await
    }
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

/// Serves `store` on an already bound listener. Must be called from within
/// a tokio runtime.
pub fn spawn(
    listener: TcpListener,
    store: Arc<Store>,
    config: &ServiceConfig,
) -> io::Result<ServiceHandle> {
    let local_addr = listener.local_addr()?;
    let state = AppState {
        store,
        max_expansion_terms: config.max_expansion_terms,
    };
    let app = router(state).layer(TimeoutLayer::with_status_code(
        StatusCode::REQUEST_TIMEOUT,
        config.read_timeout,
    ));
    let (tx, rx) = oneshot::channel();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(ServiceHandle {
        local_addr,
        shutdown: tx,
        task,
    })
}

/// Validates the config, loads the data files, binds and starts serving.
pub async fn serve(config: &ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    config.validate()?;
    let store = load_store(config)?;
    log_stats(&store);
    let addr = SocketAddr::new(config.bind, config.port);
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    let handle = spawn(listener, Arc::new(store), config)?;
    tracing::info!(addr = %handle.local_addr(), "listening");
    Ok(handle)
}
