//! HTTP/JSON service over `spamlab-core`.

use std::future::Future;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use tokio::net::TcpListener;

pub mod api;
pub mod error;
pub mod openapi;
pub mod store;

pub use api::{router, router_with_ui, AppState};
pub use error::ApiError;
pub use store::{Snapshot, Store};

const SNAPSHOT_FILE: &str = "spamlab-store.json";

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    /// Directory holding the store snapshot, loaded at startup and written
    /// on shutdown.
    pub data_dir: Option<PathBuf>,
    /// Static files served for paths outside the API.
    pub ui_dir: Option<PathBuf>,
}

pub fn load_store(data_dir: &Path) -> io::Result<Store> {
    let path = data_dir.join(SNAPSHOT_FILE);
    if !path.exists() {
        return Ok(Store::new());
    }
    let text = std::fs::read_to_string(&path)?;
    let snapshot: Snapshot = serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    Store::restore(snapshot).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

pub fn save_store(store: &Store, data_dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(data_dir)?;
    let text = serde_json::to_string_pretty(&store.snapshot()).map_err(io::Error::other)?;
    let tmp = data_dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    std::fs::write(&tmp, text)?;
    std::fs::rename(tmp, data_dir.join(SNAPSHOT_FILE))
}

/// Serves until `shutdown` resolves, then saves the snapshot if a data
/// directory is configured.
pub async fn serve_until(
    listener: TcpListener,
    config: &ServeConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    let store = match &config.data_dir {
        Some(dir) => load_store(dir)?,
        None => Store::new(),
    };
    let state = AppState::new(store);
    let app = router_with_ui(state.clone(), config.ui_dir.clone());
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    if let Some(dir) = &config.data_dir {
        save_store(&state.read(), dir)?;
    }
    Ok(())
}

/// Binds `config.addr` and serves until Ctrl-C.
pub async fn serve(config: ServeConfig) -> io::Result<()> {
    let listener = TcpListener::bind(config.addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    serve_until(listener, &config, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
