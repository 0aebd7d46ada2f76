//! Review service for borderline alignments.
//!
//! Serves the verify queue of an alignment run over a small JSON API and
//! records reviewer decisions in an append-only log next to the run output.
//!
//! ```text
//! GET  /api/items?status=pending&page=N   worst WER first, 50 per page
//! GET  /api/items/{id}
//! GET  /api/audio/{id}                    audio/wav
//! POST /api/decisions                     {"item_id", "action", "manual_text"?}
//! POST /api/export                        writes final.manifest.jsonl
//! ```

mod http;
mod queue;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use tokio::sync::oneshot;

pub use http::router;
pub use queue::{
    ExportSummary, ItemStatus, ItemView, Page, ReviewQueue, ServiceError, StatusFilter, AUTO_MANIFEST,
    DECISION_LOG, DEFAULT_PAGE_SIZE, FINAL_MANIFEST, VERIFY_FILE,
};

/// A running server on a background thread.
pub struct Server {
    addr: SocketAddr,
    queue: Arc<Mutex<ReviewQueue>>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl Server {
    /// Binds `addr` (port 0 picks a free port) and starts serving.
    pub fn start(queue: ReviewQueue, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<Server> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        let listener = runtime.block_on(tokio::net::TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let queue = Arc::new(Mutex::new(queue));
        let app = router(queue.clone(), ui_dir);
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
            })
        });
        Ok(Server {
            addr,
            queue,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until Ctrl-C (or SIGTERM on Unix).
    pub fn wait_for_signal(&self) -> std::io::Result<()> {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
        rt.block_on(async {
            #[cfg(unix)]
            {
                let mut term = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate())?;
                tokio::select! {
                    r = tokio::signal::ctrl_c() => r,
                    _ = term.recv() => Ok(()),
                }
            }
            #[cfg(not(unix))]
            tokio::signal::ctrl_c().await
        })
    }

    /// Stops accepting requests, waits for in-flight ones, and returns the
    /// queue state.
    pub fn stop(mut self) -> std::io::Result<Arc<Mutex<ReviewQueue>>> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            t.join().expect("server thread panicked")?;
        }
        Ok(self.queue.clone())
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
