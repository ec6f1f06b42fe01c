//! WebSocket analysis server.
//!
//! Each connection owns one session, driven by a dedicated worker thread
//! that handles requests in arrival order. The socket reader never waits
//! on the worker: it parses frames, cancels superseded jobs, and queues
//! work, while progress and replies flow back through a single writer.

use std::collections::HashMap;
use std::panic::AssertUnwindSafe;
use std::path::PathBuf;
use std::sync::{mpsc as std_mpsc, Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tower_http::services::ServeDir;

use tdr_core::protocol::{DirectoryResolver, MessageKind, ProtocolMessage, SessionHandler};
use tdr_core::JobControl;

/// Smallest progress step forwarded to the client, besides the final 1.0.
const PROGRESS_STEP: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Directory searched for `<name>.json` descriptors.
    pub dataset_root: PathBuf,
    /// Static files for the viewer, served at `/`.
    pub assets: Option<PathBuf>,
}

pub fn router(config: ServerConfig) -> Router {
    let assets = config.assets.clone();
    let app = Router::new()
        .route("/ws", get(upgrade))
        .with_state(Arc::new(config));
    match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

pub async fn serve(listener: TcpListener, config: ServerConfig) -> std::io::Result<()> {
    axum::serve(listener, router(config)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(config): State<Arc<ServerConfig>>) -> Response {
    let root = config.dataset_root.clone();
    ws.on_upgrade(move |socket| connection(socket, root))
}

fn progress_job(request_id: &str, out: mpsc::UnboundedSender<ProtocolMessage>) -> JobControl {
    let id = request_id.to_string();
    let sent = Mutex::new(-1.0f64);
    JobControl::with_progress(move |f| {
        let mut sent = sent.lock().expect("progress lock");
        if f >= *sent + PROGRESS_STEP || (f == 1.0 && *sent < 1.0) {
            *sent = f;
            let _ = out.send(ProtocolMessage::progress(&id, f));
        }
    })
}

fn worker(
    root: PathBuf,
    jobs: std_mpsc::Receiver<(ProtocolMessage, JobControl)>,
    out: mpsc::UnboundedSender<ProtocolMessage>,
) {
    let mut handler = SessionHandler::new(DirectoryResolver::new(root));
    for (msg, job) in jobs {
        let reply = if job.is_cancelled() {
            ProtocolMessage::error(&msg.request_id, "cancelled", "superseded by a newer request")
        } else {
            std::panic::catch_unwind(AssertUnwindSafe(|| handler.handle(&msg, &job))).unwrap_or_else(|_| {
                tracing::error!(request_id = %msg.request_id, "handler panicked");
                ProtocolMessage::error(&msg.request_id, "internal", "internal error")
            })
        };
        if out.send(reply).is_err() {
            break;
        }
    }
}

async fn connection(socket: WebSocket, root: PathBuf) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<ProtocolMessage>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            if sink.send(Message::Text(msg.to_text().into())).await.is_err() {
                break;
            }
        }
    });

    let (job_tx, job_rx) = std_mpsc::channel();
    let worker_out = out_tx.clone();
    let worker = std::thread::spawn(move || worker(root, job_rx, worker_out));

    let mut running: HashMap<MessageKind, JobControl> = HashMap::new();
    while let Some(Ok(frame)) = stream.next().await {
        let text = match frame {
            Message::Text(t) => t,
            Message::Binary(_) => {
                let _ = out_tx.send(ProtocolMessage::error("", "malformed", "binary frames are not supported"));
                continue;
            }
            Message::Close(_) => break,
            _ => continue,
        };
        let msg = match ProtocolMessage::parse(&text) {
            Ok(m) => m,
            Err(reply) => {
                let _ = out_tx.send(reply);
                continue;
            }
        };
        let job = progress_job(&msg.request_id, out_tx.clone());
        if msg.kind.is_supersedable() {
            if let Some(previous) = running.insert(msg.kind, job.clone()) {
                previous.cancel();
            }
        }
        if job_tx.send((msg, job)).is_err() {
            break;
        }
    }

    for job in running.values() {
        job.cancel();
    }
    drop(job_tx);
    drop(out_tx);
    let _ = tokio::task::spawn_blocking(move || worker.join()).await;
    let _ = writer.await;
}
