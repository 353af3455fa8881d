//! WebSocket endpoint for teleoperation clients and the real-time loop that
//! feeds it.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::{SinkExt, StreamExt};
use log::{debug, info, warn};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::broadcast;
use tokio_tungstenite::tungstenite::Message;
use wallsim_core::teleop::{ClientId, ErrorCode, ProtocolError};

use crate::runner::{ControlHub, RunError, RunSummary, Simulation, TelemetryLog};

/// Per-client telemetry backlog; slow clients skip the oldest frames.
pub const TELEMETRY_QUEUE: usize = 16;

/// Accepts clients until the listener fails. Ids start at 1; 0 is the script.
pub async fn serve(listener: TcpListener, hub: Arc<ControlHub>, telemetry: broadcast::Sender<String>) {
    let ids = AtomicU64::new(1);
    loop {
        match listener.accept().await {
            Ok((stream, peer)) => {
                let id = ids.fetch_add(1, Ordering::Relaxed);
                debug!("client {id} connected from {peer}");
                tokio::spawn(handle_client(stream, id, hub.clone(), telemetry.subscribe()));
            }
            Err(e) => warn!("accept failed: {e}"),
        }
    }
}

async fn handle_client(
    stream: TcpStream,
    id: ClientId,
    hub: Arc<ControlHub>,
    mut telemetry: broadcast::Receiver<String>,
) {
    let ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            debug!("client {id} handshake failed: {e}");
            return;
        }
    };
    let (mut sink, mut source) = ws.split();
    loop {
        tokio::select! {
            inbound = source.next() => {
                let reply = match inbound {
                    Some(Ok(Message::Text(text))) => hub.handle_frame(id, &text).err(),
                    Some(Ok(Message::Binary(_))) => {
                        Some(ProtocolError::new(ErrorCode::BadJson, "frames must be UTF-8 text"))
                    }
                    Some(Ok(Message::Close(_))) | None => break,
                    Some(Ok(_)) => None,
                    Some(Err(e)) => {
                        debug!("client {id} read error: {e}");
                        break;
                    }
                };
                if let Some(err) = reply {
                    if sink.send(Message::Text(err.to_frame())).await.is_err() {
                        break;
                    }
                }
            }
            frame = telemetry.recv() => match frame {
                Ok(line) => {
                    if sink.send(Message::Text(line)).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => debug!("client {id} skipped {n} frames"),
                Err(broadcast::error::RecvError::Closed) => break,
            },
        }
    }
    hub.disconnect(id);
    debug!("client {id} disconnected");
}

/// A running server bound to a local address.
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub telemetry: broadcast::Sender<String>,
    runtime: tokio::runtime::Runtime,
}

impl ServerHandle {
    /// Binds `addr` and starts accepting clients on a background runtime.
    pub fn start(addr: SocketAddr, hub: Arc<ControlHub>) -> std::io::Result<Self> {
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let listener = runtime.block_on(TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let (telemetry, _) = broadcast::channel(TELEMETRY_QUEUE);
        runtime.spawn(serve(listener, hub, telemetry.clone()));
        Ok(Self { addr, telemetry, runtime })
    }

    /// Sends a frame to every connected client. Never blocks.
    pub fn broadcast(&self, frame: String) {
        // no receivers is fine
        let _ = self.telemetry.send(frame);
    }

    pub fn shutdown(self) {
        self.runtime.shutdown_timeout(Duration::from_millis(200));
    }
}

/// Statistics from a real-time run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealtimeSummary {
    pub run: RunSummary,
    pub elapsed: Duration,
}

/// Runs the tick loop paced to wall-clock time, serving clients on `config.listen`.
/// Without a duration it runs until the process is stopped.
pub fn run_realtime(sim: &mut Simulation, on_ready: impl FnOnce(SocketAddr)) -> Result<RealtimeSummary, RunError> {
    let server = ServerHandle::start(sim.config().listen, sim.hub().clone()).map_err(RunError::Server)?;
    info!("listening on ws://{}", server.addr);
    on_ready(server.addr);
    let mut log = sim.config().log_path.as_deref().map(TelemetryLog::create).transpose()?;
    let period = Duration::from_secs_f64(sim.config().dt());
    let total = sim.config().total_ticks();
    let start = Instant::now();
    let mut frames = 0;
    let mut ticks = 0;
    while total.is_none_or(|t| ticks < t) {
        let rec = sim.tick();
        ticks += 1;
        if let Some(line) = rec.telemetry {
            frames += 1;
            if let Some(log) = log.as_mut() {
                log.append(&line)?;
            }
            server.broadcast(line);
        }
        let deadline = start + period * u32::try_from(ticks).unwrap_or(u32::MAX);
        if let Some(wait) = deadline.checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
    }
    let elapsed = start.elapsed();
    if let Some(log) = log {
        log.finish()?;
    }
    server.shutdown();
    Ok(RealtimeSummary { run: RunSummary { ticks, telemetry_frames: frames, collided: sim.state().collided }, elapsed })
}
