//! Network front of the control centre: vehicle TCP listener plus the HTTP
//! and WebSocket API for the operator console.

use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc as std_mpsc, Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bytes::Bytes;
use futures::{SinkExt, StreamExt};
use serde_json::json;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio_util::codec::{Framed, LengthDelimitedCodec};
use tracing::{debug, info, warn};

use dcage_protocol::framing::MAX_FRAME_LEN;
use dcage_protocol::{decode, encode, AckOutcome, Command, DecodeError, EventLogEntry, WireMessage};

use crate::core::{CccConfig, CccCore, Dispatch, Effects, VehicleRecord, REASON_UNKNOWN_VEHICLE};
use crate::logfile::EventLogWriter;

pub const DEFAULT_TCP_PORT: u16 = 7700;
pub const DEFAULT_HTTP_PORT: u16 = 7780;

const STREAM_BUFFER: usize = 1024;
const VEHICLE_OUTBOX: usize = 256;

pub fn codec() -> LengthDelimitedCodec {
    LengthDelimitedCodec::builder()
        .length_field_length(4)
        .big_endian()
        .max_frame_length(MAX_FRAME_LEN)
        .new_codec()
}

pub fn wall_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

enum Clock {
    Wall,
    /// Replay: time advances with the replayed entries.
    Virtual(AtomicU64),
}

/// State shared by every connection and request handler.
pub struct Hub {
    core: Mutex<CccCore>,
    conns: Mutex<HashMap<String, mpsc::Sender<WireMessage>>>,
    waiters: Mutex<HashMap<(String, u64), oneshot::Sender<AckOutcome>>>,
    stream: broadcast::Sender<String>,
    log: Mutex<Option<std_mpsc::Sender<EventLogEntry>>>,
    clock: Clock,
    ack_timeout: Duration,
}

impl Hub {
    fn new(cfg: CccConfig, log: Option<std_mpsc::Sender<EventLogEntry>>, clock: Clock) -> Arc<Self> {
        Arc::new(Self {
            core: Mutex::new(CccCore::new(cfg)),
            conns: Mutex::new(HashMap::new()),
            waiters: Mutex::new(HashMap::new()),
            stream: broadcast::channel(STREAM_BUFFER).0,
            log: Mutex::new(log),
            clock,
            ack_timeout: Duration::from_millis(cfg.ack_timeout_ms),
        })
    }

    pub fn now(&self) -> u64 {
        match &self.clock {
            Clock::Wall => wall_ms(),
            Clock::Virtual(t) => t.load(Ordering::Relaxed),
        }
    }

    pub fn fleet(&self) -> Vec<VehicleRecord> {
        let now = self.now();
        self.core.lock().expect("core lock").fleet(now)
    }

    /// Must be called with the core lock held so log order matches global_seq.
    fn apply(&self, fx: Effects) {
        for e in fx.log {
            if let Some(log) = self.log.lock().expect("log lock").as_ref() {
                let _ = log.send(e.clone());
            }
            if let Ok(s) = serde_json::to_string(&e) {
                let _ = self.stream.send(s);
            }
        }
        if !fx.to_vehicle.is_empty() {
            let conns = self.conns.lock().expect("conns lock");
            for m in fx.to_vehicle {
                match conns.get(&m.vehicle_id) {
                    // A full or closed outbox loses the message; the command times out.
                    Some(tx) => {
                        let _ = tx.try_send(m);
                    }
                    None => debug!(vehicle = %m.vehicle_id, "no connection for outgoing message"),
                }
            }
        }
        if !fx.resolved.is_empty() {
            let mut waiters = self.waiters.lock().expect("waiters lock");
            for r in fx.resolved {
                if let Some(tx) = waiters.remove(&(r.vehicle_id, r.ref_seq)) {
                    let _ = tx.send(r.outcome);
                }
            }
        }
    }

    fn ingest(&self, msg: WireMessage) {
        let mut core = self.core.lock().expect("core lock");
        let fx = core.ingest(msg, self.now());
        self.apply(fx);
    }

    fn poll(&self) {
        let mut core = self.core.lock().expect("core lock");
        let fx = core.poll(self.now());
        self.apply(fx);
    }

    /// Feeds a recorded entry: vehicle messages update the registry and the
    /// original entry goes out on the stream unchanged.
    pub fn replay_entry(&self, entry: &EventLogEntry) {
        if let Clock::Virtual(t) = &self.clock {
            t.store(entry.wall_time, Ordering::Relaxed);
        }
        if entry.direction == dcage_protocol::Direction::FromVehicle {
            let mut core = self.core.lock().expect("core lock");
            let _ = core.ingest(entry.message.clone(), entry.wall_time);
        }
        if let Ok(s) = serde_json::to_string(entry) {
            let _ = self.stream.send(s);
        }
    }

    pub async fn command(&self, vehicle_id: &str, command: Command) -> (Option<u64>, AckOutcome) {
        let rx = {
            let mut core = self.core.lock().expect("core lock");
            let (d, fx) = core.dispatch(vehicle_id, command, self.now());
            let seq = match d {
                Dispatch::Rejected { reason } => return (None, AckOutcome::rejected(reason)),
                Dispatch::Sent { seq } => seq,
            };
            let (tx, rx) = oneshot::channel();
            self.waiters.lock().expect("waiters lock").insert((vehicle_id.to_string(), seq), tx);
            self.apply(fx);
            (seq, rx)
        };
        let (seq, rx) = rx;
        // The poll task resolves timeouts; the extra margin only guards a stalled poller.
        let outcome = match tokio::time::timeout(self.ack_timeout + Duration::from_secs(1), rx).await {
            Ok(Ok(o)) => o,
            _ => AckOutcome::Timeout,
        };
        (Some(seq), outcome)
    }
}

pub fn router(hub: Arc<Hub>) -> Router {
    Router::new()
        .route("/fleet", get(fleet))
        .route("/vehicle/{id}", get(vehicle))
        .route("/vehicle/{id}/command", post(command))
        .route("/stream", get(stream))
        .with_state(hub)
}

async fn fleet(State(hub): State<Arc<Hub>>) -> Response {
    let now = hub.now();
    let list = hub.core.lock().expect("core lock").fleet(now);
    Json(list).into_response()
}

async fn vehicle(State(hub): State<Arc<Hub>>, Path(id): Path<String>) -> Response {
    let now = hub.now();
    let detail = hub.core.lock().expect("core lock").vehicle_detail(&id, now);
    match detail {
        Some(d) => Json(d).into_response(),
        None => (StatusCode::NOT_FOUND, Json(json!({"error": "not found", "vehicle_id": id}))).into_response(),
    }
}

async fn command(State(hub): State<Arc<Hub>>, Path(id): Path<String>, Json(cmd): Json<Command>) -> Response {
    let (ref_seq, outcome) = hub.command(&id, cmd).await;
    let status = match &outcome {
        AckOutcome::Rejected { reason } if reason == REASON_UNKNOWN_VEHICLE => StatusCode::NOT_FOUND,
        _ => StatusCode::OK,
    };
    let mut body = serde_json::to_value(&outcome).unwrap_or_default();
    body["ref_seq"] = json!(ref_seq);
    (status, Json(body)).into_response()
}

async fn stream(State(hub): State<Arc<Hub>>, ws: WebSocketUpgrade) -> Response {
    let rx = hub.stream.subscribe();
    ws.on_upgrade(move |socket| pump_stream(socket, rx))
}

async fn pump_stream(mut socket: WebSocket, mut rx: broadcast::Receiver<String>) {
    loop {
        tokio::select! {
            item = rx.recv() => match item {
                Ok(text) => {
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => warn!(skipped = n, "stream subscriber lagging"),
                Err(broadcast::error::RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

async fn vehicle_connection(hub: Arc<Hub>, stream: TcpStream, peer: SocketAddr) {
    let _ = stream.set_nodelay(true);
    let (mut sink, mut frames) = Framed::new(stream, codec()).split();
    let (tx, mut rx) = mpsc::channel::<WireMessage>(VEHICLE_OUTBOX);
    let writer = tokio::spawn(async move {
        while let Some(m) = rx.recv().await {
            if sink.send(Bytes::from(encode(&m))).await.is_err() {
                break;
            }
        }
    });
    let mut vehicle_id: Option<String> = None;
    while let Some(frame) = frames.next().await {
        let bytes = match frame {
            Ok(b) => b,
            Err(e) => {
                warn!(%peer, error = %e, "dropping vehicle connection");
                break;
            }
        };
        match decode(&bytes) {
            Ok(msg) => {
                if vehicle_id.as_deref() != Some(msg.vehicle_id.as_str()) {
                    info!(%peer, vehicle = %msg.vehicle_id, "vehicle attached");
                    hub.conns.lock().expect("conns lock").insert(msg.vehicle_id.clone(), tx.clone());
                    vehicle_id = Some(msg.vehicle_id.clone());
                }
                hub.ingest(msg);
            }
            Err(e) => {
                let (id, ref_seq) = match &e {
                    DecodeError::UnknownType { vehicle_id, seq, .. } | DecodeError::BadPayload { vehicle_id, seq, .. } => {
                        (Some(vehicle_id.clone()), Some(*seq))
                    }
                    DecodeError::Malformed(_) => (vehicle_id.clone(), None),
                };
                warn!(%peer, error = %e, "undecodable frame");
                let mut core = hub.core.lock().expect("core lock");
                let fx = match &id {
                    Some(id) => core.protocol_error(id, &e.to_string(), ref_seq, hub.now()),
                    None => Effects::default(),
                };
                if fx.to_vehicle.is_empty() {
                    // Sender not registered: answer on this connection without logging.
                    let reply = WireMessage::new(
                        id.unwrap_or_default(),
                        0,
                        hub.now(),
                        dcage_protocol::Body::ProtocolError(dcage_protocol::ProtocolErrorReply {
                            reason: e.to_string(),
                            ref_seq,
                        }),
                    );
                    let _ = tx.try_send(reply);
                }
                hub.apply(fx);
            }
        }
    }
    if let Some(id) = vehicle_id {
        info!(%peer, vehicle = %id, "vehicle detached");
        let ours = {
            let mut conns = hub.conns.lock().expect("conns lock");
            let ours = conns.get(&id).is_some_and(|c| c.same_channel(&tx));
            if ours {
                conns.remove(&id);
            }
            ours
        };
        if ours {
            hub.core.lock().expect("core lock").disconnect(&id);
        }
    }
    drop(tx);
    let _ = writer.await;
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub tcp_addr: SocketAddr,
    pub http_addr: SocketAddr,
    pub log_path: PathBuf,
    pub ccc: CccConfig,
}

pub struct Running {
    pub tcp_addr: SocketAddr,
    pub http_addr: SocketAddr,
    pub log_path: PathBuf,
    pub hub: Arc<Hub>,
    shutdown: Option<oneshot::Sender<()>>,
    log_thread: Option<std::thread::JoinHandle<()>>,
    tasks: Vec<tokio::task::JoinHandle<()>>,
}

impl Running {
    /// Stops accepting, flushes the log and waits for the writer.
    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        for t in self.tasks.drain(..) {
            t.abort();
            let _ = t.await;
        }
        // Dropping the only sender ends the log thread after it drains.
        self.hub.log.lock().expect("log lock").take();
        if let Some(h) = self.log_thread.take() {
            let _ = tokio::task::spawn_blocking(move || h.join()).await;
        }
    }
}

fn spawn_log_writer(mut writer: EventLogWriter) -> (std_mpsc::Sender<EventLogEntry>, std::thread::JoinHandle<()>) {
    let (tx, rx) = std_mpsc::channel::<EventLogEntry>();
    let handle = std::thread::Builder::new()
        .name("event-log".into())
        .spawn(move || {
            while let Ok(e) = rx.recv() {
                if let Err(err) = writer.append(&e) {
                    warn!(error = %err, "event log append failed");
                }
                while let Ok(e) = rx.try_recv() {
                    let _ = writer.append(&e);
                }
                let _ = writer.flush();
            }
            let _ = writer.flush();
        })
        .expect("spawn log thread");
    (tx, handle)
}

/// Binds both listeners and starts serving in the background.
pub async fn start(cfg: ServeConfig) -> io::Result<Running> {
    let writer = EventLogWriter::create(&cfg.log_path)?;
    let (log_tx, log_thread) = spawn_log_writer(writer);
    let hub = Hub::new(cfg.ccc, Some(log_tx), Clock::Wall);

    let tcp = TcpListener::bind(cfg.tcp_addr).await?;
    let http = TcpListener::bind(cfg.http_addr).await?;
    let tcp_addr = tcp.local_addr()?;
    let http_addr = http.local_addr()?;
    info!(%tcp_addr, %http_addr, log = %cfg.log_path.display(), "ccc listening");

    let mut tasks = Vec::new();
    let h = hub.clone();
    tasks.push(tokio::spawn(async move {
        loop {
            match tcp.accept().await {
                Ok((stream, peer)) => {
                    tokio::spawn(vehicle_connection(h.clone(), stream, peer));
                }
                Err(e) => warn!(error = %e, "accept failed"),
            }
        }
    }));
    let h = hub.clone();
    tasks.push(tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_millis(100));
        loop {
            tick.tick().await;
            h.poll();
        }
    }));
    let (shutdown_tx, shutdown_rx) = oneshot::channel::<()>();
    let app = router(hub.clone());
    tasks.push(tokio::spawn(async move {
        let _ = axum::serve(http, app)
            .with_graceful_shutdown(async {
                let _ = shutdown_rx.await;
            })
            .await;
    }));
    Ok(Running {
        tcp_addr,
        http_addr,
        log_path: cfg.log_path,
        hub,
        shutdown: Some(shutdown_tx),
        log_thread: Some(log_thread),
        tasks,
    })
}

/// Serves a recorded log over HTTP and the stream at scaled timing.
pub async fn serve_replay(
    entries: Vec<EventLogEntry>,
    speed_factor: f64,
    http_addr: SocketAddr,
    ccc: CccConfig,
) -> io::Result<()> {
    crate::replay::check_speed_factor(speed_factor).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let hub = Hub::new(ccc, None, Clock::Virtual(AtomicU64::new(0)));
    let http = TcpListener::bind(http_addr).await?;
    info!(addr = %http.local_addr()?, entries = entries.len(), "replay serving");
    let app = router(hub.clone());
    let server = tokio::spawn(async move { axum::serve(http, app).await });
    let mut prev: Option<u64> = None;
    for e in &entries {
        if let Some(p) = prev {
            tokio::time::sleep(crate::replay::scaled_delay(e.wall_time.saturating_sub(p), speed_factor)).await;
        }
        hub.replay_entry(e);
        prev = Some(e.wall_time);
    }
    info!("replay finished; still serving the final state");
    server.await.map_err(io::Error::other)?
}
