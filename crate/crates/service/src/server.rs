//! The render loop: one input slot (last writer wins), one ticker, any
//! number of viewers.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use padpress_core::export::FrameRecord;
use padpress_core::{Lattice, Point};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, watch};
use tokio::time::MissedTickBehavior;

use crate::protocol::{decode_input, encode, FrameMessage, Hello, ServerMessage};

pub const DEFAULT_TICK_RATE_HZ: f64 = 60.0;
pub const MIN_TICK_RATE_HZ: f64 = 1.0;
pub const MAX_TICK_RATE_HZ: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("BindFailure: cannot bind {addr}: {source}")]
    BindFailure {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("tick rate {0} Hz outside [{MIN_TICK_RATE_HZ}, {MAX_TICK_RATE_HZ}]")]
    InvalidTickRate(f64),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub tick_rate_hz: f64,
    /// Static files served under `/ui`.
    pub ui_dir: Option<PathBuf>,
    /// Frames buffered per viewer before a slow viewer starts dropping.
    pub viewer_buffer: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { tick_rate_hz: DEFAULT_TICK_RATE_HZ, ui_dir: None, viewer_buffer: 16 }
    }
}

impl ServiceConfig {
    pub fn with_rate(tick_rate_hz: f64) -> Self {
        Self { tick_rate_hz, ..Self::default() }
    }

    pub fn tick_period(&self) -> Duration {
        Duration::from_secs_f64(1.0 / self.tick_rate_hz)
    }
}

/// The latest input. Replaced wholesale on every update.
#[derive(Debug, Clone, PartialEq)]
pub struct InputState {
    pub point: Point,
    /// Server-side update counter, strictly increasing.
    pub seq: u64,
    /// Sequence number the client attached to this input.
    pub client_seq: u64,
    pub received_us: u64,
}

/// A rendered frame as handed to viewers.
#[derive(Debug, Clone)]
pub struct Broadcast {
    pub message: Arc<FrameMessage>,
    pub json: Utf8Bytes,
}

pub fn now_us() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_micros() as u64)
}

/// Turns input states into frame messages.
pub struct Renderer {
    lattice: Arc<Lattice>,
    next_seq: u64,
}

impl Renderer {
    pub fn new(lattice: Arc<Lattice>) -> Self {
        Self { lattice, next_seq: 0 }
    }

    /// Renders one frame. Without input the lattice's minimum corner is
    /// used.
    pub fn render(&mut self, input: Option<&InputState>) -> FrameMessage {
        let min_corner;
        let point = match input {
            Some(state) => &state.point,
            None => {
                min_corner = Point::new(self.lattice.min_corner());
                &min_corner
            }
        };
        let started = Instant::now();
        // Input coordinates are validated on receipt.
        let (frame, report) = self.lattice.query(point).expect("validated input point");
        let compute_us = started.elapsed().as_secs_f64() * 1e6;
        let seq = self.next_seq;
        self.next_seq += 1;
        FrameMessage {
            seq,
            t_us: now_us(),
            input_seq: input.map(|s| s.client_seq),
            record: FrameRecord::new(&self.lattice, &frame, &report, compute_us),
        }
    }
}

struct Shared {
    lattice: Arc<Lattice>,
    hello: Utf8Bytes,
    input: watch::Sender<Option<InputState>>,
    frames: broadcast::Sender<Broadcast>,
    ticks: watch::Sender<u64>,
    rendered: AtomicU64,
    shutdown: watch::Sender<bool>,
}

impl Shared {
    fn set_input(&self, point: Vec<f64>, client_seq: u64) {
        let received_us = now_us();
        self.input.send_modify(|slot| {
            let seq = slot.as_ref().map_or(1, |s| s.seq + 1);
            *slot = Some(InputState { point: Point::new(point), seq, client_seq, received_us });
        });
    }
}

/// In-process access to a running service.
#[derive(Clone)]
pub struct ServiceHandle {
    shared: Arc<Shared>,
}

impl ServiceHandle {
    pub fn lattice(&self) -> &Lattice {
        &self.shared.lattice
    }

    /// Replaces the current input. Coordinates are in axis order.
    pub fn set_input(&self, point: Vec<f64>, client_seq: u64) -> Result<(), String> {
        let lattice = &self.shared.lattice;
        if point.len() != lattice.dims() {
            return Err(format!("expected {} coordinates, got {}", lattice.dims(), point.len()));
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err("coordinates must be finite".into());
        }
        self.shared.set_input(point, client_seq);
        Ok(())
    }

    pub fn current_input(&self) -> Option<InputState> {
        self.shared.input.borrow().clone()
    }

    /// Subscribes as a viewer. Counts towards the viewer total.
    pub fn subscribe(&self) -> broadcast::Receiver<Broadcast> {
        self.shared.frames.subscribe()
    }

    pub fn viewers(&self) -> usize {
        self.shared.frames.receiver_count()
    }

    /// Tick counter, incremented after every tick whether or not it
    /// rendered.
    pub fn ticks(&self) -> watch::Receiver<u64> {
        self.shared.ticks.subscribe()
    }

    pub fn frames_rendered(&self) -> u64 {
        self.shared.rendered.load(Ordering::Relaxed)
    }

    /// Closes viewer connections and stops the server.
    pub fn shutdown(&self) {
        self.shared.shutdown.send_replace(true);
    }

    /// Waits until `n` more ticks have completed.
    pub async fn wait_ticks(&self, n: u64) {
        let mut ticks = self.ticks();
        let target = *ticks.borrow_and_update() + n;
        while *ticks.borrow_and_update() < target {
            if ticks.changed().await.is_err() {
                return;
            }
        }
    }
}

/// A bound, not yet running service.
pub struct RenderService {
    shared: Arc<Shared>,
    listener: TcpListener,
    config: ServiceConfig,
}

impl RenderService {
    pub async fn bind(lattice: Lattice, addr: &str, config: ServiceConfig) -> Result<Self, ServiceError> {
        let rate = config.tick_rate_hz;
        if !(MIN_TICK_RATE_HZ..=MAX_TICK_RATE_HZ).contains(&rate) {
            return Err(ServiceError::InvalidTickRate(rate));
        }
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|source| ServiceError::BindFailure { addr: addr.to_string(), source })?;
        let hello = encode(&ServerMessage::Hello(Hello::for_lattice(&lattice))).into();
        let (frames, _) = broadcast::channel(config.viewer_buffer.max(1));
        let shared = Arc::new(Shared {
            lattice: Arc::new(lattice),
            hello,
            input: watch::Sender::new(None),
            frames,
            ticks: watch::Sender::new(0),
            rendered: AtomicU64::new(0),
            shutdown: watch::Sender::new(false),
        });
        Ok(Self { shared, listener, config })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn handle(&self) -> ServiceHandle {
        ServiceHandle { shared: self.shared.clone() }
    }

    /// Runs until `shutdown` resolves or [`ServiceHandle::shutdown`] is
    /// called.
    pub async fn run<F>(self, shutdown: F) -> Result<(), ServiceError>
    where
        F: Future<Output = ()> + Send + 'static,
    {
        let shared = self.shared;
        let mut router =
            Router::new().route("/", get(ws_upgrade)).route("/ws", get(ws_upgrade)).with_state(shared.clone());
        if let Some(dir) = &self.config.ui_dir {
            router = router.nest_service("/ui", tower_http::services::ServeDir::new(dir));
        }

        let stop = shared.shutdown.clone();
        tokio::spawn(async move {
            let mut flag = stop.subscribe();
            tokio::select! {
                _ = shutdown => { stop.send_replace(true); }
                _ = async { flag.wait_for(|v| *v).await.map(|_| ()) } => {}
            }
        });

        let ticker = tokio::spawn(tick_loop(shared.clone(), self.config.tick_period()));
        let mut flag = shared.shutdown.subscribe();
        let result = axum::serve(self.listener, router)
            .with_graceful_shutdown(async move {
                let _ = flag.wait_for(|v| *v).await;
            })
            .await;
        ticker.abort();
        result.map_err(ServiceError::from)
    }
}

/// Binds and runs the render service until `shutdown` resolves.
pub async fn serve<F>(lattice: Lattice, addr: &str, config: ServiceConfig, shutdown: F) -> Result<(), ServiceError>
where
    F: Future<Output = ()> + Send + 'static,
{
    let service = RenderService::bind(lattice, addr, config).await?;
    log::info!("render service listening on {}", service.local_addr()?);
    service.run(shutdown).await
}

async fn tick_loop(shared: Arc<Shared>, period: Duration) {
    let mut renderer = Renderer::new(shared.lattice.clone());
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Skip);
    loop {
        interval.tick().await;
        if shared.frames.receiver_count() > 0 {
            let input = shared.input.borrow().clone();
            let message = renderer.render(input.as_ref());
            let json = encode(&ServerMessage::Frame(message.clone())).into();
            // A send error only means the last viewer just left.
            let _ = shared.frames.send(Broadcast { message: Arc::new(message), json });
            shared.rendered.fetch_add(1, Ordering::Relaxed);
        }
        shared.ticks.send_modify(|t| *t += 1);
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> Response {
    ws.on_upgrade(move |socket| viewer(socket, shared))
}

async fn viewer(mut socket: WebSocket, shared: Arc<Shared>) {
    let mut frames = shared.frames.subscribe();
    let mut stop = shared.shutdown.subscribe();
    if socket.send(Message::Text(shared.hello.clone())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    match decode_input(&shared.lattice, text.as_str()) {
                        Ok((seq, point)) => shared.set_input(point, seq),
                        Err(rejection) => {
                            log::debug!("rejected client message: {rejection}");
                            let reply = encode(&ServerMessage::Error { reason: rejection.to_string() });
                            if socket.send(Message::Text(reply.into())).await.is_err() {
                                break;
                            }
                        }
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
            frame = frames.recv() => match frame {
                Ok(b) => {
                    if socket.send(Message::Text(b.json)).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(skipped)) => {
                    log::debug!("slow viewer dropped {skipped} frames");
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
            _ = async { stop.wait_for(|v| *v).await.map(|_| ()) } => {
                let _ = socket.send(Message::Close(None)).await;
                break;
            }
        }
    }
}
