//! Real-time rendering service: clients stream query points over a
//! WebSocket, and every tick the latest point is interpolated and the
//! predicted frame is broadcast to all connected viewers.

pub mod protocol;
pub mod replay;
pub mod server;

pub use protocol::{AxisInfo, ClientMessage, FrameMessage, Hello, ServerMessage};
pub use replay::{
    parse_trajectory, replay, tick_sampled_rows, Pacing, ReplayError, ReplayOptions, ReplayReport, Trajectory,
};
pub use server::{serve, InputState, RenderService, Renderer, ServiceConfig, ServiceError, ServiceHandle};
