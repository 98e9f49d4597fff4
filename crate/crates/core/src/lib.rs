//! Data-driven pressure distribution rendering for a finger pad.
//!
//! The model is a [`SampleLattice`]: measured pressure frames on a grid of
//! input conditions (pushing displacement and contact angle, or any
//! number of axes). Predictions at arbitrary in-range inputs come from
//! per-element multilinear interpolation between the measured frames.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root pick `f64`, which is what the file formats,
//! the service and the CLI use.

mod axis;
mod frame;
mod scalar;

pub mod export;
pub mod format;
pub mod ingest;
pub mod interp;
pub mod lattice;
pub mod synth;

pub use axis::{AxisError, AxisSpec};
pub use frame::{frame_stats, FrameError, FrameStats, PressureFrame};
pub use ingest::{
    average_hold, build_lattice, detect_baseline, parse_capture, BuildConfig, CaptureError, CaptureSession, Condition,
    ContactStatistic, IngestError, RawSample,
};
pub use interp::{
    locate_cell, query, query_batch, AxisClamp, BatchError, CellLocation, ClampFlag, ClampReport, InterpError,
    Prediction, QueryPoint,
};
pub use lattice::{lattice_validate, Finding, LatticeDraft, LatticeError, SampleLattice, SensorInfo};
pub use scalar::Scalar;

pub type Frame = PressureFrame<f64>;
pub type Axis = AxisSpec<f64>;
pub type Lattice = SampleLattice<f64>;
pub type Point = QueryPoint<f64>;
pub type Report = ClampReport<f64>;
pub type Session = CaptureSession<f64>;

pub type FrameF32 = PressureFrame<f32>;
pub type LatticeF32 = SampleLattice<f32>;
pub type PointF32 = QueryPoint<f32>;
