//! Trajectory replay: feed a recorded sequence of query points into the
//! render service on their original timing.

use std::io::Read;
use std::time::Duration;

use padpress_core::Lattice;
use thiserror::Error;
use tokio::time::Instant;

use crate::server::{RenderService, ServiceError};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("MalformedTrajectory: line {line}: {reason}")]
    MalformedTrajectory { line: usize, reason: String },
    #[error("cannot read trajectory: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

impl ReplayError {
    fn at(line: usize, reason: impl Into<String>) -> Self {
        Self::MalformedTrajectory { line, reason: reason.into() }
    }
}

/// Points in lattice axis order with their time offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t_s: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Time of row `i` relative to the first row.
    pub fn offset(&self, i: usize) -> Duration {
        Duration::from_secs_f64((self.t_s[i] - self.t_s[0]).max(0.0))
    }
}

/// Parses a trajectory CSV. The header is `t_s` followed by every lattice
/// axis name in any order. Line numbers count data rows from 1.
pub fn parse_trajectory<R: Read>(reader: R, lattice: &Lattice) -> Result<Trajectory, ReplayError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers().map_err(|e| ReplayError::at(0, e.to_string()))?.clone();
    if header.get(0) != Some("t_s") {
        return Err(ReplayError::at(0, "first column must be t_s"));
    }
    // Column for each lattice axis.
    let mut column = vec![None; lattice.dims()];
    for (c, name) in header.iter().enumerate().skip(1) {
        let axis = lattice.axis_position(name).ok_or_else(|| ReplayError::at(0, format!("unknown axis {name:?}")))?;
        if column[axis].replace(c).is_some() {
            return Err(ReplayError::at(0, format!("duplicate axis {name:?}")));
        }
    }
    if let Some(axis) = column.iter().position(Option::is_none) {
        return Err(ReplayError::at(0, format!("missing axis {:?}", lattice.axes()[axis].name())));
    }
    let column: Vec<usize> = column.into_iter().flatten().collect();

    let mut t_s = Vec::new();
    let mut points = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| ReplayError::at(line, e.to_string()))?;
        if record.len() != header.len() {
            return Err(ReplayError::at(line, format!("expected {} fields, got {}", header.len(), record.len())));
        }
        let number = |c: usize| -> Result<f64, ReplayError> {
            let v: f64 =
                record[c].parse().map_err(|_| ReplayError::at(line, format!("column {} is not a number", c + 1)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ReplayError::at(line, format!("column {} is not finite", c + 1)))
            }
        };
        let t = number(0)?;
        if t_s.last().is_some_and(|&prev| t < prev) {
            return Err(ReplayError::at(line, "t_s decreases"));
        }
        t_s.push(t);
        points.push(column.iter().map(|&c| number(c)).collect::<Result<Vec<_>, _>>()?);
    }
    if points.is_empty() {
        return Err(ReplayError::at(0, "no rows"));
    }
    Ok(Trajectory { t_s, points })
}

/// How rows are fed to the service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pacing {
    /// Each row is applied at its recorded time offset.
    #[default]
    Recorded,
    /// Each row is held until at least one full tick has rendered it.
    Lockstep,
}

#[derive(Debug, Clone, Default)]
pub struct ReplayOptions {
    /// Hold the first row until this many viewers are connected.
    pub wait_for_viewers: usize,
    pub pacing: Pacing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub rows: usize,
    pub ticks: u64,
    pub frames_rendered: u64,
}

/// Runs `service` for the length of `trajectory` and shuts it down two
/// ticks after the last row. Row `i` is tagged with input sequence `i`.
pub async fn replay(
    service: RenderService,
    trajectory: &Trajectory,
    options: &ReplayOptions,
) -> Result<ReplayReport, ReplayError> {
    let handle = service.handle();
    let set = |i: usize| {
        handle.set_input(trajectory.points[i].clone(), i as u64).map_err(|reason| ReplayError::at(i + 1, reason))
    };
    set(0)?;
    let server = tokio::spawn(service.run(std::future::pending()));

    let mut ticks = handle.ticks();
    while handle.viewers() < options.wait_for_viewers {
        // Viewer count is polled once per tick.
        if ticks.changed().await.is_err() {
            break;
        }
    }

    let start_ticks = *handle.ticks().borrow();
    let start = Instant::now();
    for i in 0..trajectory.len() {
        if i > 0 {
            if options.pacing == Pacing::Recorded {
                tokio::time::sleep_until(start + trajectory.offset(i)).await;
            }
            set(i)?;
        }
        if options.pacing == Pacing::Lockstep {
            handle.wait_ticks(2).await;
        }
    }
    handle.wait_ticks(2).await;
    let report = ReplayReport {
        rows: trajectory.len(),
        ticks: *handle.ticks().borrow() - start_ticks,
        frames_rendered: handle.frames_rendered(),
    };
    handle.shutdown();
    server.await.map_err(|e| ServiceError::Io(std::io::Error::other(e)))??;
    Ok(report)
}

/// Row index in effect at each of `ticks` ticks spaced `period` apart,
/// the first at the trajectory's start.
pub fn tick_sampled_rows(trajectory: &Trajectory, period: Duration, ticks: usize) -> Vec<usize> {
    let t0 = trajectory.t_s[0];
    (0..ticks)
        .map(|k| {
            let t = t0 + k as f64 * period.as_secs_f64();
            trajectory.t_s.partition_point(|&ti| ti <= t).saturating_sub(1)
        })
        .collect()
}
