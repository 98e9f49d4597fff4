//! Calibration: raw capture sessions to a [`SampleLattice`].
//!
//! One session per plate angle. In each session the first sample whose
//! contact statistic strictly exceeds the threshold fixes the
//! displacement origin; every later sample belongs to the static hold
//! named by its `hold_id`, and each hold is averaged into one node frame
//! at `z = stage_z_mm - origin`. Samples before the crossing are the
//! approach and are not averaged.

mod capture;

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

pub use capture::{parse_capture, write_capture, CaptureError, CaptureSession, Condition, RawSample};

use crate::lattice::{Finding, LatticeDraft, SensorInfo, DEFAULT_ELEMENT_PITCH_MM, FULL_SCALE_KPA};
use crate::{AxisSpec, PressureFrame, SampleLattice, Scalar};

/// Contact threshold for the displacement baseline, kPa.
pub const BASELINE_THRESHOLD_KPA: f64 = 0.5;
/// Tolerance when matching displacements across sessions, mm.
pub const Z_TOLERANCE_MM: f64 = 1e-6;
/// Tolerance when matching plate angles across sessions, degrees.
pub const ANGLE_TOLERANCE_DEG: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("InvalidThreshold: threshold must be positive and finite")]
    InvalidThreshold,
    #[error("NeverExceeded: no sample exceeds the {threshold_kpa} kPa contact threshold")]
    NeverExceeded { threshold_kpa: f64 },
    #[error("EmptyHold: no samples to average")]
    EmptyHold,
    #[error("MixedHold: {reason}")]
    MixedHold { hold_id: Option<u64>, reason: String },
    #[error("MixedAngle: session samples disagree on angle_deg")]
    MixedAngle,
    #[error("NegativeDisplacement: hold {hold_id} sits below the baseline")]
    NegativeDisplacement { hold_id: u64 },
    #[error("IncompleteGrid: missing nodes {}", tuples(.0))]
    IncompleteGrid(Vec<Vec<usize>>),
    #[error("InconsistentZSchedule: {0}")]
    InconsistentZSchedule(String),
    #[error("{}", findings(.0))]
    InvalidLattice(Vec<Finding>),
    #[error("NoSessions: nothing to build from")]
    NoSessions,
    #[error("session {session}: {source}")]
    Session {
        session: usize,
        #[source]
        source: Box<IngestError>,
    },
}

impl IngestError {
    /// The error stripped of session context.
    pub fn root(&self) -> &IngestError {
        match self {
            IngestError::Session { source, .. } => source.root(),
            other => other,
        }
    }
}

fn tuples(v: &[Vec<usize>]) -> String {
    v.iter()
        .map(|t| format!("({})", t.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")))
        .collect::<Vec<_>>()
        .join(", ")
}

fn findings(v: &[Finding]) -> String {
    v.iter().map(Finding::to_string).collect::<Vec<_>>().join(", ")
}

/// Per-sample scalar compared against the contact threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContactStatistic {
    /// Largest element value.
    #[default]
    Max,
    /// Sum over all elements.
    Sum,
}

impl ContactStatistic {
    pub fn eval<T: Scalar>(self, frame: &PressureFrame<T>) -> T {
        match self {
            ContactStatistic::Max => frame.max_value(),
            ContactStatistic::Sum => frame.sum(),
        }
    }
}

impl FromStr for ContactStatistic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Self::Max),
            "sum" => Ok(Self::Sum),
            other => Err(format!("unknown contact statistic `{other}` (expected max or sum)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baseline<T> {
    /// Position of the crossing sample in the session.
    pub index: usize,
    pub t_s: T,
    /// Stage position taken as `z = 0`.
    pub stage_z_mm: T,
}

/// Finds the first sample whose contact statistic strictly exceeds
/// `threshold_kpa`.
pub fn detect_baseline<T: Scalar>(
    session: &CaptureSession<T>,
    threshold_kpa: T,
    statistic: ContactStatistic,
) -> Result<Baseline<T>, IngestError> {
    if !(threshold_kpa.is_finite() && threshold_kpa > T::zero()) {
        return Err(IngestError::InvalidThreshold);
    }
    session
        .samples()
        .iter()
        .position(|s| statistic.eval(&s.frame) > threshold_kpa)
        .map(|index| {
            let s = &session.samples()[index];
            Baseline { index, t_s: s.t_s, stage_z_mm: s.condition.stage_z_mm }
        })
        .ok_or(IngestError::NeverExceeded { threshold_kpa: threshold_kpa.as_f64() })
}

/// Element-wise mean of the frames of one static hold.
///
/// Each element is averaged over its values in sorted order with a
/// running mean, so the result does not depend on sample order and a
/// hold of identical frames returns that frame bit for bit.
pub fn average_hold<T: Scalar>(samples: &[RawSample<T>]) -> Result<PressureFrame<T>, IngestError> {
    let refs: Vec<&RawSample<T>> = samples.iter().collect();
    average_refs(&refs)
}

fn average_refs<T: Scalar>(samples: &[&RawSample<T>]) -> Result<PressureFrame<T>, IngestError> {
    let first = samples.first().ok_or(IngestError::EmptyHold)?;
    let hold_id = first.condition.hold_id;
    for s in samples {
        if !s.frame.same_geometry(&first.frame) {
            return Err(IngestError::MixedHold { hold_id: Some(hold_id), reason: "frame geometry differs".into() });
        }
        if s.condition.hold_id != hold_id {
            return Err(IngestError::MixedHold {
                hold_id: Some(hold_id),
                reason: format!("hold ids {hold_id} and {} in one hold", s.condition.hold_id),
            });
        }
    }
    if samples.len() == 1 {
        return Ok(first.frame.clone());
    }
    let mut column = Vec::with_capacity(samples.len());
    let values = (0..first.frame.len())
        .map(|e| {
            column.clear();
            column.extend(samples.iter().map(|s| s.frame.values()[e]));
            column.sort_by(|a, b| a.partial_cmp(b).expect("frame values are finite"));
            running_mean(&column)
        })
        .collect();
    Ok(PressureFrame::new(first.frame.rows(), first.frame.cols(), values).expect("mean of valid frames is valid"))
}

fn running_mean<T: Scalar>(values: &[T]) -> T {
    let mut mean = T::zero();
    for (k, &v) in values.iter().enumerate() {
        mean = mean + (v - mean) / T::of((k + 1) as f64);
    }
    mean
}

/// Calibration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildConfig<T> {
    pub threshold_kpa: T,
    pub statistic: ContactStatistic,
    pub element_pitch_mm: T,
    pub full_scale_kpa: T,
    pub z_tolerance_mm: T,
    pub angle_tolerance_deg: T,
}

impl<T: Scalar> Default for BuildConfig<T> {
    fn default() -> Self {
        Self {
            threshold_kpa: T::of(BASELINE_THRESHOLD_KPA),
            statistic: ContactStatistic::Max,
            element_pitch_mm: T::of(DEFAULT_ELEMENT_PITCH_MM),
            full_scale_kpa: T::of(FULL_SCALE_KPA),
            z_tolerance_mm: T::of(Z_TOLERANCE_MM),
            angle_tolerance_deg: T::of(ANGLE_TOLERANCE_DEG),
        }
    }
}

/// One averaged hold after the baseline shift.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldFrame<T> {
    pub hold_id: u64,
    pub z_mm: T,
    pub frame: PressureFrame<T>,
}

/// Baseline, angle and averaged holds of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSummary<T> {
    pub baseline: Baseline<T>,
    pub angle_deg: T,
    pub holds: Vec<HoldFrame<T>>,
}

/// Runs baseline detection and hold averaging on one session.
pub fn summarize_session<T: Scalar>(
    session: &CaptureSession<T>,
    config: &BuildConfig<T>,
) -> Result<SessionSummary<T>, IngestError> {
    let baseline = detect_baseline(session, config.threshold_kpa, config.statistic)?;
    let samples = session.samples();
    let angle_deg = samples[0].condition.angle_deg;
    if samples.iter().any(|s| (s.condition.angle_deg - angle_deg).abs() > config.angle_tolerance_deg) {
        return Err(IngestError::MixedAngle);
    }

    let mut groups: BTreeMap<u64, Vec<&RawSample<T>>> = BTreeMap::new();
    for s in &samples[baseline.index..] {
        groups.entry(s.condition.hold_id).or_default().push(s);
    }
    let mut holds = Vec::with_capacity(groups.len());
    for (hold_id, members) in groups {
        let stage = members[0].condition.stage_z_mm;
        if members.iter().any(|s| (s.condition.stage_z_mm - stage).abs() > config.z_tolerance_mm) {
            return Err(IngestError::MixedHold {
                hold_id: Some(hold_id),
                reason: "stage_z_mm varies within the hold".into(),
            });
        }
        let z_mm = stage - baseline.stage_z_mm;
        if z_mm < -config.z_tolerance_mm {
            return Err(IngestError::NegativeDisplacement { hold_id });
        }
        let frame = average_refs(&members)?;
        holds.push(HoldFrame { hold_id, z_mm, frame });
    }
    Ok(SessionSummary { baseline, angle_deg, holds })
}

/// Groups sorted values whose neighbours lie within `tol`. Returns the
/// cluster of every input (by input position) and each cluster's
/// (mean, span).
fn cluster<T: Scalar>(values: &[T], tol: T) -> (Vec<usize>, Vec<(T, T)>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
    let mut assignment = vec![0; values.len()];
    let mut members: Vec<Vec<T>> = Vec::new();
    let mut prev: Option<T> = None;
    for &i in &order {
        let v = values[i];
        if prev.is_none_or(|p| v - p > tol) {
            members.push(Vec::new());
        }
        members.last_mut().expect("pushed above").push(v);
        assignment[i] = members.len() - 1;
        prev = Some(v);
    }
    let stats = members.iter().map(|m| (running_mean(m), m[m.len() - 1] - m[0])).collect();
    (assignment, stats)
}

/// Assembles a (z, theta) lattice from one capture session per angle.
pub fn build_lattice<T: Scalar>(
    sessions: &[CaptureSession<T>],
    config: &BuildConfig<T>,
) -> Result<SampleLattice<T>, IngestError> {
    if sessions.is_empty() {
        return Err(IngestError::NoSessions);
    }
    let summaries = sessions
        .iter()
        .enumerate()
        .map(|(session, s)| {
            summarize_session(s, config).map_err(|e| IngestError::Session { session, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let angles: Vec<T> = summaries.iter().map(|s| s.angle_deg).collect();
    let (angle_of_session, angle_clusters) = cluster(&angles, config.angle_tolerance_deg);

    let mut z_values = Vec::new();
    let mut z_owner = Vec::new();
    for (si, s) in summaries.iter().enumerate() {
        for h in &s.holds {
            z_values.push(h.z_mm);
            z_owner.push(angle_of_session[si]);
        }
    }
    let (z_of_hold, z_clusters) = cluster(&z_values, config.z_tolerance_mm);
    for (k, &(mean, span)) in z_clusters.iter().enumerate() {
        if span > config.z_tolerance_mm {
            return Err(IngestError::InconsistentZSchedule(format!("z cluster {k} around {mean} mm spans {span} mm")));
        }
    }
    check_z_schedule(&z_of_hold, &z_owner, &z_clusters, angle_clusters.len())?;

    let axes = vec![
        AxisSpec::new("z", "mm", z_clusters.iter().map(|c| c.0).collect()).expect("clusters are increasing"),
        AxisSpec::new("theta", "deg", angle_clusters.iter().map(|c| c.0).collect()).expect("clusters are increasing"),
    ];
    let sensor = SensorInfo {
        frame_rows: sessions[0].rows(),
        frame_cols: sessions[0].cols(),
        element_pitch_mm: config.element_pitch_mm,
        full_scale_kpa: config.full_scale_kpa,
    };
    let mut draft = LatticeDraft::new(axes, sensor);
    let mut hold = 0;
    for (si, s) in summaries.into_iter().enumerate() {
        for h in s.holds {
            draft.push(vec![z_of_hold[hold], angle_of_session[si]], h.frame);
            hold += 1;
        }
    }

    let findings = draft.validate();
    let blocking: Vec<Finding> =
        findings.iter().filter(|f| f.is_error() && !matches!(f, Finding::MissingNode(_))).cloned().collect();
    if !blocking.is_empty() {
        return Err(IngestError::InvalidLattice(blocking));
    }
    let missing: Vec<Vec<usize>> = findings
        .into_iter()
        .filter_map(|f| match f {
            Finding::MissingNode(ix) => Some(ix),
            _ => None,
        })
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::IncompleteGrid(missing));
    }
    Ok(draft.build().expect("validated above"))
}

/// Sessions disagree on the z schedule when two displacements that are
/// each missing somewhere never occur at a common angle: that is one
/// knot measured at two different positions, not a missing hold.
fn check_z_schedule<T: Scalar>(
    z_of_hold: &[usize],
    owner: &[usize],
    z_clusters: &[(T, T)],
    angles: usize,
) -> Result<(), IngestError> {
    let mut present = vec![vec![false; angles]; z_clusters.len()];
    for (&z, &a) in z_of_hold.iter().zip(owner) {
        present[z][a] = true;
    }
    let incomplete: Vec<usize> = (0..z_clusters.len()).filter(|&k| present[k].iter().any(|p| !p)).collect();
    for (i, &a) in incomplete.iter().enumerate() {
        for &b in &incomplete[i + 1..] {
            let disjoint = present[a].iter().zip(&present[b]).all(|(x, y)| !(x & y));
            if disjoint {
                return Err(IngestError::InconsistentZSchedule(format!(
                    "z = {} mm and z = {} mm are never measured at a common angle",
                    z_clusters[a].0, z_clusters[b].0
                )));
            }
        }
    }
    Ok(())
}
