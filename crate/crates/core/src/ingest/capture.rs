//! Capture logs: timestamped raw frames with their hold labels.
//!
//! CSV layout, header first:
//! `t_s,angle_deg,stage_z_mm,hold_id,p_0_0,p_0_1,...,p_{R-1}_{C-1}`
//! with pressure columns row-major in kPa. Line numbers in errors count
//! data rows from 1; the header is not counted.

use std::io::{Read, Write};

use thiserror::Error;

use crate::{FrameError, PressureFrame, Scalar};

const FIXED_COLUMNS: [&str; 4] = ["t_s", "angle_deg", "stage_z_mm", "hold_id"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaptureError {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("MalformedHeader: {0}")]
    MalformedHeader(String),
    #[error("EmptySession: capture has no data rows")]
    EmptySession,
    #[error("InvalidUtf8 on line {line}")]
    InvalidUtf8 { line: usize },
    #[error("RowArityMismatch on line {line}: expected {expected} fields, got {got}")]
    RowArityMismatch { line: usize, expected: usize, got: usize },
    #[error("InvalidNumber on line {line}, column `{column}`")]
    InvalidNumber { line: usize, column: String },
    #[error("NonFiniteValue on line {line}, column `{column}`")]
    NonFiniteValue { line: usize, column: String },
    #[error("NegativePressure on line {line}, column `{column}`")]
    NegativePressure { line: usize, column: String },
    #[error("InvalidHoldId on line {line}: hold_id must be a non-negative integer")]
    InvalidHoldId { line: usize },
    #[error("NonMonotonicTime on line {line}")]
    NonMonotonicTime { line: usize },
    #[error("MixedGeometry on line {line}")]
    MixedGeometry { line: usize },
}

impl CaptureError {
    /// Short variant name, used to classify malformed inputs.
    pub fn kind(&self) -> &'static str {
        match self {
            CaptureError::Io(_) => "Io",
            CaptureError::MalformedHeader(_) => "MalformedHeader",
            CaptureError::EmptySession => "EmptySession",
            CaptureError::InvalidUtf8 { .. } => "InvalidUtf8",
            CaptureError::RowArityMismatch { .. } => "RowArityMismatch",
            CaptureError::InvalidNumber { .. } => "InvalidNumber",
            CaptureError::NonFiniteValue { .. } => "NonFiniteValue",
            CaptureError::NegativePressure { .. } => "NegativePressure",
            CaptureError::InvalidHoldId { .. } => "InvalidHoldId",
            CaptureError::NonMonotonicTime { .. } => "NonMonotonicTime",
            CaptureError::MixedGeometry { .. } => "MixedGeometry",
        }
    }
}

/// Stage condition a raw sample was taken under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition<T> {
    pub angle_deg: T,
    pub stage_z_mm: T,
    pub hold_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSample<T> {
    pub t_s: T,
    pub condition: Condition<T>,
    pub frame: PressureFrame<T>,
}

/// An ordered, non-empty run of raw samples with uniform frame geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureSession<T> {
    rows: usize,
    cols: usize,
    samples: Vec<RawSample<T>>,
}

impl<T: Scalar> CaptureSession<T> {
    pub fn new(samples: Vec<RawSample<T>>) -> Result<Self, CaptureError> {
        let first = samples.first().ok_or(CaptureError::EmptySession)?;
        let (rows, cols) = (first.frame.rows(), first.frame.cols());
        for (i, s) in samples.iter().enumerate() {
            let line = i + 1;
            if s.frame.rows() != rows || s.frame.cols() != cols {
                return Err(CaptureError::MixedGeometry { line });
            }
            if !s.t_s.is_finite() || !s.condition.angle_deg.is_finite() || !s.condition.stage_z_mm.is_finite() {
                return Err(CaptureError::NonFiniteValue { line, column: "condition".into() });
            }
            if i > 0 && s.t_s < samples[i - 1].t_s {
                return Err(CaptureError::NonMonotonicTime { line });
            }
        }
        Ok(Self { rows, cols, samples })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn samples(&self) -> &[RawSample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn pressure_column(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("p_")?;
    let (r, c) = rest.split_once('_')?;
    Some((r.parse().ok()?, c.parse().ok()?))
}

/// Infers the frame geometry from the header and checks column order.
fn parse_header(header: &csv::StringRecord) -> Result<(usize, usize), CaptureError> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names.len() < FIXED_COLUMNS.len() + 1 {
        return Err(CaptureError::MalformedHeader(format!(
            "expected {} followed by pressure columns",
            FIXED_COLUMNS.join(",")
        )));
    }
    for (got, want) in names.iter().zip(FIXED_COLUMNS) {
        if *got != want {
            return Err(CaptureError::MalformedHeader(format!("expected column `{want}`, found `{got}`")));
        }
    }
    let cells = names[FIXED_COLUMNS.len()..]
        .iter()
        .map(|n| pressure_column(n).ok_or_else(|| CaptureError::MalformedHeader(format!("bad pressure column `{n}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = cells.iter().map(|&(r, _)| r).max().unwrap_or(0) + 1;
    let cols = cells.iter().map(|&(_, c)| c).max().unwrap_or(0) + 1;
    if cells.len() != rows * cols {
        return Err(CaptureError::MalformedHeader(format!(
            "{} pressure columns do not form a {rows}x{cols} grid",
            cells.len()
        )));
    }
    for (j, &(r, c)) in cells.iter().enumerate() {
        if (r, c) != (j / cols, j % cols) {
            return Err(CaptureError::MalformedHeader(format!(
                "pressure column {j} is p_{r}_{c}, expected p_{}_{} (row-major order)",
                j / cols,
                j % cols
            )));
        }
    }
    Ok((rows, cols))
}

fn number(field: &str, line: usize, column: &str) -> Result<f64, CaptureError> {
    let v: f64 = field.trim().parse().map_err(|_| CaptureError::InvalidNumber { line, column: column.to_string() })?;
    if !v.is_finite() {
        return Err(CaptureError::NonFiniteValue { line, column: column.to_string() });
    }
    Ok(v)
}

/// Parses a capture CSV in one streaming pass.
pub fn parse_capture<T: Scalar, R: Read>(input: R) -> Result<CaptureSession<T>, CaptureError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = reader.byte_records();
    let header = match records.next() {
        None => return Err(CaptureError::MalformedHeader("empty input".into())),
        Some(rec) => rec.map_err(|e| CaptureError::Io(e.to_string()))?,
    };
    let header = csv::StringRecord::from_byte_record(header)
        .map_err(|_| CaptureError::MalformedHeader("header is not UTF-8".into()))?;
    let (rows, cols) = parse_header(&header)?;
    let width = FIXED_COLUMNS.len() + rows * cols;
    let columns: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();

    let mut samples = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (i, rec) in records.enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| CaptureError::Io(e.to_string()))?;
        let rec = csv::StringRecord::from_byte_record(rec).map_err(|_| CaptureError::InvalidUtf8 { line })?;
        if rec.len() != width {
            return Err(CaptureError::RowArityMismatch { line, expected: width, got: rec.len() });
        }
        let t_s = number(&rec[0], line, "t_s")?;
        let angle_deg = number(&rec[1], line, "angle_deg")?;
        let stage_z_mm = number(&rec[2], line, "stage_z_mm")?;
        let hold_id: u64 = rec[3].trim().parse().map_err(|_| CaptureError::InvalidHoldId { line })?;
        if t_s < last_t {
            return Err(CaptureError::NonMonotonicTime { line });
        }
        last_t = t_s;

        let mut values = Vec::with_capacity(rows * cols);
        for (j, field) in rec.iter().enumerate().skip(FIXED_COLUMNS.len()) {
            let v = number(field, line, &columns[j])?;
            values.push(T::of(v));
        }
        let frame = PressureFrame::new(rows, cols, values).map_err(|e| match e {
            FrameError::NegativePressure { index } => {
                CaptureError::NegativePressure { line, column: columns[FIXED_COLUMNS.len() + index].clone() }
            }
            _ => CaptureError::NonFiniteValue { line, column: "pressure".into() },
        })?;
        samples.push(RawSample {
            t_s: T::of(t_s),
            condition: Condition { angle_deg: T::of(angle_deg), stage_z_mm: T::of(stage_z_mm), hold_id },
            frame,
        });
    }
    if samples.is_empty() {
        return Err(CaptureError::EmptySession);
    }
    Ok(CaptureSession { rows, cols, samples })
}

/// Writes a session in the capture CSV layout. Values print in shortest
/// round-trip form, so parsing the output reproduces the session exactly.
pub fn write_capture<T: Scalar, W: Write>(session: &CaptureSession<T>, out: W) -> Result<(), CaptureError> {
    let io = |e: csv::Error| CaptureError::Io(e.to_string());
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for r in 0..session.rows {
        for c in 0..session.cols {
            header.push(format!("p_{r}_{c}"));
        }
    }
    writer.write_record(&header).map_err(io)?;
    for s in &session.samples {
        let mut record = vec![
            s.t_s.as_f64().to_string(),
            s.condition.angle_deg.as_f64().to_string(),
            s.condition.stage_z_mm.as_f64().to_string(),
            s.condition.hold_id.to_string(),
        ];
        record.extend(s.frame.values().iter().map(|v| v.as_f64().to_string()));
        writer.write_record(&record).map_err(io)?;
    }
    writer.flush().map_err(|e| CaptureError::Io(e.to_string()))
}
