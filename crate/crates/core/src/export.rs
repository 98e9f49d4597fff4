//! Frame output: CSV grids, 8-bit PGM heatmaps and JSON frame records.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::{ClampReport, PressureFrame, SampleLattice, Scalar};

/// Significant digits used for text output of pressures.
pub const TEXT_DIGITS: usize = 9;

/// Formats `v` with `digits` significant digits, `%g` style: fixed
/// notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".to_string() } else { v.to_string() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, v)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes the frame as `rows` lines of `cols` comma-separated kPa values.
pub fn write_frame_csv<T: Scalar, W: Write>(frame: &PressureFrame<T>, mut out: W) -> io::Result<()> {
    for row in frame.values().chunks(frame.cols()) {
        let line: Vec<String> = row.iter().map(|v| format_significant(v.as_f64(), TEXT_DIGITS)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Parses the CSV grid written by [`write_frame_csv`].
pub fn parse_frame_csv(text: &str) -> Result<PressureFrame<f64>, String> {
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => return Err(format!("line {}: expected {c} values", i + 1)),
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    PressureFrame::new(rows, cols.unwrap_or(0), values).map_err(|e| e.to_string())
}

/// Grey level of one element: 0 kPa is black, `full_scale_kpa` and
/// above is white.
pub fn grey_level<T: Scalar>(value: T, full_scale_kpa: T) -> u8 {
    let ratio = (value.as_f64() / full_scale_kpa.as_f64()).clamp(0.0, 1.0);
    (ratio * 255.0).round() as u8
}

/// Binary (P5) PGM image, one pixel per element, `cols` wide.
pub fn frame_to_pgm<T: Scalar>(frame: &PressureFrame<T>, full_scale_kpa: T) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.cols(), frame.rows()).into_bytes();
    out.extend(frame.values().iter().map(|&v| grey_level(v, full_scale_kpa)));
    out
}

pub fn write_frame_pgm<T: Scalar, W: Write>(frame: &PressureFrame<T>, full_scale_kpa: T, mut out: W) -> io::Result<()> {
    out.write_all(&frame_to_pgm(frame, full_scale_kpa))
}

/// Predicted frame with its query context, without any transport fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    /// Clamped coordinates actually used, by axis name.
    pub query: BTreeMap<String, f64>,
    /// Whether each axis coordinate was clamped, by axis name.
    pub clamped: BTreeMap<String, bool>,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    /// Interpolation time for this frame, microseconds.
    pub compute_us: f64,
}

impl FrameRecord {
    pub fn new<T: Scalar>(
        lattice: &SampleLattice<T>,
        frame: &PressureFrame<T>,
        report: &ClampReport<T>,
        compute_us: f64,
    ) -> Self {
        let mut query = BTreeMap::new();
        let mut clamped = BTreeMap::new();
        for (axis, c) in lattice.axes().iter().zip(&report.axes) {
            query.insert(axis.name().to_string(), c.coord.as_f64());
            clamped.insert(axis.name().to_string(), c.flag.is_clamped());
        }
        Self {
            query,
            clamped,
            rows: frame.rows(),
            cols: frame.cols(),
            values: frame.values().iter().map(|v| v.as_f64()).collect(),
            compute_us,
        }
    }
}
