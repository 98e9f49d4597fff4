//! The lattice file: a self-describing JSON document holding the whole
//! model.
//!
//! ```json
//! { "version": 1, "frame_rows": 16, "frame_cols": 15,
//!   "element_pitch_mm": 1.5, "full_scale_kpa": 82.87,
//!   "axes": [ {"name": "z", "unit": "mm", "samples": [0.0, 0.5, 1.0, 1.5]}, ... ],
//!   "frames": [ {"index": [0, 0], "values": [...]}, ... ] }
//! ```
//!
//! Writers emit frames in lexicographic index order. Readers accept any
//! order but reject holes and duplicates. Numbers are written in
//! shortest round-trip form, so a write/read cycle is bit-exact for f64.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{Finding, LatticeDraft, SensorInfo};
use crate::{AxisError, AxisSpec, FrameError, PressureFrame, SampleLattice, Scalar};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("MalformedDocument: {0}")]
    Json(String),
    #[error("UnsupportedVersion: {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("InvalidAxis: {0}")]
    Axis(#[from] AxisError),
    #[error("InvalidFrame at node {}: {source}", fmt_index(.index))]
    Frame {
        index: Vec<usize>,
        #[source]
        source: FrameError,
    },
    #[error("InvalidLattice: {}", .0.iter().map(Finding::to_string).collect::<Vec<_>>().join(", "))]
    Lattice(Vec<Finding>),
}

impl FormatError {
    /// Short variant name, used to classify malformed inputs. Lattice
    /// findings report the kind of the first finding.
    pub fn kind(&self) -> &'static str {
        match self {
            FormatError::Io(_) => "Io",
            FormatError::Json(_) => "MalformedDocument",
            FormatError::UnsupportedVersion(_) => "UnsupportedVersion",
            FormatError::Axis(_) => "InvalidAxis",
            FormatError::Frame { .. } => "InvalidFrame",
            FormatError::Lattice(findings) => findings.first().map_or("InvalidLattice", Finding::kind),
        }
    }
}

fn fmt_index(index: &[usize]) -> String {
    format!("{index:?}")
}

#[derive(Debug, Serialize, Deserialize)]
struct LatticeDoc {
    version: u32,
    frame_rows: usize,
    frame_cols: usize,
    element_pitch_mm: f64,
    full_scale_kpa: f64,
    axes: Vec<AxisDoc>,
    frames: Vec<NodeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AxisDoc {
    name: String,
    unit: String,
    samples: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    index: Vec<usize>,
    values: Vec<f64>,
}

fn to_doc<T: Scalar>(lattice: &SampleLattice<T>) -> LatticeDoc {
    LatticeDoc {
        version: FORMAT_VERSION,
        frame_rows: lattice.frame_rows(),
        frame_cols: lattice.frame_cols(),
        element_pitch_mm: lattice.element_pitch_mm().as_f64(),
        full_scale_kpa: lattice.full_scale_kpa().as_f64(),
        axes: lattice
            .axes()
            .iter()
            .map(|a| AxisDoc {
                name: a.name().to_string(),
                unit: a.unit().to_string(),
                samples: a.samples().iter().map(|v| v.as_f64()).collect(),
            })
            .collect(),
        frames: lattice
            .node_indices()
            .map(|index| {
                let values = lattice.node_values(&index).expect("valid index").iter().map(|v| v.as_f64()).collect();
                NodeDoc { index, values }
            })
            .collect(),
    }
}

fn from_doc<T: Scalar>(doc: LatticeDoc) -> Result<SampleLattice<T>, FormatError> {
    if doc.version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(doc.version));
    }
    let axes = doc
        .axes
        .into_iter()
        .map(|a| AxisSpec::new(a.name, a.unit, a.samples.into_iter().map(T::of).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    let sensor = SensorInfo {
        frame_rows: doc.frame_rows,
        frame_cols: doc.frame_cols,
        element_pitch_mm: T::of(doc.element_pitch_mm),
        full_scale_kpa: T::of(doc.full_scale_kpa),
    };
    let mut draft = LatticeDraft::new(axes, sensor);
    for node in doc.frames {
        let values = node.values.into_iter().map(T::of).collect();
        match PressureFrame::new(doc.frame_rows, doc.frame_cols, values) {
            Ok(frame) => draft.push(node.index, frame),
            Err(source) => return Err(FormatError::Frame { index: node.index, source }),
        }
    }
    draft.build().map_err(|crate::LatticeError::Invalid(findings)| {
        FormatError::Lattice(findings.into_iter().filter(Finding::is_error).collect())
    })
}

pub fn read_lattice<T: Scalar, R: Read>(input: R) -> Result<SampleLattice<T>, FormatError> {
    let doc: LatticeDoc = serde_json::from_reader(input).map_err(|e| FormatError::Json(e.to_string()))?;
    from_doc(doc)
}

pub fn lattice_from_str<T: Scalar>(text: &str) -> Result<SampleLattice<T>, FormatError> {
    read_lattice(text.as_bytes())
}

pub fn load_lattice<T: Scalar>(path: impl AsRef<Path>) -> Result<SampleLattice<T>, FormatError> {
    let file = std::fs::File::open(path)?;
    read_lattice(std::io::BufReader::new(file))
}

pub fn write_lattice<T: Scalar, W: Write>(lattice: &SampleLattice<T>, mut out: W) -> Result<(), FormatError> {
    out.write_all(lattice_to_string(lattice).as_bytes())?;
    Ok(())
}

/// Serializes with one frame per line.
pub fn lattice_to_string<T: Scalar>(lattice: &SampleLattice<T>) -> String {
    let doc = to_doc(lattice);
    let mut s = String::from("{\n");
    s.push_str(&format!("  \"version\": {},\n", doc.version));
    s.push_str(&format!("  \"frame_rows\": {},\n", doc.frame_rows));
    s.push_str(&format!("  \"frame_cols\": {},\n", doc.frame_cols));
    s.push_str(&format!("  \"element_pitch_mm\": {},\n", json(&doc.element_pitch_mm)));
    s.push_str(&format!("  \"full_scale_kpa\": {},\n", json(&doc.full_scale_kpa)));
    s.push_str("  \"axes\": [\n");
    for (k, a) in doc.axes.iter().enumerate() {
        let sep = if k + 1 < doc.axes.len() { "," } else { "" };
        s.push_str(&format!("    {}{sep}\n", json(a)));
    }
    s.push_str("  ],\n  \"frames\": [\n");
    for (k, f) in doc.frames.iter().enumerate() {
        let sep = if k + 1 < doc.frames.len() { "," } else { "" };
        s.push_str(&format!("    {}{sep}\n", json(f)));
    }
    s.push_str("  ]\n}\n");
    s
}

pub fn save_lattice<T: Scalar>(lattice: &SampleLattice<T>, path: impl AsRef<Path>) -> Result<(), FormatError> {
    std::fs::write(path, lattice_to_string(lattice))?;
    Ok(())
}

fn json<S: Serialize>(v: &S) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}
