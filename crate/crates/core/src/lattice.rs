//! The sample lattice: one measured frame per node of the Cartesian
//! product of all axis samples. This is the whole predictive model.
//!
//! Nodes are addressed by a tuple of per-axis sample indices. Storage is
//! dense in lexicographic node order (last axis varies fastest).

use std::fmt;

use thiserror::Error;

use crate::{AxisSpec, PressureFrame, Scalar};

/// Full-scale reading of the sensor array, kPa.
pub const FULL_SCALE_KPA: f64 = 82.87;
pub const DEFAULT_ELEMENT_PITCH_MM: f64 = 1.5;
pub const SENSOR_ROWS: usize = 16;
pub const SENSOR_COLS: usize = 15;
/// Axis count limit; a query blends 2^D corners.
pub const MAX_AXES: usize = 16;

/// One problem (or warning) found while validating a lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    NoAxes,
    TooManyAxes(usize),
    InvalidParameter(&'static str),
    DuplicateAxisName(String),
    /// A node index has the wrong number of components.
    IndexArity {
        index: Vec<usize>,
        expected: usize,
    },
    IndexOutOfRange(Vec<usize>),
    MissingNode(Vec<usize>),
    DuplicateNode(Vec<usize>),
    GeometryMismatch {
        index: Vec<usize>,
        rows: usize,
        cols: usize,
    },
    /// Number of element values above full scale. Not an error.
    SaturationWarning(usize),
}

impl Finding {
    pub fn is_error(&self) -> bool {
        !matches!(self, Finding::SaturationWarning(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Finding::NoAxes => "NoAxes",
            Finding::TooManyAxes(_) => "TooManyAxes",
            Finding::InvalidParameter(_) => "InvalidParameter",
            Finding::DuplicateAxisName(_) => "DuplicateAxisName",
            Finding::IndexArity { .. } => "IndexArity",
            Finding::IndexOutOfRange(_) => "IndexOutOfRange",
            Finding::MissingNode(_) => "MissingNode",
            Finding::DuplicateNode(_) => "DuplicateNode",
            Finding::GeometryMismatch { .. } => "GeometryMismatch",
            Finding::SaturationWarning(_) => "SaturationWarning",
        }
    }
}

struct Tuple<'a>(&'a [usize]);

impl fmt::Display for Tuple<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::NoAxes => write!(f, "NoAxes"),
            Finding::TooManyAxes(n) => write!(f, "TooManyAxes({n}, limit {MAX_AXES})"),
            Finding::InvalidParameter(what) => write!(f, "InvalidParameter({what})"),
            Finding::DuplicateAxisName(name) => write!(f, "DuplicateAxisName({name})"),
            Finding::IndexArity { index, expected } => {
                write!(f, "IndexArity({}, expected {expected} components)", Tuple(index))
            }
            Finding::IndexOutOfRange(index) => write!(f, "IndexOutOfRange({})", Tuple(index)),
            Finding::MissingNode(index) => write!(f, "MissingNode({})", Tuple(index)),
            Finding::DuplicateNode(index) => write!(f, "DuplicateNode({})", Tuple(index)),
            Finding::GeometryMismatch { index, rows, cols } => {
                write!(f, "GeometryMismatch({}: {rows}x{cols})", Tuple(index))
            }
            Finding::SaturationWarning(n) => write!(f, "SaturationWarning({n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("invalid lattice: {}", list(.0))]
    Invalid(Vec<Finding>),
}

fn list(findings: &[Finding]) -> String {
    findings.iter().map(Finding::to_string).collect::<Vec<_>>().join(", ")
}

/// One measured node before assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub index: Vec<usize>,
    pub frame: PressureFrame<T>,
}

/// Sensor parameters carried alongside the frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorInfo<T> {
    pub frame_rows: usize,
    pub frame_cols: usize,
    pub element_pitch_mm: T,
    pub full_scale_kpa: T,
}

impl<T: Scalar> SensorInfo<T> {
    /// The 16×15 array with default pitch and full scale.
    pub fn sensor_array() -> Self {
        Self::with_geometry(SENSOR_ROWS, SENSOR_COLS)
    }

    pub fn with_geometry(frame_rows: usize, frame_cols: usize) -> Self {
        Self {
            frame_rows,
            frame_cols,
            element_pitch_mm: T::of(DEFAULT_ELEMENT_PITCH_MM),
            full_scale_kpa: T::of(FULL_SCALE_KPA),
        }
    }
}

/// An unchecked collection of nodes. Holes, duplicates and geometry
/// mismatches are representable here; [`LatticeDraft::build`] turns a
/// clean draft into a [`SampleLattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDraft<T> {
    pub axes: Vec<AxisSpec<T>>,
    pub sensor: SensorInfo<T>,
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> LatticeDraft<T> {
    pub fn new(axes: Vec<AxisSpec<T>>, sensor: SensorInfo<T>) -> Self {
        Self { axes, sensor, nodes: Vec::new() }
    }

    pub fn push(&mut self, index: Vec<usize>, frame: PressureFrame<T>) {
        self.nodes.push(Node { index, frame });
    }

    pub fn validate(&self) -> Vec<Finding> {
        lattice_validate(self)
    }

    /// Assembles the dense lattice. Warnings do not block assembly.
    pub fn build(self) -> Result<SampleLattice<T>, LatticeError> {
        let findings = self.validate();
        if findings.iter().any(Finding::is_error) {
            return Err(LatticeError::Invalid(findings));
        }
        let shape: Vec<usize> = self.axes.iter().map(AxisSpec::len).collect();
        let strides = strides(&shape);
        let elements = self.sensor.frame_rows * self.sensor.frame_cols;
        let node_count: usize = shape.iter().product();
        let mut values = vec![T::zero(); node_count * elements];
        for node in &self.nodes {
            let flat = flat_index(&node.index, &strides);
            values[flat * elements..(flat + 1) * elements].copy_from_slice(node.frame.values());
        }
        Ok(SampleLattice { axes: self.axes, sensor: self.sensor, shape, strides, elements, values })
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

fn flat_index(index: &[usize], strides: &[usize]) -> usize {
    index.iter().zip(strides).map(|(i, s)| i * s).sum()
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut index = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        index[k] = flat % shape[k];
        flat /= shape[k];
    }
    index
}

/// Checks every structural invariant of a lattice. Returns an empty list
/// iff the draft describes a complete, consistent lattice with no
/// saturated values.
pub fn lattice_validate<T: Scalar>(draft: &LatticeDraft<T>) -> Vec<Finding> {
    let mut findings = Vec::new();
    let sensor = &draft.sensor;
    if draft.axes.is_empty() {
        findings.push(Finding::NoAxes);
    }
    if draft.axes.len() > MAX_AXES {
        findings.push(Finding::TooManyAxes(draft.axes.len()));
    }
    for (k, a) in draft.axes.iter().enumerate() {
        if draft.axes[..k].iter().any(|b| b.name() == a.name()) {
            findings.push(Finding::DuplicateAxisName(a.name().to_string()));
        }
    }
    if sensor.frame_rows == 0 || sensor.frame_cols == 0 {
        findings.push(Finding::InvalidParameter("frame geometry"));
    }
    if !(sensor.element_pitch_mm.is_finite() && sensor.element_pitch_mm > T::zero()) {
        findings.push(Finding::InvalidParameter("element_pitch_mm"));
    }
    if !(sensor.full_scale_kpa.is_finite() && sensor.full_scale_kpa > T::zero()) {
        findings.push(Finding::InvalidParameter("full_scale_kpa"));
    }
    if !findings.is_empty() {
        return findings;
    }

    let shape: Vec<usize> = draft.axes.iter().map(AxisSpec::len).collect();
    let strides = strides(&shape);
    let node_count: usize = shape.iter().product();
    let mut seen = vec![0usize; node_count];
    let mut saturated = 0;
    for node in &draft.nodes {
        if node.index.len() != shape.len() {
            findings.push(Finding::IndexArity { index: node.index.clone(), expected: shape.len() });
            continue;
        }
        if node.index.iter().zip(&shape).any(|(i, n)| i >= n) {
            findings.push(Finding::IndexOutOfRange(node.index.clone()));
            continue;
        }
        if node.frame.rows() != sensor.frame_rows || node.frame.cols() != sensor.frame_cols {
            findings.push(Finding::GeometryMismatch {
                index: node.index.clone(),
                rows: node.frame.rows(),
                cols: node.frame.cols(),
            });
        }
        seen[flat_index(&node.index, &strides)] += 1;
        saturated += node.frame.count_above(sensor.full_scale_kpa);
    }
    for (flat, &count) in seen.iter().enumerate() {
        if count > 1 {
            findings.push(Finding::DuplicateNode(unflatten(flat, &shape)));
        }
    }
    for (flat, &count) in seen.iter().enumerate() {
        if count == 0 {
            findings.push(Finding::MissingNode(unflatten(flat, &shape)));
        }
    }
    if saturated > 0 {
        findings.push(Finding::SaturationWarning(saturated));
    }
    findings
}

/// A complete, validated lattice. Immutable; share it freely.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleLattice<T> {
    axes: Vec<AxisSpec<T>>,
    sensor: SensorInfo<T>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    elements: usize,
    values: Vec<T>,
}

impl<T: Scalar> SampleLattice<T> {
    /// Builds a lattice from frames given in lexicographic node order.
    pub fn from_frames(
        axes: Vec<AxisSpec<T>>,
        sensor: SensorInfo<T>,
        frames: Vec<PressureFrame<T>>,
    ) -> Result<Self, LatticeError> {
        let shape: Vec<usize> = axes.iter().map(AxisSpec::len).collect();
        let mut draft = LatticeDraft::new(axes, sensor);
        for (flat, frame) in frames.into_iter().enumerate() {
            draft.push(unflatten(flat, &shape), frame);
        }
        draft.build()
    }

    /// Builds a lattice by evaluating `f` at every node index.
    pub fn from_fn<F>(axes: Vec<AxisSpec<T>>, sensor: SensorInfo<T>, mut f: F) -> Result<Self, LatticeError>
    where
        F: FnMut(&[usize]) -> PressureFrame<T>,
    {
        let shape: Vec<usize> = axes.iter().map(AxisSpec::len).collect();
        let count: usize = shape.iter().product();
        let mut draft = LatticeDraft::new(axes, sensor);
        for flat in 0..count {
            let index = unflatten(flat, &shape);
            let frame = f(&index);
            draft.push(index, frame);
        }
        draft.build()
    }

    pub fn axes(&self) -> &[AxisSpec<T>] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn sensor(&self) -> &SensorInfo<T> {
        &self.sensor
    }

    pub fn frame_rows(&self) -> usize {
        self.sensor.frame_rows
    }

    pub fn frame_cols(&self) -> usize {
        self.sensor.frame_cols
    }

    pub fn element_pitch_mm(&self) -> T {
        self.sensor.element_pitch_mm
    }

    pub fn full_scale_kpa(&self) -> T {
        self.sensor.full_scale_kpa
    }

    /// Elements per frame.
    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Position of a named axis.
    pub fn axis_position(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name() == name)
    }

    /// All node values, node-major, then row-major within each node.
    pub fn raw_values(&self) -> &[T] {
        &self.values
    }

    /// Node values by flat node index.
    #[inline]
    pub fn node_values_flat(&self, flat: usize) -> &[T] {
        &self.values[flat * self.elements..(flat + 1) * self.elements]
    }

    pub fn node_values(&self, index: &[usize]) -> Option<&[T]> {
        if index.len() != self.shape.len() || index.iter().zip(&self.shape).any(|(i, n)| i >= n) {
            return None;
        }
        Some(self.node_values_flat(flat_index(index, &self.strides)))
    }

    pub fn frame(&self, index: &[usize]) -> Option<PressureFrame<T>> {
        self.node_values(index)
            .map(|v| PressureFrame::from_trusted(self.sensor.frame_rows, self.sensor.frame_cols, v.to_vec()))
    }

    /// Axis coordinates of a node.
    pub fn node_coords(&self, index: &[usize]) -> Vec<T> {
        self.axes.iter().zip(index).map(|(a, &i)| a.samples()[i]).collect()
    }

    /// All node index tuples in lexicographic order.
    pub fn node_indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.node_count()).map(move |flat| unflatten(flat, &self.shape))
    }

    /// Coordinates of the node with every index at zero.
    pub fn min_corner(&self) -> Vec<T> {
        self.axes.iter().map(AxisSpec::min).collect()
    }

    pub fn max_corner(&self) -> Vec<T> {
        self.axes.iter().map(AxisSpec::max).collect()
    }

    /// Re-runs validation. Structural findings cannot occur on an
    /// assembled lattice, so only saturation can show up here.
    pub fn validate(&self) -> Vec<Finding> {
        let saturated = self.values.iter().filter(|&&v| v > self.sensor.full_scale_kpa).count();
        if saturated > 0 {
            vec![Finding::SaturationWarning(saturated)]
        } else {
            Vec::new()
        }
    }

    pub fn saturated_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > self.sensor.full_scale_kpa).count()
    }

    /// Back to the node-list form, in lexicographic order.
    pub fn to_draft(&self) -> LatticeDraft<T> {
        let mut draft = LatticeDraft::new(self.axes.clone(), self.sensor);
        for index in self.node_indices() {
            let frame = self.frame(&index).expect("index from node_indices");
            draft.push(index, frame);
        }
        draft
    }

    pub fn cast<U: Scalar>(&self) -> SampleLattice<U> {
        SampleLattice {
            axes: self.axes.iter().map(AxisSpec::cast).collect(),
            sensor: SensorInfo {
                frame_rows: self.sensor.frame_rows,
                frame_cols: self.sensor.frame_cols,
                element_pitch_mm: U::of(self.sensor.element_pitch_mm.as_f64()),
                full_scale_kpa: U::of(self.sensor.full_scale_kpa.as_f64()),
            },
            shape: self.shape.clone(),
            strides: self.strides.clone(),
            elements: self.elements,
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}
