//! Per-element multilinear interpolation over a [`SampleLattice`].
//!
//! Every element of the output frame is blended independently from the
//! 2^D corner frames of the lattice cell containing the query point. The
//! blend is a nested sequence of linear interpolations, last axis first:
//! for a (z, theta) lattice each element is first interpolated along
//! theta at both bracketing displacements, then along z between those
//! two intermediates.
//!
//! Coordinates outside an axis range are clamped to the nearest end
//! sample, never extrapolated. The [`ClampReport`] returned with every
//! frame says which axes were clamped.

use smallvec::SmallVec;
use thiserror::Error;

use crate::{AxisSpec, PressureFrame, SampleLattice, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("query has {got} coordinates, lattice has {expected} axes")]
    ArityMismatch { expected: usize, got: usize },
    #[error("coordinate for axis {axis} is not finite")]
    NonFiniteCoordinate { axis: usize },
    #[error("output buffer holds {got} elements, frame has {expected}")]
    BufferMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("query {index} failed: {source}")]
pub struct BatchError {
    pub index: usize,
    #[source]
    pub source: InterpError,
}

/// A point in input space, one coordinate per lattice axis, in axis
/// order and axis units.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPoint<T> {
    coords: Vec<T>,
}

impl<T: Scalar> QueryPoint<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dims(&self) -> usize {
        self.coords.len()
    }
}

impl<T: Scalar> From<Vec<T>> for QueryPoint<T> {
    fn from(coords: Vec<T>) -> Self {
        Self::new(coords)
    }
}

impl<T: Scalar, const N: usize> From<[T; N]> for QueryPoint<T> {
    fn from(coords: [T; N]) -> Self {
        Self::new(coords.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClampFlag {
    Below,
    Inside,
    Above,
}

impl ClampFlag {
    pub fn is_clamped(self) -> bool {
        self != ClampFlag::Inside
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClampFlag::Below => "below",
            ClampFlag::Inside => "inside",
            ClampFlag::Above => "above",
        }
    }
}

/// The lattice cell bracketing one coordinate along one axis.
///
/// `upper` is `lower` or `lower + 1`; `t` is zero whenever they match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellLocation<T> {
    pub lower: usize,
    pub upper: usize,
    pub t: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisClamp<T> {
    pub flag: ClampFlag,
    /// Coordinate actually used for interpolation.
    pub coord: T,
}

/// A predicted frame with its clamp report.
pub type Prediction<T> = (PressureFrame<T>, ClampReport<T>);

/// Per-axis clamp flags for one query, in axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampReport<T> {
    pub axes: Vec<AxisClamp<T>>,
}

impl<T: Scalar> ClampReport<T> {
    pub fn any_clamped(&self) -> bool {
        self.axes.iter().any(|a| a.flag.is_clamped())
    }

    pub fn flags(&self) -> impl Iterator<Item = ClampFlag> + '_ {
        self.axes.iter().map(|a| a.flag)
    }

    /// The clamped point.
    pub fn coords(&self) -> Vec<T> {
        self.axes.iter().map(|a| a.coord).collect()
    }
}

/// Finds the cell of `axis` containing `x`.
///
/// Cells are right-open at interior samples: `x == samples[j]` gives
/// `(j, j + 1, t = 0)`. The last sample closes the final cell with
/// `t = 1`. A single-sample axis is constant: `(0, 0, t = 0)`.
pub fn locate_cell<T: Scalar>(axis: &AxisSpec<T>, x: T) -> Result<(CellLocation<T>, ClampFlag), InterpError> {
    if !x.is_finite() {
        return Err(InterpError::NonFiniteCoordinate { axis: 0 });
    }
    Ok(locate_finite(axis.samples(), x))
}

#[inline]
fn locate_finite<T: Scalar>(samples: &[T], x: T) -> (CellLocation<T>, ClampFlag) {
    let last = samples.len() - 1;
    let zero = T::zero();
    if x < samples[0] {
        return (CellLocation { lower: 0, upper: 0, t: zero }, ClampFlag::Below);
    }
    if x > samples[last] {
        return (CellLocation { lower: last, upper: last, t: zero }, ClampFlag::Above);
    }
    if last == 0 {
        return (CellLocation { lower: 0, upper: 0, t: zero }, ClampFlag::Inside);
    }
    // Largest j with samples[j] <= x; at least 0 because x >= samples[0].
    let j = samples.partition_point(|&s| s <= x) - 1;
    if j == last {
        return (CellLocation { lower: last - 1, upper: last, t: T::one() }, ClampFlag::Inside);
    }
    let (x0, x1) = (samples[j], samples[j + 1]);
    let t = (x - x0) / (x1 - x0);
    (CellLocation { lower: j, upper: j + 1, t }, ClampFlag::Inside)
}

fn clamp_coord<T: Scalar>(axis: &AxisSpec<T>, x: T, flag: ClampFlag) -> T {
    match flag {
        ClampFlag::Below => axis.min(),
        ClampFlag::Above => axis.max(),
        ClampFlag::Inside => x,
    }
}

type Cells<T> = SmallVec<[CellLocation<T>; 8]>;

impl<T: Scalar> SampleLattice<T> {
    /// Locates the query point along every axis.
    pub fn locate(&self, coords: &[T]) -> Result<(Vec<CellLocation<T>>, ClampReport<T>), InterpError> {
        let (cells, report) = self.locate_inner(coords)?;
        Ok((cells.into_vec(), report))
    }

    fn locate_inner(&self, coords: &[T]) -> Result<(Cells<T>, ClampReport<T>), InterpError> {
        let d = self.dims();
        if coords.len() != d {
            return Err(InterpError::ArityMismatch { expected: d, got: coords.len() });
        }
        let mut cells = Cells::new();
        let mut axes = Vec::with_capacity(d);
        for (k, (axis, &x)) in self.axes().iter().zip(coords).enumerate() {
            if !x.is_finite() {
                return Err(InterpError::NonFiniteCoordinate { axis: k });
            }
            let (cell, flag) = locate_finite(axis.samples(), x);
            cells.push(cell);
            axes.push(AxisClamp { flag, coord: clamp_coord(axis, x, flag) });
        }
        Ok((cells, ClampReport { axes }))
    }

    /// Predicts the full frame at `point`.
    pub fn query(&self, point: &QueryPoint<T>) -> Result<Prediction<T>, InterpError> {
        let mut out = vec![T::zero(); self.elements()];
        let report = self.query_into(point.coords(), &mut out)?;
        let frame = PressureFrame::from_trusted(self.frame_rows(), self.frame_cols(), out);
        Ok((frame, report))
    }

    /// Allocation-free form of [`SampleLattice::query`]: writes the
    /// predicted frame into `out`, row-major.
    pub fn query_into(&self, coords: &[T], out: &mut [T]) -> Result<ClampReport<T>, InterpError> {
        if out.len() != self.elements() {
            return Err(InterpError::BufferMismatch { expected: self.elements(), got: out.len() });
        }
        let (cells, report) = self.locate_inner(coords)?;
        self.blend(&cells, out);
        Ok(report)
    }

    fn blend(&self, cells: &[CellLocation<T>], out: &mut [T]) {
        let d = cells.len();
        let elements = self.elements();
        let strides = self.strides();

        // Corner c selects the upper sample on axis k when bit (d-1-k) is
        // set, so the first half of the corners is the lower side of
        // axis 0.
        let offsets: SmallVec<[usize; 64]> = (0..1usize << d)
            .map(|c| {
                let node: usize = (0..d)
                    .map(|k| {
                        let upper = (c >> (d - 1 - k)) & 1 == 1;
                        let i = if upper { cells[k].upper } else { cells[k].lower };
                        i * strides[k]
                    })
                    .sum();
                node * elements
            })
            .collect();
        let mut scratch = vec![T::zero(); d.saturating_sub(1) * elements];
        reduce(self.raw_values(), elements, &offsets, cells, out, &mut scratch);
    }

    /// Queries every point in order. Stops at the first failing point.
    pub fn query_batch(&self, points: &[QueryPoint<T>]) -> Result<Vec<Prediction<T>>, BatchError> {
        points
            .iter()
            .enumerate()
            .map(|(index, p)| self.query(p).map_err(|source| BatchError { index, source }))
            .collect()
    }
}

/// Blends the corner frames at `offsets` into `out`, innermost axis
/// first. `scratch` holds one frame per axis beyond the first.
fn reduce<T: Scalar>(
    values: &[T],
    elements: usize,
    offsets: &[usize],
    cells: &[CellLocation<T>],
    out: &mut [T],
    scratch: &mut [T],
) {
    let frame = |off: usize| &values[off..off + elements];
    match cells {
        [] => out.copy_from_slice(frame(offsets[0])),
        [cell] => lerp_frames(out, frame(offsets[0]), frame(offsets[1]), cell.t),
        [cell, rest @ ..] => {
            let half = offsets.len() / 2;
            let (upper, scratch) = scratch.split_at_mut(elements);
            reduce(values, elements, &offsets[..half], rest, out, scratch);
            reduce(values, elements, &offsets[half..], rest, upper, scratch);
            for (o, &u) in out.iter_mut().zip(upper.iter()) {
                *o = T::lerp(*o, u, cell.t);
            }
        }
    }
}

fn lerp_frames<T: Scalar>(out: &mut [T], lower: &[T], upper: &[T], t: T) {
    for ((o, &a), &b) in out.iter_mut().zip(lower).zip(upper) {
        *o = T::lerp(a, b, t);
    }
}

/// Free-function form of [`SampleLattice::query`].
pub fn query<T: Scalar>(lattice: &SampleLattice<T>, point: &QueryPoint<T>) -> Result<Prediction<T>, InterpError> {
    lattice.query(point)
}

/// Free-function form of [`SampleLattice::query_batch`].
pub fn query_batch<T: Scalar>(
    lattice: &SampleLattice<T>,
    points: &[QueryPoint<T>],
) -> Result<Vec<Prediction<T>>, BatchError> {
    lattice.query_batch(points)
}
