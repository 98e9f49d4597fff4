//! Pressure frames: one R×C grid of element pressures in kPa.
//!
//! Element `i` of a frame is the row-major flat index `row * cols + col`.

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("frame geometry must be at least 1x1, got {rows}x{cols}")]
    EmptyGeometry { rows: usize, cols: usize },
    #[error("expected {expected} values for the frame geometry, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("element {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("element {index} is negative")]
    NegativePressure { index: usize },
    #[error("element pitch must be positive and finite")]
    InvalidPitch,
}

/// A validated R×C pressure grid. Values are finite and non-negative;
/// they may exceed the sensor full scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureFrame<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> PressureFrame<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Result<Self, FrameError> {
        if rows == 0 || cols == 0 {
            return Err(FrameError::EmptyGeometry { rows, cols });
        }
        let expected = rows * cols;
        if values.len() != expected {
            return Err(FrameError::DimensionMismatch { expected, got: values.len() });
        }
        validate_values(&values)?;
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self, FrameError> {
        Self::new(rows, cols, vec![T::zero(); rows * cols])
    }

    /// Builds a frame from values the caller already knows are valid,
    /// e.g. the output of a convex blend of valid frames.
    pub(crate) fn from_trusted(rows: usize, cols: usize, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        if row < self.rows && col < self.cols {
            Some(self.values[row * self.cols + col])
        } else {
            None
        }
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn count_above(&self, limit: T) -> usize {
        self.values.iter().filter(|&&v| v > limit).count()
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn stats(&self, element_pitch_mm: T) -> Result<FrameStats<T>, FrameError> {
        frame_stats(self, element_pitch_mm)
    }

    /// Converts to another scalar precision.
    pub fn cast<U: Scalar>(&self) -> PressureFrame<U> {
        PressureFrame {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

pub(crate) fn validate_values<T: Scalar>(values: &[T]) -> Result<(), FrameError> {
    for (index, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(FrameError::NonFiniteValue { index });
        }
        if v < T::zero() {
            return Err(FrameError::NegativePressure { index });
        }
    }
    Ok(())
}

/// Summary statistics of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStats<T> {
    pub min_kpa: T,
    pub max_kpa: T,
    pub mean_kpa: T,
    /// Sum of element pressures times element area, treating pitch² as
    /// the element area.
    pub resultant_force_n: T,
}

pub fn frame_stats<T: Scalar>(frame: &PressureFrame<T>, element_pitch_mm: T) -> Result<FrameStats<T>, FrameError> {
    if !(element_pitch_mm.is_finite() && element_pitch_mm > T::zero()) {
        return Err(FrameError::InvalidPitch);
    }
    let values = frame.values();
    let min_kpa = values.iter().copied().fold(T::infinity(), T::min);
    let max_kpa = values.iter().copied().fold(T::neg_infinity(), T::max);
    let total = frame.sum();
    let mean_kpa = total / T::of(values.len() as f64);
    let pitch_m = element_pitch_mm / T::of(1000.0);
    let resultant_force_n = total * T::of(1000.0) * pitch_m * pitch_m;
    Ok(FrameStats { min_kpa, max_kpa, mean_kpa, resultant_force_n })
}
