//! Input axes of the sample lattice.

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AxisError {
    #[error("axis name must not be empty")]
    EmptyName,
    #[error("axis `{name}` has no samples")]
    NoSamples { name: String },
    #[error("axis `{name}` sample {index} is not finite")]
    NonFiniteSample { name: String, index: usize },
    #[error("axis `{name}` samples are not strictly increasing at index {index}")]
    NotIncreasing { name: String, index: usize },
}

/// One named input axis with strictly increasing sample coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec<T> {
    name: String,
    unit: String,
    samples: Vec<T>,
}

impl<T: Scalar> AxisSpec<T> {
    pub fn new(name: impl Into<String>, unit: impl Into<String>, samples: Vec<T>) -> Result<Self, AxisError> {
        let name = name.into();
        if name.is_empty() {
            return Err(AxisError::EmptyName);
        }
        if samples.is_empty() {
            return Err(AxisError::NoSamples { name });
        }
        for (index, s) in samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(AxisError::NonFiniteSample { name, index });
            }
        }
        for index in 1..samples.len() {
            if samples[index] <= samples[index - 1] {
                return Err(AxisError::NotIncreasing { name, index });
            }
        }
        Ok(Self { name, unit: unit.into(), samples })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; an axis holds at least one sample.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn min(&self) -> T {
        self.samples[0]
    }

    pub fn max(&self) -> T {
        self.samples[self.samples.len() - 1]
    }

    pub fn cast<U: Scalar>(&self) -> AxisSpec<U> {
        AxisSpec {
            name: self.name.clone(),
            unit: self.unit.clone(),
            samples: self.samples.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}
