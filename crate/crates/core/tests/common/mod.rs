#![allow(dead_code)]

pub mod oracle;

use padpress_core::lattice::SensorInfo;
use padpress_core::{AxisSpec, Lattice, PressureFrame};
use rand::Rng;

/// Raw test data: axis samples plus node frames in lexicographic order.
pub struct Grid {
    pub axes: Vec<Vec<f64>>,
    pub rows: usize,
    pub cols: usize,
    /// `frames[flat][element]`
    pub frames: Vec<Vec<f64>>,
}

impl Grid {
    pub fn random(rng: &mut impl Rng, shape: &[usize], rows: usize, cols: usize, max: f64) -> Self {
        let axes: Vec<Vec<f64>> = shape
            .iter()
            .map(|&n| {
                let mut x = rng.random_range(-5.0..5.0);
                (0..n)
                    .map(|_| {
                        let v = x;
                        x += rng.random_range(0.2..3.0);
                        v
                    })
                    .collect()
            })
            .collect();
        let nodes: usize = shape.iter().product();
        let frames = (0..nodes).map(|_| (0..rows * cols).map(|_| rng.random_range(0.0..max)).collect()).collect();
        Self { axes, rows, cols, frames }
    }

    pub fn flat(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.len() + i)
    }

    pub fn lattice(&self) -> Lattice {
        let axes = self
            .axes
            .iter()
            .enumerate()
            .map(|(k, s)| AxisSpec::new(format!("x{k}"), "u", s.clone()).unwrap())
            .collect();
        let frames = self.frames.iter().map(|f| PressureFrame::new(self.rows, self.cols, f.clone()).unwrap()).collect();
        Lattice::from_frames(axes, SensorInfo::with_geometry(self.rows, self.cols), frames).unwrap()
    }

    pub fn random_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.axes.iter().map(|a| if a.len() == 1 { a[0] } else { rng.random_range(a[0]..=a[a.len() - 1]) }).collect()
    }
}
