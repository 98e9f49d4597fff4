//! Synthetic lattices and capture sessions for tests, benchmarks and
//! demos. No measured dataset ships with the crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::BASELINE_THRESHOLD_KPA;
use crate::lattice::{SensorInfo, FULL_SCALE_KPA, SENSOR_COLS, SENSOR_ROWS};
use crate::{AxisSpec, CaptureSession, Condition, PressureFrame, QueryPoint, RawSample, SampleLattice};

pub use rand_chacha::ChaCha8Rng as SynthRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Displacement schedule of the reference protocol, mm.
pub const PROTOCOL_Z_MM: [f64; 4] = [0.0, 0.5, 1.0, 1.5];
/// Plate angles of the reference protocol, degrees.
pub const PROTOCOL_ANGLES_DEG: [f64; 3] = [15.0, 30.0, 45.0];

/// The (z, theta) axes of the reference protocol.
pub fn protocol_axes() -> Vec<AxisSpec<f64>> {
    vec![
        AxisSpec::new("z", "mm", PROTOCOL_Z_MM.to_vec()).expect("increasing"),
        AxisSpec::new("theta", "deg", PROTOCOL_ANGLES_DEG.to_vec()).expect("increasing"),
    ]
}

/// Strictly increasing random samples starting near `start`.
pub fn random_axis(rng: &mut impl Rng, name: &str, len: usize, start: f64) -> AxisSpec<f64> {
    let mut x = start + rng.random_range(-1.0..1.0);
    let samples = (0..len)
        .map(|_| {
            let v = x;
            x += rng.random_range(0.1..2.0);
            v
        })
        .collect();
    AxisSpec::new(name, "u", samples).expect("increasing by construction")
}

pub fn random_frame(rng: &mut impl Rng, rows: usize, cols: usize, max_kpa: f64) -> PressureFrame<f64> {
    let values = (0..rows * cols).map(|_| rng.random_range(0.0..max_kpa)).collect();
    PressureFrame::new(rows, cols, values).expect("valid random frame")
}

/// Lattice with random axes of the given lengths and uniform random
/// frames in `[0, max_kpa)`.
pub fn random_lattice(
    rng: &mut impl Rng,
    shape: &[usize],
    rows: usize,
    cols: usize,
    max_kpa: f64,
) -> SampleLattice<f64> {
    let axes = shape.iter().enumerate().map(|(k, &n)| random_axis(rng, &format!("x{k}"), n, 10.0 * k as f64)).collect();
    SampleLattice::from_fn(axes, SensorInfo::with_geometry(rows, cols), |_| random_frame(rng, rows, cols, max_kpa))
        .expect("complete by construction")
}

/// Random frames on the reference (z, theta) schedule with the 16×15
/// sensor geometry, values below full scale.
pub fn random_protocol_lattice(rng: &mut impl Rng) -> SampleLattice<f64> {
    SampleLattice::from_fn(protocol_axes(), SensorInfo::sensor_array(), |_| {
        random_frame(rng, SENSOR_ROWS, SENSOR_COLS, FULL_SCALE_KPA)
    })
    .expect("complete by construction")
}

/// Uniform random point inside the lattice's axis ranges.
pub fn random_point(rng: &mut impl Rng, lattice: &SampleLattice<f64>) -> QueryPoint<f64> {
    QueryPoint::new(
        lattice
            .axes()
            .iter()
            .map(|a| if a.len() == 1 { a.min() } else { rng.random_range(a.min()..=a.max()) })
            .collect(),
    )
}

/// Smooth contact patch: a Gaussian blob that grows with displacement
/// and slides along the rows with plate angle. Peak exceeds the baseline
/// threshold already at `z = 0`.
pub fn contact_model(z_mm: f64, angle_deg: f64, rows: usize, cols: usize) -> PressureFrame<f64> {
    let peak = 2.0 * BASELINE_THRESHOLD_KPA + 30.0 * z_mm + 0.2 * angle_deg;
    let center_r = (rows as f64 - 1.0) * (0.3 + 0.4 * angle_deg / 90.0);
    let center_c = (cols as f64 - 1.0) / 2.0;
    let spread = 1.5 + 1.5 * z_mm;
    let values = (0..rows * cols)
        .map(|i| {
            let dr = (i / cols) as f64 - center_r;
            let dc = (i % cols) as f64 - center_c;
            peak * (-(dr * dr + dc * dc) / (2.0 * spread * spread)).exp()
        })
        .collect();
    PressureFrame::new(rows, cols, values).expect("positive model")
}

/// Parameters of one synthetic measurement protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub angles_deg: Vec<f64>,
    /// Baseline-relative displacement of every hold, mm.
    pub z_steps_mm: Vec<f64>,
    pub samples_per_hold: usize,
    /// Sub-threshold samples recorded while approaching contact.
    pub approach_samples: usize,
    pub rows: usize,
    pub cols: usize,
    pub sample_period_s: f64,
    /// Uniform noise amplitude added to every element, kPa.
    pub noise_kpa: f64,
    pub seed: u64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            angles_deg: PROTOCOL_ANGLES_DEG.to_vec(),
            z_steps_mm: PROTOCOL_Z_MM.to_vec(),
            samples_per_hold: 5,
            approach_samples: 6,
            rows: SENSOR_ROWS,
            cols: SENSOR_COLS,
            sample_period_s: 0.01,
            noise_kpa: 0.05,
            seed: 7,
        }
    }
}

/// One session at plate angle `angles_deg[angle_index]`.
///
/// The stage origin differs per session so the baseline shift matters.
/// Approach samples carry `hold_id` 0; hold `k` of the schedule carries
/// `hold_id` `k + 1`.
pub fn protocol_session(params: &ProtocolParams, angle_index: usize) -> CaptureSession<f64> {
    let mut rng = rng(params.seed ^ (angle_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let angle = params.angles_deg[angle_index];
    let origin = 3.0 + 0.37 * angle_index as f64;
    let mut samples = Vec::new();
    let mut t = 0.0;
    let mut push = |stage: f64, hold_id: u64, frame: PressureFrame<f64>, t: &mut f64| {
        samples.push(RawSample {
            t_s: *t,
            condition: Condition { angle_deg: angle, stage_z_mm: stage, hold_id },
            frame,
        });
        *t += params.sample_period_s;
    };

    for k in 0..params.approach_samples {
        let frac = (k + 1) as f64 / (params.approach_samples + 1) as f64;
        let stage = origin - 0.05 * (params.approach_samples - k) as f64;
        // Scale the contact shape so the peak stays below threshold.
        let shape = contact_model(0.0, angle, params.rows, params.cols);
        let scale = 0.8 * BASELINE_THRESHOLD_KPA * frac / shape.max_value();
        let values = shape.values().iter().map(|v| v * scale).collect();
        push(stage, 0, PressureFrame::new(params.rows, params.cols, values).expect("scaled model"), &mut t);
    }
    for (k, &z) in params.z_steps_mm.iter().enumerate() {
        let clean = contact_model(z, angle, params.rows, params.cols);
        for _ in 0..params.samples_per_hold {
            let values =
                clean.values().iter().map(|&v| (v + params.noise_kpa * rng.random_range(-1.0..1.0)).max(0.0)).collect();
            let frame = PressureFrame::new(params.rows, params.cols, values).expect("non-negative");
            push(origin + z, (k + 1) as u64, frame, &mut t);
        }
    }
    CaptureSession::new(samples).expect("ordered by construction")
}

pub fn protocol_sessions(params: &ProtocolParams) -> Vec<CaptureSession<f64>> {
    (0..params.angles_deg.len()).map(|i| protocol_session(params, i)).collect()
}
