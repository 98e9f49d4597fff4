mod common;

use common::oracle;
use common::Grid;
use padpress_core::lattice::SensorInfo;
use padpress_core::{synth, AxisSpec, ClampFlag, Lattice, LatticeF32, Point, PressureFrame};
use proptest::prelude::*;

const ORACLE_TOL: f64 = 1e-9;

fn shape_strategy(max_axes: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=max_axes)
}

/// The four corners of a 2×2 lattice of 1×1 frames, hand evaluated.
#[test]
fn bilinear_hand_values() {
    let axes = vec![
        AxisSpec::new("z", "mm", vec![0.0, 1.0]).unwrap(),
        AxisSpec::new("theta", "deg", vec![15.0, 45.0]).unwrap(),
    ];
    let corners = [[0.0, 10.0], [20.0, 30.0]];
    let lattice = Lattice::from_fn(axes, SensorInfo::with_geometry(1, 1), |ix| {
        PressureFrame::new(1, 1, vec![corners[ix[0]][ix[1]]]).unwrap()
    })
    .unwrap();
    // weights (0.75*0.75, 0.75*0.25, 0.25*0.75, 0.25*0.25) on (0, 10, 20, 30)
    let cases =
        [([0.5, 30.0], 15.0), ([0.25, 22.5], 7.5), ([1.0, 15.0], 20.0), ([0.0, 45.0], 10.0), ([0.5, 45.0], 20.0)];
    for (p, want) in cases {
        let (frame, _) = lattice.query(&Point::from(p)).unwrap();
        assert!((frame.values()[0] - want).abs() < 1e-12, "{p:?}: {} vs {want}", frame.values()[0]);
    }
}

#[test]
fn matches_displayed_equations_on_schedule_lattices() {
    let mut rng = synth::rng(11);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let mut grid = Grid::random(&mut rng, &[4, 3], 16, 15, 82.87);
        grid.axes = vec![vec![0.0, 0.5, 1.0, 1.5], vec![15.0, 30.0, 45.0]];
        let lattice = grid.lattice();
        for _ in 0..1000 {
            let p = grid.random_point(&mut rng);
            let want = oracle::bilinear_frame(&grid.axes[0], &grid.axes[1], &grid.frames, p[0], p[1]);
            let (got, report) = lattice.query(&Point::new(p.clone())).unwrap();
            assert!(!report.any_clamped());
            worst = worst.max(oracle::max_abs_diff(got.values(), &want));
        }
    }
    assert!(worst <= ORACLE_TOL, "max abs diff {worst}");
}

#[test]
fn axis_order_does_not_matter() {
    let mut rng = synth::rng(12);
    let grid = Grid::random(&mut rng, &[4, 3], 16, 15, 82.87);
    let lattice = grid.lattice();
    for _ in 0..500 {
        let p = grid.random_point(&mut rng);
        let (got, _) = lattice.query(&Point::new(p.clone())).unwrap();
        let a = oracle::bilinear_frame(&grid.axes[0], &grid.axes[1], &grid.frames, p[0], p[1]);
        let b = oracle::z_first_frame(&grid.axes[0], &grid.axes[1], &grid.frames, p[0], p[1]);
        assert!(oracle::max_abs_diff(got.values(), &a) <= 1e-12 * 82.87);
        assert!(oracle::max_abs_diff(&a, &b) <= 1e-12 * 82.87);
    }
}

#[test]
fn six_axes_match_corner_blend() {
    let mut rng = synth::rng(13);
    let grid = Grid::random(&mut rng, &[2; 6], 2, 2, 82.87);
    let lattice = grid.lattice();
    for _ in 0..1000 {
        let p = grid.random_point(&mut rng);
        let want = oracle::corner_blend(&grid.axes, &grid.frames, &p);
        let (got, _) = lattice.query(&Point::new(p)).unwrap();
        assert!(oracle::max_abs_diff(got.values(), &want) <= ORACLE_TOL);
    }
}

#[test]
fn batch_equals_repeated_query() {
    let mut rng = synth::rng(14);
    let lattice = synth::random_protocol_lattice(&mut rng);
    let points: Vec<Point> = (0..100_000).map(|_| synth::random_point(&mut rng, &lattice)).collect();
    let batch = lattice.query_batch(&points).unwrap();
    assert_eq!(batch.len(), points.len());
    for (p, got) in points.iter().zip(&batch).step_by(7) {
        assert_eq!(&lattice.query(p).unwrap(), got);
    }
    let p = points[0].clone();
    let twice = lattice.query_batch(&[p.clone(), p]).unwrap();
    assert_eq!(twice[0], twice[1]);
}

#[test]
fn f32_engine_agrees_with_f64_oracle() {
    let mut rng = synth::rng(15);
    let grid = Grid::random(&mut rng, &[4, 3], 16, 15, 82.87);
    let lattice: LatticeF32 = grid.lattice().cast();
    for index in lattice.node_indices().collect::<Vec<_>>() {
        let coords = lattice.node_coords(&index);
        let (got, _) = lattice.query(&coords.into()).unwrap();
        assert_eq!(got.values(), lattice.node_values(&index).unwrap());
    }
    for _ in 0..200 {
        let p = grid.random_point(&mut rng);
        let want = oracle::bilinear_frame(&grid.axes[0], &grid.axes[1], &grid.frames, p[0], p[1]);
        let p32: Vec<f32> = p.iter().map(|&v| v as f32).collect();
        let (got, _) = lattice.query(&p32.into()).unwrap();
        let got: Vec<f64> = got.values().iter().map(|&v| v as f64).collect();
        // f32 coordinates shift t by up to ~1e-7 relative; values reach ~83 kPa.
        assert!(oracle::max_abs_diff(&got, &want) < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nodes_are_reproduced(shape in shape_strategy(4), seed in any::<u64>()) {
        let mut rng = synth::rng(seed);
        let grid = Grid::random(&mut rng, &shape, 3, 2, 100.0);
        let lattice = grid.lattice();
        for index in lattice.node_indices().collect::<Vec<_>>() {
            let (frame, report) = lattice.query(&lattice.node_coords(&index).into()).unwrap();
            prop_assert!(!report.any_clamped());
            for (got, want) in frame.values().iter().zip(&grid.frames[grid.flat(&index)]) {
                prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn output_is_a_convex_combination(shape in shape_strategy(4), seed in any::<u64>()) {
        let mut rng = synth::rng(seed);
        let grid = Grid::random(&mut rng, &shape, 2, 3, 82.87);
        let lattice = grid.lattice();
        for _ in 0..50 {
            let p = grid.random_point(&mut rng);
            let (frame, _) = lattice.query(&Point::new(p.clone())).unwrap();
            for (e, &v) in frame.values().iter().enumerate() {
                let corners = oracle::corner_values(&grid.axes, &grid.frames, &p, e);
                let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(v >= lo && v <= hi, "{v} outside [{lo}, {hi}]");
                prop_assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn affine_along_each_axis_within_a_cell(seed in any::<u64>(), axis in 0usize..2, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let mut rng = synth::rng(seed);
        let grid = Grid::random(&mut rng, &[4, 3], 2, 2, 82.87);
        let lattice = grid.lattice();
        let base = grid.random_point(&mut rng);
        let samples = &grid.axes[axis];
        let (i0, _) = oracle::bracket(samples, base[axis]);
        let (x0, x1) = (samples[i0], samples[i0 + 1]);
        let (lo, hi) = (a.min(b), a.max(b));
        let xs = [x0 + lo * (x1 - x0), x0 + 0.5 * (lo + hi) * (x1 - x0), x0 + hi * (x1 - x0)];
        let frames: Vec<Vec<f64>> = xs
            .iter()
            .map(|&x| {
                let mut p = base.clone();
                p[axis] = x;
                lattice.query(&Point::new(p)).unwrap().0.into_values()
            })
            .collect();
        for ((lo, m), hi) in frames[0].iter().zip(&frames[1]).zip(&frames[2]) {
            prop_assert!((m - 0.5 * (lo + hi)).abs() <= 1e-9);
        }
    }

    #[test]
    fn elements_are_independent(seed in any::<u64>(), element in 0usize..6, bump in 0.1f64..50.0) {
        let mut rng = synth::rng(seed);
        let mut grid = Grid::random(&mut rng, &[3, 3], 2, 3, 82.87);
        let before = grid.lattice();
        for f in grid.frames.iter_mut() {
            f[element] += bump;
        }
        let after = grid.lattice();
        for _ in 0..20 {
            let p = Point::new(grid.random_point(&mut rng));
            let (a, _) = before.query(&p).unwrap();
            let (b, _) = after.query(&p).unwrap();
            for e in 0..6 {
                if e == element {
                    prop_assert!(b.values()[e] > a.values()[e]);
                } else {
                    prop_assert_eq!(a.values()[e], b.values()[e]);
                }
            }
        }
    }

    #[test]
    fn out_of_range_points_clamp(shape in shape_strategy(3), seed in any::<u64>(), offsets in prop::collection::vec(-20.0f64..20.0, 3)) {
        let mut rng = synth::rng(seed);
        let grid = Grid::random(&mut rng, &shape, 2, 2, 82.87);
        let lattice = grid.lattice();
        let inside = grid.random_point(&mut rng);
        let raw: Vec<f64> = inside.iter().zip(&offsets).map(|(x, o)| x + o).collect();
        let (frame, report) = lattice.query(&Point::new(raw.clone())).unwrap();
        let clamped: Vec<f64> = raw
            .iter()
            .zip(&grid.axes)
            .map(|(&x, a)| x.clamp(a[0], a[a.len() - 1]))
            .collect();
        let (want, want_report) = lattice.query(&Point::new(clamped.clone())).unwrap();
        prop_assert_eq!(frame.values(), want.values());
        prop_assert!(!want_report.any_clamped());
        prop_assert_eq!(report.coords(), clamped);
        for ((flag, &x), a) in report.flags().zip(&raw).zip(&grid.axes) {
            let expect = if x < a[0] {
                ClampFlag::Below
            } else if x > a[a.len() - 1] {
                ClampFlag::Above
            } else {
                ClampFlag::Inside
            };
            prop_assert_eq!(flag, expect);
        }
    }
}
