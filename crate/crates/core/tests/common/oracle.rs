//! Reference evaluations written straight from the interpolation
//! equations, sharing no code with the engine.

/// Linear scan for a bracketing pair `(i, i + 1)` with
/// `s[i] <= x <= s[i + 1]`. A single-sample axis gives `(0, 0)`.
pub fn bracket(samples: &[f64], x: f64) -> (usize, usize) {
    if samples.len() == 1 {
        return (0, 0);
    }
    for i in 0..samples.len() - 1 {
        if samples[i] <= x && x <= samples[i + 1] {
            return (i, i + 1);
        }
    }
    panic!("{x} outside {samples:?}");
}

/// The displayed bilinear scheme for one element: interpolate in theta
/// at both bracketing displacements, then in z between them.
#[allow(clippy::too_many_arguments)]
pub fn theta_first(
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
    z0: f64,
    z1: f64,
    th0: f64,
    th1: f64,
    z: f64,
    th: f64,
) -> f64 {
    let p_z0 = if th1 == th0 { p00 } else { p00 + (p01 - p00) / (th1 - th0) * (th - th0) };
    let p_z1 = if th1 == th0 { p10 } else { p10 + (p11 - p10) / (th1 - th0) * (th - th0) };
    if z1 == z0 {
        p_z0
    } else {
        p_z0 + (p_z1 - p_z0) / (z1 - z0) * (z - z0)
    }
}

/// Same blend, z first.
#[allow(clippy::too_many_arguments)]
pub fn z_first(p00: f64, p01: f64, p10: f64, p11: f64, z0: f64, z1: f64, th0: f64, th1: f64, z: f64, th: f64) -> f64 {
    let p_th0 = if z1 == z0 { p00 } else { p00 + (p10 - p00) / (z1 - z0) * (z - z0) };
    let p_th1 = if z1 == z0 { p01 } else { p01 + (p11 - p01) / (z1 - z0) * (z - z0) };
    if th1 == th0 {
        p_th0
    } else {
        p_th0 + (p_th1 - p_th0) / (th1 - th0) * (th - th0)
    }
}

/// Full frame on a 2-axis grid via [`theta_first`].
pub fn bilinear_frame(z_axis: &[f64], th_axis: &[f64], frames: &[Vec<f64>], z: f64, th: f64) -> Vec<f64> {
    let (k0, k1) = bracket(z_axis, z);
    let (l0, l1) = bracket(th_axis, th);
    let n = th_axis.len();
    let at = |k: usize, l: usize| &frames[k * n + l];
    (0..frames[0].len())
        .map(|i| {
            theta_first(
                at(k0, l0)[i],
                at(k0, l1)[i],
                at(k1, l0)[i],
                at(k1, l1)[i],
                z_axis[k0],
                z_axis[k1],
                th_axis[l0],
                th_axis[l1],
                z,
                th,
            )
        })
        .collect()
}

pub fn z_first_frame(z_axis: &[f64], th_axis: &[f64], frames: &[Vec<f64>], z: f64, th: f64) -> Vec<f64> {
    let (k0, k1) = bracket(z_axis, z);
    let (l0, l1) = bracket(th_axis, th);
    let n = th_axis.len();
    let at = |k: usize, l: usize| &frames[k * n + l];
    (0..frames[0].len())
        .map(|i| {
            z_first(
                at(k0, l0)[i],
                at(k0, l1)[i],
                at(k1, l0)[i],
                at(k1, l1)[i],
                z_axis[k0],
                z_axis[k1],
                th_axis[l0],
                th_axis[l1],
                z,
                th,
            )
        })
        .collect()
}

/// Brute-force 2^D corner blend: sum of corner values weighted by the
/// product of per-axis linear weights.
pub fn corner_blend(axes: &[Vec<f64>], frames: &[Vec<f64>], point: &[f64]) -> Vec<f64> {
    let d = axes.len();
    let brackets: Vec<(usize, usize, f64)> = axes
        .iter()
        .zip(point)
        .map(|(a, &x)| {
            let (i0, i1) = bracket(a, x);
            let t = if i0 == i1 { 0.0 } else { (x - a[i0]) / (a[i1] - a[i0]) };
            (i0, i1, t)
        })
        .collect();
    let mut out = vec![0.0; frames[0].len()];
    for mask in 0..(1usize << d) {
        let mut weight = 1.0;
        let mut flat = 0;
        for (k, &(i0, i1, t)) in brackets.iter().enumerate() {
            let upper = mask >> k & 1 == 1;
            weight *= if upper { t } else { 1.0 - t };
            flat = flat * axes[k].len() + if upper { i1 } else { i0 };
        }
        for (o, v) in out.iter_mut().zip(&frames[flat]) {
            *o += weight * v;
        }
    }
    out
}

/// The 2^D corner values of one element around `point`.
pub fn corner_values(axes: &[Vec<f64>], frames: &[Vec<f64>], point: &[f64], element: usize) -> Vec<f64> {
    let d = axes.len();
    let brackets: Vec<(usize, usize)> = axes.iter().zip(point).map(|(a, &x)| bracket(a, x)).collect();
    (0..(1usize << d))
        .map(|mask| {
            let flat = brackets
                .iter()
                .enumerate()
                .fold(0, |acc, (k, &(i0, i1))| acc * axes[k].len() + if mask >> k & 1 == 1 { i1 } else { i0 });
            frames[flat][element]
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
