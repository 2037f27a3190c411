//! Interpolation on tensor grids: trigonometric along periodic axes and
//! monotone piecewise-cubic (Fritsch–Carlson) along bounded axes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};

/// Weights `w_j` such that `Σ w_j f_j` is the trigonometric interpolant of
/// the samples `f_j = f(j L / n)` evaluated at `x` (even `n`, Nyquist mode split
/// symmetrically).
pub fn periodic_weights(n: usize, length: f64, x: f64) -> Vec<f64> {
    let h = length / n as f64;
    (0..n)
        .map(|j| {
            let theta = 2.0 * PI * (x - j as f64 * h) / length;
            let half = 0.5 * theta;
            let s = half.sin();
            if s.abs() < 1e-14 {
                // The kernel tends to 1 at every node (and its periodic images) for even n.
                1.0
            } else {
                (0.5 * n as f64 * theta).sin() * half.cos() / (n as f64 * s)
            }
        })
        .collect()
}

/// Monotone cubic Hermite interpolation of `(xs, ys)` at `x`.
pub fn pchip(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let k = match xs.iter().position(|&xi| xi > x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => n - 2,
    }
    .min(n - 2);
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let slope = |i: usize| -> f64 {
        if i == 0 {
            end_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], delta.get(1).copied().unwrap_or(delta[0]))
        } else if i == n - 1 {
            end_slope(h[n - 2], h[n.saturating_sub(3)], delta[n - 2], delta[n.saturating_sub(3)])
        } else if delta[i - 1] * delta[i] <= 0.0 {
            0.0
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i])
        }
    };
    let (d0, d1) = (slope(k), slope(k + 1));
    let t = (x - xs[k]) / h[k];
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * ys[k] + h10 * h[k] * d0 + h01 * ys[k + 1] + h11 * h[k] * d1
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Interpolates scalar samples `v` on `grid` at the coordinate tuple `point`
/// (one coordinate per axis).
pub fn interpolate(grid: &Grid, v: &[f64], point: &[f64]) -> Result<f64> {
    let mut data = v.to_vec();
    for d in (0..grid.ndim()).rev() {
        let a: &Axis = grid.axis(d);
        let n = a.points;
        let x = point[d];
        let reduced_len = data.len() / n;
        let mut next = vec![0.0; reduced_len];
        if a.periodic {
            let w = periodic_weights(n, a.length, x.rem_euclid(a.length));
            for (r, out) in next.iter_mut().enumerate() {
                *out = (0..n).map(|j| w[j] * data[r * n + j]).sum();
            }
        } else {
            let tol = 1e-12 * a.length;
            if x < -tol || x > a.length + tol {
                return Err(Error::OutOfRange { axis: a.name.clone(), value: x, lo: 0.0, hi: a.length });
            }
            let xs = a.coords();
            for (r, out) in next.iter_mut().enumerate() {
                *out = pchip(&xs, &data[r * n..(r + 1) * n], x.clamp(0.0, a.length));
            }
        }
        data = next;
    }
    Ok(data[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_weights_reproduce_band_limited_data() {
        let n = 16;
        let l = 3.0;
        let f = |x: f64| (2.0 * PI * x / l).sin() + 0.3 * (6.0 * PI * x / l).cos();
        let samples: Vec<f64> = (0..n).map(|j| f(j as f64 * l / n as f64)).collect();
        for &x in &[0.0, 0.1, 0.77, 1.5, 2.99, 3.4] {
            let w = periodic_weights(n, l, x);
            let v: f64 = w.iter().zip(&samples).map(|(a, b)| a * b).sum();
            assert!((v - f(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn periodic_weights_at_nodes_are_kronecker() {
        let w = periodic_weights(8, 2.0, 0.5);
        for (j, v) in w.iter().enumerate() {
            let e = if j == 2 { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-13);
        }
    }

    #[test]
    fn pchip_is_monotone_and_exact_on_lines() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pchip(&xs, &ys, 2.3) - 5.6).abs() < 1e-12);
        let ys2 = vec![0.0, 0.0, 1.0, 1.0, 1.0, 5.0];
        let mut prev = -1.0;
        for i in 0..=50 {
            let v = pchip(&xs, &ys2, i as f64 * 0.1);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
}
