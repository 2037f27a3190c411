//! Periodic pseudo-spectral operators: differentiation, the mean-zero
//! antiderivative, mean-zero projection and 2/3-rule dealiasing.
//!
//! Fields are stored as reals. Transforms run along the periodic axes with
//! complex FFTs and the real part is taken on the way back, which enforces
//! conjugate symmetry. The Nyquist mode is zeroed by every odd-order
//! operator so that odd derivatives of real data stay real.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{l2_norm, Field, Grid};

/// Relative tolerance on the line mean accepted by the antiderivative,
/// measured against the L² norm of the input.
pub const MEAN_TOLERANCE: f64 = 1e-10;

type Plan = Arc<dyn Fft<f64>>;

/// Cached transforms and wavenumbers for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    shape: Vec<usize>,
    strides: Vec<usize>,
    plans: Vec<Option<(Plan, Plan)>>,
    wavenumbers: Vec<Vec<f64>>,
    signed: Vec<Vec<i64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("shape", &self.shape).finish()
    }
}

impl Spectral {
    /// Plans transforms for every periodic axis of `grid`.
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let mut plans = Vec::new();
        let mut wavenumbers = Vec::new();
        let mut signed = Vec::new();
        for a in grid.axes() {
            let n = a.points;
            let s: Vec<i64> = (0..n).map(|m| if m <= n / 2 { m as i64 } else { m as i64 - n as i64 }).collect();
            wavenumbers.push(s.iter().map(|&m| 2.0 * PI * m as f64 / a.length).collect());
            signed.push(s);
            plans.push(if a.periodic {
                Some((planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
            } else {
                None
            });
        }
        Spectral { grid: grid.clone(), shape: grid.shape(), strides: grid.strides(), plans, wavenumbers, signed }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Angular wavenumber `2πm/L` of index `i` along `axis` (Nyquist taken positive).
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        self.wavenumbers[axis][i]
    }

    /// Signed integer mode number of index `i` along `axis`.
    pub fn mode(&self, axis: usize, i: usize) -> i64 {
        self.signed[axis][i]
    }

    /// Whether index `i` is the Nyquist mode along `axis`.
    pub fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        i == self.shape[axis] / 2
    }

    fn check_periodic(&self, axis: usize) -> Result<()> {
        if axis >= self.shape.len() {
            return Err(Error::UnknownAxis(format!("#{axis}")));
        }
        if self.plans[axis].is_none() {
            return Err(Error::NonPeriodicAxis(self.grid.axis(axis).name.clone()));
        }
        Ok(())
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool) {
        let (fwd, inv) = self.plans[axis].as_ref().expect("periodic axis");
        let plan = if inverse { inv } else { fwd };
        let n = self.shape[axis];
        let stride = self.strides[axis];
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        if stride == 1 {
            plan.process_with_scratch(data, &mut scratch);
        } else {
            let outer = data.len() / (n * stride);
            let mut buf = vec![Complex64::default(); n];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for (j, b) in buf.iter_mut().enumerate() {
                        *b = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut buf, &mut scratch);
                    for (j, b) in buf.iter().enumerate() {
                        data[base + j * stride] = *b;
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / n as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    fn periodic_axes(&self) -> Vec<usize> {
        (0..self.shape.len()).filter(|&a| self.plans[a].is_some()).collect()
    }

    /// Forward transform along the listed axes.
    pub fn forward_along(&self, v: &[f64], axes: &[usize]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for &a in axes {
            self.transform_axis(&mut data, a, false);
        }
        data
    }

    /// Inverse transform along the listed axes, keeping the real part.
    pub fn inverse_along(&self, mut data: Vec<Complex64>, axes: &[usize]) -> Vec<f64> {
        for &a in axes {
            self.transform_axis(&mut data, a, true);
        }
        data.into_iter().map(|z| z.re).collect()
    }

    /// Forward transform along every periodic axis.
    pub fn forward(&self, v: &[f64]) -> Vec<Complex64> {
        self.forward_along(v, &self.periodic_axes())
    }

    /// Inverse of [`Spectral::forward`].
    pub fn inverse(&self, data: Vec<Complex64>) -> Vec<f64> {
        self.inverse_along(data, &self.periodic_axes())
    }

    /// Multiplies the spectrum (transformed along `axes`) by `mult(multi_index)`.
    pub fn apply_multiplier(&self, v: &[f64], axes: &[usize], mult: impl Fn(&[usize]) -> Complex64) -> Vec<f64> {
        let mut s = self.forward_along(v, axes);
        for (p, z) in s.iter_mut().enumerate() {
            *z *= mult(&self.grid.unravel(p));
        }
        self.inverse_along(s, axes)
    }

    /// Symbol of `∂^order` along `axis` at index `i`.
    fn derivative_symbol(&self, axis: usize, i: usize, order: i32) -> Complex64 {
        if order == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if order % 2 != 0 && self.is_nyquist(axis, i) {
            return Complex64::default();
        }
        let k = self.wavenumbers[axis][i];
        if order < 0 && k == 0.0 {
            return Complex64::default();
        }
        Complex64::new(0.0, k).powi(order)
    }

    /// Mixed derivative: `orders[a]` applications of `∂` along axis `a`.
    pub fn mixed_derivative(&self, v: &[f64], orders: &[u32]) -> Result<Vec<f64>> {
        let axes: Vec<usize> = (0..orders.len()).filter(|&a| orders[a] > 0).collect();
        for &a in &axes {
            self.check_periodic(a)?;
        }
        if axes.is_empty() {
            return Ok(v.to_vec());
        }
        Ok(self.apply_multiplier(v, &axes, |idx| {
            axes.iter()
                .fold(Complex64::new(1.0, 0.0), |acc, &a| acc * self.derivative_symbol(a, idx[a], orders[a] as i32))
        }))
    }

    /// `order`-th derivative along `axis`.
    pub fn derivative(&self, v: &[f64], axis: usize, order: u32) -> Result<Vec<f64>> {
        self.check_periodic(axis)?;
        if order == 0 {
            return Ok(v.to_vec());
        }
        Ok(self.apply_multiplier(v, &[axis], |idx| self.derivative_symbol(axis, idx[axis], order as i32)))
    }

    /// Sum of second derivatives along `axes`.
    pub fn laplacian(&self, v: &[f64], axes: &[usize]) -> Result<Vec<f64>> {
        for &a in axes {
            self.check_periodic(a)?;
        }
        if axes.is_empty() {
            return Ok(vec![0.0; v.len()]);
        }
        Ok(self.apply_multiplier(v, axes, |idx| {
            let k2: f64 = axes.iter().map(|&a| self.wavenumbers[a][idx[a]].powi(2)).sum();
            Complex64::new(-k2, 0.0)
        }))
    }

    /// Largest absolute line mean along `axis`.
    pub fn max_line_mean(&self, v: &[f64], axis: usize) -> f64 {
        self.line_means(v, axis).iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    fn line_means(&self, v: &[f64], axis: usize) -> Vec<f64> {
        let n = self.shape[axis];
        let stride = self.strides[axis];
        let outer = v.len() / (n * stride);
        let mut out = Vec::with_capacity(outer * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                let sum: f64 = (0..n).map(|j| v[base + j * stride]).sum();
                out.push(sum / n as f64);
            }
        }
        out
    }

    /// Subtracts the per-line mean along `axis`.
    pub fn project_mean_zero(&self, v: &[f64], axis: usize) -> Result<Vec<f64>> {
        self.check_periodic(axis)?;
        let n = self.shape[axis];
        let stride = self.strides[axis];
        let means = self.line_means(v, axis);
        let mut out = v.to_vec();
        for (line, m) in means.iter().enumerate() {
            let (o, s) = (line / stride, line % stride);
            let base = o * n * stride + s;
            for j in 0..n {
                out[base + j * stride] -= m;
            }
        }
        Ok(out)
    }

    /// Mean-zero antiderivative along `axis` without the mean check.
    pub fn antiderivative_unchecked(&self, v: &[f64], axis: usize) -> Result<Vec<f64>> {
        self.check_periodic(axis)?;
        Ok(self.apply_multiplier(v, &[axis], |idx| self.derivative_symbol(axis, idx[axis], -1)))
    }

    /// Mean-zero antiderivative along `axis`; errors if a line mean exceeds
    /// [`MEAN_TOLERANCE`] times the L² norm of the input.
    pub fn antiderivative(&self, v: &[f64], axis: usize) -> Result<Vec<f64>> {
        self.check_periodic(axis)?;
        let tol = MEAN_TOLERANCE * l2_norm(&self.grid, v);
        let mean = self.max_line_mean(v, axis);
        if mean > tol {
            return Err(Error::NonZeroMean { axis: self.grid.axis(axis).name.clone(), mean, tol });
        }
        self.antiderivative_unchecked(v, axis)
    }

    /// Whether index `i` along `axis` survives the 2/3 rule.
    pub fn keeps_mode(&self, axis: usize, i: usize) -> bool {
        self.signed[axis][i].unsigned_abs() as usize <= self.shape[axis] / 3
    }

    /// Zeroes every mode with `|m| > ⌊points/3⌋` on every periodic axis.
    pub fn dealias(&self, v: &[f64]) -> Vec<f64> {
        let axes = self.periodic_axes();
        if axes.is_empty() {
            return v.to_vec();
        }
        self.apply_multiplier(v, &axes, |idx| {
            if axes.iter().all(|&a| self.keeps_mode(a, idx[a])) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        })
    }

    /// Discrete L² norm computed from the spectrum (Parseval).
    pub fn spectral_l2_norm(&self, v: &[f64]) -> f64 {
        let axes = self.periodic_axes();
        let s = self.forward_along(v, &axes);
        let nmodes: f64 = axes.iter().map(|&a| self.shape[a] as f64).product();
        let mut total = 0.0;
        for (p, z) in s.iter().enumerate() {
            // Bounded axes keep their physical-space trapezoid weights.
            let idx = self.grid.unravel(p);
            let w: f64 = (0..self.shape.len())
                .map(|a| {
                    let ax = self.grid.axis(a);
                    if ax.periodic {
                        ax.spacing()
                    } else {
                        ax.weight(idx[a])
                    }
                })
                .product();
            total += w * z.norm_sqr() / nmodes;
        }
        total.sqrt()
    }
}

fn map_components(f: &Field, mut op: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Field> {
    let comps: Vec<Vec<f64>> = f.split_components().iter().map(|c| op(c)).collect::<Result<_>>()?;
    Field::from_components(f.grid().clone(), &comps)
}

/// `order`-th spectral derivative of `f` along the axis called `axis`.
pub fn spectral_derivative(f: &Field, axis: &str, order: u32) -> Result<Field> {
    let a = f.grid().periodic_axis_index(axis)?;
    let sp = Spectral::new(f.grid());
    map_components(f, |c| sp.derivative(c, a, order))
}

/// Mean-zero periodic antiderivative of `f` along `axis`.
pub fn spectral_antiderivative(f: &Field, axis: &str) -> Result<Field> {
    let a = f.grid().periodic_axis_index(axis)?;
    let sp = Spectral::new(f.grid());
    map_components(f, |c| sp.antiderivative(c, a))
}

/// Removes the per-line mean of `f` along `axis`.
pub fn project_mean_zero(f: &Field, axis: &str) -> Result<Field> {
    let a = f.grid().periodic_axis_index(axis)?;
    let sp = Spectral::new(f.grid());
    map_components(f, |c| sp.project_mean_zero(c, a))
}

/// Translate `x ↦ f(x − shift)` along `axis` by a Fourier phase shift; the
/// Nyquist mode is multiplied by `cos(k·shift)` so the result stays real.
pub fn shift_periodic(f: &Field, axis: &str, shift: f64) -> Result<Field> {
    let a = f.grid().periodic_axis_index(axis)?;
    let sp = Spectral::new(f.grid());
    map_components(f, |c| {
        Ok(sp.apply_multiplier(c, &[a], |idx| {
            let phase = sp.wavenumber(a, idx[a]) * shift;
            if sp.is_nyquist(a, idx[a]) {
                Complex64::new(phase.cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, -phase)
            }
        }))
    })
}

/// 2/3-rule truncation on every periodic axis.
pub fn dealias(f: &Field) -> Field {
    let sp = Spectral::new(f.grid());
    map_components(f, |c| Ok(sp.dealias(c))).expect("dealias preserves shape")
}
