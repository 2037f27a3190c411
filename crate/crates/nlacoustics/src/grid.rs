//! Tensor-product grids, frame tags and sampled fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinate frame a grid lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Laboratory coordinates `(t, x1, x′)`.
    Physical,
    /// KZK paraxial coordinates `(τ, z, y)`: retarded time, slow range, stretched transverse.
    Kzk,
    /// NPE paraxial coordinates `(τ, z, y)`: slow time, moving range, stretched transverse.
    Npe,
}

impl Frame {
    /// Serialized tag used in snapshot headers.
    pub fn tag(self) -> &'static str {
        match self {
            Frame::Physical => "physical",
            Frame::Kzk => "kzk",
            Frame::Npe => "npe",
        }
    }
}

/// One axis of a tensor-product grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    /// Period for periodic axes, span for bounded axes.
    pub length: f64,
    pub points: usize,
    pub periodic: bool,
}

impl Axis {
    /// Periodic axis on `[0, length)` with `points` samples.
    pub fn periodic(name: &str, length: f64, points: usize) -> Self {
        Axis { name: name.to_string(), length, points, periodic: true }
    }

    /// Bounded axis on `[0, length]` with `points` samples including both ends.
    pub fn bounded(name: &str, length: f64, points: usize) -> Self {
        Axis { name: name.to_string(), length, points, periodic: false }
    }

    /// Grid spacing.
    pub fn spacing(&self) -> f64 {
        if self.periodic {
            self.length / self.points as f64
        } else {
            self.length / (self.points - 1) as f64
        }
    }

    /// Coordinate of sample `i`.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// All sample coordinates.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.coord(i)).collect()
    }

    /// Quadrature weight of one sample (trapezoid on bounded axes).
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if !self.periodic && (i == 0 || i + 1 == self.points) {
            0.5 * h
        } else {
            h
        }
    }

    fn validate(&self) -> Result<()> {
        if self.points < 4 || !self.points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "axis `{}` needs an even point count ≥ 4, got {}",
                self.name, self.points
            )));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "axis `{}` needs a positive finite length, got {}",
                self.name, self.length
            )));
        }
        Ok(())
    }
}

/// Ordered list of axes (row-major, last axis fastest) tagged with a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
    frame: Frame,
}

impl Grid {
    /// Validates and builds a grid of 1–3 axes with unique names.
    pub fn new(axes: Vec<Axis>, frame: Frame) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidGrid(format!("1–3 axes required, got {}", axes.len())));
        }
        for (i, a) in axes.iter().enumerate() {
            a.validate()?;
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidGrid(format!("duplicate axis name `{}`", a.name)));
            }
        }
        Ok(Grid { axes, frame })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Same axes under another frame tag.
    pub fn with_frame(&self, frame: Frame) -> Grid {
        Grid { axes: self.axes.clone(), frame }
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    /// Per-axis point counts.
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of the axis called `name`.
    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes.iter().position(|a| a.name == name).ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    /// Index of a periodic axis called `name`.
    pub fn periodic_axis_index(&self, name: &str) -> Result<usize> {
        let i = self.axis_index(name)?;
        if !self.axes[i].periodic {
            return Err(Error::NonPeriodicAxis(name.to_string()));
        }
        Ok(i)
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.ndim()];
        for d in (0..self.ndim().saturating_sub(1)).rev() {
            s[d] = s[d + 1] * self.axes[d + 1].points;
        }
        s
    }

    /// Multi-index of flat point `p`.
    pub fn unravel(&self, mut p: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for d in (0..self.ndim()).rev() {
            let n = self.axes[d].points;
            idx[d] = p % n;
            p /= n;
        }
        idx
    }

    /// Coordinates of flat point `p`.
    pub fn point_coords(&self, p: usize) -> Vec<f64> {
        self.unravel(p).iter().zip(&self.axes).map(|(&i, a)| a.coord(i)).collect()
    }

    /// Quadrature weight of flat point `p`.
    pub fn weight(&self, p: usize) -> f64 {
        self.unravel(p).iter().zip(&self.axes).map(|(&i, a)| a.weight(i)).product()
    }

    /// Evaluates `f` at every grid point, producing a scalar sample array.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|p| f(&self.point_coords(p))).collect()
    }
}

/// Real samples of a scalar or vector quantity on a grid.
///
/// Values are stored row-major over the axes with the component index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    /// Builds a field, checking the value count and finiteness.
    pub fn new(grid: Grid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidGrid("a field needs at least one component".into()));
        }
        if values.len() != grid.len() * components {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len() * components,
                values.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value #{p}")));
        }
        Ok(Field { grid, components, values })
    }

    /// Scalar field from per-point samples.
    pub fn scalar(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Field::new(grid, 1, values)
    }

    /// Field of zeros.
    pub fn zeros(grid: Grid, components: usize) -> Self {
        let n = grid.len() * components;
        Field { grid, components, values: vec![0.0; n] }
    }

    /// Scalar field sampled from a function of the point coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let v = grid.sample(f);
        Field::scalar(grid, v)
    }

    /// Interleaves per-component sample arrays.
    pub fn from_components(grid: Grid, comps: &[Vec<f64>]) -> Result<Self> {
        let n = grid.len();
        if comps.is_empty() || comps.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidGrid("component arrays must match the grid".into()));
        }
        let k = comps.len();
        let mut values = vec![0.0; n * k];
        for (j, c) in comps.iter().enumerate() {
            for (p, v) in c.iter().enumerate() {
                values[p * k + j] = *v;
            }
        }
        Field::new(grid, k, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Samples of component `j`.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.components).copied().collect()
    }

    /// All components as separate arrays.
    pub fn split_components(&self) -> Vec<Vec<f64>> {
        (0..self.components).map(|j| self.component(j)).collect()
    }

    /// Same data under a new grid (shape must agree).
    pub fn with_grid(&self, grid: Grid) -> Result<Field> {
        if grid.shape() != self.grid.shape() {
            return Err(Error::GridMismatch("shape differs".into()));
        }
        Ok(Field { grid, components: self.components, values: self.values.clone() })
    }

    /// Checks that `other` lives on the same grid with the same component count.
    pub fn ensure_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::GridMismatch("fields differ in grid or components".into()));
        }
        Ok(())
    }

    /// Pointwise difference `self − other`.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.ensure_compatible(other)?;
        let v = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Field::new(self.grid.clone(), self.components, v)
    }

    /// Quadrature-weighted discrete L² norm over all components.
    pub fn l2_norm(&self) -> f64 {
        let k = self.components;
        let s: f64 = self.values.iter().enumerate().map(|(i, v)| self.grid.weight(i / k) * v * v).sum();
        s.sqrt()
    }

    /// Maximum absolute sample.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Quadrature-weighted L² norm of a raw sample array on `grid`.
pub fn l2_norm(grid: &Grid, v: &[f64]) -> f64 {
    v.iter().enumerate().map(|(p, x)| grid.weight(p) * x * x).sum::<f64>().sqrt()
}

/// Quadrature-weighted integral of a raw sample array on `grid`.
pub fn integrate(grid: &Grid, v: &[f64]) -> f64 {
    v.iter().enumerate().map(|(p, x)| grid.weight(p) * x).sum()
}
