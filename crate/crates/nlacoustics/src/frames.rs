//! Paraxial frame maps, the KZK↔NPE bijection and evaluation of paraxial
//! profiles on physical grids.
//!
//! * KZK: `τ = t − x1/c`, `z = ε x1`, `y = √ε x′`.
//! * NPE: `τ = ε t`, `z = x1 − c t`, `y = √ε x′`.
//!
//! Paraxial tuples are ordered `(τ, z, y1, y2)`, physical tuples `(t, x1, x2, x3)`.
//! The transverse stretching is carried by the coordinate values themselves:
//! a profile `y` axis of length `Ly` spans `Ly/√ε` physically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Field, Frame, Grid};
use crate::interp::interpolate;

/// Which paraxial change of variables a [`FrameMap`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParaxialKind {
    Kzk,
    Npe,
}

impl ParaxialKind {
    pub fn frame(self) -> Frame {
        match self {
            ParaxialKind::Kzk => Frame::Kzk,
            ParaxialKind::Npe => Frame::Npe,
        }
    }
}

/// Forward (physical → paraxial) or inverse direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Affine paraxial change of variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMap {
    pub kind: ParaxialKind,
    /// Sound speed.
    pub c: f64,
    /// Mach parameter ε.
    pub eps: f64,
    /// Number of spatial dimensions `n` (tuples have `n + 1` entries).
    pub spatial_dims: usize,
}

impl FrameMap {
    /// Validates `c > 0`, `0 < ε < 1` and `1 ≤ n ≤ 3`.
    pub fn new(kind: ParaxialKind, c: f64, eps: f64, spatial_dims: usize) -> Result<Self> {
        if !(c > 0.0) || !(eps > 0.0 && eps < 1.0) || !(1..=3).contains(&spatial_dims) {
            return Err(Error::InvalidCoefficients(format!(
                "frame map needs c > 0, 0 < ε < 1, 1 ≤ n ≤ 3 (c={c}, ε={eps}, n={spatial_dims})"
            )));
        }
        Ok(FrameMap { kind, c, eps, spatial_dims })
    }

    /// Applies the map (or its inverse) to one coordinate tuple.
    pub fn map(&self, direction: Direction, point: &[f64]) -> Result<Vec<f64>> {
        map_coordinates(self, direction, point)
    }
}

/// Applies the affine paraxial map or its inverse to `point`.
pub fn map_coordinates(fm: &FrameMap, direction: Direction, point: &[f64]) -> Result<Vec<f64>> {
    let expected = fm.spatial_dims + 1;
    if point.len() != expected {
        return Err(Error::Arity { expected, got: point.len() });
    }
    let (c, eps) = (fm.c, fm.eps);
    let se = eps.sqrt();
    let mut out = vec![0.0; expected];
    match (fm.kind, direction) {
        (ParaxialKind::Kzk, Direction::Forward) => {
            let (t, x1) = (point[0], point[1]);
            out[0] = t - x1 / c;
            out[1] = eps * x1;
            for j in 2..expected {
                out[j] = se * point[j];
            }
        }
        (ParaxialKind::Kzk, Direction::Inverse) => {
            let (tau, z) = (point[0], point[1]);
            let x1 = z / eps;
            out[0] = tau + x1 / c;
            out[1] = x1;
            for j in 2..expected {
                out[j] = point[j] / se;
            }
        }
        (ParaxialKind::Npe, Direction::Forward) => {
            let (t, x1) = (point[0], point[1]);
            out[0] = eps * t;
            out[1] = x1 - c * t;
            for j in 2..expected {
                out[j] = se * point[j];
            }
        }
        (ParaxialKind::Npe, Direction::Inverse) => {
            let (tau, z) = (point[0], point[1]);
            let t = tau / eps;
            out[0] = t;
            out[1] = z + c * t;
            for j in 2..expected {
                out[j] = point[j] / se;
            }
        }
    }
    Ok(out)
}

/// Direction of the KZK↔NPE variable bijection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BijectionDirection {
    KzkToNpe,
    NpeToKzk,
}

/// A `(τ, z)` pair in either paraxial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauZ {
    pub tau: f64,
    pub z: f64,
}

/// `z_NPE = −c τ_KZK`, `τ_NPE = ε τ_KZK + z_KZK / c`, and its exact inverse.
pub fn kzk_npe_bijection(direction: BijectionDirection, point: TauZ, c: f64, eps: f64) -> TauZ {
    match direction {
        BijectionDirection::KzkToNpe => TauZ { tau: eps * point.tau + point.z / c, z: -c * point.tau },
        BijectionDirection::NpeToKzk => {
            let tau_k = -point.z / c;
            TauZ { tau: tau_k, z: c * (point.tau - eps * tau_k) }
        }
    }
}

/// Derivative correspondence of the bijection: `∂τ_NPE = c ∂z_KZK`, `∂z_NPE = −(1/c) ∂τ_KZK`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BijectionDerivatives {
    /// Factor in `∂τ_NPE = factor · ∂z_KZK`.
    pub tau_npe_per_z_kzk: f64,
    /// Factor in `∂z_NPE = factor · ∂τ_KZK`.
    pub z_npe_per_tau_kzk: f64,
}

impl BijectionDerivatives {
    pub fn new(c: f64) -> Self {
        BijectionDerivatives { tau_npe_per_z_kzk: c, z_npe_per_tau_kzk: -1.0 / c }
    }
}

/// Transports a KZK-frame profile `I(τ_K, y)` to the NPE frame:
/// `ξ(z_N, y) = I(−z_N / c, y)`, consistent with the derivative correspondence.
/// The periodic `τ` axis (first axis) of length `L` becomes a `z` axis of length `cL`;
/// the sample permutation is exact, no interpolation is involved.
pub fn transport_kzk_to_npe(profile: &Field, c: f64) -> Result<Field> {
    transport_first_axis(profile, c, Frame::Kzk, Frame::Npe, "z")
}

/// Inverse of [`transport_kzk_to_npe`]: `I(τ_K, y) = ξ(−c τ_K, y)`.
pub fn transport_npe_to_kzk(profile: &Field, c: f64) -> Result<Field> {
    transport_first_axis(profile, 1.0 / c, Frame::Npe, Frame::Kzk, "tau")
}

fn transport_first_axis(profile: &Field, scale: f64, from: Frame, to: Frame, name: &str) -> Result<Field> {
    let g = profile.grid();
    if g.frame() != from {
        return Err(Error::GridMismatch(format!("expected a {} profile", from.tag())));
    }
    let a0 = g.axis(0);
    if !a0.periodic {
        return Err(Error::NonPeriodicAxis(a0.name.clone()));
    }
    let mut axes: Vec<Axis> = g.axes().to_vec();
    axes[0] = Axis::periodic(name, a0.length * scale, a0.points);
    let grid = Grid::new(axes, to)?;
    let n = a0.points;
    let inner = g.len() / n * profile.components();
    let src = profile.values();
    let mut out = vec![0.0; src.len()];
    for j in 0..n {
        let s = (n - j) % n;
        out[j * inner..(j + 1) * inner].copy_from_slice(&src[s * inner..(s + 1) * inner]);
    }
    Field::new(grid, profile.components(), out)
}

/// Maps a KZK range value `z_K` to the NPE slow time `τ_N = z_K / c` used for transported trajectories.
pub fn kzk_range_to_npe_time(z_kzk: f64, c: f64) -> f64 {
    z_kzk / c
}

const PHYSICAL_NAMES: [&str; 4] = ["t", "x1", "x2", "x3"];
const PARAXIAL_NAMES: [&str; 4] = ["tau", "z", "y1", "y2"];

fn paraxial_index(name: &str) -> Option<usize> {
    if name == "y" {
        return Some(2);
    }
    PARAXIAL_NAMES.iter().position(|n| *n == name)
}

/// Samples a paraxial-frame profile on a physical grid.
///
/// Physical coordinates that are not axes of `phys` are taken from `fixed`
/// (missing entries default to 0). Paraxial coordinates that are not axes of
/// `profile` must coincide with the slice values given in `slice` (e.g. the
/// `z = 0` plane the profile was recorded on); a mismatch is an out-of-range error.
pub fn evaluate_profile_in_physical(
    profile: &Field,
    fm: &FrameMap,
    phys: &Grid,
    fixed: &[(&str, f64)],
    slice: &[(&str, f64)],
) -> Result<Field> {
    if phys.frame() != Frame::Physical {
        return Err(Error::GridMismatch("target grid must be in the physical frame".into()));
    }
    if profile.grid().frame() != fm.kind.frame() {
        return Err(Error::GridMismatch("profile frame does not match the frame map".into()));
    }
    if !profile.grid().axis(0).periodic {
        return Err(Error::NonPeriodicAxis(profile.grid().axis(0).name.clone()));
    }
    let n = fm.spatial_dims;
    let mut phys_slot = Vec::new();
    for a in phys.axes() {
        let i =
            PHYSICAL_NAMES[..=n].iter().position(|x| *x == a.name).ok_or_else(|| Error::UnknownAxis(a.name.clone()))?;
        phys_slot.push(i);
    }
    let mut base = vec![0.0; n + 1];
    for (name, v) in fixed {
        let i =
            PHYSICAL_NAMES[..=n].iter().position(|x| x == name).ok_or_else(|| Error::UnknownAxis(name.to_string()))?;
        base[i] = *v;
    }
    let prof_slot: Vec<usize> = profile
        .grid()
        .axes()
        .iter()
        .map(|a| paraxial_index(&a.name).ok_or_else(|| Error::UnknownAxis(a.name.clone())))
        .collect::<Result<_>>()?;
    let mut slice_checks = Vec::new();
    for k in 0..=n {
        if !prof_slot.contains(&k) {
            let val = slice
                .iter()
                .find(|(name, _)| paraxial_index(name) == Some(k))
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::MissingInput(format!("slice value for `{}`", PARAXIAL_NAMES[k])))?;
            slice_checks.push((k, val));
        }
    }
    let comps = profile.split_components();
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(phys.len()); comps.len()];
    for p in 0..phys.len() {
        let mut tuple = base.clone();
        for (coord, &slot) in phys.point_coords(p).iter().zip(&phys_slot) {
            tuple[slot] = *coord;
        }
        let par = map_coordinates(fm, Direction::Forward, &tuple)?;
        for &(k, val) in &slice_checks {
            if (par[k] - val).abs() > 1e-12 * (1.0 + val.abs()) {
                return Err(Error::OutOfRange { axis: PARAXIAL_NAMES[k].to_string(), value: par[k], lo: val, hi: val });
            }
        }
        let at: Vec<f64> = prof_slot.iter().map(|&k| par[k]).collect();
        for (o, c) in out.iter_mut().zip(&comps) {
            o.push(interpolate(profile.grid(), c, &at)?);
        }
    }
    Field::from_components(phys.clone(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kzk_forward_example() {
        let fm = FrameMap::new(ParaxialKind::Kzk, 2.0, 0.25, 2).unwrap();
        let p = fm.map(Direction::Forward, &[3.0, 4.0, 1.0]).unwrap();
        assert_eq!(p, vec![1.0, 1.0, 0.5]);
        assert!(matches!(fm.map(Direction::Forward, &[1.0, 2.0]), Err(Error::Arity { .. })));
    }

    #[test]
    fn bijection_example() {
        let q = kzk_npe_bijection(BijectionDirection::KzkToNpe, TauZ { tau: 1.0, z: 4.0 }, 2.0, 0.1);
        assert_eq!(q.z, -2.0);
        assert!((q.tau - 2.1).abs() < 1e-15);
        let back = kzk_npe_bijection(BijectionDirection::NpeToKzk, q, 2.0, 0.1);
        assert!((back.tau - 1.0).abs() < 1e-14 && (back.z - 4.0).abs() < 1e-14);
    }

    #[test]
    fn transport_round_trip() {
        let g = Grid::new(vec![Axis::periodic("tau", 2.0 * PI, 8)], Frame::Kzk).unwrap();
        let f = Field::from_fn(g, |x| x[0].sin() + 0.2 * (2.0 * x[0]).cos()).unwrap();
        let n = transport_kzk_to_npe(&f, 1.5).unwrap();
        assert_eq!(n.grid().axis(0).name, "z");
        assert!((n.grid().axis(0).length - 3.0 * PI).abs() < 1e-14);
        // ξ(z) = I(−z/c)
        for (j, v) in n.values().iter().enumerate() {
            let z = j as f64 * 3.0 * PI / 8.0;
            let tau = -z / 1.5;
            assert!((v - (tau.sin() + 0.2 * (2.0 * tau).cos())).abs() < 1e-13);
        }
        let back = transport_npe_to_kzk(&n, 1.5).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn profile_on_boundary_line() {
        let fm = FrameMap::new(ParaxialKind::Kzk, 1.5, 0.1, 1).unwrap();
        let prof =
            Field::from_fn(Grid::new(vec![Axis::periodic("tau", 2.0 * PI, 32)], Frame::Kzk).unwrap(), |x| x[0].sin())
                .unwrap();
        let phys = Grid::new(vec![Axis::periodic("t", 2.0 * PI, 16)], Frame::Physical).unwrap();
        let f = evaluate_profile_in_physical(&prof, &fm, &phys, &[("x1", 0.0)], &[("z", 0.0)]).unwrap();
        for (v, t) in f.values().iter().zip(phys.axis(0).coords()) {
            assert!((v - t.sin()).abs() < 1e-12);
        }
        let err = evaluate_profile_in_physical(&prof, &fm, &phys, &[("x1", 1.0)], &[("z", 0.0)]);
        assert!(matches!(err, Err(Error::OutOfRange { .. })));
    }
}
