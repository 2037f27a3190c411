//! Resampling of PAF1 fields between the physical, KZK and NPE frames.
//!
//! A paraxial profile is a slice of the physical field:
//!
//! * KZK `I(τ, y)` at range `z = ε·x1` corresponds to the time series
//!   `u(t, x′)` at the fixed position `x1` (physical axes `t, x2, …`);
//! * NPE `ξ(z, y)` at slow time `τ = ε·t` corresponds to the snapshot
//!   `u(x1, x′)` at the fixed time `t` (physical axes `x1, x2, …`).
//!
//! The physical slice coordinate is [`TransformPayload::at`]. Values are
//! interpolated trigonometrically, so band-limited fields survive a round
//! trip to roundoff. KZK↔NPE uses the exact sample transport of the
//! derivative correspondence and needs only `c`.

use nlacoustics::frames::{
    evaluate_profile_in_physical, map_coordinates, transport_kzk_to_npe, transport_npe_to_kzk, Direction, FrameMap,
    ParaxialKind,
};
use nlacoustics::grid::{Axis, Field, Frame, Grid};
use nlacoustics::interp::interpolate;

use crate::config::TransformPayload;
use crate::error::{CliError, Result};

const PHYSICAL_TRANSVERSE: [&str; 2] = ["x2", "x3"];

fn paraxial_transverse(count: usize) -> &'static [&'static str] {
    if count == 1 {
        &["y"]
    } else {
        &["y1", "y2"]
    }
}

fn kind_of(frame: Frame) -> Option<ParaxialKind> {
    match frame {
        Frame::Kzk => Some(ParaxialKind::Kzk),
        Frame::Npe => Some(ParaxialKind::Npe),
        Frame::Physical => None,
    }
}

/// Name of the physical axis that a `kind` profile's first axis corresponds to.
fn physical_leading(kind: ParaxialKind) -> &'static str {
    match kind {
        ParaxialKind::Kzk => "t",
        ParaxialKind::Npe => "x1",
    }
}

/// `(fixed physical coordinate, paraxial slice coordinate)` names.
fn slice_names(kind: ParaxialKind) -> (&'static str, &'static str) {
    match kind {
        ParaxialKind::Kzk => ("x1", "z"),
        ParaxialKind::Npe => ("t", "tau"),
    }
}

fn check_periodic(grid: &Grid) -> Result<()> {
    if let Some(a) = grid.axes().iter().find(|a| !a.periodic) {
        return Err(CliError::Config(format!("frame transforms need periodic axes; `{}` is bounded", a.name)));
    }
    if grid.ndim() > 3 {
        return Err(CliError::Config("at most two transverse axes are supported".into()));
    }
    Ok(())
}

/// Resamples `field` (in frame `from`) into frame `to`.
pub fn transform_field(field: &Field, from: Frame, to: Frame, params: &TransformPayload) -> Result<Field> {
    let grid = field.grid();
    if grid.frame() != from {
        return Err(CliError::Config(format!("input is a {} field, not {}", grid.frame().tag(), from.tag())));
    }
    if from == to {
        return Err(CliError::Config(format!("source and target frame are both {}", from.tag())));
    }
    check_periodic(grid)?;
    match (kind_of(from), kind_of(to)) {
        (Some(ParaxialKind::Kzk), Some(ParaxialKind::Npe)) => Ok(transport_kzk_to_npe(field, params.c)?),
        (Some(ParaxialKind::Npe), Some(ParaxialKind::Kzk)) => Ok(transport_npe_to_kzk(field, params.c)?),
        (None, Some(kind)) => physical_to_paraxial(field, kind, params),
        (Some(kind), None) => paraxial_to_physical(field, kind, params),
        _ => unreachable!("equal frames rejected above"),
    }
}

fn frame_map(kind: ParaxialKind, grid: &Grid, params: &TransformPayload) -> Result<FrameMap> {
    Ok(FrameMap::new(kind, params.c, params.eps, grid.ndim())?)
}

fn physical_to_paraxial(field: &Field, kind: ParaxialKind, params: &TransformPayload) -> Result<Field> {
    let grid = field.grid();
    let leading = physical_leading(kind);
    if grid.axis(0).name != leading {
        return Err(CliError::Config(format!(
            "a {} profile is a slice with physical axes ({leading}, x2, …); the input's first axis is `{}`",
            kind.frame().tag(),
            grid.axis(0).name
        )));
    }
    for (a, name) in grid.axes()[1..].iter().zip(PHYSICAL_TRANSVERSE) {
        if a.name != name {
            return Err(CliError::Config(format!("expected transverse axis `{name}`, found `{}`", a.name)));
        }
    }
    let fm = frame_map(kind, grid, params)?;
    let scale = params.eps.sqrt();
    let lead = grid.axis(0);
    let mut axes = vec![Axis::periodic(if kind == ParaxialKind::Kzk { "tau" } else { "z" }, lead.length, lead.points)];
    let names = paraxial_transverse(grid.ndim() - 1);
    for (a, name) in grid.axes()[1..].iter().zip(names) {
        axes.push(Axis::periodic(name, a.length * scale, a.points));
    }
    let target = Grid::new(axes, kind.frame())?;
    let slice = params.eps * params.at;
    let comps = field.split_components();
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(target.len()); comps.len()];
    for p in 0..target.len() {
        let x = target.point_coords(p);
        // Paraxial tuple (τ, z, y…) with the slice coordinate filled in.
        let mut tuple = vec![0.0; grid.ndim() + 1];
        match kind {
            ParaxialKind::Kzk => {
                tuple[0] = x[0];
                tuple[1] = slice;
            }
            ParaxialKind::Npe => {
                tuple[0] = slice;
                tuple[1] = x[0];
            }
        }
        tuple[2..].copy_from_slice(&x[1..]);
        let phys = map_coordinates(&fm, Direction::Inverse, &tuple)?;
        let lead_coord = if kind == ParaxialKind::Kzk { phys[0] } else { phys[1] };
        let mut at = vec![lead_coord];
        at.extend_from_slice(&phys[2..]);
        for (o, c) in out.iter_mut().zip(&comps) {
            o.push(interpolate(grid, c, &at)?);
        }
    }
    Ok(Field::from_components(target, &out)?)
}

fn paraxial_to_physical(field: &Field, kind: ParaxialKind, params: &TransformPayload) -> Result<Field> {
    let grid = field.grid();
    let fm = frame_map(kind, grid, params)?;
    let scale = params.eps.sqrt();
    let lead = grid.axis(0);
    let mut axes = vec![Axis::periodic(physical_leading(kind), lead.length, lead.points)];
    for (a, name) in grid.axes()[1..].iter().zip(PHYSICAL_TRANSVERSE) {
        axes.push(Axis::periodic(name, a.length / scale, a.points));
    }
    let target = Grid::new(axes, Frame::Physical)?;
    let (fixed, slice) = slice_names(kind);
    Ok(evaluate_profile_in_physical(field, &fm, &target, &[(fixed, params.at)], &[(slice, params.eps * params.at)])?)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn params() -> TransformPayload {
        TransformPayload { c: 1.3, eps: 0.1, at: 0.7 }
    }

    #[test]
    fn kzk_profile_is_the_retarded_time_series() {
        let g =
            Grid::new(vec![Axis::periodic("t", 2.0 * PI, 16), Axis::periodic("x2", 4.0, 8)], Frame::Physical).unwrap();
        let f = Field::from_fn(g, |x| x[0].sin() * (PI * x[1] / 2.0).cos()).unwrap();
        let p = params();
        let k = transform_field(&f, Frame::Physical, Frame::Kzk, &p).unwrap();
        assert_eq!(k.grid().axis(0).name, "tau");
        assert!((k.grid().axis(1).length - 4.0 * p.eps.sqrt()).abs() < 1e-15);
        let kg = k.grid().clone();
        for q in 0..kg.len() {
            let x = kg.point_coords(q);
            let (t, x2) = (x[0] + p.at / p.c, x[1] / p.eps.sqrt());
            let want = t.sin() * (PI * x2 / 2.0).cos();
            assert!((k.values()[q] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_leading_axis_is_rejected() {
        let g = Grid::new(vec![Axis::periodic("x1", 2.0 * PI, 8)], Frame::Physical).unwrap();
        let f = Field::zeros(g, 1);
        assert!(matches!(transform_field(&f, Frame::Physical, Frame::Kzk, &params()), Err(CliError::Config(_))));
        assert!(transform_field(&f, Frame::Physical, Frame::Npe, &params()).is_ok());
        assert!(matches!(transform_field(&f, Frame::Kzk, Frame::Npe, &params()), Err(CliError::Config(_))));
        assert!(matches!(transform_field(&f, Frame::Physical, Frame::Physical, &params()), Err(CliError::Config(_))));
    }
}
