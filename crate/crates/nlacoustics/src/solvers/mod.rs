//! Solvers for the Kuznetsov, Westervelt, KZK and NPE models.
//!
//! All models are advanced by the shared [`engine`]: stiff linear parts
//! (the wave operator and viscosity) are propagated exactly per Fourier mode;
//! nonlinear and diffraction terms are explicit and dealiased.

pub mod engine;
mod paraxial;
mod wave;

use serde::{Deserialize, Serialize};

pub use engine::{Scheme, StepControl};
pub use paraxial::{
    kzk_rhs, kzk_rhs_linearized, npe_rhs, paraxial_jet, solve_kzk, solve_npe, KzkOptions, KzkSource, NonlinearForm,
    NpeOptions, ParaxialOptions,
};
pub use wave::{
    kuznetsov_acceleration, solve_kuznetsov, solve_westervelt, westervelt_acceleration, KuznetsovSwitches,
    WesterveltSwitches, MIN_TIME_FACTOR,
};

use crate::grid::Field;

/// Which model a [`ModelState`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Kuznetsov,
    Westervelt,
    Kzk,
    Npe,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Kuznetsov => "kuznetsov",
            ModelKind::Westervelt => "westervelt",
            ModelKind::Kzk => "kzk",
            ModelKind::Npe => "npe",
        }
    }
}

/// A model's unknowns at one value of its evolution variable (`t` for the
/// wave models, `z` for KZK, `τ` for NPE).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub model: ModelKind,
    pub evol: f64,
    /// `u`, `Π`, `I` or `ξ`.
    pub primary: Field,
    /// `∂t u` or `∂t Π`; `None` for the paraxial models.
    pub velocity: Option<Field>,
}

/// Snapshots in increasing evolution order.
pub type Trajectory = Vec<ModelState>;
