//! Physical constants shared by every model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sound speed `c`, reference density `ρ0`, heat-capacity ratio `γ`,
/// viscosity `ν` and Mach parameter `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCoefficients {
    pub c: f64,
    pub rho0: f64,
    pub gamma: f64,
    pub nu: f64,
    pub eps: f64,
}

impl ModelCoefficients {
    /// Validates `c > 0`, `ρ0 > 0`, `γ > 1`, `ν ≥ 0`, `0 < ε < 1`.
    pub fn new(c: f64, rho0: f64, gamma: f64, nu: f64, eps: f64) -> Result<Self> {
        let m = ModelCoefficients { c, rho0, gamma, nu, eps };
        m.validate()?;
        Ok(m)
    }

    /// Checks the admissible ranges.
    pub fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0
            && self.rho0 > 0.0
            && self.gamma > 1.0
            && self.nu >= 0.0
            && self.eps > 0.0
            && self.eps < 1.0
            && [self.c, self.rho0, self.gamma, self.nu, self.eps].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCoefficients(format!(
                "need c > 0, rho0 > 0, gamma > 1, nu >= 0, 0 < eps < 1; got {self:?}"
            )))
        }
    }

    /// `α = (γ − 1)/c²`.
    pub fn alpha(&self) -> f64 {
        (self.gamma - 1.0) / (self.c * self.c)
    }

    /// Coefficient of `∇u·∇u_t` in the expanded Kuznetsov nonlinearity.
    pub fn beta_nl(&self) -> f64 {
        2.0
    }

    /// Same constants with another ε.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        ModelCoefficients::new(self.c, self.rho0, self.gamma, self.nu, eps)
    }

    /// Same constants with another ν.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        ModelCoefficients::new(self.c, self.rho0, self.gamma, nu, self.eps)
    }
}
