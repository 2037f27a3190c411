//! Experiment configuration: which models are compared, over which ε sweep,
//! on which grid, from which initial data.

use std::f64::consts::PI;

use nlacoustics::grid::{Axis, Frame, Grid};
use nlacoustics::solvers::{ModelKind, Scheme};
use nlacoustics::ModelCoefficients;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ExperimentError, Result};
use crate::presets::{InitialCondition, Preset, WATER_EPS};

/// What a study compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyPair {
    /// Navier–Stokes flow vs the Kuznetsov ansatz.
    NsKuznetsov,
    /// Navier–Stokes flow vs the KZK ansatz (needs a half-space solver; rejected).
    NsKzk,
    /// Navier–Stokes flow vs the NPE ansatz.
    NsNpe,
    /// KZK solution vs the KZK solution forced by the Kuznetsov–KZK remainder.
    KuznetsovKzk,
    /// Kuznetsov solution vs the travelling NPE profile.
    KuznetsovNpe,
    /// Westervelt solution vs the transformed Kuznetsov solution.
    KuznetsovWestervelt,
    /// Self-comparisons: the same model run twice from identical data.
    NsNs,
    KuznetsovKuznetsov,
    WesterveltWestervelt,
    KzkKzk,
    NpeNpe,
    /// Viscous decay of a single KZK run.
    KzkDecay,
    /// Viscous decay of a single NPE run.
    NpeDecay,
}

impl StudyPair {
    pub const ALL: [StudyPair; 13] = [
        StudyPair::NsKuznetsov,
        StudyPair::NsKzk,
        StudyPair::NsNpe,
        StudyPair::KuznetsovKzk,
        StudyPair::KuznetsovNpe,
        StudyPair::KuznetsovWestervelt,
        StudyPair::NsNs,
        StudyPair::KuznetsovKuznetsov,
        StudyPair::WesterveltWestervelt,
        StudyPair::KzkKzk,
        StudyPair::NpeNpe,
        StudyPair::KzkDecay,
        StudyPair::NpeDecay,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            StudyPair::NsKuznetsov => "ns-kuznetsov",
            StudyPair::NsKzk => "ns-kzk",
            StudyPair::NsNpe => "ns-npe",
            StudyPair::KuznetsovKzk => "kuznetsov-kzk",
            StudyPair::KuznetsovNpe => "kuznetsov-npe",
            StudyPair::KuznetsovWestervelt => "kuznetsov-westervelt",
            StudyPair::NsNs => "ns-ns",
            StudyPair::KuznetsovKuznetsov => "kuznetsov-kuznetsov",
            StudyPair::WesterveltWestervelt => "westervelt-westervelt",
            StudyPair::KzkKzk => "kzk-kzk",
            StudyPair::NpeNpe => "npe-npe",
            StudyPair::KzkDecay => "kzk-decay",
            StudyPair::NpeDecay => "npe-decay",
        }
    }

    pub fn from_tag(tag: &str) -> Result<StudyPair> {
        StudyPair::ALL
            .into_iter()
            .find(|p| p.tag() == tag)
            .ok_or_else(|| ExperimentError::Config(format!("unknown pair `{tag}`")))
    }

    /// Frame of the grid the initial data are sampled on.
    pub fn data_frame(self) -> Frame {
        match self {
            StudyPair::KuznetsovKzk | StudyPair::KzkKzk | StudyPair::KzkDecay | StudyPair::NsKzk => Frame::Kzk,
            StudyPair::NsNpe | StudyPair::KuznetsovNpe | StudyPair::NpeNpe | StudyPair::NpeDecay => Frame::Npe,
            _ => Frame::Physical,
        }
    }

    /// True when the evolution variable is the slow range/time of a paraxial
    /// model, whose span does not scale with ε.
    pub fn paraxial_evolution(self) -> bool {
        matches!(
            self,
            StudyPair::KuznetsovKzk | StudyPair::KzkKzk | StudyPair::NpeNpe | StudyPair::KzkDecay | StudyPair::NpeDecay
        )
    }

    /// Self-comparisons have identically zero error by construction.
    pub fn is_self_comparison(self) -> bool {
        matches!(
            self,
            StudyPair::NsNs
                | StudyPair::KuznetsovKuznetsov
                | StudyPair::WesterveltWestervelt
                | StudyPair::KzkKzk
                | StudyPair::NpeNpe
        )
    }

    pub fn is_decay(self) -> bool {
        matches!(self, StudyPair::KzkDecay | StudyPair::NpeDecay)
    }

    /// Errors are measured in `√(‖∂t e‖² + ‖∇e‖²)` for the wave-model pairs.
    pub fn uses_energy_norm(self) -> bool {
        matches!(
            self,
            StudyPair::KuznetsovNpe
                | StudyPair::KuznetsovWestervelt
                | StudyPair::KuznetsovKuznetsov
                | StudyPair::WesterveltWestervelt
        )
    }

    /// Paraxial model evolved in a decay study.
    pub fn decay_model(self) -> Option<ModelKind> {
        match self {
            StudyPair::KzkDecay => Some(ModelKind::Kzk),
            StudyPair::NpeDecay => Some(ModelKind::Npe),
            _ => None,
        }
    }
}

/// Physical constants shared by every member of a sweep (ε varies).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseCoefficients {
    pub c: f64,
    pub rho0: f64,
    pub gamma: f64,
    pub nu: f64,
}

impl Default for BaseCoefficients {
    fn default() -> Self {
        BaseCoefficients { c: 1.0, rho0: 1.0, gamma: 1.4, nu: 0.01 }
    }
}

impl BaseCoefficients {
    /// Full coefficient set at one ε.
    pub fn at(&self, eps: f64) -> Result<ModelCoefficients> {
        Ok(ModelCoefficients::new(self.c, self.rho0, self.gamma, self.nu, eps)?)
    }
}

/// Evolution span of every member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    /// `C/ε` with the same `C` for the whole sweep.
    OverEps {
        #[serde(rename = "c_over_eps")]
        constant: f64,
    },
    /// A fixed span, independent of ε.
    Fixed(f64),
}

impl Horizon {
    pub fn span(&self, eps: f64) -> f64 {
        match *self {
            Horizon::OverEps { constant } => constant / eps,
            Horizon::Fixed(span) => span,
        }
    }
}

/// Keyword form of [`Delta`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaKeyword {
    /// `δ = ε` for every member.
    #[serde(rename = "eps")]
    Eps,
}

/// Size of the initial L² perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Delta {
    Fixed(f64),
    MatchEps(DeltaKeyword),
}

impl Delta {
    pub fn at(&self, eps: f64) -> f64 {
        match *self {
            Delta::Fixed(d) => d,
            Delta::MatchEps(DeltaKeyword::Eps) => eps,
        }
    }
}

/// A periodic axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub points: usize,
    pub length: f64,
}

/// Grid of the data frame: the axial axis and an optional transverse axis.
/// In the physical frame the transverse period is stretched by `1/√ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
    #[serde(default)]
    pub transverse: Option<AxisSpec>,
}

fn two_pi() -> f64 {
    2.0 * PI
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: 64, length: two_pi(), transverse: None }
    }
}

impl GridSpec {
    pub fn ndim(&self) -> usize {
        1 + usize::from(self.transverse.is_some())
    }

    /// Grid in `frame` at Mach parameter `eps`.
    pub fn grid(&self, frame: Frame, eps: f64) -> Result<Grid> {
        let (axial, trans) = match frame {
            Frame::Physical => ("x1", "x2"),
            Frame::Kzk => ("tau", "y"),
            Frame::Npe => ("z", "y"),
        };
        let mut axes = vec![Axis::periodic(axial, self.length, self.points)];
        if let Some(t) = self.transverse {
            let length = if frame == Frame::Physical { t.length / eps.sqrt() } else { t.length };
            axes.push(Axis::periodic(trans, length, t.points));
        }
        Ok(Grid::new(axes, frame)?)
    }
}

/// Time-stepping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    /// Upper bound on the step of the compared evolutions.
    pub step: f64,
    /// Upper bound on the step of auxiliary paraxial runs (defaults to `step`).
    #[serde(default)]
    pub paraxial_step: Option<f64>,
    #[serde(default = "lawson")]
    pub scheme: Scheme,
}

fn lawson() -> Scheme {
    Scheme::Lawson
}

impl Default for StepSpec {
    fn default() -> Self {
        StepSpec { step: 0.02, paraxial_step: None, scheme: Scheme::Lawson }
    }
}

fn default_samples() -> usize {
    16
}

fn default_fractions() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn default_transient() -> f64 {
    0.2
}

/// One configured study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub pair: StudyPair,
    #[serde(default)]
    pub coeff: BaseCoefficients,
    /// Strictly decreasing Mach parameters.
    pub eps_list: Vec<f64>,
    pub horizon: Horizon,
    #[serde(default)]
    pub grid: GridSpec,
    pub initial: InitialCondition,
    #[serde(default)]
    pub delta: Option<Delta>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub steps: StepSpec,
    /// Snapshots per horizon of the coarsest ε (multiple of 4).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Fractions of the coarsest horizon at which slopes are fitted.
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    /// Fraction of the span discarded before a decay fit.
    #[serde(default = "default_transient")]
    pub transient: f64,
    /// Sobolev order of the norm used by decay fits.
    #[serde(default)]
    pub sobolev_order: u32,
}

fn invalid(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses a configuration, rejecting unknown keys, and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies presets that pin configuration values (the water preset fixes
    /// ε) and validates the result.
    pub fn resolved(mut self) -> Result<Self> {
        if self.initial.preset == Preset::Water {
            self.eps_list = vec![WATER_EPS];
            if let Some(Delta::Fixed(d)) = self.delta {
                self.delta = Some(Delta::Fixed(d.min(WATER_EPS)));
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Checks every invariant.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(invalid("name must not be empty"));
        }
        if self.pair == StudyPair::NsKzk {
            return Err(invalid(
                "pair ns-kzk is not supported: the KZK ansatz lives on a half-space in the propagation direction, \
                 which the periodic flow solver cannot represent",
            ));
        }
        if self.eps_list.is_empty() {
            return Err(invalid("eps_list must not be empty"));
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(invalid("every eps must lie in (0, 1)"));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("eps_list must be strictly decreasing"));
        }
        let eps_min = *self.eps_list.last().expect("non-empty");
        match self.delta {
            Some(Delta::Fixed(d)) if !(d >= 0.0 && d <= eps_min) => {
                return Err(invalid(format!("delta must lie in [0, min eps = {eps_min}], got {d}")));
            }
            _ => {}
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match self.horizon {
            Horizon::OverEps { constant } if !positive(constant) => {
                return Err(invalid("horizon constant must be positive"));
            }
            Horizon::Fixed(span) if !positive(span) => return Err(invalid("horizon must be positive")),
            Horizon::OverEps { .. } if self.pair.paraxial_evolution() => {
                return Err(invalid(format!(
                    "pair {} evolves in a slow variable; give a fixed horizon",
                    self.pair.tag()
                )));
            }
            _ => {}
        }
        let c = &self.coeff;
        if !(positive(c.c)
            && positive(c.rho0)
            && c.gamma > 1.0
            && c.gamma.is_finite()
            && c.nu >= 0.0
            && c.nu.is_finite())
        {
            return Err(invalid("need c > 0, rho0 > 0, gamma > 1, nu >= 0"));
        }
        if self.pair.is_decay() && c.nu == 0.0 {
            return Err(invalid("decay studies need a positive viscosity"));
        }
        let axis_ok = |points: usize, length: f64| points >= 4 && points.is_multiple_of(2) && positive(length);
        if !axis_ok(self.grid.points, self.grid.length) {
            return Err(invalid("grid needs an even number (>= 4) of points and a positive length"));
        }
        if let Some(t) = self.grid.transverse {
            if !axis_ok(t.points, t.length) {
                return Err(invalid("transverse axis needs an even number (>= 4) of points and a positive length"));
            }
        }
        if !positive(self.steps.step) || self.steps.paraxial_step.is_some_and(|s| !positive(s)) {
            return Err(invalid("steps must be positive"));
        }
        if self.samples < 4 || !self.samples.is_multiple_of(4) {
            return Err(invalid("samples must be a positive multiple of 4"));
        }
        if self.fractions.is_empty() || self.fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(invalid("fractions must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.transient) {
            return Err(invalid("transient must lie in [0, 1)"));
        }
        self.initial.validate()?;
        Ok(())
    }

    /// Largest ε of the sweep.
    pub fn eps_max(&self) -> f64 {
        self.eps_list[0]
    }

    /// Spacing of the snapshots, shared by every member.
    pub fn sample_spacing(&self) -> f64 {
        self.horizon.span(self.eps_max()) / self.samples as f64
    }

    /// Number of snapshot intervals of the member at `eps`.
    pub fn member_samples(&self, eps: f64) -> usize {
        ((self.horizon.span(eps) / self.sample_spacing()).round() as usize).max(1)
    }

    /// SHA-256 of the canonical JSON serialization, in hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
