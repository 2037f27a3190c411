//! Scaling studies: one member run per ε, slope fits and verdicts.

use std::time::Instant;

use nlacoustics::ansatz::{
    assemble_ansatz, build_correctors, potential_jet, westervelt_initial_data, westervelt_transform,
};
use nlacoustics::grid::{Field, Frame, Grid};
use nlacoustics::ns_euler::{solve_flow, FlowState};
use nlacoustics::remainders::{evaluate_remainder, Pair, PotentialInput};
use nlacoustics::solvers::{
    kuznetsov_acceleration, solve_kuznetsov, solve_kzk, solve_npe, solve_westervelt, KuznetsovSwitches, ModelKind,
    ModelState, ParaxialOptions, StepControl, Trajectory, WesterveltSwitches,
};
use nlacoustics::spectral::{shift_periodic, spectral_derivative};
use nlacoustics::ModelCoefficients;

use crate::config::{ExperimentConfig, StudyPair};
use crate::error::{ExperimentError, Result};
use crate::fit::{decay_fit, envelope_constants_agree, gronwall_envelope_check, median, power_law_slope, EnvelopeForm};
use crate::norms::{energy_error, flow_error, l2_difference};
use crate::presets::band_limited_perturbation;
use crate::report::{MemberResult, NormKind, Report, RuntimeInfo, SeriesPoint, SlopeFit, Verdict};

/// Self-comparison errors must not exceed this.
pub const SELF_COMPARISON_TOLERANCE: f64 = 1e-13;
/// Median slope required of the Navier–Stokes/Kuznetsov comparison.
pub const NS_KUZNETSOV_MIN_SLOPE: f64 = 1.4;
/// Final error of the Navier–Stokes/Kuznetsov comparison must stay below this multiple of ε.
pub const NS_KUZNETSOV_FINAL_FACTOR: f64 = 2.0;
/// Final error under an initial perturbation must stay below this multiple of ε.
pub const PERTURBED_FINAL_FACTOR: f64 = 3.0;
/// Median energy-norm slope required of the Kuznetsov/Westervelt and Kuznetsov/NPE comparisons.
pub const WAVE_PAIR_MIN_SLOPE: f64 = 1.8;
/// Order of the potential jet fed to the Kuznetsov–KZK remainder.
const REMAINDER_JET_ORDER: usize = 4;

/// How sweep members are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Members run concurrently on a pool of `threads` workers (all logical
    /// cores when `None`).
    #[cfg(feature = "parallel")]
    Parallel {
        threads: Option<usize>,
    },
}

impl Execution {
    /// Parallel with the `THREADS` environment variable as the pool size
    /// when the `parallel` feature is enabled; sequential otherwise.
    pub fn from_env() -> Self {
        #[cfg(feature = "parallel")]
        {
            let threads = std::env::var("THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
            Execution::Parallel { threads }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }

    /// Number of workers this schedule uses.
    pub fn threads(&self) -> usize {
        match *self {
            Execution::Sequential => 1,
            #[cfg(feature = "parallel")]
            Execution::Parallel { threads } => threads.unwrap_or_else(rayon::current_num_threads),
        }
    }
}

/// Snapshot schedule of one member: `intervals` spacings of `spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberPlan {
    pub eps: f64,
    pub delta: f64,
    pub spacing: f64,
    pub intervals: usize,
}

impl MemberPlan {
    pub fn new(cfg: &ExperimentConfig, eps: f64) -> Self {
        MemberPlan {
            eps,
            delta: cfg.delta.map_or(0.0, |d| d.at(eps)),
            spacing: cfg.sample_spacing(),
            intervals: cfg.member_samples(eps),
        }
    }

    pub fn span(&self) -> f64 {
        self.spacing * self.intervals as f64
    }
}

/// Step control recording one snapshot per `spacing` with steps no longer
/// than `max_step`.
pub fn sampled_control(spacing: f64, max_step: f64, scheme: nlacoustics::solvers::Scheme) -> StepControl {
    let n = ((spacing / max_step) - 1e-9).ceil().max(1.0) as usize;
    StepControl { step: spacing / n as f64, scheme, substeps: n }
}

/// Outcome of one successful member run.
#[derive(Debug, Clone, Default)]
struct MemberOutput {
    series: Vec<SeriesPoint>,
    envelope: Option<crate::fit::EnvelopeFit>,
    decay: Option<crate::fit::DecayFit>,
    source_norm: Option<f64>,
    sup_dtau: Option<f64>,
}

struct Member<'a> {
    cfg: &'a ExperimentConfig,
    plan: MemberPlan,
    m: ModelCoefficients,
}

fn check_len(len: usize, plan: &MemberPlan) -> Result<()> {
    if len != plan.intervals + 1 {
        return Err(ExperimentError::Model(nlacoustics::Error::NumericalFailure(format!(
            "expected {} snapshots, got {len}",
            plan.intervals + 1
        ))));
    }
    Ok(())
}

fn series(evols: impl Iterator<Item = f64>, errors: Vec<f64>) -> Vec<SeriesPoint> {
    evols.zip(errors).map(|(evol, error)| SeriesPoint { evol, error }).collect()
}

fn add(a: &Field, b: &[f64]) -> Result<Field> {
    Ok(Field::new(a.grid().clone(), a.components(), a.values().iter().zip(b).map(|(x, y)| x + y).collect())?)
}

impl Member<'_> {
    fn grid(&self, frame: Frame) -> Result<Grid> {
        self.cfg.grid.grid(frame, self.plan.eps)
    }

    fn control(&self) -> StepControl {
        sampled_control(self.plan.spacing, self.cfg.steps.step, self.cfg.steps.scheme)
    }

    /// Control of an auxiliary paraxial run whose evolution is `ε×` the
    /// physical time.
    fn slow_control(&self) -> StepControl {
        let max = self.cfg.steps.paraxial_step.unwrap_or(self.cfg.steps.step * self.plan.eps);
        sampled_control(self.plan.eps * self.plan.spacing, max, self.cfg.steps.scheme)
    }

    fn perturbation(&self, grid: &Grid, components: usize) -> Result<Vec<Vec<f64>>> {
        band_limited_perturbation(grid, components, self.plan.delta, self.cfg.seed)
    }

    /// Right-travelling Kuznetsov data `(u0, −c ∂x1 u0)` from the preset.
    fn kuznetsov_data(&self) -> Result<(Field, Field)> {
        let grid = self.grid(Frame::Physical)?;
        let u0 = self.cfg.initial.sample(&grid, self.plan.eps)?;
        let d = spectral_derivative(&u0, "x1", 1)?;
        let u1 = Field::scalar(grid, d.values().iter().map(|v| -self.m.c * v).collect())?;
        Ok((u0, u1))
    }

    fn kuznetsov(&self, u0: &Field, u1: &Field) -> Result<Trajectory> {
        let traj = solve_kuznetsov(&self.m, u0, u1, self.plan.span(), &self.control(), KuznetsovSwitches::default())?;
        check_len(traj.len(), &self.plan)?;
        Ok(traj)
    }

    fn paraxial_profile(&self, frame: Frame) -> Result<Field> {
        self.cfg.initial.sample(&self.grid(frame)?, self.plan.eps)
    }

    fn npe_slow_run(&self) -> Result<Trajectory> {
        let xi0 = self.paraxial_profile(Frame::Npe)?;
        let traj = solve_npe(
            &self.m,
            &xi0,
            self.plan.eps * self.plan.span(),
            &self.slow_control(),
            ParaxialOptions::default(),
        )?;
        check_len(traj.len(), &self.plan)?;
        Ok(traj)
    }

    fn flow_run(&self, init: &FlowState) -> Result<Vec<FlowState>> {
        let traj = solve_flow(&self.m, init, self.plan.span(), &self.control())?;
        check_len(traj.len(), &self.plan)?;
        Ok(traj.into_iter().map(|s| s.state).collect())
    }

    fn perturb_flow(&self, u: &FlowState) -> Result<FlowState> {
        if self.plan.delta == 0.0 {
            return Ok(u.clone());
        }
        let grid = u.grid().clone();
        let p = self.perturbation(&grid, 1 + grid.ndim())?;
        let rho = add(&u.rho, &p[0])?;
        let mom = u
            .momentum
            .split_components()
            .iter()
            .zip(&p[1..])
            .map(|(m, q)| m.iter().zip(q).map(|(a, b)| a + b).collect())
            .collect::<Vec<Vec<f64>>>();
        Ok(FlowState::new(rho, Field::from_components(grid, &mom)?)?)
    }

    fn kuznetsov_flow(&self, state: &ModelState) -> Result<FlowState> {
        let corr = build_correctors(ModelKind::Kuznetsov, &self.m, state)?;
        Ok(assemble_ansatz(ModelKind::Kuznetsov, &self.m, state, &corr)?.to_flow_state()?)
    }

    /// NPE ansatz flow at physical time `t`, translated to the laboratory frame.
    fn npe_flow(&self, state: &ModelState, t: f64, physical: &Grid) -> Result<FlowState> {
        let corr = build_correctors(ModelKind::Npe, &self.m, state)?;
        let flow = assemble_ansatz(ModelKind::Npe, &self.m, state, &corr)?;
        let shift = self.m.c * t;
        let rho = shift_periodic(&flow.rho, "z", shift)?.with_grid(physical.clone())?;
        let vel = shift_periodic(&flow.velocity, "z", shift)?.with_grid(physical.clone())?;
        Ok(FlowState::from_velocity(rho, &vel.split_components())?)
    }

    /// `(ū, ∂t ū)` at physical time `t` with `ū(t, x) = Ψ(εt, x1 − ct, √ε x′)`.
    fn npe_potential(&self, state: &ModelState, t: f64, physical: &Grid) -> Result<(Field, Field)> {
        let jet = potential_jet(ModelKind::Npe, &self.m, state, 1)?;
        let dz = spectral_derivative(&jet[0], "z", 1)?;
        let rate: Vec<f64> =
            jet[1].values().iter().zip(dz.values()).map(|(pt, pz)| self.m.eps * pt - self.m.c * pz).collect();
        let rate = Field::scalar(jet[0].grid().clone(), rate)?;
        let shift = self.m.c * t;
        Ok((
            shift_periodic(&jet[0], "z", shift)?.with_grid(physical.clone())?,
            shift_periodic(&rate, "z", shift)?.with_grid(physical.clone())?,
        ))
    }

    fn run(&self) -> Result<MemberOutput> {
        let times = |n: usize| (0..n).map(move |k| k as f64 * self.plan.spacing);
        let count = self.plan.intervals + 1;
        match self.cfg.pair {
            StudyPair::NsKuznetsov => {
                let (u0, u1) = self.kuznetsov_data()?;
                let kuz = self.kuznetsov(&u0, &u1)?;
                let approx: Vec<FlowState> = kuz.iter().map(|s| self.kuznetsov_flow(s)).collect::<Result<_>>()?;
                let flow = self.flow_run(&self.perturb_flow(&approx[0])?)?;
                let errs = flow.iter().zip(&approx).map(|(a, b)| flow_error(a, b)).collect::<Result<_>>()?;
                Ok(MemberOutput { series: series(times(count), errs), ..Default::default() })
            }
            StudyPair::NsNpe => {
                let physical = self.grid(Frame::Physical)?;
                let npe = self.npe_slow_run()?;
                let approx: Vec<FlowState> =
                    npe.iter().zip(times(count)).map(|(s, t)| self.npe_flow(s, t, &physical)).collect::<Result<_>>()?;
                let flow = self.flow_run(&self.perturb_flow(&approx[0])?)?;
                let errs = flow.iter().zip(&approx).map(|(a, b)| flow_error(a, b)).collect::<Result<_>>()?;
                Ok(MemberOutput { series: series(times(count), errs), ..Default::default() })
            }
            StudyPair::KuznetsovWestervelt => {
                let (u0, u1) = self.kuznetsov_data()?;
                let kuz = self.kuznetsov(&u0, &u1)?;
                let (pi0, pi1) = westervelt_initial_data(&self.m, &u0, &u1)?;
                let (pi0, pi1) = if self.plan.delta > 0.0 {
                    let p = self.perturbation(pi0.grid(), 2)?;
                    (add(&pi0, &p[0])?, add(&pi1, &p[1])?)
                } else {
                    (pi0, pi1)
                };
                let wes = solve_westervelt(
                    &self.m,
                    &pi0,
                    &pi1,
                    self.plan.span(),
                    &self.control(),
                    WesterveltSwitches::default(),
                )?;
                check_len(wes.len(), &self.plan)?;
                let k = self.m.eps / (self.m.c * self.m.c);
                let errs = wes
                    .iter()
                    .zip(&kuz)
                    .map(|(w, s)| {
                        let u = &s.primary;
                        let ut = s.velocity.as_ref().expect("wave states carry a velocity");
                        let utt = kuznetsov_acceleration(&self.m, KuznetsovSwitches::default(), u, ut)?;
                        let target = westervelt_transform(&self.m, u, ut)?;
                        let rate: Vec<f64> = (0..u.values().len())
                            .map(|i| {
                                let (a, b, c) = (u.values()[i], ut.values()[i], utt.values()[i]);
                                b + k * (b * b + a * c)
                            })
                            .collect();
                        let rate = Field::scalar(u.grid().clone(), rate)?;
                        energy_error(
                            &w.primary,
                            w.velocity.as_ref().expect("wave states carry a velocity"),
                            &target,
                            &rate,
                        )
                    })
                    .collect::<Result<_>>()?;
                Ok(MemberOutput { series: series(times(count), errs), ..Default::default() })
            }
            StudyPair::KuznetsovNpe => {
                let physical = self.grid(Frame::Physical)?;
                let npe = self.npe_slow_run()?;
                let targets: Vec<(Field, Field)> = npe
                    .iter()
                    .zip(times(count))
                    .map(|(s, t)| self.npe_potential(s, t, &physical))
                    .collect::<Result<_>>()?;
                let (mut u0, mut u1) = targets[0].clone();
                if self.plan.delta > 0.0 {
                    let p = self.perturbation(&physical, 2)?;
                    u0 = add(&u0, &p[0])?;
                    u1 = add(&u1, &p[1])?;
                }
                let kuz = self.kuznetsov(&u0, &u1)?;
                let errs = kuz
                    .iter()
                    .zip(&targets)
                    .map(|(s, (ub, ubt))| {
                        energy_error(&s.primary, s.velocity.as_ref().expect("wave states carry a velocity"), ub, ubt)
                    })
                    .collect::<Result<_>>()?;
                Ok(MemberOutput { series: series(times(count), errs), ..Default::default() })
            }
            StudyPair::KuznetsovKzk => self.perturbed_kzk(),
            StudyPair::KzkDecay | StudyPair::NpeDecay => {
                let kind = self.cfg.pair.decay_model().expect("decay pair");
                let traj = self.paraxial(kind, None)?;
                let fit = decay_fit(&traj, &self.m, self.cfg.sobolev_order, self.cfg.transient)?;
                let norms =
                    traj.iter().map(|s| crate::norms::sobolev_norm(&s.primary, self.cfg.sobolev_order)).collect();
                Ok(MemberOutput {
                    series: series(traj.iter().map(|s| s.evol), norms),
                    decay: Some(fit),
                    ..Default::default()
                })
            }
            StudyPair::NsNs => {
                let (u0, u1) = self.kuznetsov_data()?;
                let state = ModelState { model: ModelKind::Kuznetsov, evol: 0.0, primary: u0, velocity: Some(u1) };
                let init = self.kuznetsov_flow(&state)?;
                let (a, b) = (self.flow_run(&init)?, self.flow_run(&init)?);
                let errs = a.iter().zip(&b).map(|(x, y)| flow_error(x, y)).collect::<Result<_>>()?;
                Ok(MemberOutput { series: series(times(count), errs), ..Default::default() })
            }
            StudyPair::KuznetsovKuznetsov | StudyPair::WesterveltWestervelt => {
                let (u0, u1) = self.kuznetsov_data()?;
                let run = || -> Result<Trajectory> {
                    if self.cfg.pair == StudyPair::KuznetsovKuznetsov {
                        self.kuznetsov(&u0, &u1)
                    } else {
                        let (p0, p1) = westervelt_initial_data(&self.m, &u0, &u1)?;
                        let t = solve_westervelt(
                            &self.m,
                            &p0,
                            &p1,
                            self.plan.span(),
                            &self.control(),
                            WesterveltSwitches::default(),
                        )?;
                        check_len(t.len(), &self.plan)?;
                        Ok(t)
                    }
                };
                let (a, b) = (run()?, run()?);
                let errs = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| {
                        crate::norms::l2_error(crate::norms::Comparable::Model(x), crate::norms::Comparable::Model(y))
                    })
                    .collect::<Result<_>>()?;
                Ok(MemberOutput { series: series(times(count), errs), ..Default::default() })
            }
            StudyPair::KzkKzk | StudyPair::NpeNpe => {
                let kind = if self.cfg.pair == StudyPair::KzkKzk { ModelKind::Kzk } else { ModelKind::Npe };
                let (a, b) = (self.paraxial(kind, None)?, self.paraxial(kind, None)?);
                let errs =
                    a.iter().zip(&b).map(|(x, y)| l2_difference(&x.primary, &y.primary)).collect::<Result<_>>()?;
                Ok(MemberOutput { series: series(times(count), errs), ..Default::default() })
            }
            StudyPair::NsKzk => Err(ExperimentError::Config("pair ns-kzk is not supported".into())),
        }
    }

    /// A paraxial run over the configured span from the preset profile plus
    /// an optional additive perturbation.
    fn paraxial(&self, kind: ModelKind, perturbation: Option<&[f64]>) -> Result<Trajectory> {
        let frame = if kind == ModelKind::Kzk { Frame::Kzk } else { Frame::Npe };
        let mut f0 = self.paraxial_profile(frame)?;
        if let Some(p) = perturbation {
            f0 = add(&f0, p)?;
        }
        let traj = if kind == ModelKind::Kzk {
            solve_kzk(&self.m, &f0, self.plan.span(), &self.control(), ParaxialOptions::default(), None)?
        } else {
            solve_npe(&self.m, &f0, self.plan.span(), &self.control(), ParaxialOptions::default())?
        };
        check_len(traj.len(), &self.plan)?;
        Ok(traj)
    }

    /// KZK run against the KZK run forced by minus the Kuznetsov–KZK
    /// remainder of its own potential.
    fn perturbed_kzk(&self) -> Result<MemberOutput> {
        let plain = self.paraxial(ModelKind::Kzk, None)?;
        let grid = plain[0].primary.grid().clone();
        let m = self.m;
        let source_at = move |z: f64, i: &Field| -> nlacoustics::Result<Field> {
            let state = ModelState { model: ModelKind::Kzk, evol: z, primary: i.clone(), velocity: None };
            let jet = potential_jet(ModelKind::Kzk, &m, &state, REMAINDER_JET_ORDER)?;
            let r = evaluate_remainder(Pair::KuznetsovKzk, &m, &PotentialInput::Jet(jet), Default::default())?;
            let total = &r.totals[0].1;
            Field::scalar(total.grid().clone(), total.values().iter().map(|v| -v).collect())
        };
        let mut f0 = self.paraxial_profile(Frame::Kzk)?;
        if self.plan.delta > 0.0 {
            f0 = add(&f0, &self.perturbation(&grid, 1)?[0])?;
        }
        let forced =
            solve_kzk(&m, &f0, self.plan.span(), &self.control(), ParaxialOptions::default(), Some(&source_at))?;
        check_len(forced.len(), &self.plan)?;
        let errs: Vec<f64> =
            plain.iter().zip(&forced).map(|(a, b)| l2_difference(&a.primary, &b.primary)).collect::<Result<_>>()?;
        let mut source_norm = 0.0_f64;
        for s in &forced {
            source_norm = source_norm.max(source_at(s.evol, &s.primary)?.l2_norm());
        }
        let mut sup_dtau = 0.0_f64;
        for s in &plain {
            sup_dtau = sup_dtau.max(spectral_derivative(&s.primary, "tau", 1)?.linf_norm());
        }
        let pts = series(plain.iter().map(|s| s.evol), errs);
        let env: Vec<(f64, f64)> = pts.iter().map(|p| (p.evol, p.error)).collect();
        let envelope = gronwall_envelope_check(&env, self.plan.eps, EnvelopeForm::LinearTimesExponential)?;
        Ok(MemberOutput {
            series: pts,
            envelope: Some(envelope),
            decay: None,
            source_norm: Some(source_norm),
            sup_dtau: Some(sup_dtau),
        })
    }
}

/// Runs the member at `eps`, capturing failures in the result.
pub fn run_member(cfg: &ExperimentConfig, eps: f64) -> (MemberResult, f64) {
    let start = Instant::now();
    let plan = MemberPlan::new(cfg, eps);
    let outcome = cfg.coeff.at(eps).and_then(|m| Member { cfg, plan, m }.run());
    let mut res = MemberResult {
        eps,
        delta: plan.delta,
        span: plan.span(),
        series: Vec::new(),
        failure: None,
        numerical_failure: false,
        envelope: None,
        decay: None,
        source_norm: None,
        sup_dtau: None,
    };
    match outcome {
        Ok(out) => {
            res.series = out.series;
            res.envelope = out.envelope;
            res.decay = out.decay;
            res.source_norm = out.source_norm;
            res.sup_dtau = out.sup_dtau;
        }
        Err(e) => {
            res.numerical_failure = e.is_numerical();
            res.failure = Some(e.to_string());
        }
    }
    (res, start.elapsed().as_secs_f64())
}

/// Runs every member of the sweep, in ε order, under `exec`.
pub fn run_members(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<(MemberResult, f64)>> {
    match exec {
        Execution::Sequential => Ok(cfg.eps_list.iter().map(|&e| run_member(cfg, e)).collect()),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            use rayon::prelude::*;
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                builder = builder.num_threads(n);
            }
            let pool = builder.build().map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(|| cfg.eps_list.par_iter().map(|&e| run_member(cfg, e)).collect()))
        }
    }
}

/// Error of each successful member at sample `index` (`None` if failed or short).
fn errors_at(members: &[MemberResult], index: usize) -> (Vec<f64>, Vec<f64>) {
    members.iter().filter(|m| m.failure.is_none()).filter_map(|m| m.series.get(index).map(|p| (m.eps, p.error))).unzip()
}

fn slope_fits(cfg: &ExperimentConfig, members: &[MemberResult]) -> Vec<SlopeFit> {
    cfg.fractions
        .iter()
        .map(|&f| {
            let index = (f * cfg.samples as f64).round() as usize;
            let (eps, errors) = errors_at(members, index);
            let slope = power_law_slope(&eps, &errors);
            SlopeFit { fraction: f, evol: index as f64 * cfg.sample_spacing(), eps, errors, slope }
        })
        .collect()
}

fn final_errors_within(members: &[MemberResult], factor: f64) -> (bool, String) {
    let mut ok = !members.is_empty();
    let mut parts = Vec::new();
    for m in members {
        match (&m.failure, m.series.last()) {
            (None, Some(p)) => {
                ok &= p.error <= factor * m.eps;
                parts.push(format!("eps={}: {:.3e} (limit {:.3e})", m.eps, p.error, factor * m.eps));
            }
            _ => {
                ok = false;
                parts.push(format!("eps={}: failed", m.eps));
            }
        }
    }
    (ok, parts.join("; "))
}

/// Attaches the verdicts that apply to the study's pair.
fn verdicts(cfg: &ExperimentConfig, report: &Report) -> Vec<Verdict> {
    let members = &report.members;
    let slope_text = report.median_slope.map_or("undefined".to_string(), |s| format!("{s:.3}"));
    let all_ok = members.iter().all(|m| m.failure.is_none());
    let perturbed = members.iter().any(|m| m.delta > 0.0);
    let mut out = Vec::new();
    match cfg.pair {
        StudyPair::NsKuznetsov if perturbed => {
            let (ok, detail) = final_errors_within(members, PERTURBED_FINAL_FACTOR);
            out.push(Verdict::new("A11", ok, format!("final error <= {PERTURBED_FINAL_FACTOR} eps: {detail}")));
        }
        StudyPair::NsKuznetsov => {
            let slope_ok = report.median_slope.is_some_and(|s| s >= NS_KUZNETSOV_MIN_SLOPE);
            let (final_ok, detail) = final_errors_within(members, NS_KUZNETSOV_FINAL_FACTOR);
            out.push(Verdict::new(
                "A6",
                slope_ok && final_ok && all_ok,
                format!("median slope {slope_text} (>= {NS_KUZNETSOV_MIN_SLOPE}); final error <= 2 eps: {detail}"),
            ));
        }
        StudyPair::KuznetsovWestervelt | StudyPair::KuznetsovNpe => {
            let slope_ok = report.median_slope.is_some_and(|s| s >= WAVE_PAIR_MIN_SLOPE);
            out.push(Verdict::new(
                "A7",
                slope_ok && all_ok,
                format!("{}: median energy-norm slope {slope_text} (>= {WAVE_PAIR_MIN_SLOPE})", cfg.pair.tag()),
            ));
        }
        StudyPair::KuznetsovKzk => {
            let fits: Vec<_> = members.iter().filter_map(|m| m.envelope.clone()).collect();
            let inside = all_ok && fits.len() == members.len() && fits.iter().all(|f| f.within_envelope);
            let agree = envelope_constants_agree(&fits);
            let detail = fits
                .iter()
                .map(|f| format!("eps={}: C1={:.4} C2={:.4} max ratio {:.3}", f.eps, f.c1, f.c2, f.max_ratio))
                .collect::<Vec<_>>()
                .join("; ");
            out.push(Verdict::new(
                "A8",
                inside && agree,
                format!("within 1.1x envelope: {inside}; constants within 25%: {agree}; {detail}"),
            ));
        }
        StudyPair::KzkDecay | StudyPair::NpeDecay => {
            let fits: Vec<_> = members.iter().filter_map(|m| m.decay.clone()).collect();
            let ok = all_ok && fits.len() == members.len() && fits.iter().all(|f| f.passed);
            let detail = fits
                .iter()
                .map(|f| format!("rate {:.4e}, residual {:.3e} of range {:.3e}", f.rate, f.residual, f.dynamic_range))
                .collect::<Vec<_>>()
                .join("; ");
            out.push(Verdict::new("A9", ok, detail));
        }
        p if p.is_self_comparison() => {
            let worst = members.iter().flat_map(|m| m.series.iter().map(|s| s.error)).fold(0.0, f64::max);
            out.push(Verdict::new(
                "A12",
                all_ok && worst <= SELF_COMPARISON_TOLERANCE,
                format!("identical runs differ by at most {worst:.3e}"),
            ));
        }
        _ => {}
    }
    out
}

/// Runs the configured sweep and assembles its report (ordered by ε).
pub fn scaling_study_with(cfg: &ExperimentConfig, exec: Execution) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let runs = run_members(cfg, exec)?;
    let (members, member_seconds): (Vec<MemberResult>, Vec<f64>) = runs.into_iter().unzip();
    let mut report = Report {
        name: cfg.name.clone(),
        pair: cfg.pair.tag().to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        norm: if cfg.pair.is_decay() {
            NormKind::Sobolev(cfg.sobolev_order)
        } else if cfg.pair.uses_energy_norm() {
            NormKind::Energy
        } else {
            NormKind::L2
        },
        members,
        ..Report::default()
    };
    if !cfg.pair.is_decay() {
        report.slopes = slope_fits(cfg, &report.members);
        let slopes: Vec<f64> = report.slopes.iter().filter_map(|s| s.slope).collect();
        report.median_slope = if slopes.len() == report.slopes.len() { median(&slopes) } else { None };
        if report.median_slope.is_none() {
            report.flags.push("slope undefined: fewer than two members with positive finite errors".into());
        }
    }
    for m in &report.members {
        if let Some(f) = &m.failure {
            report.flags.push(format!("eps={} failed: {f}", m.eps));
        }
    }
    report.verdicts = verdicts(cfg, &report);
    report.runtime = RuntimeInfo::new(exec.threads(), start.elapsed().as_secs_f64(), member_seconds);
    Ok(report)
}

/// [`scaling_study_with`] under [`Execution::from_env`].
pub fn scaling_study(cfg: &ExperimentConfig) -> Result<Report> {
    scaling_study_with(cfg, Execution::from_env())
}
