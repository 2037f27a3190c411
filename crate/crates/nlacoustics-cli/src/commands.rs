//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use nlacoustics::ansatz::{assemble_ansatz, build_correctors};
use nlacoustics::grid::{Field, Frame};
use nlacoustics::ns_euler::{solve_flow, StateLaw};
use nlacoustics::paf1;
use nlacoustics::remainders::{
    default_oracle_grid, evaluate_remainder, residual_consistency, sample_levels, smooth_test_potential, Pair,
};
use nlacoustics::solvers::{solve_kuznetsov, solve_kzk, solve_npe, solve_westervelt, ModelKind, ModelState};
use nlacoustics::spectral::spectral_derivative;
use nlacoustics_experiments::report::emit_report;
use nlacoustics_experiments::study::MemberPlan;
use nlacoustics_experiments::{scaling_study_with, Execution, ExperimentConfig, Report, StudyPair};
use serde_json::json;

use crate::cli::{Cli, Command, FrameArg, SolveModel};
use crate::config::{hash_json, InitialRate, Payload, ResidualPayload, RunConfig, SolvePayload, TransformPayload};
use crate::error::{CliError, Result};
use crate::output::{create_dir, write_flow_trajectory, write_json, write_model_trajectory, Manifest};
use crate::transform::transform_field;

/// Global options shared by every subcommand.
struct Context {
    dry_run: bool,
    output_dir: Option<PathBuf>,
    log_level_from_flag: bool,
}

impl Context {
    fn output_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone())
    }

    /// Loads `path` and checks that it carries the payload of `subcommand`.
    fn load(&self, path: &Path, subcommand: &str) -> Result<RunConfig> {
        let cfg = RunConfig::from_file(path)?;
        if !self.log_level_from_flag {
            log::set_max_level(cfg.log_level.filter());
        }
        if cfg.run.name() != subcommand {
            return Err(CliError::Config(format!(
                "{} holds a `{}` payload but `{subcommand}` was requested",
                path.display(),
                cfg.run.name()
            )));
        }
        Ok(cfg)
    }
}

/// Prints a dry-run plan on standard output (a closed pipe is not an error).
fn print_plan(plan: &serde_json::Value) {
    let text = serde_json::to_string_pretty(plan).expect("plan serializes");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

/// Runs the parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let ctx =
        Context { dry_run: cli.dry_run, output_dir: cli.output_dir, log_level_from_flag: cli.log_level.is_some() };
    match cli.command {
        Command::Solve { model, config } => solve(&ctx, model, &config),
        Command::Compare { pair, config } => study(&ctx, "compare", Some(&pair), &config),
        Command::Sweep { config } => study(&ctx, "sweep", None, &config),
        Command::Residual { pair, config } => residual(&ctx, &pair, &config),
        Command::Transform { from, to, input, output, config, eps, c, at } => {
            transform(&ctx, from, to, &input, &output, config.as_deref(), eps, c, at)
        }
    }
}

fn finish_manifest(dir: &Path, mut manifest: Manifest, outputs: &[PathBuf]) -> Result<()> {
    manifest.outputs = outputs.iter().map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string()).collect();
    write_json(&dir.join("manifest.json"), &manifest)
}

// ---- solve ----

fn solve(ctx: &Context, model: SolveModel, path: &Path) -> Result<()> {
    let cfg = ctx.load(path, "solve")?;
    let Payload::Solve(p) = &cfg.run else { unreachable!("payload checked by load") };
    let mut coeff = p.coeff;
    coeff.validate()?;
    if model == SolveModel::Euler && coeff.nu != 0.0 {
        warn!("euler ignores the configured viscosity nu = {}", coeff.nu);
        coeff = coeff.with_nu(0.0)?;
    }
    p.steps.validate()?;
    if !(p.span >= 0.0 && p.span.is_finite()) {
        return Err(CliError::Config(format!("span must be >= 0, got {}", p.span)));
    }
    let grid = p.grid.grid(model.frame(), coeff.eps)?;
    let (steps, step) = p.steps.partition(p.span);
    let hash = cfg.hash();
    if ctx.dry_run {
        print_plan(&json!({
            "subcommand": "solve",
            "model": model.tag(),
            "config_hash": hash,
            "coefficients": coeff,
            "grid": grid.axes(),
            "frame": grid.frame().tag(),
            "evolution": model.evolution(),
            "span": p.span,
            "steps": steps,
            "step": step,
            "scheme": p.steps.scheme,
            "snapshots": steps.div_ceil(p.steps.substeps) + 1,
            "output_dir": ctx.output_dir(&cfg),
        }));
        return Ok(());
    }
    let dir = ctx.output_dir(&cfg);
    create_dir(&dir)?;
    let traj_dir = dir.join("trajectory");
    info!("solving {} on {} points over {} = {} in {steps} steps", model.tag(), grid.len(), model.evolution(), p.span);
    let index = run_solve(model, p, coeff, &grid, &traj_dir, &hash)?;
    info!("wrote trajectory index {}", index.display());
    let manifest = Manifest::new("solve", hash, serde_json::to_value(&cfg).expect("config serializes"));
    finish_manifest(&dir, manifest, &[index])
}

fn wave_data(
    p: &SolvePayload,
    coeff: &nlacoustics::ModelCoefficients,
    grid: &nlacoustics::Grid,
) -> Result<(Field, Field)> {
    let u0 = p.initial.sample(grid, coeff.eps)?;
    let u1 = match p.initial_rate {
        InitialRate::Rest => Field::zeros(grid.clone(), 1),
        InitialRate::RightGoing => {
            let d = spectral_derivative(&u0, "x1", 1)?;
            Field::scalar(grid.clone(), d.values().iter().map(|v| -coeff.c * v).collect())?
        }
    };
    Ok((u0, u1))
}

fn run_solve(
    model: SolveModel,
    p: &SolvePayload,
    coeff: nlacoustics::ModelCoefficients,
    grid: &nlacoustics::Grid,
    dir: &Path,
    hash: &str,
) -> Result<PathBuf> {
    let write = |traj: &[ModelState]| write_model_trajectory(dir, model.tag(), model.evolution(), coeff, hash, traj);
    match model {
        SolveModel::Kuznetsov => {
            let (u0, u1) = wave_data(p, &coeff, grid)?;
            write(&solve_kuznetsov(&coeff, &u0, &u1, p.span, &p.steps, p.kuznetsov)?)
        }
        SolveModel::Westervelt => {
            let (pi0, pi1) = wave_data(p, &coeff, grid)?;
            write(&solve_westervelt(&coeff, &pi0, &pi1, p.span, &p.steps, p.westervelt)?)
        }
        SolveModel::Kzk => {
            let i0 = p.initial.sample(grid, coeff.eps)?;
            write(&solve_kzk(&coeff, &i0, p.span, &p.steps, p.paraxial, None)?)
        }
        SolveModel::Npe => {
            let xi0 = p.initial.sample(grid, coeff.eps)?;
            write(&solve_npe(&coeff, &xi0, p.span, &p.steps, p.paraxial)?)
        }
        SolveModel::Ns | SolveModel::Euler => {
            // The flow starts from the Kuznetsov ansatz of the preset wave.
            let (u0, u1) = wave_data(p, &coeff, grid)?;
            let state = ModelState { model: ModelKind::Kuznetsov, evol: 0.0, primary: u0, velocity: Some(u1) };
            let corr = build_correctors(ModelKind::Kuznetsov, &coeff, &state)?;
            let init = assemble_ansatz(ModelKind::Kuznetsov, &coeff, &state, &corr)?.to_flow_state()?;
            let traj = solve_flow(&coeff, &init, p.span, &p.steps)?;
            write_flow_trajectory(dir, model.tag(), coeff, StateLaw::default(), hash, &traj)
        }
    }
}

// ---- compare / sweep ----

fn member_plan(cfg: &ExperimentConfig) -> serde_json::Value {
    cfg.eps_list
        .iter()
        .map(|&eps| {
            let plan = MemberPlan::new(cfg, eps);
            json!({ "eps": eps, "delta": plan.delta, "span": plan.span(), "snapshots": plan.intervals + 1 })
        })
        .collect()
}

fn study(ctx: &Context, subcommand: &str, pair: Option<&str>, path: &Path) -> Result<()> {
    let cfg = ctx.load(path, subcommand)?;
    let (Payload::Compare(exp) | Payload::Sweep(exp)) = &cfg.run else { unreachable!("payload checked by load") };
    let exp = exp.clone().resolved()?;
    if let Some(tag) = pair {
        let requested = StudyPair::from_tag(tag)?;
        if requested != exp.pair {
            return Err(CliError::Config(format!(
                "--pair {tag} does not match the configured pair {}",
                exp.pair.tag()
            )));
        }
    }
    let exec = Execution::from_env();
    if ctx.dry_run {
        print_plan(&json!({
            "subcommand": subcommand,
            "pair": exp.pair.tag(),
            "config_hash": cfg.hash(),
            "experiment_hash": exp.hash(),
            "threads": exec.threads(),
            "members": member_plan(&exp),
            "fractions": exp.fractions,
            "experiment": exp,
            "output_dir": ctx.output_dir(&cfg),
        }));
        return Ok(());
    }
    let dir = ctx.output_dir(&cfg);
    info!("{subcommand} {} over eps {:?} on {} thread(s)", exp.pair.tag(), exp.eps_list, exec.threads());
    let report = scaling_study_with(&exp, exec)?;
    log_report(&report);
    let files = emit_report(&report, &dir)?;
    let mut outputs = vec![files.json, files.csv];
    outputs.extend(files.svg);
    let manifest = Manifest::new(subcommand, cfg.hash(), serde_json::to_value(&cfg).expect("config serializes"));
    finish_manifest(&dir, manifest, &outputs)?;
    info!("wrote report to {}", dir.display());
    if let Some(m) = report.members.iter().find(|m| m.numerical_failure) {
        return Err(CliError::Numerical(format!(
            "eps = {}: {}",
            m.eps,
            m.failure.as_deref().unwrap_or("member failed")
        )));
    }
    if subcommand == "sweep" && !report.passed() {
        let failed: Vec<&str> = report.verdicts.iter().filter(|v| !v.passed).map(|v| v.criterion.as_str()).collect();
        return Err(CliError::Verdict(failed.join(", ")));
    }
    Ok(())
}

fn log_report(report: &Report) {
    for m in &report.members {
        match (&m.failure, m.series.last()) {
            (Some(f), _) => warn!("eps = {}: {f}", m.eps),
            (None, Some(last)) => info!("eps = {}: final error {:.3e} at {}", m.eps, last.error, last.evol),
            (None, None) => {}
        }
    }
    if let Some(s) = report.median_slope {
        info!("median slope {s:.3}");
    }
    for f in &report.flags {
        warn!("{f}");
    }
    for v in &report.verdicts {
        info!("{} {}: {}", v.criterion, if v.passed { "pass" } else { "FAIL" }, v.detail);
    }
}

// ---- residual ----

fn residual(ctx: &Context, tag: &str, path: &Path) -> Result<()> {
    let cfg = ctx.load(path, "residual")?;
    let Payload::Residual(p) = &cfg.run else { unreachable!("payload checked by load") };
    let pair = Pair::from_tag(tag)?;
    check_residual(p)?;
    let grid = match &p.grid {
        Some(g) => g.grid(pair.frame(), p.coeff.eps)?,
        None => default_oracle_grid(pair)?,
    };
    if ctx.dry_run {
        let spacings: Vec<f64> = (0..=p.refinements).map(|k| p.spacing / 2f64.powi(k as i32)).collect();
        print_plan(&json!({
            "subcommand": "residual",
            "pair": pair.tag(),
            "config_hash": cfg.hash(),
            "coefficients": p.coeff,
            "options": p.options,
            "grid": grid.axes(),
            "frame": grid.frame().tag(),
            "spacings": spacings,
            "output_dir": ctx.output_dir(&cfg),
        }));
        return Ok(());
    }
    let dir = ctx.output_dir(&cfg);
    create_dir(&dir)?;
    let input = sample_levels(&grid, p.spacing, &smooth_test_potential)?;
    let eval = evaluate_remainder(pair, &p.coeff, &input, p.options)?;
    let csv_path = dir.join("residual.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| csv_error(&csv_path, e))?;
    let mut rows =
        vec![["pair".to_string(), "term_id".into(), "eps_power".into(), "l2_norm".into(), "linf_norm".into()]];
    for t in &eval.terms {
        rows.push([
            pair.tag().into(),
            t.id.clone(),
            t.eps_power.to_string(),
            fmt(t.value.l2_norm()),
            fmt(t.value.linf_norm()),
        ]);
    }
    for (g, total) in &eval.totals {
        rows.push([
            pair.tag().into(),
            format!("total:{}", g.label()),
            pair.grade().to_string(),
            fmt(total.l2_norm()),
            fmt(total.linf_norm()),
        ]);
    }
    for r in &rows {
        w.write_record(r).map_err(|e| csv_error(&csv_path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    let report =
        residual_consistency(pair, &p.coeff, &grid, p.options, p.spacing, p.refinements, &smooth_test_potential)?;
    let json_path = dir.join("consistency.json");
    write_json(&json_path, &report)?;
    info!("{}: {} terms; defects {:?}; ratios {:?}", pair.tag(), eval.terms.len(), report.defects, report.ratios);
    if report.passed {
        info!(
            "consistency oracle passed{}",
            if report.exact_to_roundoff { " (identity exact to roundoff)" } else { "" }
        );
    } else {
        warn!("consistency oracle failed: defect does not shrink at second order");
    }
    let manifest = Manifest::new("residual", cfg.hash(), serde_json::to_value(&cfg).expect("config serializes"));
    finish_manifest(&dir, manifest, &[csv_path, json_path])
}

fn check_residual(p: &ResidualPayload) -> Result<()> {
    p.coeff.validate()?;
    if !(p.spacing > 0.0 && p.spacing.is_finite()) {
        return Err(CliError::Config(format!("spacing must be positive, got {}", p.spacing)));
    }
    if p.refinements == 0 {
        return Err(CliError::Config("refinements must be >= 1".into()));
    }
    Ok(())
}

fn fmt(v: f64) -> String {
    nlacoustics_experiments::report::format_value(v)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Config(format!("{}: {other:?}", path.display())),
    }
}

// ---- transform ----

#[allow(clippy::too_many_arguments)]
fn transform(
    ctx: &Context,
    from: FrameArg,
    to: FrameArg,
    input: &Path,
    output: &Path,
    config: Option<&Path>,
    eps: Option<f64>,
    c: Option<f64>,
    at: Option<f64>,
) -> Result<()> {
    let base = match config {
        Some(path) => {
            let cfg = ctx.load(path, "transform")?;
            let Payload::Transform(t) = cfg.run else { unreachable!("payload checked by load") };
            Some(t)
        }
        None => None,
    };
    let eps = eps
        .or(base.map(|b| b.eps))
        .ok_or_else(|| CliError::Config("transform needs --eps (or a config with a transform payload)".into()))?;
    let params = TransformPayload {
        c: c.or(base.map(|b| b.c)).unwrap_or(1.0),
        eps,
        at: at.or(base.map(|b| b.at)).unwrap_or(0.0),
    };
    if !(params.c > 0.0 && params.c.is_finite()) || !(params.eps > 0.0 && params.eps < 1.0) || !params.at.is_finite() {
        return Err(CliError::Config(format!("need c > 0, 0 < eps < 1 and a finite slice (got {params:?})")));
    }
    let field = paf1::read_file(input).map_err(|e| match e {
        nlacoustics::Error::Io(io) => CliError::io(input, io),
        other => CliError::Config(format!("{}: {other}", input.display())),
    })?;
    let (from, to): (Frame, Frame) = (from.into(), to.into());
    let hash = hash_json(&json!({ "from": from, "to": to, "params": params }));
    if ctx.dry_run {
        print_plan(&json!({
            "subcommand": "transform",
            "from": from.tag(),
            "to": to.tag(),
            "input": input,
            "input_grid": field.grid().axes(),
            "output": output,
            "params": params,
            "config_hash": hash,
        }));
        return Ok(());
    }
    let out = transform_field(&field, from, to, &params)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    paf1::write_file(&out, output).map_err(|e| match e {
        nlacoustics::Error::Io(io) => CliError::io(output, io),
        other => other.into(),
    })?;
    info!("wrote {} field on {} points to {}", to.tag(), out.grid().len(), output.display());
    let mut manifest = Manifest::new("transform", hash, json!({ "from": from, "to": to, "params": params }));
    manifest.outputs = vec![output.display().to_string()];
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    write_json(Path::new(&name), &manifest)
}
