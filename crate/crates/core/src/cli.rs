//! Command-line interface: experiment orchestration and artifact writing.
//!
//! Subcommands: `simulate`, `moments`, `sync`, `birkhoff`, `sweep` (config
//! driven, `--config` required) and `check`, `strichartz`, `gn` (flag
//! driven). Config-driven runs write `<output.dir>/<run name>/<experiment>.csv`
//! plus `summary.json`; command-line flags override config values and both
//! are recorded in the summary.
//!
//! Exit status: 0 when every verdict passes, 2 when a verdict fails, 1 on
//! any error, 64 on usage errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{
    birkhoff_average, lambda_sweep, mc_moments, sync_experiment_indexed, MomentReport, SyncReport,
};
use crate::checkpoint::save_checkpoint;
use crate::config::{parse_config, validate_run, ValidatedRun};
use crate::dynamics::{evolve, Observable, State};
use crate::error::{Error, Result};
use crate::exponents::{check_assumptions, parse_rational, Exponent, GateVerdict};
use crate::fields::{random_smooth, SmoothFieldSpec};
use crate::observables::{estimate_gn_constant, mass, GnOptions};
use crate::output::{version_string, write_summary, Summary, Table};
use crate::rng::{derive_rng, StreamRole};

#[derive(Parser, Debug)]
#[command(
    name = "sdnlse",
    version = version_string(),
    about = "Spectral Monte Carlo solver and verification harness for the \
             stochastic damped nonlinear Schrödinger equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate one trajectory and log observables over time.
    Simulate(SimulateArgs),
    /// Estimate mass moments over a Monte Carlo ensemble of paths.
    Moments(MomentsArgs),
    /// Drive pairs of trajectories with shared noise and check the
    /// contraction envelope.
    Sync(SyncArgs),
    /// Time-average an observable along one long trajectory.
    Birkhoff(BirkhoffArgs),
    /// Estimate stationary statistics across a list of damping strengths.
    Sweep(SweepArgs),
    /// Evaluate the standing-assumption gate for (d, sigma, alpha).
    Check(CheckArgs),
    /// Test an exponent pair (p, r) for admissibility in dimension d.
    Strichartz(StrichartzArgs),
    /// Estimate the interpolation-inequality constant on a periodic grid.
    Gn(GnArgs),
}

/// Flags shared by every config-driven subcommand.
#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory root (overrides output.dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides params.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run even when the assumption gate rejects the configuration.
    #[arg(long)]
    pub force: bool,
    /// Damping rate (overrides params.lambda).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Nonlinearity power (overrides params.sigma).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// +1 focusing, -1 defocusing (overrides params.alpha).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Time step (overrides params.dt).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Horizon (overrides params.t_final).
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
    /// Splitting scheme: lie or strang (overrides params.scheme).
    #[arg(long)]
    pub scheme: Option<String>,
    /// Logging cadence in steps (overrides params.log_every).
    #[arg(long = "log-every")]
    pub log_every: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated observables to log (overrides experiment.observables).
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,
    /// Save the final state to this checkpoint file.
    #[arg(long = "checkpoint-out")]
    pub checkpoint_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of Monte Carlo paths (overrides experiment.paths).
    #[arg(long)]
    pub paths: Option<usize>,
    /// Comma-separated mass powers (overrides experiment.powers).
    #[arg(long, value_delimiter = ',')]
    pub powers: Option<Vec<u32>>,
    /// Comma-separated reporting times (overrides experiment.times).
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct SyncArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of synchronized pairs (overrides experiment.paths).
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Relative L2 size of the second trajectory's perturbation
    /// (overrides experiment.perturbation).
    #[arg(long)]
    pub perturbation: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BirkhoffArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Observable to average (overrides experiment.observable).
    #[arg(long)]
    pub observable: Option<String>,
    /// Burn-in time to discard (overrides experiment.burn_in).
    #[arg(long = "burn-in")]
    pub burn_in: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated damping strengths (overrides experiment.lambdas).
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Burn-in time to discard (overrides experiment.burn_in).
    #[arg(long = "burn-in")]
    pub burn_in: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Spatial dimension (1, 2, or 3).
    #[arg(long)]
    pub d: usize,
    /// Nonlinearity power, exact: integer, decimal, or fraction like 3/2.
    #[arg(long)]
    pub sigma: String,
    /// +1 focusing, -1 defocusing.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
}

#[derive(Args, Debug)]
pub struct StrichartzArgs {
    /// Spatial dimension.
    #[arg(long)]
    pub d: usize,
    /// Time exponent p (rational or "inf").
    #[arg(long)]
    pub p: String,
    /// Space exponent r (rational or "inf").
    #[arg(long)]
    pub r: String,
}

#[derive(Args, Debug)]
pub struct GnArgs {
    /// Spatial dimension.
    #[arg(long)]
    pub d: usize,
    /// Grid resolution per axis.
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Box side length.
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
    pub l: f64,
    /// Nonlinearity power.
    #[arg(long)]
    pub sigma: f64,
    /// Optimizer restarts.
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// Ascent iterations per restart.
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    /// Master seed for the random restarts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write summary.json under this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse argv and run. Returns the process exit code: 0 all verdicts pass,
/// 2 verdict failure, 1 error, 64 usage error.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Moments(args) => cmd_moments(args),
        Command::Sync(args) => cmd_sync(args),
        Command::Birkhoff(args) => cmd_birkhoff(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Check(args) => cmd_check(args),
        Command::Strichartz(args) => cmd_strichartz(args),
        Command::Gn(args) => cmd_gn(args),
    }
}

/// A validated run plus the bookkeeping the summary needs.
struct Prepared {
    run: ValidatedRun,
    run_dir: PathBuf,
    overrides: BTreeMap<String, String>,
    command: &'static str,
}

fn prepare(common: &CommonArgs, command: &'static str) -> Result<Prepared> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        Error::Config(format!(
            "cannot read config {}: {e}",
            common.config.display()
        ))
    })?;
    let mut config = parse_config(&text)?;
    let mut overrides = BTreeMap::new();
    let mut record = |key: &str, value: String| {
        overrides.insert(key.to_string(), value);
    };

    if let Some(v) = common.lambda {
        config.params.lambda = v;
        record("params.lambda", v.to_string());
    }
    if let Some(v) = common.sigma {
        config.params.sigma = v;
        record("params.sigma", v.to_string());
    }
    if let Some(v) = common.alpha {
        config.params.alpha = v;
        record("params.alpha", v.to_string());
    }
    if let Some(v) = common.dt {
        config.params.dt = v;
        record("params.dt", v.to_string());
    }
    if let Some(v) = common.t_final {
        config.params.t_final = v;
        record("params.t_final", v.to_string());
    }
    if let Some(s) = &common.scheme {
        config.params.scheme = s.parse()?;
        record("params.scheme", s.clone());
    }
    if let Some(v) = common.log_every {
        config.params.log_every = v;
        record("params.log_every", v.to_string());
    }
    if let Some(v) = common.seed {
        config.params.seed = v;
        record("params.seed", v.to_string());
    }
    if let Some(dir) = &common.out {
        config.output.dir = dir.clone();
        record("output.dir", dir.display().to_string());
    }

    if config.experiment.name != command {
        return Err(Error::Config(format!(
            "experiment.name: config names experiment {:?} but the subcommand is {command:?}",
            config.experiment.name
        )));
    }

    let run = validate_run(&config, common.force)?;
    let run_name = config
        .output
        .name
        .clone()
        .unwrap_or_else(|| config.experiment.name.clone());
    let run_dir = config.output.dir.join(run_name);
    std::fs::create_dir_all(&run_dir)?;
    Ok(Prepared {
        run,
        run_dir,
        overrides,
        command,
    })
}

fn finish(
    prepared: &Prepared,
    verdicts: BTreeMap<String, bool>,
    fitted: BTreeMap<String, f64>,
    report: serde_json::Value,
) -> Result<bool> {
    let summary = Summary {
        version: version_string().to_string(),
        command: prepared.command.to_string(),
        seed: prepared.run.params.seed,
        gate: prepared.run.gate.clone(),
        forced: prepared.run.forced,
        config: Some(prepared.run.config.clone()),
        overrides: prepared.overrides.clone(),
        verdicts,
        fitted,
        report,
    };
    write_summary(&summary, &prepared.run_dir.join("summary.json"))?;
    let pass = summary.all_verdicts_pass();
    for (name, ok) in &summary.verdicts {
        println!("{}: {name}", if *ok { "pass" } else { "FAIL" });
    }
    Ok(pass)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<serde_json::Value> {
    serde_json::to_value(value).map_err(|e| Error::Config(format!("report serialize: {e}")))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<bool> {
    let mut prepared = prepare(&args.common, "simulate")?;
    if let Some(names) = &args.observables {
        prepared.run.config.experiment.observables = Some(names.clone());
        prepared
            .overrides
            .insert("experiment.observables".into(), names.join(","));
    }
    let run = &prepared.run;
    let names = run
        .config
        .experiment
        .observables
        .clone()
        .unwrap_or_else(|| {
            vec![
                "mass".into(),
                "energy".into(),
                "v_norm_sq".into(),
                "linf".into(),
            ]
        });
    let observables: Vec<Observable> = names
        .iter()
        .map(|s| Observable::from_str(s))
        .collect::<Result<_>>()?;

    let mut state = match &run.resume {
        Some(resume) => State::with_clock(
            run.initial.clone(),
            resume.t,
            resume.step,
            resume.rng.clone(),
        ),
        None => State::new(
            run.initial.clone(),
            derive_rng(run.params.seed, StreamRole::Main, 0),
        ),
    };
    let log =
        evolve(&mut state, &run.params, run.noise.as_ref(), &observables).map_err(|e| e.error)?;

    let mut table = Table::new();
    table.push("t", log.times().to_vec());
    for name in log.names() {
        let column = log.column(name).expect("log names a column it holds");
        table.push(name.clone(), column.to_vec());
    }
    table.write_csv(&prepared.run_dir.join("simulate.csv"))?;

    if let Some(path) = &args.checkpoint_out {
        save_checkpoint(&state, &run.params, path)?;
        prepared
            .overrides
            .insert("checkpoint_out".into(), path.display().to_string());
    }

    let report = serde_json::json!({
        "t_end": state.t,
        "steps": state.step,
        "logged_rows": log.len(),
        "observables": log.names(),
    });
    finish(&prepared, BTreeMap::new(), BTreeMap::new(), report)
}

// ---------------------------------------------------------------------------
// moments
// ---------------------------------------------------------------------------

fn cmd_moments(args: MomentsArgs) -> Result<bool> {
    let mut prepared = prepare(&args.common, "moments")?;
    if let Some(v) = args.paths {
        prepared.run.config.experiment.paths = Some(v);
        prepared
            .overrides
            .insert("experiment.paths".into(), v.to_string());
    }
    if let Some(v) = &args.powers {
        prepared.run.config.experiment.powers = Some(v.clone());
        prepared.overrides.insert(
            "experiment.powers".into(),
            v.iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    if let Some(v) = &args.times {
        prepared.run.config.experiment.times = Some(v.clone());
        prepared.overrides.insert(
            "experiment.times".into(),
            v.iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    let run = &prepared.run;
    let exp = &run.config.experiment;

    let paths = exp.paths.unwrap_or(100);
    let powers = exp.powers.clone().unwrap_or_else(|| vec![1]);
    let times = match &exp.times {
        Some(ts) => ts.clone(),
        None => {
            if !(run.params.t_final > 0.0) {
                return Err(Error::Config(
                    "experiment.times: no times given and params.t_final is 0".into(),
                ));
            }
            (1..=10)
                .map(|k| k as f64 * run.params.t_final / 10.0)
                .collect()
        }
    };

    let report = mc_moments(
        &run.initial,
        &run.params,
        run.noise.as_ref(),
        &powers,
        &times,
        paths,
        &[],
    )?;

    let mut table = Table::new();
    table.push("t", report.times.clone());
    for series in &report.moments {
        table.push(format!("mean_{}", series.name), series.mean.clone());
        table.push(format!("se_{}", series.name), series.se.clone());
    }
    if let Some(curve) = &report.exact_mean_mass_curve {
        table.push("exact_mean_mass", curve.clone());
    }
    table.write_csv(&prepared.run_dir.join("moments.csv"))?;

    let mut verdicts = BTreeMap::new();
    let mut fitted = BTreeMap::new();
    moment_verdicts(&report, &mut verdicts, &mut fitted);
    let json = to_json(&report)?;
    finish(&prepared, verdicts, fitted, json)
}

/// Shared verdict logic for a moment report: the first-moment mass curve must
/// track the closed form within max(3 SE, 2% relative) at every reported
/// time, and every fitted moment envelope must hold.
fn moment_verdicts(
    report: &MomentReport,
    verdicts: &mut BTreeMap<String, bool>,
    fitted: &mut BTreeMap<String, f64>,
) {
    if let (Some(curve), Some(j)) = (
        &report.exact_mean_mass_curve,
        report.mass_powers.iter().position(|&m| m == 1),
    ) {
        let series = &report.moments[j];
        let ok =
            curve
                .iter()
                .zip(series.mean.iter().zip(&series.se))
                .all(|(&exact, (&mean, &se))| {
                    (mean - exact).abs() <= (3.0 * se).max(0.02 * exact.abs())
                });
        verdicts.insert("mean_mass_matches_exact".into(), ok);
    }
    if !report.bound_fits.is_empty() {
        verdicts.insert(
            "moment_bounds_hold".into(),
            report.bound_fits.iter().all(|f| f.holds_at_all_times),
        );
        for fit in &report.bound_fits {
            fitted.insert(format!("c_fit_m{}", fit.power), fit.c_fit);
            if let Some(rate) = fit.decay_rate_fit {
                fitted.insert(format!("decay_rate_m{}", fit.power), rate);
            }
        }
    }
    fitted.insert("excluded_paths".into(), report.n_excluded as f64);
    if let Some(dev) = report.max_rel_deviation_mean_mass {
        fitted.insert("max_rel_deviation_mean_mass".into(), dev);
    }
}

// ---------------------------------------------------------------------------
// sync
// ---------------------------------------------------------------------------

fn cmd_sync(args: SyncArgs) -> Result<bool> {
    let mut prepared = prepare(&args.common, "sync")?;
    if let Some(v) = args.pairs {
        prepared.run.config.experiment.paths = Some(v);
        prepared
            .overrides
            .insert("experiment.paths".into(), v.to_string());
    }
    if let Some(v) = args.perturbation {
        prepared.run.config.experiment.perturbation = Some(v);
        prepared
            .overrides
            .insert("experiment.perturbation".into(), v.to_string());
    }
    let run = &prepared.run;
    let exp = &run.config.experiment;
    let pairs = exp.paths.unwrap_or(1);
    if pairs == 0 {
        return Err(Error::Config(
            "experiment.paths: need at least one pair".into(),
        ));
    }
    let delta = exp.perturbation.unwrap_or(1e-2);
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Config(format!(
            "experiment.perturbation: must be > 0, got {delta}"
        )));
    }
    if !(run.params.t_final > 0.0) {
        return Err(Error::Config(
            "params.t_final: the sync experiment needs a positive horizon".into(),
        ));
    }

    let x1 = &run.initial;
    let base_norm = mass(x1).sqrt();
    let spec = SmoothFieldSpec {
        corr_wavenumber: 6.0 * std::f64::consts::PI / run.grid.len(),
        h_norm: if base_norm > 0.0 {
            delta * base_norm
        } else {
            delta
        },
        zero_mean: false,
    };

    // Each pair owns its noise stream and its perturbation stream, and both
    // trajectories of a pair advance on one worker; reports are collected in
    // pair order, so the artifacts are identical for any worker count.
    let reports: Vec<Result<SyncReport>> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_rng(run.params.seed, StreamRole::InitialCondition, i);
            let bump = random_smooth(&run.grid, &spec, &mut rng);
            let mut x2 = x1.clone();
            for (v, b) in x2.values_mut().iter_mut().zip(bump.values()) {
                *v += b;
            }
            sync_experiment_indexed(
                x1,
                &x2,
                &run.params,
                run.noise.as_ref(),
                run.params.t_final,
                i,
            )
        })
        .collect();

    let mut pair_col = Vec::new();
    let mut t_col = Vec::new();
    let mut w_col = Vec::new();
    let mut r_col = Vec::new();
    let mut env_col = Vec::new();
    let mut margin_col = Vec::new();
    let mut total_violations = 0usize;
    let mut min_margin = f64::INFINITY;
    let mut min_rate = f64::INFINITY;
    let mut have_rate = true;
    let mut summaries = Vec::with_capacity(pairs);
    for (i, r) in reports.into_iter().enumerate() {
        let rep = r?;
        for k in 0..rep.times.len() {
            pair_col.push(i as f64);
            t_col.push(rep.times[k]);
            w_col.push(rep.w_norm_sq[k]);
            r_col.push(rep.r_avg[k]);
            env_col.push(rep.envelope[k]);
            margin_col.push(rep.margin[k]);
        }
        total_violations += rep.violations;
        min_margin = min_margin.min(rep.min_margin);
        match rep.fitted_decay_rate {
            Some(rate) => min_rate = min_rate.min(rate),
            None => have_rate = false,
        }
        summaries.push(serde_json::json!({
            "pair": i,
            "violations": rep.violations,
            "min_margin": rep.min_margin,
            "fitted_decay_rate": rep.fitted_decay_rate,
            "final_w_norm_sq": rep.w_norm_sq.last(),
        }));
    }

    let mut table = Table::new();
    table
        .push("pair", pair_col)
        .push("t", t_col)
        .push("w_norm_sq", w_col)
        .push("r_avg", r_col)
        .push("envelope", env_col)
        .push("margin", margin_col);
    table.write_csv(&prepared.run_dir.join("sync.csv"))?;

    let mut verdicts = BTreeMap::new();
    verdicts.insert("envelope_holds".into(), total_violations == 0);
    if min_margin > 0.0 && have_rate {
        // Contraction prediction: the fitted decay rate of log ‖w‖² should
        // reach twice the worst margin, with 10% slack.
        verdicts.insert(
            "decay_rate_matches_margin".into(),
            min_rate >= 2.0 * min_margin * 0.9,
        );
    }
    let mut fitted = BTreeMap::new();
    fitted.insert("total_violations".into(), total_violations as f64);
    fitted.insert("min_margin".into(), min_margin);
    if have_rate {
        fitted.insert("min_fitted_decay_rate".into(), min_rate);
    }
    let report = serde_json::json!({
        "pairs": summaries,
        "perturbation": delta,
        "tolerance": crate::analysis::SYNC_TOLERANCE,
    });
    finish(&prepared, verdicts, fitted, report)
}

// ---------------------------------------------------------------------------
// birkhoff
// ---------------------------------------------------------------------------

fn cmd_birkhoff(args: BirkhoffArgs) -> Result<bool> {
    let mut prepared = prepare(&args.common, "birkhoff")?;
    if let Some(name) = &args.observable {
        prepared.run.config.experiment.observable = Some(name.clone());
        prepared
            .overrides
            .insert("experiment.observable".into(), name.clone());
    }
    if let Some(v) = args.burn_in {
        prepared.run.config.experiment.burn_in = Some(v);
        prepared
            .overrides
            .insert("experiment.burn_in".into(), v.to_string());
    }
    let run = &prepared.run;
    let exp = &run.config.experiment;
    let name = exp.observable.clone().unwrap_or_else(|| "mass".into());
    let observable = Observable::from_str(&name)?;
    if !(run.params.t_final > 0.0) {
        return Err(Error::Config(
            "params.t_final: the birkhoff experiment needs a positive horizon".into(),
        ));
    }

    let report = birkhoff_average(
        &run.initial,
        &run.params,
        run.noise.as_ref(),
        observable,
        run.params.t_final,
        exp.burn_in,
    )?;

    let mut table = Table::new();
    table
        .push("mean", vec![report.mean])
        .push("se", vec![report.se])
        .push("n_samples", vec![report.n_samples as f64])
        .push("burn_in", vec![report.burn_in])
        .push("t_final", vec![report.t_final]);
    if let Some(margin) = report.damping_margin {
        table.push("damping_margin", vec![margin]);
    }
    table.write_csv(&prepared.run_dir.join("birkhoff.csv"))?;

    let mut verdicts = BTreeMap::new();
    let mut fitted = BTreeMap::new();
    fitted.insert(format!("mean_{}", report.observable), report.mean);
    fitted.insert("se".into(), report.se);
    if let Some(margin) = report.damping_margin {
        fitted.insert("damping_margin".into(), margin);
        // The whole point of averaging the sup-norm observable is the
        // uniqueness margin, so surface it as a verdict.
        verdicts.insert("uniqueness_margin_positive".into(), margin > 0.0);
    }
    let json = to_json(&report)?;
    finish(&prepared, verdicts, fitted, json)
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn cmd_sweep(args: SweepArgs) -> Result<bool> {
    let mut prepared = prepare(&args.common, "sweep")?;
    if let Some(v) = &args.lambdas {
        prepared.run.config.experiment.lambdas = Some(v.clone());
        prepared.overrides.insert(
            "experiment.lambdas".into(),
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    if let Some(v) = args.burn_in {
        prepared.run.config.experiment.burn_in = Some(v);
        prepared
            .overrides
            .insert("experiment.burn_in".into(), v.to_string());
    }
    let run = &prepared.run;
    let exp = &run.config.experiment;
    let lambdas = exp.lambdas.clone().ok_or_else(|| {
        Error::Config("experiment.lambdas: the sweep experiment needs a list".into())
    })?;
    if !(run.params.t_final > 0.0) {
        return Err(Error::Config(
            "params.t_final: the sweep experiment needs a positive horizon".into(),
        ));
    }

    let report = lambda_sweep(
        &run.initial,
        &run.params,
        run.noise.as_ref(),
        &lambdas,
        run.params.t_final,
        exp.burn_in,
    )?;

    let mut table = Table::new();
    let col = |f: fn(&crate::analysis::SweepRow) -> f64| -> Vec<f64> {
        report.rows.iter().map(f).collect()
    };
    table
        .push("lambda", col(|r| r.lambda))
        .push("mean_v_norm_sq", col(|r| r.mean_v_norm_sq))
        .push("se_v_norm_sq", col(|r| r.se_v_norm_sq))
        .push("mean_sup_pow_2sigma", col(|r| r.mean_sup_pow_2sigma))
        .push("se_sup_pow_2sigma", col(|r| r.se_sup_pow_2sigma))
        .push("mean_mass", col(|r| r.mean_mass))
        .push("se_mass", col(|r| r.se_mass))
        .push(
            "stationary_mass_exact",
            col(|r| r.stationary_mass_exact.unwrap_or(f64::NAN)),
        )
        .push("phi1", col(|r| r.phi1.unwrap_or(f64::NAN)))
        .push("phi2_m1", col(|r| r.phi2_m1.unwrap_or(f64::NAN)))
        .push("damping_margin", col(|r| r.damping_margin))
        .push("burn_in", col(|r| r.burn_in));
    table.write_csv(&prepared.run_dir.join("sweep.csv"))?;

    let mut verdicts = BTreeMap::new();
    if let Some(v) = report.v_norm_non_increasing {
        verdicts.insert("v_norm_non_increasing".into(), v);
    }
    if let Some(v) = report.sup_pow_non_increasing {
        verdicts.insert("sup_pow_non_increasing".into(), v);
    }
    if let Some(v) = report.mass_matches_stationary {
        verdicts.insert("mass_matches_stationary".into(), v);
    }
    let json = to_json(&report)?;
    finish(&prepared, verdicts, BTreeMap::new(), json)
}

// ---------------------------------------------------------------------------
// check / strichartz / gn
// ---------------------------------------------------------------------------

fn cmd_check(args: CheckArgs) -> Result<bool> {
    let sigma = parse_rational(&args.sigma)?;
    let verdict = check_assumptions(args.d, &sigma, args.alpha)?;
    match &verdict {
        GateVerdict::Admissible => println!("admissible"),
        GateVerdict::AdmissibleWithFlag { flags } => {
            println!("admissible (flags: {})", flags.join("; "));
        }
        GateVerdict::Rejected { reasons } => {
            println!("rejected: {}", reasons.join("; "));
        }
    }
    Ok(!verdict.is_rejected())
}

fn cmd_strichartz(args: StrichartzArgs) -> Result<bool> {
    if !(1..=3).contains(&args.d) {
        return Err(Error::Domain(format!(
            "dimension d={} is outside the supported range {{1, 2, 3}}",
            args.d
        )));
    }
    let p = Exponent::from_str(&args.p)?;
    let r = Exponent::from_str(&args.r)?;
    let ok = crate::exponents::is_admissible_pair(args.d, &p, &r);
    if ok {
        println!("admissible pair");
    } else {
        println!("not admissible");
    }
    Ok(ok)
}

fn cmd_gn(args: GnArgs) -> Result<bool> {
    let grid = crate::grid::make_grid(args.d, args.n, args.l)?;
    if !(args.sigma > 0.0) || !args.sigma.is_finite() {
        return Err(Error::Domain(format!(
            "sigma must be > 0, got {}",
            args.sigma
        )));
    }
    let sd = args.sigma * args.d as f64;
    if sd / (2.0 * (1.0 + args.sigma)) >= 1.0 {
        return Err(Error::Domain(format!(
            "sigma*d = {sd} is too large for the interpolation inequality in d = {}",
            args.d
        )));
    }
    let opts = GnOptions {
        restarts: args.restarts,
        iterations: args.iterations,
        ..GnOptions::default()
    };
    let estimate = estimate_gn_constant(&grid, args.sigma, &opts, args.seed);
    println!(
        "c_gn = {:.12e}  theta = {:.12e}  g = {:.12e}",
        estimate.c_gn, estimate.theta, estimate.g_const
    );

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        let mut fitted = BTreeMap::new();
        fitted.insert("c_gn".into(), estimate.c_gn);
        fitted.insert("theta".into(), estimate.theta);
        fitted.insert("g".into(), estimate.g_const);
        let summary = Summary {
            version: version_string().to_string(),
            command: "gn".into(),
            seed: args.seed,
            gate: GateVerdict::Admissible,
            forced: false,
            config: None,
            overrides: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            fitted,
            report: to_json(&estimate)?,
        };
        write_summary(&summary, &dir.join("summary.json"))?;
    }
    Ok(true)
}
