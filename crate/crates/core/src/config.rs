//! Run configuration: the TOML schema, its validation, and assembly into the
//! runtime objects (grid, integrator parameters, noise operator, initial
//! condition).
//!
//! A configuration has four mandatory blocks — `grid`, `params`,
//! `experiment` — plus optional `noise` and `output` blocks:
//!
//! ```toml
//! [grid]
//! d = 2
//! n = 64
//! l = 20.0            # box side length ("L" is accepted too)
//!
//! [params]
//! lambda = 1.0
//! sigma = 1.0
//! alpha = -1.0        # +1 focusing, -1 defocusing
//! dt = 1e-3
//! t_final = 2.0
//! scheme = "strang"   # or "lie"; default "strang"
//! log_every = 10      # default 1
//! seed = 42           # default 0
//!
//! [noise]             # omit the whole block for an unforced run
//! convention = "two_per_mode"
//! modes = [
//!   { mode = [0, 0], amplitude = 0.3 },
//!   { mode = [1, 0], amplitude = 0.3 },
//! ]
//!
//! [experiment]
//! name = "moments"    # simulate | moments | sync | birkhoff | sweep
//! paths = 400
//! powers = [1, 2]
//! times = [0.5, 1.0, 2.0]
//! initial = { kind = "gaussian", width = 2.0, amplitude = 0.5 }
//!
//! [output]
//! dir = "runs"        # default "runs"
//! name = "demo"       # default: the experiment name
//! ```
//!
//! Unknown keys anywhere are rejected (typos fail loudly), and validation
//! errors name the offending key path. Parsing also runs the standing
//! assumption gate on `(d, sigma, alpha)`; a rejected combination refuses to
//! run unless explicitly forced, and the verdict is recorded either way.

use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::checkpoint::load_checkpoint;
use crate::dynamics::{Scheme, SimParams};
use crate::error::{Error, Result};
use crate::exponents::{check_assumptions, rational_from_f64, GateVerdict};
use crate::fields::{from_modes, gaussian_bump};
use crate::grid::{make_grid, Field, Grid};
use crate::noise::{build_noise, NoiseConvention, NoiseOperator};
use crate::rng::PathRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridBlock,
    pub params: ParamsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseBlock>,
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub d: usize,
    pub n: usize,
    /// Box side length.
    #[serde(alias = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub lambda: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_log_every() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub modes: Vec<ModeAmplitude>,
    #[serde(default)]
    pub convention: NoiseConvention,
}

/// One forced Fourier mode: integer indices per axis and a real amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAmplitude {
    pub mode: Vec<i64>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    /// One of: simulate, moments, sync, birkhoff, sweep.
    pub name: String,
    #[serde(default)]
    pub initial: InitialSpec,
    /// Monte Carlo paths (moments) or synchronized pairs (sync).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    /// Mass moment powers for the moments experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<u32>>,
    /// Reporting times for the moments experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Damping strengths for the sweep experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Observable name for the birkhoff experiment (default "mass").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    /// Observable names for the simulate experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<String>>,
    /// Burn-in before time averaging (birkhoff, sweep); default
    /// max(10/lambda, t_final/10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    /// Relative L2 size of the second trajectory's perturbation (sync);
    /// default 1e-2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
}

/// Initial-condition specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    #[default]
    Zero,
    Gaussian {
        width: f64,
        amplitude: f64,
    },
    Modes {
        modes: Vec<ModePoint>,
    },
    /// Resume from a saved state: restores the field, the clock, and the
    /// noise stream position.
    Checkpoint {
        path: PathBuf,
    },
}

/// One spectral coefficient of an initial condition: `amplitude·e^{i·phase}`
/// at the given mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModePoint {
    pub mode: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
    /// Run directory name under `dir`; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: default_output_dir(),
            name: None,
        }
    }
}

/// Names of the config-driven experiments.
pub const EXPERIMENT_NAMES: [&str; 5] = ["simulate", "moments", "sync", "birkhoff", "sweep"];

/// Parse a TOML configuration. Unknown keys and type mismatches are
/// configuration errors carrying the offending key path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
}

/// Serialize a configuration back to TOML (the echo format; reparses to an
/// equal value).
pub fn to_toml(config: &RunConfig) -> Result<String> {
    toml::to_string_pretty(config).map_err(|e| Error::Config(format!("config serialize: {e}")))
}

/// Clock and stream position restored from a checkpoint initial condition.
#[derive(Debug, Clone)]
pub struct ResumeState {
    pub t: f64,
    pub step: u64,
    pub rng: PathRng,
}

/// A validated configuration with every runtime object constructed.
#[derive(Debug)]
pub struct ValidatedRun {
    pub config: RunConfig,
    pub grid: Arc<Grid>,
    pub params: SimParams,
    pub noise: Option<NoiseOperator>,
    pub initial: Field,
    /// Present when the initial condition came from a checkpoint.
    pub resume: Option<ResumeState>,
    pub gate: GateVerdict,
    /// Whether a gate rejection was overridden by the caller.
    pub forced: bool,
}

/// Validate a parsed configuration and build the runtime objects. The
/// standing-assumption gate runs on `(d, sigma, alpha)`; a rejection is a
/// configuration error unless `force` is set, and the verdict is recorded in
/// the returned value either way.
pub fn validate_run(config: &RunConfig, force: bool) -> Result<ValidatedRun> {
    let grid = make_grid(config.grid.d, config.grid.n, config.grid.l)
        .map_err(|e| Error::Config(format!("grid: {e}")))?;

    let params = SimParams {
        lambda: config.params.lambda,
        sigma: config.params.sigma,
        alpha: config.params.alpha,
        dt: config.params.dt,
        t_final: config.params.t_final,
        scheme: config.params.scheme,
        log_every: config.params.log_every,
        seed: config.params.seed,
    };
    params.validate()?;

    let sigma_exact = rational_from_f64(params.sigma)?;
    let gate = check_assumptions(grid.d(), &sigma_exact, params.alpha)?;
    if gate.is_rejected() && !force {
        let reasons = match &gate {
            GateVerdict::Rejected { reasons } => reasons.join("; "),
            _ => unreachable!(),
        };
        return Err(Error::Config(format!(
            "assumption gate rejected this configuration: {reasons}; \
             pass --force to run outside the supported regime"
        )));
    }

    let noise = match &config.noise {
        Some(block) => {
            let entries: Vec<(Vec<i64>, Complex64)> = block
                .modes
                .iter()
                .map(|m| (m.mode.clone(), Complex64::new(m.amplitude, 0.0)))
                .collect();
            Some(build_noise(&grid, &entries, block.convention)?)
        }
        None => None,
    };

    if !EXPERIMENT_NAMES.contains(&config.experiment.name.as_str()) {
        return Err(Error::Config(format!(
            "experiment.name: unknown experiment {:?} (expected one of {})",
            config.experiment.name,
            EXPERIMENT_NAMES.join(", ")
        )));
    }

    let (initial, resume) = build_initial(&grid, &config.experiment.initial)?;

    Ok(ValidatedRun {
        config: config.clone(),
        grid,
        params,
        noise,
        initial,
        resume,
        gate,
        forced: force,
    })
}

fn build_initial(grid: &Arc<Grid>, spec: &InitialSpec) -> Result<(Field, Option<ResumeState>)> {
    match spec {
        InitialSpec::Zero => Ok((Field::zero(grid), None)),
        InitialSpec::Gaussian { width, amplitude } => {
            if !(*width > 0.0) || !width.is_finite() {
                return Err(Error::Config(format!(
                    "experiment.initial.width: must be > 0, got {width}"
                )));
            }
            if !amplitude.is_finite() {
                return Err(Error::Config(format!(
                    "experiment.initial.amplitude: must be finite, got {amplitude}"
                )));
            }
            Ok((gaussian_bump(grid, *width, *amplitude), None))
        }
        InitialSpec::Modes { modes } => {
            if modes.is_empty() {
                return Err(Error::Config(
                    "experiment.initial.modes: list is empty (use kind = \"zero\" instead)".into(),
                ));
            }
            let entries: Vec<(Vec<i64>, Complex64)> = modes
                .iter()
                .map(|m| (m.mode.clone(), Complex64::from_polar(m.amplitude, m.phase)))
                .collect();
            let field = from_modes(grid, &entries)
                .map_err(|e| Error::Config(format!("experiment.initial: {e}")))?;
            Ok((field, None))
        }
        InitialSpec::Checkpoint { path } => {
            let data = load_checkpoint(path)?;
            let cg = data.field.grid();
            if cg.d() != grid.d() || cg.n() != grid.n() || cg.len() != grid.len() {
                return Err(Error::Config(format!(
                    "experiment.initial: checkpoint grid (d = {}, n = {}, l = {}) does not \
                     match the configured grid (d = {}, n = {}, l = {})",
                    cg.d(),
                    cg.n(),
                    cg.len(),
                    grid.d(),
                    grid.n(),
                    grid.len()
                )));
            }
            let resume = ResumeState {
                t: data.t,
                step: data.step,
                rng: data.rng.clone(),
            };
            // Rebind the field onto the configured grid instance so every
            // downstream object shares one set of spectral tables.
            let field = Field::from_values(grid, data.field.values().to_vec())?;
            Ok((field, Some(resume)))
        }
    }
}
