//! Statistical experiments over the stochastic integrator.
//!
//! This module provides the verification layer on top of [`crate::dynamics`]:
//!
//! * closed-form expected mass for the damped, additively forced flow
//!   ([`exact_mean_mass`]) and its undamped limit;
//! * the two noise-strength functionals that bound stationary moments
//!   ([`phi1`], [`phi2_m1`]);
//! * Monte Carlo moment estimation over independent paths with fitted
//!   envelope constants ([`mc_moments`]);
//! * two-trajectory synchronization under shared noise with the pathwise
//!   contraction envelope ([`sync_experiment`]);
//! * single-trajectory time averages with batch-means standard errors
//!   ([`birkhoff_average`]);
//! * stationary-statistics sweeps over the damping strength
//!   ([`lambda_sweep`]).
//!
//! Horizons are always explicit arguments; `params.t_final` is ignored by the
//! drivers in this module. `params.log_every` sets the sampling cadence where
//! one applies (synchronization logging, time-average sampling).
//!
//! Reproducibility contract: every routine derives its randomness from
//! `params.seed` through fixed named streams (one stream per Monte Carlo
//! path, one stream per synchronization pair), parallel sections return
//! per-path results that are reduced sequentially in path-index order, and a
//! synchronized pair is always advanced by the single thread that owns its
//! noise stream. Identical inputs therefore produce bit-identical reports
//! regardless of how many worker threads are available.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    advance, advance_without_nonlinearity, linear_multiplier, Observable, SimParams, State,
};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::noise::{HsSpace, NoiseOperator};
use crate::observables::mass;
use crate::rng::{derive_rng, StreamRole};

/// Relative slack allowed when checking the synchronization envelope.
pub const SYNC_TOLERANCE: f64 = 1e-3;

/// Number of batches used for batch-means standard errors.
pub const BATCH_COUNT: usize = 20;

// ---------------------------------------------------------------------------
// Closed-form reference quantities
// ---------------------------------------------------------------------------

/// Exact expected mass at time `t` for damping `lambda > 0`:
///
/// ```text
///   E[M(t)] = e^{-2λt}·M₀ + ‖Φ‖²_{HS(U;H)}·(1 − e^{-2λt})/(2λ).
/// ```
///
/// `noise = None` means Φ = 0. The undamped case is deliberately excluded —
/// the λ → 0 limit grows linearly instead of saturating, so it must be asked
/// for explicitly via [`exact_mean_mass_undamped`].
pub fn exact_mean_mass(t: f64, m0: f64, lambda: f64, noise: Option<&NoiseOperator>) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "exact_mean_mass requires lambda > 0 (got {lambda}); \
             use exact_mean_mass_undamped for the lambda = 0 formula"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "exact_mean_mass requires t >= 0 (got {t})"
        )));
    }
    let hs = noise.map_or(0.0, |op| op.hs_norm_sq(HsSpace::H));
    let decay = (-2.0 * lambda * t).exp();
    Ok(decay * m0 + hs * (1.0 - decay) / (2.0 * lambda))
}

/// Exact expected mass at time `t` with no damping: `M₀ + ‖Φ‖²_{HS(U;H)}·t`.
///
/// Grows without bound when Φ ≠ 0; provided as a separate function so the
/// non-saturating regime is always an explicit choice at the call site.
pub fn exact_mean_mass_undamped(t: f64, m0: f64, noise: Option<&NoiseOperator>) -> f64 {
    let hs = noise.map_or(0.0, |op| op.hs_norm_sq(HsSpace::H));
    m0 + hs * t
}

/// Noise-strength functional controlling the stationary H¹ moment:
///
/// ```text
///   φ₁(σ, λ, Φ) = ‖Φ‖²_{HS(U;V)} + ‖Φ‖^{2+2σ}_{HS(U;V)}·λ^{-σ}.
/// ```
///
/// Strictly decreasing in λ for Φ ≠ 0; requires `lambda > 0` and `sigma > 0`.
pub fn phi1(sigma: f64, lambda: f64, noise: &NoiseOperator) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "phi1 requires lambda > 0 (got {lambda})"
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "phi1 requires sigma > 0 (got {sigma})"
        )));
    }
    let v_sq = noise.hs_norm_sq(HsSpace::V);
    Ok(v_sq + v_sq.powf(1.0 + sigma) * lambda.powf(-sigma))
}

/// Noise-strength functional controlling the first modified-mass moment:
///
/// ```text
///   φ₂(d, σ, λ, Φ) = ‖Φ‖^{2(1+2σ/(2−σd))}_{HS(U;H)}·(λ^{-(1+2σ/(2−σd))} + 1)
///                    + ‖∇Φ‖²_{HS(U;H)},
/// ```
///
/// defined in the mass-subcritical range `σ·d < 2` with `lambda > 0`.
pub fn phi2_m1(d: usize, sigma: f64, lambda: f64, noise: &NoiseOperator) -> Result<f64> {
    if d == 0 || d > 3 {
        return Err(Error::Domain(format!(
            "phi2_m1: dimension must be 1, 2, or 3 (got {d})"
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "phi2_m1 requires sigma > 0 (got {sigma})"
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "phi2_m1 requires lambda > 0 (got {lambda})"
        )));
    }
    let sd = sigma * (d as f64);
    if sd >= 2.0 {
        return Err(Error::Domain(format!(
            "phi2_m1 requires sigma*d < 2 (got sigma = {sigma}, d = {d})"
        )));
    }
    let exponent = 1.0 + 2.0 * sigma / (2.0 - sd);
    let h_sq = noise.hs_norm_sq(HsSpace::H);
    let grad_sq = noise.hs_norm_sq(HsSpace::GradH);
    Ok(h_sq.powf(exponent) * (lambda.powf(-exponent) + 1.0) + grad_sq)
}

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

/// Least-squares slope of `ys` against `xs`; `None` when fewer than two
/// points or when the abscissae carry no spread.
fn regression_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Sup-norm raised to the power 2σ, the damping-competition observable.
fn sup_pow_2sigma(u: &Field, sigma: f64) -> f64 {
    let m = u.max_modulus();
    if sigma == 1.0 {
        m * m
    } else if sigma == 0.5 {
        m
    } else {
        m.powf(2.0 * sigma)
    }
}

/// Mean and batch-means standard error over `samples`, using exactly
/// [`BATCH_COUNT`] equal batches (trailing remainder samples are dropped from
/// both the mean and the error estimate so the two describe the same data).
fn batch_mean_se(samples: &[f64]) -> Result<(f64, f64, usize)> {
    let batch_len = samples.len() / BATCH_COUNT;
    if batch_len == 0 {
        return Err(Error::Config(format!(
            "time average needs at least {BATCH_COUNT} post-burn-in samples \
             (got {}); lengthen the horizon or reduce log_every",
            samples.len()
        )));
    }
    let used = batch_len * BATCH_COUNT;
    let mean = samples[..used].iter().sum::<f64>() / used as f64;
    let mut batch_means = Vec::with_capacity(BATCH_COUNT);
    for b in 0..BATCH_COUNT {
        let chunk = &samples[b * batch_len..(b + 1) * batch_len];
        batch_means.push(chunk.iter().sum::<f64>() / batch_len as f64);
    }
    let bm = batch_means.iter().sum::<f64>() / BATCH_COUNT as f64;
    let var =
        batch_means.iter().map(|b| (b - bm) * (b - bm)).sum::<f64>() / (BATCH_COUNT as f64 - 1.0);
    let se = (var / BATCH_COUNT as f64).max(0.0).sqrt();
    Ok((mean, se, used))
}

// ---------------------------------------------------------------------------
// Monte Carlo moments
// ---------------------------------------------------------------------------

/// One estimated time series: sample mean and Monte Carlo standard error per
/// reporting time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    pub name: String,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

/// Fitted constant for the moment envelope
/// `E[M(t)^m] ≤ e^{-λmt}·M₀^m + C·‖Φ‖^{2m}_{HS(U;H)}·λ^{-m}`.
///
/// `c_fit` is the smallest constant for which the bound holds at every
/// reported time of this ensemble (the one-sided least fit of the positive
/// residuals), so `holds_at_all_times` is a consistency check rather than new
/// information; the real test is whether `c_fit` is stable across independent
/// ensembles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentBoundFit {
    pub power: u32,
    pub c_fit: f64,
    pub holds_at_all_times: bool,
    /// Least-squares decay rate of the excess over the final-time plateau,
    /// when enough clearly-resolved transient points exist.
    pub decay_rate_fit: Option<f64>,
}

/// Ensemble moment report from [`mc_moments`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    /// Reporting times snapped to the step grid.
    pub times: Vec<f64>,
    pub n_paths_requested: usize,
    /// Paths that ran to the horizon and entered the statistics.
    pub n_paths_used: usize,
    /// Paths excluded because the solution left the resolvable regime.
    pub n_excluded: usize,
    pub mass_powers: Vec<u32>,
    /// One series per entry of `mass_powers`, in order (names `mass^m`).
    pub moments: Vec<MomentSeries>,
    /// One series per extra observable, in order.
    pub extra: Vec<MomentSeries>,
    /// Closed-form E[M(t)] curve (present when mass power 1 was requested).
    pub exact_mean_mass_curve: Option<Vec<f64>>,
    /// Max over times of |mean − exact| / exact for the first-moment mass.
    pub max_rel_deviation_mean_mass: Option<f64>,
    /// One fit per mass power (present when the flow is damped and forced).
    pub bound_fits: Vec<MomentBoundFit>,
}

/// Estimate `E[M(t)^m]` for each requested power `m` (plus any extra
/// observables' means) over `n_paths` independent paths.
///
/// Reporting `times` must be finite, non-negative, and strictly increasing;
/// each is snapped to the nearest integer step of `params.dt` and the snapped
/// times must stay distinct. Paths that blow up are excluded and counted; if
/// more than 1% of the requested paths are excluded the whole run fails.
/// Standard errors are exact zeros when every path produced bit-identical
/// values (e.g. Φ = 0).
pub fn mc_moments(
    u0: &Field,
    params: &SimParams,
    noise: Option<&NoiseOperator>,
    powers: &[u32],
    times: &[f64],
    n_paths: usize,
    extra: &[Observable],
) -> Result<MomentReport> {
    params.validate()?;
    if n_paths < 2 {
        return Err(Error::Config(format!(
            "mc_moments: n_paths must be at least 2 (got {n_paths})"
        )));
    }
    if powers.is_empty() {
        return Err(Error::Config("mc_moments: powers list is empty".into()));
    }
    if let Some(&m) = powers.iter().find(|&&m| m == 0) {
        return Err(Error::Config(format!(
            "mc_moments: mass powers must be >= 1 (got {m})"
        )));
    }
    if times.is_empty() {
        return Err(Error::Config("mc_moments: times list is empty".into()));
    }
    let dt = params.dt;
    let mut steps: Vec<u64> = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Config(format!(
                "mc_moments: times must be finite and >= 0 (times[{i}] = {t})"
            )));
        }
        if i > 0 && t <= times[i - 1] {
            return Err(Error::Config(format!(
                "mc_moments: times must be strictly increasing (times[{i}] = {t} after {})",
                times[i - 1]
            )));
        }
        let s = (t / dt).round() as u64;
        if let Some(&prev) = steps.last() {
            if s == prev {
                return Err(Error::Config(format!(
                    "mc_moments: times[{i}] = {t} and its predecessor snap to the same \
                     step at dt = {dt}"
                )));
            }
        }
        steps.push(s);
    }
    let snapped: Vec<f64> = steps.iter().map(|&s| s as f64 * dt).collect();
    let max_step = *steps.last().expect("times validated nonempty");

    let grid = u0.grid();
    let mult = linear_multiplier(grid.k_sq(), params.lambda, dt);
    let n_q = powers.len() + extra.len();
    let n_t = steps.len();

    let record = |state: &State, out: &mut Vec<f64>| {
        let m = mass(&state.field);
        for &p in powers {
            out.push(m.powi(p as i32));
        }
        for obs in extra {
            out.push(obs.evaluate(&state.field, params));
        }
    };

    // One noise stream per path index; results are collected per path and
    // reduced sequentially below so worker count cannot affect the output.
    let path_results: Vec<Option<Vec<f64>>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let rng = derive_rng(params.seed, StreamRole::Path, p as u64);
            let mut state = State::new(u0.clone(), rng);
            let mut out = Vec::with_capacity(n_t * n_q);
            let mut next = 0;
            if steps[next] == 0 {
                record(&state, &mut out);
                next += 1;
            }
            for s in 1..=max_step {
                let coeffs = noise.map(|op| op.sample_coeffs(dt, &mut state.rng));
                let forcing = match (noise, &coeffs) {
                    (Some(op), Some(c)) => Some((op, c.as_slice())),
                    _ => None,
                };
                if advance(&mut state, params, &mult, forcing).is_err() {
                    return None;
                }
                if next < n_t && steps[next] == s {
                    record(&state, &mut out);
                    next += 1;
                }
            }
            Some(out)
        })
        .collect();

    let mut sums = vec![0.0f64; n_t * n_q];
    let mut sumsq = vec![0.0f64; n_t * n_q];
    let mut lo = vec![f64::INFINITY; n_t * n_q];
    let mut hi = vec![f64::NEG_INFINITY; n_t * n_q];
    let mut n_used = 0usize;
    for vals in path_results.iter().flatten() {
        n_used += 1;
        for (k, &v) in vals.iter().enumerate() {
            sums[k] += v;
            sumsq[k] += v * v;
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let n_excluded = n_paths - n_used;
    if (n_excluded as f64) > 0.01 * (n_paths as f64) {
        return Err(Error::Domain(format!(
            "mc_moments: {n_excluded} of {n_paths} paths diverged (more than 1%); \
             the requested regime is not resolvable at dt = {dt}"
        )));
    }
    if n_used < 2 {
        return Err(Error::Domain(format!(
            "mc_moments: only {n_used} paths survived; need at least 2 for standard errors"
        )));
    }

    let nf = n_used as f64;
    let stat = |k: usize| -> (f64, f64) {
        let mean = sums[k] / nf;
        // Bitwise-identical samples must report an exact zero error.
        if lo[k] == hi[k] {
            return (mean, 0.0);
        }
        let var = ((sumsq[k] - nf * mean * mean) / (nf - 1.0)).max(0.0);
        (mean, (var / nf).sqrt())
    };

    let series_for = |offset: usize, name: String| -> MomentSeries {
        let mut mean = Vec::with_capacity(n_t);
        let mut se = Vec::with_capacity(n_t);
        for ti in 0..n_t {
            let (m, s) = stat(ti * n_q + offset);
            mean.push(m);
            se.push(s);
        }
        MomentSeries { name, mean, se }
    };

    let moments: Vec<MomentSeries> = powers
        .iter()
        .enumerate()
        .map(|(j, &m)| series_for(j, format!("mass^{m}")))
        .collect();
    let extra_series: Vec<MomentSeries> = extra
        .iter()
        .enumerate()
        .map(|(j, obs)| series_for(powers.len() + j, obs.name().to_string()))
        .collect();

    let m0 = mass(u0);
    let (exact_curve, max_rel_dev) = match powers.iter().position(|&m| m == 1) {
        Some(j) => {
            let curve: Vec<f64> = snapped
                .iter()
                .map(|&t| {
                    if params.lambda > 0.0 {
                        exact_mean_mass(t, m0, params.lambda, noise)
                            .expect("lambda > 0 checked above")
                    } else {
                        exact_mean_mass_undamped(t, m0, noise)
                    }
                })
                .collect();
            let dev = curve
                .iter()
                .zip(&moments[j].mean)
                .map(|(&ex, &mn)| (mn - ex).abs() / ex.abs().max(1e-300))
                .fold(0.0f64, f64::max);
            (Some(curve), Some(dev))
        }
        None => (None, None),
    };

    let hs = noise.map_or(0.0, |op| op.hs_norm_sq(HsSpace::H));
    let mut bound_fits = Vec::new();
    if params.lambda > 0.0 && hs > 0.0 {
        for (j, &m) in powers.iter().enumerate() {
            let mean = &moments[j].mean;
            let se = &moments[j].se;
            let lam_m = params.lambda.powi(m as i32);
            let hs_m = hs.powi(m as i32);
            let m0_m = m0.powi(m as i32);
            let mut c_fit = 0.0f64;
            for (&t, &mn) in snapped.iter().zip(mean) {
                let residual = mn - (-params.lambda * m as f64 * t).exp() * m0_m;
                c_fit = c_fit.max(residual * lam_m / hs_m);
            }
            let holds = snapped.iter().zip(mean).all(|(&t, &mn)| {
                let bound = (-params.lambda * m as f64 * t).exp() * m0_m + c_fit * hs_m / lam_m;
                mn <= bound * (1.0 + 1e-12) + 1e-300
            });
            // Transient decay rate: regress the log-excess over the final
            // plateau on the early times where the excess is resolved.
            let plateau = *mean.last().expect("nonempty");
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for i in 0..n_t - 1 {
                let r = mean[i] - plateau;
                if r > (3.0 * se[i]).max(1e-12 * m0_m.abs().max(1e-300)) {
                    xs.push(snapped[i]);
                    ys.push(r.ln());
                }
            }
            let decay_rate_fit = regression_slope(&xs, &ys).map(|s| -s);
            bound_fits.push(MomentBoundFit {
                power: m,
                c_fit,
                holds_at_all_times: holds,
                decay_rate_fit,
            });
        }
    }

    Ok(MomentReport {
        times: snapped,
        n_paths_requested: n_paths,
        n_paths_used: n_used,
        n_excluded,
        mass_powers: powers.to_vec(),
        moments,
        extra: extra_series,
        exact_mean_mass_curve: exact_curve,
        max_rel_deviation_mean_mass: max_rel_dev,
        bound_fits,
    })
}

// ---------------------------------------------------------------------------
// Two-trajectory synchronization under shared noise
// ---------------------------------------------------------------------------

/// Report from [`sync_experiment`]: the squared L² separation of two
/// trajectories driven by one noise realization, against the pathwise
/// contraction envelope
///
/// ```text
///   ‖w(t)‖² ≤ ‖w(0)‖²·e^{-2t(λ − r(t))},
///   r(t) = (1/t)·∫₀ᵗ ( ‖u₁‖^{2σ}_∞ + ‖u₂‖^{2σ}_∞ ) ds   (trapezoidal).
/// ```
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncReport {
    pub times: Vec<f64>,
    pub w_norm_sq: Vec<f64>,
    /// Running average r(t); at t = 0 the limit value (the integrand at 0).
    pub r_avg: Vec<f64>,
    pub envelope: Vec<f64>,
    /// Contraction margin λ − r(t) per logged time.
    pub margin: Vec<f64>,
    /// Logged times where ‖w‖² exceeded envelope·(1 + tolerance).
    pub violations: usize,
    pub tolerance: f64,
    /// Least-squares decay rate of ln‖w(t)‖², when resolvable.
    pub fitted_decay_rate: Option<f64>,
    pub min_margin: f64,
}

/// Run two trajectories from `x1`, `x2` under one shared noise realization to
/// horizon `t_final` and check the pathwise contraction envelope at every
/// logged time (cadence `params.log_every`, plus the initial and final times).
///
/// Both fields must live on grids with identical dimension, resolution, and
/// box length. The shared increments are drawn from the dedicated
/// synchronization stream of `params.seed`, and both states are advanced by
/// the caller's thread so the stream is consumed identically no matter how
/// the surrounding code is parallelized.
pub fn sync_experiment(
    x1: &Field,
    x2: &Field,
    params: &SimParams,
    noise: Option<&NoiseOperator>,
    t_final: f64,
) -> Result<SyncReport> {
    sync_experiment_inner(x1, x2, params, noise, t_final, 0, true)
}

/// [`sync_experiment`] for the `pair_index`-th pair of a multi-pair study:
/// each index consumes its own noise stream under the one master seed, so an
/// ensemble of pairs is reproducible regardless of scheduling.
pub fn sync_experiment_indexed(
    x1: &Field,
    x2: &Field,
    params: &SimParams,
    noise: Option<&NoiseOperator>,
    t_final: f64,
    pair_index: u64,
) -> Result<SyncReport> {
    sync_experiment_inner(x1, x2, params, noise, t_final, pair_index, true)
}

/// [`sync_experiment`] with the nonlinear phase disabled in both
/// trajectories. With shared additive noise the separation then obeys
/// `‖w(t)‖ = e^{-λt}·‖w(0)‖` exactly (to roundoff), which makes this variant
/// a sharp consistency check for the experiment plumbing. Test hook; not part
/// of the stable API.
#[doc(hidden)]
pub fn sync_experiment_without_nonlinearity(
    x1: &Field,
    x2: &Field,
    params: &SimParams,
    noise: Option<&NoiseOperator>,
    t_final: f64,
) -> Result<SyncReport> {
    sync_experiment_inner(x1, x2, params, noise, t_final, 0, false)
}

fn sync_experiment_inner(
    x1: &Field,
    x2: &Field,
    params: &SimParams,
    noise: Option<&NoiseOperator>,
    t_final: f64,
    pair_index: u64,
    with_nonlinearity: bool,
) -> Result<SyncReport> {
    params.validate()?;
    let g1 = x1.grid();
    let g2 = x2.grid();
    if g1.d() != g2.d() || g1.n() != g2.n() || g1.len() != g2.len() {
        return Err(Error::Config(format!(
            "sync_experiment: the two initial conditions must share one grid \
             (got d = {}, n = {}, len = {} vs d = {}, n = {}, len = {})",
            g1.d(),
            g1.n(),
            g1.len(),
            g2.d(),
            g2.n(),
            g2.len()
        )));
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::Config(format!(
            "sync_experiment: t_final must be positive and finite (got {t_final})"
        )));
    }
    let dt = params.dt;
    let n_steps = ((t_final / dt).round() as u64).max(1);

    let mut rng = derive_rng(params.seed, StreamRole::SyncNoise, pair_index);
    let mult = linear_multiplier(g1.k_sq(), params.lambda, dt);
    // The states' own streams are never drawn from (all increments are shared
    // and sampled above); they are distinct only for hygiene.
    let mut s1 = State::new(
        x1.clone(),
        derive_rng(params.seed, StreamRole::Path, 2 * pair_index),
    );
    let mut s2 = State::new(
        x2.clone(),
        derive_rng(params.seed, StreamRole::Path, 2 * pair_index + 1),
    );

    let w0_sq: f64 = {
        let cell = g1.cell_volume();
        x1.values()
            .iter()
            .zip(x2.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * cell
    };

    let cell = g1.cell_volume();
    let mut times = Vec::new();
    let mut w_sq_col = Vec::new();
    let mut r_col = Vec::new();
    let mut env_col = Vec::new();
    let mut margin_col = Vec::new();
    let mut violations = 0usize;

    let mut s_prev =
        sup_pow_2sigma(&s1.field, params.sigma) + sup_pow_2sigma(&s2.field, params.sigma);
    let mut integral = 0.0f64;

    let mut log_row = |step: u64,
                       s1: &State,
                       s2: &State,
                       integral: f64,
                       s_now: f64,
                       times: &mut Vec<f64>,
                       w_sq_col: &mut Vec<f64>,
                       r_col: &mut Vec<f64>,
                       env_col: &mut Vec<f64>,
                       margin_col: &mut Vec<f64>| {
        let t = step as f64 * dt;
        let w_sq = s1
            .field
            .values()
            .iter()
            .zip(s2.field.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * cell;
        let r = if t > 0.0 { integral / t } else { s_now };
        let env = w0_sq * (-2.0 * (params.lambda * t - integral)).exp();
        if w_sq > env * (1.0 + SYNC_TOLERANCE) {
            violations += 1;
        }
        times.push(t);
        w_sq_col.push(w_sq);
        r_col.push(r);
        env_col.push(env);
        margin_col.push(params.lambda - r);
    };

    log_row(
        0,
        &s1,
        &s2,
        integral,
        s_prev,
        &mut times,
        &mut w_sq_col,
        &mut r_col,
        &mut env_col,
        &mut margin_col,
    );
    for step in 1..=n_steps {
        let coeffs = noise.map(|op| op.sample_coeffs(dt, &mut rng));
        let forcing = match (noise, &coeffs) {
            (Some(op), Some(cs)) => Some((op, cs.as_slice())),
            _ => None,
        };
        if with_nonlinearity {
            advance(&mut s1, params, &mult, forcing)?;
            advance(&mut s2, params, &mult, forcing)?;
        } else {
            advance_without_nonlinearity(&mut s1, params, &mult, forcing)?;
            advance_without_nonlinearity(&mut s2, params, &mult, forcing)?;
        }
        let s_now =
            sup_pow_2sigma(&s1.field, params.sigma) + sup_pow_2sigma(&s2.field, params.sigma);
        integral += 0.5 * dt * (s_prev + s_now);
        s_prev = s_now;
        if step.is_multiple_of(params.log_every) || step == n_steps {
            log_row(
                step,
                &s1,
                &s2,
                integral,
                s_now,
                &mut times,
                &mut w_sq_col,
                &mut r_col,
                &mut env_col,
                &mut margin_col,
            );
        }
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &w) in times.iter().zip(&w_sq_col) {
        if w > 1e-280 {
            xs.push(t);
            ys.push(w.ln());
        }
    }
    let fitted_decay_rate = regression_slope(&xs, &ys).map(|s| -s);
    let min_margin = margin_col.iter().copied().fold(f64::INFINITY, f64::min);

    Ok(SyncReport {
        times,
        w_norm_sq: w_sq_col,
        r_avg: r_col,
        envelope: env_col,
        margin: margin_col,
        violations,
        tolerance: SYNC_TOLERANCE,
        fitted_decay_rate,
        min_margin,
    })
}

// ---------------------------------------------------------------------------
// Time averages along one trajectory
// ---------------------------------------------------------------------------

/// Default burn-in before time averaging: max(10/λ, t_final/10), falling back
/// to t_final/10 when λ = 0.
pub fn default_burn_in(lambda: f64, t_final: f64) -> f64 {
    let frac = 0.1 * t_final;
    if lambda > 0.0 {
        frac.max(10.0 / lambda)
    } else {
        frac
    }
}

/// Report from [`birkhoff_average`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirkhoffReport {
    pub observable: String,
    /// Time average A(T) over the post-burn-in samples.
    pub mean: f64,
    /// Batch-means standard error ([`BATCH_COUNT`] equal batches).
    pub se: f64,
    pub n_batches: usize,
    /// Samples entering the average (after dropping the batch remainder).
    pub n_samples: usize,
    pub burn_in: f64,
    pub t_final: f64,
    /// λ − 2·A(T) for the sup-norm competition observable, else absent.
    pub damping_margin: Option<f64>,
}

/// Time-average one observable along a single driven trajectory from `x0` to
/// horizon `t_final`, discarding `burn_in` (default [`default_burn_in`]) and
/// sampling every `params.log_every` steps. The standard error comes from
/// [`BATCH_COUNT`] equal batch means. A constant observable averages to that
/// constant exactly.
pub fn birkhoff_average(
    x0: &Field,
    params: &SimParams,
    noise: Option<&NoiseOperator>,
    observable: Observable,
    t_final: f64,
    burn_in: Option<f64>,
) -> Result<BirkhoffReport> {
    let mut reports = birkhoff_averages(x0, params, noise, &[observable], t_final, burn_in, 0)?;
    Ok(reports.pop().expect("one observable requested"))
}

/// Multi-observable form of [`birkhoff_average`]: the trajectory is driven
/// once and every observable is sampled at the same instants. `path_stream`
/// selects the noise stream (distinct values give independent realizations
/// under one master seed).
pub fn birkhoff_averages(
    x0: &Field,
    params: &SimParams,
    noise: Option<&NoiseOperator>,
    observables: &[Observable],
    t_final: f64,
    burn_in: Option<f64>,
    path_stream: u64,
) -> Result<Vec<BirkhoffReport>> {
    params.validate()?;
    if observables.is_empty() {
        return Err(Error::Config(
            "birkhoff_averages: observable list is empty".into(),
        ));
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::Config(format!(
            "birkhoff_averages: t_final must be positive and finite (got {t_final})"
        )));
    }
    let burn = burn_in.unwrap_or_else(|| default_burn_in(params.lambda, t_final));
    if !(burn >= 0.0) || !burn.is_finite() {
        return Err(Error::Config(format!(
            "birkhoff_averages: burn-in must be finite and >= 0 (got {burn})"
        )));
    }
    if burn >= t_final {
        return Err(Error::Config(format!(
            "birkhoff_averages: averaging horizon t_final = {t_final} must exceed \
             the burn-in {burn} (default max(10/lambda, t_final/10))"
        )));
    }

    let dt = params.dt;
    let n_steps = ((t_final / dt).round() as u64).max(1);
    let burn_step = (burn / dt).ceil() as u64;
    let cadence = params.log_every;

    let grid = x0.grid();
    let mult = linear_multiplier(grid.k_sq(), params.lambda, dt);
    let rng = derive_rng(params.seed, StreamRole::Path, path_stream);
    let mut state = State::new(x0.clone(), rng);

    let n_obs = observables.len();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); n_obs];
    let take = |state: &State, samples: &mut Vec<Vec<f64>>| {
        for (j, obs) in observables.iter().enumerate() {
            samples[j].push(obs.evaluate(&state.field, params));
        }
    };

    if burn_step == 0 {
        take(&state, &mut samples);
    }
    for s in 1..=n_steps {
        let coeffs = noise.map(|op| op.sample_coeffs(dt, &mut state.rng));
        let forcing = match (noise, &coeffs) {
            (Some(op), Some(c)) => Some((op, c.as_slice())),
            _ => None,
        };
        advance(&mut state, params, &mult, forcing)?;
        if s >= burn_step && (s - burn_step).is_multiple_of(cadence) {
            take(&state, &mut samples);
        }
    }

    observables
        .iter()
        .zip(&samples)
        .map(|(obs, col)| {
            let (mean, se, used) = batch_mean_se(col)?;
            let damping_margin = match obs {
                Observable::LinfPow2Sigma => Some(params.lambda - 2.0 * mean),
                _ => None,
            };
            Ok(BirkhoffReport {
                observable: obs.name().to_string(),
                mean,
                se,
                n_batches: BATCH_COUNT,
                n_samples: used,
                burn_in: burn,
                t_final,
                damping_margin,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Damping sweeps
// ---------------------------------------------------------------------------

/// Stationary statistics at one damping strength.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub mean_v_norm_sq: f64,
    pub se_v_norm_sq: f64,
    pub mean_sup_pow_2sigma: f64,
    pub se_sup_pow_2sigma: f64,
    pub mean_mass: f64,
    pub se_mass: f64,
    /// ‖Φ‖²_{HS(U;H)} / (2λ), the exact stationary mean mass.
    pub stationary_mass_exact: Option<f64>,
    pub phi1: Option<f64>,
    pub phi2_m1: Option<f64>,
    /// λ − 2·E‖u‖^{2σ}_∞ estimated at this λ.
    pub damping_margin: f64,
    pub burn_in: f64,
}

/// Report from [`lambda_sweep`]. Monotonicity verdicts compare consecutive
/// rows allowing 3 combined standard errors of slack; they are present only
/// when the sweep has at least two rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub t_final: f64,
    /// E‖u‖²_V non-increasing in λ (within noise)?
    pub v_norm_non_increasing: Option<bool>,
    /// E‖u‖^{2σ}_∞ non-increasing in λ (within noise)?
    pub sup_pow_non_increasing: Option<bool>,
    /// Every row's mean mass within 3 SE of ‖Φ‖²/(2λ)?
    pub mass_matches_stationary: Option<bool>,
}

/// Estimate stationary statistics at each damping strength in `lambdas` (all
/// positive), one independently seeded trajectory per value, and report
/// CI-consistent monotonicity verdicts across the sweep.
pub fn lambda_sweep(
    u0: &Field,
    params: &SimParams,
    noise: Option<&NoiseOperator>,
    lambdas: &[f64],
    t_final: f64,
    burn_in: Option<f64>,
) -> Result<SweepReport> {
    if lambdas.is_empty() {
        return Err(Error::Config("lambda_sweep: lambda list is empty".into()));
    }
    for (i, &lam) in lambdas.iter().enumerate() {
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::Domain(format!(
                "lambda_sweep: damping values must be positive and finite \
                 (lambdas[{i}] = {lam})"
            )));
        }
    }

    let observables = [
        Observable::VNormSq,
        Observable::LinfPow2Sigma,
        Observable::Mass,
    ];
    let mut rows = Vec::with_capacity(lambdas.len());
    for (i, &lam) in lambdas.iter().enumerate() {
        let mut p = *params;
        p.lambda = lam;
        let reports = birkhoff_averages(u0, &p, noise, &observables, t_final, burn_in, i as u64)?;
        let stationary = noise.map(|op| op.hs_norm_sq(HsSpace::H) / (2.0 * lam));
        rows.push(SweepRow {
            lambda: lam,
            mean_v_norm_sq: reports[0].mean,
            se_v_norm_sq: reports[0].se,
            mean_sup_pow_2sigma: reports[1].mean,
            se_sup_pow_2sigma: reports[1].se,
            mean_mass: reports[2].mean,
            se_mass: reports[2].se,
            stationary_mass_exact: stationary,
            phi1: noise.and_then(|op| phi1(p.sigma, lam, op).ok()),
            phi2_m1: noise.and_then(|op| phi2_m1(u0.grid().d(), p.sigma, lam, op).ok()),
            damping_margin: reports[1].damping_margin.expect("sup-norm observable"),
            burn_in: reports[0].burn_in,
        });
    }

    let non_increasing = |mean: fn(&SweepRow) -> f64, se: fn(&SweepRow) -> f64| -> Option<bool> {
        if rows.len() < 2 {
            return None;
        }
        Some(rows.windows(2).all(|w| {
            let slack = 3.0 * (se(&w[0]).powi(2) + se(&w[1]).powi(2)).sqrt();
            mean(&w[1]) <= mean(&w[0]) + slack
        }))
    };
    let v_verdict = non_increasing(|r| r.mean_v_norm_sq, |r| r.se_v_norm_sq);
    let sup_verdict = non_increasing(|r| r.mean_sup_pow_2sigma, |r| r.se_sup_pow_2sigma);
    let mass_verdict = if noise.is_some() {
        Some(rows.iter().all(|r| {
            let target = r.stationary_mass_exact.expect("noise present");
            (r.mean_mass - target).abs() <= 3.0 * r.se_mass
        }))
    } else {
        None
    };

    Ok(SweepReport {
        rows,
        t_final,
        v_norm_non_increasing: v_verdict,
        sup_pow_non_increasing: sup_verdict,
        mass_matches_stationary: mass_verdict,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Scheme;
    use crate::fields::gaussian_bump;
    use crate::grid::make_grid;
    use crate::noise::{build_noise, NoiseConvention};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn test_params(lambda: f64, sigma: f64, alpha: f64, dt: f64, seed: u64) -> SimParams {
        SimParams {
            lambda,
            sigma,
            alpha,
            dt,
            t_final: 0.0,
            scheme: Scheme::Strang,
            log_every: 1,
            seed,
        }
    }

    fn unit_h_noise(grid: &std::sync::Arc<crate::grid::Grid>, modes: &[Vec<i64>]) -> NoiseOperator {
        // Normalize so ‖Φ‖²_{HS(U;H)} = 1 exactly.
        let amp = Complex64::new(1.0 / (modes.len() as f64).sqrt(), 0.0);
        let entries: Vec<_> = modes.iter().map(|m| (m.clone(), amp)).collect();
        build_noise(grid, &entries, NoiseConvention::TwoPerMode).unwrap()
    }

    #[test]
    fn exact_mean_mass_limits_and_fixed_point() {
        let grid = make_grid(1, 16, 6.0).unwrap();
        let op = unit_h_noise(&grid, &[vec![0], vec![1]]);
        let hs = op.hs_norm_sq(HsSpace::H);
        assert_relative_eq!(hs, 1.0, max_relative = 1e-14);

        let lambda = 1.7;
        let m0 = 0.42;
        assert_relative_eq!(exact_mean_mass(0.0, m0, lambda, Some(&op)).unwrap(), m0);
        let stationary = hs / (2.0 * lambda);
        assert_relative_eq!(
            exact_mean_mass(1e6, m0, lambda, Some(&op)).unwrap(),
            stationary,
            max_relative = 1e-12
        );
        // Starting at the stationary level the mean never moves.
        for &t in &[0.1, 1.0, 7.0] {
            assert_relative_eq!(
                exact_mean_mass(t, stationary, lambda, Some(&op)).unwrap(),
                stationary,
                max_relative = 1e-13
            );
        }
        // Unforced flow: pure exponential decay.
        assert_relative_eq!(
            exact_mean_mass(2.0, m0, lambda, None).unwrap(),
            m0 * (-2.0 * lambda * 2.0).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn exact_mean_mass_rejects_nonpositive_damping() {
        assert!(matches!(
            exact_mean_mass(1.0, 1.0, 0.0, None),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            exact_mean_mass(1.0, 1.0, -2.0, None),
            Err(Error::Domain(_))
        ));
        // The undamped formula is available, but only by explicit request.
        let grid = make_grid(1, 16, 6.0).unwrap();
        let op = unit_h_noise(&grid, &[vec![0]]);
        assert_relative_eq!(exact_mean_mass_undamped(3.0, 0.5, Some(&op)), 0.5 + 3.0);
        assert_relative_eq!(exact_mean_mass_undamped(3.0, 0.5, None), 0.5);
    }

    #[test]
    fn phi1_pinned_value_and_monotonicity() {
        let grid = make_grid(1, 16, 2.0 * std::f64::consts::PI).unwrap();
        // Zero mode only: the V and H norms coincide, so ‖Φ‖_{HS(U;V)} = 1.
        let op = unit_h_noise(&grid, &[vec![0]]);
        assert_relative_eq!(op.hs_norm_sq(HsSpace::V), 1.0, max_relative = 1e-14);
        // 1 + 1^{2+2σ}·λ^{-σ} at σ = 1, λ = 4 gives exactly 1.25.
        assert_relative_eq!(phi1(1.0, 4.0, &op).unwrap(), 1.25, max_relative = 1e-14);

        let mut prev = f64::INFINITY;
        for &lam in &[0.25, 0.5, 1.0, 2.0, 4.0, 32.0] {
            let v = phi1(0.7, lam, &op).unwrap();
            assert!(
                v < prev,
                "phi1 must strictly decrease in lambda ({v} !< {prev})"
            );
            prev = v;
        }
        // Large damping leaves only the additive term ‖Φ‖²_V.
        assert_relative_eq!(phi1(1.0, 1e12, &op).unwrap(), 1.0, max_relative = 1e-6);
        assert!(matches!(phi1(1.0, 0.0, &op), Err(Error::Domain(_))));
        assert!(matches!(phi1(-0.5, 1.0, &op), Err(Error::Domain(_))));
    }

    #[test]
    fn phi2_pinned_value_and_domain() {
        let grid = make_grid(2, 8, 2.0 * std::f64::consts::PI).unwrap();
        let op = unit_h_noise(&grid, &[vec![0, 0]]);
        // d = 2, σ = 1/2: exponent 1 + 2σ/(2 − σd) = 2; with ‖Φ‖_H = 1,
        // ∇Φ = 0, λ = 1 the value is 1·(1 + 1) + 0 = 2.
        assert_relative_eq!(
            phi2_m1(2, 0.5, 1.0, &op).unwrap(),
            2.0,
            max_relative = 1e-14
        );

        let mut prev = f64::INFINITY;
        for &lam in &[0.5, 1.0, 2.0, 8.0] {
            let v = phi2_m1(2, 0.5, lam, &op).unwrap();
            assert!(v < prev);
            prev = v;
        }
        // Mass-critical and supercritical combinations are rejected.
        assert!(matches!(phi2_m1(2, 1.0, 1.0, &op), Err(Error::Domain(_))));
        assert!(matches!(phi2_m1(3, 0.7, 1.0, &op), Err(Error::Domain(_))));
        assert!(matches!(phi2_m1(2, 0.5, 0.0, &op), Err(Error::Domain(_))));
        assert!(matches!(phi2_m1(4, 0.1, 1.0, &op), Err(Error::Domain(_))));
    }

    #[test]
    fn mc_moments_unforced_flow_has_zero_se_and_exact_decay() {
        let grid = make_grid(1, 16, 6.0).unwrap();
        let u0 = gaussian_bump(&grid, 0.8, 1.1);
        let params = test_params(0.7, 1.0, -1.0, 1e-2, 11);
        let report = mc_moments(&u0, &params, None, &[1, 2], &[0.0, 0.25, 0.5], 4, &[]).unwrap();

        assert_eq!(report.n_paths_used, 4);
        assert_eq!(report.n_excluded, 0);
        let m0 = mass(&u0);
        for (i, &t) in report.times.iter().enumerate() {
            // Every path is identical: exact zero standard errors.
            assert_eq!(report.moments[0].se[i], 0.0);
            assert_eq!(report.moments[1].se[i], 0.0);
            // Unforced mass decays exactly at rate 2λ under both schemes.
            assert_relative_eq!(
                report.moments[0].mean[i],
                m0 * (-2.0 * params.lambda * t).exp(),
                max_relative = 1e-12
            );
        }
        let dev = report.max_rel_deviation_mean_mass.unwrap();
        assert!(dev < 1e-10, "deviation from exact curve: {dev}");
        assert!(
            report.bound_fits.is_empty(),
            "no envelope fit without forcing"
        );
    }

    #[test]
    fn mc_moments_mean_mass_tracks_exact_curve() {
        let grid = make_grid(1, 16, 6.0).unwrap();
        let u0 = gaussian_bump(&grid, 0.8, 0.7);
        let op = unit_h_noise(&grid, &[vec![0], vec![1], vec![-1]]);
        let params = test_params(1.0, 1.0, -1.0, 2e-3, 23);
        let times = [0.1, 0.3, 0.5];
        let report = mc_moments(&u0, &params, Some(&op), &[1, 2], &times, 200, &[]).unwrap();

        let exact = report.exact_mean_mass_curve.as_ref().unwrap();
        for i in 0..times.len() {
            let mean = report.moments[0].mean[i];
            let se = report.moments[0].se[i];
            assert!(se > 0.0, "forced ensemble must have nonzero SE");
            let tol = (3.0 * se).max(0.02 * exact[i]);
            assert!(
                (mean - exact[i]).abs() <= tol,
                "t = {}: mean {mean} vs exact {} (tol {tol})",
                times[i],
                exact[i]
            );
        }
        // Envelope fits exist for both powers and hold by construction.
        assert_eq!(report.bound_fits.len(), 2);
        for fit in &report.bound_fits {
            assert!(fit.c_fit >= 0.0);
            assert!(fit.holds_at_all_times);
        }
    }

    #[test]
    fn mc_moments_is_deterministic() {
        let grid = make_grid(1, 16, 6.0).unwrap();
        let u0 = gaussian_bump(&grid, 0.8, 0.7);
        let op = unit_h_noise(&grid, &[vec![0], vec![2]]);
        let params = test_params(1.0, 1.0, -1.0, 5e-3, 37);
        let run = || {
            mc_moments(
                &u0,
                &params,
                Some(&op),
                &[1, 3],
                &[0.1, 0.2],
                16,
                &[Observable::VNormSq],
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b, "identical inputs must give bit-identical reports");
        assert_eq!(a.extra[0].name, "v_norm_sq");
    }

    #[test]
    fn mc_moments_rejects_bad_arguments_and_divergence() {
        let grid = make_grid(1, 16, 6.0).unwrap();
        let u0 = gaussian_bump(&grid, 0.8, 0.7);
        let params = test_params(1.0, 1.0, -1.0, 1e-2, 5);
        let err = mc_moments(&u0, &params, None, &[1], &[0.1], 1, &[]);
        assert!(matches!(err, Err(Error::Config(_))));
        let err = mc_moments(&u0, &params, None, &[], &[0.1], 4, &[]);
        assert!(matches!(err, Err(Error::Config(_))));
        let err = mc_moments(&u0, &params, None, &[1], &[0.2, 0.1], 4, &[]);
        assert!(matches!(err, Err(Error::Config(_))));
        let err = mc_moments(&u0, &params, None, &[1], &[0.1, 0.1001], 4, &[]);
        assert!(
            matches!(err, Err(Error::Config(_))),
            "times snapping to one step"
        );

        // An initial amplitude beyond the resolvable regime kills every path.
        let huge = gaussian_bump(&grid, 0.8, 5e12);
        let err = mc_moments(&huge, &params, None, &[1], &[0.1], 4, &[]);
        assert!(matches!(err, Err(Error::Domain(_))), "got {err:?}");
    }

    #[test]
    fn sync_identical_initial_conditions_never_separate() {
        let grid = make_grid(1, 32, 6.0).unwrap();
        let u0 = gaussian_bump(&grid, 0.9, 0.8);
        let op = unit_h_noise(&grid, &[vec![0], vec![1]]);
        let params = test_params(1.5, 1.0, -1.0, 1e-3, 71);
        let report = sync_experiment(&u0, &u0, &params, Some(&op), 0.2).unwrap();
        assert!(report.w_norm_sq.iter().all(|&w| w == 0.0));
        assert_eq!(report.violations, 0);
        assert!(report.fitted_decay_rate.is_none());
    }

    #[test]
    fn sync_without_nonlinearity_decays_exactly() {
        let grid = make_grid(1, 32, 6.0).unwrap();
        let u1 = gaussian_bump(&grid, 0.9, 0.8);
        let u2 = gaussian_bump(&grid, 0.7, 0.6);
        let op = unit_h_noise(&grid, &[vec![0], vec![1], vec![3]]);
        let lambda = 0.8;
        let mut params = test_params(lambda, 1.0, -1.0, 1e-3, 97);
        params.log_every = 25;
        let report =
            sync_experiment_without_nonlinearity(&u1, &u2, &params, Some(&op), 0.5).unwrap();

        let w0 = report.w_norm_sq[0];
        for (&t, &w) in report.times.iter().zip(&report.w_norm_sq) {
            assert_relative_eq!(w, w0 * (-2.0 * lambda * t).exp(), max_relative = 1e-11);
        }
        assert_eq!(report.violations, 0);
        let rate = report.fitted_decay_rate.unwrap();
        assert_relative_eq!(rate, 2.0 * lambda, max_relative = 1e-9);
    }

    #[test]
    fn sync_overdamped_pair_obeys_envelope() {
        let grid = make_grid(1, 32, 6.0).unwrap();
        let u1 = gaussian_bump(&grid, 0.9, 0.35);
        let u2 = gaussian_bump(&grid, 0.8, 0.30);
        let op = unit_h_noise(&grid, &[vec![0], vec![1]]);
        let mut params = test_params(2.5, 1.0, -1.0, 1e-3, 113);
        params.log_every = 50;
        let report = sync_experiment(&u1, &u2, &params, Some(&op), 1.0).unwrap();
        assert_eq!(report.violations, 0, "pathwise envelope must hold");
        assert!(report.min_margin > 0.0, "margin {}", report.min_margin);
        let rate = report.fitted_decay_rate.unwrap();
        assert!(
            rate >= 2.0 * report.min_margin * 0.9,
            "fitted rate {rate} vs 2·min margin {}",
            2.0 * report.min_margin
        );
    }

    #[test]
    fn sync_rejects_mismatched_grids() {
        let g1 = make_grid(1, 16, 6.0).unwrap();
        let g2 = make_grid(1, 32, 6.0).unwrap();
        let u1 = gaussian_bump(&g1, 0.9, 0.5);
        let u2 = gaussian_bump(&g2, 0.9, 0.5);
        let params = test_params(1.0, 1.0, -1.0, 1e-3, 7);
        let err = sync_experiment(&u1, &u2, &params, None, 0.1);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn birkhoff_constant_observable_is_exactly_one() {
        let grid = make_grid(1, 16, 6.0).unwrap();
        let u0 = gaussian_bump(&grid, 0.8, 0.5);
        let op = unit_h_noise(&grid, &[vec![0], vec![1]]);
        let mut params = test_params(2.0, 1.0, -1.0, 5e-3, 301);
        params.log_every = 4;
        let report =
            birkhoff_average(&u0, &params, Some(&op), Observable::Unit, 30.0, None).unwrap();
        assert_eq!(report.mean, 1.0, "constant observable must average exactly");
        assert_eq!(report.se, 0.0);
        assert_eq!(report.n_batches, BATCH_COUNT);
        assert!(report.n_samples >= BATCH_COUNT);
    }

    #[test]
    fn birkhoff_mass_average_matches_stationary_level() {
        let grid = make_grid(1, 16, 6.0).unwrap();
        let u0 = gaussian_bump(&grid, 0.8, 0.5);
        let op = unit_h_noise(&grid, &[vec![0], vec![1], vec![-1]]);
        let lambda = 3.0;
        let mut params = test_params(lambda, 1.0, -1.0, 5e-3, 4242);
        params.log_every = 5;
        let report =
            birkhoff_average(&u0, &params, Some(&op), Observable::Mass, 40.0, None).unwrap();
        let stationary = op.hs_norm_sq(HsSpace::H) / (2.0 * lambda);
        assert!(report.se > 0.0);
        assert!(
            (report.mean - stationary).abs() <= 3.0 * report.se,
            "time average {} vs stationary {} (se {})",
            report.mean,
            stationary,
            report.se
        );
    }

    #[test]
    fn birkhoff_rejects_horizons_inside_burn_in() {
        let grid = make_grid(1, 16, 6.0).unwrap();
        let u0 = gaussian_bump(&grid, 0.8, 0.5);
        let params = test_params(0.1, 1.0, -1.0, 1e-2, 9);
        // Default burn-in is max(10/0.1, 0.1·1) = 100 > 1.
        let err = birkhoff_average(&u0, &params, None, Observable::Mass, 1.0, None);
        assert!(matches!(err, Err(Error::Config(_))));
        let err = birkhoff_average(&u0, &params, None, Observable::Mass, 1.0, Some(2.0));
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn lambda_sweep_rows_and_verdicts() {
        let grid = make_grid(1, 16, 6.0).unwrap();
        let u0 = gaussian_bump(&grid, 0.8, 0.5);
        let op = unit_h_noise(&grid, &[vec![0], vec![1]]);
        let mut params = test_params(1.0, 1.0, -1.0, 1e-2, 515);
        params.log_every = 2;

        // A single damping value yields one row and no verdicts.
        let single = lambda_sweep(&u0, &params, Some(&op), &[2.0], 10.0, Some(2.0)).unwrap();
        assert_eq!(single.rows.len(), 1);
        assert!(single.v_norm_non_increasing.is_none());
        assert!(single.sup_pow_non_increasing.is_none());
        assert!(single.mass_matches_stationary.is_some());

        let sweep = lambda_sweep(&u0, &params, Some(&op), &[1.0, 4.0], 12.0, Some(2.0)).unwrap();
        assert_eq!(sweep.rows.len(), 2);
        for row in &sweep.rows {
            assert!(row.phi1.unwrap() > 0.0);
            assert!(row.stationary_mass_exact.unwrap() > 0.0);
            assert!(row.se_mass > 0.0);
            assert!(row.burn_in > 0.0);
        }
        // d = 1, σ = 1 is mass-subcritical, so the second functional exists.
        assert!(sweep.rows[0].phi2_m1.unwrap() > sweep.rows[1].phi2_m1.unwrap());
        assert!(sweep.v_norm_non_increasing.is_some());
        assert!(sweep.sup_pow_non_increasing.is_some());

        let err = lambda_sweep(&u0, &params, Some(&op), &[1.0, -1.0], 10.0, Some(2.0));
        assert!(matches!(err, Err(Error::Domain(_))));
        let err = lambda_sweep(&u0, &params, Some(&op), &[], 10.0, Some(2.0));
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
