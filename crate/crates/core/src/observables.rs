//! The equation's conserved/dissipated functionals — mass, energy, modified
//! energy, V-norm — plus numerical estimation of the Gagliardo–Nirenberg
//! constant and the derived Young-split constant G.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::fields::{gaussian_bump, random_smooth, SmoothFieldSpec};
use crate::grid::{gradient_norm_sq, Field, Grid};
use crate::rng::{derive_rng, StreamRole};

/// M(u) = ‖u‖²_{L²} (quadrature sum).
pub fn mass(u: &Field) -> f64 {
    let sum: f64 = u.values().iter().map(|v| v.norm_sqr()).sum();
    sum * u.grid().cell_volume()
}

/// ∫|u|^{2+2σ} dx (quadrature).
fn potential_integral(u: &Field, sigma: f64) -> f64 {
    let cell = u.grid().cell_volume();
    let sum: f64 = if sigma == 1.0 {
        u.values().iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum()
    } else if sigma == 0.5 {
        u.values().iter().map(|v| v.norm_sqr().powf(1.5)).sum()
    } else {
        u.values()
            .iter()
            .map(|v| v.norm_sqr().powf(1.0 + sigma))
            .sum()
    };
    sum * cell
}

/// H(u) = ½‖∇u‖²_{L²} − α/(2(1+σ))·‖u‖^{2+2σ}_{L^{2+2σ}}.
///
/// Nonnegative for α = −1 (both terms have positive sign).
pub fn energy(u: &Field, sigma: f64, alpha: f64) -> f64 {
    0.5 * gradient_norm_sq(u) - alpha / (2.0 * (1.0 + sigma)) * potential_integral(u, sigma)
}

/// ‖u‖²_V = ‖∇u‖²_{L²} + M(u).
pub fn v_norm_sq(u: &Field) -> f64 {
    gradient_norm_sq(u) + mass(u)
}

/// Exponent of the mass term in the modified energy, 1 + 2σ/(2−σd).
pub fn modified_mass_exponent(sigma: f64, d: usize) -> f64 {
    1.0 + 2.0 * sigma / (2.0 - sigma * d as f64)
}

/// Focusing modified energy H̃(u) = H(u) + G·M(u)^{1+2σ/(2−σd)} (α = +1).
///
/// Requires σd < 2; with G from [`young_g_constant`] at a valid
/// Gagliardo–Nirenberg constant, H̃(u) ≥ ¼‖∇u‖²_{L²}.
pub fn modified_energy(u: &Field, sigma: f64, g_const: f64) -> f64 {
    let d = u.grid().d();
    assert!(
        sigma * (d as f64) < 2.0,
        "modified_energy: requires σd < 2 (σ={sigma}, d={d})"
    );
    energy(u, sigma, 1.0) + g_const * mass(u).powf(modified_mass_exponent(sigma, d))
}

/// Interpolation exponent θ = σd/(2(1+σ)); valid (0 < θ < 1) iff σd < 2(σ+1).
pub fn theta(sigma: f64, d: usize) -> f64 {
    sigma * d as f64 / (2.0 * (1.0 + sigma))
}

/// Young-split constant G from a Gagliardo–Nirenberg constant.
///
/// From ‖u‖^{2+2σ}_{2+2σ} ≤ C^{2+2σ}·M^{(2+2σ−σd)/2}·‖∇u‖^{σd} and Young's
/// inequality with exponents q = 2/(σd), q' = 2/(2−σd), choosing ε so the
/// gradient term's coefficient is exactly ¼:
///
/// ```text
///   K = C^{2+2σ}/(2(1+σ)),   G = ((2−σd)/2)·K·(2σd·K)^{σd/(2−σd)}
/// ```
///
/// which yields H̃ = H + G·M^{1+2σ/(2−σd)} ≥ ¼‖∇u‖² whenever the field's
/// Weinstein quotient is ≤ C.
pub fn young_g_constant(c_gn: f64, sigma: f64, d: usize) -> f64 {
    let sd = sigma * d as f64;
    assert!(sd < 2.0, "young_g_constant: requires σd < 2");
    let k = c_gn.powf(2.0 + 2.0 * sigma) / (2.0 * (1.0 + sigma));
    (2.0 - sd) / 2.0 * k * (2.0 * sd * k).powf(sd / (2.0 - sd))
}

/// Weinstein quotient ‖u‖_{2+2σ} / (‖u‖₂^{1−θ}·‖∇u‖₂^{θ}); `None` for
/// degenerate fields (zero mass or zero gradient).
pub fn weinstein_quotient(u: &Field, sigma: f64) -> Option<f64> {
    let m = mass(u);
    let g = gradient_norm_sq(u);
    if m < 1e-300 || g < 1e-300 {
        return None;
    }
    let th = theta(sigma, u.grid().d());
    let p = 2.0 + 2.0 * sigma;
    let num = potential_integral(u, sigma).powf(1.0 / p);
    Some(num / (m.sqrt().powf(1.0 - th) * g.sqrt().powf(th)))
}

#[derive(Clone, Debug, Serialize)]
pub struct GnRestartTrace {
    pub start: String,
    pub iterations: usize,
    pub converged: bool,
    pub quotient: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GnTrace {
    pub restarts: Vec<GnRestartTrace>,
    pub best: usize,
    /// Set when the best restart exhausted its iteration budget without
    /// meeting the convergence test.
    pub warning: bool,
}

/// Result of [`estimate_gn_constant`].
#[derive(Clone, Debug, Serialize)]
pub struct GNEstimate {
    pub sigma: f64,
    pub d: usize,
    pub theta: f64,
    pub c_gn: f64,
    pub g_const: f64,
    pub provenance: GnTrace,
}

#[derive(Clone, Copy, Debug)]
pub struct GnOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub step: f64,
    /// Spectral width of the random starts; defaults to four box modes.
    pub start_corr_wavenumber: Option<f64>,
}

impl Default for GnOptions {
    fn default() -> Self {
        GnOptions {
            restarts: 16,
            iterations: 500,
            step: 1e-2,
            start_corr_wavenumber: None,
        }
    }
}

/// Project to the optimization manifold: zero mean, unit mass.
///
/// Constants make the quotient degenerate on a periodic box (the gradient
/// vanishes while the L^p norms do not), so the estimator works over
/// mean-zero fields; see the README's discussion of the box truncation.
fn project(values: &mut [Complex64], cell: f64) {
    let mean: Complex64 = values.iter().sum::<Complex64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
    let m: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
    if m > 0.0 {
        let s = 1.0 / m.sqrt();
        for v in values.iter_mut() {
            *v *= s;
        }
    }
}

struct QuotientEval {
    log_q: f64,
    coeffs: Vec<Complex64>,
    mass: f64,
    grad_sq: f64,
    lp_pow_p: f64,
}

fn eval_log_quotient(grid: &Arc<Grid>, values: &[Complex64], sigma: f64) -> Option<QuotientEval> {
    let cell = grid.cell_volume();
    let mut coeffs = values.to_vec();
    let mut work = grid.make_work();
    grid.forward_inplace(&mut coeffs, &mut work);
    let grad_sq: f64 = coeffs
        .iter()
        .zip(grid.k_sq())
        .map(|(c, &ks)| ks * c.norm_sqr())
        .sum();
    let m: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
    let p = 2.0 + 2.0 * sigma;
    let lp_pow_p: f64 = values
        .iter()
        .map(|v| v.norm_sqr().powf(p / 2.0))
        .sum::<f64>()
        * cell;
    if m < 1e-300 || grad_sq < 1e-300 || lp_pow_p < 1e-300 {
        return None;
    }
    let th = theta(sigma, grid.d());
    let log_q = lp_pow_p.ln() / p - (1.0 - th) / 2.0 * m.ln() - th / 2.0 * grad_sq.ln();
    Some(QuotientEval {
        log_q,
        coeffs,
        mass: m,
        grad_sq,
        lp_pow_p,
    })
}

/// One projected-gradient-ascent run on log(quotient); returns the best
/// iterate's quotient and the trace.
fn ascend(
    grid: &Arc<Grid>,
    start: Field,
    sigma: f64,
    opts: &GnOptions,
    label: &str,
) -> GnRestartTrace {
    let cell = grid.cell_volume();
    let p = 2.0 + 2.0 * sigma;
    let th = theta(sigma, grid.d());
    let mut work = grid.make_work();

    let mut values = start.values().to_vec();
    project(&mut values, cell);
    let mut cur = match eval_log_quotient(grid, &values, sigma) {
        Some(e) => e,
        None => {
            return GnRestartTrace {
                start: label.into(),
                iterations: 0,
                converged: false,
                quotient: 0.0,
            }
        }
    };

    let mut eta = opts.step;
    let mut stall = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;

    for _ in 0..opts.iterations {
        iterations += 1;
        // L²-gradient of log Q at the current iterate.
        let mut lap = cur.coeffs.clone();
        for (c, &ks) in lap.iter_mut().zip(grid.k_sq()) {
            *c *= ks;
        }
        grid.inverse_inplace(&mut lap, &mut work); // -Δu
        let mut grad: Vec<Complex64> = values
            .iter()
            .zip(&lap)
            .map(|(&v, &mlap)| {
                let vp = v.norm_sqr().powf(p / 2.0 - 1.0) * v;
                vp / cur.lp_pow_p - (1.0 - th) / cur.mass * v - th / cur.grad_sq * mlap
            })
            .collect();
        let gnorm_sq: f64 = grad.iter().map(|g| g.norm_sqr()).sum::<f64>() * cell;
        if gnorm_sq < 1e-280 {
            converged = true;
            break;
        }
        // Relative step: move η·‖u‖/‖g‖ along the gradient.
        let scale0 = (cur.mass / gnorm_sq).sqrt();
        for g in grad.iter_mut() {
            *g *= scale0;
        }

        let mut accepted = false;
        let mut trial_eta = eta;
        for _ in 0..30 {
            let mut trial: Vec<Complex64> = values
                .iter()
                .zip(&grad)
                .map(|(&v, &g)| v + trial_eta * g)
                .collect();
            project(&mut trial, cell);
            if let Some(e) = eval_log_quotient(grid, &trial, sigma) {
                if e.log_q > cur.log_q {
                    let gain = e.log_q - cur.log_q;
                    values = trial;
                    cur = e;
                    eta = (trial_eta * 1.2).min(opts.step * 10.0);
                    accepted = true;
                    if gain < 1e-11 {
                        stall += 1;
                    } else {
                        stall = 0;
                    }
                    break;
                }
            }
            trial_eta *= 0.5;
        }
        if !accepted || stall >= 3 {
            converged = true;
            break;
        }
    }

    GnRestartTrace {
        start: label.into(),
        iterations,
        converged,
        quotient: cur.log_q.exp(),
    }
}

/// Estimate the best Gagliardo–Nirenberg constant on this grid by multistart
/// projected gradient ascent of the Weinstein quotient over mean-zero,
/// unit-mass fields, and derive G via [`young_g_constant`].
///
/// Deterministic for a fixed `master_seed` (one stream per restart; restarts
/// run in parallel and are reduced in restart order).
pub fn estimate_gn_constant(
    grid: &Arc<Grid>,
    sigma: f64,
    opts: &GnOptions,
    master_seed: u64,
) -> GNEstimate {
    let d = grid.d();
    assert!(
        sigma * d as f64 / (2.0 * (1.0 + sigma)) < 1.0,
        "estimate_gn_constant: requires σd < 2(σ+1)"
    );
    let kc = opts
        .start_corr_wavenumber
        .unwrap_or(4.0 * 2.0 * std::f64::consts::PI / grid.len());

    let mut starts: Vec<(String, Field)> = vec![(
        "gaussian".into(),
        gaussian_bump(grid, grid.len() / 8.0, 1.0),
    )];
    for i in 0..opts.restarts {
        let mut rng = derive_rng(master_seed, StreamRole::GnRestart, i as u64);
        let spec = SmoothFieldSpec {
            corr_wavenumber: kc,
            h_norm: 1.0,
            zero_mean: true,
        };
        starts.push((format!("random.{i}"), random_smooth(grid, &spec, &mut rng)));
    }

    let restarts: Vec<GnRestartTrace> = starts
        .into_par_iter()
        .map(|(label, start)| ascend(grid, start, sigma, opts, &label))
        .collect();

    let best = restarts
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.quotient
                .partial_cmp(&b.quotient)
                .unwrap()
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i)
        .unwrap();
    let c_gn = restarts[best].quotient;
    let warning = !restarts[best].converged;

    let g_const = if sigma * d as f64 / 2.0 < 1.0 {
        young_g_constant(c_gn, sigma, d)
    } else {
        0.0
    };

    GNEstimate {
        sigma,
        d,
        theta: theta(sigma, d),
        c_gn,
        g_const,
        provenance: GnTrace {
            restarts,
            best,
            warning,
        },
    }
}
