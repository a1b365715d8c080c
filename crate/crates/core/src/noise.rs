//! Additive noise operator: a finite family of amplitude-weighted Fourier
//! modes driving independent real Wiener processes.
//!
//! The operator maps the j-th noise coordinate to the normalized plane wave
//! `a_j·e^{ik_j·x}/√V`, i.e. spectral coefficient `a_j` at mode k_j, so
//! ‖Φe_j‖_{L²} = |a_j| and the Hilbert–Schmidt norms are finite sums:
//!
//! ```text
//!   ‖Φ‖²_{HS(U;H)}  = Σ|a_j|²,      ‖∇Φ‖²_{HS(U;H)} = Σ|a_j|²·|k_j|²,
//!   ‖Φ‖²_{HS(U;V)}  = ‖Φ‖²_{HS(U;H)} + ‖∇Φ‖²_{HS(U;H)}   (exact identity).
//! ```
//!
//! Increment convention over a step dt (documented, config-switchable):
//!
//! * `two_per_mode` (default): coefficient `a_j·(ξ₁+iξ₂)·√(dt/2)` with
//!   independent ξ ~ N(0,1) — both quadratures forced; for real a_j the real
//!   and imaginary parts each have variance |a_j|²·dt/2.
//! * `one_per_mode`: coefficient `a_j·ξ·√dt` — one real Brownian per mode.
//!
//! Both give E‖increment‖²_{L²} = ‖Φ‖²_{HS(U;H)}·dt.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::rng::PathRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseConvention {
    #[default]
    TwoPerMode,
    OnePerMode,
}

/// Which Hilbert–Schmidt norm of the operator to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsSpace {
    /// HS(U; L²).
    H,
    /// HS(U; H¹): H plus the gradient part.
    V,
    /// The gradient part alone, ‖∇Φ‖_{HS(U;H)}.
    GradH,
}

pub struct NoiseOperator {
    grid: Arc<Grid>,
    modes: Vec<Vec<i64>>,
    flat: Vec<usize>,
    amps: Vec<Complex64>,
    convention: NoiseConvention,
    hs_h_sq: f64,
    hs_grad_sq: f64,
    /// Physical samples of e^{ik_j·x}/√V per mode, for adding increments
    /// without a transform.
    waves: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for NoiseOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseOperator")
            .field("modes", &self.modes)
            .field("amps", &self.amps)
            .field("convention", &self.convention)
            .field("hs_h_sq", &self.hs_h_sq)
            .field("hs_grad_sq", &self.hs_grad_sq)
            .finish_non_exhaustive()
    }
}

impl NoiseOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn modes(&self) -> &[Vec<i64>] {
        &self.modes
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn convention(&self) -> NoiseConvention {
        self.convention
    }

    pub fn hs_norm_sq(&self, space: HsSpace) -> f64 {
        match space {
            HsSpace::H => self.hs_h_sq,
            HsSpace::GradH => self.hs_grad_sq,
            HsSpace::V => self.hs_h_sq + self.hs_grad_sq,
        }
    }

    pub fn hs_norm(&self, space: HsSpace) -> f64 {
        self.hs_norm_sq(space).sqrt()
    }

    /// Draw one Wiener increment over `dt` as per-mode spectral coefficients
    /// (aligned with [`NoiseOperator::modes`]). Two normals are consumed per
    /// mode under `two_per_mode`, one under `one_per_mode`, in mode order.
    pub fn sample_coeffs(&self, dt: f64, rng: &mut PathRng) -> Vec<Complex64> {
        assert!(dt >= 0.0, "sample_coeffs: dt must be ≥ 0 (got {dt})");
        match self.convention {
            NoiseConvention::TwoPerMode => {
                let s = (dt / 2.0).sqrt();
                self.amps
                    .iter()
                    .map(|a| {
                        let xi1: f64 = rng.sample(StandardNormal);
                        let xi2: f64 = rng.sample(StandardNormal);
                        a * Complex64::new(xi1 * s, xi2 * s)
                    })
                    .collect()
            }
            NoiseConvention::OnePerMode => {
                let s = dt.sqrt();
                self.amps
                    .iter()
                    .map(|a| {
                        let xi: f64 = rng.sample(StandardNormal);
                        a * (xi * s)
                    })
                    .collect()
            }
        }
    }

    /// Draw one increment as a [`Field`].
    pub fn sample_increment(&self, dt: f64, rng: &mut PathRng) -> Field {
        let coeffs = self.sample_coeffs(dt, rng);
        let mut spectral = vec![Complex64::default(); self.grid.total_points()];
        for (&flat, &c) in self.flat.iter().zip(&coeffs) {
            spectral[flat] = c;
        }
        Field::from_spectral(&self.grid, spectral).expect("length by construction")
    }

    /// Add an increment (from [`NoiseOperator::sample_coeffs`]) to a spectral
    /// coefficient array.
    pub fn add_increment_spectral(&self, coeffs: &[Complex64], spectral: &mut [Complex64]) {
        for (&flat, &c) in self.flat.iter().zip(coeffs) {
            spectral[flat] += c;
        }
    }

    /// Add an increment to physical samples via the cached mode waves.
    pub fn add_increment_physical(&self, coeffs: &[Complex64], values: &mut [Complex64]) {
        for (wave, &c) in self.waves.iter().zip(coeffs) {
            for (v, w) in values.iter_mut().zip(wave) {
                *v += c * w;
            }
        }
    }
}

/// Build the noise operator from (mode, amplitude) entries; entries must be
/// nonempty, on valid grid modes, and mode-distinct.
pub fn build_noise(
    grid: &Arc<Grid>,
    entries: &[(Vec<i64>, Complex64)],
    convention: NoiseConvention,
) -> Result<NoiseOperator> {
    if entries.is_empty() {
        return Err(Error::Config(
            "noise: entry list is empty (omit the noise block entirely for Φ = 0)".into(),
        ));
    }
    let mut modes = Vec::with_capacity(entries.len());
    let mut flat = Vec::with_capacity(entries.len());
    let mut amps = Vec::with_capacity(entries.len());
    let mut hs_h_sq = 0.0;
    let mut hs_grad_sq = 0.0;
    for (j, a) in entries {
        let f = grid
            .mode_flat_index(j)
            .map_err(|e| Error::Config(format!("noise: {e}")))?;
        if flat.contains(&f) {
            return Err(Error::Config(format!("noise: duplicate mode {j:?}")));
        }
        let a_sq = a.norm_sqr();
        hs_h_sq += a_sq;
        hs_grad_sq += a_sq * grid.k_sq()[f];
        modes.push(j.clone());
        flat.push(f);
        amps.push(*a);
    }

    let inv_sqrt_v = 1.0 / grid.volume().sqrt();
    let n = grid.n();
    let d = grid.d();
    let waves = flat
        .iter()
        .map(|&mode_flat| {
            // Per-axis frequency digits of the mode, axis 0 most significant.
            let mut digits = [0usize; 3];
            let mut rem = mode_flat;
            for a in (0..d).rev() {
                digits[a] = rem % n;
                rem /= n;
            }
            (0..grid.total_points())
                .map(|sample| {
                    let mut rem = sample;
                    let mut phase_steps = 0usize;
                    for a in (0..d).rev() {
                        let m = rem % n;
                        rem /= n;
                        phase_steps += (digits[a] * m) % n;
                    }
                    let phase = 2.0 * std::f64::consts::PI * (phase_steps % n) as f64 / n as f64;
                    Complex64::new(0.0, phase).exp() * inv_sqrt_v
                })
                .collect()
        })
        .collect();

    Ok(NoiseOperator {
        grid: grid.clone(),
        modes,
        flat,
        amps,
        convention,
        hs_h_sq,
        hs_grad_sq,
        waves,
    })
}
