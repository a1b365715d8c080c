//! Field constructors: deterministic initial conditions and random smooth
//! fields for corpora and ensemble starts.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::grid::{Field, Grid};
use crate::rng::PathRng;

/// Real Gaussian bump `amplitude·exp(-|x|²/(2·width²))` centered at the
/// origin of the box.
pub fn gaussian_bump(grid: &Arc<Grid>, width: f64, amplitude: f64) -> Field {
    assert!(width > 0.0, "gaussian_bump: width must be positive");
    let xs = grid.coords();
    let n = grid.n();
    let d = grid.d();
    let mut values = Vec::with_capacity(grid.total_points());
    for flat in 0..grid.total_points() {
        let mut rem = flat;
        let mut r_sq = 0.0;
        for _ in 0..d {
            let x = xs[rem % n];
            rem /= n;
            r_sq += x * x;
        }
        values.push(Complex64::new(
            amplitude * (-r_sq / (2.0 * width * width)).exp(),
            0.0,
        ));
    }
    Field::from_values(grid, values).expect("length by construction")
}

/// Field with the given spectral coefficients on the listed modes, zero
/// elsewhere. A coefficient `a` at mode k is the wave `a·e^{ik·x}/√V`, so the
/// field's L² norm is √(Σ|a|²).
pub fn from_modes(grid: &Arc<Grid>, modes: &[(Vec<i64>, Complex64)]) -> Result<Field> {
    let mut coeffs = vec![Complex64::default(); grid.total_points()];
    for (j, a) in modes {
        coeffs[grid.mode_flat_index(j)?] = *a;
    }
    Field::from_spectral(grid, coeffs)
}

/// Spectral profile of [`random_smooth`]: independent complex Gaussian
/// coefficients damped by `exp(-|k|²/(2·corr_wavenumber²))`.
#[derive(Clone, Copy, Debug)]
pub struct SmoothFieldSpec {
    /// Spectral width k_c; smaller values give smoother fields.
    pub corr_wavenumber: f64,
    /// Target L² norm after rescaling (skipped if 0).
    pub h_norm: f64,
    /// Zero out the mean (the k = 0 coefficient).
    pub zero_mean: bool,
}

impl Default for SmoothFieldSpec {
    fn default() -> Self {
        SmoothFieldSpec {
            corr_wavenumber: 2.0,
            h_norm: 1.0,
            zero_mean: false,
        }
    }
}

/// Random smooth field: coefficient at every mode drawn as
/// `profile(|k|)·(ξ₁+iξ₂)/√2` with ξ ~ N(0,1), then rescaled to the target
/// L² norm. Draw order is the flat spectral index, so a given rng stream
/// yields a reproducible field.
pub fn random_smooth(grid: &Arc<Grid>, spec: &SmoothFieldSpec, rng: &mut PathRng) -> Field {
    assert!(
        spec.corr_wavenumber > 0.0,
        "random_smooth: corr_wavenumber must be positive"
    );
    let two_kc_sq = 2.0 * spec.corr_wavenumber * spec.corr_wavenumber;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut coeffs = Vec::with_capacity(grid.total_points());
    let mut sum_sq = 0.0;
    for &k_sq in grid.k_sq() {
        let xi1: f64 = rng.sample(StandardNormal);
        let xi2: f64 = rng.sample(StandardNormal);
        let profile = (-k_sq / two_kc_sq).exp();
        let c = Complex64::new(xi1, xi2) * (profile * inv_sqrt2);
        sum_sq += c.norm_sqr();
        coeffs.push(c);
    }
    if spec.zero_mean {
        sum_sq -= coeffs[0].norm_sqr();
        coeffs[0] = Complex64::default();
    }
    if spec.h_norm > 0.0 && sum_sq > 0.0 {
        let scale = spec.h_norm / sum_sq.sqrt();
        for c in coeffs.iter_mut() {
            *c *= scale;
        }
    }
    Field::from_spectral(grid, coeffs).expect("length by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{lp_norm, make_grid};
    use crate::rng::{derive_rng, StreamRole};

    #[test]
    fn bump_peak_and_reality() {
        let g = make_grid(2, 32, 10.0).unwrap();
        let u = gaussian_bump(&g, 1.5, 0.7);
        let peak = u.values().iter().map(|v| v.re).fold(f64::MIN, f64::max);
        assert!((peak - 0.7).abs() < 1e-12); // x = 0 is a sample point
        assert!(u.values().iter().all(|v| v.im == 0.0 && v.re > 0.0));
    }

    #[test]
    fn mode_field_mass_is_coefficient_sum() {
        let g = make_grid(2, 16, 3.0).unwrap();
        let u = from_modes(
            &g,
            &[
                (vec![1, 0], Complex64::new(0.3, 0.0)),
                (vec![0, -2], Complex64::new(0.0, 0.4)),
            ],
        )
        .unwrap();
        let mass = lp_norm(&u, 2.0).powi(2);
        assert!((mass - 0.25).abs() < 1e-12);
    }

    #[test]
    fn random_smooth_is_normalized_and_reproducible() {
        let g = make_grid(2, 16, 5.0).unwrap();
        let spec = SmoothFieldSpec {
            corr_wavenumber: 1.5,
            h_norm: 0.8,
            zero_mean: true,
        };
        let mut r1 = derive_rng(3, StreamRole::InitialCondition, 5);
        let mut r2 = derive_rng(3, StreamRole::InitialCondition, 5);
        let u = random_smooth(&g, &spec, &mut r1);
        let v = random_smooth(&g, &spec, &mut r2);
        assert_eq!(u.values(), v.values());
        assert!((lp_norm(&u, 2.0) - 0.8).abs() < 1e-12);
        let mean: Complex64 = u.values().iter().sum::<Complex64>() / u.values().len() as f64;
        assert!(mean.norm() < 1e-13);
    }
}
