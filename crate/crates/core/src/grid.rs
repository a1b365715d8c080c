//! Periodic-box spectral discretization and norms.
//!
//! The box [-L/2, L/2)^d is sampled on n points per axis (row-major, axis 0
//! slowest). All spectral quantities use one fixed unitary-style convention,
//! with V = L^d the box volume and N = n^d the sample count:
//!
//! ```text
//!   û_k = (√V / N) · Σ_x u(x) e^{-ik·(x - x₀)}        (forward)
//!   u(x) = (1 / √V) · Σ_k û_k e^{+ik·(x - x₀)}        (inverse)
//! ```
//!
//! where x₀ = -L/2 is the first sample and k = 2πj/L per axis with j in FFT
//! ordering (0, 1, …, n/2, -n/2+1, …, -1). Consequences used throughout:
//!
//! * Parseval is exact: Σ_x |u(x)|²·cellvol = Σ_k |û_k|², i.e. the quadrature
//!   L² norm equals the spectral ℓ² norm.
//! * A unit coefficient at mode k is the plane wave e^{ik·x}/√V of unit L²
//!   norm; the physical wave e^{ik·x} has coefficient √V.
//! * Coefficients are resolution-independent: the same coefficient array on a
//!   refined grid represents the same trigonometric polynomial.
//!
//! Norms are quadrature norms: ‖u‖_p = (Σ|u|^p·cellvol)^{1/p}, with p = ∞ the
//! max over samples (an underestimate of the true sup; see [`linf_padded`]).
//! H^{s,p} applies the multiplier (1+|k|²)^{s/2} in spectral space and then
//! takes the L^p quadrature norm; for p = 2 this reduces to the exact
//! spectral sum.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Immutable spectral grid: geometry, wavevector tables and transform plans.
///
/// Construct via [`make_grid`] or [`Grid::new`]; share across threads with
/// `Arc` (all methods take `&self`).
pub struct Grid {
    d: usize,
    n: usize,
    len: f64,
    wavenumbers: Vec<f64>,
    k_sq: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("d", &self.d)
            .field("n", &self.n)
            .field("len", &self.len)
            .finish()
    }
}

/// Scratch buffers for in-place transforms; one per worker, reusable.
#[derive(Clone)]
pub struct FftWork {
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl fmt::Debug for FftWork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftWork")
            .field("line_len", &self.line.len())
            .finish_non_exhaustive()
    }
}

impl Grid {
    pub fn new(d: usize, n: usize, len: f64) -> Result<Arc<Grid>> {
        if !(1..=3).contains(&d) {
            return Err(Error::Config(format!(
                "grid.d: must be 1, 2 or 3 (got {d})"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid.n: must be a power of two ≥ 8 (got {n})"
            )));
        }
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::Config(format!(
                "grid.L: must be positive (got {len})"
            )));
        }

        let mut wavenumbers = Vec::with_capacity(n);
        for j in 0..n {
            let f = if j <= n / 2 {
                j as i64
            } else {
                j as i64 - n as i64
            };
            wavenumbers.push(2.0 * std::f64::consts::PI * f as f64 / len);
        }

        let total = n.pow(d as u32);
        let mut k_sq = vec![0.0; total];
        for (flat, ks) in k_sq.iter_mut().enumerate() {
            let mut rem = flat;
            let mut sum = 0.0;
            for _ in 0..d {
                let j = rem % n;
                rem /= n;
                sum += wavenumbers[j] * wavenumbers[j];
            }
            *ks = sum;
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft(n, FftDirection::Forward);
        let inverse = planner.plan_fft(n, FftDirection::Inverse);

        Ok(Arc::new(Grid {
            d,
            n,
            len,
            wavenumbers,
            k_sq,
            forward,
            inverse,
        }))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Box side length L.
    pub fn len(&self) -> f64 {
        self.len
    }

    /// Total sample count N = n^d.
    pub fn total_points(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Box volume V = L^d.
    pub fn volume(&self) -> f64 {
        self.len.powi(self.d as i32)
    }

    /// Quadrature cell volume (L/n)^d.
    pub fn cell_volume(&self) -> f64 {
        (self.len / self.n as f64).powi(self.d as i32)
    }

    /// Per-axis wavenumbers k_j = 2πj/L in FFT ordering.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// |k|² per flat sample index.
    pub fn k_sq(&self) -> &[f64] {
        &self.k_sq
    }

    /// Per-axis sample coordinates x_j = -L/2 + j·L/n.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| -self.len / 2.0 + j as f64 * self.len / self.n as f64)
            .collect()
    }

    /// True if `j` is a representable signed frequency multi-index: one entry
    /// per axis with |j_a| ≤ n/2 (−n/2 aliases the Nyquist row +n/2).
    pub fn is_valid_mode(&self, j: &[i64]) -> bool {
        j.len() == self.d && j.iter().all(|&ja| ja.unsigned_abs() as usize <= self.n / 2)
    }

    /// Flat index of the spectral bin for a signed frequency multi-index.
    pub fn mode_flat_index(&self, j: &[i64]) -> Result<usize> {
        if !self.is_valid_mode(j) {
            return Err(Error::Config(format!(
                "mode {:?}: need {} entries with |j| ≤ {}",
                j,
                self.d,
                self.n / 2
            )));
        }
        let n = self.n as i64;
        let mut flat = 0usize;
        for &ja in j {
            flat = flat * self.n + ja.rem_euclid(n) as usize;
        }
        Ok(flat)
    }

    /// Signed frequency multi-index of a flat spectral bin (inverse of
    /// [`Grid::mode_flat_index`] up to Nyquist aliasing).
    pub fn mode_of_flat_index(&self, flat: usize) -> Vec<i64> {
        let mut rem = flat;
        let mut out = vec![0i64; self.d];
        for a in (0..self.d).rev() {
            let j = rem % self.n;
            rem /= self.n;
            out[a] = if j <= self.n / 2 {
                j as i64
            } else {
                j as i64 - self.n as i64
            };
        }
        out
    }

    pub fn make_work(&self) -> FftWork {
        let scratch_len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        FftWork {
            line: vec![Complex64::default(); self.n],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    fn transform_axes(&self, data: &mut [Complex64], work: &mut FftWork, fft: &dyn Fft<f64>) {
        debug_assert_eq!(data.len(), self.total_points());
        let n = self.n;
        for axis in 0..self.d {
            let stride = n.pow((self.d - 1 - axis) as u32);
            let block = stride * n;
            let mut base = 0;
            while base < data.len() {
                for inner in 0..stride {
                    let start = base + inner;
                    for j in 0..n {
                        work.line[j] = data[start + j * stride];
                    }
                    fft.process_with_scratch(&mut work.line, &mut work.scratch);
                    for j in 0..n {
                        data[start + j * stride] = work.line[j];
                    }
                }
                base += block;
            }
        }
    }

    /// Physical samples → spectral coefficients, in place.
    pub fn forward_inplace(&self, data: &mut [Complex64], work: &mut FftWork) {
        self.transform_axes(data, work, self.forward.as_ref());
        let scale = self.volume().sqrt() / self.total_points() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Spectral coefficients → physical samples, in place.
    pub fn inverse_inplace(&self, data: &mut [Complex64], work: &mut FftWork) {
        self.transform_axes(data, work, self.inverse.as_ref());
        let scale = 1.0 / self.volume().sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Construct a periodic spectral grid (d ∈ {1,2,3}, n a power of two ≥ 8,
/// L > 0).
pub fn make_grid(d: usize, n: usize, len: f64) -> Result<Arc<Grid>> {
    Grid::new(d, n, len)
}

/// Complex field sampled on a [`Grid`] (physical representation, row-major).
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zero(grid: &Arc<Grid>) -> Field {
        Field {
            grid: grid.clone(),
            values: vec![Complex64::default(); grid.total_points()],
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<Complex64>) -> Result<Field> {
        if values.len() != grid.total_points() {
            return Err(Error::Config(format!(
                "field length {} does not match grid ({} points)",
                values.len(),
                grid.total_points()
            )));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    /// Build a field from spectral coefficients (consumes the array).
    pub fn from_spectral(grid: &Arc<Grid>, mut coeffs: Vec<Complex64>) -> Result<Field> {
        if coeffs.len() != grid.total_points() {
            return Err(Error::Config(format!(
                "coefficient length {} does not match grid ({} points)",
                coeffs.len(),
                grid.total_points()
            )));
        }
        let mut work = grid.make_work();
        grid.inverse_inplace(&mut coeffs, &mut work);
        Ok(Field {
            grid: grid.clone(),
            values: coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Spectral coefficients of the field (allocates).
    pub fn to_spectral(&self) -> Vec<Complex64> {
        let mut coeffs = self.values.clone();
        let mut work = self.grid.make_work();
        self.grid.forward_inplace(&mut coeffs, &mut work);
        coeffs
    }

    pub fn max_modulus(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm_sqr())
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Quadrature L^p norm for p ∈ [1, ∞]; p = ∞ is the max sample modulus.
pub fn lp_norm(u: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm: p must be in [1, ∞] (got {p})");
    if p.is_infinite() {
        return u.max_modulus();
    }
    let cell = u.grid.cell_volume();
    if p == 2.0 {
        let sum: f64 = u.values.iter().map(|v| v.norm_sqr()).sum();
        return (sum * cell).sqrt();
    }
    let half_p = p / 2.0;
    let sum: f64 = u.values.iter().map(|v| v.norm_sqr().powf(half_p)).sum();
    (sum * cell).powf(1.0 / p)
}

/// H^{s,p} norm via the spectral multiplier (1+|k|²)^{s/2}; s ≥ 0.
///
/// For p = 2 the value is the exact spectral sum; otherwise the multiplied
/// coefficients are transformed back and measured in L^p quadrature.
pub fn sobolev_norm(u: &Field, s: f64, p: f64) -> f64 {
    assert!(s >= 0.0, "sobolev_norm: s must be ≥ 0 (got {s})");
    assert!(p >= 1.0, "sobolev_norm: p must be in [1, ∞] (got {p})");
    let mut coeffs = u.to_spectral();
    let k_sq = u.grid.k_sq();
    if p == 2.0 {
        let sum: f64 = coeffs
            .iter()
            .zip(k_sq)
            .map(|(c, &ks)| (1.0 + ks).powf(s) * c.norm_sqr())
            .sum();
        return sum.sqrt();
    }
    for (c, &ks) in coeffs.iter_mut().zip(k_sq) {
        *c *= (1.0 + ks).powf(s / 2.0);
    }
    let g = Field::from_spectral(&u.grid, coeffs).expect("coefficient length invariant");
    lp_norm(&g, p)
}

/// ‖∇u‖²_{L²} = Σ_k |k|² |û_k|².
pub fn gradient_norm_sq(u: &Field) -> f64 {
    let coeffs = u.to_spectral();
    coeffs
        .iter()
        .zip(u.grid.k_sq())
        .map(|(c, &ks)| ks * c.norm_sqr())
        .sum()
}

/// Max modulus of the trigonometric interpolant sampled on a `factor`× finer
/// grid (spectral zero padding). Sharper sup-norm surrogate than the grid max;
/// diagnostic only.
pub fn linf_padded(u: &Field, factor: usize) -> Result<f64> {
    if factor <= 1 {
        return Ok(u.max_modulus());
    }
    let g = u.grid();
    let fine = Grid::new(g.d(), g.n() * factor, g.len())?;
    let coarse = u.to_spectral();
    let mut coeffs = vec![Complex64::default(); fine.total_points()];
    for (flat, &c) in coarse.iter().enumerate() {
        let j = g.mode_of_flat_index(flat);
        coeffs[fine.mode_flat_index(&j)?] = c;
    }
    Ok(Field::from_spectral(&fine, coeffs)?.max_modulus())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_field(grid: &Arc<Grid>, seed: u64) -> Field {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let values = (0..grid.total_points())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        Field::from_values(grid, values).unwrap()
    }

    /// Plane wave a·e^{ik·x} for signed frequency j (coefficient a·√V).
    fn plane_wave(grid: &Arc<Grid>, j: &[i64], a: Complex64) -> Field {
        let mut coeffs = vec![Complex64::default(); grid.total_points()];
        coeffs[grid.mode_flat_index(j).unwrap()] = a * grid.volume().sqrt();
        Field::from_spectral(grid, coeffs).unwrap()
    }

    #[test]
    fn wavenumbers_unit_box() {
        let g = make_grid(1, 8, 2.0 * PI).unwrap();
        let got: Vec<i64> = g.wavenumbers().iter().map(|k| k.round() as i64).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        for (j, k) in g.wavenumbers().iter().enumerate() {
            assert!((k - got[j] as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn wavevector_table_symmetric() {
        let g = make_grid(2, 16, 3.0).unwrap();
        for ja in -8i64..=8 {
            for jb in -8i64..=8 {
                let flat = g.mode_flat_index(&[ja, jb]).unwrap();
                let neg = g.mode_flat_index(&[-ja, -jb]).unwrap();
                assert!((g.k_sq()[flat] - g.k_sq()[neg]).abs() < 1e-12);
            }
        }
        // Nyquist row maps to itself.
        assert_eq!(
            g.mode_flat_index(&[8, 0]).unwrap(),
            g.mode_flat_index(&[-8, 0]).unwrap()
        );
    }

    #[test]
    fn grid_constructor_rejects_bad_input() {
        assert!(make_grid(0, 8, 1.0).is_err());
        assert!(make_grid(4, 8, 1.0).is_err());
        assert!(make_grid(1, 12, 1.0).is_err());
        assert!(make_grid(1, 4, 1.0).is_err());
        assert!(make_grid(1, 8, 0.0).is_err());
        assert!(make_grid(1, 8, -2.0).is_err());
    }

    #[test]
    fn cell_volume_and_point_count() {
        let g = make_grid(2, 64, 20.0).unwrap();
        assert_eq!(g.total_points(), 4096);
        assert!((g.cell_volume() - (20.0 / 64.0) * (20.0 / 64.0)).abs() < 1e-14);
    }

    #[test]
    fn max_ksq_matches_closed_form() {
        // Oracle: enumerate the |k|² table; cross-check the closed form
        // 3·(2π·(n/2)/L)² for d=3, n=16, L=10.
        let g = make_grid(3, 16, 10.0).unwrap();
        let max = g.k_sq().iter().cloned().fold(0.0, f64::max);
        let closed = 3.0 * (2.0 * PI * 8.0 / 10.0).powi(2);
        assert!((max - closed).abs() / closed < 1e-12);
    }

    #[test]
    fn transform_round_trip() {
        for (d, n) in [(1usize, 32usize), (2, 16), (3, 8)] {
            let g = make_grid(d, n, 7.3).unwrap();
            let u = random_field(&g, 42 + d as u64);
            let back = Field::from_spectral(&g, u.to_spectral()).unwrap();
            let num: f64 = u
                .values()
                .iter()
                .zip(back.values())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let den: f64 = u.values().iter().map(|v| v.norm_sqr()).sum();
            assert!((num / den).sqrt() < 1e-12);
        }
    }

    #[test]
    fn parseval_random_fields() {
        let g = make_grid(2, 16, 4.2).unwrap();
        for seed in 0..100 {
            let u = random_field(&g, seed);
            let l2_sq = lp_norm(&u, 2.0).powi(2);
            let spec_sq: f64 = u.to_spectral().iter().map(|c| c.norm_sqr()).sum();
            assert!((l2_sq - spec_sq).abs() / l2_sq < 1e-10);
        }
    }

    #[test]
    fn lp_norm_constant_field() {
        let g = make_grid(2, 8, 3.0).unwrap();
        let c = Complex64::new(0.3, -0.4); // |c| = 0.5
        let u = Field::from_values(&g, vec![c; g.total_points()]).unwrap();
        let vol = g.volume();
        for p in [1.0, 2.0, 4.0] {
            assert!((lp_norm(&u, p) - 0.5 * vol.powf(1.0 / p)).abs() < 1e-12);
        }
        assert!((lp_norm(&u, f64::INFINITY) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_plane_wave_any_p() {
        let g = make_grid(2, 16, 5.0).unwrap();
        let u = plane_wave(&g, &[1, -2], Complex64::new(1.0, 0.0));
        for v in u.values() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        for p in [1.0, 2.0, 3.5, 7.0] {
            assert!((lp_norm(&u, p) - g.volume().powf(1.0 / p)).abs() < 1e-10);
        }
    }

    #[test]
    fn lp4_matches_double_resolution_direct_sum() {
        // Oracle: evaluate the two-mode trig polynomial directly on a 2×
        // refined grid (index-based mode sum, no FFT) and quadrature there.
        let (n, len) = (32usize, 5.5f64);
        let g = make_grid(2, n, len).unwrap();
        let modes: [([i64; 2], Complex64); 2] = [
            ([1, 0], Complex64::new(0.7, 0.2)),
            ([-2, 1], Complex64::new(-0.3, 0.5)),
        ];
        let mut coeffs = vec![Complex64::default(); g.total_points()];
        for (j, a) in &modes {
            coeffs[g.mode_flat_index(j).unwrap()] = *a;
        }
        let u = Field::from_spectral(&g, coeffs).unwrap();

        let nf = 2 * n;
        let sqrt_v = g.volume().sqrt();
        let mut sum4 = 0.0;
        for m0 in 0..nf {
            for m1 in 0..nf {
                let mut val = Complex64::default();
                for (j, a) in &modes {
                    let phase =
                        2.0 * PI * (j[0] as f64 * m0 as f64 + j[1] as f64 * m1 as f64) / nf as f64;
                    val += a * Complex64::new(0.0, phase).exp();
                }
                val /= sqrt_v;
                sum4 += val.norm_sqr() * val.norm_sqr();
            }
        }
        let cell_fine = (len / nf as f64).powi(2);
        let oracle = (sum4 * cell_fine).powf(0.25);
        let got = lp_norm(&u, 4.0);
        assert!(
            (got - oracle).abs() / oracle < 1e-8,
            "got {got}, oracle {oracle}"
        );
    }

    #[test]
    fn sobolev_single_mode_s1_p2() {
        let g = make_grid(2, 16, 5.0).unwrap();
        let j = [2i64, -1];
        let u = plane_wave(&g, &j, Complex64::new(1.0, 0.0));
        let k_sq = g.k_sq()[g.mode_flat_index(&j).unwrap()];
        let expect = (1.0 + k_sq).sqrt() * g.volume().sqrt();
        assert!((sobolev_norm(&u, 1.0, 2.0) - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn sobolev_two_mode_multiplier_oracle() {
        // Oracle: apply (1+|k|²)^{1/2} to the two coefficients by hand,
        // evaluate the mode sum directly, and quadrature |·|^{4/3}.
        let (n, len) = (16usize, 4.0f64);
        let g = make_grid(2, n, len).unwrap();
        let modes: [([i64; 2], Complex64); 2] = [
            ([1, 2], Complex64::new(0.4, -0.1)),
            ([-3, 0], Complex64::new(0.2, 0.6)),
        ];
        let mut coeffs = vec![Complex64::default(); g.total_points()];
        for (j, a) in &modes {
            coeffs[g.mode_flat_index(j).unwrap()] = *a;
        }
        let u = Field::from_spectral(&g, coeffs).unwrap();

        let p = 4.0 / 3.0;
        let sqrt_v = g.volume().sqrt();
        let two_pi = 2.0 * PI;
        let mut sum = 0.0;
        for m0 in 0..n {
            for m1 in 0..n {
                let mut val = Complex64::default();
                for (j, a) in &modes {
                    let k_sq =
                        (two_pi * j[0] as f64 / len).powi(2) + (two_pi * j[1] as f64 / len).powi(2);
                    let w = (1.0 + k_sq).sqrt();
                    let phase =
                        two_pi * (j[0] as f64 * m0 as f64 + j[1] as f64 * m1 as f64) / n as f64;
                    val += w * a * Complex64::new(0.0, phase).exp();
                }
                val /= sqrt_v;
                sum += val.norm().powf(p);
            }
        }
        let oracle = (sum * g.cell_volume()).powf(1.0 / p);
        let got = sobolev_norm(&u, 1.0, p);
        assert!(
            (got - oracle).abs() / oracle < 1e-10,
            "got {got}, oracle {oracle}"
        );
    }

    #[test]
    fn sobolev_s0_equals_lp() {
        let g = make_grid(2, 16, 3.3).unwrap();
        let u = random_field(&g, 7);
        for p in [2.0, 4.0 / 3.0, 4.0] {
            let a = sobolev_norm(&u, 0.0, p);
            let b = lp_norm(&u, p);
            assert!((a - b).abs() / b < 1e-10);
        }
    }

    #[test]
    fn sobolev_monotone_in_s() {
        let g = make_grid(2, 16, 3.3).unwrap();
        let u = random_field(&g, 11);
        let mut prev = 0.0;
        for s in [0.0, 0.5, 1.0, 1.7, 2.0] {
            let v = sobolev_norm(&u, s, 2.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn gradient_norm_trivial_cases() {
        let g = make_grid(2, 16, 5.0).unwrap();
        let c = Field::from_values(&g, vec![Complex64::new(0.7, 0.1); g.total_points()]).unwrap();
        assert!(gradient_norm_sq(&c).abs() < 1e-20);

        let j = [1i64, 1];
        let a = 0.8;
        let u = plane_wave(&g, &j, Complex64::new(a, 0.0));
        let k_sq = g.k_sq()[g.mode_flat_index(&j).unwrap()];
        let expect = k_sq * a * a * g.volume();
        assert!((gradient_norm_sq(&u) - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn gradient_norm_matches_finite_differences() {
        // Oracle: 4th-order central differences of the sampled bump, periodic
        // wrap, quadrature of |∇u|².
        let (n, len) = (128usize, 20.0f64);
        let g = make_grid(2, n, len).unwrap();
        let xs = g.coords();
        let (w, amp) = (2.0, 1.3);
        let mut values = Vec::with_capacity(g.total_points());
        for i0 in 0..n {
            for i1 in 0..n {
                let r_sq = xs[i0] * xs[i0] + xs[i1] * xs[i1];
                values.push(Complex64::new(amp * (-r_sq / (2.0 * w * w)).exp(), 0.0));
            }
        }
        let u = Field::from_values(&g, values).unwrap();

        let h = len / n as f64;
        let idx = |i0: usize, i1: usize| i0 * n + i1;
        let v = u.values();
        let mut grad_sq_sum = 0.0;
        for i0 in 0..n {
            for i1 in 0..n {
                let stencil = |vm2: Complex64, vm1: Complex64, vp1: Complex64, vp2: Complex64| {
                    (-vp2 + 8.0 * vp1 - 8.0 * vm1 + vm2) / (12.0 * h)
                };
                let d0 = stencil(
                    v[idx((i0 + n - 2) % n, i1)],
                    v[idx((i0 + n - 1) % n, i1)],
                    v[idx((i0 + 1) % n, i1)],
                    v[idx((i0 + 2) % n, i1)],
                );
                let d1 = stencil(
                    v[idx(i0, (i1 + n - 2) % n)],
                    v[idx(i0, (i1 + n - 1) % n)],
                    v[idx(i0, (i1 + 1) % n)],
                    v[idx(i0, (i1 + 2) % n)],
                );
                grad_sq_sum += d0.norm_sqr() + d1.norm_sqr();
            }
        }
        let oracle = grad_sq_sum * g.cell_volume();
        let got = gradient_norm_sq(&u);
        assert!(
            (got - oracle).abs() / oracle < 1e-4,
            "got {got}, oracle {oracle}"
        );
    }

    #[test]
    fn linf_dominates_scaled_lp() {
        let g = make_grid(2, 16, 2.5).unwrap();
        let vol = g.volume();
        for seed in 0..20 {
            let u = random_field(&g, 100 + seed);
            let linf = lp_norm(&u, f64::INFINITY);
            for p in [1.0, 2.0, 3.0, 6.0] {
                assert!(linf >= lp_norm(&u, p) / vol.powf(1.0 / p) - 1e-12);
            }
        }
    }

    #[test]
    fn mode_index_round_trip_and_validation() {
        let g = make_grid(3, 8, 1.0).unwrap();
        for j0 in -3i64..=4 {
            for j1 in -3i64..=4 {
                for j2 in -3i64..=4 {
                    let j = [j0, j1, j2];
                    let flat = g.mode_flat_index(&j).unwrap();
                    assert_eq!(g.mode_of_flat_index(flat), j.to_vec());
                }
            }
        }
        assert!(g.mode_flat_index(&[5, 0, 0]).is_err());
        assert!(g.mode_flat_index(&[0, 0]).is_err());
        assert!(!g.is_valid_mode(&[0, 0, -5]));
    }

    #[test]
    fn padded_linf_refines_grid_max() {
        // Single off-phase harmonic: the true sup lies between samples.
        let g = make_grid(1, 8, 2.0 * PI).unwrap();
        let xs = g.coords();
        let values: Vec<Complex64> = xs
            .iter()
            .map(|&x| Complex64::new((x + 0.3).cos(), 0.0))
            .collect();
        let u = Field::from_values(&g, values).unwrap();
        let coarse = u.max_modulus();
        let refined = linf_padded(&u, 4).unwrap();
        assert!(coarse < 1.0 - 1e-3);
        assert!(refined > coarse);
        assert!(refined <= 1.0 + 1e-9);
    }
}
