//! C ABI for the stochastic damped nonlinear Schrödinger simulator.
//!
//! Every function is callable from plain C (see the generated
//! `include/sdnlse.h`). The conventions are:
//!
//! * **Opaque handles.** Grids, noise operators, and trajectory states are
//!   heap objects behind opaque pointers. Each `*_new` constructor writes the
//!   handle through an `out` pointer and every handle must eventually be
//!   released with the matching `*_free` (all `*_free` functions accept NULL).
//! * **Status codes.** Every fallible function returns [`SdnlseStatus`];
//!   `Ok` (0) means success and anything else means the out-parameters were
//!   left untouched. A human-readable description of the most recent failure
//!   on the calling thread is available via [`sdnlse_last_error_message`].
//! * **Panic safety.** Rust panics never unwind across the boundary: every
//!   entry point catches them and reports [`SdnlseStatus::Panic`].
//! * **Rational exponents.** Exact rationals cross the boundary as
//!   numerator/denominator pairs of 64-bit integers. For Lebesgue exponents a
//!   denominator of 0 encodes ∞; everywhere else the denominator must be
//!   nonzero.

// Validation guards are written as `!(x > bound && x.is_finite())` so that
// NaN falls into the rejecting branch; the negated comparison is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use num_rational::BigRational;
use sdnlse::analysis::exact_mean_mass;
use sdnlse::dynamics::{evolve, step, Scheme, SimParams, State};
use sdnlse::error::Error;
use sdnlse::exponents::{check_assumptions, is_admissible_pair, smoothing_exponent, Exponent};
use sdnlse::fields::gaussian_bump;
use sdnlse::grid::{gradient_norm_sq, lp_norm, Field, Grid};
use sdnlse::noise::{build_noise, HsSpace, NoiseConvention, NoiseOperator};
use sdnlse::observables::{energy, mass, v_norm_sq};
use sdnlse::output::version_string;
use sdnlse::rng::{derive_rng, StreamRole};

/// Result code of every fallible C-ABI call. `Ok` is 0; on any other value
/// the call's out-parameters are untouched and
/// [`sdnlse_last_error_message`] describes the failure.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdnlseStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A scalar argument was malformed (bad enum code, wrong buffer length,
    /// zero denominator, non-finite value, oversized stream index).
    InvalidArgument = 2,
    /// The arguments describe an invalid configuration (e.g. σ ≤ 0, a noise
    /// mode outside the grid, duplicate noise modes).
    Config = 3,
    /// The arguments are outside the mathematical domain of the query
    /// (e.g. an exponent query in a dimension other than 1, 2, or 3).
    Domain = 4,
    /// A trajectory left the resolvable regime (non-finite or huge modulus).
    BlowUp = 5,
    /// An input/output or serialization failure.
    Io = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Splitting scheme selector for [`SdnlseParams::scheme`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdnlseScheme {
    /// First-order Lie splitting.
    Lie = 0,
    /// Second-order Strang splitting (the default in the TOML configs).
    Strang = 1,
}

/// Noise quadrature convention selector (how a mode's complex amplitude is
/// split over independent real Gaussians).
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdnlseNoiseConvention {
    /// Two independent real Gaussians per mode (real and imaginary
    /// quadratures), each with variance dt/2. Default.
    TwoPerMode = 0,
    /// One complex Gaussian per mode of total variance dt.
    OnePerMode = 1,
}

/// Which squared Hilbert–Schmidt norm of the noise operator to report.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdnlseNoiseSpace {
    /// Into L²: the sum of squared mode amplitudes.
    L2 = 0,
    /// Into H¹: the L² part plus the gradient part.
    H1 = 1,
    /// The gradient part alone.
    Gradient = 2,
}

/// Verdict of the parameter-assumption gate, written by
/// [`sdnlse_check_assumptions`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdnlseVerdict {
    /// All assumptions hold.
    Admissible = 0,
    /// Assumptions hold but the run is outside the sup-norm regularity
    /// regime (3-d defocusing with large σ).
    AdmissibleWithFlag = 1,
    /// At least one assumption fails.
    Rejected = 2,
}

/// Simulation parameters (mirror of the native parameter set).
///
/// `scheme` takes [`SdnlseScheme`] values. `log_every` and `seed` exist for
/// parity with the native struct; the C stepping API reads observables on
/// demand and draws randomness from the state handle, so they only need to
/// be valid (`log_every` ≥ 1).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SdnlseParams {
    /// Damping rate λ ≥ 0.
    pub lambda: f64,
    /// Nonlinearity exponent σ > 0.
    pub sigma: f64,
    /// Nonlinearity sign: +1 focusing, −1 defocusing.
    pub alpha: f64,
    /// Time step, > 0.
    pub dt: f64,
    /// Absolute end time for [`sdnlse_evolve`], ≥ 0.
    pub t_final: f64,
    /// Splitting scheme: an [`SdnlseScheme`] value.
    pub scheme: i32,
    /// Logging stride of the native integrator; must be ≥ 1.
    pub log_every: u64,
    /// Master seed recorded alongside the native parameter set.
    pub seed: u64,
}

/// Opaque periodic-grid handle. Create with [`sdnlse_grid_new`], release
/// with [`sdnlse_grid_free`].
pub struct SdnlseGrid {
    inner: Arc<Grid>,
}

/// Opaque noise-operator handle. Create with [`sdnlse_noise_new`], release
/// with [`sdnlse_noise_free`].
pub struct SdnlseNoise {
    inner: NoiseOperator,
}

/// Opaque trajectory-state handle (field, clock, and the path's RNG).
/// Create with [`sdnlse_state_new`] or [`sdnlse_state_new_gaussian`],
/// release with [`sdnlse_state_free`].
pub struct SdnlseState {
    inner: State,
}

// ---------------------------------------------------------------------------
// Error reporting.
// ---------------------------------------------------------------------------

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_last_error(msg: &str) {
    LAST_ERROR.with(|slot| {
        let mut buf = slot.borrow_mut();
        buf.clear();
        buf.extend_from_slice(msg.as_bytes());
    });
}

fn fail(status: SdnlseStatus, msg: &str) -> SdnlseStatus {
    set_last_error(msg);
    status
}

fn fail_error(e: &Error) -> SdnlseStatus {
    let status = match e {
        Error::Config(_) => SdnlseStatus::Config,
        Error::Domain(_) => SdnlseStatus::Domain,
        Error::BlowUp { .. } => SdnlseStatus::BlowUp,
        Error::Checkpoint(_) | Error::Io(_) => SdnlseStatus::Io,
    };
    fail(status, &e.to_string())
}

fn panic_text(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic: (opaque payload)".to_string()
    }
}

/// Run a closure, converting any panic into [`SdnlseStatus::Panic`].
fn guarded<F: FnOnce() -> SdnlseStatus>(body: F) -> SdnlseStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => fail(SdnlseStatus::Panic, &panic_text(payload)),
    }
}

/// Copy the description of the calling thread's most recent failure into
/// `buf` (NUL-terminated, truncated to `cap` bytes including the NUL).
/// Returns the full message length in bytes, excluding the NUL; call with
/// `buf == NULL` or `cap == 0` to query the length alone. The message is
/// replaced by the next failing call on the same thread.
///
/// # Safety
/// `buf` must be NULL or valid for `cap` byte writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            // SAFETY: caller promises `buf` points to at least `cap` bytes.
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Version of the library as a static NUL-terminated string
/// (never NULL; do not free).
#[no_mangle]
pub extern "C" fn sdnlse_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| {
            CString::new(version_string()).unwrap_or_else(|_| CString::new("unknown").unwrap())
        })
        .as_ptr()
}

// ---------------------------------------------------------------------------
// Argument conversion helpers.
// ---------------------------------------------------------------------------

/// Largest stream index accepted by the deterministic RNG derivation.
const MAX_STREAM: u64 = (1 << 56) - 1;

fn rational(num: i64, den: i64, what: &str) -> Result<BigRational, SdnlseStatus> {
    if den == 0 {
        return Err(fail(
            SdnlseStatus::InvalidArgument,
            &format!("{what}: denominator must be nonzero"),
        ));
    }
    Ok(BigRational::new(num.into(), den.into()))
}

/// Lebesgue exponent from a (num, den) pair; den == 0 encodes ∞.
fn exponent(num: i64, den: i64) -> Exponent {
    if den == 0 {
        Exponent::Infinity
    } else {
        Exponent::Finite(BigRational::new(num.into(), den.into()))
    }
}

fn to_sim_params(p: &SdnlseParams) -> Result<SimParams, SdnlseStatus> {
    let scheme = match p.scheme {
        0 => Scheme::Lie,
        1 => Scheme::Strang,
        other => {
            return Err(fail(
                SdnlseStatus::InvalidArgument,
                &format!("params.scheme: expected 0 (Lie) or 1 (Strang), got {other}"),
            ))
        }
    };
    let params = SimParams {
        lambda: p.lambda,
        sigma: p.sigma,
        alpha: p.alpha,
        dt: p.dt,
        t_final: p.t_final,
        scheme,
        log_every: p.log_every,
        seed: p.seed,
    };
    params.validate().map_err(|e| fail_error(&e))?;
    Ok(params)
}

/// SAFETY: `ptr` must be NULL or valid for reads.
unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, SdnlseStatus> {
    ptr.as_ref().ok_or_else(|| {
        fail(
            SdnlseStatus::NullArgument,
            &format!("{what} must not be NULL"),
        )
    })
}

/// SAFETY: `ptr` must be NULL or valid for reads and writes.
unsafe fn deref_mut<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, SdnlseStatus> {
    ptr.as_mut().ok_or_else(|| {
        fail(
            SdnlseStatus::NullArgument,
            &format!("{what} must not be NULL"),
        )
    })
}

fn require_out<T>(ptr: *mut T, what: &str) -> Result<(), SdnlseStatus> {
    if ptr.is_null() {
        Err(fail(
            SdnlseStatus::NullArgument,
            &format!("{what} must not be NULL"),
        ))
    } else {
        Ok(())
    }
}

macro_rules! ffi_try {
    ($expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

// ---------------------------------------------------------------------------
// Grid.
// ---------------------------------------------------------------------------

/// Create a periodic grid: `d` ∈ {1, 2, 3} axes, `n` ≥ 2 points per axis,
/// box side length `len` > 0. Writes the handle to `*out`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_grid_new(
    d: usize,
    n: usize,
    len: f64,
    out: *mut *mut SdnlseGrid,
) -> SdnlseStatus {
    guarded(|| {
        ffi_try!(require_out(out, "out"));
        match Grid::new(d, n, len) {
            Ok(grid) => {
                unsafe { *out = Box::into_raw(Box::new(SdnlseGrid { inner: grid })) };
                SdnlseStatus::Ok
            }
            Err(e) => fail_error(&e),
        }
    })
}

/// Release a grid handle (NULL is a no-op).
///
/// # Safety
/// `grid` must be NULL or a pointer from [`sdnlse_grid_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_grid_free(grid: *mut SdnlseGrid) {
    let _ = catch_unwind(AssertUnwindSafe(|| {
        if !grid.is_null() {
            drop(unsafe { Box::from_raw(grid) });
        }
    }));
}

/// Number of axes of the grid.
///
/// # Safety
/// `grid` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_grid_dimension(
    grid: *const SdnlseGrid,
    out: *mut usize,
) -> SdnlseStatus {
    guarded(|| {
        let g = ffi_try!(unsafe { deref(grid, "grid") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        *out = g.inner.d();
        SdnlseStatus::Ok
    })
}

/// Points per axis of the grid.
///
/// # Safety
/// `grid` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_grid_points_per_axis(
    grid: *const SdnlseGrid,
    out: *mut usize,
) -> SdnlseStatus {
    guarded(|| {
        let g = ffi_try!(unsafe { deref(grid, "grid") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        *out = g.inner.n();
        SdnlseStatus::Ok
    })
}

/// Total number of sample points (n^d); the length unit for field buffers.
///
/// # Safety
/// `grid` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_grid_total_points(
    grid: *const SdnlseGrid,
    out: *mut usize,
) -> SdnlseStatus {
    guarded(|| {
        let g = ffi_try!(unsafe { deref(grid, "grid") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        *out = g.inner.total_points();
        SdnlseStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Noise operator.
// ---------------------------------------------------------------------------

/// Create a noise operator from `n_entries` forced Fourier modes.
///
/// `modes` holds `n_entries × d` integers, row-major (one `d`-vector of mode
/// indices per entry); `amps_re` holds the real parts of the amplitudes and
/// `amps_im` (NULL for all-real amplitudes) the imaginary parts.
/// `convention` takes [`SdnlseNoiseConvention`] values. Writes the handle to
/// `*out`.
///
/// # Safety
/// `grid` must be a live handle; `modes` and `amps_re` must hold
/// `n_entries × d` and `n_entries` readable elements; `amps_im` must be NULL
/// or hold `n_entries` readable elements; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_noise_new(
    grid: *const SdnlseGrid,
    modes: *const i64,
    amps_re: *const f64,
    amps_im: *const f64,
    n_entries: usize,
    convention: i32,
    out: *mut *mut SdnlseNoise,
) -> SdnlseStatus {
    guarded(|| {
        let g = ffi_try!(unsafe { deref(grid, "grid") });
        ffi_try!(require_out(out, "out"));
        if modes.is_null() || amps_re.is_null() {
            return fail(
                SdnlseStatus::NullArgument,
                "modes and amps_re must not be NULL",
            );
        }
        if n_entries == 0 {
            return fail(SdnlseStatus::InvalidArgument, "n_entries must be ≥ 1");
        }
        let convention = match convention {
            0 => NoiseConvention::TwoPerMode,
            1 => NoiseConvention::OnePerMode,
            other => {
                return fail(
                    SdnlseStatus::InvalidArgument,
                    &format!(
                        "convention: expected 0 (two per mode) or 1 (one per mode), got {other}"
                    ),
                )
            }
        };
        let d = g.inner.d();
        let mode_rows = unsafe { std::slice::from_raw_parts(modes, n_entries * d) };
        let re = unsafe { std::slice::from_raw_parts(amps_re, n_entries) };
        let im: Option<&[f64]> =
            (!amps_im.is_null()).then(|| unsafe { std::slice::from_raw_parts(amps_im, n_entries) });
        let entries: Vec<(Vec<i64>, Complex64)> = (0..n_entries)
            .map(|i| {
                let mode = mode_rows[i * d..(i + 1) * d].to_vec();
                let amp = Complex64::new(re[i], im.map_or(0.0, |im| im[i]));
                (mode, amp)
            })
            .collect();
        match build_noise(&g.inner, &entries, convention) {
            Ok(op) => {
                unsafe { *out = Box::into_raw(Box::new(SdnlseNoise { inner: op })) };
                SdnlseStatus::Ok
            }
            Err(e) => fail_error(&e),
        }
    })
}

/// Release a noise handle (NULL is a no-op).
///
/// # Safety
/// `noise` must be NULL or a pointer from [`sdnlse_noise_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_noise_free(noise: *mut SdnlseNoise) {
    let _ = catch_unwind(AssertUnwindSafe(|| {
        if !noise.is_null() {
            drop(unsafe { Box::from_raw(noise) });
        }
    }));
}

/// Squared Hilbert–Schmidt norm of the operator into the space selected by
/// `space` (an [`SdnlseNoiseSpace`] value).
///
/// # Safety
/// `noise` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_noise_norm_sq(
    noise: *const SdnlseNoise,
    space: i32,
    out: *mut f64,
) -> SdnlseStatus {
    guarded(|| {
        let op = ffi_try!(unsafe { deref(noise, "noise") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        let space = match space {
            0 => HsSpace::H,
            1 => HsSpace::V,
            2 => HsSpace::GradH,
            other => {
                return fail(
                    SdnlseStatus::InvalidArgument,
                    &format!("space: expected 0 (L²), 1 (H¹), or 2 (gradient), got {other}"),
                )
            }
        };
        *out = op.inner.hs_norm_sq(space);
        SdnlseStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Trajectory state.
// ---------------------------------------------------------------------------

fn new_state_handle(
    field: Field,
    seed: u64,
    stream: u64,
    out: *mut *mut SdnlseState,
) -> SdnlseStatus {
    if stream > MAX_STREAM {
        return fail(
            SdnlseStatus::InvalidArgument,
            &format!("stream: must be < 2^56, got {stream}"),
        );
    }
    let rng = derive_rng(seed, StreamRole::Path, stream);
    let state = State::new(field, rng);
    unsafe { *out = Box::into_raw(Box::new(SdnlseState { inner: state })) };
    SdnlseStatus::Ok
}

/// Create a trajectory state at t = 0.
///
/// `re`/`im` supply the initial samples in grid order: both NULL gives the
/// zero field (`values_len` must then be 0 or `total_points`); `im` alone
/// may be NULL for a real field; when a buffer is present, `values_len`
/// must equal `total_points`. The state's noise realization is drawn from
/// the deterministic stream (`seed`, `stream`); `stream` must be < 2^56.
///
/// # Safety
/// `grid` must be a live handle; non-NULL `re`/`im` must hold `values_len`
/// readable elements; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_new(
    grid: *const SdnlseGrid,
    re: *const f64,
    im: *const f64,
    values_len: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut SdnlseState,
) -> SdnlseStatus {
    guarded(|| {
        let g = ffi_try!(unsafe { deref(grid, "grid") });
        ffi_try!(require_out(out, "out"));
        let total = g.inner.total_points();
        let field = if re.is_null() && im.is_null() {
            if values_len != 0 && values_len != total {
                return fail(
                    SdnlseStatus::InvalidArgument,
                    &format!(
                        "values_len: expected 0 or {total} for a zero field, got {values_len}"
                    ),
                );
            }
            Field::zero(&g.inner)
        } else {
            if values_len != total {
                return fail(
                    SdnlseStatus::InvalidArgument,
                    &format!("values_len: expected {total} (= total points), got {values_len}"),
                );
            }
            let re = (!re.is_null()).then(|| unsafe { std::slice::from_raw_parts(re, total) });
            let im = (!im.is_null()).then(|| unsafe { std::slice::from_raw_parts(im, total) });
            let values: Vec<Complex64> = (0..total)
                .map(|i| Complex64::new(re.map_or(0.0, |re| re[i]), im.map_or(0.0, |im| im[i])))
                .collect();
            match Field::from_values(&g.inner, values) {
                Ok(f) => f,
                Err(e) => return fail_error(&e),
            }
        };
        new_state_handle(field, seed, stream, out)
    })
}

/// Create a trajectory state at t = 0 whose field is a centered Gaussian
/// bump of the given width and peak amplitude. `stream` must be < 2^56.
///
/// # Safety
/// `grid` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_new_gaussian(
    grid: *const SdnlseGrid,
    width: f64,
    amplitude: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut SdnlseState,
) -> SdnlseStatus {
    guarded(|| {
        let g = ffi_try!(unsafe { deref(grid, "grid") });
        ffi_try!(require_out(out, "out"));
        if !(width > 0.0 && width.is_finite()) {
            return fail(
                SdnlseStatus::InvalidArgument,
                &format!("width: must be > 0 and finite, got {width}"),
            );
        }
        if !amplitude.is_finite() {
            return fail(
                SdnlseStatus::InvalidArgument,
                &format!("amplitude: must be finite, got {amplitude}"),
            );
        }
        let field = gaussian_bump(&g.inner, width, amplitude);
        new_state_handle(field, seed, stream, out)
    })
}

/// Duplicate a state handle, including its clock and RNG position. The
/// clone continues with the identical noise realization.
///
/// # Safety
/// `state` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_clone(
    state: *const SdnlseState,
    out: *mut *mut SdnlseState,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref(state, "state") });
        ffi_try!(require_out(out, "out"));
        unsafe {
            *out = Box::into_raw(Box::new(SdnlseState {
                inner: s.inner.clone(),
            }))
        };
        SdnlseStatus::Ok
    })
}

/// Release a state handle (NULL is a no-op).
///
/// # Safety
/// `state` must be NULL or a pointer from a state constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_free(state: *mut SdnlseState) {
    let _ = catch_unwind(AssertUnwindSafe(|| {
        if !state.is_null() {
            drop(unsafe { Box::from_raw(state) });
        }
    }));
}

/// Current time of the state's clock.
///
/// # Safety
/// `state` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_time(
    state: *const SdnlseState,
    out: *mut f64,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref(state, "state") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        *out = s.inner.t;
        SdnlseStatus::Ok
    })
}

/// Number of steps taken so far.
///
/// # Safety
/// `state` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_step_count(
    state: *const SdnlseState,
    out: *mut u64,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref(state, "state") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        *out = s.inner.step;
        SdnlseStatus::Ok
    })
}

/// Copy the field samples out in grid order. Each of `out_re`/`out_im` may
/// be NULL to skip that part (not both); a non-NULL buffer receives
/// `values_len` doubles, and `values_len` must equal `total_points`.
///
/// # Safety
/// `state` must be a live handle; non-NULL `out_re`/`out_im` must be valid
/// for `values_len` writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_values(
    state: *const SdnlseState,
    out_re: *mut f64,
    out_im: *mut f64,
    values_len: usize,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref(state, "state") });
        if out_re.is_null() && out_im.is_null() {
            return fail(
                SdnlseStatus::NullArgument,
                "out_re and out_im are both NULL",
            );
        }
        let values = s.inner.field.values();
        if values_len != values.len() {
            return fail(
                SdnlseStatus::InvalidArgument,
                &format!(
                    "values_len: expected {} (= total points), got {values_len}",
                    values.len()
                ),
            );
        }
        for (i, v) in values.iter().enumerate() {
            unsafe {
                if !out_re.is_null() {
                    *out_re.add(i) = v.re;
                }
                if !out_im.is_null() {
                    *out_im.add(i) = v.im;
                }
            }
        }
        SdnlseStatus::Ok
    })
}

/// Squared L² norm of the field (the mass observable).
///
/// # Safety
/// `state` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_mass(
    state: *const SdnlseState,
    out: *mut f64,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref(state, "state") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        *out = mass(&s.inner.field);
        SdnlseStatus::Ok
    })
}

/// Hamiltonian energy of the field for nonlinearity (σ, α).
///
/// # Safety
/// `state` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_energy(
    state: *const SdnlseState,
    sigma: f64,
    alpha: f64,
    out: *mut f64,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref(state, "state") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        if !(sigma > 0.0 && sigma.is_finite()) {
            return fail(
                SdnlseStatus::InvalidArgument,
                &format!("sigma: must be > 0 and finite, got {sigma}"),
            );
        }
        if alpha != 1.0 && alpha != -1.0 {
            return fail(
                SdnlseStatus::InvalidArgument,
                &format!("alpha: must be ±1, got {alpha}"),
            );
        }
        *out = energy(&s.inner.field, sigma, alpha);
        SdnlseStatus::Ok
    })
}

/// Squared H¹ norm of the field (mass plus squared gradient norm).
///
/// # Safety
/// `state` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_h1_norm_sq(
    state: *const SdnlseState,
    out: *mut f64,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref(state, "state") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        *out = v_norm_sq(&s.inner.field);
        SdnlseStatus::Ok
    })
}

/// Squared L² norm of the field's gradient.
///
/// # Safety
/// `state` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_gradient_norm_sq(
    state: *const SdnlseState,
    out: *mut f64,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref(state, "state") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        *out = gradient_norm_sq(&s.inner.field);
        SdnlseStatus::Ok
    })
}

/// Sup norm (largest sample modulus) of the field.
///
/// # Safety
/// `state` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_state_sup_norm(
    state: *const SdnlseState,
    out: *mut f64,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref(state, "state") });
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        *out = lp_norm(&s.inner.field, f64::INFINITY);
        SdnlseStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Integration.
// ---------------------------------------------------------------------------

/// Advance the state by one time step of `params.dt`, drawing the noise
/// increment (if `noise` is non-NULL) from the state's own RNG.
///
/// # Safety
/// `state` and `params` must be live; `noise` must be NULL or a live handle
/// on the same grid.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_step(
    state: *mut SdnlseState,
    params: *const SdnlseParams,
    noise: *const SdnlseNoise,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref_mut(state, "state") });
        let p = ffi_try!(unsafe { deref(params, "params") });
        let sim = ffi_try!(to_sim_params(p));
        let op = unsafe { noise.as_ref() }.map(|n| &n.inner);
        match step(&mut s.inner, &sim, op) {
            Ok(()) => SdnlseStatus::Ok,
            Err(e) => fail_error(&e),
        }
    })
}

/// Integrate the state forward to the absolute time `params.t_final`
/// (rounded to the nearest whole number of steps from the state's current
/// clock; a `t_final` at or before the clock is a no-op). On blow-up the
/// state keeps the last values it reached and the call reports
/// [`SdnlseStatus::BlowUp`].
///
/// # Safety
/// `state` and `params` must be live; `noise` must be NULL or a live handle
/// on the same grid.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_evolve(
    state: *mut SdnlseState,
    params: *const SdnlseParams,
    noise: *const SdnlseNoise,
) -> SdnlseStatus {
    guarded(|| {
        let s = ffi_try!(unsafe { deref_mut(state, "state") });
        let p = ffi_try!(unsafe { deref(params, "params") });
        let sim = ffi_try!(to_sim_params(p));
        let op = unsafe { noise.as_ref() }.map(|n| &n.inner);
        match evolve(&mut s.inner, &sim, op, &[]) {
            Ok(_) => SdnlseStatus::Ok,
            Err(e) => fail_error(&e.error),
        }
    })
}

// ---------------------------------------------------------------------------
// Closed forms and exponent queries.
// ---------------------------------------------------------------------------

/// Exact mean mass at time `t` for initial mass `m0`, damping `lambda`, and
/// the given noise operator (NULL for no forcing):
/// `m0·e^{−2λt} + ‖Φ‖²·(1 − e^{−2λt})/(2λ)`, with the λ → 0 limit taken
/// exactly.
///
/// # Safety
/// `noise` must be NULL or a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_exact_mean_mass(
    t: f64,
    m0: f64,
    lambda: f64,
    noise: *const SdnlseNoise,
    out: *mut f64,
) -> SdnlseStatus {
    guarded(|| {
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        let op = unsafe { noise.as_ref() }.map(|n| &n.inner);
        match exact_mean_mass(t, m0, lambda, op) {
            Ok(v) => {
                *out = v;
                SdnlseStatus::Ok
            }
            Err(e) => fail_error(&e),
        }
    })
}

/// The integrability exponent used by the fixed-point smoothing estimate in
/// dimension `d` for nonlinearity exponent σ = `sigma_num`/`sigma_den`
/// (denominator nonzero). Writes the result as an exact reduced fraction.
///
/// # Safety
/// `out_num` and `out_den` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_smoothing_exponent(
    d: usize,
    sigma_num: i64,
    sigma_den: i64,
    out_num: *mut i64,
    out_den: *mut i64,
) -> SdnlseStatus {
    guarded(|| {
        ffi_try!(require_out(out_num, "out_num"));
        ffi_try!(require_out(out_den, "out_den"));
        let sigma = ffi_try!(rational(sigma_num, sigma_den, "sigma"));
        let q = match smoothing_exponent(d, &sigma) {
            Ok(q) => q,
            Err(e) => return fail_error(&e),
        };
        let (Some(num), Some(den)) = (i64::try_from(q.numer()).ok(), i64::try_from(q.denom()).ok())
        else {
            return fail(
                SdnlseStatus::Domain,
                &format!("exponent {q} does not fit in a 64-bit fraction"),
            );
        };
        unsafe {
            *out_num = num;
            *out_den = den;
        }
        SdnlseStatus::Ok
    })
}

/// Whether (p, r) = (`p_num`/`p_den`, `r_num`/`r_den`) is an admissible
/// space-time exponent pair in dimension `d`. A denominator of 0 encodes ∞.
/// Writes 1 (admissible) or 0 to `*out`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_pair_admissible(
    d: usize,
    p_num: i64,
    p_den: i64,
    r_num: i64,
    r_den: i64,
    out: *mut i32,
) -> SdnlseStatus {
    guarded(|| {
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        if !(1..=3).contains(&d) {
            return fail(
                SdnlseStatus::Domain,
                &format!("d: must be 1, 2, or 3, got {d}"),
            );
        }
        let p = exponent(p_num, p_den);
        let r = exponent(r_num, r_den);
        *out = i32::from(is_admissible_pair(d, &p, &r));
        SdnlseStatus::Ok
    })
}

/// Run the parameter-assumption gate on (d, σ = `sigma_num`/`sigma_den`,
/// α). Writes an [`SdnlseVerdict`] value to `*out`; a rejection is still
/// [`SdnlseStatus::Ok`] (the query itself succeeded) — only malformed
/// arguments produce a non-zero status.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdnlse_check_assumptions(
    d: usize,
    sigma_num: i64,
    sigma_den: i64,
    alpha: f64,
    out: *mut i32,
) -> SdnlseStatus {
    guarded(|| {
        let out = ffi_try!(unsafe { deref_mut(out, "out") });
        let sigma = ffi_try!(rational(sigma_num, sigma_den, "sigma"));
        match check_assumptions(d, &sigma, alpha) {
            Ok(verdict) => {
                *out = match verdict {
                    sdnlse::exponents::GateVerdict::Admissible => SdnlseVerdict::Admissible,
                    sdnlse::exponents::GateVerdict::AdmissibleWithFlag { .. } => {
                        SdnlseVerdict::AdmissibleWithFlag
                    }
                    sdnlse::exponents::GateVerdict::Rejected { .. } => SdnlseVerdict::Rejected,
                } as i32;
                SdnlseStatus::Ok
            }
            Err(e) => fail_error(&e),
        }
    })
}
