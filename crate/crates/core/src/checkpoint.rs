//! Binary checkpoints: bit-exact save and resume of a trajectory state.
//!
//! Format (version 1; all multi-byte values little-endian):
//!
//! ```text
//!   offset  size          field
//!   0       4             magic "NLSE"
//!   4       4             version (u32) = 1
//!   8       4             d (u32)
//!   12      4·d           n per axis (u32 each; uniform in this build)
//!   ..      8             box length L (f64)
//!   ..      8             t (f64)
//!   ..      8             step (u64)
//!   ..      1             scheme (u8: 0 = lie, 1 = strang)
//!   ..      8             lambda (f64)
//!   ..      8             sigma (f64)
//!   ..      8             alpha (f64)
//!   ..      8             RNG word count (u64) = 7
//!   ..      8·7           RNG words: 4 key words, stream, word_pos lo, hi
//!   ..      16·n^d        samples: re, im (f64 each), row-major
//! ```
//!
//! The payload stores the exact in-memory doubles, so save → load reproduces
//! the field bitwise and the restored noise stream continues exactly where
//! the saved run stopped: a run split across a checkpoint is bit-identical to
//! the unbroken run.

use std::path::Path;

use num_complex::Complex64;

use crate::dynamics::{Scheme, SimParams, State};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Field};
use crate::rng::{PathRng, RngState};

const MAGIC: &[u8; 4] = b"NLSE";
const VERSION: u32 = 1;
const RNG_WORDS: u64 = 7;

/// Everything a checkpoint stores: the trajectory state plus the integrator
/// parameters it was produced under (echoed for cross-checking).
#[derive(Debug, Clone)]
pub struct CheckpointData {
    pub field: Field,
    pub t: f64,
    pub step: u64,
    pub rng: PathRng,
    pub scheme: Scheme,
    pub lambda: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl CheckpointData {
    /// Rehydrate a [`State`] that continues the saved trajectory.
    pub fn into_state(self) -> State {
        State::with_clock(self.field, self.t, self.step, self.rng)
    }
}

/// Serialize `state` (with the parameters of its run) to `path`.
pub fn save_checkpoint(state: &State, params: &SimParams, path: &Path) -> Result<()> {
    let grid = state.field.grid();
    let mut buf = Vec::with_capacity(96 + 16 * grid.total_points());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.d() as u32).to_le_bytes());
    for _ in 0..grid.d() {
        buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    }
    buf.extend_from_slice(&grid.len().to_le_bytes());
    buf.extend_from_slice(&state.t.to_le_bytes());
    buf.extend_from_slice(&state.step.to_le_bytes());
    buf.push(match params.scheme {
        Scheme::Lie => 0,
        Scheme::Strang => 1,
    });
    buf.extend_from_slice(&params.lambda.to_le_bytes());
    buf.extend_from_slice(&params.sigma.to_le_bytes());
    buf.extend_from_slice(&params.alpha.to_le_bytes());

    let rng = RngState::capture(&state.rng);
    buf.extend_from_slice(&RNG_WORDS.to_le_bytes());
    for chunk in rng.seed.chunks_exact(8) {
        buf.extend_from_slice(chunk);
    }
    buf.extend_from_slice(&rng.stream.to_le_bytes());
    buf.extend_from_slice(&(rng.word_pos as u64).to_le_bytes());
    buf.extend_from_slice(&((rng.word_pos >> 64) as u64).to_le_bytes());

    for v in state.field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }

    std::fs::write(path, &buf)
        .map_err(|e| Error::Checkpoint(format!("cannot write {}: {e}", path.display())))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "truncated file: needed {n} bytes for {what} at offset {}, \
                 file has {} bytes",
                self.pos,
                self.buf.len()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
}

/// Load a checkpoint. Bad magic, unsupported version, truncation, or
/// trailing bytes are explicit [`Error::Checkpoint`] failures.
pub fn load_checkpoint(path: &Path) -> Result<CheckpointData> {
    let buf = std::fs::read(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    let mut r = Reader { buf: &buf, pos: 0 };

    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {magic:?} (expected {MAGIC:?}); not a checkpoint file"
        )));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version} (this build reads version {VERSION})"
        )));
    }
    let d = r.u32("dimension")? as usize;
    if !(1..=3).contains(&d) {
        return Err(Error::Checkpoint(format!("invalid dimension {d}")));
    }
    let mut ns = Vec::with_capacity(d);
    for axis in 0..d {
        ns.push(r.u32(&format!("n[{axis}]"))? as usize);
    }
    if ns.iter().any(|&n| n != ns[0]) {
        return Err(Error::Checkpoint(format!(
            "non-uniform resolution {ns:?} is not supported by this build"
        )));
    }
    let n = ns[0];
    let len = r.f64("box length")?;
    let t = r.f64("time")?;
    let step = r.u64("step")?;
    let scheme = match r.u8("scheme")? {
        0 => Scheme::Lie,
        1 => Scheme::Strang,
        other => {
            return Err(Error::Checkpoint(format!("unknown scheme tag {other}")));
        }
    };
    let lambda = r.f64("lambda")?;
    let sigma = r.f64("sigma")?;
    let alpha = r.f64("alpha")?;

    let words = r.u64("rng word count")?;
    if words != RNG_WORDS {
        return Err(Error::Checkpoint(format!(
            "unexpected RNG word count {words} (expected {RNG_WORDS})"
        )));
    }
    let mut seed = [0u8; 32];
    for k in 0..4 {
        seed[8 * k..8 * (k + 1)].copy_from_slice(r.take(8, "rng key")?);
    }
    let stream = r.u64("rng stream")?;
    let lo = r.u64("rng position (low)")?;
    let hi = r.u64("rng position (high)")?;
    let rng = RngState {
        seed,
        stream,
        word_pos: (lo as u128) | ((hi as u128) << 64),
    }
    .restore();

    let grid = make_grid(d, n, len)
        .map_err(|e| Error::Checkpoint(format!("stored grid is invalid: {e}")))?;
    let total = grid.total_points();
    let mut values = Vec::with_capacity(total);
    for k in 0..total {
        let re = r.f64(&format!("sample {k} (re)"))?;
        let im = r.f64(&format!("sample {k} (im)"))?;
        values.push(Complex64::new(re, im));
    }
    if r.pos != buf.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after the payload",
            buf.len() - r.pos
        )));
    }
    let field = Field::from_values(&grid, values)
        .map_err(|e| Error::Checkpoint(format!("stored field is invalid: {e}")))?;

    Ok(CheckpointData {
        field,
        t,
        step,
        rng,
        scheme,
        lambda,
        sigma,
        alpha,
    })
}
