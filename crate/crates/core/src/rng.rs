//! Deterministic stream derivation for parallel Monte Carlo.
//!
//! Every stochastic consumer gets its own counter-based stream derived from
//! `(master seed, role, index)`: the master seed selects the ChaCha key and
//! the (role, index) pair selects the stream. Streams are statistically
//! independent and never shared across workers, so ensembles are reproducible
//! for any worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type PathRng = ChaCha12Rng;

/// Role tag entering the stream id (high byte); the index fills the low bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamRole {
    /// Single-trajectory simulate runs.
    Main = 0,
    /// Monte Carlo ensemble paths.
    Path = 1,
    /// Shared noise of one synchronization pair.
    SyncNoise = 2,
    /// Random initial conditions (one per draw).
    InitialCondition = 3,
    /// Gagliardo–Nirenberg optimizer restarts.
    GnRestart = 4,
    /// Verification corpora: fit half.
    FitCorpus = 5,
    /// Verification corpora: hold-out half.
    HoldoutCorpus = 6,
}

pub fn derive_rng(master_seed: u64, role: StreamRole, index: u64) -> PathRng {
    assert!(index < 1 << 56, "stream index too large");
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(((role as u64) << 56) | index);
    rng
}

/// Serializable RNG position: enough to resume the exact stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &PathRng) -> RngState {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> PathRng {
        let mut rng = ChaCha12Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}
