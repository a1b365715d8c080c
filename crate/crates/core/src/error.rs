use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user-supplied configuration (config file, CLI flags, mode lists).
    #[error("configuration error: {0}")]
    Config(String),

    /// Mathematically invalid argument for an otherwise valid setup
    /// (e.g. λ ≤ 0 where a positive damping rate is required).
    #[error("domain error: {0}")]
    Domain(String),

    /// A trajectory left the resolvable regime: some sample exceeded the
    /// modulus threshold or became non-finite.
    #[error("blow-up at t = {t:.6e} (step {step}): max |u| = {sup_modulus:.3e}")]
    BlowUp { t: f64, step: u64, sup_modulus: f64 },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
