use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// `H H^H` is too close to singular to invert; the caller should draw a
    /// fresh channel.
    #[error("ill-conditioned channel (reciprocal condition {rcond:e})")]
    IllConditioned { rcond: f64 },

    /// `u + v` is (numerically) zero so the transmit power cannot be
    /// normalized.
    #[error("degenerate normalization constant gamma = {gamma:e}")]
    DegenerateGamma { gamma: f64 },

    #[error("gave up after {attempts} channel redraws")]
    ResampleLimit { attempts: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
