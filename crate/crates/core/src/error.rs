use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside its admissible domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two bit strings that must describe the same array differ in length.
    #[error("length mismatch: expected {expected} pixels, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// The measured detection probability cannot be produced by any
    /// efficiency in [0, 1] at the given illumination.
    #[error("infeasible calibration: P1 = {p1} exceeds 1 - exp(-mu) = {limit} at mu = {mu}")]
    InfeasibleCalibration { p1: f64, mu: f64, limit: f64 },

    /// The model admits no solution for the requested quantity.
    #[error("infeasible model: {0}")]
    Infeasible(String),

    /// An exhaustive enumeration would exceed its size guard.
    #[error("resource guard exceeded: {0}")]
    Resource(String),

    /// A requested point falls outside a tabulated range.
    #[error("out of range: {0}")]
    Range(String),

    /// The extractor seed does not cover the Toeplitz matrix.
    #[error("seed too short: need {needed} bits, got {available}")]
    SeedTooShort { needed: usize, available: usize },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Failures while decoding one of the on-disk formats.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("truncated header")]
    TruncatedHeader,

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("pixel count mismatch: frames have {frames}, side info has {side}")]
    PixelMismatch { frames: u32, side: u32 },

    #[error("nonzero padding bit in frame {frame}")]
    Padding { frame: u64 },

    #[error("trailing bytes after payload")]
    TrailingBytes,

    #[error("line {line}: {reason}")]
    Table { line: usize, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
