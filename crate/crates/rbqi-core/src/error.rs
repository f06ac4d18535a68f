//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image data: {0}")]
    CorruptData(String),

    #[error("wrong color space: expected {expected}, got {found}")]
    WrongColorSpace {
        expected: &'static str,
        found: &'static str,
    },

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("image of min dimension {min_dim} too small for {levels} pyramid levels (coarsest level must stay >= 24 px)")]
    TooSmallForLevels { levels: usize, min_dim: usize },

    #[error("bad window width {0}: must be odd and no wider than the image")]
    BadWindow(usize),

    #[error("image {got_w}x{got_h} too small: need at least {needed} px per side")]
    TooSmall {
        needed: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("gaussian kernel radius {radius} exceeds half the smaller image dimension ({min_dim})")]
    KernelTooLarge { radius: usize, min_dim: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value in input")]
    NonFiniteInput,

    #[error("parse error at line {line}: {msg}")]
    ParseError { line: u64, msg: String },

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("mos {value} out of range [1,5] at line {line}")]
    MosOutOfRange { line: u64, value: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("unknown sweep parameter: {0} (sweepable parameters are nhood and L)")]
    UnknownParameter(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
