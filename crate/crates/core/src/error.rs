use std::path::PathBuf;

use thiserror::Error;

use crate::KernelVariant;

#[derive(Debug, Error)]
pub enum ConvError {
    #[error("data length {len} does not match shape {height}x{width}")]
    DataLength {
        height: usize,
        width: usize,
        len: usize,
    },

    #[error("dimensions must be positive, got {height}x{width}")]
    EmptyShape { height: usize, width: usize },

    #[error("filter {kh}x{kw} does not fit input {in_h}x{in_w}")]
    FilterTooLarge {
        in_h: usize,
        in_w: usize,
        kh: usize,
        kw: usize,
    },

    #[error("filter width {kw} exceeds the generic slide limit {max}; use the compound kernel")]
    FilterTooWide { kw: usize, max: usize },

    #[error("{variant} requires a {expected}x{expected} filter, got {kh}x{kw}")]
    WrongFilterSize {
        variant: KernelVariant,
        expected: usize,
        kh: usize,
        kw: usize,
    },

    #[error("{variant} cannot run a {kh}x{kw} filter with {lanes} lanes")]
    UnsupportedVariant {
        variant: KernelVariant,
        kh: usize,
        kw: usize,
        lanes: usize,
    },

    #[error("expected a single-row tensor, got height {0}")]
    NotARow(usize),

    #[error("slide offset {offset} out of range 0..={lanes}")]
    OffsetOutOfRange { offset: usize, lanes: usize },

    #[error("unsupported lane count {0}; expected one of 4, 8, 16, 32")]
    InvalidLanes(usize),

    #[error("window width {k} out of range 1..={len}")]
    WindowOutOfRange { k: usize, len: usize },

    #[error("matrix inner dimensions disagree: {a_rows}x{a_cols} * {b_rows}x{b_cols}")]
    DimensionMismatch {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },

    #[error("cannot allocate {elems} elements")]
    Allocation { elems: usize },
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid benchmark config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("malformed record in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error(transparent)]
    Conv(#[from] ConvError),
}

pub type Result<T, E = ConvError> = std::result::Result<T, E>;
