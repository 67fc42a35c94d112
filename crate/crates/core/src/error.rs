use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("append requires a bit length that is a multiple of 32, found {bit_len}")]
    UnalignedAppend { bit_len: u64 },

    #[error("bitmap lengths differ: {left} vs {right} bits")]
    LengthMismatch { left: u64, right: u64 },

    #[error("row lengths differ: {left} vs {right}")]
    RowLengthMismatch { left: usize, right: usize },

    #[error("invalid compressed bitmap: {0}")]
    InvalidEncoding(String),

    #[error("{cardinality} values do not fit in {k}-of-{n} codes")]
    CardinalityExceeded { cardinality: usize, k: u32, n: u32 },

    #[error("value {value:?} is not in the dictionary of column {column:?}")]
    UnknownValue { column: String, value: String },

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("gray ordering needs a dictionary for every sort column")]
    MissingDictionaries,

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },

    #[error("column {column} value {value:?} is absent from the histogram")]
    NotInHistogram { column: usize, value: String },

    #[error("bitmap {id} out of range for column {column:?} ({count} bitmaps)")]
    BitmapOutOfRange { column: String, id: u32, count: u32 },

    #[error("corrupt index header: {0}")]
    CorruptHeader(String),

    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u8),

    #[error("index file truncated: need {needed} bytes, file has {actual}")]
    Truncated { needed: u64, actual: u64 },

    #[error("corrupt histogram: {0}")]
    CorruptHistogram(String),

    #[error("query syntax error at byte {pos}: {msg}")]
    QuerySyntax { pos: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
