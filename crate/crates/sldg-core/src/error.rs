//! Error type shared by all solver operations.

use core::fmt;

/// Errors raised by grid construction, storage access and advection.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Quadrature node count outside the supported range 1..=64.
    QuadratureOrder(usize),
    /// Cell or coefficient index outside the grid.
    IndexOutOfRange { index: usize, len: usize },
    /// A non-finite value was passed where a finite one is required.
    NonFinite,
    /// A value does not fit the 32-bit storage class.
    NarrowOverflow(f64),
    /// Two grids that must share a domain, cell count or order do not.
    GridMismatch(&'static str),
    /// A slice argument has the wrong length.
    LengthMismatch { expected: usize, got: usize },
    /// An argument is outside its documented range.
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::QuadratureOrder(n) => {
                write!(f, "quadrature node count {n} outside supported range 1..=64")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::NonFinite => write!(f, "non-finite value"),
            Error::NarrowOverflow(v) => {
                write!(f, "value {v:e} does not fit 32-bit storage")
            }
            Error::GridMismatch(what) => write!(f, "grid mismatch: {what}"),
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
