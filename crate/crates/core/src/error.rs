use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::field::Space;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid construction failed (dimension, odd or too small sample counts, bad lengths).
    InvalidGrid(String),
    /// Operands disagree on grid, layout or component count.
    Shape(String),
    /// A field was given in the wrong space.
    Space { expected: Space, found: Space },
    /// The operation is only defined in another spatial dimension.
    UnsupportedDimension { expected: usize, found: usize },
    /// A pointwise matrix could not be inverted.
    Singular { point: usize, context: &'static str },
    /// A matrix that must be positive definite is not; `eigenvalue` is the worst one seen.
    NotPositiveDefinite { point: usize, eigenvalue: f64 },
    /// An input violates a differential constraint (e.g. a non-solenoidal velocity).
    Constraint { what: &'static str, residual: f64 },
    /// A candidate null-T operator failed the sampled identity Γ₁TΓ₁ = 0.
    InvalidNullT { k: Vec<f64>, defect: f64 },
    /// The restricted inverse on the range of Γ₁(k) does not exist.
    RestrictedSingular { k: Vec<f64> },
    /// The symbol D(ik) has no range at a nonzero wave vector.
    DegenerateSymbol { k: Vec<f64> },
    /// An input for which a formula is indeterminate.
    Degenerate(&'static str),
    /// Invalid argument not covered above.
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Space { expected, found } => {
                write!(f, "field in {found:?} space, expected {expected:?}")
            }
            Error::UnsupportedDimension { expected, found } => {
                write!(f, "operation requires dimension {expected}, got {found}")
            }
            Error::Singular { point, context } => {
                write!(f, "singular {context} at grid point {point}")
            }
            Error::NotPositiveDefinite { point, eigenvalue } => write!(
                f,
                "matrix not positive definite at grid point {point} (worst eigenvalue {eigenvalue:e})"
            ),
            Error::Constraint { what, residual } => {
                write!(f, "constraint violated: {what} (relative residual {residual:e})")
            }
            Error::InvalidNullT { k, defect } => {
                write!(f, "not a null-T operator: |Γ₁TΓ₁| = {defect:e} at k = {k:?}")
            }
            Error::RestrictedSingular { k } => {
                write!(f, "Γ₁L₀Γ₁ is singular on the range of Γ₁ at k = {k:?}")
            }
            Error::DegenerateSymbol { k } => write!(f, "D(ik) vanishes at k = {k:?}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
