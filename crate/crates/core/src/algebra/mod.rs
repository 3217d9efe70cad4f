//! Scalars, multi-indices and sparse polynomials.

mod multi_index;
mod polynomial;
mod qsqrt2;
pub mod text;

pub use multi_index::{binomial, count_monomials, monomials_up_to, MultiIndex};
pub use polynomial::{Polynomial, Scalar};
pub use qsqrt2::QSqrt2;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("number of variables must be at least 1")]
    InvalidDimension,
    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("parse error: {0}")]
    Parse(String),
}
