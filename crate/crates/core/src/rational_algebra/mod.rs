//! Exact univariate polynomials and rational functions in `x = β²`.

mod format;
mod polynomial;
mod ratfn;

pub use format::{from_plain, to_latex, to_plain};
pub use polynomial::Polynomial;
pub use ratfn::{Combine, RationalFunction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("rational function with a zero denominator")]
    ZeroDenominator,
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("evaluation at a pole (x = {at})")]
    Pole { at: String },
    #[error("cannot parse rational function from {0:?}")]
    Parse(String),
}
