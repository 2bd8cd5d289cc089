//! Exact 1/N expansion of the second moment of the overlap in the
//! Sherrington–Kirkpatrick model at high temperature (`β < 1`).
//!
//! * [`rational_algebra`]: exact polynomials and rational functions in `x = β²`.
//! * [`sequences`]: replica-pair sequences, the derivative sets `C_{ℓ,m}`,
//!   their weights `ρ` and parity.
//! * [`lambda_engine`]: the memoized coefficient recursion and the assembly
//!   of `c_j(β)` in `ν(R²₁₂) = 1/N + Σ_j c_j(β)/N^j`.
//! * [`sk_oracle`]: exact Gibbs enumeration, Gauss–Hermite quadrature and
//!   disorder Monte Carlo used as independent numerical ground truth.
//! * [`cli`]: the command-line front end.

pub mod budget;
pub mod cli;
pub mod lambda_engine;
pub mod rational_algebra;
pub mod scalar;
pub mod sequences;
pub mod sk_oracle;

use num_rational::BigRational;

/// Polynomial in `x = β²` with arbitrary-precision rational coefficients.
pub type QPoly = rational_algebra::Polynomial<BigRational>;
/// Rational function in `x = β²` with arbitrary-precision coefficients.
pub type QRatFn = rational_algebra::RationalFunction<BigRational>;
/// Gibbs state computed in double precision.
pub type GibbsState64 = sk_oracle::GibbsState<f64>;
/// Disorder sample in double precision.
pub type DisorderSample64 = sk_oracle::DisorderSample<f64>;
