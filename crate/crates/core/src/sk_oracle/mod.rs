//! Numerical ground truth for the expansion.
//!
//! Everything here is computed without the symbolic engine: exact Gibbs sums
//! over `2^N` configurations, Gauss–Hermite quadrature over the couplings for
//! `N <= 4`, and seeded disorder Monte Carlo for larger `N`.

mod gibbs;
mod montecarlo;
mod quadrature;

pub use gibbs::{
    gibbs_exact, gibbs_exact_capped, log_weights, pairwise_sum, DisorderSample, GibbsState,
    DEFAULT_MAX_SPINS,
};
pub use montecarlo::{disorder_sample, nu0_r_minus_sq, nu_r2_mc, EstimateWithError, OracleRecord};
pub use quadrature::{
    derivative_fd, derivative_rhs, derivative_terms, nu_t_quadrature, Observable, Overlap,
    QuadratureGrid, MAX_NODES, MAX_POINTS, MAX_QUADRATURE_SPINS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
