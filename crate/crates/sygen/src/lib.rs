//! Newsvendor optimization with power losses of a common degree.
//!
//! The classical newsvendor model penalizes shortage and excess linearly.
//! This crate generalizes both penalties to the same power `m` (the "loss
//! degree"): ordering `q` against random demand `x` costs
//! `c_s (x - q)^m` when demand exceeds the order and `c_e (q - x)^m`
//! otherwise. `m = 1` recovers the classical model.
//!
//! What is here:
//!
//! - [`demand`]: the two demand laws (uniform on `(0, b)`, exponential with
//!   mean `lambda`) with density, distribution function, quantile and
//!   seeded sampling.
//! - [`cost`]: realized and expected cost, an independent quadrature oracle
//!   for the closed forms, the alternating series driving the exponential
//!   first-order condition, and polynomial envelope bounds for its gap
//!   function.
//! - [`solver`]: optimal order quantities. Uniform demand has a closed form;
//!   exponential demand requires a transcendental root find.
//! - [`estimators`]: seven estimators of the optimal order quantity from
//!   demand data, including two that work from a single order statistic
//!   ("broken" samples).
//! - [`simulation`]: a deterministic, seedable Monte Carlo engine that
//!   measures estimator bias and mean squared error over a parameter grid
//!   and serializes the results to CSV.

pub mod cost;
pub mod demand;
pub mod estimators;
mod quad;
pub mod simulation;
pub mod solver;

pub use cost::CostParams;
pub use demand::DemandModel;
pub use estimators::{EstimatorKind, SampleData};
pub use simulation::{SimulationConfig, SimulationReport};
pub use solver::OptimalSolution;

/// Error type shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor received parameters that violate an invariant.
    InvalidParameter(String),
    /// An operation was called outside its domain (negative demand, rank
    /// out of range, probability outside `[0, 1)`, ...).
    Domain(String),
    /// Root bracketing exhausted its search range without a sign change.
    NoRoot(String),
    /// A numerical procedure failed to converge.
    Numeric(String),
    /// An estimating equation has no admissible solution for this sample.
    EstimationFailure(String),
    /// A bound was requested outside the hypotheses under which it holds.
    HypothesisViolation(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::NoRoot(msg) => write!(f, "no root found: {msg}"),
            Error::Numeric(msg) => write!(f, "numerical failure: {msg}"),
            Error::EstimationFailure(msg) => write!(f, "estimation failure: {msg}"),
            Error::HypothesisViolation(msg) => write!(f, "hypothesis violation: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
