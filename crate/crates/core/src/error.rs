use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("evaluation at the pseudomode pole: |lambda + omega_c| = {distance:e} rad/s")]
    PolePseudomode { lambda: Complex64, distance: f64 },

    #[error("no Markovian exceptional point: kappa ({kappa:e}) must exceed gamma ({gamma:e})")]
    NoMarkovianEp { kappa: f64, gamma: f64 },

    #[error("degenerate denominator g(lambda)^2 + g_c^2 at lambda = {lambda}")]
    DegenerateDenominator { lambda: Complex64 },

    #[error("exceptional-point search did not converge after {restarts} restarts (best residual {best_residual:e})")]
    NoConvergence { restarts: usize, best_residual: f64 },

    #[error("exceptional-point search converged only to non-physical roots ({found} found)")]
    NonPhysicalEp { found: usize },

    #[error("order-two certificate failed: |p| = {p:e}, |p'| = {dp:e}, |p''| = {ddp:e}")]
    OrderCheckFailed { p: f64, dp: f64, ddp: f64 },

    #[error("singular response denominator at omega = {omega:e} rad/s (|D| = {magnitude:e})")]
    SingularDenominator { omega: f64, magnitude: f64 },

    #[error("time step {dt:e} s is too large; use dt <= {max_dt:e} s")]
    StepTooLarge { dt: f64, max_dt: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),

    #[error("matrix dimension {0} is not supported (expected 2 or 3)")]
    UnsupportedDimension(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
