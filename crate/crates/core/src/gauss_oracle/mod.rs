//! Numerical oracle on Gaussian mixtures: the density of `X + sqrt(t) Z` in
//! closed form, quadrature of entropy, Fisher information and canonical
//! integrands, and finite differences in `t`.

mod finite_diff;
mod functionals;
mod mixture;
mod quadrature;
mod scan;
mod wt;

use thiserror::Error;

pub use finite_diff::{
    central_weights, default_step, fd_entropy_deriv, stencil_radius, EntropySamples, FdEstimate,
};
pub use functionals::{entropy, fisher, functional, functionals, normalization, ABS_TOL};
pub use mixture::{Component, GaussianMixture, PointEval};
pub use quadrature::{integrate, integrate_many, legendre_rule, Estimate, Neumaier};
pub use scan::{
    default_bimodal_grid, expected_sign, linear_grid, log_grid, scan_conjectures, ScanResult,
    ScanRow, ScanSummary, SecondDifference, Tolerances, Verdict, ASSERTED_ORDER, CSV_HEADER,
};
pub use wt::{default_wt_grid, wt_checks, wt_step, WtReport, WtRow};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("time must be positive, got {0}")]
    NegativeTime(f64),
    #[error("derivative of order {0} requested at t = 0")]
    ZeroTimeDerivative(usize),
    #[error("quadrature did not converge: achieved error {achieved:.3e} against tolerance {tolerance:.1e}")]
    Quadrature { achieved: f64, tolerance: f64 },
    #[error("step {step} too large for an order-{order} stencil at t = {t}")]
    StepTooLarge { t: f64, step: f64, order: u32 },
    #[error("derivative order must be positive, got {0}")]
    InvalidOrder(u32),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("symbolic stage failed: {0}")]
    Symbolic(String),
}
