//! Canonical forms of the time derivatives of differential entropy along the
//! Gaussian heat flow `Y_t = X + sqrt(t) Z`, sum-of-squares sign certificates
//! for them, and a Gaussian-mixture numerical oracle to cross-check both.

pub mod gauss_oracle;
pub mod ibp_reduce;
pub mod partitions;
pub mod sos_certify;
pub mod term_algebra;

pub use ibp_reduce::{entropy_derivative, is_canonical, reduce, ReduceError};
pub use term_algebra::{rat, Combination, DerivMonomial, Rational, TermError};
