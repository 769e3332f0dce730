//! Best approximations in simultaneous Diophantine approximation and the
//! lattice counting function that tracks them along the diagonal flow.
//!
//! The crate is organised bottom-up:
//!
//! * [`norms`]: exact norm values and shell enumeration of integer vectors.
//! * [`bestapprox`]: exact enumeration of best approximations and the
//!   one-dimensional continued-fraction fast path.
//! * [`lattice`]: unimodular lattices `a_t u(θ) Z^{m+n}`, box enumeration, the
//!   counting function `f` and the `φ_ε` / `Φ_ε` sums.
//! * [`orbit`]: Birkhoff series of `f`, shell-by-shell correspondence with best
//!   approximations, and autocovariance estimates.
//! * [`stats`]: estimators and tests used by the experiments.
//! * [`runner`]: configuration, seeded sampling, experiments and CSV output.

pub mod bestapprox;
pub mod certified;
pub mod error;
pub mod lattice;
pub mod norms;
pub mod orbit;
pub mod par;
pub mod runner;
pub mod stats;

pub use error::{Error, Result};

/// Re-export so downstream users do not need a direct `rug` dependency for
/// building targets and thresholds.
pub use rug::{Integer, Rational};
