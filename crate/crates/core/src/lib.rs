//! Explicit chaos expansions of powers of Levy increments.
//!
//! The crate computes the coefficients of `(X_{t+t0} - X_{t0})^n` against
//! compensated power jump processes, their orthogonalized counterparts, the
//! raw power brackets and the compensated Poisson random measure, and checks
//! the expansions pathwise: exactly on finite-jump paths, and on simulated
//! grid paths.

pub mod chaos;
pub mod combinatorics;
pub mod error;
pub mod evaluate;
pub mod models;
pub mod ortho;
pub mod paths;
pub mod poly;
pub mod scalar;
pub mod taylor;

pub use chaos::{Basis, Expansion};
pub use combinatorics::{IndexTuple, Partition};
pub use error::{Error, Result};
pub use evaluate::{PiecewisePolyProcess, VerificationReport};
pub use models::{LevyModel, MomentVector};
pub use ortho::{EtaMoments, OrthoTriangular};
pub use paths::{GridPath, JumpPath};
pub use poly::TimePolynomial;
pub use scalar::{fmt_f64, Rational, Scalar};
pub use taylor::FunctionalSpec;
