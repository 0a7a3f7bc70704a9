//! Phase-space simulation of a squeezed-light Mach-Zehnder metrology
//! protocol: Gaussian state evolution through the interferometer, lossy
//! on-off detection, and maximum-likelihood phase estimation, together with
//! the numerical studies that check its Heisenberg-limit, standard-quantum-
//! limit, and loss-robustness behavior.
//!
//! Module map:
//! - [`phase_space`]: covariance matrices, symplectic lifts, squeezers, the
//!   attenuator channel, Gaussian overlaps, marginals.
//! - [`protocol`]: the interferometric pipeline and the detection
//!   probability in determinant and closed form.
//! - [`estimation`]: Bernoulli trial simulation, maximum-likelihood
//!   inversion, analytic variance formulas.
//! - [`experiments`]: probability surfaces, diameter scaling with slope
//!   fits, rescaled-variance surfaces, Monte Carlo campaigns.
//! - [`verify`]: independent oracle suites (quadrature overlap, closed vs
//!   determinant form, symplectic invariants, semi-axes).

// Validation guards are written as `!(x > 0.0)` on purpose: the negated
// comparison is false for NaN, so non-finite garbage is rejected by the same
// branch as out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod experiments;
pub mod phase_space;
pub mod protocol;
pub mod verify;

pub use error::{Error, Result};
