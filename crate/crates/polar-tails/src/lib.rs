//! Tail probabilities for bivariate polar random vectors.
//!
//! A polar random vector is `(X, Y) = (R cos Θ, R sin(Θ + arcsin ρ))` where the
//! radius `R` has a light (Gumbel-type) upper tail, the angle `Θ` is independent
//! of `R`, and `ρ ∈ (−1, 1)` controls the pseudo-correlation between the
//! coordinates. This crate computes exact joint and marginal tail probabilities
//! by one-dimensional angular quadrature, their closed-form asymptotic
//! approximations, the non-Gaussian conditional limit laws that appear under
//! this geometry, simulation routines with reproducible streams, and estimators
//! for the tail parameters from data.
//!
//! The numeric core is generic over the scalar type through [`scalar::Real`];
//! `f64` aliases for the main model types are exported at the crate root.

// reference values keep their full oracle digits; range guards are written
// `!(x > lo)` so NaN fails them
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod asymptotics;
pub mod error;
pub mod estimation;
pub mod polar_exact;
pub mod quad;
pub mod radial;
pub mod sampling;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Real;

/// Radial tail model over `f64`.
pub type RadialModel64 = radial::RadialModel<f64>;
/// Angular density model over `f64`.
pub type AngularModel64 = angular::AngularModel<f64>;
/// Full bivariate polar model over `f64`.
pub type PolarModel64 = polar_exact::PolarModel<f64>;
/// Conditional limit law over `f64`.
pub type LimitLaw64 = asymptotics::LimitLaw<f64>;
/// Estimator report over `f64`.
pub type EstimatorReport64 = estimation::EstimatorReport<f64>;
