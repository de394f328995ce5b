//! Pricing engine for arithmetic-average overnight-rate forwards under
//! two-factor Gaussian (G2++) short-rate models.
//!
//! The floating leg of an arithmetic-average overnight contract pays
//! `sum(tau_k * R_k)` over a daily accrual grid. Its model forward is a
//! weighted sum of the curve's overnight forwards,
//!
//! ```text
//! F_a = (1/tau) * sum(tau_k * A_k * F_k)
//! ```
//!
//! where the arithmetic factors `A_k` capture the measure mismatch between
//! the payment date and each daily fixing. This crate computes the factors
//! exactly by Gauss-Hermite quadrature, prices the forward with three
//! cheaper factor approximations (unweighted, linear, piecewise-linear),
//! and cross-validates everything against an exact-transition Monte Carlo
//! engine.
//!
//! All numeric code is generic over the scalar type through the [`Real`]
//! trait; `f64` aliases for the main types are exported at the crate root.

pub mod curve;
pub mod error;
pub mod factors;
pub mod forwards;
pub mod g2pp;
pub mod montecarlo;
pub mod quadrature;
pub mod timegrid;

mod real;

pub use error::{Error, Result};
pub use real::Real;

/// Double-precision aliases for the main domain types.
pub type Grid64 = timegrid::AccrualGrid<f64>;
pub type Curve64 = curve::DiscountCurve<f64>;
pub type G2pp64 = g2pp::G2ppParams<f64>;
pub type Law64 = g2pp::GaussianLaw2D<f64>;
pub type Factors64 = factors::FactorCurve<f64>;
pub type Quote64 = forwards::ForwardQuote<f64>;
pub type McEstimate64 = montecarlo::McEstimate<f64>;
pub type McPanel64 = montecarlo::McPanel<f64>;
