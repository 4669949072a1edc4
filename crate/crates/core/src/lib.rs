//! Stationary search cost of the Move-to-Front rule when request
//! probabilities are normalized increments of a subordinator.
//!
//! Three independent routes to the same quantities are provided:
//!
//! * [`analytic`]: closed-form limiting moments for the generalized gamma,
//!   stable, Dirichlet and Pitman–Yor cases;
//! * [`quad`]: nested adaptive Gauss–Kronrod quadrature of the underlying
//!   double integrals (limit and finite `n`);
//! * [`sim`]: Monte-Carlo samplers for subordinator increments, the finite-`n`
//!   stationary search cost and the limiting Poisson-mixture law.
//!
//! Every formula is written once against a [`subordinator::LaplaceExponent`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod error;
pub mod model;
pub mod quad;
pub mod sim;
pub mod special_fn;
pub mod subordinator;

pub use error::{Error, Result};
pub use model::Model;
pub use subordinator::{Exponent, GammaExponent, GenGammaExponent, LaplaceExponent, StableExponent};
