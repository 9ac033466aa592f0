//! Numerical core for the radial Gelfand problem `-Δu = λ f(u)` in the unit ball.
//!
//! The crate is `no_std` (it needs `alloc`) and deterministic: every elementary
//! function goes through [`libm`], so results are bit-identical across platforms.
//!
//! The modules mirror the computational pipeline:
//!
//! * [`nonlinearity`] describes `f` in log space, the tail integral `F(u) = ∫_u^∞ ds/f(s)`
//!   and estimators for the growth constants `q`, `k`, `γ`.
//! * [`shooting`] integrates the radial initial value problem and locates the first zero.
//! * [`singular`] builds the unbounded radial solution through the transformed ODEs.
//! * [`stability`] evaluates Hardy-type quadratic forms and Sturm oscillation counts.
//! * [`bifurcation`] traces `λ(α)`, finds folds and crossings and assembles a verdict.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;

pub mod bifurcation;
pub mod constants;
mod error;
pub mod extrapolate;
pub mod math;
pub mod nonlinearity;
pub mod ode;
pub mod quadrature;
pub mod shooting;
pub mod singular;
pub mod stability;
pub mod sweep;

pub use constants::DimensionConstants;
pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
