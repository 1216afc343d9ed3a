//! Constrained minimum-uncertainty states for angle and orbital angular momentum.
//!
//! The angle is handled through the unitary exponential-of-angle operator Ê,
//! which lowers every angular-momentum mode by one, and its spread is measured
//! by the circular dispersion `D² = 1 − |⟨e^{iφ}⟩|²`. States minimizing
//! `D²·(ΔL)²` at fixed `D²` (or fixed `(ΔL)²`) are the even, π-periodic
//! angular Mathieu functions `ce₂ₙ(φ/2, q)`; von Mises states are their
//! close analytic cousins.
//!
//! Module map:
//!
//! - [`numerics`]: periodic quadrature, tridiagonal eigensolver, modified
//!   Bessel functions, seeded random streams.
//! - [`mathieu`]: characteristic values and Fourier coefficients.
//! - [`states`]: mode-spectrum algebra and the uncertainty functionals.
//! - [`vonmises`]: von Mises comparison states.
//! - [`optimizer`]: constrained minimum-uncertainty states and audits.
//! - [`experiment`]: simulated helicity-scan measurement.
//! - [`cli`]: command implementations behind the `angunc` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiment;
pub mod mathieu;
pub mod numerics;
pub mod optimizer;
pub mod states;
pub mod vonmises;

pub use error::{Error, Result};
pub use mathieu::{MathieuState, Parity};
pub use states::{ModeSpectrum, UncertaintyReport};
pub use vonmises::VonMisesState;
