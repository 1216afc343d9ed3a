//! Self-contained numerical kernel shared by the physics modules.

pub mod bessel;
pub mod quadrature;
pub mod rng;
pub mod tridiag;

pub use bessel::{bessel_i, bessel_i_scaled, bessel_i_scaled_sequence};
pub use quadrature::{periodic_integral, trapezoid_integral, PeriodicGrid};
pub use rng::{rng_stream, RngStream};
pub use tridiag::{eigen_lowest, EigenPair, SymTridiag};
