//! Uniform-grid trapezoid rule on the circle.
//!
//! For smooth 2π-periodic integrands the trapezoid rule converges
//! geometrically, so it is used both as a primary integrator and as the
//! quadrature oracle for expectation values computed in mode space.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Samples of a function at `count` equispaced nodes `2πj/count` on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    values: Vec<Complex64>,
}

impl PeriodicGrid {
    pub const MIN_COUNT: usize = 8;

    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        let count = values.len();
        if count < Self::MIN_COUNT || !count.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "sample count {count} must be even and at least {}",
                Self::MIN_COUNT
            )));
        }
        Ok(Self { values })
    }

    pub fn sample<F>(count: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        let h = TAU / count as f64;
        Self::new((0..count).map(|j| f(j as f64 * h)).collect())
    }

    pub fn sample_real<F>(count: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        Self::sample(count, |phi| Complex64::new(f(phi), 0.0))
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Trapezoid rule over one full period: `spacing × Σ samples`.
pub fn trapezoid_integral(grid: &PeriodicGrid) -> Complex64 {
    let sum: Complex64 = grid.values.iter().sum();
    sum * grid.spacing()
}

pub const DEFAULT_SAMPLES: usize = 512;
const MAX_SAMPLES: usize = 1 << 20;
const AGREEMENT: f64 = 1e-12;

/// Integrates a periodic function over `[0, 2π)`, doubling the sample count
/// from 512 until two successive results agree to `1e-12` (relative to
/// `max(1, |I|)`).
pub fn periodic_integral<F>(f: F) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let mut count = DEFAULT_SAMPLES;
    let mut previous = trapezoid_integral(&PeriodicGrid::sample(count, &f)?);
    while count < MAX_SAMPLES {
        count *= 2;
        let current = trapezoid_integral(&PeriodicGrid::sample(count, &f)?);
        let change = (current - previous).norm();
        if change <= AGREEMENT * current.norm().max(1.0) {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::NoConvergence {
        what: "periodic quadrature",
        residual: f64::NAN,
    })
}
