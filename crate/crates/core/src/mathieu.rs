//! Angular Mathieu functions of even order.
//!
//! Substituting `ce₂ₙ(η) = Σ_{k≥0} A₂ₖ cos 2kη` into
//! `y'' + (a − 2q cos 2η) y = 0` and using
//! `2 cos 2η cos 2kη = cos 2(k+1)η + cos 2(k−1)η` gives, term by term,
//!
//! ```text
//! a A₀            = q A₂
//! (a − 4) A₂      = q (2A₀ + A₄)
//! (a − 4k²) A₂ₖ   = q (A₂ₖ₋₂ + A₂ₖ₊₂),   k ≥ 2
//! ```
//!
//! The factor 2 in the `k = 1` row makes the system non-symmetric. With
//! `v₀ = √2 A₀` and `vₖ = A₂ₖ` it becomes `T v = a v` for the symmetric
//! tridiagonal `T` with diagonal `4k²` and off-diagonal `(√2 q, q, q, …)`.
//! The unit norm `‖v‖ = 1` is the convention `2A₀² + Σ_{k≥1} A₂ₖ² = 1`.
//!
//! The odd family `se₂ₙ(η) = Σ_{k≥1} B₂ₖ sin 2kη` yields
//! `(a − 4k²) B₂ₖ = q (B₂ₖ₋₂ + B₂ₖ₊₂)` with `B₀ = 0`, already symmetric:
//! diagonal `4k²` for `k ≥ 1`, off-diagonal `q`.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{eigen_lowest, SymTridiag};
use crate::states::ModeSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// `ce₂ₙ`, characteristic value `a₂ₙ`.
    Even,
    /// `se₂ₙ`, characteristic value `b₂ₙ`.
    Odd,
}

pub const MIN_TRUNCATION: usize = 8;
const START_TRUNCATION: usize = 32;
const MAX_TRUNCATION: usize = 1 << 14;
pub const TAIL_BOUND: f64 = 1e-14;
pub const RESIDUAL_BOUND: f64 = 1e-8;
const COLLOCATION_POINTS: usize = 256;
pub const DEFAULT_TOL: f64 = 1e-13;

fn check_q(q: f64) -> Result<()> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::param(
            "q",
            format!("must be finite and >= 0, got {q}"),
        ));
    }
    Ok(())
}

fn check_truncation(k: usize) -> Result<()> {
    if k < MIN_TRUNCATION {
        return Err(Error::param(
            "K",
            format!("truncation {k} below minimum {MIN_TRUNCATION}"),
        ));
    }
    Ok(())
}

/// Recurrence matrix for `ce₂ₙ` acting on `(√2 A₀, A₂, …, A₂₍ₖ₋₁₎)`.
pub fn build_even_matrix(q: f64, k: usize) -> Result<SymTridiag> {
    check_q(q)?;
    check_truncation(k)?;
    let diag = (0..k).map(|i| 4.0 * (i * i) as f64).collect();
    let mut off = vec![q; k - 1];
    off[0] = SQRT_2 * q;
    SymTridiag::new(diag, off)
}

/// Recurrence matrix for `se₂ₙ` acting on `(B₂, B₄, …, B₂ₖ)`.
pub fn build_odd_matrix(q: f64, k: usize) -> Result<SymTridiag> {
    check_q(q)?;
    check_truncation(k)?;
    let diag = (1..=k).map(|i| 4.0 * (i * i) as f64).collect();
    SymTridiag::new(diag, vec![q; k - 1])
}

/// A solved even-order Mathieu eigenfunction.
///
/// `coeffs[j]` is `A₂ⱼ` for `ce` and `B₂₍ⱼ₊₁₎` for `se`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MathieuState {
    order: u32,
    q: f64,
    parity: Parity,
    charvalue: f64,
    coeffs: Vec<f64>,
    residual: f64,
}

/// Solves for `ce_order(η, q)` or `se_order(η, q)` with adaptive truncation.
///
/// `order` must be even (and at least 2 for `se`). `tol` bounds the
/// eigen-residual relative to the matrix norm.
pub fn solve(order: u32, q: f64, parity: Parity, tol: f64) -> Result<MathieuState> {
    check_q(q)?;
    if !order.is_multiple_of(2) {
        return Err(Error::param("order", format!("must be even, got {order}")));
    }
    if parity == Parity::Odd && order == 0 {
        return Err(Error::param("order", "se₀ does not exist"));
    }
    let index = match parity {
        Parity::Even => (order / 2) as usize,
        Parity::Odd => (order / 2 - 1) as usize,
    };

    let mut k = START_TRUNCATION;
    while k < index + 16 {
        k *= 2;
    }
    let mut last_failure = f64::INFINITY;
    while k <= MAX_TRUNCATION {
        let matrix = match parity {
            Parity::Even => build_even_matrix(q, k)?,
            Parity::Odd => build_odd_matrix(q, k)?,
        };
        let pair = eigen_lowest(&matrix, index, tol)?;
        let mut coeffs = pair.vector;
        if parity == Parity::Even {
            coeffs[0] /= SQRT_2;
        }
        let state = MathieuState {
            order,
            q,
            parity,
            charvalue: pair.value,
            coeffs,
            residual: 0.0,
        };
        let tail = state.coeffs.last().map_or(0.0, |c| c.abs());
        if tail < TAIL_BOUND {
            let residual = state.scaled_residual();
            if residual < RESIDUAL_BOUND {
                return Ok(MathieuState { residual, ..state });
            }
            last_failure = residual;
        } else {
            last_failure = tail;
        }
        k *= 2;
    }
    Err(Error::NoConvergence {
        what: "Mathieu truncation",
        residual: last_failure,
    })
}

/// Characteristic value `a_order(q)` or `b_order(q)`.
pub fn characteristic_value(order: u32, q: f64, parity: Parity) -> Result<f64> {
    solve(order, q, parity, DEFAULT_TOL).map(|s| s.charvalue)
}

impl MathieuState {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn charvalue(&self) -> f64 {
        self.charvalue
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Truncation `K` (number of retained Fourier coefficients).
    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    /// Scaled collocation residual recorded when the state was accepted.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Harmonic `2k` carried by `coeffs[j]`.
    fn harmonic(&self, j: usize) -> f64 {
        match self.parity {
            Parity::Even => 2.0 * j as f64,
            Parity::Odd => 2.0 * (j + 1) as f64,
        }
    }

    fn basis(&self, j: usize, eta: f64) -> f64 {
        let w = self.harmonic(j) * eta;
        match self.parity {
            Parity::Even => w.cos(),
            Parity::Odd => w.sin(),
        }
    }

    /// Fourier synthesis of `ce₂ₙ(η)` or `se₂ₙ(η)`.
    pub fn evaluate(&self, eta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * self.basis(j, eta))
            .sum()
    }

    pub fn derivative(&self, eta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let h = self.harmonic(j);
                match self.parity {
                    Parity::Even => -c * h * (h * eta).sin(),
                    Parity::Odd => c * h * (h * eta).cos(),
                }
            })
            .sum()
    }

    pub fn second_derivative(&self, eta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| -c * self.harmonic(j).powi(2) * self.basis(j, eta))
            .sum()
    }

    /// `max |y'' + (a − 2q cos 2η) y| / max |y|` over 256 points of `[0, π)`.
    pub fn collocation_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for i in 0..COLLOCATION_POINTS {
            let eta = PI * i as f64 / COLLOCATION_POINTS as f64;
            let y = self.evaluate(eta);
            let r = self.second_derivative(eta)
                + (self.charvalue - 2.0 * self.q * (2.0 * eta).cos()) * y;
            worst = worst.max(r.abs());
            peak = peak.max(y.abs());
        }
        worst / peak
    }

    /// [`collocation_residual`](Self::collocation_residual) divided by
    /// `max(1, |a| + 2|q|)`, the size of the terms that cancel in the
    /// equation. Equal to the plain residual for small `q`; for large `q`
    /// the plain one is bounded below by roundoff of order `ε (|a| + 2q)`.
    pub fn scaled_residual(&self) -> f64 {
        self.collocation_residual() / (self.charvalue.abs() + 2.0 * self.q.abs()).max(1.0)
    }

    /// Unit-norm mode spectrum of `Ψ(φ) ∝ ce₂ₙ(φ/2, q)`:
    /// `c₀ = √2 A₀`, `c_{±k} = A₂ₖ / √2`.
    pub fn to_mode_spectrum(&self) -> Result<ModeSpectrum> {
        if self.parity != Parity::Even {
            return Err(Error::Unsupported("mode spectrum of the odd (se) branch"));
        }
        let k = self.coeffs.len() as i64;
        let amps: Vec<f64> = (-(k - 1)..k)
            .map(|m| {
                let a = self.coeffs[m.unsigned_abs() as usize];
                if m == 0 {
                    SQRT_2 * a
                } else {
                    a / SQRT_2
                }
            })
            .collect();
        ModeSpectrum::from_real_normalized(-(k - 1), &amps)
    }
}

/// One entry of an interlaced characteristic-value chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharValue {
    pub order: u32,
    pub parity: Parity,
    pub value: f64,
}

/// The chain `a₀, b₂, a₂, b₄, a₄, …` up to `max_order`, checked to be
/// strictly increasing for `q > 0` (non-decreasing at the degenerate `q = 0`).
pub fn interlacing_check(q: f64, max_order: u32) -> Result<Vec<CharValue>> {
    check_q(q)?;
    let mut chain = vec![CharValue {
        order: 0,
        parity: Parity::Even,
        value: characteristic_value(0, q, Parity::Even)?,
    }];
    let mut order = 2;
    while order <= max_order {
        for parity in [Parity::Odd, Parity::Even] {
            chain.push(CharValue {
                order,
                parity,
                value: characteristic_value(order, q, parity)?,
            });
        }
        order += 2;
    }
    for w in chain.windows(2) {
        let ordered = if q > 0.0 {
            w[0].value < w[1].value
        } else {
            w[0].value <= w[1].value
        };
        if !ordered {
            return Err(Error::SolverInconsistency(format!(
                "characteristic values out of order at q = {q}: {:?} then {:?}",
                w[0], w[1]
            )));
        }
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_rotor_matrices() {
        let even = build_even_matrix(0.0, 10).unwrap();
        assert_eq!(&even.diag()[..4], &[0.0, 4.0, 16.0, 36.0]);
        assert!(even.offdiag().iter().all(|e| *e == 0.0));
        let odd = build_odd_matrix(0.0, 10).unwrap();
        assert_eq!(&odd.diag()[..3], &[4.0, 16.0, 36.0]);
    }

    #[test]
    fn even_matrix_at_q1() {
        let m = build_even_matrix(1.0, 8).unwrap();
        assert_eq!(&m.diag()[..3], &[0.0, 4.0, 16.0]);
        assert!((m.offdiag()[0] - SQRT_2).abs() < 1e-15);
        assert_eq!(m.offdiag()[1], 1.0);
        assert!(build_even_matrix(1.0, 3).is_err());
    }

    #[test]
    fn free_rotor_states() {
        let ce0 = solve(0, 0.0, Parity::Even, DEFAULT_TOL).unwrap();
        assert!(ce0.charvalue().abs() < 1e-15);
        assert!((ce0.coeffs()[0] - 1.0 / SQRT_2).abs() < 1e-15);
        assert!(ce0.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));

        let ce2 = solve(2, 0.0, Parity::Even, DEFAULT_TOL).unwrap();
        assert!((ce2.charvalue() - 4.0).abs() < 1e-14);
        assert!((ce2.coeffs()[1] - 1.0).abs() < 1e-14);
        assert!(ce2.coeffs()[0].abs() < 1e-14 && ce2.coeffs()[2].abs() < 1e-14);

        for n in 0..6u32 {
            let a = characteristic_value(2 * n, 0.0, Parity::Even).unwrap();
            assert!((a - (4 * n * n) as f64).abs() < 1e-12);
        }
        assert!((characteristic_value(2, 0.0, Parity::Odd).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve(0, -1.0, Parity::Even, DEFAULT_TOL).is_err());
        assert!(solve(1, 1.0, Parity::Even, DEFAULT_TOL).is_err());
        assert!(solve(0, 1.0, Parity::Odd, DEFAULT_TOL).is_err());
        assert!(solve(0, f64::NAN, Parity::Even, DEFAULT_TOL).is_err());
    }

    #[test]
    fn ground_characteristic_value_at_q1() {
        let a = characteristic_value(0, 1.0, Parity::Even).unwrap();
        assert!((a + 0.455_138_604_107).abs() < 1e-10, "{a}");
    }

    #[test]
    fn normalization_tail_and_sign() {
        for q in [0.5, 3.0, 25.0, 400.0] {
            for order in [0, 2, 4] {
                let s = solve(order, q, Parity::Even, DEFAULT_TOL).unwrap();
                let c = s.coeffs();
                let norm = 2.0 * c[0] * c[0] + c[1..].iter().map(|x| x * x).sum::<f64>();
                assert!((norm - 1.0).abs() < 1e-12);
                assert!(c.last().unwrap().abs() < TAIL_BOUND);
                assert!(c[0] > 0.0);
                assert!(s.residual() < RESIDUAL_BOUND);
                assert!(s.collocation_residual() < RESIDUAL_BOUND);
            }
            let se = solve(2, q, Parity::Odd, DEFAULT_TOL).unwrap();
            let norm: f64 = se.coeffs().iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(se.coeffs()[0] > 0.0);
        }
    }

    #[test]
    fn symmetries_of_evaluation() {
        let ce = solve(2, 3.0, Parity::Even, DEFAULT_TOL).unwrap();
        let se = solve(4, 3.0, Parity::Odd, DEFAULT_TOL).unwrap();
        for eta in [0.1, 0.7, 1.3, 2.9] {
            assert!((ce.evaluate(eta) - ce.evaluate(-eta)).abs() < 1e-14);
            assert!((ce.evaluate(eta) - ce.evaluate(eta + PI)).abs() < 1e-13);
            assert!((se.evaluate(eta) + se.evaluate(-eta)).abs() < 1e-14);
            assert!((se.evaluate(eta) - se.evaluate(eta + PI)).abs() < 1e-13);
        }
    }

    #[test]
    fn q_zero_values() {
        let ce0 = solve(0, 0.0, Parity::Even, DEFAULT_TOL).unwrap();
        for eta in [0.0, 0.4, 2.0] {
            assert!((ce0.evaluate(eta) - 1.0 / SQRT_2).abs() < 1e-15);
        }
        let ce2 = solve(2, 0.0, Parity::Even, DEFAULT_TOL).unwrap();
        assert!((ce2.evaluate(0.0) - 1.0).abs() < 1e-14);
    }

    /// Classical RK4 shooting of `y'' = −(a − 2q cos 2η) y` from `η = π/2`
    /// (where `ce₀' = 0`) to `η = 0`, scaled by the solver's value at `π/2`.
    fn shoot_ce0_at_zero(a: f64, q: f64, y_mid: f64) -> f64 {
        let rhs = |eta: f64, y: f64| -(a - 2.0 * q * (2.0 * eta).cos()) * y;
        let steps = 20_000;
        let h = -(PI / 2.0) / steps as f64;
        let (mut eta, mut y, mut dy) = (PI / 2.0, y_mid, 0.0);
        for _ in 0..steps {
            let k1y = dy;
            let k1v = rhs(eta, y);
            let k2y = dy + 0.5 * h * k1v;
            let k2v = rhs(eta + 0.5 * h, y + 0.5 * h * k1y);
            let k3y = dy + 0.5 * h * k2v;
            let k3v = rhs(eta + 0.5 * h, y + 0.5 * h * k2y);
            let k4y = dy + h * k3v;
            let k4v = rhs(eta + h, y + h * k3y);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            dy += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            eta += h;
        }
        y
    }

    #[test]
    fn ce0_matches_shooting() {
        let s = solve(0, 1.0, Parity::Even, DEFAULT_TOL).unwrap();
        let shot = shoot_ce0_at_zero(s.charvalue(), 1.0, s.evaluate(PI / 2.0));
        assert!(
            (s.evaluate(0.0) - shot).abs() < 1e-8,
            "{} vs {shot}",
            s.evaluate(0.0)
        );
    }

    #[test]
    fn mode_spectrum_shapes() {
        let ce0 = solve(0, 0.0, Parity::Even, DEFAULT_TOL).unwrap();
        let sp = ce0.to_mode_spectrum().unwrap();
        assert!((sp.amplitude(0).re - 1.0).abs() < 1e-15);
        assert!(sp.amplitude(1).norm() < 1e-15);

        let ce2 = solve(2, 0.0, Parity::Even, DEFAULT_TOL).unwrap();
        let sp = ce2.to_mode_spectrum().unwrap();
        let h = 1.0 / SQRT_2;
        assert!((sp.amplitude(1).re - h).abs() < 1e-14);
        assert!((sp.amplitude(-1).re - h).abs() < 1e-14);

        let se = solve(2, 1.0, Parity::Odd, DEFAULT_TOL).unwrap();
        assert!(matches!(se.to_mode_spectrum(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn mode_spectrum_norm_by_quadrature() {
        use crate::numerics::{trapezoid_integral, PeriodicGrid};
        let s = solve(0, 2.0, Parity::Even, DEFAULT_TOL).unwrap();
        let sp = s.to_mode_spectrum().unwrap();
        let grid = PeriodicGrid::sample_real(1024, |phi| sp.density(phi)).unwrap();
        assert!((trapezoid_integral(&grid).re - 1.0).abs() < 1e-12);
        // same density as the Fourier synthesis, normalized on the circle
        let direct =
            PeriodicGrid::sample_real(1024, |phi| s.evaluate(phi / 2.0).powi(2) / PI).unwrap();
        assert!((trapezoid_integral(&direct).re - 1.0).abs() < 1e-12);
        for phi in [0.3, 1.9, 4.4] {
            assert!((sp.density(phi) - s.evaluate(phi / 2.0).powi(2) / PI).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonality() {
        use crate::numerics::{trapezoid_integral, PeriodicGrid};
        for q in [1.0, 5.0, 10.0] {
            let states: Vec<MathieuState> = (0..3)
                .map(|n| solve(2 * n, q, Parity::Even, DEFAULT_TOL).unwrap())
                .collect();
            for i in 0..3 {
                for j in 0..i {
                    // ∫₀^π ce_i ce_j dη = ½ ∫₀^{2π} ce_i(φ/2) ce_j(φ/2) dφ
                    let grid = PeriodicGrid::sample_real(512, |phi| {
                        0.5 * states[i].evaluate(phi / 2.0) * states[j].evaluate(phi / 2.0)
                    })
                    .unwrap();
                    assert!(trapezoid_integral(&grid).re.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn continuity_in_q() {
        let delta = 1e-6;
        for q in [0.5, 2.0, 10.0, 40.0] {
            for n in 0..3 {
                let a = characteristic_value(2 * n, q, Parity::Even).unwrap();
                let b = characteristic_value(2 * n, q + delta, Parity::Even).unwrap();
                assert!((b - a).abs() <= 2.0 * delta);
            }
        }
    }

    #[test]
    fn truncation_robustness() {
        for q in [0.1, 1.0, 10.0, 50.0] {
            for index in 0..3 {
                let a = build_even_matrix(q, 64).unwrap().eigenvalue(index).unwrap();
                let b = build_even_matrix(q, 128)
                    .unwrap()
                    .eigenvalue(index)
                    .unwrap();
                assert!((a - b).abs() < 1e-13, "q={q} index={index}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn interlacing() {
        let chain = interlacing_check(1.0, 2).unwrap();
        assert_eq!(chain.len(), 3);
        assert!(chain[0].value < chain[1].value && chain[1].value < chain[2].value);

        let chain = interlacing_check(0.0, 2).unwrap();
        assert!(chain[0].value.abs() < 1e-15);
        assert!((chain[1].value - 4.0).abs() < 1e-14 && (chain[2].value - 4.0).abs() < 1e-14);

        let chain = interlacing_check(25.0, 4).unwrap();
        assert_eq!(chain.len(), 5);

        let b2 = characteristic_value(2, 5.0, Parity::Odd).unwrap();
        let a2 = characteristic_value(2, 5.0, Parity::Even).unwrap();
        assert!(b2 < a2);
    }
}
