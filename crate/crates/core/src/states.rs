//! Mode-spectrum states and the angle/angular-momentum uncertainty functionals.
//!
//! A pure state is stored by its amplitudes `c_m` over a finite window of
//! angular-momentum modes. The exponential-of-angle operator lowers modes,
//! `Ê|m⟩ = |m − 1⟩`, so `⟨Ê⟩ = Σ c*_{m−1} c_m`. In the angle representation
//! `⟨φ|m⟩ = e^{−imφ}/√(2π)` the same operator is multiplication by `e^{iφ}`,
//! so `⟨Ê⟩` is also the first circular moment of the angle density.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mathieu::{MathieuState, Parity};

/// Allowed deviation of `Σ|c_m|²` from one.
pub const NORM_TOL: f64 = 1e-12;
/// Slack on the uncertainty bound before a report is rejected.
pub const BOUND_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    m_min: i64,
    amps: Vec<Complex64>,
}

impl ModeSpectrum {
    /// Wraps amplitudes for modes `m_min, m_min + 1, …`; they must already be
    /// normalized.
    pub fn new(m_min: i64, amplitudes: Vec<Complex64>) -> Result<Self> {
        let spectrum = Self::unchecked(m_min, amplitudes)?;
        let norm = spectrum.norm_sq();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::param(
                "amplitudes",
                format!("squared norm {norm} differs from 1"),
            ));
        }
        Ok(spectrum)
    }

    /// Rescales the amplitudes to unit norm.
    pub fn normalized(m_min: i64, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut spectrum = Self::unchecked(m_min, amplitudes)?;
        let norm = spectrum.norm_sq().sqrt();
        if !(norm > 0.0) {
            return Err(Error::param(
                "amplitudes",
                "zero vector cannot be normalized",
            ));
        }
        spectrum.amps.iter_mut().for_each(|c| *c /= norm);
        Ok(spectrum)
    }

    pub fn from_real_normalized(m_min: i64, amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(
            m_min,
            amplitudes.iter().map(|a| Complex64::new(*a, 0.0)).collect(),
        )
    }

    fn unchecked(m_min: i64, amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::param("amplitudes", "support must be non-empty"));
        }
        if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::param("amplitudes", "must be finite"));
        }
        Ok(Self { m_min, amps })
    }

    /// `|m⟩`.
    pub fn single_mode(m: i64) -> Self {
        Self {
            m_min: m,
            amps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn m_min(&self) -> i64 {
        self.m_min
    }

    pub fn m_max(&self) -> i64 {
        self.m_min + self.amps.len() as i64 - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `c_m`, zero outside the stored window.
    pub fn amplitude(&self, m: i64) -> Complex64 {
        let offset = m - self.m_min;
        if offset < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.amps
            .get(offset as usize)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.amps
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.m_min + i as i64, *c))
    }

    /// `|c_m|²` in window order.
    pub fn weights(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Moves every amplitude from mode `m` to mode `m + delta`.
    pub fn relabeled(&self, delta: i64) -> Self {
        Self {
            m_min: self.m_min + delta,
            amps: self.amps.clone(),
        }
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            m_min: self.m_min,
            amps: self.amps.iter().map(|c| c * phase).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &ModeSpectrum) -> Complex64 {
        let lo = self.m_min.max(other.m_min);
        let hi = self.m_max().min(other.m_max());
        (lo..=hi)
            .map(|m| self.amplitude(m).conj() * other.amplitude(m))
            .sum()
    }

    /// `Ψ(φ) = Σ c_m e^{−imφ} / √(2π)`.
    pub fn wavefunction(&self, phi: f64) -> Complex64 {
        let norm = 1.0 / TAU.sqrt();
        self.modes()
            .map(|(m, c)| c * Complex64::from_polar(norm, -(m as f64) * phi))
            .sum()
    }

    /// Angle density `|Ψ(φ)|²`.
    pub fn density(&self, phi: f64) -> f64 {
        self.wavefunction(phi).norm_sqr()
    }
}

/// `Ê`: every mode lowered by one.
pub fn apply_shift(state: &ModeSpectrum) -> ModeSpectrum {
    state.relabeled(-1)
}

/// `Ê†`: every mode raised by one.
pub fn apply_raise(state: &ModeSpectrum) -> ModeSpectrum {
    state.relabeled(1)
}

/// `⟨Êᵏ⟩ = Σ c*_{m−k} c_m`.
pub fn shift_moment(state: &ModeSpectrum, k: i64) -> Complex64 {
    state
        .modes()
        .map(|(m, c)| state.amplitude(m - k).conj() * c)
        .sum()
}

/// `⟨e^{iφ}⟩ = ⟨Ê⟩`.
pub fn mean_expiphi(state: &ModeSpectrum) -> Complex64 {
    shift_moment(state, 1)
}

fn raw_dispersion_sq(state: &ModeSpectrum) -> f64 {
    1.0 - mean_expiphi(state).norm_sqr()
}

/// `D² = 1 − |⟨e^{iφ}⟩|²`, clamped to `[0, 1]`.
pub fn dispersion_sq(state: &ModeSpectrum) -> f64 {
    raw_dispersion_sq(state).clamp(0.0, 1.0)
}

/// Mean and variance of `L̂`, which is diagonal in the mode basis.
pub fn var_l(state: &ModeSpectrum) -> (f64, f64) {
    let total = state.norm_sq();
    let mean = state
        .modes()
        .map(|(m, c)| m as f64 * c.norm_sqr())
        .sum::<f64>()
        / total;
    let variance = state
        .modes()
        .map(|(m, c)| (m as f64 - mean).powi(2) * c.norm_sqr())
        .sum::<f64>()
        / total;
    (mean, variance)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub dispersion_sq: f64,
    pub var_l: f64,
    pub mean_l: f64,
    /// `D²·(ΔL)²`.
    pub product: f64,
    /// `(1 − D²)/4`.
    pub bound: f64,
    pub gap: f64,
}

impl UncertaintyReport {
    /// Assembles a report and checks `D²(ΔL)² ≥ (1 − D²)/4` up to
    /// [`BOUND_SLACK`].
    pub fn from_moments(dispersion_sq: f64, var_l: f64, mean_l: f64) -> Result<Self> {
        let dispersion_sq = dispersion_sq.clamp(0.0, 1.0);
        let var_l = var_l.max(0.0);
        let product = dispersion_sq * var_l;
        let bound = 0.25 * (1.0 - dispersion_sq);
        let gap = product - bound;
        if gap < -BOUND_SLACK {
            return Err(Error::BoundViolation { gap });
        }
        Ok(Self {
            dispersion_sq,
            var_l,
            mean_l,
            product,
            bound,
            gap,
        })
    }

    /// `D`.
    pub fn dispersion(&self) -> f64 {
        self.dispersion_sq.sqrt()
    }

    /// `ΔL`.
    pub fn delta_l(&self) -> f64 {
        self.var_l.sqrt()
    }

    /// `D·ΔL`, the quantity plotted against `D`.
    pub fn product_linear(&self) -> f64 {
        self.product.sqrt()
    }

    /// `√(1 − D²)/2`.
    pub fn bound_linear(&self) -> f64 {
        self.bound.sqrt()
    }
}

pub fn report(state: &ModeSpectrum) -> Result<UncertaintyReport> {
    let (mean, variance) = var_l(state);
    UncertaintyReport::from_moments(raw_dispersion_sq(state), variance, mean)
}

/// `Θ = A₀A₂ + Σ_{k≥0} A₂ₖA₂ₖ₊₂`, i.e. `⟨cos 2η⟩` for coefficients normalized
/// as `2A₀² + Σ_{k≥1} A₂ₖ² = 1`.
pub fn theta_from_coeffs(coeffs: &[f64]) -> f64 {
    if coeffs.len() < 2 {
        return 0.0;
    }
    coeffs[0] * coeffs[1] + coeffs.windows(2).map(|w| w[0] * w[1]).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MathieuFunctionals {
    pub theta: f64,
    pub var_l: f64,
    pub dispersion_sq: f64,
}

/// Coefficient-series functionals of an even Mathieu state:
/// `(ΔL)² = (a − 2qΘ)/4` and `D² = 1 − Θ²`.
///
/// Every call is cross-checked against the mode-space report of the same
/// state; a mismatch beyond `1e−8` (relative) means the conventions diverged.
pub fn mathieu_functionals(state: &MathieuState) -> Result<MathieuFunctionals> {
    if state.parity() != Parity::Even {
        return Err(Error::Unsupported("functionals of the odd (se) branch"));
    }
    let theta = theta_from_coeffs(state.coeffs());
    let var = (state.charvalue() - 2.0 * state.q() * theta) / 4.0;
    let d2 = 1.0 - theta * theta;

    let mode = report(&state.to_mode_spectrum()?)?;
    let var_err = (mode.var_l - var).abs() / var.abs().max(1.0);
    let d2_err = (mode.dispersion_sq - d2).abs();
    if var_err > 1e-8 || d2_err > 1e-8 {
        return Err(Error::SolverInconsistency(format!(
            "coefficient series and mode space disagree at q = {}: varL {var} vs {}, D² {d2} vs {}",
            state.q(),
            mode.var_l,
            mode.dispersion_sq
        )));
    }
    Ok(MathieuFunctionals {
        theta,
        var_l: var.max(0.0),
        dispersion_sq: d2.clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallQExpansion {
    pub var_l: f64,
    pub dispersion_sq: f64,
    pub product: f64,
}

/// Leading small-`q` formulas for the order-`2n` state, evaluated verbatim:
///
/// ```text
/// (ΔL)² = (2n)²/4 + (4n⁴ − 3n² + 1) q² / (8 (4n² − 1)²)
/// D²    = 1 − q² / (4 (4n² − 1)²)
/// D²(ΔL)² = n² + ¼ (4n⁴ − 5n² + 1)(1 − D²)
/// ```
///
/// These are reference values only. They match the exact functionals to
/// `O(q⁴)` at `n = 0`; for `n ≥ 1` the exact `(ΔL)²` coefficient is
/// negative and at `n = 1` the `D²` coefficient is `25/144`. At `n = 0` the
/// product line gives `q²/16` while the product of the first two lines is
/// `q²/8`.
pub fn smallq_expansion(n: u32, q: f64) -> SmallQExpansion {
    let n = n as f64;
    let n2 = n * n;
    let denom = (4.0 * n2 - 1.0).powi(2);
    let var_l = n2 + (4.0 * n2 * n2 - 3.0 * n2 + 1.0) * q * q / (8.0 * denom);
    let dispersion_sq = 1.0 - q * q / (4.0 * denom);
    let product = n2 + 0.25 * (4.0 * n2 * n2 - 5.0 * n2 + 1.0) * (1.0 - dispersion_sq);
    SmallQExpansion {
        var_l,
        dispersion_sq,
        product,
    }
}

/// Moments of `Ĉ = (Ê + Ê†)/2` and `Ŝ = (Ê − Ê†)/2i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CosineSineReport {
    pub var_c: f64,
    pub var_s: f64,
    pub mean_c: f64,
    pub mean_s: f64,
}

impl CosineSineReport {
    /// `(ΔC)²(ΔL)² − ¼⟨S⟩²` and `(ΔS)²(ΔL)² − ¼⟨C⟩²`; both are non-negative
    /// because `[Ĉ, L̂] = iŜ` and `[Ŝ, L̂] = −iĈ`.
    pub fn relation_gaps(&self, var_l: f64) -> (f64, f64) {
        (
            self.var_c * var_l - 0.25 * self.mean_s * self.mean_s,
            self.var_s * var_l - 0.25 * self.mean_c * self.mean_c,
        )
    }
}

pub fn cosine_sine_reports(state: &ModeSpectrum) -> Result<CosineSineReport> {
    let first = mean_expiphi(state);
    let second = shift_moment(state, 2);
    let norm = state.norm_sq();
    let mean_c = first.re;
    let mean_s = first.im;
    let var_c = 0.5 * (norm + second.re) - mean_c * mean_c;
    let var_s = 0.5 * (norm - second.re) - mean_s * mean_s;
    let mismatch = (var_c + var_s - raw_dispersion_sq(state)).abs();
    if mismatch > 1e-12 {
        return Err(Error::SolverInconsistency(format!(
            "(ΔC)² + (ΔS)² differs from D² by {mismatch:.3e}"
        )));
    }
    Ok(CosineSineReport {
        var_c,
        var_s,
        mean_c,
        mean_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathieu::{solve, DEFAULT_TOL};
    use crate::numerics::{bessel_i, periodic_integral, rng_stream};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pair01() -> ModeSpectrum {
        ModeSpectrum::new(0, vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap()
    }

    fn ground(q: f64) -> MathieuState {
        solve(0, q, Parity::Even, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(ModeSpectrum::new(0, vec![]).is_err());
        assert!(ModeSpectrum::new(0, vec![c(0.5)]).is_err());
        assert!(ModeSpectrum::normalized(0, vec![c(0.0)]).is_err());
        let s = ModeSpectrum::normalized(-1, vec![c(3.0), c(4.0)]).unwrap();
        assert!((s.norm_sq() - 1.0).abs() < 1e-15);
        assert_eq!(s.m_max(), 0);
    }

    #[test]
    fn shift_moves_single_mode() {
        let s = apply_shift(&ModeSpectrum::single_mode(0));
        assert_eq!(s.amplitude(-1), c(1.0));
        assert_eq!(s.amplitude(0), c(0.0));
        assert_eq!(apply_raise(&s), ModeSpectrum::single_mode(0));
    }

    #[test]
    fn shift_preserves_dispersion() {
        let s =
            ModeSpectrum::normalized(-2, vec![c(0.3), Complex64::new(0.2, 0.5), c(-0.7), c(0.1)])
                .unwrap();
        assert!((dispersion_sq(&s) - dispersion_sq(&apply_shift(&s))).abs() < 1e-14);
    }

    #[test]
    fn single_mode_values() {
        let s = ModeSpectrum::single_mode(5);
        assert_eq!(mean_expiphi(&s), c(0.0));
        assert_eq!(dispersion_sq(&s), 1.0);
        assert_eq!(var_l(&s), (5.0, 0.0));
        let r = report(&ModeSpectrum::single_mode(0)).unwrap();
        assert_eq!(
            (r.dispersion_sq, r.var_l, r.product, r.bound),
            (1.0, 0.0, 0.0, 0.0)
        );
        let cs = cosine_sine_reports(&s).unwrap();
        assert_eq!(
            (cs.var_c, cs.var_s, cs.mean_c, cs.mean_s),
            (0.5, 0.5, 0.0, 0.0)
        );
    }

    #[test]
    fn two_mode_values() {
        let s = pair01();
        assert!((mean_expiphi(&s) - c(0.5)).norm() < 1e-15);
        assert!((dispersion_sq(&s) - 0.75).abs() < 1e-15);
        let r = report(&s).unwrap();
        assert!((r.product - 3.0 / 16.0).abs() < 1e-15);
        assert!((r.bound - 1.0 / 16.0).abs() < 1e-15);
        let cs = cosine_sine_reports(&s).unwrap();
        assert!((cs.mean_c - 0.5).abs() < 1e-15 && cs.mean_s.abs() < 1e-15);
        assert!((cs.var_c + cs.var_s - 0.75).abs() < 1e-15);

        let sym = ModeSpectrum::new(-1, vec![c(FRAC_1_SQRT_2), c(0.0), c(FRAC_1_SQRT_2)]).unwrap();
        let (mean, var) = var_l(&sym);
        assert!(mean.abs() < 1e-15 && (var - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_expiphi_matches_angle_quadrature() {
        let s = ModeSpectrum::normalized(
            -2,
            vec![
                Complex64::new(0.1, 0.4),
                c(0.6),
                Complex64::new(-0.3, 0.2),
                c(0.5),
                c(0.2),
            ],
        )
        .unwrap();
        let quad =
            periodic_integral(|phi| s.density(phi) * Complex64::from_polar(1.0, phi)).unwrap();
        assert!((quad - mean_expiphi(&s)).norm() < 1e-12);
    }

    #[test]
    fn von_mises_mean_by_quadrature() {
        // amplitudes of √(exp(2 cos φ)) are I_m(1); ⟨e^{iφ}⟩ = I₁(2)/I₀(2)
        let amps: Vec<f64> = (-30i64..=30)
            .map(|m| bessel_i(m.unsigned_abs() as u32, 1.0).unwrap())
            .collect();
        let s = ModeSpectrum::from_real_normalized(-30, &amps).unwrap();
        let oracle = periodic_integral(|phi| {
            let p = (2.0 * phi.cos()).exp() / (TAU * bessel_i(0, 2.0).unwrap());
            Complex64::from_polar(p, phi)
        })
        .unwrap();
        let closed = bessel_i(1, 2.0).unwrap() / bessel_i(0, 2.0).unwrap();
        assert!((oracle.re - closed).abs() < 1e-12);
        assert!((mean_expiphi(&s) - oracle).norm() < 1e-10);
    }

    #[test]
    fn mathieu_small_q_against_expansion() {
        let f = mathieu_functionals(&ground(0.1)).unwrap();
        assert!((f.dispersion_sq - (1.0 - 0.01 / 4.0)).abs() < 5e-5);
        assert!((f.var_l - 0.01 / 8.0).abs() < 5e-5);
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta_from_coeffs(&[FRAC_1_SQRT_2]), 0.0);
        assert_eq!(theta_from_coeffs(&[FRAC_1_SQRT_2, 0.0, 0.0]), 0.0);
        // first-order perturbation: A₂ = −q√2/4 ⇒ Θ = −q/2 + O(q³)
        for q in [1e-3, 1e-2] {
            let theta = theta_from_coeffs(ground(q).coeffs());
            assert!((theta + q / 2.0).abs() < q.powi(3), "q={q}: {theta}");
        }
        // ⟨cos 2η⟩ by quadrature
        let s = ground(3.0);
        let num =
            periodic_integral(|phi| Complex64::new(s.evaluate(phi / 2.0).powi(2) * phi.cos(), 0.0))
                .unwrap();
        let den =
            periodic_integral(|phi| Complex64::new(s.evaluate(phi / 2.0).powi(2), 0.0)).unwrap();
        assert!((num.re / den.re - theta_from_coeffs(s.coeffs())).abs() < 1e-10);
    }

    #[test]
    fn functionals_at_q_zero() {
        let f = mathieu_functionals(&ground(0.0)).unwrap();
        assert!(f.var_l.abs() < 1e-15 && (f.dispersion_sq - 1.0).abs() < 1e-15);
        let ce2 = solve(2, 0.0, Parity::Even, DEFAULT_TOL).unwrap();
        let f = mathieu_functionals(&ce2).unwrap();
        assert!((f.var_l - 1.0).abs() < 1e-13 && (f.dispersion_sq - 1.0).abs() < 1e-13);
        let se = solve(2, 1.0, Parity::Odd, DEFAULT_TOL).unwrap();
        assert!(mathieu_functionals(&se).is_err());
    }

    #[test]
    fn functionals_match_mode_space() {
        for q in [0.1, 1.0, 5.0, 10.0, 25.0] {
            for n in 0..3 {
                let s = solve(2 * n, q, Parity::Even, DEFAULT_TOL).unwrap();
                let f = mathieu_functionals(&s).unwrap();
                let r = report(&s.to_mode_spectrum().unwrap()).unwrap();
                assert!((f.var_l - r.var_l).abs() < 1e-10, "q={q} n={n}");
                assert!(
                    (f.dispersion_sq - r.dispersion_sq).abs() < 1e-10,
                    "q={q} n={n}"
                );
            }
        }
    }

    #[test]
    fn varl_matches_derivative_quadrature() {
        // (ΔL)² = (1/2π) ∫₀^π (ce')² dη, the kinetic-energy form
        let s = ground(4.0);
        let kinetic = periodic_integral(|phi| {
            // η = φ/2, dη = dφ/2
            Complex64::new(0.5 * s.derivative(phi / 2.0).powi(2), 0.0)
        })
        .unwrap()
        .re / PI
            / 2.0;
        let f = mathieu_functionals(&s).unwrap();
        assert!(
            (kinetic - f.var_l).abs() < 1e-10,
            "{kinetic} vs {}",
            f.var_l
        );
    }

    #[test]
    fn product_above_bound_at_q5() {
        let s = ground(5.0);
        let r = report(&s.to_mode_spectrum().unwrap()).unwrap();
        let f = mathieu_functionals(&s).unwrap();
        assert!(r.gap > 0.0);
        assert!((r.product - f.var_l * f.dispersion_sq).abs() < 1e-10);
    }

    #[test]
    fn smallq_reference_values() {
        assert_eq!(
            smallq_expansion(0, 0.0),
            SmallQExpansion {
                var_l: 0.0,
                dispersion_sq: 1.0,
                product: 0.0
            }
        );
        assert!((smallq_expansion(1, 0.1).dispersion_sq - (1.0 - 0.01 / 36.0)).abs() < 1e-15);
        assert!((smallq_expansion(0, 0.1).var_l - 1.25e-3).abs() < 1e-15);
        assert!((smallq_expansion(1, 0.0).var_l - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smallq_agrees_with_exact_functionals_at_ground() {
        for q in [1e-3, 1e-2, 0.05, 0.1] {
            let exact = mathieu_functionals(&ground(q)).unwrap();
            let approx = smallq_expansion(0, q);
            let budget = 10.0 * q.powi(4);
            assert!((exact.var_l - approx.var_l).abs() <= budget, "q={q}");
            assert!(
                (exact.dispersion_sq - approx.dispersion_sq).abs() <= budget,
                "q={q}"
            );
        }
    }

    /// Second-order perturbation theory for the excited states. With
    /// `A₂ₙ = 1`, `A₂ₙ±₂ = ∓q/(4(2n ± 1))` (and `A₀ = q/4` at `n = 1`, which
    /// enters `Θ` twice) one gets `Θ = q/(2(4n² − 1))`, `Θ = 5q/12` at `n = 1`,
    /// and `(ΔL)² = (a − 2qΘ)/4` with `a₂ = 4 + 5q²/12`,
    /// `a₂ₙ = 4n² + q²/(2(4n² − 1))` for `n ≥ 2`.
    #[test]
    fn excited_states_follow_perturbation_theory() {
        let coeffs = |n: u32| -> (f64, f64) {
            if n == 1 {
                (-5.0 / 48.0, 25.0 / 144.0)
            } else {
                let s = 4.0 * (n * n) as f64 - 1.0;
                (-1.0 / (8.0 * s), 1.0 / (4.0 * s * s))
            }
        };
        for n in 1..4u32 {
            let (var_c, disp_c) = coeffs(n);
            for q in [1e-3, 1e-2, 0.05] {
                let exact =
                    mathieu_functionals(&solve(2 * n, q, Parity::Even, DEFAULT_TOL).unwrap())
                        .unwrap();
                let budget = 10.0 * q.powi(4);
                assert!(
                    (exact.var_l - ((n * n) as f64 + var_c * q * q)).abs() <= budget,
                    "n={n} q={q}"
                );
                assert!(
                    (exact.dispersion_sq - (1.0 - disp_c * q * q)).abs() <= budget,
                    "n={n} q={q}"
                );
            }
        }
        // the closed-form expansion only shares the D² coefficient for n ≥ 2
        let d2 = smallq_expansion(2, 0.01).dispersion_sq;
        assert!((d2 - (1.0 - coeffs(2).1 * 1e-4)).abs() < 1e-15);
    }

    #[test]
    fn mathieu_cosine_sine_relations() {
        let s = ground(2.0).to_mode_spectrum().unwrap();
        let cs = cosine_sine_reports(&s).unwrap();
        let (_, var) = var_l(&s);
        let (gc, gs) = cs.relation_gaps(var);
        assert!(gc >= -1e-12 && gs >= -1e-12);
    }

    fn random_state(seed: u64, half_width: i64) -> ModeSpectrum {
        let mut r = rng_stream(seed);
        let amps = (0..2 * half_width + 1)
            .map(|_| Complex64::new(r.normal(), r.normal()))
            .collect();
        ModeSpectrum::normalized(-half_width, amps).unwrap()
    }

    #[test]
    fn invariants_on_random_states() {
        for seed in 0..200 {
            let width = (seed % 20) as i64 + 1;
            let s = random_state(seed, width);
            let r = report(&s).unwrap();
            assert!((0.0..=1.0).contains(&r.dispersion_sq));
            assert!(r.gap >= -BOUND_SLACK);
            let shifted = apply_shift(&s);
            let rs = report(&shifted).unwrap();
            assert!((rs.dispersion_sq - r.dispersion_sq).abs() < 1e-14);
            assert!((rs.var_l - r.var_l).abs() < 1e-10);
            assert!((rs.mean_l - (r.mean_l - 1.0)).abs() < 1e-12);
            let phased = s.with_global_phase(1.234);
            assert!((dispersion_sq(&phased) - r.dispersion_sq).abs() < 1e-14);
            let cs = cosine_sine_reports(&s).unwrap();
            assert!((cs.var_c + cs.var_s - r.dispersion_sq).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn spectrum() -> impl Strategy<Value = ModeSpectrum> {
            (
                -20i64..=0,
                prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=41),
            )
                .prop_filter_map("non-zero", |(lo, raw)| {
                    let len = raw.len() as i64;
                    let lo = lo.max(-20).min(20 - len + 1);
                    let amps = raw.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
                    ModeSpectrum::normalized(lo, amps).ok()
                })
        }

        proptest! {
            #[test]
            fn bound_holds(s in spectrum()) {
                let r = report(&s).unwrap();
                prop_assert!(r.product >= r.bound - BOUND_SLACK);
                prop_assert!(mean_expiphi(&s).norm() <= 1.0 + 1e-12);
            }

            #[test]
            fn relabeling_is_invertible(s in spectrum(), d in -5i64..5) {
                prop_assert_eq!(s.relabeled(d).relabeled(-d), s.clone());
                let (m0, v0) = var_l(&s);
                let (m1, v1) = var_l(&s.relabeled(d));
                prop_assert!((m1 - m0 - d as f64).abs() < 1e-12);
                prop_assert!((v1 - v0).abs() < 1e-10);
            }
        }
    }
}
