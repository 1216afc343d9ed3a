//! Von Mises comparison states.
//!
//! The wavefunction `Ψ(φ) ∝ exp((κ/2) cos(φ − μ))` has angle density
//! `exp(κ cos(φ − μ)) / (2π I₀(κ))`. Expanding with
//! `exp(z cos θ) = Σ I_m(z) e^{imθ}` gives the real-gauge mode amplitudes
//! `c_m = I_m(κ/2) e^{imμ} / √I₀(κ)`, normalized by the addition theorem
//! `Σ_m I_m(κ/2)² = I₀(κ)`. The default `μ = π` gives the density
//! `exp(−κ cos φ)`, which peaks where the Mathieu ground state does.
//!
//! Closed-form moments:
//!
//! ```text
//! D²    = 1 − (I₁(κ)/I₀(κ))²
//! (ΔL)² = (κ²/4) ⟨sin²(φ − μ)⟩ = (κ²/8) (1 − I₂(κ)/I₀(κ))
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mathieu::{MathieuState, Parity};
use crate::numerics::bessel_i_scaled_sequence;
use crate::states::ModeSpectrum;

/// Largest acceptable dropped weight when truncating a spectrum.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VonMisesState {
    kappa: f64,
    mu: f64,
}

impl VonMisesState {
    pub fn new(kappa: f64, mu: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::param(
                "kappa",
                format!("must be finite and >= 0, got {kappa}"),
            ));
        }
        if !mu.is_finite() {
            return Err(Error::param("mu", "must be finite"));
        }
        Ok(Self {
            kappa,
            mu: mu.rem_euclid(2.0 * PI),
        })
    }

    /// Density peaked at `φ = π`, i.e. `∝ exp(−κ cos φ)`.
    pub fn with_kappa(kappa: f64) -> Result<Self> {
        Self::new(kappa, PI)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Angle density `exp(κ cos(φ − μ)) / (2π I₀(κ))`, evaluated in scaled form.
    pub fn density(&self, phi: f64) -> f64 {
        let i0_scaled = bessel_i_scaled_sequence(self.kappa, 0).map_or(1.0, |s| s[0]);
        (self.kappa * ((phi - self.mu).cos() - 1.0)).exp() / (2.0 * PI * i0_scaled)
    }
}

/// `e^{−κ/2} I_m(κ/2)` for `m = 0..=m_max`, and `e^{−κ} I₀(κ)`.
fn scaled_parts(kappa: f64, m_max: usize) -> Result<(Vec<f64>, f64)> {
    let half = bessel_i_scaled_sequence(0.5 * kappa, m_max)?;
    let full = bessel_i_scaled_sequence(kappa, 0)?[0];
    Ok((half, full))
}

/// Weight outside `|m| ≤ m_cut`: `2 Σ_{m > m_cut} I_m(κ/2)² / I₀(κ)`.
pub fn tail_mass(kappa: f64, m_cut: usize) -> Result<f64> {
    let extra = 64 + (8.0 * kappa.sqrt()).ceil() as usize;
    let (half, full) = scaled_parts(kappa, m_cut + extra)?;
    Ok(2.0 * half[m_cut + 1..].iter().map(|v| v * v).sum::<f64>() / full)
}

/// Mode spectrum on `|m| ≤ m_cut`; fails if the dropped tail exceeds
/// [`TAIL_TOL`].
pub fn vm_spectrum(state: &VonMisesState, m_cut: usize) -> Result<ModeSpectrum> {
    let tail = tail_mass(state.kappa, m_cut)?;
    if tail >= TAIL_TOL {
        return Err(Error::Truncation {
            m_cut: m_cut as i64,
            tail,
        });
    }
    let (half, full) = scaled_parts(state.kappa, m_cut)?;
    let kept = half[0] * half[0] + 2.0 * half[1..].iter().map(|v| v * v).sum::<f64>();
    let addition = (kept / full + tail - 1.0).abs();
    if addition > 1e-10 {
        return Err(Error::SolverInconsistency(format!(
            "Σ I_m(κ/2)² differs from I₀(κ) by {addition:.3e} at κ = {}",
            state.kappa
        )));
    }
    let m_cut = m_cut as i64;
    let amps = (-m_cut..=m_cut)
        .map(|m| {
            let a = half[m.unsigned_abs() as usize];
            Complex64::from_polar(a, m as f64 * state.mu)
        })
        .collect();
    ModeSpectrum::normalized(-m_cut, amps)
}

/// Smallest cutoff (at least 8) whose tail is below [`TAIL_TOL`].
pub fn auto_cutoff(kappa: f64) -> Result<usize> {
    let mut m_cut = 8;
    while tail_mass(kappa, m_cut)? >= TAIL_TOL {
        m_cut += 8;
    }
    Ok(m_cut)
}

pub fn vm_spectrum_auto(state: &VonMisesState) -> Result<ModeSpectrum> {
    vm_spectrum(state, auto_cutoff(state.kappa)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VonMisesMoments {
    pub dispersion_sq: f64,
    pub var_l: f64,
}

pub fn vm_moments(state: &VonMisesState) -> Result<VonMisesMoments> {
    moments_for_kappa(state.kappa)
}

fn moments_for_kappa(kappa: f64) -> Result<VonMisesMoments> {
    let s = bessel_i_scaled_sequence(kappa, 2)?;
    let r1 = s[1] / s[0];
    let r2 = s[2] / s[0];
    Ok(VonMisesMoments {
        dispersion_sq: (1.0 - r1 * r1).clamp(0.0, 1.0),
        var_l: (0.125 * kappa * kappa * (1.0 - r2)).max(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductRow {
    pub kappa: f64,
    pub d: f64,
    pub delta_l: f64,
    /// `D·ΔL`.
    pub product: f64,
}

/// `(κ, D, ΔL, D·ΔL)` rows sorted by decreasing `D`.
pub fn vm_product_curve(kappas: &[f64]) -> Result<Vec<ProductRow>> {
    let mut rows = kappas
        .iter()
        .map(|&kappa| {
            let m = vm_moments(&VonMisesState::with_kappa(kappa)?)?;
            let d = m.dispersion_sq.sqrt();
            let delta_l = m.var_l.sqrt();
            Ok(ProductRow {
                kappa,
                d,
                delta_l,
                product: d * delta_l,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.d.total_cmp(&a.d));
    Ok(rows)
}

/// Concentration whose von Mises state has the given `D²`.
pub fn kappa_for_dispersion(dispersion_sq: f64) -> Result<f64> {
    if !(dispersion_sq > 0.0 && dispersion_sq <= 1.0) {
        return Err(Error::Infeasible {
            value: dispersion_sq,
            min: 0.0,
            max: 1.0,
        });
    }
    if dispersion_sq == 1.0 {
        return Ok(0.0);
    }
    let f = |k: f64| moments_for_kappa(k).map(|m| m.dispersion_sq - dispersion_sq);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket { lo, hi });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestFit {
    pub kappa: f64,
    pub fidelity: f64,
}

const FIT_PROBES: usize = 64;

/// Concentration maximizing `|⟨Ψ_vm(κ)|ce₀⟩|²`, searched on
/// `[0, max(4q, 4√q) + 10]`: a coarse probe grid locates the peak (and must
/// rise then fall), golden-section search refines it.
pub fn best_fit_kappa(ground: &MathieuState) -> Result<BestFit> {
    if ground.order() != 0 || ground.parity() != Parity::Even {
        return Err(Error::param(
            "ground",
            "best fit needs the order-0 even state",
        ));
    }
    let target = ground.to_mode_spectrum()?;
    let q = ground.q();
    let upper = (4.0 * q).max(4.0 * q.sqrt()) + 10.0;
    let fidelity = |kappa: f64| -> Result<f64> { Ok(overlap_with(&target, kappa)?.norm_sqr()) };

    let probes = (0..=FIT_PROBES)
        .map(|i| {
            let k = upper * i as f64 / FIT_PROBES as f64;
            fidelity(k).map(|f| (k, f))
        })
        .collect::<Result<Vec<_>>>()?;
    let peak = (0..probes.len())
        .max_by(|&a, &b| probes[a].1.total_cmp(&probes[b].1))
        .unwrap_or(0);
    let flat = 1e-15;
    for i in 1..probes.len() {
        let rising = probes[i].1 >= probes[i - 1].1 - flat;
        let falling = probes[i].1 <= probes[i - 1].1 + flat;
        if (i <= peak && !rising) || (i > peak && !falling) {
            let j = i.clamp(1, probes.len() - 2);
            return Err(Error::NotUnimodal {
                probes: [probes[j - 1], probes[j], probes[j + 1]],
            });
        }
    }

    let mut lo = probes[peak.saturating_sub(1)].0;
    let mut hi = probes[(peak + 1).min(probes.len() - 1)].0;
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = fidelity(x1)?;
    let mut f2 = fidelity(x2)?;
    while hi - lo > 1e-10 * hi.max(1.0) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = fidelity(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = fidelity(x1)?;
        }
    }
    let kappa = 0.5 * (lo + hi);
    Ok(BestFit {
        kappa,
        fidelity: fidelity(kappa)?,
    })
}

/// `⟨Ψ_vm(κ, μ = π)|target⟩` using only the modes in the target's window;
/// the von Mises normalization comes from `I₀(κ)` and covers all modes.
fn overlap_with(target: &ModeSpectrum, kappa: f64) -> Result<Complex64> {
    let reach = target
        .m_min()
        .unsigned_abs()
        .max(target.m_max().unsigned_abs()) as usize;
    let (half, full) = scaled_parts(kappa, reach)?;
    let norm = full.sqrt();
    Ok(target
        .modes()
        .map(|(m, c)| {
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            sign * half[m.unsigned_abs() as usize] / norm * c
        })
        .sum())
}
