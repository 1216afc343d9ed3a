//! Constrained minimum-uncertainty states.
//!
//! Minimizing `D²(ΔL)²` at fixed `D²` or fixed `(ΔL)²` leads, after removing
//! the mean angular momentum, to the ground state of `L̂² + (q/2) cos φ`,
//! i.e. `ce₀(φ/2, q)`. The multiplier `q` is found by scalar root finding on
//! the monotone maps `q ↦ D²(q)` (decreasing) and `q ↦ (ΔL)²(q)`
//! (increasing). A non-zero mean `m̄` is restored by relabeling modes, which
//! is multiplication of the wavefunction by a phase `e^{±im̄φ}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mathieu::{solve, MathieuState, Parity, DEFAULT_TOL};
use crate::numerics::RngStream;
use crate::states::{
    mathieu_functionals, mean_expiphi, report, MathieuFunctionals, ModeSpectrum, UncertaintyReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    FixedDispersion,
    FixedVarL,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintTarget {
    pub kind: ConstraintKind,
    pub value: f64,
}

impl ConstraintTarget {
    /// `D²` in `(0, 1]`.
    pub fn fixed_dispersion(value: f64) -> Result<Self> {
        if !(value > 0.0 && value <= 1.0) {
            return Err(Error::Infeasible {
                value,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(Self {
            kind: ConstraintKind::FixedDispersion,
            value,
        })
    }

    /// `(ΔL)² ≥ 0`.
    pub fn fixed_var_l(value: f64) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::Infeasible {
                value,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        Ok(Self {
            kind: ConstraintKind::FixedVarL,
            value,
        })
    }
}

/// Largest multiplier the root finder will try.
pub const Q_MAX: f64 = 1e7;
const MAX_BISECTIONS: usize = 80;
const ROUND_TRIP_TOL: f64 = 1e-9;

pub fn ground_state(q: f64) -> Result<MathieuState> {
    solve(0, q, Parity::Even, DEFAULT_TOL)
}

pub fn ground_functionals(q: f64) -> Result<MathieuFunctionals> {
    mathieu_functionals(&ground_state(q)?)
}

impl ConstraintTarget {
    fn measure(&self, f: &MathieuFunctionals) -> f64 {
        match self.kind {
            ConstraintKind::FixedDispersion => f.dispersion_sq,
            ConstraintKind::FixedVarL => f.var_l,
        }
    }

    /// Oriented residual: non-negative at `q = 0`, decreasing in `q`.
    fn residual(&self, q: f64) -> Result<f64> {
        let f = ground_functionals(q)?;
        let diff = self.measure(&f) - self.value;
        Ok(match self.kind {
            ConstraintKind::FixedDispersion => diff,
            ConstraintKind::FixedVarL => -diff,
        })
    }

    fn attainable(&self) -> Result<(f64, f64)> {
        let f = ground_functionals(Q_MAX)?;
        Ok(match self.kind {
            ConstraintKind::FixedDispersion => (f.dispersion_sq, 1.0),
            ConstraintKind::FixedVarL => (0.0, f.var_l),
        })
    }
}

/// Multiplier `q*` at which the ground state meets the target.
///
/// The bracket starts at `[0, 1]` and grows by a factor 4 up to [`Q_MAX`];
/// bisection then runs at most 80 steps. Every new evaluation must lie
/// between its bracket values, otherwise the monotonicity the search relies
/// on is broken and the call fails.
pub fn solve_multiplier(target: &ConstraintTarget) -> Result<f64> {
    let at_zero = target.residual(0.0)?;
    if at_zero <= 0.0 {
        return Ok(0.0);
    }
    let slack = 1e-12 * target.value.abs().max(1.0);
    let (mut lo, mut h_lo) = (0.0, at_zero);
    let mut hi = 1.0;
    let mut h_hi = target.residual(hi)?;
    while h_hi > 0.0 {
        if h_hi > h_lo + slack {
            return Err(non_monotone(lo, hi));
        }
        if hi >= Q_MAX {
            let (min, max) = target.attainable()?;
            return Err(Error::Infeasible {
                value: target.value,
                min,
                max,
            });
        }
        lo = hi;
        h_lo = h_hi;
        hi = (hi * 4.0).min(Q_MAX);
        h_hi = target.residual(hi)?;
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let h_mid = target.residual(mid)?;
        if h_mid > h_lo + slack || h_mid < h_hi - slack {
            return Err(non_monotone(lo, hi));
        }
        if h_mid > 0.0 {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
            h_hi = h_mid;
        }
    }
    // pick the end closer to the target
    Ok(if h_lo.abs() <= h_hi.abs() { lo } else { hi })
}

fn non_monotone(lo: f64, hi: f64) -> Error {
    Error::SolverInconsistency(format!("constraint map not monotone on [{lo}, {hi}]"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinState {
    pub q: f64,
    pub state: ModeSpectrum,
    pub report: UncertaintyReport,
}

/// Minimum-uncertainty state for `target` with mean angular momentum `mean_m`.
pub fn min_state(target: &ConstraintTarget, mean_m: i64) -> Result<MinState> {
    let q = solve_multiplier(target)?;
    let state = shift_mean(&ground_state(q)?.to_mode_spectrum()?, mean_m);
    let report = report(&state)?;
    let achieved = match target.kind {
        ConstraintKind::FixedDispersion => report.dispersion_sq,
        ConstraintKind::FixedVarL => report.var_l,
    };
    let miss = (achieved - target.value).abs();
    if miss > ROUND_TRIP_TOL * target.value.abs().max(1.0) {
        return Err(Error::SolverInconsistency(format!(
            "round trip missed target {} by {miss:.3e}",
            target.value
        )));
    }
    Ok(MinState { q, state, report })
}

/// Relabels `m → m + mbar`, which multiplies the wavefunction by a phase.
pub fn shift_mean(state: &ModeSpectrum, mbar: i64) -> ModeSpectrum {
    state.relabeled(mbar)
}

/// Half-width of the random trial support, matching the measured helicities.
pub const TRIAL_HALF_WIDTH: i64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditOutcome {
    /// `+∞` when no trial survived projection.
    pub min_trial_product: f64,
    pub mathieu_product: f64,
    pub accepted: usize,
    pub discarded: usize,
}

impl AuditOutcome {
    pub fn optimal(&self, slack: f64) -> bool {
        self.min_trial_product >= self.mathieu_product - slack
    }

    pub fn excessive_discards(&self) -> bool {
        2 * self.discarded > self.accepted + self.discarded
    }
}

/// Compares the ground state at `q` with `trials` random symmetric states
/// projected onto the same `⟨cos φ⟩` (hence the same `D²`). Trial `i` draws
/// from the sub-stream `seed ^ i`.
pub fn variational_audit(q: f64, trials: usize, seed: u64) -> Result<AuditOutcome> {
    if !(q > 0.0) {
        return Err(Error::param("q", "audit needs q > 0"));
    }
    let ground = ground_state(q)?.to_mode_spectrum()?;
    let base = report(&ground)?;
    let theta = mean_expiphi(&ground).re;
    let spread = base.var_l.sqrt().max(0.25);

    let products: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::substream(seed, i as u64);
            let trial = random_trial(&mut rng, spread)?;
            match project_to_theta(&trial, theta)? {
                Some(state) => Ok(Some(report(&state)?.product)),
                None => Ok(None),
            }
        })
        .collect::<Result<_>>()?;

    let accepted: Vec<f64> = products.iter().flatten().copied().collect();
    Ok(AuditOutcome {
        min_trial_product: accepted.iter().copied().fold(f64::INFINITY, f64::min),
        mathieu_product: base.product,
        accepted: accepted.len(),
        discarded: trials - accepted.len(),
    })
}

/// Symmetric (`c₋ₘ = cₘ`, hence `⟨L⟩ = 0` and real `⟨Ê⟩`) random state with
/// a noisy Gaussian envelope peaked at `φ = π`. The envelope is mostly wider
/// in `m` than the target so the state starts sharper in angle.
fn random_trial(rng: &mut RngStream, spread: f64) -> Result<ModeSpectrum> {
    let width = spread * (0.8 + 2.2 * rng.uniform());
    let noise = 0.5 * rng.uniform();
    let twist = 0.4 * rng.uniform();
    let half: Vec<Complex64> = (0..=TRIAL_HALF_WIDTH)
        .map(|m| {
            let envelope = (-(m * m) as f64 / (4.0 * width * width)).exp();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let magnitude = sign * envelope * (1.0 + noise * rng.normal());
            Complex64::from_polar(magnitude, twist * rng.normal())
        })
        .collect();
    symmetric_spectrum(&half)
}

fn symmetric_spectrum(half: &[Complex64]) -> Result<ModeSpectrum> {
    let w = half.len() as i64 - 1;
    let amps = (-w..=w).map(|m| half[m.unsigned_abs() as usize]).collect();
    ModeSpectrum::normalized(-w, amps)
}

/// Mixes `state` with the uniform state `|0⟩`,
/// `ψ(t) ∝ (1 − t) ψ + t |0⟩`, and bisects `t ∈ [0, 1]` until
/// `Re⟨Ê⟩ = theta`. Needs `Re⟨Ê⟩(ψ) ≤ theta < 0`; otherwise `None`.
fn project_to_theta(state: &ModeSpectrum, theta: f64) -> Result<Option<ModeSpectrum>> {
    let start = mean_expiphi(state).re - theta;
    if start > 0.0 || theta >= 0.0 {
        return Ok(None);
    }
    if start == 0.0 {
        return Ok(Some(state.clone()));
    }
    let lo_m = state.m_min().min(0);
    let hi_m = state.m_max().max(0);
    let mix = |t: f64| -> Result<ModeSpectrum> {
        let amps = (lo_m..=hi_m)
            .map(|m| {
                let uniform = if m == 0 { t } else { 0.0 };
                state.amplitude(m) * (1.0 - t) + uniform
            })
            .collect();
        ModeSpectrum::normalized(lo_m, amps)
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_expiphi(&mix(mid)?).re - theta < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(mix(0.5 * (lo + hi))?))
}

/// Products of the ground state and of its projected perturbation
/// `ψ ± ε δ` along a random symmetric direction `δ`.
pub fn stationarity_probe(q: f64, epsilon: f64, seed: u64) -> Result<(f64, f64)> {
    let ground = ground_state(q)?.to_mode_spectrum()?;
    let base = report(&ground)?;
    let theta = mean_expiphi(&ground).re;
    let w = ground.m_max().max(TRIAL_HALF_WIDTH);

    let mut rng = RngStream::substream(seed, 0);
    let half: Vec<Complex64> = (0..=w)
        .map(|_| Complex64::new(rng.normal(), rng.normal()))
        .collect();
    let direction = symmetric_spectrum(&half)?;

    for sign in [1.0, -1.0] {
        let amps = (-w..=w)
            .map(|m| ground.amplitude(m) + sign * epsilon * direction.amplitude(m))
            .collect();
        let perturbed = ModeSpectrum::normalized(-w, amps)?;
        if let Some(projected) = project_to_theta(&perturbed, theta)? {
            return Ok((base.product, report(&projected)?.product));
        }
    }
    Err(Error::SolverInconsistency(
        "perturbation could not be projected onto the constraint".into(),
    ))
}
