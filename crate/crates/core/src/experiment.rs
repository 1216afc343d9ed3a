//! Simulated helicity-scan measurement.
//!
//! A prepared beam is read out mode by mode for helicities `|m| ≤ n_max`:
//! the on-axis power after adding `e^{imφ}` is proportional to `|c_m|²`.
//! Each setting records a Poisson count with mean `shots · w_m`, where `w`
//! are the true weights truncated to the window and renormalized. Weights,
//! `(ΔL)²`, `D²` and the products are estimated per repeat, then averaged
//! with standard errors.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::optimizer::{min_state, ConstraintTarget};
use crate::states::{dispersion_sq, ModeSpectrum, UncertaintyReport};
use crate::vonmises::{kappa_for_dispersion, vm_moments, vm_spectrum_auto, VonMisesState};

/// How the dispersion of a measured point is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DEstimator {
    /// Exact `D²` of the prepared state.
    #[default]
    Nominal,
    /// `D²` from amplitudes `√w_m`, assuming they are real and non-negative
    /// up to an alternating sign.
    Reconstructed,
}

impl FromStr for DEstimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nominal" => Ok(Self::Nominal),
            "reconstructed" => Ok(Self::Reconstructed),
            other => Err(format!(
                "unknown estimator `{other}` (expected nominal or reconstructed)"
            )),
        }
    }
}

impl fmt::Display for DEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Nominal => "nominal",
            Self::Reconstructed => "reconstructed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementConfig {
    pub n_max: u32,
    /// Expected count per helicity setting; `f64::INFINITY` reads out the
    /// exact weights.
    pub shots: f64,
    pub repeats: usize,
    pub seed: u64,
    pub d_estimator: DEstimator,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            n_max: 20,
            shots: 1e4,
            repeats: 50,
            seed: 1,
            d_estimator: DEstimator::Nominal,
        }
    }
}

impl MeasurementConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::param("n_max", "must be at least 1"));
        }
        if !(self.shots > 0.0) {
            return Err(Error::param(
                "shots",
                format!("must be positive, got {}", self.shots),
            ));
        }
        if self.repeats < 1 {
            return Err(Error::param("repeats", "must be at least 1"));
        }
        Ok(())
    }

    pub fn noiseless(&self) -> bool {
        self.shots.is_infinite()
    }
}

/// Mean over repeats and its standard error (sample standard deviation
/// over `√n`; zero for a single repeat).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        if samples.is_empty() {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return Self { mean, std_err: 0.0 };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            std_err: (var / n).sqrt(),
        }
    }

    /// Distance from `value` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.mean - value).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_err
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    /// Helicity of the first weight entry, `−n_max`.
    pub m_min: i64,
    /// Window-truncated, renormalized weights of the prepared state.
    pub true_weights: Vec<f64>,
    /// Estimated weights of each kept repeat.
    pub repeat_weights: Vec<Vec<f64>>,
    pub mean_weights: Vec<f64>,
    pub var_l: Estimate,
    pub dispersion_sq: Estimate,
    /// `D²·(ΔL)²`.
    pub product: Estimate,
    /// `D·ΔL`.
    pub product_linear: Estimate,
    /// Indices of repeats that recorded no counts at all.
    pub discarded: Vec<usize>,
}

struct RepeatEstimate {
    weights: Vec<f64>,
    var_l: f64,
    dispersion_sq: f64,
}

/// Simulates `config.repeats` helicity scans of `state`.
pub fn measure(state: &ModeSpectrum, config: &MeasurementConfig) -> Result<MeasurementRecord> {
    config.validate()?;
    let n = config.n_max as i64;
    let mut true_weights: Vec<f64> = (-n..=n).map(|m| state.amplitude(m).norm_sqr()).collect();
    let kept: f64 = true_weights.iter().sum();
    if !(kept > 0.0) {
        return Err(Error::param(
            "state",
            "no weight inside the helicity window",
        ));
    }
    true_weights.iter_mut().for_each(|w| *w /= kept);
    let nominal_d2 = dispersion_sq(state);

    let repeats: Vec<Option<RepeatEstimate>> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let weights = if config.noiseless() {
                true_weights.clone()
            } else {
                let mut rng = RngStream::substream(config.seed, r as u64);
                let counts: Vec<f64> = true_weights
                    .iter()
                    .map(|w| rng.poisson(config.shots * w) as f64)
                    .collect();
                let total: f64 = counts.iter().sum();
                if total == 0.0 {
                    return None;
                }
                counts.iter().map(|c| c / total).collect()
            };
            let dispersion_sq = match config.d_estimator {
                DEstimator::Nominal => nominal_d2,
                DEstimator::Reconstructed => reconstructed_dispersion_sq(&weights),
            };
            Some(RepeatEstimate {
                var_l: weight_variance(-n, &weights),
                dispersion_sq,
                weights,
            })
        })
        .collect();

    let discarded: Vec<usize> = repeats
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(i, _)| i)
        .collect();
    let kept: Vec<RepeatEstimate> = repeats.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::NoCounts);
    }

    let column = |f: &dyn Fn(&RepeatEstimate) -> f64| kept.iter().map(f).collect::<Vec<f64>>();
    let var_l = column(&|r| r.var_l);
    let d2 = column(&|r| r.dispersion_sq);
    let product = column(&|r| r.var_l * r.dispersion_sq);
    let product_linear = column(&|r| (r.var_l * r.dispersion_sq).sqrt());

    let width = true_weights.len();
    let mut mean_weights = vec![0.0; width];
    for r in &kept {
        mean_weights
            .iter_mut()
            .zip(&r.weights)
            .for_each(|(acc, w)| *acc += w);
    }
    let total: f64 = mean_weights.iter().sum();
    mean_weights.iter_mut().for_each(|w| *w /= total);

    Ok(MeasurementRecord {
        m_min: -n,
        true_weights,
        repeat_weights: kept.iter().map(|r| r.weights.clone()).collect(),
        mean_weights,
        var_l: Estimate::from_samples(&var_l),
        dispersion_sq: Estimate::from_samples(&d2),
        product: Estimate::from_samples(&product),
        product_linear: Estimate::from_samples(&product_linear),
        discarded,
    })
}

fn weight_variance(m_min: i64, weights: &[f64]) -> f64 {
    let label = |i: usize| (m_min + i as i64) as f64;
    let mean: f64 = weights.iter().enumerate().map(|(i, w)| label(i) * w).sum();
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| (label(i) - mean).powi(2) * w)
        .sum::<f64>()
        .max(0.0)
}

fn reconstructed_dispersion_sq(weights: &[f64]) -> f64 {
    let r: f64 = weights.windows(2).map(|p| (p[0] * p[1]).sqrt()).sum();
    (1.0 - r * r).clamp(0.0, 1.0)
}

/// Prepared von Mises beam with concentration `kappa`.
pub fn prepared_beam(kappa: f64) -> Result<ModeSpectrum> {
    vm_spectrum_auto(&VonMisesState::with_kappa(kappa)?)
}

/// One theory point at a fixed dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryRow {
    /// `q*` for the Mathieu curve, `κ` for the von Mises curve.
    pub parameter: f64,
    pub d: f64,
    pub dispersion_sq: f64,
    pub var_l: f64,
    /// `D·ΔL`.
    pub product: f64,
    /// `D²(ΔL)²`.
    pub product_sq: f64,
    /// `√(1 − D²)/2`.
    pub bound: f64,
    /// `(1 − D²)/4`.
    pub bound_sq: f64,
}

impl TheoryRow {
    fn new(parameter: f64, dispersion_sq: f64, var_l: f64) -> Self {
        let product_sq = dispersion_sq * var_l;
        let bound_sq = 0.25 * (1.0 - dispersion_sq);
        Self {
            parameter,
            d: dispersion_sq.sqrt(),
            dispersion_sq,
            var_l,
            product: product_sq.sqrt(),
            product_sq,
            bound: bound_sq.sqrt(),
            bound_sq,
        }
    }
}

/// Constrained minimum (fundamental Mathieu) state at dispersion `d`.
pub fn mathieu_row(d: f64) -> Result<TheoryRow> {
    let r = min_state(&ConstraintTarget::fixed_dispersion(d * d)?, 0)?;
    Ok(TheoryRow::new(r.q, r.report.dispersion_sq, r.report.var_l))
}

/// Von Mises state at dispersion `d`.
pub fn vonmises_row(d: f64) -> Result<TheoryRow> {
    let kappa = kappa_for_dispersion(d * d)?;
    let m = vm_moments(&VonMisesState::with_kappa(kappa)?)?;
    Ok(TheoryRow::new(kappa, m.dispersion_sq, m.var_l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulatedPoint {
    pub kappa: f64,
    /// Estimated `D` (square root of the mean `D²` estimate).
    pub d: f64,
    /// Estimated `D·ΔL` with its standard error.
    pub product: f64,
    pub product_err: f64,
    pub product_sq: f64,
    pub product_sq_err: f64,
    pub discarded: usize,
}

pub fn simulate_point(kappa: f64, config: &MeasurementConfig) -> Result<SimulatedPoint> {
    let record = measure(&prepared_beam(kappa)?, config)?;
    Ok(SimulatedPoint {
        kappa,
        d: record.dispersion_sq.mean.sqrt(),
        product: record.product_linear.mean,
        product_err: record.product_linear.std_err,
        product_sq: record.product.mean,
        product_sq_err: record.product.std_err,
        discarded: record.discarded.len(),
    })
}

/// Simulated points in input order.
pub fn simulate_points(kappas: &[f64], config: &MeasurementConfig) -> Result<Vec<SimulatedPoint>> {
    kappas
        .par_iter()
        .map(|&k| simulate_point(k, config))
        .collect()
}

/// Evenly spaced `D` values on `[d_min, d_max]`, ascending.
pub fn dispersion_grid(d_min: f64, d_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(d_min > 0.0 && d_min < d_max && d_max <= 1.0) {
        return Err(Error::InvalidGrid(format!(
            "need 0 < d_min < d_max <= 1, got [{d_min}, {d_max}]"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidGrid("need at least two points".into()));
    }
    let step = (d_max - d_min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                d_max
            } else {
                d_min + step * i as f64
            }
        })
        .collect())
}

/// Concentrations whose von Mises beams have the given dispersions.
pub fn kappas_for_dispersions(ds: &[f64]) -> Result<Vec<f64>> {
    ds.iter().map(|d| kappa_for_dispersion(d * d)).collect()
}

/// Default experimental grid: 12 beams with `D` evenly spread over
/// `[0.1, 0.99]`.
pub fn default_kappas() -> Result<Vec<f64>> {
    kappas_for_dispersions(&dispersion_grid(0.1, 0.99, 12)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure1Dataset {
    pub mathieu: Vec<TheoryRow>,
    pub vonmises: Vec<TheoryRow>,
    /// `D·ΔL` of von Mises minus Mathieu at each grid point.
    pub difference: Vec<f64>,
    pub points: Vec<SimulatedPoint>,
}

impl Figure1Dataset {
    pub fn max_difference(&self) -> f64 {
        self.difference
            .iter()
            .copied()
            .fold(0.0, |a: f64, b| a.max(b.abs()))
    }
}

/// Theory curves on `grid` plus simulated points for `kappas`.
pub fn figure1_dataset(
    grid: &[f64],
    kappas: &[f64],
    config: &MeasurementConfig,
) -> Result<Figure1Dataset> {
    let mathieu: Vec<TheoryRow> = grid
        .par_iter()
        .map(|&d| mathieu_row(d))
        .collect::<Result<_>>()?;
    let vonmises: Vec<TheoryRow> = grid
        .par_iter()
        .map(|&d| vonmises_row(d))
        .collect::<Result<_>>()?;
    let difference = mathieu
        .iter()
        .zip(&vonmises)
        .map(|(m, v)| v.product - m.product)
        .collect();
    Ok(Figure1Dataset {
        mathieu,
        vonmises,
        difference,
        points: simulate_points(kappas, config)?,
    })
}

/// Exact von Mises report (no truncation, no noise).
pub fn vm_report(kappa: f64) -> Result<UncertaintyReport> {
    let m = vm_moments(&VonMisesState::with_kappa(kappa)?)?;
    UncertaintyReport::from_moments(m.dispersion_sq, m.var_l, 0.0)
}
