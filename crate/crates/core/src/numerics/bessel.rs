//! Modified Bessel functions of the first kind, integer order.
//!
//! Small arguments use the ascending power series. Larger arguments use
//! Miller's downward recurrence `I_{k−1} = (2k/x) I_k + I_{k+1}`, normalized
//! with the generating-function identity `eˣ = I₀(x) + 2 Σ_{k≥1} I_k(x)`,
//! which yields the exponentially scaled values `e^{−x} I_k(x)` directly and
//! never overflows.

use crate::error::{Error, Result};

/// Largest order accepted by [`bessel_i`] and [`bessel_i_scaled`].
pub const MAX_ORDER: u32 = 128;

const SERIES_LIMIT: f64 = 1.0;
const RESCALE: f64 = 1e200;

fn check_argument(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::OutOfDomain(format!(
            "Bessel argument must be finite and non-negative, got {x}"
        )));
    }
    Ok(())
}

fn check_order(order: u32) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::OutOfDomain(format!(
            "Bessel order {order} exceeds {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// `I_n(x)`. Fails when the result overflows `f64`.
pub fn bessel_i(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    check_argument(x)?;
    if x <= SERIES_LIMIT {
        return Ok(series(order, x));
    }
    let scaled = bessel_i_scaled(order, x)?;
    let value = scaled * x.exp();
    if !value.is_finite() {
        return Err(Error::OutOfDomain(format!("I_{order}({x}) overflows")));
    }
    Ok(value)
}

/// `e^{−x} I_n(x)`.
pub fn bessel_i_scaled(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    check_argument(x)?;
    Ok(scaled_sequence(x, order as usize)[order as usize])
}

/// `e^{−x} I_k(x)` for `k = 0..=max_order`. No order cap applies here; this is
/// the entry point for long spectra such as von Mises mode amplitudes.
pub fn bessel_i_scaled_sequence(x: f64, max_order: usize) -> Result<Vec<f64>> {
    check_argument(x)?;
    Ok(scaled_sequence(x, max_order))
}

fn scaled_sequence(x: f64, max_order: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; max_order + 1];
        out[0] = 1.0;
        return out;
    }
    if x <= SERIES_LIMIT {
        let damp = (-x).exp();
        return (0..=max_order)
            .map(|k| series(k as u32, x) * damp)
            .collect();
    }
    miller(x, max_order)
}

fn series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=order {
        lead *= half / k as f64;
    }
    if lead == 0.0 {
        return 0.0;
    }
    let quarter_sq = half * half;
    let mut term = lead;
    let mut sum = lead;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= quarter_sq / (k * (k + order as f64));
        sum += term;
        if term <= 1e-17 * sum {
            return sum;
        }
    }
}

/// Starting index for the downward recurrence: beyond both the requested
/// order and the point where `I_k(x)/I₀(x)` has fallen below ~1e−20.
fn start_index(x: f64, max_order: usize) -> usize {
    let spread = (100.0 * x).sqrt().ceil() as usize;
    max_order.max(x.ceil() as usize / 4) + spread + 32
}

fn miller(x: f64, max_order: usize) -> Vec<f64> {
    let start = start_index(x, max_order);
    let mut out = vec![0.0; max_order + 1];
    let mut above = 0.0; // f_{k+1}
    let mut current = 1e-30; // f_k
    let mut norm = 0.0; // 2 Σ_{j ≥ k+1} f_j accumulated so far
    for k in (1..=start).rev() {
        if k <= max_order {
            out[k] = current;
        }
        norm += 2.0 * current;
        let below = (2.0 * k as f64 / x) * current + above;
        above = current;
        current = below;
        if current > RESCALE {
            let s = 1.0 / RESCALE;
            current *= s;
            above *= s;
            norm *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    out[0] = current;
    norm += current;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}
