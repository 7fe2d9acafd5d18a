//! Signaling time, signal duration and signal amplitude, with and without
//! feedback, plus the per-step variants.
//!
//! All three quantities come from log-derivatives of the output transform at
//! `s = 0`. With feedback the stage-product denominator `D(s) = prod(s +
//! beta_i) - E` couples the stages; the closed forms below are obtained by
//! differentiating `-ln D` directly, writing everything in terms of the
//! ratio `E / prod(beta_i)` so no large products are formed.

use crate::model::{Cascade, InputMoments, InputSignal, ModelError, NormConvention, SignalMetrics};
use crate::xfer;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error(transparent)]
    Input(#[from] ModelError),
    #[error("feedback strength at or beyond the stability bound")]
    UnstableFeedback,
    /// With `leak = 0` the output moments diverge; the per-step variants up
    /// to `X_n` remain available through [`step_metrics`].
    #[error("output-stage moments are undefined for leak = 0")]
    PureIntegrator,
    #[error("stage index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("per-step metrics are defined only without feedback")]
    FeedbackUnsupported,
}

/// Moments of an input signal; see [`InputSignal::moments`].
pub fn input_moments(r: &InputSignal) -> Result<InputMoments, ModelError> {
    r.moments()
}

/// `(m1, q)` of the input; the impulse has both zero even though its norm is
/// unbounded.
fn log_moments(r: &InputSignal) -> Result<(f64, f64), MetricsError> {
    match r {
        InputSignal::Impulse => Ok((0.0, 0.0)),
        _ => {
            let m = r.moments()?;
            Ok((m.m1, m.q))
        }
    }
}

/// Ratio `E / prod(beta_i)` of the feedback term to the off-rate product, or
/// an error past the stability bound.
fn feedback_ratio(c: &Cascade) -> Result<f64, MetricsError> {
    match c.ln_feedback_term() {
        None => Ok(0.0),
        Some(ln_e) => {
            let ratio = (ln_e - c.ln_beta_product()).exp();
            if ratio >= 1.0 {
                Err(MetricsError::UnstableFeedback)
            } else {
                Ok(ratio)
            }
        }
    }
}

/// Signaling time `tau = 1/leak + sum(1/beta_i) - m1`, with the stage sum
/// scaled by `1/(1 - E/P)` under feedback.
pub fn signaling_time(c: &Cascade, r: &InputSignal) -> Result<f64, MetricsError> {
    if c.leak() == 0.0 {
        return Err(MetricsError::PureIntegrator);
    }
    let (m1, _) = log_moments(r)?;
    let ratio = feedback_ratio(c)?;
    let s1: f64 = c.beta().iter().map(|b| 1.0 / b).sum();
    Ok(1.0 / c.leak() + s1 / (1.0 - ratio) - m1)
}

/// Squared cascade contribution to the duration. Without feedback this is
/// `sum(1/beta_i^2)`; with feedback the denominator derivative adds a
/// cross-term over ordered stage pairs.
fn cascade_sigma_sq(c: &Cascade) -> Result<f64, MetricsError> {
    let ratio = feedback_ratio(c)?;
    let s1: f64 = c.beta().iter().map(|b| 1.0 / b).sum();
    let s2: f64 = c.beta().iter().map(|b| 1.0 / (b * b)).sum();
    let cross = s1 * s1 - s2; // sum over ordered pairs i != j of 1/(beta_i beta_j)
    let one_minus = 1.0 - ratio;
    Ok((s2 + ratio * cross) / (one_minus * one_minus))
}

/// Signal duration `sigma = sqrt(1/leak^2 + sigma_cascade^2 + q)`.
pub fn signal_duration(c: &Cascade, r: &InputSignal) -> Result<f64, MetricsError> {
    if c.leak() == 0.0 {
        return Err(MetricsError::PureIntegrator);
    }
    let (_, q) = log_moments(r)?;
    let core = cascade_sigma_sq(c)?;
    Ok((1.0 / (c.leak() * c.leak()) + core + q).sqrt())
}

/// Signal amplitude `A = K * ||R||_2 / sigma` under the chosen norm
/// convention.
pub fn signal_amplitude(
    c: &Cascade,
    r: &InputSignal,
    convention: NormConvention,
) -> Result<f64, MetricsError> {
    let m = r.moments()?;
    let norm = match convention {
        NormConvention::Exact => m.norm2,
        NormConvention::PaperFigure => m.norm2_paper,
    };
    let k = xfer::hinf_norm(c).map_err(|e| match e {
        xfer::XferError::InfiniteGain => MetricsError::PureIntegrator,
        _ => MetricsError::UnstableFeedback,
    })?;
    let sigma = signal_duration(c, r)?;
    Ok(k * norm / sigma)
}

/// Signaling time and duration measured at stage `i` (1-based), no feedback.
pub fn step_metrics(c: &Cascade, r: &InputSignal, i: usize) -> Result<(f64, f64), MetricsError> {
    if c.feedback() > 0.0 {
        return Err(MetricsError::FeedbackUnsupported);
    }
    if i == 0 || i > c.n() {
        return Err(MetricsError::IndexOutOfRange { index: i, n: c.n() });
    }
    let (m1, q) = log_moments(r)?;
    let tau: f64 = c.beta()[..i].iter().map(|b| 1.0 / b).sum::<f64>() - m1;
    let sigma = (c.beta()[..i].iter().map(|b| 1.0 / (b * b)).sum::<f64>() + q).sqrt();
    Ok((tau, sigma))
}

/// Cascade-only duration term `sigma_0 = sum(1/beta_i^2)`.
pub fn sigma0(c: &Cascade) -> f64 {
    c.beta().iter().map(|b| 1.0 / (b * b)).sum()
}

/// All output metrics in one report.
pub fn signal_metrics(
    c: &Cascade,
    r: &InputSignal,
    convention: NormConvention,
) -> Result<SignalMetrics, MetricsError> {
    Ok(SignalMetrics {
        gain: xfer::hinf_norm(c).map_err(|e| match e {
            xfer::XferError::InfiniteGain => MetricsError::PureIntegrator,
            _ => MetricsError::UnstableFeedback,
        })?,
        tau: signaling_time(c, r)?,
        sigma: signal_duration(c, r)?,
        amplitude: signal_amplitude(c, r, convention)?,
        sigma0: sigma0(c),
    })
}
