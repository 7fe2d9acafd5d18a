//! Frequency-domain core: transfer-function evaluation, internal gain,
//! amplification test and frequency sweeps.
//!
//! The cascade transfer function is the product of the per-stage factors
//! `alpha_i / (s + beta_i)` and the output-stage factor `1 / (s + leak)`;
//! feedback subtracts `eps * alpha_2 ... alpha_n` inside the stage-product
//! denominator. Rate products are accumulated in log-space so long cascades
//! neither overflow nor underflow.

use crate::model::Cascade;
use crate::par;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum XferError {
    /// Evaluation requested at (or within roundoff of) a pole.
    #[error("transfer function evaluated at a pole (|denominator| = {denominator_magnitude:e})")]
    PoleEvaluation { denominator_magnitude: f64 },
    /// With a pure integrator output stage the internal gain is unbounded;
    /// use [`truncated_gain`] for the gain up to the last kinase instead.
    #[error("internal gain is infinite for leak = 0; the truncated cascade gain is still defined")]
    InfiniteGain,
    /// The feedback term reaches or exceeds the off-rate product.
    #[error("feedback strength at or beyond the stability bound")]
    UnstableFeedback,
}

/// Rational transfer function of a cascade in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    /// `alpha_1 ... alpha_n`.
    pub numerator_gain: f64,
    /// Pole offsets `(beta_1, ..., beta_n, leak)`; the leak entry is last.
    pub pole_offsets: Vec<f64>,
    /// `eps * alpha_2 ... alpha_n`, subtracted inside the stage product.
    pub feedback_term: f64,
}

/// Assemble the factored transfer function of `c`.
pub fn build_transfer(c: &Cascade) -> TransferFunction {
    let mut pole_offsets = c.beta().to_vec();
    pole_offsets.push(c.leak());
    TransferFunction {
        numerator_gain: c.ln_alpha_product().exp(),
        pole_offsets,
        feedback_term: c.ln_feedback_term().map_or(0.0, f64::exp),
    }
}

impl TransferFunction {
    fn stage_denominator(&self, s: Complex64) -> Complex64 {
        let n = self.pole_offsets.len() - 1;
        let mut prod = Complex64::new(1.0, 0.0);
        for &b in &self.pole_offsets[..n] {
            prod *= s + b;
        }
        prod - self.feedback_term
    }

    /// `G(s) = gain / [(s + leak) (prod_i (s + beta_i) - feedback_term)]`.
    pub fn eval(&self, s: Complex64) -> Result<Complex64, XferError> {
        let leak = *self.pole_offsets.last().unwrap();
        let den = (s + leak) * self.stage_denominator(s);
        if den.norm() < 1e-12 * (1.0 + self.numerator_gain.abs()) {
            return Err(XferError::PoleEvaluation {
                denominator_magnitude: den.norm(),
            });
        }
        Ok(self.numerator_gain / den)
    }
}

/// Convenience wrapper for [`TransferFunction::eval`].
pub fn eval_transfer(tf: &TransferFunction, s: Complex64) -> Result<Complex64, XferError> {
    tf.eval(s)
}

/// Internal gain `sup_omega |G(j omega)|`, attained at `omega = 0`:
/// `(1/leak) * alpha_1...alpha_n / (beta_1...beta_n - eps alpha_2...alpha_n)`.
pub fn hinf_norm(c: &Cascade) -> Result<f64, XferError> {
    if c.leak() == 0.0 {
        return Err(XferError::InfiniteGain);
    }
    let ln_p = c.ln_beta_product();
    let base = (c.ln_alpha_product() - ln_p - c.leak().ln()).exp();
    match c.ln_feedback_term() {
        None => Ok(base),
        Some(ln_e) => {
            let ratio = (ln_e - ln_p).exp();
            if ratio >= 1.0 {
                Err(XferError::UnstableFeedback)
            } else {
                Ok(base / (1.0 - ratio))
            }
        }
    }
}

/// Gain of the truncated cascade ending at the last kinase `X_n`, defined
/// even when `leak = 0`.
pub fn truncated_gain(c: &Cascade) -> Result<f64, XferError> {
    let ln_p = c.ln_beta_product();
    match c.ln_feedback_term() {
        None => Ok((c.ln_alpha_product() - ln_p).exp()),
        Some(ln_e) => {
            let ratio = (ln_e - ln_p).exp();
            if ratio >= 1.0 {
                Err(XferError::UnstableFeedback)
            } else {
                Ok((c.ln_alpha_product() - ln_p).exp() / (1.0 - ratio))
            }
        }
    }
}

/// True iff the stage products amplify strictly: `alpha_1...alpha_n >
/// beta_1...beta_n`. Only meaningful without feedback.
pub fn amplifies(c: &Cascade) -> bool {
    c.ln_alpha_product() > c.ln_beta_product()
}

/// `|G(j omega)|` on a log-spaced grid of `count` points in `[0, omega_max]`
/// (the first point is exactly 0).
pub fn frequency_sweep(
    c: &Cascade,
    omega_max: f64,
    count: usize,
) -> Result<Vec<(f64, f64)>, XferError> {
    let tf = build_transfer(c);
    let lo = omega_max * 1e-4;
    let ratio = omega_max / lo;
    let points = par::map_indexed(count, |k| {
        let omega = if k == 0 {
            0.0
        } else {
            lo * ratio.powf((k - 1) as f64 / (count - 1).max(1) as f64)
        };
        let mag = tf
            .eval(Complex64::new(0.0, omega))
            .map(|g| g.norm())
            .unwrap_or(f64::INFINITY);
        (omega, mag)
    });
    if points.iter().any(|(_, m)| !m.is_finite()) {
        return Err(XferError::PoleEvaluation {
            denominator_magnitude: 0.0,
        });
    }
    Ok(points)
}
