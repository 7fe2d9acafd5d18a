//! Domain types shared by all analysis modules.
//!
//! A [`Cascade`] is the parameter tuple (length, on-rates, off-rates, leak,
//! feedback strength). Inputs are values of [`InputSignal`], each of which
//! knows its time-domain evaluation, 2-norm and Laplace log-derivative
//! moments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    /// A rate that must be strictly positive is not. Index is 1-based.
    #[error("non-positive entry in `{field}` at index {index}")]
    NonPositiveRate { field: &'static str, index: usize },
    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value in `{field}`")]
    NonFinite { field: &'static str },
    #[error("sampled input times must be strictly ascending")]
    NonAscendingTimes,
    /// The impulse has no finite 2-norm, so norm-based quantities are undefined.
    #[error("the impulse input has an unbounded 2-norm")]
    UnboundedNorm,
}

/// Cascade parameters: `n` kinase stages with on-rates `alpha` and off-rates
/// `beta`, a leaky-integrator output stage with rate `leak`, and a feedback
/// coupling `feedback` from the last kinase back into the first stage.
///
/// Construction validates positivity and length invariants but deliberately
/// does not check feedback stability; that is decided by [`crate::stability`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCascade", into = "RawCascade")]
pub struct Cascade {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    leak: f64,
    feedback: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawCascade {
    n: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    leak: f64,
    #[serde(default)]
    feedback: f64,
}

impl TryFrom<RawCascade> for Cascade {
    type Error = ModelError;
    fn try_from(raw: RawCascade) -> Result<Self, ModelError> {
        if raw.alpha.len() != raw.n {
            return Err(ModelError::LengthMismatch {
                expected: raw.n,
                got: raw.alpha.len(),
            });
        }
        Cascade::new(raw.alpha, raw.beta, raw.leak, raw.feedback)
    }
}

impl From<Cascade> for RawCascade {
    fn from(c: Cascade) -> Self {
        RawCascade {
            n: c.n(),
            alpha: c.alpha,
            beta: c.beta,
            leak: c.leak,
            feedback: c.feedback,
        }
    }
}

impl Cascade {
    pub fn new(
        alpha: Vec<f64>,
        beta: Vec<f64>,
        leak: f64,
        feedback: f64,
    ) -> Result<Self, ModelError> {
        let c = Cascade {
            alpha,
            beta,
            leak,
            feedback,
        };
        c.validate()?;
        Ok(c)
    }

    /// Cascade with no feedback term.
    pub fn without_feedback(alpha: Vec<f64>, beta: Vec<f64>, leak: f64) -> Result<Self, ModelError> {
        Self::new(alpha, beta, leak, 0.0)
    }

    /// `n` identical stages, the optimal-design shape.
    pub fn uniform(n: usize, alpha: f64, beta: f64, leak: f64) -> Result<Self, ModelError> {
        Self::new(vec![alpha; n], vec![beta; n], leak, 0.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.alpha.is_empty() {
            return Err(ModelError::LengthMismatch {
                expected: 1,
                got: 0,
            });
        }
        if self.beta.len() != self.alpha.len() {
            return Err(ModelError::LengthMismatch {
                expected: self.alpha.len(),
                got: self.beta.len(),
            });
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !a.is_finite() {
                return Err(ModelError::NonFinite { field: "alpha" });
            }
            if a <= 0.0 {
                return Err(ModelError::NonPositiveRate {
                    field: "alpha",
                    index: i + 1,
                });
            }
        }
        for (i, &b) in self.beta.iter().enumerate() {
            if !b.is_finite() {
                return Err(ModelError::NonFinite { field: "beta" });
            }
            if b <= 0.0 {
                return Err(ModelError::NonPositiveRate {
                    field: "beta",
                    index: i + 1,
                });
            }
        }
        if !self.leak.is_finite() {
            return Err(ModelError::NonFinite { field: "leak" });
        }
        if self.leak < 0.0 {
            return Err(ModelError::NonPositiveRate {
                field: "leak",
                index: 1,
            });
        }
        if !self.feedback.is_finite() {
            return Err(ModelError::NonFinite { field: "feedback" });
        }
        if self.feedback < 0.0 {
            return Err(ModelError::NonPositiveRate {
                field: "feedback",
                index: 1,
            });
        }
        Ok(())
    }

    /// Number of kinase stages (the state dimension is `n + 1`).
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn leak(&self) -> f64 {
        self.leak
    }

    pub fn feedback(&self) -> f64 {
        self.feedback
    }

    /// Sum of `ln alpha_i`; products of rates are handled in log-space.
    pub(crate) fn ln_alpha_product(&self) -> f64 {
        self.alpha.iter().map(|a| a.ln()).sum()
    }

    pub(crate) fn ln_beta_product(&self) -> f64 {
        self.beta.iter().map(|b| b.ln()).sum()
    }

    /// `ln(eps * alpha_2 ... alpha_n)`, or `None` when there is no feedback.
    pub(crate) fn ln_feedback_term(&self) -> Option<f64> {
        if self.feedback == 0.0 {
            None
        } else {
            Some(self.feedback.ln() + self.alpha[1..].iter().map(|a| a.ln()).sum::<f64>())
        }
    }
}

/// Input signal families, all zero for `t < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSignal {
    /// Unit Dirac pulse.
    Impulse,
    /// `R(t) = r0 * exp(-lambda t)`.
    #[serde(alias = "exp")]
    DecayingExp { r0: f64, lambda: f64 },
    /// `R(t) = r0 * t * exp(-lambda t)`.
    Peak { r0: f64, lambda: f64 },
    /// Constant `r0` on `[0, t0]`.
    Rect { r0: f64, t0: f64 },
    /// `R(t) = 2 (r / (pi t)) sin(eps t)` with `r = sqrt(pi/eps)`; its Laplace
    /// transform is nearly flat on `|omega| < eps` and vanishes beyond, which
    /// makes it the gain-tightness probe.
    Sinc { eps: f64 },
    /// Numeric input on an explicit grid, linearly interpolated.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

/// Log-derivative moments and 2-norms of an input signal.
///
/// `norm2` is the exact 2-norm; `norm2_paper` keeps the alternative convention
/// used by the reference figures (for the exponential and peak families the
/// two differ, see [`InputSignal::moments`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputMoments {
    pub norm2: f64,
    pub norm2_paper: f64,
    /// First log-derivative of the transform at `s = 0`.
    pub m1: f64,
    /// Second log-derivative of the transform at `s = 0`; the variance-like
    /// input contribution to the squared signal duration.
    pub q: f64,
}

impl InputSignal {
    pub fn decaying_exp(r0: f64, lambda: f64) -> Self {
        InputSignal::DecayingExp { r0, lambda }
    }

    pub fn peak(r0: f64, lambda: f64) -> Self {
        InputSignal::Peak { r0, lambda }
    }

    pub fn rect(r0: f64, t0: f64) -> Self {
        InputSignal::Rect { r0, t0 }
    }

    pub fn sinc(eps: f64) -> Self {
        InputSignal::Sinc { eps }
    }

    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self, ModelError> {
        if times.len() != values.len() {
            return Err(ModelError::LengthMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(ModelError::LengthMismatch {
                expected: 2,
                got: times.len(),
            });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::NonAscendingTimes);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { field: "values" });
        }
        Ok(InputSignal::Sampled { times, values })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            InputSignal::Impulse => Ok(()),
            InputSignal::DecayingExp { r0, lambda } | InputSignal::Peak { r0, lambda } => {
                positive("r0", *r0)?;
                positive("lambda", *lambda)
            }
            InputSignal::Rect { r0, t0 } => {
                positive("r0", *r0)?;
                positive("t0", *t0)
            }
            InputSignal::Sinc { eps } => positive("eps", *eps),
            InputSignal::Sampled { times, values } => {
                Self::sampled(times.clone(), values.clone()).map(|_| ())
            }
        }
    }

    /// Time-domain evaluation; the impulse evaluates to 0 everywhere (its mass
    /// at the origin is realized as a state jump by the simulator).
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            InputSignal::Impulse => 0.0,
            InputSignal::DecayingExp { r0, lambda } => r0 * (-lambda * t).exp(),
            InputSignal::Peak { r0, lambda } => r0 * t * (-lambda * t).exp(),
            InputSignal::Rect { r0, t0 } => {
                if t <= t0 {
                    r0
                } else {
                    0.0
                }
            }
            InputSignal::Sinc { eps } => {
                let r = (PI / eps).sqrt();
                if t == 0.0 {
                    2.0 * r * eps / PI
                } else {
                    2.0 * r / (PI * t) * (eps * t).sin()
                }
            }
            InputSignal::Sampled {
                ref times,
                ref values,
            } => interp_linear(times, values, t),
        }
    }

    /// Laplace transform at `s` (analytic continuation through `s = 0` for
    /// the sinc family).
    pub fn laplace(&self, s: Complex64) -> Complex64 {
        match *self {
            InputSignal::Impulse => Complex64::new(1.0, 0.0),
            InputSignal::DecayingExp { r0, lambda } => r0 / (s + lambda),
            InputSignal::Peak { r0, lambda } => {
                let d = s + lambda;
                r0 / (d * d)
            }
            InputSignal::Rect { r0, t0 } => {
                if s.norm() * t0 < 1e-8 {
                    // series of (1 - e^{-s t0}) / s around 0
                    Complex64::new(r0 * t0, 0.0) * (1.0 - s * t0 / 2.0 + s * s * t0 * t0 / 6.0)
                } else {
                    r0 * (1.0 - (-s * t0).exp()) / s
                }
            }
            InputSignal::Sinc { eps } => {
                // (2r/pi) arctan(eps/s) on Re s > 0, continued as
                // r - (2r/pi) arctan(s/eps) which is analytic at s = 0.
                let r = (PI / eps).sqrt();
                let v = Complex64::new(r, 0.0) - (2.0 * r / PI) * (s / eps).atan();
                if v.is_finite() {
                    v
                } else {
                    // log singularity exactly at s = +/- j eps; nudge off it
                    Complex64::new(r, 0.0) - (2.0 * r / PI) * (s * (1.0 + 1e-12) / eps).atan()
                }
            }
            InputSignal::Sampled {
                ref times,
                ref values,
            } => {
                // trapezoid quadrature of the transform integral on the grid
                let mut acc = Complex64::new(0.0, 0.0);
                for w in times.windows(2).zip(values.windows(2)) {
                    let (tw, vw) = w;
                    let f0 = vw[0] * (-s * tw[0]).exp();
                    let f1 = vw[1] * (-s * tw[1]).exp();
                    acc += (f0 + f1) * 0.5 * (tw[1] - tw[0]);
                }
                acc
            }
        }
    }

    /// Closed-form (or numeric, for `Sinc`/`Sampled`) moments.
    ///
    /// The reference tables list `r0/(2 lambda)` and `r0/(4 lambda^3)` as the
    /// 2-norms of the exponential and peak inputs and claim unit norm for the
    /// sinc; the exact values are `r0/sqrt(2 lambda)`, `r0/(2 lambda^{3/2})`
    /// and `sqrt(2)`. Both conventions are returned so either set of figures
    /// can be reproduced.
    pub fn moments(&self) -> Result<InputMoments, ModelError> {
        self.validate()?;
        match *self {
            InputSignal::Impulse => Err(ModelError::UnboundedNorm),
            InputSignal::DecayingExp { r0, lambda } => Ok(InputMoments {
                norm2: r0 / (2.0 * lambda).sqrt(),
                norm2_paper: r0 / (2.0 * lambda),
                m1: -1.0 / lambda,
                q: 1.0 / (lambda * lambda),
            }),
            InputSignal::Peak { r0, lambda } => Ok(InputMoments {
                norm2: r0 / (2.0 * lambda.powf(1.5)),
                norm2_paper: r0 / (4.0 * lambda.powi(3)),
                m1: -2.0 / lambda,
                q: 2.0 / (lambda * lambda),
            }),
            InputSignal::Rect { r0, t0 } => Ok(InputMoments {
                norm2: r0 * t0.sqrt(),
                norm2_paper: r0 * t0.sqrt(),
                m1: -t0 / 2.0,
                q: t0 * t0 / 12.0,
            }),
            InputSignal::Sinc { eps } => {
                // q by central differences of ln R^(s) on the real axis
                let h = 1e-4 * eps;
                let ln_at = |s: f64| {
                    self.laplace(Complex64::new(s, 0.0))
                        .re
                        .ln()
                };
                let q = (ln_at(h) - 2.0 * ln_at(0.0) + ln_at(-h)) / (h * h);
                Ok(InputMoments {
                    norm2: std::f64::consts::SQRT_2,
                    norm2_paper: 1.0,
                    m1: -2.0 / (PI * eps),
                    q,
                })
            }
            InputSignal::Sampled {
                ref times,
                ref values,
            } => {
                let int = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
                    times
                        .windows(2)
                        .zip(values.windows(2))
                        .map(|(tw, vw)| {
                            0.5 * (f(tw[0], vw[0]) + f(tw[1], vw[1])) * (tw[1] - tw[0])
                        })
                        .sum()
                };
                let i0 = int(&|_, v| v);
                let i1 = int(&|t, v| t * v);
                let i2 = int(&|t, v| t * t * v);
                let isq = int(&|_, v| v * v);
                let norm2 = isq.max(0.0).sqrt();
                let m1 = -i1 / i0;
                let q = i2 / i0 - (i1 / i0) * (i1 / i0);
                Ok(InputMoments {
                    norm2,
                    norm2_paper: norm2,
                    m1,
                    q,
                })
            }
        }
    }

    /// Characteristic rate of the input, used for default frequency ranges.
    pub fn rate_scale(&self) -> f64 {
        match *self {
            InputSignal::Impulse => 1.0,
            InputSignal::DecayingExp { lambda, .. } | InputSignal::Peak { lambda, .. } => lambda,
            InputSignal::Rect { t0, .. } => 1.0 / t0,
            InputSignal::Sinc { eps } => eps,
            InputSignal::Sampled { ref times, .. } => {
                1.0 / (times[times.len() - 1] - times[0]).max(f64::MIN_POSITIVE)
            }
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ModelError> {
    if !v.is_finite() {
        return Err(ModelError::NonFinite { field });
    }
    if v <= 0.0 {
        return Err(ModelError::NonPositiveRate { field, index: 1 });
    }
    Ok(())
}

pub(crate) fn interp_linear(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t < times[0] || t > times[times.len() - 1] {
        return 0.0;
    }
    match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => values[i],
        Err(i) => {
            let (t0, t1) = (times[i - 1], times[i]);
            let w = (t - t0) / (t1 - t0);
            values[i - 1] * (1.0 - w) + values[i] * w
        }
    }
}

/// Gain, signaling time, duration, amplitude and the cascade-only duration
/// term `sigma0`, bundled as one report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalMetrics {
    pub gain: f64,
    pub tau: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub sigma0: f64,
}

/// Norm convention used when forming the signal amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormConvention {
    Exact,
    PaperFigure,
}

/// Which family of on-rate knowledge a design run assumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DesignMode {
    /// All on-rates share a known value.
    FixedAlpha { alpha: f64 },
    /// Only the product of the on-rates is known.
    FixedProduct { alpha_product: f64 },
}

/// Result of a cascade-length/off-rate optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub n_star: usize,
    pub beta_star: f64,
    pub sigma0_star: f64,
    /// The argument handed to the optimal-length step function.
    pub m_value: f64,
    #[serde(flatten)]
    pub mode: DesignMode,
}

/// Uniformly sampled simulation output: the cross-validation oracle for the
/// closed-form quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    /// Input samples `R(t_k)` (zero for the impulse, which enters as a state
    /// jump).
    pub input: Vec<f64>,
    /// One row of `n + 1` states per time step.
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn n_states(&self) -> usize {
        self.states.first().map_or(0, |row| row.len())
    }

    /// Column `i` (1-based state index, `X_i`).
    pub fn state_column(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|row| row[i - 1]).collect()
    }

    /// The output channel `X_{n+1}`.
    pub fn output(&self) -> Vec<f64> {
        self.state_column(self.n_states())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn validate_accepts_identity_like_cascade() {
        assert!(Cascade::new(vec![1.0, 1.0], vec![1.0, 1.0], 1.0, 0.0).is_ok());
    }

    #[test]
    fn validate_rejects_sign_violation_with_location() {
        let err = Cascade::new(vec![1.0, -1.0], vec![1.0, 1.0], 1.0, 0.0).unwrap_err();
        assert_eq!(
            err,
            ModelError::NonPositiveRate {
                field: "alpha",
                index: 2
            }
        );
    }

    #[test]
    fn validate_rejects_length_mismatch() {
        let err = Cascade::new(vec![1.0, 1.0, 1.0], vec![1.0, 1.0], 1.0, 0.0).unwrap_err();
        assert_eq!(
            err,
            ModelError::LengthMismatch {
                expected: 3,
                got: 2
            }
        );
    }

    #[test]
    fn exp_moments_match_closed_forms() {
        let m = InputSignal::decaying_exp(1.0, 1.0).moments().unwrap();
        assert_relative_eq!(m.m1, -1.0);
        assert_relative_eq!(m.q, 1.0);
        assert_relative_eq!(m.norm2, 1.0 / 2f64.sqrt());
        assert_relative_eq!(m.norm2_paper, 0.5);
    }

    #[test]
    fn rect_moments_match_closed_forms() {
        let m = InputSignal::rect(2.0, 3.0).moments().unwrap();
        assert_relative_eq!(m.norm2, 2.0 * 3f64.sqrt());
        assert_relative_eq!(m.m1, -1.5);
        assert_relative_eq!(m.q, 0.75);
    }

    #[test]
    fn peak_moments_keep_both_norm_conventions() {
        let m = InputSignal::peak(5.0, 2.0).moments().unwrap();
        assert_relative_eq!(m.norm2, 0.8838834764831844, max_relative = 1e-12);
        assert_relative_eq!(m.norm2_paper, 0.15625);
        assert_relative_eq!(m.m1, -1.0);
        assert_relative_eq!(m.q, 0.5);
    }

    #[test]
    fn impulse_moments_are_unbounded() {
        assert_eq!(
            InputSignal::Impulse.moments().unwrap_err(),
            ModelError::UnboundedNorm
        );
    }

    #[test]
    fn sinc_moments() {
        let eps = 0.05;
        let m = InputSignal::sinc(eps).moments().unwrap();
        assert_relative_eq!(m.norm2, 2f64.sqrt());
        assert_relative_eq!(m.norm2_paper, 1.0);
        assert_relative_eq!(m.m1, -2.0 / (PI * eps), max_relative = 1e-12);
        // analytic second log-derivative of the continued transform
        assert_relative_eq!(m.q, -4.0 / (PI * PI * eps * eps), max_relative = 1e-5);
    }

    #[test]
    fn sampled_moments_recover_peak_shape() {
        let lambda = 1.5;
        let dt = 1e-3;
        let times: Vec<f64> = (0..30_000).map(|k| k as f64 * dt).collect();
        let values: Vec<f64> = times.iter().map(|&t| t * (-lambda * t).exp()).collect();
        let m = InputSignal::sampled(times, values).unwrap().moments().unwrap();
        assert_relative_eq!(m.m1, -2.0 / lambda, max_relative = 1e-4);
        assert_relative_eq!(m.q, 2.0 / (lambda * lambda), max_relative = 1e-3);
        assert_relative_eq!(m.norm2, 1.0 / (2.0 * lambda.powf(1.5)), max_relative = 1e-4);
    }

    #[test]
    fn sampled_rejects_unsorted_times() {
        assert_eq!(
            InputSignal::sampled(vec![0.0, 2.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap_err(),
            ModelError::NonAscendingTimes
        );
    }

    fn arb_cascade() -> impl Strategy<Value = Cascade> {
        (1usize..6).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.1f64..10.0, n),
                proptest::collection::vec(0.1f64..10.0, n),
                0.0f64..5.0,
                0.0f64..2.0,
            )
                .prop_map(|(a, b, l, e)| Cascade::new(a, b, l, e).unwrap())
        })
    }

    proptest! {
        #[test]
        fn serde_round_trip_is_bit_exact(c in arb_cascade()) {
            let json = serde_json::to_string(&c).unwrap();
            let back: Cascade = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(c, back);
        }

        // variance-like term: nonnegative for every nonnegative input family
        #[test]
        fn q_is_nonnegative_for_nonnegative_families(
            r0 in 0.1f64..10.0, rate in 0.1f64..10.0
        ) {
            for r in [
                InputSignal::decaying_exp(r0, rate),
                InputSignal::peak(r0, rate),
                InputSignal::rect(r0, rate),
            ] {
                prop_assert!(r.moments().unwrap().q >= 0.0);
            }
        }
    }

    #[test]
    fn deserialize_rejects_invalid_cascade() {
        let bad = r#"{"n":2,"alpha":[1.0,-1.0],"beta":[1.0,1.0],"leak":1.0}"#;
        assert!(serde_json::from_str::<Cascade>(bad).is_err());
        let mismatch = r#"{"n":3,"alpha":[1.0,1.0],"beta":[1.0,1.0],"leak":1.0}"#;
        assert!(serde_json::from_str::<Cascade>(mismatch).is_err());
    }
}
