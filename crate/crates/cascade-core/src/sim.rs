//! Time-domain oracle: Runge–Kutta integration of the linear, saturating,
//! and delayed cascade systems, plus empirical norms and moments that must
//! agree with the closed-form frequency-domain quantities.
//!
//! Everything here is deliberately independent of `xfer`/`metrics`: the
//! trajectories are integrated from the differential equations, and the
//! norms/moments are plain quadratures on the sampled output. Agreement
//! between the two routes is the core correctness argument of the crate.

use crate::model::{Cascade, InputSignal, Trajectory};
use crate::par;
use crate::xfer::{self, XferError};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("step dt = {dt} exceeds the stability budget {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("trajectory tail has not decayed: final/peak magnitude ratio {ratio}")]
    TailNotDecayed { ratio: f64 },
    #[error("signal integral is too small to form moments")]
    DegenerateSignal,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("delayed integration does not support feedback")]
    FeedbackUnsupported,
}

/// Which trajectory channel a norm or moment is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Input,
    /// 1-based state index; `State(n + 1)` is the output.
    State(usize),
}

fn step_limit(c: &Cascade) -> f64 {
    let fastest = c
        .beta()
        .iter()
        .copied()
        .fold(c.leak().max(1.0), f64::max);
    0.1 / fastest
}

fn check_step(c: &Cascade, dt: f64) -> Result<(), SimError> {
    let limit = step_limit(c);
    if dt > limit {
        return Err(SimError::StepTooLarge { dt, limit });
    }
    Ok(())
}

/// One classic fourth-order Runge–Kutta step of `x` at time `t`.
fn rk4_step<F>(rhs: &F, t: f64, dt: f64, x: &mut [f64], k: &mut [Vec<f64>; 4], tmp: &mut [f64])
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = x.len();
    rhs(t, x, &mut k[0]);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * dt * k[0][i];
    }
    rhs(t + 0.5 * dt, tmp, &mut k[1]);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * dt * k[1][i];
    }
    rhs(t + 0.5 * dt, tmp, &mut k[2]);
    for i in 0..dim {
        tmp[i] = x[i] + dt * k[2][i];
    }
    rhs(t + dt, tmp, &mut k[3]);
    for i in 0..dim {
        x[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
}

fn integrate<F>(c: &Cascade, r: &InputSignal, t_end: f64, dt: f64, rhs: F) -> Trajectory
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = c.n() + 1;
    let steps = (t_end / dt).ceil() as usize;
    let mut x = vec![0.0; dim];
    // the unit impulse enters as an exact state jump X1(0+) = alpha_1,
    // avoiding the width bias of a narrow numeric pulse
    let impulse = matches!(r, InputSignal::Impulse);
    if impulse {
        x[0] = c.alpha()[0];
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut input = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut k = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let mut tmp = vec![0.0; dim];
    for step in 0..=steps {
        let t = step as f64 * dt;
        times.push(t);
        input.push(if impulse { 0.0 } else { r.eval(t) });
        states.push(x.clone());
        if step < steps {
            rk4_step(&rhs, t, dt, &mut x, &mut k, &mut tmp);
        }
    }
    Trajectory {
        dt,
        times,
        input,
        states,
    }
}

/// Integrate the linear cascade (optionally with feedback) from rest.
pub fn simulate_linear(
    c: &Cascade,
    r: &InputSignal,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, SimError> {
    check_step(c, dt)?;
    let n = c.n();
    let (alpha, beta, leak, eps) = (c.alpha().to_vec(), c.beta().to_vec(), c.leak(), c.feedback());
    let drive = !matches!(r, InputSignal::Impulse);
    Ok(integrate(c, r, t_end, dt, |t, x, dx| {
        let rin = if drive { r.eval(t) } else { 0.0 };
        dx[0] = alpha[0] * rin + eps * x[n - 1] - beta[0] * x[0];
        for i in 1..n {
            dx[i] = alpha[i] * x[i - 1] - beta[i] * x[i];
        }
        dx[n] = x[n - 1] - leak * x[n];
    }))
}

/// Integrate the saturating kinetics
/// `dX_i/dt = (activation)(1 - X_i / Xtot_i) - beta_i X_i`; the linear model
/// is the `Xtot -> infinity` limit. The appended output stage stays linear.
pub fn simulate_nonlinear(
    c: &Cascade,
    xtot: &[f64],
    r: &InputSignal,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, SimError> {
    check_step(c, dt)?;
    let n = c.n();
    if xtot.len() != n {
        return Err(SimError::LengthMismatch {
            expected: n,
            got: xtot.len(),
        });
    }
    let (alpha, beta, leak, eps) = (c.alpha().to_vec(), c.beta().to_vec(), c.leak(), c.feedback());
    let xtot = xtot.to_vec();
    let drive = !matches!(r, InputSignal::Impulse);
    Ok(integrate(c, r, t_end, dt, |t, x, dx| {
        let rin = if drive { r.eval(t) } else { 0.0 };
        let act1 = alpha[0] * rin + eps * x[n - 1];
        dx[0] = act1 * (1.0 - x[0] / xtot[0]) - beta[0] * x[0];
        for i in 1..n {
            dx[i] = alpha[i] * x[i - 1] * (1.0 - x[i] / xtot[i]) - beta[i] * x[i];
        }
        dx[n] = x[n - 1] - leak * x[n];
    }))
}

/// Integrate the cascade with per-stage transmission delays: equation `i`
/// reads its upstream channel at `t - delays[i - 1]` (so `delays[0]` delays
/// the input into stage 1 and the last entry delays the output stage).
///
/// Delayed state values come from linear interpolation on the already
/// computed grid, which is why `dt` must resolve the smallest positive delay
/// at least tenfold. Feedback is not supported here.
pub fn simulate_delayed(
    c: &Cascade,
    delays: &[f64],
    r: &InputSignal,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, SimError> {
    check_step(c, dt)?;
    if c.feedback() > 0.0 {
        return Err(SimError::FeedbackUnsupported);
    }
    let n = c.n();
    if delays.len() != n + 1 {
        return Err(SimError::LengthMismatch {
            expected: n + 1,
            got: delays.len(),
        });
    }
    if let Some(min_pos) = delays
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
    {
        if dt * 10.0 > min_pos {
            return Err(SimError::StepTooLarge {
                dt,
                limit: min_pos / 10.0,
            });
        }
    }
    let (alpha, beta, leak) = (c.alpha().to_vec(), c.beta().to_vec(), c.leak());
    let impulse = matches!(r, InputSignal::Impulse);

    let dim = n + 1;
    let steps = (t_end / dt).ceil() as usize;
    let mut x = vec![0.0; dim];
    if impulse {
        x[0] = c.alpha()[0];
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut input = Vec::with_capacity(steps + 1);
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let mut k = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let mut tmp = vec![0.0; dim];
    for step in 0..=steps {
        let t = step as f64 * dt;
        times.push(t);
        input.push(if impulse { 0.0 } else { r.eval(t) });
        states.push(x.clone());
        if step == steps {
            break;
        }
        // delayed values always lie at least 10 dt in the past, so the
        // history interpolation below never needs the in-progress step
        let hist = |channel: usize, s: f64| -> f64 {
            if s <= 0.0 {
                return 0.0;
            }
            let pos = s / dt;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            let a = states[lo.min(step)][channel];
            let b = states[(lo + 1).min(step)][channel];
            a + frac * (b - a)
        };
        let rhs = |tt: f64, xc: &[f64], dx: &mut [f64]| {
            let rin = if impulse { 0.0 } else { r.eval(tt - delays[0]) };
            dx[0] = alpha[0] * rin - beta[0] * xc[0];
            for i in 1..n {
                let up = if delays[i] > 0.0 {
                    hist(i - 1, tt - delays[i])
                } else {
                    xc[i - 1]
                };
                dx[i] = alpha[i] * up - beta[i] * xc[i];
            }
            let up = if delays[n] > 0.0 {
                hist(n - 1, tt - delays[n])
            } else {
                xc[n - 1]
            };
            dx[n] = up - leak * xc[n];
        };
        rk4_step(&rhs, t, dt, &mut x, &mut k, &mut tmp);
    }
    Ok(Trajectory {
        dt,
        times,
        input,
        states,
    })
}

fn channel_samples(traj: &Trajectory, which: Channel) -> Vec<f64> {
    match which {
        Channel::Input => traj.input.clone(),
        Channel::State(i) => traj.state_column(i),
    }
}

fn check_tail(y: &[f64]) -> Result<(), SimError> {
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(());
    }
    let ratio = y.last().unwrap().abs() / peak;
    if ratio > 1e-6 {
        return Err(SimError::TailNotDecayed { ratio });
    }
    Ok(())
}

fn trapezoid(times: &[f64], y: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (y(i) + y(i - 1));
    }
    acc
}

/// `sqrt(integral |signal|^2 dt)` of a trajectory channel by composite
/// trapezoid; requires the tail to have decayed below `1e-6` of the peak.
pub fn norm2_time(traj: &Trajectory, which: Channel) -> Result<f64, SimError> {
    let y = channel_samples(traj, which);
    check_tail(&y)?;
    Ok(trapezoid(&traj.times, |i| y[i] * y[i]).sqrt())
}

/// Empirical signaling time and duration of a state channel:
/// `tau = ∫ t Y / ∫ Y`, `sigma = sqrt(∫ t^2 Y / ∫ Y − tau^2)`.
pub fn empirical_moments(traj: &Trajectory, state: usize) -> Result<(f64, f64), SimError> {
    let y = traj.state_column(state);
    check_tail(&y)?;
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let total_time = traj.times.last().copied().unwrap_or(0.0);
    let i0 = trapezoid(&traj.times, |i| y[i]);
    if i0 <= 1e-9 * (peak * total_time).max(f64::MIN_POSITIVE) {
        return Err(SimError::DegenerateSignal);
    }
    let i1 = trapezoid(&traj.times, |i| traj.times[i] * y[i]);
    let i2 = trapezoid(&traj.times, |i| traj.times[i] * traj.times[i] * y[i]);
    let tau = i1 / i0;
    let var = i2 / i0 - tau * tau;
    Ok((tau, var.max(0.0).sqrt()))
}

/// Output 2-norm computed entirely in the frequency domain:
/// `sqrt((1/pi) ∫_0^omega_max |G(j w) R(j w)|^2 dw)` on a grid that is
/// log-spaced over the resonant region and linear beyond it. By Parseval this
/// must match [`norm2_time`] of the simulated output.
pub fn freq_norm2(
    c: &Cascade,
    r: &InputSignal,
    omega_max: Option<f64>,
    count: usize,
) -> Result<f64, XferError> {
    let scale = c
        .beta()
        .iter()
        .copied()
        .fold(c.leak().max(r.rate_scale()).max(1.0), f64::max);
    let omega_max = omega_max.unwrap_or(100.0 * scale);
    let count = count.max(16);
    // omega = 0, then a log-spaced inner region resolving sharp input
    // spectra, then a linear outer region for the polynomial tail
    let n_log = 3 * count / 4;
    let n_lin = count - n_log;
    let lo = omega_max * 1e-8;
    let mid = omega_max / 10.0;
    let mut omegas = Vec::with_capacity(count + 1);
    omegas.push(0.0);
    for k in 0..n_log {
        omegas.push(lo * (mid / lo).powf(k as f64 / (n_log - 1) as f64));
    }
    for k in 1..=n_lin {
        omegas.push(mid + (omega_max - mid) * k as f64 / n_lin as f64);
    }
    let tf = xfer::build_transfer(c);
    let values = par::map_indexed(omegas.len(), |i| {
        let s = Complex64::new(0.0, omegas[i]);
        tf.eval(s).map(|g| (g * r.laplace(s)).norm_sqr())
    });
    let mut y = Vec::with_capacity(values.len());
    for v in values {
        y.push(v?);
    }
    Ok((trapezoid(&omegas, |i| y[i]) / std::f64::consts::PI).sqrt())
}
