//! Analysis of weakly activated signaling cascades as linear input/output systems.
//!
//! A cascade of `n` kinase stages followed by a leaky integrator is treated as a
//! single-input/single-output linear system. The crate computes its transfer
//! function and internal gain ([`xfer`]), the signaling time, duration and
//! amplitude of the output for a family of input signals ([`metrics`]), the
//! off-rates and cascade length that maximize signal amplitude at fixed gain
//! ([`design`]), and eigenvalue-based stability of the system matrix, including
//! feedback and non-specificity perturbations ([`stability`]).
//!
//! Every closed-form quantity has an independent time-domain counterpart in
//! [`sim`], which integrates the linear, nonlinear, delayed and feedback
//! variants of the model and recovers the same quantities from trajectory
//! moments and norms.

pub mod design;
pub mod metrics;
pub mod model;
mod par;
pub mod sim;
pub mod stability;
pub mod xfer;

pub use model::{Cascade, InputMoments, InputSignal, ModelError, SignalMetrics, Trajectory};
