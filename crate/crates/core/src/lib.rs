//! Certified bounds on model bias `E_Q[f] - E_P[f]` over every alternative
//! model `Q` in a Kullback-Leibler ball `R(Q||P) <= eta^2`.
//!
//! * [`divergence`]: exact KL divergences, cumulant generating functions, the
//!   goal-oriented divergence and the exponential-tilting solver whose
//!   extremal measures show the bounds are attained.
//! * [`concentration`]: sub-Gaussian, Bennett and Hoeffding envelopes of the
//!   MGF and the bias bounds they induce for whole families of QoIs.
//! * [`estimator`]: bias bounds for statistical estimators via bounded
//!   differences, and KL-widened DKW confidence bands.
//! * [`empirical`]: sample moments, MGF estimates and their estimator variances.
//! * [`models`]: exponential, truncated normal, Weibull lifetime and 1-D Ising
//!   example systems.
//! * [`figures`]: plot data for the worked examples.

// `!(x < y)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod divergence;
pub mod empirical;
pub mod error;
pub mod estimator;
pub mod figures;
pub mod io;
pub mod models;
pub mod numeric;
pub mod par;

pub use error::{BoundError, Result};
