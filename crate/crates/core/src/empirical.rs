//! Sample estimates of the inputs the bounds need, with the first-order
//! variance of each estimator.
//!
//! The variance of the plain MGF estimator grows like `c^2 exp(2 c E[Y])`,
//! which is why bounds that need only a mean and a variance are preferred
//! to ones that need the MGF at the optimal tilt.

use serde::Serialize;

use crate::divergence::{solve_tilt, DiscreteCgf};
use crate::error::{BoundError, Result};
use crate::numeric::compensated_sum;

/// Exponents `c x` above this are refused rather than allowed to overflow.
pub const EXPONENT_LIMIT: f64 = 700.0;

/// A point estimate with the (approximate) variance of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub variance_of_estimator: f64,
    pub n: usize,
}

impl MomentEstimate {
    pub fn std_error(&self) -> f64 {
        self.variance_of_estimator.sqrt()
    }
}

fn check_sample(sample: &[f64]) -> Result<()> {
    match sample.len() {
        0 => return Err(BoundError::EmptySample),
        1 => return Err(BoundError::TooFewPoints { needed: 2, got: 1 }),
        _ => {}
    }
    match sample.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(BoundError::Domain(format!("non-finite sample value {v}"))),
        None => Ok(()),
    }
}

fn mean_of(sample: &[f64]) -> f64 {
    compensated_sum(sample.iter().copied()) / sample.len() as f64
}

/// Unbiased sample variance `V_n`, computed in two passes.
fn unbiased_variance(sample: &[f64]) -> f64 {
    let m = mean_of(sample);
    compensated_sum(sample.iter().map(|x| (x - m) * (x - m))) / (sample.len() as f64 - 1.0)
}

/// Sample mean; estimator variance `V_n / n`.
pub fn mean_estimate(sample: &[f64]) -> Result<MomentEstimate> {
    check_sample(sample)?;
    let n = sample.len();
    Ok(MomentEstimate {
        value: mean_of(sample),
        variance_of_estimator: unbiased_variance(sample) / n as f64,
        n,
    })
}

/// `V_n`, or the plug-in `(n-1)/n V_n` when `bias_adjusted` is false;
/// estimator variance `2 V_n^2 / (n-1)`.
pub fn variance_estimate(sample: &[f64], bias_adjusted: bool) -> Result<MomentEstimate> {
    check_sample(sample)?;
    let n = sample.len();
    let v = unbiased_variance(sample);
    let nf = n as f64;
    Ok(MomentEstimate {
        value: if bias_adjusted { v } else { v * (nf - 1.0) / nf },
        variance_of_estimator: 2.0 * v * v / (nf - 1.0),
        n,
    })
}

/// `(1/n) sum exp(c X_i)`; estimator variance `c^2 exp(2 c mean) var / n`
/// with the sample mean and the plug-in variance. This is a first-order
/// formula, accurate when the mean is small.
pub fn mgf_estimate(sample: &[f64], c: f64) -> Result<MomentEstimate> {
    check_sample(sample)?;
    if !c.is_finite() {
        return Err(BoundError::Domain(format!("tilt must be finite, got {c}")));
    }
    if let Some(e) = sample.iter().map(|x| c * x).find(|e| *e > EXPONENT_LIMIT) {
        return Err(BoundError::OverflowGuard { exponent: e, limit: EXPONENT_LIMIT });
    }
    let n = sample.len();
    let nf = n as f64;
    let m = mean_of(sample);
    let plug_in = unbiased_variance(sample) * (nf - 1.0) / nf;
    Ok(MomentEstimate {
        value: compensated_sum(sample.iter().map(|x| (c * x).exp())) / nf,
        variance_of_estimator: c * c * (2.0 * c * m).exp() * plug_in / nf,
        n,
    })
}

/// CGF of the centered sample under its empirical distribution.
pub fn empirical_cgf(sample: &[f64]) -> Result<DiscreteCgf> {
    check_sample(sample)?;
    DiscreteCgf::from_weighted(&vec![1.0; sample.len()], sample)
}

/// MGF-estimator variance at the optimal tilt, one entry per `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltCost {
    pub eta: f64,
    pub c_star: f64,
    pub mgf_estimator_variance: f64,
}

/// For each `eta`, solves for the optimal tilt of the empirical CGF and
/// reports the variance of estimating the MGF there from the same data.
pub fn mgf_cost_at_optimal_tilt(sample: &[f64], etas: &[f64]) -> Result<Vec<TiltCost>> {
    let h = empirical_cgf(sample)?;
    etas.iter()
        .map(|&eta| {
            let sol = solve_tilt(&h, eta * eta)?;
            let c = sol.c_star.ok_or_else(|| {
                BoundError::Unsupported(format!("no finite optimal tilt at eta = {eta}"))
            })?;
            Ok(TiltCost { eta, c_star: c, mgf_estimator_variance: mgf_estimate(sample, c)?.variance_of_estimator })
        })
        .collect()
}
