use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::{integrate_with_breaks, Support};
use crate::error::{BoundError, Result};
use crate::numeric::compensated_sum;

const BUNDLED_FAILURE_TIMES: &str = include_str!("../../data/battery_failure_times_v1.csv");

/// Weibull law with `F(t) = 1 - exp(-(t/scale)^shape)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullModel {
    pub shape: f64,
    pub scale: f64,
}

/// Observed failure times, in cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureData {
    times: Vec<f64>,
}

impl FailureData {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(BoundError::EmptySample);
        }
        if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(BoundError::Domain(format!("failure times must be positive, got {t}")));
        }
        Ok(Self { times })
    }

    /// Parses CSV text with a header row; the last column holds the times.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        lines.next().ok_or(BoundError::EmptySample)?;
        let times = lines
            .map(|l| {
                let field = l.rsplit(',').next().unwrap_or(l).trim();
                field
                    .parse::<f64>()
                    .map_err(|_| BoundError::Parse(format!("not a number: {field:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(times)
    }

    /// The twelve battery life-cycle test results shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_csv_str(BUNDLED_FAILURE_TIMES).expect("bundled data parses")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

const SHAPE_LO: f64 = 0.1;
const SHAPE_HI: f64 = 50.0;
const MAX_ITER: usize = 200;

impl WeibullModel {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite() {
            Ok(Self { shape, scale })
        } else {
            Err(BoundError::Domain(format!("need shape, scale > 0, got {shape}, {scale}")))
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -(-(t / self.scale).powf(self.shape)).exp_m1()
        }
    }

    pub fn log_pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = t / self.scale;
        (self.shape / self.scale).ln() + (self.shape - 1.0) * z.ln() - z.powf(self.shape)
    }

    pub fn pdf(&self, t: f64) -> f64 {
        let l = self.log_pdf(t);
        if l.is_nan() {
            0.0
        } else {
            l.exp()
        }
    }

    /// Inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.scale * (-(-u).ln_1p()).powf(1.0 / self.shape)
    }

    /// `E[g(T)]` by quadrature; `breakpoints` mark kinks of `g`.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, breakpoints: &[f64], tol: f64) -> Result<f64> {
        integrate_with_breaks(
            |t| g(t) * self.pdf(t),
            Support::LowerBounded { lo: 0.0, scale: self.scale },
            breakpoints,
            tol,
        )
    }

    /// Gradient of the log-likelihood with respect to `(shape, scale)`.
    pub fn log_likelihood_gradient(&self, data: &FailureData) -> (f64, f64) {
        let (b, s) = (self.shape, self.scale);
        let n = data.times.len() as f64;
        let logs: Vec<f64> = data.times.iter().map(|t| (t / s).ln()).collect();
        let pw: Vec<f64> = logs.iter().map(|l| (b * l).exp()).collect();
        let d_shape = n / b + compensated_sum(logs.iter().copied())
            - compensated_sum(pw.iter().zip(&logs).map(|(p, l)| p * l));
        let d_scale = b / s * (compensated_sum(pw.iter().copied()) - n);
        (d_shape, d_scale)
    }

    /// Maximum-likelihood fit.
    ///
    /// The shape solves the profile equation
    /// `sum t^b ln t / sum t^b - 1/b - mean(ln t) = 0`, increasing in `b`, by
    /// Newton steps kept inside a bisection bracket on `[0.1, 50]`; then
    /// `scale = (mean t^b)^(1/b)`.
    pub fn mle(data: &FailureData) -> Result<Self> {
        let t_max = data.times.iter().copied().fold(0.0, f64::max);
        let t_min = data.times.iter().copied().fold(f64::INFINITY, f64::min);
        if data.times.len() < 2 || t_min == t_max {
            return Err(BoundError::DegenerateData(
                "the Weibull fit needs at least two distinct failure times".into(),
            ));
        }
        // Times are scaled by the maximum so that t^b stays in (0, 1].
        let logs: Vec<f64> = data.times.iter().map(|t| (t / t_max).ln()).collect();
        let n = logs.len() as f64;
        let mean_log = compensated_sum(logs.iter().copied()) / n;
        let profile = |b: f64| {
            let w: Vec<f64> = logs.iter().map(|l| (b * l).exp()).collect();
            let s0 = compensated_sum(w.iter().copied());
            let s1 = compensated_sum(w.iter().zip(&logs).map(|(w, l)| w * l)) / s0;
            let s2 = compensated_sum(w.iter().zip(&logs).map(|(w, l)| w * l * l)) / s0;
            (s1 - 1.0 / b - mean_log, s2 - s1 * s1 + 1.0 / (b * b))
        };
        let (mut lo, mut hi) = (SHAPE_LO, SHAPE_HI);
        if !(profile(lo).0 < 0.0 && profile(hi).0 > 0.0) {
            return Err(BoundError::Nonconvergence {
                what: "Weibull shape outside [0.1, 50]",
                iterations: 0,
                residual: f64::NAN,
            });
        }
        let mut b = 0.5 * (lo + hi);
        for it in 1..=MAX_ITER {
            let (g, dg) = profile(b);
            if g == 0.0 {
                return Self::finish(b, &logs, t_max);
            }
            if g < 0.0 {
                lo = b;
            } else {
                hi = b;
            }
            let newton = b - g / dg;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - b).abs() <= 1e-15 * b || hi - lo <= 1e-15 * b {
                return Self::finish(next, &logs, t_max);
            }
            b = next;
            if it == MAX_ITER {
                return Err(BoundError::Nonconvergence {
                    what: "Weibull profile likelihood",
                    iterations: it,
                    residual: g.abs(),
                });
            }
        }
        unreachable!()
    }

    fn finish(shape: f64, logs: &[f64], t_max: f64) -> Result<Self> {
        let mean_pow = compensated_sum(logs.iter().map(|l| (shape * l).exp())) / logs.len() as f64;
        Self::new(shape, t_max * mean_pow.powf(1.0 / shape))
    }
}

/// Lifetime quantities of interest with values in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LifetimeQoi {
    /// `1{0 <= t <= horizon}`.
    Indicator { horizon: f64 },
    /// `1 / (1 + exp(steepness (t - horizon)))`.
    Logistic { horizon: f64, steepness: f64 },
}

impl LifetimeQoi {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            LifetimeQoi::Indicator { horizon } => {
                if (0.0..=horizon).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
            LifetimeQoi::Logistic { horizon, steepness } => {
                let z = steepness * (t - horizon);
                if z > 0.0 {
                    let e = (-z).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + z.exp())
                }
            }
        }
    }

    /// `E_P[qoi]` under a Weibull model; exact for the indicator.
    pub fn expectation(&self, model: &WeibullModel, tol: f64) -> Result<f64> {
        match *self {
            LifetimeQoi::Indicator { horizon } => Ok(model.cdf(horizon)),
            LifetimeQoi::Logistic { horizon, .. } => {
                let breaks: Vec<f64> = [horizon].into_iter().filter(|h| *h > 0.0).collect();
                Ok(model.expect(|t| self.eval(t), &breaks, tol)?.clamp(0.0, 1.0))
            }
        }
    }
}

/// The failure indicator before `horizon` and its logistic smoothing.
pub fn lifetime_qois(horizon: f64, steepness: f64) -> Result<(LifetimeQoi, LifetimeQoi)> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(BoundError::Domain(format!("horizon must be >= 0, got {horizon}")));
    }
    if !(steepness >= 1.0 && steepness.is_finite()) {
        return Err(BoundError::Domain(format!("steepness must be >= 1, got {steepness}")));
    }
    Ok((
        LifetimeQoi::Indicator { horizon },
        LifetimeQoi::Logistic { horizon, steepness },
    ))
}
