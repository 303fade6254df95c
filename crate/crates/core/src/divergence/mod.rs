//! KL divergences, cumulant generating functions, the goal-oriented
//! divergence and the exponential-tilting solver.

pub mod ball;
pub mod certificate;
pub mod cgf;
pub mod distribution;
pub mod kl;
pub mod quadrature;
pub mod tilt;

pub use ball::{check_certificate_by_sampling, random_q_in_ball, BallCheck};
pub use certificate::{BiasCertificate, BoundMethod, SideDiagnostics, TiltRegime};
pub use cgf::{cgf_discrete, CumulantFunction, DiscreteCgf, ExponentialCgf, GaussianCgf, Mirrored};
pub use distribution::DiscreteDistribution;
pub use kl::{kl_discrete, kl_exponential_pair, kl_normal_pair};
pub use quadrature::{integrate, integrate_with_breaks, QuadratureCgf, Support};
pub use tilt::{
    go_bias_band, go_divergence, linearized_go, solve_side, solve_tilt, tilt_discrete, Sign,
    TiltedSolution,
};

use crate::error::Result;

/// `cgf_quadrature`: CGF of `f(X)` for a density on `support`, with the MGF
/// declared finite on `domain`.
pub fn cgf_quadrature<D, Q>(
    density: D,
    support: Support,
    f: Q,
    domain: (f64, f64),
    tol: f64,
) -> Result<QuadratureCgf>
where
    D: Fn(f64) -> f64 + Send + Sync + 'static,
    Q: Fn(f64) -> f64 + Send + Sync + 'static,
{
    QuadratureCgf::new(density, support, f, domain, tol)
}
