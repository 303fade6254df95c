//! Random alternatives inside a KL ball, used to probe certificates.

use rand::Rng;
use serde::Serialize;

use crate::divergence::{kl_discrete, BiasCertificate, DiscreteDistribution};
use crate::error::{BoundError, Result};
use crate::numeric::{bisect_increasing, stream_rng};
use crate::par::{map_indices, ExecMode};

/// Summary of a ball-sampling run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallCheck {
    pub draws: usize,
    pub violations: usize,
    /// Largest `gap / upper` and `gap / lower` seen, a measure of how close
    /// the draws came to the certificate.
    pub max_upper_ratio: f64,
    pub max_lower_ratio: f64,
    pub max_kl: f64,
}

/// A random `Q` on the atoms of `p` with `R(Q||P) <= eta_sq`.
///
/// A random direction is drawn with exponential weights (a flat Dirichlet
/// draw) and `Q` is the mixture `(1-t) P + t Q0` whose divergence equals a
/// uniformly drawn fraction of `eta_sq`, or `Q0` itself when that is already
/// inside the ball.
pub fn random_q_in_ball<R: Rng + ?Sized>(p: &DiscreteDistribution, eta_sq: f64, rng: &mut R) -> Result<DiscreteDistribution> {
    let raw: Vec<f64> = (0..p.len()).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    // Occasionally concentrate on one atom to reach the extremes of the ball.
    let sharpen = rng.random_range(1.0..8.0);
    let raw: Vec<f64> = raw.iter().map(|w| w.powf(sharpen)).collect();
    let q0 = DiscreteDistribution::from_masses(p.atoms().to_vec(), &raw)?;
    let target = eta_sq * rng.random::<f64>().sqrt();
    let mix = |t: f64| -> Result<DiscreteDistribution> {
        let w: Vec<f64> = p.weights().iter().zip(q0.weights()).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        DiscreteDistribution::from_masses(p.atoms().to_vec(), &w)
    };
    if kl_discrete(&q0, p)? <= target {
        return Ok(q0);
    }
    let root = bisect_increasing(|t| kl_discrete(&mix(t)?, p), 0.0, 1.0, target)?;
    // Bisection may stop just above the target; step back inside.
    let mut t = root.root;
    let mut q = mix(t)?;
    while kl_discrete(&q, p)? > eta_sq {
        t *= 1.0 - 1e-9;
        q = mix(t)?;
    }
    Ok(q)
}

/// Draws `draws` alternatives and counts gaps `E_Q f - E_P f` outside
/// `cert` by more than `tol`. Draw `k` uses stream `k` of `seed`.
pub fn check_certificate_by_sampling(
    p: &DiscreteDistribution,
    f_values: &[f64],
    cert: &BiasCertificate,
    draws: usize,
    seed: u64,
    tol: f64,
    mode: ExecMode,
) -> Result<BallCheck> {
    if f_values.len() != p.len() {
        return Err(BoundError::LengthMismatch { expected: p.len(), got: f_values.len() });
    }
    let base = p.expect(f_values);
    let results = map_indices(draws, mode, |k| -> Result<(f64, f64)> {
        let mut rng = stream_rng(seed, k as u64);
        let q = random_q_in_ball(p, cert.eta_sq, &mut rng)?;
        Ok((q.expect(f_values) - base, kl_discrete(&q, p)?))
    });
    let mut out = BallCheck { draws, violations: 0, max_upper_ratio: 0.0, max_lower_ratio: 0.0, max_kl: 0.0 };
    for r in results {
        let (gap, kl) = r?;
        if gap > cert.upper + tol || gap < cert.lower - tol || kl > cert.eta_sq {
            out.violations += 1;
        }
        if cert.upper > 0.0 {
            out.max_upper_ratio = out.max_upper_ratio.max(gap / cert.upper);
        }
        if cert.lower < 0.0 {
            out.max_lower_ratio = out.max_lower_ratio.max(gap / cert.lower);
        }
        out.max_kl = out.max_kl.max(kl);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{go_bias_band, DiscreteCgf};

    #[test]
    fn draws_stay_in_ball() {
        let p = DiscreteDistribution::uniform(vec![0.0, 1.0, 2.0, 5.0]).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..200 {
            let q = random_q_in_ball(&p, 0.05, &mut rng).unwrap();
            assert!(kl_discrete(&q, &p).unwrap() <= 0.05);
        }
    }

    #[test]
    fn certificate_holds_and_is_approached() {
        let p = DiscreteDistribution::new(vec![-1.0, 0.0, 2.0], vec![0.3, 0.5, 0.2]).unwrap();
        let f = p.atoms().to_vec();
        let cert = go_bias_band(&DiscreteCgf::identity(&p), 0.1).unwrap();
        let check = check_certificate_by_sampling(&p, &f, &cert, 400, 3, 1e-12, ExecMode::default()).unwrap();
        assert_eq!(check.violations, 0);
        assert!(check.max_upper_ratio > 0.5 && check.max_upper_ratio <= 1.0);
        let seq = check_certificate_by_sampling(&p, &f, &cert, 400, 3, 1e-12, ExecMode::Sequential).unwrap();
        assert_eq!(check, seq);
    }
}
