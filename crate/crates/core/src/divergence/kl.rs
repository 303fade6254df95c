//! Closed-form and finite Kullback-Leibler divergences, in nats.

use crate::divergence::DiscreteDistribution;
use crate::error::{BoundError, Result};

/// `R(Q||P) = sum_i q_i log(q_i / p_i)` with `0 log 0 = 0`.
///
/// Atoms are matched by value; a `q`-atom missing from `p` counts as `p = 0`.
pub fn kl_discrete(q: &DiscreteDistribution, p: &DiscreteDistribution) -> Result<f64> {
    let mut terms = Vec::with_capacity(q.len());
    for (&atom, &qw) in q.atoms().iter().zip(q.weights()) {
        if qw == 0.0 {
            continue;
        }
        let pw = p
            .atoms()
            .iter()
            .position(|&a| a == atom)
            .map(|i| p.weights()[i])
            .unwrap_or(0.0);
        if pw == 0.0 {
            return Err(BoundError::AbsoluteContinuityViolation { atom, q: qw });
        }
        terms.push(qw * (qw / pw).ln());
    }
    // Rounding can leave a tiny negative value when q == p.
    Ok(crate::numeric::compensated_sum(terms).max(0.0))
}

/// `R(Exp(lambda_q) || Exp(lambda_p)) = log(lambda_q/lambda_p) + lambda_p/lambda_q - 1`.
pub fn kl_exponential_pair(lambda_q: f64, lambda_p: f64) -> Result<f64> {
    if !(lambda_q > 0.0) || !(lambda_p > 0.0) {
        return Err(BoundError::Domain(format!(
            "exponential rates must be positive, got {lambda_q} and {lambda_p}"
        )));
    }
    let r = lambda_p / lambda_q;
    // log(1/r) + r - 1, written to keep precision near r = 1.
    Ok((r - 1.0 - r.ln()).max(0.0))
}

/// KL divergence between two univariate normals.
pub fn kl_normal_pair(mu_q: f64, sigma_q: f64, mu_p: f64, sigma_p: f64) -> Result<f64> {
    if !(sigma_q > 0.0) || !(sigma_p > 0.0) {
        return Err(BoundError::Domain(format!(
            "standard deviations must be positive, got {sigma_q} and {sigma_p}"
        )));
    }
    let d = mu_q - mu_p;
    Ok((sigma_p / sigma_q).ln() + (sigma_q * sigma_q + d * d) / (2.0 * sigma_p * sigma_p) - 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::quadrature::{integrate, Support};

    fn bern(p_hi: f64) -> DiscreteDistribution {
        DiscreteDistribution::two_point(-1.0, 1.0, p_hi).unwrap()
    }

    #[test]
    fn discrete_identity_is_zero() {
        assert_eq!(kl_discrete(&bern(0.5), &bern(0.5)).unwrap(), 0.0);
    }

    #[test]
    fn discrete_direct_sum() {
        let q = DiscreteDistribution::new(vec![-1.0, 1.0], vec![0.8, 0.2]).unwrap();
        let expected = 0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln();
        assert!((kl_discrete(&q, &bern(0.5)).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.19274).abs() < 1e-5);
    }

    #[test]
    fn discrete_disjoint_support_errors() {
        let q = bern(0.0);
        let p = bern(1.0);
        assert!(matches!(
            kl_discrete(&q, &p),
            Err(BoundError::AbsoluteContinuityViolation { .. })
        ));
    }

    // Oracle: integrate q log(q/p) numerically.
    fn kl_exp_quadrature(lq: f64, lp: f64) -> f64 {
        let f = |x: f64| {
            let q = lq * (-lq * x).exp();
            let p = lp * (-lp * x).exp();
            if q == 0.0 {
                0.0
            } else {
                q * (q / p).ln()
            }
        };
        integrate(f, Support::LowerBounded { lo: 0.0, scale: 1.0 }, 1e-12).unwrap()
    }

    #[test]
    fn exponential_pair_matches_quadrature() {
        assert_eq!(kl_exponential_pair(1.0, 1.0).unwrap(), 0.0);
        let a = kl_exponential_pair(2.0, 1.0).unwrap();
        let b = kl_exponential_pair(1.0, 2.0).unwrap();
        assert!((a - (2f64.ln() - 0.5)).abs() < 1e-15);
        assert!((b - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!((a - kl_exp_quadrature(2.0, 1.0)).abs() < 1e-9);
        assert!((b - kl_exp_quadrature(1.0, 2.0)).abs() < 1e-9);
        assert!((a - 0.193147).abs() < 1e-6);
        assert!((b - 0.306853).abs() < 1e-6);
        assert!(kl_exponential_pair(0.0, 1.0).is_err());
    }

    fn kl_normal_quadrature(mq: f64, sq: f64, mp: f64, sp: f64) -> f64 {
        let logpdf = |x: f64, m: f64, s: f64| -0.5 * ((x - m) / s).powi(2) - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        let f = |x: f64| {
            let lq = logpdf(x, mq, sq);
            lq.exp() * (lq - logpdf(x, mp, sp))
        };
        integrate(f, Support::Real { scale: 1.0 }, 1e-12).unwrap()
    }

    #[test]
    fn normal_pair_matches_quadrature() {
        assert_eq!(kl_normal_pair(0.3, 1.2, 0.3, 1.2).unwrap(), 0.0);
        let a = kl_normal_pair(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
        assert!((a - kl_normal_quadrature(1.0, 1.0, 0.0, 1.0)).abs() < 1e-9);
        let b = kl_normal_pair(0.0, 2.0, 0.0, 1.0).unwrap();
        assert!((b - (0.5f64.ln() + 1.5)).abs() < 1e-15);
        assert!((b - kl_normal_quadrature(0.0, 2.0, 0.0, 1.0)).abs() < 1e-9);
        assert!(kl_normal_pair(0.0, -1.0, 0.0, 1.0).is_err());
    }
}
