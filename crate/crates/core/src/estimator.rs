//! Bias bounds for estimators built from `n` independent coordinates.
//!
//! An estimator whose value moves by at most `d_k` when coordinate `k`
//! changes is sub-Gaussian with variance proxy `sum d_k^2 / 4` (McDiarmid),
//! and the KL divergence of product measures adds up over coordinates. The
//! resulting bias bound does not degrade with `n`, unlike the Pinsker bound.

use serde::{Deserialize, Serialize};

use crate::concentration::{u_divergence, ConcentrationBound};
use crate::divergence::Sign;
use crate::error::{BoundError, Result};
use crate::numeric::{compensated_sum, stream_rng};
use crate::par::{count_indices, ExecMode};

use rand::Rng;

/// Per-coordinate oscillation constants of an estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedDifferences {
    d: Vec<f64>,
    iid_c: Option<f64>,
}

impl BoundedDifferences {
    pub fn new(d: Vec<f64>, iid_c: Option<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(BoundError::EmptySample);
        }
        if let Some(v) = d.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(BoundError::Domain(format!("oscillation constants must be >= 0, got {v}")));
        }
        if let Some(c) = iid_c {
            let cap = c / d.len() as f64;
            if !(c >= 0.0) || d.iter().any(|v| *v > cap * (1.0 + 1e-12)) {
                return Err(BoundError::PreconditionViolation(format!(
                    "all d_k must be <= C/n = {cap}"
                )));
            }
        }
        Ok(Self { d, iid_c })
    }

    /// `d_k = C/n` for all `k`.
    pub fn iid(c: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(BoundError::EmptySample);
        }
        Self::new(vec![c / n as f64; n], Some(c))
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn iid_c(&self) -> Option<f64> {
        self.iid_c
    }

    pub fn sum_sq(&self) -> f64 {
        compensated_sum(self.d.iter().map(|v| v * v))
    }
}

/// Sub-Gaussian envelope `exp(c^2 sum d_k^2 / 8)` of the centered estimator.
pub fn mcdiarmid_mgf_envelope(bd: &BoundedDifferences) -> ConcentrationBound {
    ConcentrationBound::SubGaussian { sigma_b: bd.sum_sq().sqrt() / 2.0 }
}

/// Constant used for McDiarmid-derived bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// `sqrt(sum d_k^2) sqrt(2 sum R)`, the customary constant.
    #[default]
    Conservative,
    /// The minimized envelope bound `sqrt(sum d_k^2 sum R / 2)`, a factor 2 sharper.
    Optimized,
}

/// Upper bound on `|E_Q[estimator] - E_P[estimator]|` for product measures
/// with per-coordinate divergences `kl_per_coordinate`.
pub fn estimator_bias_bound(bd: &BoundedDifferences, kl_per_coordinate: &[f64], mode: BoundMode) -> Result<f64> {
    if kl_per_coordinate.len() != bd.n() {
        return Err(BoundError::LengthMismatch { expected: bd.n(), got: kl_per_coordinate.len() });
    }
    if let Some(v) = kl_per_coordinate.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(BoundError::Domain(format!("KL values must be finite and >= 0, got {v}")));
    }
    let total_kl = compensated_sum(kl_per_coordinate.iter().copied());
    match mode {
        BoundMode::Conservative => Ok(bd.sum_sq().sqrt() * (2.0 * total_kl).sqrt()),
        BoundMode::Optimized => u_divergence(&mcdiarmid_mgf_envelope(bd), total_kl, Sign::Plus),
    }
}

fn check_kl(kl: f64) -> Result<()> {
    if kl >= 0.0 && kl.is_finite() {
        Ok(())
    } else {
        Err(BoundError::Domain(format!("KL must be finite and >= 0, got {kl}")))
    }
}

/// `sup_x |E_Q[F_n(x)] - F_P(x)| <= sqrt(2 R(Q||P))` for the empirical CDF.
pub fn cdf_bias_bound(kl: f64) -> Result<f64> {
    check_kl(kl)?;
    Ok((2.0 * kl).sqrt())
}

/// Bias bound for the unbiased sample variance of data with `|X| <= m_abs`.
pub fn sample_variance_bias_bound(m_abs: f64, n: usize, kl: f64) -> Result<f64> {
    check_kl(kl)?;
    if !(m_abs > 0.0) {
        return Err(BoundError::Domain(format!("|X| bound must be positive, got {m_abs}")));
    }
    if n < 2 {
        return Err(BoundError::Domain(format!("sample variance needs n >= 2, got {n}")));
    }
    let n = n as f64;
    Ok(8.0 * m_abs * m_abs * n / (n - 1.0) * (2.0 * kl).sqrt())
}

/// `n -> inf` limit of [`sample_variance_bias_bound`].
pub fn sample_variance_bias_bound_limit(m_abs: f64, kl: f64) -> Result<f64> {
    check_kl(kl)?;
    if !(m_abs > 0.0) {
        return Err(BoundError::Domain(format!("|X| bound must be positive, got {m_abs}")));
    }
    Ok(8.0 * m_abs * m_abs * (2.0 * kl).sqrt())
}

/// Fraction of a sorted sample that is `<= x`.
pub fn empirical_cdf(sorted_sample: &[f64], x: f64) -> Result<f64> {
    if sorted_sample.is_empty() {
        return Err(BoundError::EmptySample);
    }
    if !sorted_sample.is_sorted() {
        return Err(BoundError::PreconditionViolation("sample must be sorted".into()));
    }
    Ok(ecdf_sorted(sorted_sample, x))
}

fn ecdf_sorted(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|v| *v <= x) as f64 / sorted.len() as f64
}

/// DKW half-width `sqrt(log(2/alpha) / 2n)`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(BoundError::Domain("DKW needs n >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BoundError::Domain(format!("alpha must be in (0, 1), got {alpha}")));
    }
    Ok(((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt())
}

/// Simultaneous band for the CDF of every model within KL `eta^2` of the
/// data-generating one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub xs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
    pub eta: f64,
    pub n: usize,
    pub epsilon_n: f64,
}

impl ConfidenceBand {
    /// Half-width before clipping.
    pub fn half_width(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.eta + self.epsilon_n
    }

    /// `0 <= lower <= upper <= 1` and both sides nondecreasing.
    pub fn check_invariants(&self) -> Result<()> {
        let ok_bounds = self
            .lower
            .iter()
            .zip(&self.upper)
            .all(|(l, u)| 0.0 <= *l && l <= u && *u <= 1.0);
        if !ok_bounds {
            return Err(BoundError::PreconditionViolation("band leaves [0, 1] or crosses".into()));
        }
        if !self.lower.is_sorted() || !self.upper.is_sorted() {
            return Err(BoundError::PreconditionViolation("band is not monotone".into()));
        }
        Ok(())
    }
}

/// DKW band widened by the model-bias term `sqrt(2) eta`.
///
/// `xs = None` evaluates on the sorted sample with `-inf` and `+inf`
/// sentinels; a supplied grid is sorted first.
pub fn confidence_band(sample: &[f64], xs: Option<&[f64]>, alpha: f64, eta: f64) -> Result<ConfidenceBand> {
    if sample.is_empty() {
        return Err(BoundError::EmptySample);
    }
    if let Some(v) = sample.iter().find(|v| !v.is_finite()) {
        return Err(BoundError::Domain(format!("non-finite sample value {v}")));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(BoundError::Domain(format!("eta must be finite and >= 0, got {eta}")));
    }
    let eps = dkw_epsilon(sample.len(), alpha)?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = match xs {
        Some(g) => {
            if let Some(v) = g.iter().find(|v| v.is_nan()) {
                return Err(BoundError::Domain(format!("grid contains {v}")));
            }
            g.to_vec()
        }
        None => std::iter::once(f64::NEG_INFINITY)
            .chain(sorted.iter().copied())
            .chain(std::iter::once(f64::INFINITY))
            .collect(),
    };
    grid.sort_by(f64::total_cmp);
    let half = std::f64::consts::SQRT_2 * eta + eps;
    let (lower, upper) = grid
        .iter()
        .map(|&x| {
            let f = ecdf_sorted(&sorted, x);
            ((f - half).clamp(0.0, 1.0), (f + half).clamp(0.0, 1.0))
        })
        .unzip();
    Ok(ConfidenceBand { xs: grid, lower, upper, alpha, eta, n: sample.len(), epsilon_n: eps })
}

/// `||f||_inf sqrt(2 n R(Q||P))`: Pinsker applied to the product measure.
pub fn pinsker_bound(f_sup: f64, n: usize, kl: f64) -> Result<f64> {
    check_kl(kl)?;
    if !(f_sup >= 0.0) {
        return Err(BoundError::Domain(format!("sup norm must be >= 0, got {f_sup}")));
    }
    Ok(f_sup * (2.0 * n as f64 * kl).sqrt())
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `sorted` and
/// the Uniform(0, 1) CDF.
pub fn ks_uniform(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Outcome of a band coverage experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub covered: usize,
    pub trials: usize,
}

/// Draws `trials` Uniform(0, 1) samples of size `n` (trial `k` uses stream
/// `k` of `seed`) and counts the bands with `eta = 0` that contain the true
/// CDF everywhere.
pub fn band_coverage(n: usize, alpha: f64, trials: usize, seed: u64, mode: ExecMode) -> Result<CoverageReport> {
    let eps = dkw_epsilon(n, alpha)?;
    let covered = count_indices(trials, mode, |k| {
        let mut rng = stream_rng(seed, k as u64);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        xs.sort_by(f64::total_cmp);
        ks_uniform(&xs) <= eps
    });
    Ok(CoverageReport { covered, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn unbiased_variance(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn envelope_examples() {
        let bd = BoundedDifferences::iid(1.0, 8).unwrap();
        let ConcentrationBound::SubGaussian { sigma_b } = mcdiarmid_mgf_envelope(&bd) else { panic!() };
        assert!((sigma_b * sigma_b - 1.0 / 32.0).abs() < 1e-15);

        let bd = BoundedDifferences::new(vec![3.0], None).unwrap();
        let ConcentrationBound::SubGaussian { sigma_b } = mcdiarmid_mgf_envelope(&bd) else { panic!() };
        assert!((sigma_b * sigma_b - 9.0 / 4.0).abs() < 1e-15);

        let (m, n) = (1.5_f64, 9usize);
        let dk = 8.0 * m * m / (n as f64 - 1.0);
        let bd = BoundedDifferences::new(vec![dk; n], None).unwrap();
        let ConcentrationBound::SubGaussian { sigma_b } = mcdiarmid_mgf_envelope(&bd) else { panic!() };
        let expect = 16.0 * m.powi(4) * n as f64 / ((n as f64 - 1.0) * (n as f64 - 1.0));
        assert!((sigma_b * sigma_b - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn bias_bound_examples() {
        let bd = BoundedDifferences::new(vec![1.0, 1.0], None).unwrap();
        assert!((estimator_bias_bound(&bd, &[0.25, 0.25], BoundMode::Optimized).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((estimator_bias_bound(&bd, &[0.25, 0.25], BoundMode::Conservative).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(estimator_bias_bound(&bd, &[0.0, 0.0], BoundMode::Conservative).unwrap(), 0.0);
        assert_eq!(estimator_bias_bound(&bd, &[0.0, 0.0], BoundMode::Optimized).unwrap(), 0.0);
        assert!(matches!(
            estimator_bias_bound(&bd, &[0.1], BoundMode::Conservative),
            Err(BoundError::LengthMismatch { expected: 2, got: 1 })
        ));
        // iid: C sqrt(2 R)
        let bd = BoundedDifferences::iid(2.0, 50).unwrap();
        let b = estimator_bias_bound(&bd, &[0.02; 50], BoundMode::Conservative).unwrap();
        assert!((b - 2.0 * 0.04f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn iid_violation_rejected() {
        assert!(BoundedDifferences::new(vec![0.6, 0.1], Some(1.0)).is_err());
        assert!(BoundedDifferences::new(vec![-0.1], None).is_err());
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(cdf_bias_bound(0.0).unwrap(), 0.0);
        assert!((cdf_bias_bound(0.02).unwrap() - 0.2).abs() < 1e-15);
        assert!((cdf_bias_bound(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((sample_variance_bias_bound(1.0, 11, 0.02).unwrap() - 1.76).abs() < 1e-12);
        assert!((sample_variance_bias_bound_limit(1.0, 0.02).unwrap() - 1.6).abs() < 1e-12);
        assert!(sample_variance_bias_bound(1.0, 1, 0.02).is_err());
        assert!((pinsker_bound(1.0, 100, 0.01).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ecdf_and_dkw() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(empirical_cdf(&s, 0.0).unwrap(), 0.0);
        assert_eq!(empirical_cdf(&s, 4.0).unwrap(), 1.0);
        assert!((empirical_cdf(&s, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(empirical_cdf(&[], 0.0), Err(BoundError::EmptySample)));
        assert!((dkw_epsilon(200, 0.05).unwrap() - (40f64.ln() / 400.0).sqrt()).abs() < 1e-15);
        assert!((dkw_epsilon(200, 0.05).unwrap() - 0.09603).abs() < 1e-5);
        assert!((dkw_epsilon(100, 0.05).unwrap() - (40f64.ln() / 200.0).sqrt()).abs() < 1e-15);
        assert!((dkw_epsilon(100, 0.05).unwrap() - 0.135812).abs() < 1e-5);
        assert!(dkw_epsilon(10, 2.0).is_err());
    }

    #[test]
    fn band_examples() {
        let sample: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let band = confidence_band(&sample, None, 0.05, 0.1).unwrap();
        let expect = 2f64.sqrt() * 0.1 + (40f64.ln() / 200.0).sqrt();
        assert!((band.half_width() - expect).abs() < 1e-15);
        assert!((band.half_width() - 0.277233).abs() < 1e-5);
        assert_eq!(band.xs.len(), 102);
        assert_eq!((band.lower[0], band.upper[101]), (0.0, 1.0));
        band.check_invariants().unwrap();
        // F_n = 0.9 at x = 0.895 and the upper side clips.
        let band = confidence_band(&sample, Some(&[0.895]), 0.05, 0.1).unwrap();
        assert_eq!(band.upper[0], 1.0);
        assert!((band.lower[0] - (0.9 - band.half_width())).abs() < 1e-15);
        // The band narrows toward the ECDF as alpha grows and n grows.
        let big: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
        let band = confidence_band(&big, Some(&[50_000.0]), 0.999, 0.0).unwrap();
        assert!(band.upper[0] - band.lower[0] < 0.01);
    }

    #[test]
    fn ks_matches_band_check() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..50 {
            let mut xs: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            xs.sort_by(f64::total_cmp);
            let band = confidence_band(&xs, None, 0.3, 0.0).unwrap();
            // The ECDF is a step function; check the band against the CDF
            // on both sides of each jump.
            let mut covered = true;
            for i in 1..band.xs.len() - 1 {
                let x = band.xs[i];
                let (l, u) = (band.lower[i], band.upper[i]);
                let (lp, up) = (band.lower[i - 1], band.upper[i - 1]);
                covered &= l <= x && x <= u && lp <= x && x <= up;
            }
            assert_eq!(covered, ks_uniform(&xs) <= band.epsilon_n);
        }
    }

    #[test]
    fn coverage_modes_agree() {
        let s = band_coverage(50, 0.1, 200, 11, ExecMode::Sequential).unwrap();
        let p = band_coverage(50, 0.1, 200, 11, ExecMode::Parallel).unwrap();
        assert_eq!(s, p);
        assert!(s.covered >= 170);
    }

    #[test]
    fn sample_variance_oscillation_within_constant() {
        let mut rng = stream_rng(17, 0);
        let m = 2.0;
        for n in 2..=8usize {
            let limit = 8.0 * m * m / (n as f64 - 1.0);
            let mut worst = 0.0_f64;
            for _ in 0..2000 {
                let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-m..=m)).collect();
                let v0 = unbiased_variance(&x);
                let k = rng.random_range(0..n);
                x[k] = if rng.random::<bool>() { m } else { -m };
                worst = worst.max((unbiased_variance(&x) - v0).abs());
            }
            assert!(worst <= limit, "n = {n}: {worst} > {limit}");
        }
    }

    #[test]
    fn sample_variance_bias_dominates_tilted_pair() {
        // P uniform on {-1, 1}; Q puts mass q on +1. Var_P = 1, Var_Q = 1 - (2q-1)^2.
        let m = 1.0;
        for q in [0.55f64, 0.7, 0.9, 0.99] {
            let kl = q * (2.0 * q).ln() + (1.0 - q) * (2.0 * (1.0 - q)).ln();
            let gap = (2.0 * q - 1.0) * (2.0 * q - 1.0);
            for n in [2, 3, 10, 1000] {
                assert!(gap <= sample_variance_bias_bound(m, n, kl).unwrap());
            }
        }
    }

    proptest! {
        #[test]
        fn optimized_never_exceeds_conservative(d in proptest::collection::vec(0.0f64..5.0, 1..20), r in 0.0f64..2.0) {
            let bd = BoundedDifferences::new(d.clone(), None).unwrap();
            let kl = vec![r; d.len()];
            let p = estimator_bias_bound(&bd, &kl, BoundMode::Conservative).unwrap();
            let o = estimator_bias_bound(&bd, &kl, BoundMode::Optimized).unwrap();
            prop_assert!(o <= p + 1e-12 * p.max(1.0));
            prop_assert!((2.0 * o - p).abs() <= 1e-10 * p.max(1.0));
        }

        #[test]
        fn iid_bound_is_scale_free(c in 0.01f64..10.0, r in 0.0f64..1.0, n in 1usize..2000) {
            let bd = BoundedDifferences::iid(c, n).unwrap();
            let b = estimator_bias_bound(&bd, &vec![r; n], BoundMode::Conservative).unwrap();
            prop_assert!((b - c * (2.0 * r).sqrt()).abs() <= 1e-12 * c.max(1.0));
        }

        #[test]
        fn bands_satisfy_invariants(sample in proptest::collection::vec(-10.0f64..10.0, 1..60),
                                    alpha in 0.01f64..0.99, eta in 0.0f64..1.0) {
            confidence_band(&sample, None, alpha, eta).unwrap().check_invariants().unwrap();
        }
    }
}
