//! Cumulant generating functions `H(c) = log E_P[exp(c (f - E_P f))]`.

use crate::divergence::DiscreteDistribution;
use crate::error::{BoundError, Result};
use crate::numeric::log_sum_exp;

/// Log-MGF of a centered quantity of interest, with its first two
/// derivatives and the open interval `(d-, d+)` on which it is finite.
///
/// Implementations satisfy `H(0) = H'(0) = 0` and `H'' >= 0`.
pub trait CumulantFunction: Send + Sync {
    fn value(&self, c: f64) -> Result<f64>;
    fn deriv1(&self, c: f64) -> Result<f64>;
    fn deriv2(&self, c: f64) -> Result<f64>;

    /// `(H, H', H'')` at `c`; override when the three share work.
    fn all(&self, c: f64) -> Result<(f64, f64, f64)> {
        Ok((self.value(c)?, self.deriv1(c)?, self.deriv2(c)?))
    }

    /// Open finiteness interval `(d-, d+)`; ends may be infinite.
    fn domain(&self) -> (f64, f64);

    /// True when the quantity of interest is almost surely constant.
    fn is_degenerate(&self) -> bool {
        !matches!(self.deriv2(0.0), Ok(v) if v > 0.0)
    }
}

impl<T: CumulantFunction + ?Sized> CumulantFunction for &T {
    fn value(&self, c: f64) -> Result<f64> {
        (**self).value(c)
    }
    fn deriv1(&self, c: f64) -> Result<f64> {
        (**self).deriv1(c)
    }
    fn deriv2(&self, c: f64) -> Result<f64> {
        (**self).deriv2(c)
    }
    fn all(&self, c: f64) -> Result<(f64, f64, f64)> {
        (**self).all(c)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn is_degenerate(&self) -> bool {
        (**self).is_degenerate()
    }
}

impl<T: CumulantFunction + ?Sized> CumulantFunction for std::sync::Arc<T> {
    fn value(&self, c: f64) -> Result<f64> {
        (**self).value(c)
    }
    fn deriv1(&self, c: f64) -> Result<f64> {
        (**self).deriv1(c)
    }
    fn deriv2(&self, c: f64) -> Result<f64> {
        (**self).deriv2(c)
    }
    fn all(&self, c: f64) -> Result<(f64, f64, f64)> {
        (**self).all(c)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn is_degenerate(&self) -> bool {
        (**self).is_degenerate()
    }
}

fn check_domain(c: f64, domain: (f64, f64)) -> Result<()> {
    if c > domain.0 && c < domain.1 {
        Ok(())
    } else {
        Err(BoundError::Domain(format!(
            "c = {c} outside the MGF domain ({}, {})",
            domain.0, domain.1
        )))
    }
}

/// Exact CGF of a finite law: `H(c) = log sum_i p_i exp(c (f_i - mu))`.
///
/// Evaluated with log-sum-exp, so arbitrarily large `|c|` is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCgf {
    log_weights: Vec<f64>,
    centered: Vec<f64>,
    mean: f64,
    constant: bool,
}

impl DiscreteCgf {
    /// `f_values` aligned with the atoms of `p`. Zero-weight atoms are dropped.
    pub fn new(p: &DiscreteDistribution, f_values: &[f64]) -> Result<Self> {
        if f_values.len() != p.len() {
            return Err(BoundError::LengthMismatch {
                expected: p.len(),
                got: f_values.len(),
            });
        }
        Self::from_weighted(p.weights(), f_values)
    }

    /// CGF of `f(X)` with `X ~ p` and `f` the identity on the atoms.
    pub fn identity(p: &DiscreteDistribution) -> Self {
        Self::from_weighted(p.weights(), p.atoms()).expect("validated distribution")
    }

    /// From raw (possibly unnormalized) nonnegative weights and values.
    pub fn from_weighted(weights: &[f64], f_values: &[f64]) -> Result<Self> {
        if weights.len() != f_values.len() {
            return Err(BoundError::LengthMismatch {
                expected: weights.len(),
                got: f_values.len(),
            });
        }
        let total = crate::numeric::compensated_sum(weights.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return Err(BoundError::InvalidDistribution(format!("total weight {total}")));
        }
        let (w, f): (Vec<f64>, Vec<f64>) = weights
            .iter()
            .zip(f_values)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, f)| (w / total, *f))
            .unzip();
        if let Some(v) = f.iter().find(|v| !v.is_finite()) {
            return Err(BoundError::Domain(format!("non-finite QoI value {v}")));
        }
        let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let constant = lo == hi;
        let mean = if constant {
            lo
        } else {
            crate::numeric::compensated_sum(w.iter().zip(&f).map(|(w, f)| w * f)).clamp(lo, hi)
        };
        Ok(Self {
            log_weights: w.iter().map(|w| w.ln()).collect(),
            centered: f.iter().map(|f| f - mean).collect(),
            mean,
            constant,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Largest centered value, `f+ - E_P[f]`.
    pub fn upper_gap(&self) -> f64 {
        self.centered.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Normalized tilted weights `p_i e^{c f_i} / M(c)`.
    pub fn tilted_weights(&self, c: f64) -> Vec<f64> {
        let logits: Vec<f64> = self
            .log_weights
            .iter()
            .zip(&self.centered)
            .map(|(lw, x)| lw + c * x)
            .collect();
        let lse = log_sum_exp(&logits);
        logits.iter().map(|l| (l - lse).exp()).collect()
    }

    fn cumulants(&self, c: f64) -> (f64, f64, f64) {
        if self.constant {
            return (0.0, 0.0, 0.0);
        }
        let logits: Vec<f64> = self
            .log_weights
            .iter()
            .zip(&self.centered)
            .map(|(lw, x)| lw + c * x)
            .collect();
        let lse = log_sum_exp(&logits);
        let w: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
        let m1: f64 = w.iter().zip(&self.centered).map(|(w, x)| w * x).sum();
        let m2: f64 = w
            .iter()
            .zip(&self.centered)
            .map(|(w, x)| w * (x - m1) * (x - m1))
            .sum();
        let value = if c == 0.0 { 0.0 } else { lse };
        (value, if c == 0.0 { 0.0 } else { m1 }, m2)
    }
}

impl CumulantFunction for DiscreteCgf {
    fn value(&self, c: f64) -> Result<f64> {
        Ok(self.cumulants(c).0)
    }
    fn deriv1(&self, c: f64) -> Result<f64> {
        Ok(self.cumulants(c).1)
    }
    fn deriv2(&self, c: f64) -> Result<f64> {
        Ok(self.cumulants(c).2)
    }
    fn all(&self, c: f64) -> Result<(f64, f64, f64)> {
        Ok(self.cumulants(c))
    }
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn is_degenerate(&self) -> bool {
        self.constant
    }
}

/// `cgf_discrete`: the exact CGF of `f` under a finite law.
pub fn cgf_discrete(p: &DiscreteDistribution, f_values: &[f64]) -> Result<DiscreteCgf> {
    DiscreteCgf::new(p, f_values)
}

/// `H(c) = variance c^2 / 2`, optionally restricted to `|c| < c_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCgf {
    pub variance: f64,
    pub c_max: f64,
}

impl GaussianCgf {
    pub fn new(variance: f64) -> Result<Self> {
        Self::restricted(variance, f64::INFINITY)
    }

    pub fn restricted(variance: f64, c_max: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(BoundError::Domain(format!("variance must be >= 0, got {variance}")));
        }
        if !(c_max > 0.0) {
            return Err(BoundError::Domain(format!("c_max must be > 0, got {c_max}")));
        }
        Ok(Self { variance, c_max })
    }
}

impl CumulantFunction for GaussianCgf {
    fn value(&self, c: f64) -> Result<f64> {
        check_domain(c, self.domain())?;
        Ok(0.5 * self.variance * c * c)
    }
    fn deriv1(&self, c: f64) -> Result<f64> {
        check_domain(c, self.domain())?;
        Ok(self.variance * c)
    }
    fn deriv2(&self, c: f64) -> Result<f64> {
        check_domain(c, self.domain())?;
        Ok(self.variance)
    }
    fn domain(&self) -> (f64, f64) {
        (-self.c_max, self.c_max)
    }
}

/// Centered CGF of `X ~ Exp(rate)`: `H(c) = -log(1 - c/rate) - c/rate` on `(-inf, rate)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialCgf {
    pub rate: f64,
}

impl ExponentialCgf {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(BoundError::Domain(format!("rate must be positive, got {rate}")));
        }
        Ok(Self { rate })
    }
}

impl CumulantFunction for ExponentialCgf {
    fn value(&self, c: f64) -> Result<f64> {
        check_domain(c, self.domain())?;
        let u = c / self.rate;
        Ok(-(-u).ln_1p() - u)
    }
    fn deriv1(&self, c: f64) -> Result<f64> {
        check_domain(c, self.domain())?;
        Ok(1.0 / (self.rate - c) - 1.0 / self.rate)
    }
    fn deriv2(&self, c: f64) -> Result<f64> {
        check_domain(c, self.domain())?;
        let d = self.rate - c;
        Ok(1.0 / (d * d))
    }
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, self.rate)
    }
}

/// CGF of `-f`: `c -> H(-c)`.
#[derive(Debug, Clone, Copy)]
pub struct Mirrored<H>(pub H);

impl<H: CumulantFunction> CumulantFunction for Mirrored<H> {
    fn value(&self, c: f64) -> Result<f64> {
        self.0.value(-c)
    }
    fn deriv1(&self, c: f64) -> Result<f64> {
        self.0.deriv1(-c).map(|v| -v)
    }
    fn deriv2(&self, c: f64) -> Result<f64> {
        self.0.deriv2(-c)
    }
    fn all(&self, c: f64) -> Result<(f64, f64, f64)> {
        self.0.all(-c).map(|(h, d1, d2)| (h, -d1, d2))
    }
    fn domain(&self) -> (f64, f64) {
        let (lo, hi) = self.0.domain();
        (-hi, -lo)
    }
    fn is_degenerate(&self) -> bool {
        self.0.is_degenerate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bernoulli_pm1() -> DiscreteDistribution {
        DiscreteDistribution::two_point(-1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn constant_qoi_is_identically_zero() {
        let p = DiscreteDistribution::uniform(vec![0.0, 1.0, 2.0]).unwrap();
        let h = cgf_discrete(&p, &[3.0, 3.0, 3.0]).unwrap();
        for c in [-5.0, 0.0, 2.0, 1e6] {
            assert_eq!(h.all(c).unwrap(), (0.0, 0.0, 0.0));
        }
        assert!(h.is_degenerate());
    }

    #[test]
    fn bernoulli_is_log_cosh() {
        let h = DiscreteCgf::identity(&bernoulli_pm1());
        assert!((h.value(1.0).unwrap() - 1f64.cosh().ln()).abs() < 1e-15);
        assert!((h.value(1.0).unwrap() - 0.433781).abs() < 1e-6);
        assert!((h.deriv1(0.7).unwrap() - 0.7f64.tanh()).abs() < 1e-15);
        // Large tilts stay finite.
        assert!((h.value(1e6).unwrap() - (1e6 - 2f64.ln())).abs() < 1e-6);
    }

    #[test]
    fn two_point_curvature_is_variance() {
        let p = DiscreteDistribution::new(vec![-0.25, 1.0], vec![0.8, 0.2]).unwrap();
        let h = DiscreteCgf::identity(&p);
        assert!((h.deriv2(0.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exponential_closed_form() {
        let h = ExponentialCgf::new(1.0).unwrap();
        assert_eq!(h.value(0.0).unwrap(), 0.0);
        assert_eq!(h.deriv1(0.0).unwrap(), 0.0);
        assert_eq!(h.deriv2(0.0).unwrap(), 1.0);
        assert!(h.value(1.0 - 1e-12).unwrap() > 20.0);
        assert!(h.value(1.0).is_err());
    }

    #[test]
    fn mirrored_flips_odd_derivatives() {
        let p = DiscreteDistribution::new(vec![-0.25, 1.0], vec![0.8, 0.2]).unwrap();
        let h = DiscreteCgf::identity(&p);
        let m = Mirrored(&h);
        assert_eq!(m.value(0.3).unwrap(), h.value(-0.3).unwrap());
        assert_eq!(m.deriv1(0.3).unwrap(), -h.deriv1(-0.3).unwrap());
        assert_eq!(Mirrored(ExponentialCgf::new(1.0).unwrap()).domain(), (-1.0, f64::INFINITY));
    }

    fn finite_difference_check<H: CumulantFunction>(h: &H, c: f64) {
        let step = 1e-5;
        let (v, d1, d2) = h.all(c).unwrap();
        let fd1 = (h.value(c + step).unwrap() - h.value(c - step).unwrap()) / (2.0 * step);
        let fd2 = (h.deriv1(c + step).unwrap() - h.deriv1(c - step).unwrap()) / (2.0 * step);
        assert!((d1 - fd1).abs() <= 1e-6 * d1.abs().max(1e-3), "H' at {c}: {d1} vs {fd1}");
        assert!((d2 - fd2).abs() <= 1e-6 * d2.abs().max(1e-3), "H'' at {c}: {d2} vs {fd2}");
        assert!(v.is_finite());
    }

    proptest! {
        #[test]
        fn discrete_cgf_invariants(
            atoms in prop::collection::vec(-5.0f64..5.0, 2..8),
            raw in prop::collection::vec(0.05f64..1.0, 8),
            cs in prop::collection::vec(-3.0f64..3.0, 1..6),
        ) {
            let n = atoms.len();
            let h = DiscreteCgf::from_weighted(&raw[..n], &atoms).unwrap();
            prop_assert!(h.value(0.0).unwrap().abs() < 1e-12);
            prop_assert!(h.deriv1(0.0).unwrap().abs() < 1e-12);
            let mut grid = cs.clone();
            grid.sort_by(f64::total_cmp);
            let mut prev_d1 = f64::NEG_INFINITY;
            let mut prev_g = f64::NEG_INFINITY;
            for c in grid.iter().copied().filter(|c| *c >= 0.0) {
                let (v, d1, d2) = h.all(c).unwrap();
                prop_assert!(d2 >= 0.0);
                prop_assert!(d1 >= prev_d1 - 1e-12);
                let g = c * d1 - v;
                prop_assert!(g >= prev_g - 1e-12);
                prev_d1 = d1;
                prev_g = g;
            }
            for &c in &cs {
                finite_difference_check(&h, c);
            }
        }
    }

    #[test]
    fn derivative_consistency_closed_forms() {
        let e = ExponentialCgf::new(1.0).unwrap();
        for c in [-2.0, -0.5, 0.1, 0.5, 0.9] {
            finite_difference_check(&e, c);
        }
        let g = GaussianCgf::new(2.0).unwrap();
        finite_difference_check(&g, 1.3);
    }
}
