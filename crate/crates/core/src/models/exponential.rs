use crate::concentration::ConcentrationBound;
use crate::divergence::{kl_exponential_pair, ExponentialCgf};
use crate::error::{BoundError, Result};

/// `Exp(rate)` with mean `1/rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialModel {
    rate: f64,
}

impl ExponentialModel {
    pub fn new(rate: f64) -> Result<Self> {
        if rate > 0.0 && rate.is_finite() {
            Ok(Self { rate })
        } else {
            Err(BoundError::Domain(format!("rate must be positive, got {rate}")))
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    /// `H(c) = -log(1 - c/rate) - c/rate` on `(-inf, rate)`.
    pub fn centered_cgf(&self) -> ExponentialCgf {
        ExponentialCgf { rate: self.rate }
    }

    /// `R(other || self)`.
    pub fn kl_from(&self, other: &ExponentialModel) -> Result<f64> {
        kl_exponential_pair(other.rate, self.rate)
    }

    /// `E_other[X] - E_self[X]`.
    pub fn mean_gap(&self, other: &ExponentialModel) -> f64 {
        other.mean() - self.mean()
    }

    /// For `rate = 1`: `M(c) <= 1 + c + 2c^2 <= exp(c + 2c^2)` on `|c| < 1/2`,
    /// i.e. the centered MGF is below `exp(2 c^2)` there.
    ///
    /// Returned as an interval sub-Gaussian envelope with proxy variance 4
    /// (`exp(sigma_b^2 c^2 / 2)`, `sigma_b = 2`) and the removed drift 1.
    pub fn sub_exponential_envelope(&self) -> Result<ConcentrationBound> {
        if self.rate != 1.0 {
            return Err(BoundError::Unsupported(format!(
                "the sub-exponential envelope is only available for rate 1, got {}",
                self.rate
            )));
        }
        Ok(ConcentrationBound::IntervalSubGaussian { sigma_b: 2.0, c_max: 0.5, drift: 1.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concentration::phi_eval;
    use crate::divergence::CumulantFunction;

    #[test]
    fn cgf_examples() {
        let h = ExponentialModel::new(1.0).unwrap().centered_cgf();
        assert_eq!(h.value(0.0).unwrap(), 0.0);
        assert_eq!(h.deriv1(0.0).unwrap(), 0.0);
        assert!((h.deriv2(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(h.value(1.0 - 1e-12).unwrap() > 20.0);
        assert!(h.value(1.0).is_err());
    }

    #[test]
    fn envelope_dominates_mgf() {
        let m = ExponentialModel::new(1.0).unwrap();
        let env = m.sub_exponential_envelope().unwrap();
        assert_eq!(phi_eval(&env, 0.0).unwrap(), 1.0);
        assert_eq!(phi_eval(&env, 0.5).unwrap(), f64::INFINITY);
        for i in -499..500 {
            let c = i as f64 * 1e-3;
            let centered_mgf = (-c).exp() / (1.0 - c);
            assert!(phi_eval(&env, c).unwrap() >= centered_mgf, "c = {c}");
            assert!((phi_eval(&env, c).unwrap() - (2.0 * c * c).exp()).abs() < 1e-14);
        }
        assert!(matches!(
            ExponentialModel::new(2.0).unwrap().sub_exponential_envelope(),
            Err(BoundError::Unsupported(_))
        ));
    }

    #[test]
    fn kl_and_gap() {
        let p = ExponentialModel::new(1.0).unwrap();
        let q = ExponentialModel::new(2.0).unwrap();
        assert!((p.kl_from(&q).unwrap() - (2f64.ln() - 0.5)).abs() < 1e-15);
        assert_eq!(p.mean_gap(&q), -0.5);
    }
}
