use libm::erfc;

use crate::divergence::{QuadratureCgf, Support};
use crate::error::{BoundError, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Normal `N(mu, sigma^2)` conditioned on `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormalModel {
    pub mu: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

fn std_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        (-0.5 * z * z - LN_SQRT_2PI).exp()
    }
}

/// `z phi(z)`, zero at infinity.
fn z_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        z * std_pdf(z)
    }
}

/// `Phi(b) - Phi(a)` evaluated on whichever tail keeps precision.
fn std_mass(a: f64, b: f64) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if a > 0.0 {
        0.5 * (erfc(a * s) - erfc(b * s))
    } else {
        0.5 * (erfc(-b * s) - erfc(-a * s))
    }
}

impl TruncatedNormalModel {
    pub fn new(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(BoundError::Domain(format!("need finite mu and sigma > 0, got {mu}, {sigma}")));
        }
        if !(lo < hi) {
            return Err(BoundError::Domain(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        let m = Self { mu, sigma, lo, hi };
        if !(m.mass() > 0.0) {
            return Err(BoundError::InvalidDistribution(format!(
                "[{lo}, {hi}] carries no mass under N({mu}, {sigma}^2)"
            )));
        }
        Ok(m)
    }

    fn standardized(&self) -> (f64, f64) {
        ((self.lo - self.mu) / self.sigma, (self.hi - self.mu) / self.sigma)
    }

    /// Normal probability of `[lo, hi]`.
    pub fn mass(&self) -> f64 {
        let (a, b) = self.standardized();
        std_mass(a, b)
    }

    /// Closed-form `(mean, variance)`.
    pub fn moments(&self) -> (f64, f64) {
        let (a, b) = self.standardized();
        let z = std_mass(a, b);
        let r = (std_pdf(a) - std_pdf(b)) / z;
        let mean = self.mu + self.sigma * r;
        let var = self.sigma * self.sigma * (1.0 + (z_pdf(a) - z_pdf(b)) / z - r * r);
        (mean, var)
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return f64::NEG_INFINITY;
        }
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - LN_SQRT_2PI - self.sigma.ln() - self.mass().ln()
    }

    pub fn support(&self) -> Support {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => Support::Interval { lo: self.lo, hi: self.hi },
            (true, false) => Support::LowerBounded { lo: self.lo, scale: self.sigma },
            (false, true) => Support::UpperBounded { hi: self.hi, scale: self.sigma },
            (false, false) => Support::Real { scale: self.sigma },
        }
    }

    /// CGF of `X` itself, by quadrature; finite for every `c`.
    pub fn cgf(&self, tol: f64) -> Result<QuadratureCgf> {
        let m = *self;
        let log_z = m.mass().ln() + LN_SQRT_2PI + m.sigma.ln();
        QuadratureCgf::from_log_density(
            move |x| {
                if x < m.lo || x > m.hi {
                    f64::NEG_INFINITY
                } else {
                    let z = (x - m.mu) / m.sigma;
                    -0.5 * z * z - log_z
                }
            },
            self.support(),
            |x| x,
            (f64::NEG_INFINITY, f64::INFINITY),
            tol,
            Vec::new(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{integrate, CumulantFunction};

    fn quadrature_moments(m: &TruncatedNormalModel) -> (f64, f64) {
        let p = |x: f64| m.log_density(x).exp();
        let mean = integrate(|x| x * p(x), m.support(), 1e-13).unwrap();
        let var = integrate(|x| (x - mean) * (x - mean) * p(x), m.support(), 1e-13).unwrap();
        (mean, var)
    }

    #[test]
    fn standard_window() {
        let m = TruncatedNormalModel::new(0.0, 1.0, -1.0, 1.0).unwrap();
        let (mean, var) = m.moments();
        assert!(mean.abs() < 1e-15);
        assert!((var - 0.291_125_094_772_793).abs() < 1e-12);
        assert!((var - 0.29112).abs() < 1e-5);
        let (qm, qv) = quadrature_moments(&m);
        assert!((qm - mean).abs() < 1e-9 && (qv - var).abs() < 1e-9);
    }

    #[test]
    fn untruncated() {
        let m = TruncatedNormalModel::new(0.0, 1.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let (mean, var) = m.moments();
        assert!(mean.abs() < 1e-15 && (var - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let cases = [
            (0.5, 2.0, -1.0, 3.0),
            (0.0, 1.0, 0.0, f64::INFINITY),
            (1.0, 0.5, f64::NEG_INFINITY, 0.7),
            (0.0, 1.0, 4.0, 6.0),
            (-2.0, 3.0, -10.0, -1.0),
        ];
        for (mu, s, lo, hi) in cases {
            let m = TruncatedNormalModel::new(mu, s, lo, hi).unwrap();
            let (mean, var) = m.moments();
            let (qm, qv) = quadrature_moments(&m);
            assert!((qm - mean).abs() < 1e-9, "{cases:?}: mean {mean} vs {qm}");
            assert!((qv - var).abs() < 1e-9, "var {var} vs {qv}");
        }
    }

    #[test]
    fn quadrature_cgf_curvature_is_variance() {
        let m = TruncatedNormalModel::new(0.0, 1.0, -1.0, 1.0).unwrap();
        let h = m.cgf(1e-12).unwrap();
        assert!((h.deriv2(0.0).unwrap() - m.moments().1).abs() < 1e-10);
        // The tilt pushes the mean toward the upper edge.
        assert!(h.deriv1(50.0).unwrap() > 0.95);
    }

    #[test]
    fn empty_window_rejected() {
        assert!(TruncatedNormalModel::new(0.0, 1.0, 40.0, 41.0).is_err());
        assert!(TruncatedNormalModel::new(0.0, 1.0, 1.0, 1.0).is_err());
    }
}
