//! Concentration envelopes `Phi(c) >= E_P[exp(c (f - E_P f))]` and the
//! bias bounds `U+-(eta; F)` they give for every QoI in the family `F_P`
//! of functions whose centered MGF is dominated by `Phi`.
//!
//! Every envelope here is itself the MGF of a Gaussian or of a two-point
//! law, so `log Phi` is a cumulant function and the bias bound is computed
//! with the same tilting solver as the goal-oriented divergence.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::divergence::certificate::{BiasCertificate, BoundMethod, TiltRegime};
use crate::divergence::cgf::{CumulantFunction, DiscreteCgf, GaussianCgf, Mirrored};
use crate::divergence::tilt::{solve_side, Sign, TiltedSolution};
use crate::error::{BoundError, Result};
use crate::numeric::golden_section_min;

/// A caller-supplied CGF used directly as the envelope.
#[derive(Clone)]
pub struct ExplicitCgf(pub Arc<dyn CumulantFunction>);

impl fmt::Debug for ExplicitCgf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExplicitCgf(domain = {:?})", self.0.domain())
    }
}

impl PartialEq for ExplicitCgf {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// MGF envelope family. All parameters are in the units of the QoI.
///
/// Serialized as tagged JSON, e.g. `{"variant":"bennett_ab","a":-1,"b":1,"mu":0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ConcentrationBound {
    /// `Phi(c) = exp(sigma_b^2 c^2 / 2)`.
    #[serde(rename = "subgaussian")]
    SubGaussian { sigma_b: f64 },
    /// Sub-Gaussian envelope valid only for `|c| < c_max`; `drift` records the
    /// mean that was removed from an uncentered envelope `exp(drift c + ...)`.
    #[serde(rename = "interval_subgaussian")]
    IntervalSubGaussian {
        sigma_b: f64,
        c_max: f64,
        #[serde(default)]
        drift: f64,
    },
    /// Bennett: `f <= b`, `var f <= sigma_b^2`, valid for `c >= 0`.
    /// The optional lower bound `a` enables the lower side through `-f`.
    Bennett {
        b: f64,
        mu: f64,
        sigma_b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
    },
    /// Bennett with `sigma_b^2 = (mu - a)(b - mu)`: the MGF of the two-point law on `{a, b}`.
    BennettAb { a: f64, b: f64, mu: f64 },
    /// `Phi(c) = exp(c^2 (b - a)^2 / 8)`.
    Hoeffding { a: f64, b: f64 },
    /// The exact centered CGF itself.
    #[serde(skip)]
    ExplicitMgf(ExplicitCgf),
}

/// A bound together with a readable description of its QoI family `F_P`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleFamilyDescriptor {
    pub bound: ConcentrationBound,
    pub description: String,
}

impl AdmissibleFamilyDescriptor {
    pub fn new(bound: ConcentrationBound) -> Self {
        let description = match &bound {
            ConcentrationBound::SubGaussian { sigma_b } => {
                format!("g with E_P[exp(c (g - E_P g))] <= exp({sigma_b}^2 c^2 / 2) for all real c")
            }
            ConcentrationBound::IntervalSubGaussian { sigma_b, c_max, .. } => format!(
                "g with E_P[exp(c (g - E_P g))] <= exp({sigma_b}^2 c^2 / 2) for |c| < {c_max}"
            ),
            ConcentrationBound::Bennett { b, mu, sigma_b, a } => {
                let lower = a.map(|a| format!(", g >= {a}")).unwrap_or_default();
                format!("g <= {b}{lower}, E_P[g] = {mu}, var_P[g] <= {sigma_b}^2")
            }
            ConcentrationBound::BennettAb { a, b, mu } => format!("{a} <= g <= {b}, E_P[g] = {mu}"),
            ConcentrationBound::Hoeffding { a, b } => format!("{a} <= g <= {b}"),
            ConcentrationBound::ExplicitMgf(_) => "the single QoI whose CGF is given".to_string(),
        };
        Self { bound, description }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BoundError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// CGF of the two-point law with mean `mu`, variance `var` and top atom `b`.
fn bennett_cgf(b: f64, mu: f64, var: f64) -> Result<DiscreteCgf> {
    let bt = b - mu;
    let denom = bt * bt + var;
    DiscreteCgf::from_weighted(&[bt * bt / denom, var / denom], &[mu - var / bt, b])
}

impl ConcentrationBound {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConcentrationBound::SubGaussian { sigma_b } => {
                if sigma_b >= 0.0 && sigma_b.is_finite() {
                    Ok(())
                } else {
                    Err(BoundError::Domain(format!("sigma_b must be >= 0, got {sigma_b}")))
                }
            }
            ConcentrationBound::IntervalSubGaussian { sigma_b, c_max, drift } => {
                positive("c_max", c_max)?;
                if !(sigma_b >= 0.0 && sigma_b.is_finite() && drift.is_finite()) {
                    return Err(BoundError::Domain(format!(
                        "invalid interval sub-Gaussian parameters sigma_b = {sigma_b}, drift = {drift}"
                    )));
                }
                Ok(())
            }
            ConcentrationBound::Bennett { b, mu, sigma_b, a } => {
                positive("sigma_b", sigma_b)?;
                if !(mu < b) || !b.is_finite() || !mu.is_finite() {
                    return Err(BoundError::Domain(format!("Bennett needs mu < b, got mu = {mu}, b = {b}")));
                }
                if let Some(a) = a {
                    if !(a < mu) {
                        return Err(BoundError::Domain(format!(
                            "Bennett lower bound needs a < mu, got a = {a}, mu = {mu}"
                        )));
                    }
                }
                Ok(())
            }
            ConcentrationBound::BennettAb { a, b, mu } => {
                if a < b && a <= mu && mu <= b && a.is_finite() && b.is_finite() {
                    Ok(())
                } else {
                    Err(BoundError::Domain(format!(
                        "Bennett-(a,b) needs a <= mu <= b and a < b, got a = {a}, mu = {mu}, b = {b}"
                    )))
                }
            }
            ConcentrationBound::Hoeffding { a, b } => {
                if a < b && a.is_finite() && b.is_finite() {
                    Ok(())
                } else {
                    Err(BoundError::Domain(format!("Hoeffding needs a < b, got a = {a}, b = {b}")))
                }
            }
            ConcentrationBound::ExplicitMgf(_) => Ok(()),
        }
    }

    /// `log Phi(+-c)` as a cumulant function of `c`.
    pub fn envelope_cgf(&self, sign: Sign) -> Result<Arc<dyn CumulantFunction>> {
        self.validate()?;
        let mirrored = |h: Arc<dyn CumulantFunction>| -> Arc<dyn CumulantFunction> {
            match sign {
                Sign::Plus => h,
                Sign::Minus => Arc::new(Mirrored(h)),
            }
        };
        Ok(match self {
            ConcentrationBound::SubGaussian { sigma_b } => Arc::new(GaussianCgf::new(sigma_b * sigma_b)?),
            ConcentrationBound::IntervalSubGaussian { sigma_b, c_max, .. } => {
                Arc::new(GaussianCgf::restricted(sigma_b * sigma_b, *c_max)?)
            }
            ConcentrationBound::Hoeffding { a, b } => Arc::new(GaussianCgf::new((b - a) * (b - a) / 4.0)?),
            ConcentrationBound::BennettAb { a, b, mu } => {
                let w = b - a;
                mirrored(Arc::new(DiscreteCgf::from_weighted(&[(b - mu) / w, (mu - a) / w], &[*a, *b])?))
            }
            ConcentrationBound::Bennett { b, mu, sigma_b, a } => {
                let var = sigma_b * sigma_b;
                match sign {
                    Sign::Plus => Arc::new(bennett_cgf(*b, *mu, var)?),
                    Sign::Minus => {
                        let a = a.ok_or_else(|| {
                            BoundError::Unsupported(
                                "the Bennett envelope holds only for c >= 0; supply a lower bound `a` \
                                 to bound the lower side through -f"
                                    .into(),
                            )
                        })?;
                        Arc::new(bennett_cgf(-a, -mu, var)?)
                    }
                }
            }
            ConcentrationBound::ExplicitMgf(h) => mirrored(h.0.clone()),
        })
    }
}

/// Evaluates `Phi(c)`. Returns `+inf` outside the validity interval of an
/// interval-restricted or explicit envelope.
pub fn phi_eval(bound: &ConcentrationBound, c: f64) -> Result<f64> {
    bound.validate()?;
    match bound {
        ConcentrationBound::Bennett { .. } if c < 0.0 => {
            return Err(BoundError::Domain(format!(
                "the Bennett envelope is only valid for c >= 0, got {c}"
            )))
        }
        ConcentrationBound::IntervalSubGaussian { c_max, .. } if c.abs() >= *c_max => {
            return Ok(f64::INFINITY)
        }
        ConcentrationBound::ExplicitMgf(h) => {
            let (lo, hi) = h.0.domain();
            if !(c > lo && c < hi) {
                return Ok(f64::INFINITY);
            }
        }
        _ => {}
    }
    let h = bound.envelope_cgf(Sign::Plus)?;
    Ok(h.value(c)?.exp())
}

/// `Phi''(0)`, the variance proxy that governs the small-`eta` slope.
pub fn phi_curvature(bound: &ConcentrationBound) -> Result<f64> {
    bound.validate()?;
    Ok(match bound {
        ConcentrationBound::SubGaussian { sigma_b }
        | ConcentrationBound::IntervalSubGaussian { sigma_b, .. }
        | ConcentrationBound::Bennett { sigma_b, .. } => sigma_b * sigma_b,
        ConcentrationBound::Hoeffding { a, b } => (b - a) * (b - a) / 4.0,
        ConcentrationBound::BennettAb { a, b, mu } => (mu - a) * (b - mu),
        ConcentrationBound::ExplicitMgf(h) => h.0.deriv2(0.0)?,
    })
}

fn closed_form(c_star: f64, bound: f64, eta_sq: f64) -> TiltedSolution {
    TiltedSolution {
        c_star: Some(c_star),
        regime: TiltRegime::Interior,
        kl_attained: eta_sq,
        tilted_mean_gap: bound,
        bound,
        iterations: 0,
        residual: 0.0,
    }
}

/// One side of `U+-(eta; F)` with optimizer diagnostics.
pub fn u_side(bound: &ConcentrationBound, eta_sq: f64, sign: Sign) -> Result<TiltedSolution> {
    bound.validate()?;
    if !(eta_sq >= 0.0 && eta_sq.is_finite()) {
        return Err(BoundError::Domain(format!("eta^2 must be finite and >= 0, got {eta_sq}")));
    }
    match *bound {
        ConcentrationBound::SubGaussian { sigma_b } if eta_sq > 0.0 && sigma_b > 0.0 => {
            let eta = eta_sq.sqrt();
            return Ok(closed_form(
                std::f64::consts::SQRT_2 * eta / sigma_b,
                std::f64::consts::SQRT_2 * sigma_b * eta,
                eta_sq,
            ));
        }
        ConcentrationBound::Hoeffding { a, b } if eta_sq > 0.0 => {
            // min_c c (b-a)^2/8 + eta^2/c is reached at c = sqrt(8) eta / (b-a).
            let eta = eta_sq.sqrt();
            let w = b - a;
            return Ok(closed_form(8f64.sqrt() * eta / w, w * eta / std::f64::consts::SQRT_2, eta_sq));
        }
        _ => {}
    }
    let h = bound.envelope_cgf(sign)?;
    match solve_side(&h, eta_sq, Sign::Plus) {
        Ok(s) => Ok(s),
        Err(e) if e.is_numeric() => golden_fallback(&h, eta_sq),
        Err(e) => Err(e),
    }
}

/// Minimizes `(log Phi(c) + eta^2)/c` directly, doubling the upper end of
/// the search interval until the objective turns upward.
fn golden_fallback(h: &Arc<dyn CumulantFunction>, eta_sq: f64) -> Result<TiltedSolution> {
    let (_, d_hi) = h.domain();
    let cap = if d_hi.is_finite() { d_hi * (1.0 - 1e-9) } else { 1e6 };
    let objective = |c: f64| -> Result<f64> { Ok((h.value(c)? + eta_sq) / c) };
    let mut hi = 1e-3_f64.min(cap);
    let mut prev = objective(hi)?;
    while hi < cap {
        let next = (2.0 * hi).min(cap);
        let v = objective(next)?;
        hi = next;
        if v > prev {
            break;
        }
        prev = v;
    }
    let (c, v) = golden_section_min(objective, hi * 1e-12, hi, 1e-12)?;
    Ok(TiltedSolution {
        c_star: Some(c),
        regime: TiltRegime::Interior,
        kl_attained: eta_sq,
        tilted_mean_gap: h.deriv1(c)?,
        bound: v,
        iterations: 0,
        residual: 0.0,
    })
}

/// `U+-(eta; F) = inf_{c>0} (log Phi(+-c) + eta^2) / c`.
pub fn u_divergence(bound: &ConcentrationBound, eta_sq: f64, sign: Sign) -> Result<f64> {
    u_side(bound, eta_sq, sign).map(|s| s.bound)
}

/// Two-sided certificate `[-U-(eta), U+(eta)]` valid for every QoI in the family.
pub fn bias_band(bound: &ConcentrationBound, eta_sq: f64) -> Result<BiasCertificate> {
    let upper = u_side(bound, eta_sq, Sign::Plus)?;
    let lower = u_side(bound, eta_sq, Sign::Minus)?;
    Ok(BiasCertificate {
        eta_sq,
        lower: -lower.bound,
        upper: upper.bound,
        method: BoundMethod::ConcentrationFamily,
        lower_diagnostics: lower.diagnostics(),
        upper_diagnostics: upper.diagnostics(),
    })
}

/// One ordering violation found by [`hierarchy_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyViolation {
    pub c: f64,
    pub tighter: &'static str,
    pub looser: &'static str,
    pub tighter_value: f64,
    pub looser_value: f64,
}

const HIERARCHY_TOL: f64 = 1e-12;

/// Checks `MGF <= Bennett <= Bennett-(a,b) <= Hoeffding` on `c_grid`.
///
/// The true MGF is included when its CGF is given. A violation is reported
/// when a tighter envelope exceeds a looser one by more than `1e-12`
/// relative to the looser value.
pub fn hierarchy_check(
    mu: f64,
    a: f64,
    b: f64,
    sigma_sq: f64,
    c_grid: &[f64],
    true_cgf: Option<&dyn CumulantFunction>,
) -> Result<Vec<HierarchyViolation>> {
    if !(a < b && a <= mu && mu < b) {
        return Err(BoundError::PreconditionViolation(format!(
            "need a <= mu < b, got a = {a}, mu = {mu}, b = {b}"
        )));
    }
    let cap = (mu - a) * (b - mu);
    if !(sigma_sq > 0.0) || sigma_sq > cap * (1.0 + 1e-12) {
        return Err(BoundError::PreconditionViolation(format!(
            "need 0 < sigma^2 <= (mu - a)(b - mu) = {cap}, got {sigma_sq}"
        )));
    }
    if let Some(c) = c_grid.iter().find(|c| !(**c >= 0.0)) {
        return Err(BoundError::PreconditionViolation(format!("grid point {c} is negative")));
    }
    let envelopes = [
        ConcentrationBound::Bennett { b, mu, sigma_b: sigma_sq.sqrt(), a: None },
        ConcentrationBound::BennettAb { a, b, mu },
        ConcentrationBound::Hoeffding { a, b },
    ];
    let names = ["Bennett", "Bennett-(a,b)", "Hoeffding"];
    let mut violations = Vec::new();
    for &c in c_grid {
        let mut chain: Vec<(&'static str, f64)> = Vec::with_capacity(4);
        if let Some(h) = true_cgf {
            chain.push(("MGF", h.value(c)?.exp()));
        }
        for (bound, name) in envelopes.iter().zip(names) {
            chain.push((name, phi_eval(bound, c)?));
        }
        for pair in chain.windows(2) {
            let (tn, tv) = pair[0];
            let (ln, lv) = pair[1];
            if tv - lv > HIERARCHY_TOL * lv.abs().max(1.0) {
                violations.push(HierarchyViolation {
                    c,
                    tighter: tn,
                    looser: ln,
                    tighter_value: tv,
                    looser_value: lv,
                });
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{go_divergence, DiscreteDistribution};

    fn bennett_ab() -> ConcentrationBound {
        ConcentrationBound::BennettAb { a: -1.0, b: 1.0, mu: 0.0 }
    }

    fn grid_min<F: Fn(f64) -> f64>(obj: F, hi: f64, step: f64) -> f64 {
        (1..(hi / step) as usize)
            .map(|i| obj(i as f64 * step))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn json_format() {
        let s = serde_json::to_string(&bennett_ab()).unwrap();
        assert_eq!(s, r#"{"variant":"bennett_ab","a":-1.0,"b":1.0,"mu":0.0}"#);
        let back: ConcentrationBound = serde_json::from_str(r#"{"variant":"bennett_ab","a":-1,"b":1,"mu":0}"#).unwrap();
        assert_eq!(back, bennett_ab());
        let sg: ConcentrationBound = serde_json::from_str(r#"{"variant":"subgaussian","sigma_b":2}"#).unwrap();
        assert_eq!(sg, ConcentrationBound::SubGaussian { sigma_b: 2.0 });
    }

    #[test]
    fn phi_at_zero_is_one() {
        let bounds = [
            ConcentrationBound::SubGaussian { sigma_b: 1.3 },
            ConcentrationBound::IntervalSubGaussian { sigma_b: 2.0, c_max: 0.5, drift: 1.0 },
            ConcentrationBound::Bennett { b: 1.0, mu: 0.2, sigma_b: 0.4, a: None },
            bennett_ab(),
            ConcentrationBound::Hoeffding { a: 0.0, b: 1.0 },
        ];
        for b in &bounds {
            assert!((phi_eval(b, 0.0).unwrap() - 1.0).abs() < 1e-15, "{b:?}");
            // Phi'(0) = 0
            let d = (phi_eval(b, 1e-6).unwrap() - 1.0) / 1e-6;
            assert!(d.abs() < 1e-5, "{b:?}");
        }
    }

    #[test]
    fn phi_examples() {
        assert!((phi_eval(&bennett_ab(), 1.0).unwrap() - 1f64.cosh()).abs() < 1e-14);
        let h = ConcentrationBound::Hoeffding { a: 0.0, b: 1.0 };
        assert!((phi_eval(&h, 2.0).unwrap() - 0.5f64.exp()).abs() < 1e-14);
        let bennett = ConcentrationBound::Bennett { b: 1.0, mu: 0.0, sigma_b: 0.5, a: None };
        assert!(matches!(phi_eval(&bennett, -0.1), Err(BoundError::Domain(_))));
        let isg = ConcentrationBound::IntervalSubGaussian { sigma_b: 2.0, c_max: 0.5, drift: 1.0 };
        assert_eq!(phi_eval(&isg, 0.5).unwrap(), f64::INFINITY);
    }

    #[test]
    fn bennett_formula_matches_two_point_representation() {
        let (b, mu, s2): (f64, f64, f64) = (1.5, 0.3, 0.2);
        let bt = b - mu;
        let bound = ConcentrationBound::Bennett { b, mu, sigma_b: s2.sqrt(), a: None };
        for c in [0.0, 0.3, 1.0, 4.0] {
            let formula = bt * bt / (bt * bt + s2) * (-c * s2 / bt).exp() + s2 / (bt * bt + s2) * (c * bt).exp();
            assert!((phi_eval(&bound, c).unwrap() - formula).abs() < 1e-12 * formula);
        }
    }

    #[test]
    fn u_divergence_examples() {
        let sg = ConcentrationBound::SubGaussian { sigma_b: 1.0 };
        assert!((u_divergence(&sg, 1.0, Sign::Plus).unwrap() - 2f64.sqrt()).abs() < 1e-15);

        // Grid oracle for the Hoeffding closed form.
        let ho = ConcentrationBound::Hoeffding { a: 0.0, b: 1.0 };
        let u = u_divergence(&ho, 0.01, Sign::Plus).unwrap();
        let oracle = grid_min(|c| (c * c / 8.0 + 0.01) / c, 5.0, 1e-6);
        assert!((u - oracle).abs() < 1e-9);
        assert!((u - 0.070711).abs() < 1e-6);

        let be = ConcentrationBound::Bennett { b: 1.0, mu: 0.0, sigma_b: 0.5, a: None };
        let u = u_divergence(&be, 0.1, Sign::Plus).unwrap();
        let s2 = 0.25;
        let oracle = grid_min(|c| ((1.0 / (1.0 + s2) * (-c * s2).exp() + s2 / (1.0 + s2) * c.exp()).ln() + 0.1) / c, 5.0, 1e-6);
        assert!((u - oracle).abs() < 1e-9);
        assert!((u - 0.244).abs() < 0.005);
        assert!(matches!(u_divergence(&be, 0.1, Sign::Minus), Err(BoundError::Unsupported(_))));
    }

    #[test]
    fn zero_budget_band() {
        for b in [ConcentrationBound::Hoeffding { a: 0.0, b: 1.0 }, bennett_ab()] {
            let cert = bias_band(&b, 0.0).unwrap();
            assert_eq!((cert.lower, cert.upper), (0.0, 0.0));
        }
    }

    #[test]
    fn coefficient_of_variation_band() {
        let cv = 0.3;
        let eta: f64 = 0.2;
        let cert = bias_band(&ConcentrationBound::SubGaussian { sigma_b: cv }, eta * eta).unwrap();
        assert!((cert.upper - cv * 2f64.sqrt() * eta).abs() < 1e-15);
        assert!((cert.lower + cv * 2f64.sqrt() * eta).abs() < 1e-15);
    }

    #[test]
    fn bennett_ab_equals_bernoulli_go() {
        let p = DiscreteDistribution::two_point(-1.0, 1.0, 0.5).unwrap();
        let h = DiscreteCgf::identity(&p);
        let cert = bias_band(&bennett_ab(), 0.1).unwrap();
        let go = go_divergence(&h, 0.1, Sign::Plus).unwrap();
        assert!((cert.upper - go).abs() < 1e-12);
        assert!((cert.upper - 0.440).abs() < 0.005);
        assert!((cert.lower + go).abs() < 1e-12);
    }

    #[test]
    fn interval_restriction_returns_edge_value() {
        let isg = ConcentrationBound::IntervalSubGaussian { sigma_b: 2.0, c_max: 0.5, drift: 1.0 };
        // Unconstrained minimizer sqrt(2) eta / sigma_b stays inside for small eta.
        let u = u_divergence(&isg, 0.01, Sign::Plus).unwrap();
        assert!((u - 2.0 * 2f64.sqrt() * 0.1).abs() < 1e-9);
        // For eta^2 = 1 the minimizer 0.707 lies past c_max = 0.5: edge value sigma^2 c_max / 2 + eta^2 / c_max.
        let u = u_divergence(&isg, 1.0, Sign::Plus).unwrap();
        assert!((u - (0.5 * 4.0 * 0.5 + 1.0 / 0.5)).abs() < 1e-6);
    }

    #[test]
    fn curvature_values() {
        assert_eq!(phi_curvature(&ConcentrationBound::SubGaussian { sigma_b: 1.0 }).unwrap(), 1.0);
        assert_eq!(phi_curvature(&ConcentrationBound::Hoeffding { a: 0.0, b: 1.0 }).unwrap(), 0.25);
        assert_eq!(phi_curvature(&bennett_ab()).unwrap(), 1.0);
        // Finite-difference cross-check of Phi''(0).
        for bound in [bennett_ab(), ConcentrationBound::Bennett { b: 1.0, mu: 0.0, sigma_b: 0.5, a: None }] {
            let h = 1e-4;
            let fd = (phi_eval(&bound, 2.0 * h).unwrap() - 2.0 * phi_eval(&bound, h).unwrap() + 1.0) / (h * h);
            assert!((fd - phi_curvature(&bound).unwrap()).abs() < 1e-3);
        }
    }

    #[test]
    fn hierarchy_examples() {
        let grid: Vec<f64> = (0..=500).map(|i| i as f64 * 0.01).collect();
        let bern = DiscreteCgf::identity(&DiscreteDistribution::two_point(-1.0, 1.0, 0.5).unwrap());
        assert!(hierarchy_check(0.0, -1.0, 1.0, 1.0, &grid, Some(&bern)).unwrap().is_empty());
        for &c in &grid {
            let ab = phi_eval(&bennett_ab(), c).unwrap();
            assert!((ab - c.cosh()).abs() <= 1e-12 * ab);
        }
        let tp = DiscreteCgf::identity(&DiscreteDistribution::new(vec![-0.25, 1.0], vec![0.8, 0.2]).unwrap());
        let be = ConcentrationBound::Bennett { b: 1.0, mu: 0.0, sigma_b: 0.5, a: None };
        for &c in &grid {
            let exact = tp.value(c).unwrap().exp();
            assert!((phi_eval(&be, c).unwrap() - exact).abs() <= 1e-12 * exact);
        }
        assert!(hierarchy_check(0.0, -1.0, 1.0, 0.1, &grid, None).unwrap().is_empty());
        assert!(hierarchy_check(0.0, -1.0, 1.0, 1.5, &grid, None).is_err());
    }

    #[test]
    fn bands_tighten_with_information() {
        let (a, b, mu, s2): (f64, f64, f64, f64) = (0.0, 1.0, 0.3, 0.1);
        for eta_sq in [0.001, 0.01, 0.1, 0.5, 2.0] {
            let be = u_divergence(&ConcentrationBound::Bennett { b, mu, sigma_b: s2.sqrt(), a: Some(a) }, eta_sq, Sign::Plus).unwrap();
            let ab = u_divergence(&ConcentrationBound::BennettAb { a, b, mu }, eta_sq, Sign::Plus).unwrap();
            let ho = u_divergence(&ConcentrationBound::Hoeffding { a, b }, eta_sq, Sign::Plus).unwrap();
            assert!(be <= ab + 1e-12 && ab <= ho + 1e-12, "{eta_sq}: {be} {ab} {ho}");
        }
    }

    #[test]
    fn explicit_mgf_delegates() {
        let h: Arc<dyn CumulantFunction> = Arc::new(GaussianCgf::new(1.0).unwrap());
        let b = ConcentrationBound::ExplicitMgf(ExplicitCgf(h));
        assert!((u_divergence(&b, 0.5, Sign::Minus).unwrap() - 1.0).abs() < 1e-10);
        assert!(serde_json::to_string(&b).is_err());
    }
}
