//! The goal-oriented divergence and the exponential-tilting solver.
//!
//! For a centered CGF `H`, the bound
//! `Xi(f) = inf_{c>0} (H(c) + eta^2) / c`
//! is attained where `g(c) = c H'(c) - H(c)` equals `eta^2`. Since
//! `g'(c) = c H''(c) > 0`, `g` is strictly increasing and a bracketing
//! bisection is globally convergent. When `g` never reaches `eta^2` the
//! infimum is the limit at the right end of the domain.

use serde::{Deserialize, Serialize};

use crate::divergence::certificate::{BiasCertificate, BoundMethod, SideDiagnostics, TiltRegime};
use crate::divergence::cgf::{CumulantFunction, Mirrored};
use crate::divergence::DiscreteDistribution;
use crate::error::{BoundError, Result};
use crate::numeric::{bisect_increasing, log_sum_exp};

const BRACKET_START: f64 = 1e-8;
/// Stand-in for `c -> +inf` on unbounded MGF domains.
const C_INFINITY: f64 = 1e6;
const EDGE_FRACTION: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-10;

/// Side of a two-sided bound: `+` bounds `E_Q f - E_P f` from above, `-` from below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// Solution of the tilting problem for one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedSolution {
    /// `None` encodes `c* = +inf`.
    pub c_star: Option<f64>,
    pub regime: TiltRegime,
    /// `R(P^{c*} || P) = c* H'(c*) - H(c*)`; in the boundary regime the value
    /// at the largest tilt evaluated.
    pub kl_attained: f64,
    /// `E_{P^{c*}}[f] - E_P[f]`, or `f+ - E_P[f]` in the boundary regime.
    pub tilted_mean_gap: f64,
    /// The divergence value `inf_c (H(c) + eta^2)/c` as evaluated at `c*`.
    pub bound: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl TiltedSolution {
    fn trivial() -> Self {
        Self {
            c_star: Some(0.0),
            regime: TiltRegime::Trivial,
            kl_attained: 0.0,
            tilted_mean_gap: 0.0,
            bound: 0.0,
            iterations: 0,
            residual: 0.0,
        }
    }

    pub fn diagnostics(&self) -> SideDiagnostics {
        SideDiagnostics {
            c_star: self.c_star,
            regime: self.regime,
            iterations: self.iterations,
            residual: self.residual,
        }
    }
}

fn check_eta_sq(eta_sq: f64) -> Result<()> {
    if eta_sq >= 0.0 && eta_sq.is_finite() {
        Ok(())
    } else {
        Err(BoundError::Domain(format!("eta^2 must be finite and >= 0, got {eta_sq}")))
    }
}

fn g<H: CumulantFunction + ?Sized>(h: &H, c: f64) -> Result<f64> {
    let (v, d1, _) = h.all(c)?;
    Ok(c * d1 - v)
}

/// Solves `c H'(c) - H(c) = eta^2` for the upper side of `h`.
pub fn solve_tilt<H: CumulantFunction + ?Sized>(h: &H, eta_sq: f64) -> Result<TiltedSolution> {
    check_eta_sq(eta_sq)?;
    if eta_sq == 0.0 {
        return Err(BoundError::Domain("the tilting problem needs eta^2 > 0".into()));
    }
    if h.is_degenerate() {
        return Err(BoundError::DegenerateQoi);
    }
    let (_, d_hi) = h.domain();
    let c_cap = if d_hi.is_finite() {
        d_hi - EDGE_FRACTION * d_hi
    } else {
        C_INFINITY
    };

    let mut lo = 0.0;
    let mut hi = BRACKET_START.min(c_cap);
    let mut iterations = 0;
    loop {
        iterations += 1;
        if g(h, hi)? >= eta_sq {
            break;
        }
        if hi >= c_cap {
            return boundary_solution(h, eta_sq, c_cap, d_hi.is_finite(), iterations);
        }
        lo = hi;
        hi = (2.0 * hi).min(c_cap);
    }

    let root = bisect_increasing(|c| g(h, c), lo, hi, eta_sq)?;
    iterations += root.iterations;
    let c_star = root.root;
    let tol = RESIDUAL_TOL * eta_sq.max(1.0);
    if root.residual > tol {
        return Err(BoundError::Nonconvergence {
            what: "tilt root-find",
            iterations,
            residual: root.residual,
        });
    }
    let (v, d1, _) = h.all(c_star)?;
    Ok(TiltedSolution {
        c_star: Some(c_star),
        regime: TiltRegime::Interior,
        kl_attained: c_star * d1 - v,
        tilted_mean_gap: d1,
        bound: (v + eta_sq) / c_star,
        iterations,
        residual: root.residual,
    })
}

fn boundary_solution<H: CumulantFunction + ?Sized>(
    h: &H,
    eta_sq: f64,
    c_cap: f64,
    finite_domain: bool,
    iterations: usize,
) -> Result<TiltedSolution> {
    let (v, d1, _) = h.all(c_cap)?;
    if finite_domain {
        // The objective decreases all the way to the edge of a restricted domain.
        Ok(TiltedSolution {
            c_star: Some(c_cap),
            regime: TiltRegime::Boundary,
            kl_attained: c_cap * d1 - v,
            tilted_mean_gap: d1,
            bound: (v + eta_sq) / c_cap,
            iterations,
            residual: 0.0,
        })
    } else {
        // lim (H(c) + eta^2)/c = lim H'(c) = f+ - E_P[f].
        Ok(TiltedSolution {
            c_star: None,
            regime: TiltRegime::Boundary,
            kl_attained: c_cap * d1 - v,
            tilted_mean_gap: d1,
            bound: d1,
            iterations,
            residual: 0.0,
        })
    }
}

/// Solves one side: `Plus` works on `H`, `Minus` on `c -> H(-c)`.
/// Returns the trivial solution when `eta^2 = 0` or `f` is constant.
pub fn solve_side<H: CumulantFunction + ?Sized>(h: &H, eta_sq: f64, sign: Sign) -> Result<TiltedSolution> {
    check_eta_sq(eta_sq)?;
    if eta_sq == 0.0 || h.is_degenerate() {
        return Ok(TiltedSolution::trivial());
    }
    match sign {
        Sign::Plus => solve_tilt(h, eta_sq),
        Sign::Minus => solve_tilt(&Mirrored(h), eta_sq),
    }
}

/// `Xi(Q||P; +-f) = inf_{c>0} (H(+-c) + eta^2) / c`, a nonnegative number.
pub fn go_divergence<H: CumulantFunction + ?Sized>(h: &H, eta_sq: f64, sign: Sign) -> Result<f64> {
    solve_side(h, eta_sq, sign).map(|s| s.bound)
}

/// Two-sided goal-oriented certificate `[-Xi(-f), Xi(f)]`.
pub fn go_bias_band<H: CumulantFunction + ?Sized>(h: &H, eta_sq: f64) -> Result<BiasCertificate> {
    let upper = solve_side(h, eta_sq, Sign::Plus)?;
    let lower = solve_side(h, eta_sq, Sign::Minus)?;
    Ok(BiasCertificate {
        eta_sq,
        lower: -lower.bound,
        upper: upper.bound,
        method: BoundMethod::GoalOriented,
        lower_diagnostics: lower.diagnostics(),
        upper_diagnostics: upper.diagnostics(),
    })
}

/// Exponential tilt `dP^c/dP ∝ exp(c f)` of a finite law.
pub fn tilt_discrete(p: &DiscreteDistribution, f_values: &[f64], c: f64) -> Result<DiscreteDistribution> {
    if f_values.len() != p.len() {
        return Err(BoundError::LengthMismatch {
            expected: p.len(),
            got: f_values.len(),
        });
    }
    if !c.is_finite() {
        return Err(BoundError::Domain(format!("tilt parameter must be finite, got {c}")));
    }
    if c == 0.0 {
        return Ok(p.clone());
    }
    let logits: Vec<f64> = p
        .weights()
        .iter()
        .zip(f_values)
        .map(|(w, f)| if *w > 0.0 { w.ln() + c * f } else { f64::NEG_INFINITY })
        .collect();
    let lse = log_sum_exp(&logits);
    let weights: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
    DiscreteDistribution::new(p.atoms().to_vec(), weights)
}

/// First-order approximation `sqrt(var) * sqrt(2 eta^2)` of the divergence.
pub fn linearized_go(variance: f64, eta_sq: f64) -> Result<f64> {
    check_eta_sq(eta_sq)?;
    if !(variance >= 0.0) {
        return Err(BoundError::Domain(format!("variance must be >= 0, got {variance}")));
    }
    Ok(variance.sqrt() * (2.0 * eta_sq).sqrt())
}
