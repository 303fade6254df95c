use serde::{Deserialize, Serialize};

/// Which optimization produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    GoalOriented,
    ConcentrationFamily,
}

/// Whether the optimal tilt is finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiltRegime {
    /// `c*` solves `c H'(c) - H(c) = eta^2` inside the MGF domain.
    Interior,
    /// The KL budget exceeds what any tilt can spend (or the optimum sits on
    /// the edge of a restricted domain); the bound is the limiting value.
    Boundary,
    /// `eta^2 = 0` or the quantity of interest is constant.
    Trivial,
}

/// Optimizer diagnostics for one side of a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideDiagnostics {
    /// Optimal tilt; `None` stands for `c* = +inf`.
    pub c_star: Option<f64>,
    pub regime: TiltRegime,
    pub iterations: usize,
    /// `|c* H'(c*) - H(c*) - eta^2|` for interior solutions, 0 otherwise.
    pub residual: f64,
}

/// Certified band `lower <= E_Q[f] - E_P[f] <= upper` valid for every `Q`
/// with `R(Q||P) <= eta_sq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCertificate {
    pub eta_sq: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: BoundMethod,
    pub lower_diagnostics: SideDiagnostics,
    pub upper_diagnostics: SideDiagnostics,
}

impl BiasCertificate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, gap: f64) -> bool {
        self.lower <= gap && gap <= self.upper
    }
}
