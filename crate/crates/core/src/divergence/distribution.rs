use serde::{Deserialize, Serialize};

use crate::error::{BoundError, Result};

/// Finite probability distribution over real atoms.
///
/// Serializes as `{"atoms":[...],"weights":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDiscrete")]
pub struct DiscreteDistribution {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDiscrete {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawDiscrete> for DiscreteDistribution {
    type Error = BoundError;
    fn try_from(raw: RawDiscrete) -> Result<Self> {
        DiscreteDistribution::new(raw.atoms, raw.weights)
    }
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

impl DiscreteDistribution {
    /// Validates nonnegative weights summing to one (within 1e-12) on distinct,
    /// finite atoms.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(BoundError::LengthMismatch {
                expected: atoms.len(),
                got: weights.len(),
            });
        }
        if atoms.is_empty() {
            return Err(BoundError::InvalidDistribution("no atoms".into()));
        }
        if let Some(a) = atoms.iter().find(|a| !a.is_finite()) {
            return Err(BoundError::InvalidDistribution(format!("non-finite atom {a}")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(BoundError::InvalidDistribution(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(BoundError::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let mut sorted = atoms.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(BoundError::InvalidDistribution("atoms are not distinct".into()));
        }
        Ok(Self { atoms, weights })
    }

    /// Builds a distribution from unnormalized nonnegative masses.
    pub fn from_masses(atoms: Vec<f64>, masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(BoundError::InvalidDistribution(format!("total mass {total}")));
        }
        Self::new(atoms, masses.iter().map(|m| m / total).collect())
    }

    /// Uniform law on the given atoms.
    pub fn uniform(atoms: Vec<f64>) -> Result<Self> {
        let n = atoms.len();
        Self::from_masses(atoms, &vec![1.0; n])
    }

    /// The two-point law with `P(hi) = p_hi`.
    pub fn two_point(lo: f64, hi: f64, p_hi: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![1.0 - p_hi, p_hi])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `E[f]` for values aligned with the atoms.
    pub fn expect(&self, f_values: &[f64]) -> f64 {
        self.weights.iter().zip(f_values).map(|(w, f)| w * f).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(&self.atoms)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.weights
            .iter()
            .zip(&self.atoms)
            .map(|(w, a)| w * (a - m) * (a - m))
            .sum()
    }
}
