use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the component sum.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A point strictly inside the unit simplex: every component in (0, 1) and
/// the components summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    /// Validates `components`. Inputs whose sum is within
    /// [`SIMPLEX_TOLERANCE`] of one are renormalized, anything further off is
    /// rejected.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidSimplex(format!(
                "need at least 2 components, got {}",
                components.len()
            )));
        }
        for (i, &c) in components.iter().enumerate() {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidSimplex(format!(
                    "component {i} = {c} is not strictly inside (0, 1)"
                )));
            }
        }
        let sum: f64 = components.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidSimplex(format!("components sum to {sum}, not 1")));
        }
        Ok(SimplexVector(components.into_iter().map(|c| c / sum).collect()))
    }

    /// The binary vector `(p, 1 - p)`.
    pub fn binary(p: f64) -> Result<Self> {
        Self::new(vec![p, 1.0 - p])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn max_abs_diff(&self, other: &SimplexVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexVector::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(s: SimplexVector) -> Self {
        s.0
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
