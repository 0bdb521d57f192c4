use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wecore::{criterion, CriterionParams, SimplexVector};

/// True outcome probabilities for every arm, plus the ground-truth target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// One probability vector per arm (m × d).
    pub probabilities: Vec<SimplexVector>,
    #[serde(default)]
    pub target_index: Option<usize>,
    #[serde(default)]
    pub no_safe_arm: bool,
}

impl Scenario {
    pub fn new(name: impl Into<String>, probabilities: Vec<SimplexVector>, target_index: Option<usize>) -> Self {
        Scenario {
            name: name.into(),
            probabilities,
            target_index,
            no_safe_arm: false,
        }
    }

    /// Binary scenario from per-arm probabilities of outcome category 0.
    pub fn binary(name: impl Into<String>, first_category: &[f64], target_index: Option<usize>) -> Result<Self> {
        let probabilities = first_category
            .iter()
            .map(|&p| SimplexVector::binary(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario::new(name, probabilities, target_index))
    }

    /// Binary scenario from per-arm probabilities of outcome category 1.
    pub fn binary_second(name: impl Into<String>, second_category: &[f64], target_index: Option<usize>) -> Result<Self> {
        let first: Vec<f64> = second_category.iter().map(|p| 1.0 - p).collect();
        Scenario::binary(name, &first, target_index)
    }

    pub fn with_no_safe_arm(mut self) -> Self {
        self.no_safe_arm = true;
        self
    }

    pub fn arms(&self) -> usize {
        self.probabilities.len()
    }

    pub fn outcomes(&self) -> usize {
        self.probabilities.first().map_or(0, SimplexVector::dim)
    }

    /// δ^(½)(α_j, γ) for every arm.
    pub fn true_criteria(&self, gamma: &SimplexVector) -> Vec<f64> {
        let params = CriterionParams {
            gamma: gamma.clone(),
            kappa: 0.5,
        };
        self.probabilities.iter().map(|a| criterion(a, &params, 1)).collect()
    }

    /// Checks shape consistency and that `target_index` minimizes δ^(½)
    /// against `gamma`.
    pub fn validate(&self, gamma: &SimplexVector) -> Result<()> {
        if self.probabilities.is_empty() {
            return Err(Error::config("probabilities", "scenario has no arms"));
        }
        let d = self.outcomes();
        if self.probabilities.iter().any(|p| p.dim() != d) {
            return Err(Error::config("probabilities", "arms have differing outcome counts"));
        }
        if d != gamma.dim() {
            return Err(Error::config(
                "probabilities",
                format!("scenario has {d} outcome categories, target has {}", gamma.dim()),
            ));
        }
        if let Some(t) = self.target_index {
            if t >= self.arms() {
                return Err(Error::config("target_index", format!("{t} out of range")));
            }
            let deltas = self.true_criteria(gamma);
            let min = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
            if deltas[t] > min + 1e-12 {
                return Err(Error::config(
                    "target_index",
                    format!("arm {t} (δ = {:.6}) is not the minimizer (δ = {min:.6})", deltas[t]),
                ));
            }
        }
        Ok(())
    }
}
