use serde::{Deserialize, Serialize};

use super::{ArmState, SimplexVector};
use crate::error::{Error, Result};

/// Target vector γ and penalty exponent κ of the selection criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionParams {
    pub gamma: SimplexVector,
    pub kappa: f64,
}

impl CriterionParams {
    /// κ must lie in [0.5, 1).
    pub fn new(gamma: SimplexVector, kappa: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&kappa) {
            return Err(Error::config(
                "kappa",
                format!("{kappa} outside [0.5, 1); values below 0.5 need the experimental flag"),
            ));
        }
        Ok(CriterionParams { gamma, kappa })
    }

    /// Accepts any κ in (0, 1). Below 0.5 the information gain vanishes
    /// asymptotically and no consistency result holds.
    pub fn experimental(gamma: SimplexVector, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::config("kappa", format!("{kappa} outside (0, 1)")));
        }
        Ok(CriterionParams { gamma, kappa })
    }

    /// Same target with κ = 0.5, the setting used for final recommendations.
    pub fn unpenalized(&self) -> CriterionParams {
        CriterionParams {
            gamma: self.gamma.clone(),
            kappa: 0.5,
        }
    }
}

/// Sample-size penalty `n^(2κ-1)`.
///
/// An arm without observations is scored on its prior alone with no
/// penalty (factor 1), so the prior ordering drives the first assignments
/// for every κ.
pub fn sample_size_penalty(n: u64, kappa: f64) -> f64 {
    if n == 0 || kappa == 0.5 {
        1.0
    } else {
        (n as f64).powf(2.0 * kappa - 1.0)
    }
}

/// `½ (Σ γ_i² / α_i − 1)`, the criterion without its sample-size penalty.
fn divergence(alpha: &[f64], gamma: &[f64]) -> f64 {
    let s: f64 = gamma.iter().zip(alpha).map(|(g, a)| g * g / a).sum();
    // Cauchy–Schwarz gives s ≥ 1; clamp rounding noise at α = γ.
    0.5 * (s - 1.0).max(0.0)
}

/// δ^(κ)(α, γ) = ½ (Σ γ_i²/α_i − 1) n^(2κ−1).
pub fn criterion(alpha: &SimplexVector, params: &CriterionParams, n: u64) -> f64 {
    debug_assert_eq!(alpha.dim(), params.gamma.dim());
    divergence(alpha.as_slice(), params.gamma.as_slice()) * sample_size_penalty(n, params.kappa)
}

/// Plug-in estimate δ̂: the criterion at the arm's posterior mode with the
/// arm's own observation count.
pub fn plugin_criterion(state: &ArmState, params: &CriterionParams) -> f64 {
    criterion(&state.posterior_mode(), params, state.n())
}

/// Binary form ½ (p − γ)² / (p(1 − p)) · n^(2κ−1).
pub fn criterion_binary(p: f64, gamma: f64, kappa: f64, n: u64) -> f64 {
    0.5 * (p - gamma).powi(2) / (p * (1.0 - p)) * sample_size_penalty(n, kappa)
}

/// d/dα of the unpenalized binary criterion,
/// (γ − α)(γ(2α − 1) − α) / (2 α² (1 − α)²).
pub fn criterion_gradient_binary(alpha: f64, gamma: f64) -> f64 {
    let a2 = alpha * alpha;
    let b2 = (1.0 - alpha) * (1.0 - alpha);
    (gamma - alpha) * (gamma * (2.0 * alpha - 1.0) - alpha) / (2.0 * a2 * b2)
}

/// Gradient of δ^(κ)(·, γ) with respect to α, evaluated at `alpha`.
pub fn criterion_gradient(alpha: &SimplexVector, params: &CriterionParams, n: u64) -> Vec<f64> {
    let pen = sample_size_penalty(n, params.kappa);
    alpha
        .as_slice()
        .iter()
        .zip(params.gamma.as_slice())
        .map(|(a, g)| -0.5 * g * g / (a * a) * pen)
        .collect()
}
