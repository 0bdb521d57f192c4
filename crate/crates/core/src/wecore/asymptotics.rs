//! Gaussian approximation of the random criterion δ(Z_n, γ) and the
//! Boole-inequality lower bound on the probability of correct selection.

use serde::{Deserialize, Serialize};

use super::criterion::{criterion, criterion_gradient};
use super::{CriterionParams, SimplexVector};
use crate::error::{Error, Result};
use crate::special::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalApprox {
    /// δ^(κ)(α, γ).
    pub mean: f64,
    /// ∇ᵀ Σ ∇ at α.
    pub variance: f64,
    pub n: u64,
}

/// Multinomial covariance of the posterior at `alpha` after `n` observations:
/// `Σ_ii = α_i(1−α_i)/n`, `Σ_ij = −α_i α_j / n`.
pub fn posterior_covariance(alpha: &SimplexVector, n: u64) -> Vec<Vec<f64>> {
    let a = alpha.as_slice();
    let nf = n as f64;
    (0..a.len())
        .map(|i| {
            (0..a.len())
                .map(|j| if i == j { a[i] * (1.0 - a[i]) / nf } else { -a[i] * a[j] / nf })
                .collect()
        })
        .collect()
}

pub fn normal_approx(alpha: &SimplexVector, params: &CriterionParams, n: u64) -> Result<NormalApprox> {
    if n == 0 {
        return Err(Error::invalid("normal approximation needs n >= 1"));
    }
    let grad = criterion_gradient(alpha, params, n);
    let sigma = posterior_covariance(alpha, n);
    let variance = grad
        .iter()
        .zip(&sigma)
        .map(|(gi, row)| gi * row.iter().zip(&grad).map(|(s, gj)| s * gj).sum::<f64>())
        .sum::<f64>()
        .max(0.0);
    Ok(NormalApprox {
        mean: criterion(alpha, params, n),
        variance,
        n,
    })
}

/// `1 − Σ_{i≠t} Φ((δ_t − δ_i)/√(var_t + var_i))`, clamped to [0, 1].
pub fn pcs_lower_bound(deltas: &[f64], variances: &[f64], target_index: usize) -> Result<f64> {
    if deltas.len() != variances.len() {
        return Err(Error::invalid("deltas and variances differ in length"));
    }
    let Some(&target) = deltas.get(target_index) else {
        return Err(Error::invalid(format!("target index {target_index} out of range")));
    };
    if deltas.iter().any(|&d| d < target) {
        return Err(Error::invalid(format!(
            "arm {target_index} does not have the minimal criterion value"
        )));
    }
    let tv = variances[target_index];
    let miss: f64 = deltas
        .iter()
        .zip(variances)
        .enumerate()
        .filter(|(i, _)| *i != target_index)
        .map(|(_, (&d, &v))| {
            let sd = (tv + v).sqrt();
            let diff = target - d;
            if sd > 0.0 {
                normal_cdf(diff / sd)
            } else if diff < 0.0 {
                0.0
            } else {
                0.5
            }
        })
        .sum();
    Ok((1.0 - miss).clamp(0.0, 1.0))
}
