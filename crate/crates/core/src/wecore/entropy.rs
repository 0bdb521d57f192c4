//! Closed forms for the standard and weighted differential entropies of the
//! Dirichlet posterior, and the information gain between them.
//!
//! With `a = x + v + 1` the posterior is `Dir(a)`. The Dirichlet-form weight
//! `φ_n ∝ Π p_i^{γ_i n^κ}` turns `φ_n f_n` into the density of
//! `Dir(a + γ n^κ)` once normalized, so both entropies reduce to expectations
//! of `log p_i` under a Dirichlet law, `E[log p_i] = ψ(a_i) − ψ(Σ a)`.

use super::{ArmState, CriterionParams, SimplexVector};
use crate::error::{Error, Result};
use crate::special::{digamma, ln_multivariate_beta};

/// `−E_{Dir(b)}[log f_{Dir(a)}]`.
fn cross_entropy(a: &[f64], b: &[f64]) -> f64 {
    let b0: f64 = b.iter().sum();
    let psi_b0 = digamma(b0);
    let expected_log_kernel: f64 = a
        .iter()
        .zip(b)
        .map(|(&ai, &bi)| (ai - 1.0) * (digamma(bi) - psi_b0))
        .sum();
    ln_multivariate_beta(a) - expected_log_kernel
}

/// Differential entropy of the posterior `Dir(x + v + 1)`.
pub fn dirichlet_entropy(state: &ArmState) -> f64 {
    let a = state.dirichlet_params();
    cross_entropy(&a, &a)
}

/// Parameters of the normalized weighted density `Dir(x + v + 1 + γ n^κ)`.
pub fn weighted_params(state: &ArmState, params: &CriterionParams) -> Vec<f64> {
    let n = state.n();
    let scale = if n == 0 { 0.0 } else { (n as f64).powf(params.kappa) };
    state
        .dirichlet_params()
        .iter()
        .zip(params.gamma.as_slice())
        .map(|(a, g)| a + g * scale)
        .collect()
}

/// Weighted differential entropy `−∫ φ_n f_n log f_n`.
pub fn weighted_dirichlet_entropy(state: &ArmState, params: &CriterionParams) -> f64 {
    let a = state.dirichlet_params();
    cross_entropy(&a, &weighted_params(state, params))
}

/// Information gain `h(f_n) − h^φ(f_n)`. Negative once n is large and the
/// posterior sits away from γ; near γ and at small n it can be positive.
pub fn information_gain(state: &ArmState, params: &CriterionParams) -> f64 {
    let a = state.dirichlet_params();
    let b = weighted_params(state, params);
    let a0: f64 = a.iter().sum();
    let b0: f64 = b.iter().sum();
    // Difference taken term by term: both entropies share log B(a).
    let (psi_a0, psi_b0) = (digamma(a0), digamma(b0));
    a.iter()
        .zip(&b)
        .map(|(&ai, &bi)| (ai - 1.0) * ((digamma(bi) - psi_b0) - (digamma(ai) - psi_a0)))
        .sum()
}

/// Large-n expansion of the information gain for an arm whose counts follow
/// `x ≈ α n`: the leading term `−δ^(κ)(α, γ)` plus the finite correction
/// `ω = Σ_{j=3}^{η} (−1)^{j−1}/j · n^{jκ−j+1} (Σ γ_i^j / α_i^{j−1} − 1)` with
/// `η = ⌊1/(1−κ)⌋`.
pub fn gain_asymptotic(alpha: &SimplexVector, params: &CriterionParams, n: u64) -> Result<f64> {
    let leading = gain_leading_term(alpha, params, n)?;
    Ok(leading + omega(alpha, params, n))
}

/// Leading term of [`gain_asymptotic`] alone, `−δ^(κ)(α, γ)`.
pub fn gain_leading_term(alpha: &SimplexVector, params: &CriterionParams, n: u64) -> Result<f64> {
    if params.kappa < 0.5 {
        return Err(Error::Unsupported(format!(
            "kappa = {} < 0.5: the information gain vanishes asymptotically",
            params.kappa
        )));
    }
    if n == 0 {
        return Err(Error::invalid("expansion needs n >= 1"));
    }
    let nf = n as f64;
    let s2: f64 = power_sum(alpha, params, 2);
    Ok(-0.5 * (s2 - 1.0) * nf.powf(2.0 * params.kappa - 1.0))
}

/// Upper summation index η = ⌊1/(1−κ)⌋.
pub fn eta(kappa: f64) -> u32 {
    (1.0 / (1.0 - kappa) + 1e-12).floor() as u32
}

fn power_sum(alpha: &SimplexVector, params: &CriterionParams, j: i32) -> f64 {
    alpha
        .as_slice()
        .iter()
        .zip(params.gamma.as_slice())
        .map(|(a, g)| g.powi(j) / a.powi(j - 1))
        .sum()
}

fn omega(alpha: &SimplexVector, params: &CriterionParams, n: u64) -> f64 {
    let nf = n as f64;
    let k = params.kappa;
    (3..=eta(k) as i32)
        .map(|j| {
            let jf = j as f64;
            let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
            sign / jf * nf.powf(jf * k - jf + 1.0) * (power_sum(alpha, params, j) - 1.0)
        })
        .sum()
}
