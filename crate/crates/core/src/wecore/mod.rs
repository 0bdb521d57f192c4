//! Weighted-entropy mathematics: Dirichlet posteriors, the δ^(κ) selection
//! criterion, information gain and the normal approximation.

mod arm;
pub mod asymptotics;
pub mod criterion;
pub mod entropy;
mod simplex;

pub use arm::ArmState;
pub use asymptotics::{normal_approx, pcs_lower_bound, posterior_covariance, NormalApprox};
pub use criterion::{
    criterion, criterion_binary, criterion_gradient, criterion_gradient_binary, plugin_criterion,
    sample_size_penalty, CriterionParams,
};
pub use entropy::{
    dirichlet_entropy, gain_asymptotic, gain_leading_term, information_gain,
    weighted_dirichlet_entropy,
};
pub use simplex::{SimplexVector, SIMPLEX_TOLERANCE};
