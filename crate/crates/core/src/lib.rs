//! Weighted-entropy sequential arm selection.
//!
//! Each arm carries a Dirichlet posterior over `d` outcome categories. Arms
//! are compared through the penalized criterion
//! `δ(α, γ) = ½(Σ γ_i²/α_i − 1) · n^(2κ−1)`, evaluated at the posterior
//! mode, which measures how far an arm's outcome distribution is from the
//! target `γ`. Patients are allocated by randomization (Rule I) or by taking
//! the best arm (Rule II), optionally subject to an overdose constraint.

pub mod allocation;
pub mod calibration;
pub mod error;
pub mod presets;
pub mod report;
pub mod reproduce;
pub mod simulator;
pub mod special;
pub mod wecore;

pub use allocation::{
    admissible_set, eligible_arms, final_recommendation, next_assignment, next_assignment_with_uniform,
    overdose_probability, safety_threshold, AllocationDecision, AllocationKind, Rule, SafetyConfig, ThresholdCount,
};
pub use error::{Error, Result};
pub use simulator::{
    run_monte_carlo, run_trial, Design, HypothesisTestConfig, Metric, OperatingCharacteristics, PriorSpec, Scenario,
    TrialConfig, TrialRecord,
};
pub use wecore::{
    criterion, dirichlet_entropy, gain_asymptotic, information_gain, normal_approx, pcs_lower_bound,
    weighted_dirichlet_entropy, ArmState, CriterionParams, NormalApprox, SimplexVector,
};
