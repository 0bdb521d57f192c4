use serde::{Deserialize, Serialize};

use crate::allocation::{Rule, SafetyConfig};
use crate::error::{Error, Result};
use crate::wecore::{ArmState, CriterionParams, SimplexVector};

/// Prior for one arm, given as its mode and concentration β (`v = β · mode`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub mode: SimplexVector,
    pub beta: f64,
}

/// Allocation design driven by a [`TrialConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Weighted-entropy allocation under the configured rule.
    #[default]
    WeightedEntropy,
    /// Fixed and equal randomization over all arms.
    FixedRandomization,
}

fn default_alpha() -> f64 {
    0.05
}

/// Many-to-one comparison of every experimental arm against a control with
/// one-sided Fisher exact tests and a Bonferroni correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisTestConfig {
    #[serde(default)]
    pub control_index: usize,
    /// Target family-wise error rate.
    #[serde(default = "default_alpha")]
    pub alpha_target: f64,
    /// Family-level cutoff; each comparison is tested at `cutoff / (m − 1)`.
    #[serde(default = "default_alpha")]
    pub cutoff: f64,
}

impl Default for HypothesisTestConfig {
    fn default() -> Self {
        HypothesisTestConfig {
            control_index: 0,
            alpha_target: default_alpha(),
            cutoff: default_alpha(),
        }
    }
}

fn default_seed() -> u64 {
    42
}

/// Everything needed to run a design, simulated or live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub arms: usize,
    pub outcomes: usize,
    pub gamma: SimplexVector,
    pub kappa: f64,
    pub rule: Rule,
    pub priors: Vec<PriorSpec>,
    /// Maximum number of patients N.
    #[serde(alias = "N")]
    pub max_patients: u64,
    #[serde(default)]
    pub safety: Option<SafetyConfig>,
    #[serde(default)]
    pub testing: Option<HypothesisTestConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub design: Design,
    /// Outcome category counted as a success (ENS, hypothesis tests).
    #[serde(default)]
    pub success_outcome: Option<usize>,
    /// Outcome category counted as a toxicity.
    #[serde(default)]
    pub toxicity_outcome: Option<usize>,
    /// Allows κ < 0.5.
    #[serde(default)]
    pub experimental_kappa_below_half: bool,
}

impl TrialConfig {
    /// Validates the configuration and returns its criterion parameters.
    pub fn criterion_params(&self) -> Result<CriterionParams> {
        if self.arms == 0 {
            return Err(Error::config("arms", "need at least one arm"));
        }
        if self.outcomes < 2 {
            return Err(Error::config("outcomes", "need at least two outcome categories"));
        }
        if self.gamma.dim() != self.outcomes {
            return Err(Error::config(
                "gamma",
                format!("has {} components, expected {}", self.gamma.dim(), self.outcomes),
            ));
        }
        if self.priors.len() != self.arms {
            return Err(Error::config(
                "priors",
                format!("{} priors given for {} arms", self.priors.len(), self.arms),
            ));
        }
        for (j, p) in self.priors.iter().enumerate() {
            if p.mode.dim() != self.outcomes {
                return Err(Error::config(format!("priors[{j}].mode"), "wrong number of categories"));
            }
            if !(p.beta > 0.0 && p.beta.is_finite()) {
                return Err(Error::config(format!("priors[{j}].beta"), "must be positive"));
            }
        }
        if self.max_patients == 0 {
            return Err(Error::config("max_patients", "must be positive"));
        }
        for (name, idx) in [("success_outcome", self.success_outcome), ("toxicity_outcome", self.toxicity_outcome)] {
            if matches!(idx, Some(i) if i >= self.outcomes) {
                return Err(Error::config(name, "category index out of range"));
            }
        }
        if let Some(s) = &self.safety {
            s.validate()?;
            if self.outcomes != 2 {
                return Err(Error::config("safety", "safety constraint needs binary outcomes"));
            }
            if s.toxicity_outcome >= self.outcomes {
                return Err(Error::config("safety.toxicity_outcome", "category index out of range"));
            }
        }
        if let Some(t) = &self.testing {
            if t.control_index >= self.arms {
                return Err(Error::config("testing.control_index", "out of range"));
            }
            if self.arms < 2 {
                return Err(Error::config("testing", "needs a control and at least one other arm"));
            }
            if self.outcomes != 2 || self.success_outcome.is_none() {
                return Err(Error::config("testing", "needs binary outcomes and success_outcome"));
            }
            if !(0.0..=1.0).contains(&t.cutoff) {
                return Err(Error::config("testing.cutoff", "must lie in [0, 1]"));
            }
            if !(0.0..1.0).contains(&t.alpha_target) {
                return Err(Error::config("testing.alpha_target", "must lie in [0, 1)"));
            }
        }
        if self.experimental_kappa_below_half {
            CriterionParams::experimental(self.gamma.clone(), self.kappa)
        } else {
            CriterionParams::new(self.gamma.clone(), self.kappa)
        }
    }

    /// Arm states before any patient is treated.
    pub fn initial_states(&self) -> Result<Vec<ArmState>> {
        self.priors
            .iter()
            .map(|p| ArmState::from_prior_mode(&p.mode, p.beta))
            .collect()
    }

    /// Toxicity category: the safety config's if present, else the explicit field.
    pub fn toxicity_category(&self) -> Option<usize> {
        self.safety
            .as_ref()
            .map(|s| s.toxicity_outcome)
            .or(self.toxicity_outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> TrialConfig {
        let mode = SimplexVector::binary(0.25).unwrap();
        TrialConfig {
            arms: 2,
            outcomes: 2,
            gamma: mode.clone(),
            kappa: 0.5,
            rule: Rule::RuleII,
            priors: vec![PriorSpec { mode: mode.clone(), beta: 1.0 }; 2],
            max_patients: 20,
            safety: None,
            testing: None,
            seed: 1,
            design: Design::WeightedEntropy,
            success_outcome: None,
            toxicity_outcome: Some(0),
            experimental_kappa_below_half: false,
        }
    }

    #[test]
    fn validates_fields() {
        assert!(base().criterion_params().is_ok());
        let mut c = base();
        c.priors.pop();
        assert_eq!(c.criterion_params().unwrap_err().field(), Some("priors"));
        let mut c = base();
        c.kappa = 0.3;
        assert_eq!(c.criterion_params().unwrap_err().field(), Some("kappa"));
        c.experimental_kappa_below_half = true;
        assert!(c.criterion_params().is_ok());
        let mut c = base();
        c.testing = Some(HypothesisTestConfig::default());
        assert_eq!(c.criterion_params().unwrap_err().field(), Some("testing"));
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let json = r#"{
            "arms": 2, "outcomes": 2, "gamma": [0.25, 0.75], "kappa": 0.5,
            "rule": "rule_ii", "N": 20,
            "priors": [{"mode": [0.25, 0.75], "beta": 1}, {"mode": [0.3, 0.7], "beta": 1}],
            "safety": {"gamma_star": 0.45, "r": 0.035}
        }"#;
        let c: TrialConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.max_patients, 20);
        assert_eq!(c.seed, 42);
        assert_eq!(c.safety.as_ref().unwrap().theta_final, 0.3);
        assert_eq!(c.toxicity_category(), Some(0));
        let back: TrialConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
