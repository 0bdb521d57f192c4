//! Assignment rules, final recommendation and the time-varying safety
//! constraint.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::beta_inc_reg;
use crate::wecore::{plugin_criterion, ArmState, CriterionParams, SimplexVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Randomize with probabilities proportional to 1/δ̂.
    #[serde(rename = "rule_i", alias = "I", alias = "rule1")]
    RuleI,
    /// Assign the arm with the smallest δ̂.
    #[serde(rename = "rule_ii", alias = "II", alias = "rule2")]
    RuleII,
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" | "rule_i" | "rule1" | "rulei" => Ok(Rule::RuleI),
            "ii" | "2" | "rule_ii" | "rule2" | "ruleii" => Ok(Rule::RuleII),
            other => Err(Error::invalid(format!("unknown rule `{other}` (expected I or II)"))),
        }
    }
}

/// Which patient count drives the threshold θ_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdCount {
    /// Patients treated on the arm being checked. Untested arms then keep
    /// θ = 1 forever, so a trial can only stop after every arm has been
    /// tried.
    PerArm,
    /// Patients treated in the whole trial.
    #[default]
    TrialWide,
}

fn default_theta_final() -> f64 {
    0.3
}

/// Overdose constraint: arm j is admissible while
/// `P(p_tox > γ* | data) ≤ θ_n`, with `θ_n = max(1 − r n, θ_final)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyConfig {
    pub gamma_star: f64,
    pub r: f64,
    #[serde(default = "default_theta_final")]
    pub theta_final: f64,
    #[serde(default)]
    pub toxicity_outcome: usize,
    #[serde(default)]
    pub threshold_count: ThresholdCount,
}

impl SafetyConfig {
    pub fn new(gamma_star: f64, r: f64) -> Self {
        SafetyConfig {
            gamma_star,
            r,
            theta_final: default_theta_final(),
            toxicity_outcome: 0,
            threshold_count: ThresholdCount::TrialWide,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_star > 0.0 && self.gamma_star < 1.0) {
            return Err(Error::config("safety.gamma_star", "must lie in (0, 1)"));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::config("safety.r", "must be a non-negative finite rate"));
        }
        if !(self.theta_final > 0.0 && self.theta_final <= 0.3) {
            return Err(Error::config("safety.theta_final", "must lie in (0, 0.3]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arm", rename_all = "snake_case")]
pub enum AllocationKind {
    Assign(usize),
    Terminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDecision {
    pub kind: AllocationKind,
    /// Rule I randomization probabilities over all arms.
    pub probabilities: Option<Vec<f64>>,
    /// Uniform variate consumed by the Rule I draw.
    pub uniform: Option<f64>,
}

/// Rule I probabilities `ŵ_j = (1/δ̂_j) / Σ_i (1/δ̂_i)`. When some δ̂ are
/// exactly zero, the zero arms share probability one equally.
pub fn randomization_probabilities(criterion_values: &[f64]) -> Result<Vec<f64>> {
    if criterion_values.is_empty() {
        return Err(Error::invalid("no arms to randomize over"));
    }
    if let Some(v) = criterion_values.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::invalid(format!("criterion value {v} is negative or NaN")));
    }
    let zeros = criterion_values.iter().filter(|&&v| v == 0.0).count();
    if zeros > 0 {
        let w = 1.0 / zeros as f64;
        return Ok(criterion_values
            .iter()
            .map(|&v| if v == 0.0 { w } else { 0.0 })
            .collect());
    }
    let total: f64 = criterion_values.iter().map(|v| 1.0 / v).sum();
    Ok(criterion_values.iter().map(|v| (1.0 / v) / total).collect())
}

/// Relative gap below which two criterion values count as tied. Arms with
/// the same posterior mode can differ in the last bits of δ̂.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Eligible arm with the smallest criterion value, lowest index on ties.
/// `None` when nothing is eligible.
pub fn select_best(criterion_values: &[f64], eligible: &[usize]) -> Option<usize> {
    argmin_with_ties(criterion_values, eligible, |j, b| j < b)
}

/// Smallest value over `eligible`; on a tie `j` replaces the incumbent `b`
/// when `prefer(j, b)`.
fn argmin_with_ties(values: &[f64], eligible: &[usize], prefer: impl Fn(usize, usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &j in eligible {
        let v = values[j];
        match best {
            None => best = Some(j),
            Some(b) => {
                let w = values[b];
                if tied(v, w) {
                    if prefer(j, b) {
                        best = Some(j);
                    }
                } else if v < w {
                    best = Some(j);
                }
            }
        }
    }
    best
}

/// Final recommendation: smallest δ̂ with κ = ½ among `eligible`. Ties go
/// to the highest index: among doses equally close to the target, the
/// higher one is recommended.
pub fn final_recommendation(
    states: &[ArmState],
    gamma: &SimplexVector,
    eligible: &[usize],
) -> Option<usize> {
    let params = CriterionParams {
        gamma: gamma.clone(),
        kappa: 0.5,
    };
    let values = criterion_values(states, &params);
    argmin_with_ties(&values, eligible, |j, b| j > b)
}

/// δ̂ for every arm.
pub fn criterion_values(states: &[ArmState], params: &CriterionParams) -> Vec<f64> {
    states.iter().map(|s| plugin_criterion(s, params)).collect()
}

/// θ_n = max(1 − r n, θ_final).
pub fn safety_threshold(n: u64, cfg: &SafetyConfig) -> f64 {
    (1.0 - cfg.r * n as f64).max(cfg.theta_final)
}

/// Posterior probability that the toxicity rate exceeds `gamma_star`, under
/// `Beta(x_tox + v_tox + 1, x_other + v_other + 1)`.
pub fn overdose_probability(state: &ArmState, gamma_star: f64, toxicity_outcome: usize) -> Result<f64> {
    if state.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "safety constraint needs binary outcomes, arm has {} categories",
            state.dim()
        )));
    }
    if toxicity_outcome > 1 {
        return Err(Error::invalid(format!("toxicity outcome {toxicity_outcome} out of range")));
    }
    let params = state.dirichlet_params();
    let (a, b) = (params[toxicity_outcome], params[1 - toxicity_outcome]);
    Ok(1.0 - beta_inc_reg(a, b, gamma_star))
}

/// Whether a single arm satisfies the constraint after `n` counted patients.
pub fn is_admissible(state: &ArmState, n: u64, cfg: &SafetyConfig) -> Result<bool> {
    Ok(overdose_probability(state, cfg.gamma_star, cfg.toxicity_outcome)? <= safety_threshold(n, cfg))
}

/// Arms currently satisfying the safety constraint, in index order.
pub fn admissible_set(states: &[ArmState], cfg: &SafetyConfig) -> Result<Vec<usize>> {
    let total: u64 = states.iter().map(ArmState::n).sum();
    let mut out = Vec::with_capacity(states.len());
    for (j, s) in states.iter().enumerate() {
        let n = match cfg.threshold_count {
            ThresholdCount::PerArm => s.n(),
            ThresholdCount::TrialWide => total,
        };
        if is_admissible(s, n, cfg)? {
            out.push(j);
        }
    }
    Ok(out)
}

/// Eligible arms: the admissible set under `safety`, or every arm.
pub fn eligible_arms(states: &[ArmState], safety: Option<&SafetyConfig>) -> Result<Vec<usize>> {
    match safety {
        Some(cfg) => admissible_set(states, cfg),
        None => Ok((0..states.len()).collect()),
    }
}

/// Index picked by a uniform variate `u ∈ [0, 1)` from `probabilities`.
pub fn sample_index(probabilities: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (j, &p) in probabilities.iter().enumerate() {
        if p > 0.0 {
            last_positive = j;
            cum += p;
            if u < cum {
                return j;
            }
        }
    }
    last_positive
}

/// Next assignment with an explicit uniform variate for the Rule I draw.
/// Rule II ignores `uniform`.
pub fn next_assignment_with_uniform(
    rule: Rule,
    states: &[ArmState],
    params: &CriterionParams,
    safety: Option<&SafetyConfig>,
    uniform: f64,
) -> Result<AllocationDecision> {
    if states.is_empty() {
        return Err(Error::invalid("no arms"));
    }
    let eligible = eligible_arms(states, safety)?;
    if eligible.is_empty() {
        return Ok(AllocationDecision {
            kind: AllocationKind::Terminate,
            probabilities: None,
            uniform: None,
        });
    }
    let values = criterion_values(states, params);
    match rule {
        Rule::RuleI => {
            let sub: Vec<f64> = eligible.iter().map(|&j| values[j]).collect();
            let sub_probs = randomization_probabilities(&sub)?;
            let mut probs = vec![0.0; states.len()];
            for (&j, p) in eligible.iter().zip(sub_probs) {
                probs[j] = p;
            }
            let arm = sample_index(&probs, uniform);
            Ok(AllocationDecision {
                kind: AllocationKind::Assign(arm),
                probabilities: Some(probs),
                uniform: Some(uniform),
            })
        }
        Rule::RuleII => {
            let arm = select_best(&values, &eligible).expect("eligible set is non-empty");
            Ok(AllocationDecision {
                kind: AllocationKind::Assign(arm),
                probabilities: None,
                uniform: None,
            })
        }
    }
}

/// Next assignment; Rule I draws its uniform variate from `rng`.
pub fn next_assignment<R: Rng + ?Sized>(
    rule: Rule,
    states: &[ArmState],
    params: &CriterionParams,
    safety: Option<&SafetyConfig>,
    rng: &mut R,
) -> Result<AllocationDecision> {
    let u = match rule {
        Rule::RuleI => rng.random::<f64>(),
        Rule::RuleII => 0.0,
    };
    next_assignment_with_uniform(rule, states, params, safety, u)
}
