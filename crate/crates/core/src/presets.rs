//! Built-in designs and scenarios for the dose-finding and multi-arm
//! efficacy studies, and the published reference values they are checked
//! against.

use serde::Deserialize;

use crate::allocation::{Rule, SafetyConfig};
use crate::error::{Error, Result};
use crate::simulator::{Design, HypothesisTestConfig, PriorSpec, Scenario, TrialConfig};
use crate::wecore::SimplexVector;

/// Target toxicity rate of the dose-finding study.
pub const PHASE_ONE_TARGET: f64 = 0.25;
/// Patients per dose-finding trial.
pub const PHASE_ONE_PATIENTS: u64 = 20;
/// Operational prior of the dose-finding study: concentration and the
/// spread between the lowest and highest prior toxicity modes.
pub const PHASE_ONE_PRIOR_BETA: f64 = 1.0;
pub const PHASE_ONE_PRIOR_STEP: f64 = 0.3;
/// Safety constraint parameters of the dose-finding study.
pub const PHASE_ONE_GAMMA_STAR: f64 = 0.45;
pub const PHASE_ONE_R: f64 = 0.035;

/// Toxicity probabilities of the seven doses in the six dose-finding
/// scenarios, with the index of the target dose.
const PHASE_ONE_TOXICITY: [([f64; 7], Option<usize>); 6] = [
    ([0.06, 0.12, 0.15, 0.18, 0.24, 0.36, 0.40], Some(4)),
    ([0.10, 0.18, 0.25, 0.32, 0.50, 0.68, 0.82], Some(2)),
    ([0.15, 0.20, 0.50, 0.55, 0.60, 0.65, 0.70], Some(1)),
    ([0.05, 0.10, 0.40, 0.35, 0.25, 0.15, 0.12], Some(4)),
    ([0.35, 0.40, 0.40, 0.35, 0.25, 0.15, 0.10], Some(4)),
    ([0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80], None),
];

/// Dose-finding scenario 1..=6. Scenario 6 has no safe dose.
pub fn phase_one_scenario(number: usize) -> Result<Scenario> {
    let (tox, target) = PHASE_ONE_TOXICITY
        .get(number.wrapping_sub(1))
        .ok_or_else(|| Error::invalid(format!("dose-finding scenario {number} does not exist (1..=6)")))?;
    let s = Scenario::binary(format!("phase1_scenario{number}"), tox, *target)?;
    Ok(if target.is_none() { s.with_no_safe_arm() } else { s })
}

pub fn phase_one_scenarios() -> Vec<Scenario> {
    (1..=6).map(|k| phase_one_scenario(k).expect("built-in scenario")).collect()
}

/// Prior toxicity modes rising linearly from `base` to `base + step`
/// across `arms` doses.
pub fn linear_prior_modes(base: f64, step: f64, arms: usize) -> Vec<f64> {
    if arms == 1 {
        return vec![base];
    }
    (0..arms)
        .map(|j| base + step * j as f64 / (arms - 1) as f64)
        .collect()
}

/// Binary priors over (toxicity, no toxicity) with the given toxicity modes.
pub fn toxicity_priors(modes: &[f64], beta: f64) -> Result<Vec<PriorSpec>> {
    modes
        .iter()
        .map(|&p| Ok(PriorSpec { mode: SimplexVector::binary(p)?, beta }))
        .collect()
}

/// Dose-finding design: seven doses, target toxicity 0.25, Rule II with
/// κ = ½, operational prior and safety constraint.
pub fn phase_one_config() -> TrialConfig {
    let modes = linear_prior_modes(PHASE_ONE_TARGET, PHASE_ONE_PRIOR_STEP, 7);
    TrialConfig {
        arms: 7,
        outcomes: 2,
        gamma: SimplexVector::binary(PHASE_ONE_TARGET).expect("valid target"),
        kappa: 0.5,
        rule: Rule::RuleII,
        priors: toxicity_priors(&modes, PHASE_ONE_PRIOR_BETA).expect("valid priors"),
        max_patients: PHASE_ONE_PATIENTS,
        safety: Some(SafetyConfig::new(PHASE_ONE_GAMMA_STAR, PHASE_ONE_R)),
        testing: None,
        seed: 42,
        design: Design::WeightedEntropy,
        success_outcome: None,
        toxicity_outcome: Some(0),
        experimental_kappa_below_half: false,
    }
}

/// Six toxicity profiles used to tune the operational prior: the target
/// dose sits low, in the middle and high, under steep and flat dose-toxicity
/// curves. "High" stops at the fifth dose: starting from the first dose,
/// twenty patients almost never reach the sixth or seventh under any prior
/// worth considering, and one zero PCS zeroes the geometric mean.
pub fn prior_calibration_scenarios() -> Vec<Scenario> {
    let rows: [(&str, [f64; 7], usize); 6] = [
        ("target_d1_steep", [0.25, 0.40, 0.50, 0.60, 0.70, 0.75, 0.80], 0),
        ("target_d2_flat", [0.15, 0.25, 0.35, 0.40, 0.45, 0.50, 0.55], 1),
        ("target_d3_linear", [0.10, 0.17, 0.25, 0.33, 0.41, 0.49, 0.57], 2),
        ("target_d4_steep", [0.02, 0.06, 0.12, 0.25, 0.40, 0.55, 0.70], 3),
        ("target_d4_flat", [0.10, 0.14, 0.19, 0.25, 0.32, 0.38, 0.45], 3),
        ("target_d5_flat", [0.05, 0.10, 0.15, 0.20, 0.25, 0.35, 0.45], 4),
    ];
    rows.iter()
        .map(|(name, tox, t)| Scenario::binary(*name, tox, Some(*t)).expect("built-in scenario"))
        .collect()
}

/// Efficacy target of the multi-arm study: the most efficacious arm.
pub const PHASE_TWO_TARGET: f64 = 0.999;
pub const PHASE_TWO_PRIOR_MODE: f64 = 0.99;
pub const PHASE_TWO_CONTROL_BETA: f64 = 5.0;
pub const PHASE_TWO_ARM_BETA: f64 = 2.0;

/// Patients in multi-arm trial 1 or 2.
pub fn phase_two_patients(trial: u8) -> Result<u64> {
    match trial {
        1 => Ok(423),
        2 => Ok(80),
        t => Err(Error::invalid(format!("multi-arm trial {t} does not exist (1 or 2)"))),
    }
}

/// Multi-arm design with a control (arm 0) and three experimental arms.
/// Outcomes are (failure, success); one-sided Fisher tests against control.
pub fn phase_two_config(trial: u8, design: Design, rule: Rule, kappa: f64) -> Result<TrialConfig> {
    let mode = SimplexVector::binary(1.0 - PHASE_TWO_PRIOR_MODE)?;
    let priors = (0..4)
        .map(|j| PriorSpec {
            mode: mode.clone(),
            beta: if j == 0 { PHASE_TWO_CONTROL_BETA } else { PHASE_TWO_ARM_BETA },
        })
        .collect();
    Ok(TrialConfig {
        arms: 4,
        outcomes: 2,
        gamma: SimplexVector::binary(1.0 - PHASE_TWO_TARGET)?,
        kappa,
        rule,
        priors,
        max_patients: phase_two_patients(trial)?,
        safety: None,
        testing: Some(HypothesisTestConfig::default()),
        seed: 42,
        design,
        success_outcome: Some(1),
        toxicity_outcome: None,
        experimental_kappa_below_half: false,
    })
}

/// Efficacy scenario of trial 1 or 2 under the null (all arms at 0.3) or
/// the alternative.
pub fn phase_two_scenario(trial: u8, alternative: bool) -> Result<Scenario> {
    phase_two_patients(trial)?;
    let eff: [f64; 4] = match (trial, alternative) {
        (_, false) => [0.3; 4],
        (1, true) => [0.3, 0.3, 0.3, 0.5],
        _ => [0.3, 0.4, 0.5, 0.6],
    };
    let name = format!("trial{trial}_{}", if alternative { "h1" } else { "h0" });
    Scenario::binary_second(name, &eff, Some(3))
}

/// A published operating characteristic.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferenceValue {
    pub table: String,
    pub design: String,
    pub scenario: String,
    pub metric: String,
    pub value: f64,
    pub tolerance: f64,
    #[serde(default)]
    pub external: bool,
}

#[derive(Deserialize)]
struct ReferenceFile {
    reference: Vec<ReferenceValue>,
}

const REFERENCE_TOML: &str = include_str!("../data/reference.toml");

/// All published values bundled with the crate.
pub fn reference_values() -> Vec<ReferenceValue> {
    toml::from_str::<ReferenceFile>(REFERENCE_TOML)
        .expect("bundled reference data parses")
        .reference
}

/// Published values of one table.
pub fn reference_table(table: &str) -> Vec<ReferenceValue> {
    reference_values().into_iter().filter(|r| r.table == table).collect()
}
