use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Design, TrialConfig};
use super::scenario::Scenario;
use crate::allocation::{eligible_arms, TIE_TOLERANCE, final_recommendation, next_assignment, sample_index, AllocationKind};
use crate::error::{Error, Result};
use crate::wecore::{criterion, ArmState, CriterionParams, SimplexVector};

/// One simulated or conducted trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub assignments: Vec<usize>,
    pub outcomes: Vec<usize>,
    pub recommendation: Option<usize>,
    pub terminated: bool,
    pub per_arm_counts: Vec<ArmState>,
}

impl TrialRecord {
    pub fn patients(&self) -> usize {
        self.assignments.len()
    }

    /// Patients on `arm`.
    pub fn allocated_to(&self, arm: usize) -> usize {
        self.assignments.iter().filter(|&&a| a == arm).count()
    }

    /// Number of outcomes equal to `category`.
    pub fn outcome_count(&self, category: usize) -> usize {
        self.outcomes.iter().filter(|&&o| o == category).count()
    }
}

/// Deterministic 64-bit mix of a base seed and a stream index (SplitMix64
/// finalizer applied twice).
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(index))
}

pub(crate) fn sample_outcome<R: Rng + ?Sized>(probabilities: &SimplexVector, rng: &mut R) -> usize {
    sample_index(probabilities.as_slice(), rng.random::<f64>())
}

/// Validated inputs shared by every replication of a configuration.
#[derive(Debug, Clone)]
pub(crate) struct PreparedTrial<'a> {
    pub config: &'a TrialConfig,
    pub scenario: &'a Scenario,
    pub params: CriterionParams,
    pub initial: Vec<ArmState>,
}

impl<'a> PreparedTrial<'a> {
    pub fn new(config: &'a TrialConfig, scenario: &'a Scenario) -> Result<Self> {
        let params = config.criterion_params()?;
        if scenario.arms() != config.arms {
            return Err(Error::invalid(format!(
                "scenario `{}` has {} arms, config has {}",
                scenario.name,
                scenario.arms(),
                config.arms
            )));
        }
        scenario.validate(&config.gamma)?;
        Ok(PreparedTrial {
            config,
            scenario,
            params,
            initial: config.initial_states()?,
        })
    }

    pub fn run(&self, rng: &mut ChaCha8Rng) -> Result<TrialRecord> {
        match self.config.design {
            Design::WeightedEntropy => self.run_adaptive(rng),
            Design::FixedRandomization => self.run_fixed(rng),
        }
    }

    fn run_adaptive(&self, rng: &mut ChaCha8Rng) -> Result<TrialRecord> {
        let cfg = self.config;
        let safety = cfg.safety.as_ref();
        let mut states = self.initial.clone();
        let cap = cfg.max_patients as usize;
        let mut assignments = Vec::with_capacity(cap);
        let mut outcomes = Vec::with_capacity(cap);
        let mut stopped = false;
        for _ in 0..cfg.max_patients {
            let decision = next_assignment(cfg.rule, &states, &self.params, safety, rng)?;
            match decision.kind {
                AllocationKind::Terminate => {
                    stopped = true;
                    break;
                }
                AllocationKind::Assign(arm) => {
                    let y = sample_outcome(&self.scenario.probabilities[arm], rng);
                    states[arm].record(y)?;
                    assignments.push(arm);
                    outcomes.push(y);
                }
            }
        }
        let recommendation = if stopped {
            None
        } else {
            let eligible = eligible_arms(&states, safety)?;
            final_recommendation(&states, &cfg.gamma, &eligible)
        };
        Ok(TrialRecord {
            assignments,
            outcomes,
            recommendation,
            terminated: recommendation.is_none(),
            per_arm_counts: states,
        })
    }

    fn run_fixed(&self, rng: &mut ChaCha8Rng) -> Result<TrialRecord> {
        let m = self.config.arms;
        let mut states = self.initial.clone();
        let cap = self.config.max_patients as usize;
        let mut assignments = Vec::with_capacity(cap);
        let mut outcomes = Vec::with_capacity(cap);
        for _ in 0..self.config.max_patients {
            let arm = rng.random_range(0..m);
            let y = sample_outcome(&self.scenario.probabilities[arm], rng);
            states[arm].record(y)?;
            assignments.push(arm);
            outcomes.push(y);
        }
        let all: Vec<usize> = (0..m).collect();
        let recommendation = final_recommendation(&states, &self.config.gamma, &all);
        Ok(TrialRecord {
            assignments,
            outcomes,
            recommendation,
            terminated: recommendation.is_none(),
            per_arm_counts: states,
        })
    }
}

/// Runs one trial of `config.design` against `scenario`.
pub fn run_trial(config: &TrialConfig, scenario: &Scenario, seed: u64) -> Result<TrialRecord> {
    let prepared = PreparedTrial::new(config, scenario)?;
    prepared.run(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Runs one trial with fixed, equal randomization regardless of
/// `config.design`.
pub fn fixed_randomization_trial(config: &TrialConfig, scenario: &Scenario, seed: u64) -> Result<TrialRecord> {
    let fr = TrialConfig {
        design: Design::FixedRandomization,
        ..config.clone()
    };
    run_trial(&fr, scenario, seed)
}

/// Complete-information benchmark for binary outcomes.
///
/// Each of the `patients` draws one latent uniform `u`; the event in
/// `event_category` occurs on arm j iff `u < P_j(event)`. Every arm's rate is
/// estimated from all profiles and the arm minimizing δ^(½) against `gamma`
/// is returned (lowest index on ties).
pub fn benchmark_trial(
    scenario: &Scenario,
    gamma: &SimplexVector,
    patients: u64,
    event_category: usize,
    seed: u64,
) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    benchmark_with_rng(scenario, gamma, patients, event_category, &mut rng)
}

pub(crate) fn benchmark_with_rng<R: Rng + ?Sized>(
    scenario: &Scenario,
    gamma: &SimplexVector,
    patients: u64,
    event_category: usize,
    rng: &mut R,
) -> Result<usize> {
    if scenario.outcomes() != 2 || gamma.dim() != 2 {
        return Err(Error::Unsupported("benchmark needs binary outcomes".into()));
    }
    if event_category > 1 {
        return Err(Error::invalid("event category must be 0 or 1"));
    }
    if patients == 0 {
        return Err(Error::invalid("benchmark needs at least one patient"));
    }
    let rates: Vec<f64> = scenario.probabilities.iter().map(|p| p[event_category]).collect();
    let mut events = vec![0u64; rates.len()];
    for _ in 0..patients {
        let u: f64 = rng.random();
        for (e, &r) in events.iter_mut().zip(&rates) {
            if u < r {
                *e += 1;
            }
        }
    }
    let params = CriterionParams {
        gamma: gamma.clone(),
        kappa: 0.5,
    };
    let target_event = gamma[event_category];
    let nf = patients as f64;
    // Boundary estimates score +∞ on δ; rank those by absolute distance so
    // an all-boundary profile still orders arms sensibly.
    let scores = events
        .iter()
        .map(|&e| {
            let p = e as f64 / nf;
            if p <= 0.0 || p >= 1.0 {
                return Ok((f64::INFINITY, (p - target_event).abs()));
            }
            let mut v = [0.0; 2];
            v[event_category] = p;
            v[1 - event_category] = 1.0 - p;
            Ok((criterion(&SimplexVector::new(v.to_vec())?, &params, 1), 0.0))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    // Lowest index on ties, matching the allocation rules.
    let mut best = 0;
    for (j, s) in scores.iter().enumerate() {
        let b = scores[best];
        let better = if s.0.is_finite() && b.0.is_finite() {
            s.0 < b.0 && (b.0 - s.0).abs() > TIE_TOLERANCE * b.0.abs().max(s.0.abs())
        } else {
            s < &b
        };
        if better {
            best = j;
        }
    }
    Ok(best)
}
