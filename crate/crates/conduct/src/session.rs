//! Event-sourced trial session.
//!
//! Every mutation is expressed as an [`Event`] and applied through the same
//! [`Session::apply`] used for replay, so a session rebuilt from its log is
//! identical to the live one by construction.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use wedesign::allocation::{criterion_values, randomization_probabilities, select_best};
use wedesign::simulator::stream_seed;
use wedesign::{
    eligible_arms, final_recommendation, next_assignment_with_uniform, overdose_probability, safety_threshold,
    AllocationKind, ArmState, CriterionParams, Design, Rule, ThresholdCount, TrialConfig,
};

use crate::error::{ServiceError, ServiceResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Created,
    Assigned,
    Outcome,
    Terminated,
    Recommended,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
    pub kind: EventKind,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedPayload {
    pub id: String,
    pub config: TrialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignedPayload {
    pub arm: usize,
    #[serde(default)]
    pub probabilities: Option<Vec<f64>>,
    /// Uniform variate behind a randomized draw. Replay reuses it, so
    /// history is never re-randomized.
    #[serde(default)]
    pub uniform: Option<f64>,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomePayload {
    pub arm: usize,
    pub outcome: usize,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminatedPayload {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedPayload {
    pub arm: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Patients are still being enrolled.
    Active,
    /// All N patients treated; the final recommendation may be requested.
    Complete,
    /// No admissible arm remained.
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmView {
    pub index: usize,
    pub n: u64,
    pub counts: Vec<u64>,
    pub posterior_mode: Vec<f64>,
    /// δ̂ at the configured κ.
    pub criterion: f64,
    /// δ̂ at κ = ½, the quantity behind the final recommendation.
    pub criterion_half: f64,
    /// Probability of the next assignment under randomized allocation.
    pub probability: Option<f64>,
    pub admissible: bool,
    pub overdose_probability: Option<f64>,
    pub safety_threshold: Option<f64>,
}

/// Everything an investigator needs to see about a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    /// Sequence number of the last applied event.
    pub seq: u64,
    pub status: Status,
    pub rule: Rule,
    pub kappa: f64,
    pub patients_treated: u64,
    pub max_patients: u64,
    pub pending_assignment: Option<usize>,
    pub arms: Vec<ArmView>,
    pub admissible: Vec<usize>,
    /// Eligible arm with the smallest δ̂ at the configured κ.
    pub next_recommendation: Option<usize>,
    /// Final recommendation, once it has been issued.
    pub recommendation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResponse {
    pub arm: Option<usize>,
    pub terminated: bool,
    pub probabilities: Option<Vec<f64>>,
    pub view: SessionView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationResponse {
    pub recommendation: Option<usize>,
    pub view: SessionView,
}

#[derive(Debug, Clone, PartialEq)]
struct Pending {
    arm: usize,
    key: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    config: TrialConfig,
    params: CriterionParams,
    half: CriterionParams,
    states: Vec<ArmState>,
    pending: Option<Pending>,
    assignments: u64,
    treated: u64,
    terminated: bool,
    recommendation: Option<Option<usize>>,
    seq: u64,
    events: Vec<Event>,
    outcome_keys: HashMap<String, SessionView>,
}

fn decode<T: serde::de::DeserializeOwned>(event: &Event) -> ServiceResult<T> {
    serde_json::from_value(event.payload.clone())
        .map_err(|e| ServiceError::Replay(format!("event {}: {e}", event.seq)))
}

fn encode<T: Serialize>(payload: &T) -> Value {
    serde_json::to_value(payload).expect("payloads serialize")
}

impl Session {
    /// Validates `config` and starts a session whose log holds the single
    /// `created` event.
    pub fn create(id: String, config: TrialConfig, ts: u64) -> ServiceResult<Session> {
        let payload = CreatedPayload { id, config };
        let event = Event { seq: 1, ts, kind: EventKind::Created, payload: encode(&payload) };
        Session::replay(&[event])
    }

    /// Rebuilds a session from its log.
    pub fn replay(events: &[Event]) -> ServiceResult<Session> {
        let first = events.first().ok_or_else(|| ServiceError::Replay("empty log".into()))?;
        if first.kind != EventKind::Created || first.seq != 1 {
            return Err(ServiceError::Replay("log must open with `created` at seq 1".into()));
        }
        let CreatedPayload { id, config } = decode(first)?;
        let params = config.criterion_params()?;
        let half = CriterionParams { gamma: config.gamma.clone(), kappa: 0.5 };
        let states = config.initial_states()?;
        let mut session = Session {
            id,
            config,
            params,
            half,
            states,
            pending: None,
            assignments: 0,
            treated: 0,
            terminated: false,
            recommendation: None,
            seq: 1,
            events: vec![first.clone()],
            outcome_keys: HashMap::new(),
        };
        for event in &events[1..] {
            session.commit(event.clone())?;
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn states(&self) -> &[ArmState] {
        &self.states
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn status(&self) -> Status {
        if self.terminated {
            Status::Terminated
        } else if self.treated >= self.config.max_patients {
            Status::Complete
        } else {
            Status::Active
        }
    }

    fn commit(&mut self, event: Event) -> ServiceResult<()> {
        if event.seq != self.seq + 1 {
            return Err(ServiceError::Replay(format!("expected seq {}, found {}", self.seq + 1, event.seq)));
        }
        self.apply(&event)?;
        self.seq = event.seq;
        self.events.push(event.clone());
        if event.kind == EventKind::Outcome {
            let p: OutcomePayload = decode(&event)?;
            if let Some(key) = p.idempotency_key {
                let view = self.view()?;
                self.outcome_keys.insert(key, view);
            }
        }
        Ok(())
    }

    fn push(&mut self, kind: EventKind, payload: Value, ts: u64) -> ServiceResult<()> {
        let event = Event { seq: self.seq + 1, ts, kind, payload };
        self.commit(event)?;
        #[cfg(debug_assertions)]
        {
            let replayed = Session::replay(&self.events).expect("log replays");
            debug_assert_eq!(replayed.states, self.states);
            debug_assert_eq!(replayed.view().ok(), self.view().ok());
        }
        Ok(())
    }

    /// State transition for one event. Live mutations and replay both go
    /// through here.
    fn apply(&mut self, event: &Event) -> ServiceResult<()> {
        match event.kind {
            EventKind::Created => Err(ServiceError::Replay(format!("second `created` at seq {}", event.seq))),
            EventKind::Assigned => {
                let p: AssignedPayload = decode(event)?;
                if self.pending.is_some() || self.terminated {
                    return Err(ServiceError::Replay(format!("unexpected assignment at seq {}", event.seq)));
                }
                if p.arm >= self.config.arms {
                    return Err(ServiceError::Replay(format!("arm {} out of range", p.arm)));
                }
                self.pending = Some(Pending { arm: p.arm, key: p.idempotency_key });
                self.assignments += 1;
                Ok(())
            }
            EventKind::Outcome => {
                let p: OutcomePayload = decode(event)?;
                if self.pending.as_ref().map(|q| q.arm) != Some(p.arm) {
                    return Err(ServiceError::Replay(format!("outcome without assignment at seq {}", event.seq)));
                }
                self.record(p.arm, p.outcome)
                    .map_err(|e| ServiceError::Replay(format!("seq {}: {e}", event.seq)))
            }
            EventKind::Terminated => {
                self.pending = None;
                self.terminated = true;
                Ok(())
            }
            EventKind::Recommended => {
                let p: RecommendedPayload = decode(event)?;
                if p.arm.is_none() {
                    self.terminated = true;
                }
                self.recommendation = Some(p.arm);
                Ok(())
            }
        }
    }

    fn record(&mut self, arm: usize, outcome: usize) -> ServiceResult<()> {
        let state = self
            .states
            .get_mut(arm)
            .ok_or_else(|| ServiceError::bad_request(format!("arm {arm} out of range"), Some("arm")))?;
        if outcome >= self.config.outcomes {
            return Err(ServiceError::bad_request(
                format!("outcome {outcome} out of range for {} categories", self.config.outcomes),
                Some("outcome"),
            ));
        }
        state.record(outcome).expect("outcome index checked");
        self.treated += 1;
        self.pending = None;
        Ok(())
    }

    /// Uniform variate for the `k`-th assignment, derived from the
    /// configured seed so a recovered session draws the same value.
    fn uniform(&self, k: u64) -> f64 {
        ChaCha8Rng::seed_from_u64(stream_seed(self.config.seed, k)).random::<f64>()
    }

    /// Issues the next assignment, or terminates the session when no arm is
    /// admissible. The event is committed before the decision is returned.
    pub fn assign(&mut self, key: Option<String>, ts: u64) -> ServiceResult<AssignmentResponse> {
        if self.terminated {
            return Err(ServiceError::Gone("trial has terminated".into()));
        }
        if let Some(p) = &self.pending {
            if key.is_some() && p.key == key {
                let probabilities = self.last_assignment()?.probabilities;
                return Ok(AssignmentResponse { arm: Some(p.arm), terminated: false, probabilities, view: self.view()? });
            }
            return Err(ServiceError::Conflict(format!("assignment to arm {} awaits its outcome", p.arm)));
        }
        if self.treated >= self.config.max_patients {
            return Err(ServiceError::Conflict(format!(
                "all {} patients have been treated",
                self.config.max_patients
            )));
        }
        let u = self.uniform(self.assignments);
        let (kind, probabilities, uniform) = match self.config.design {
            Design::FixedRandomization => {
                let m = self.config.arms;
                let arm = ((u * m as f64) as usize).min(m - 1);
                (AllocationKind::Assign(arm), Some(vec![1.0 / m as f64; m]), Some(u))
            }
            Design::WeightedEntropy => {
                let d = next_assignment_with_uniform(
                    self.config.rule,
                    &self.states,
                    &self.params,
                    self.config.safety.as_ref(),
                    u,
                )?;
                (d.kind, d.probabilities, d.uniform)
            }
        };
        match kind {
            AllocationKind::Terminate => {
                let payload = TerminatedPayload { reason: "no admissible arm".into() };
                self.push(EventKind::Terminated, encode(&payload), ts)?;
                Ok(AssignmentResponse { arm: None, terminated: true, probabilities: None, view: self.view()? })
            }
            AllocationKind::Assign(arm) => {
                let payload = AssignedPayload { arm, probabilities: probabilities.clone(), uniform, idempotency_key: key };
                self.push(EventKind::Assigned, encode(&payload), ts)?;
                Ok(AssignmentResponse { arm: Some(arm), terminated: false, probabilities, view: self.view()? })
            }
        }
    }

    fn last_assignment(&self) -> ServiceResult<AssignedPayload> {
        let event = self
            .events
            .iter()
            .rev()
            .find(|e| e.kind == EventKind::Assigned)
            .ok_or_else(|| ServiceError::Replay("pending arm without an assignment event".into()))?;
        decode(event)
    }

    /// Records the outcome of the pending assignment. A repeated key returns
    /// the view produced the first time and changes nothing.
    pub fn record_outcome(
        &mut self,
        arm: usize,
        outcome: usize,
        key: Option<String>,
        ts: u64,
    ) -> ServiceResult<SessionView> {
        if let Some(view) = key.as_ref().and_then(|k| self.outcome_keys.get(k)) {
            return Ok(view.clone());
        }
        if self.terminated {
            return Err(ServiceError::Gone("trial has terminated".into()));
        }
        self.check_arm_outcome(arm, outcome)?;
        match &self.pending {
            None => return Err(ServiceError::Conflict("no assignment is pending".into())),
            Some(p) if p.arm != arm => {
                return Err(ServiceError::Conflict(format!("pending assignment is arm {}, not arm {arm}", p.arm)))
            }
            Some(_) => {}
        }
        let payload = OutcomePayload { arm, outcome, idempotency_key: key };
        self.push(EventKind::Outcome, encode(&payload), ts)?;
        self.view()
    }

    fn check_arm_outcome(&self, arm: usize, outcome: usize) -> ServiceResult<()> {
        if arm >= self.config.arms {
            return Err(ServiceError::bad_request(
                format!("arm {arm} out of range for {} arms", self.config.arms),
                Some("arm"),
            ));
        }
        if outcome >= self.config.outcomes {
            return Err(ServiceError::bad_request(
                format!("outcome {outcome} out of range for {} categories", self.config.outcomes),
                Some("outcome"),
            ));
        }
        Ok(())
    }

    /// The view `record_outcome(arm, outcome)` would produce, computed on a
    /// copy. Any arm may be previewed, not only the pending one.
    pub fn whatif(&self, arm: usize, outcome: usize) -> ServiceResult<SessionView> {
        self.check_arm_outcome(arm, outcome)?;
        let mut copy = self.clone();
        copy.pending = Some(Pending { arm, key: None });
        let payload = OutcomePayload { arm, outcome, idempotency_key: None };
        let event = Event { seq: copy.seq + 1, ts: 0, kind: EventKind::Outcome, payload: encode(&payload) };
        copy.commit(event)?;
        copy.view()
    }

    /// Final recommendation: smallest δ̂ at κ = ½ among admissible arms. The
    /// first call logs it; later calls return the logged value.
    pub fn recommend(&mut self, ts: u64) -> ServiceResult<RecommendationResponse> {
        if let Some(arm) = self.recommendation {
            return Ok(RecommendationResponse { recommendation: arm, view: self.view()? });
        }
        let arm = if self.terminated {
            None
        } else {
            if self.treated < self.config.max_patients {
                let remaining = self.config.max_patients - self.treated;
                return Err(ServiceError::Conflict(format!(
                    "trial in progress: {remaining} patient(s) remain"
                )));
            }
            let eligible = match self.config.design {
                Design::WeightedEntropy => eligible_arms(&self.states, self.config.safety.as_ref())?,
                Design::FixedRandomization => (0..self.config.arms).collect(),
            };
            final_recommendation(&self.states, &self.config.gamma, &eligible)
        };
        self.push(EventKind::Recommended, encode(&RecommendedPayload { arm }), ts)?;
        Ok(RecommendationResponse { recommendation: arm, view: self.view()? })
    }

    /// Current view, computed from the states (nothing cached).
    pub fn view(&self) -> ServiceResult<SessionView> {
        let cfg = &self.config;
        let safety = match cfg.design {
            Design::WeightedEntropy => cfg.safety.as_ref(),
            Design::FixedRandomization => None,
        };
        let eligible = eligible_arms(&self.states, safety)?;
        let values = criterion_values(&self.states, &self.params);
        let half = criterion_values(&self.states, &self.half);
        let probabilities: Option<Vec<f64>> = match (cfg.design, cfg.rule) {
            _ if eligible.is_empty() => None,
            (Design::FixedRandomization, _) => Some(vec![1.0 / cfg.arms as f64; cfg.arms]),
            (Design::WeightedEntropy, Rule::RuleI) => {
                let sub: Vec<f64> = eligible.iter().map(|&j| values[j]).collect();
                let mut probs = vec![0.0; cfg.arms];
                for (&j, p) in eligible.iter().zip(randomization_probabilities(&sub)?) {
                    probs[j] = p;
                }
                Some(probs)
            }
            (Design::WeightedEntropy, Rule::RuleII) => None,
        };
        let total = self.treated;
        let mut arms = Vec::with_capacity(cfg.arms);
        for (j, s) in self.states.iter().enumerate() {
            let (overdose, theta) = match safety {
                Some(sc) => {
                    let n = match sc.threshold_count {
                        ThresholdCount::PerArm => s.n(),
                        ThresholdCount::TrialWide => total,
                    };
                    (
                        Some(overdose_probability(s, sc.gamma_star, sc.toxicity_outcome)?),
                        Some(safety_threshold(n, sc)),
                    )
                }
                None => (None, None),
            };
            arms.push(ArmView {
                index: j,
                n: s.n(),
                counts: s.counts().to_vec(),
                posterior_mode: s.posterior_mode().as_slice().to_vec(),
                criterion: values[j],
                criterion_half: half[j],
                probability: probabilities.as_ref().map(|p| p[j]),
                admissible: eligible.contains(&j),
                overdose_probability: overdose,
                safety_threshold: theta,
            });
        }
        Ok(SessionView {
            id: self.id.clone(),
            seq: self.seq,
            status: self.status(),
            rule: cfg.rule,
            kappa: cfg.kappa,
            patients_treated: self.treated,
            max_patients: cfg.max_patients,
            pending_assignment: self.pending.as_ref().map(|p| p.arm),
            arms,
            next_recommendation: select_best(&values, &eligible),
            admissible: eligible,
            recommendation: self.recommendation.flatten(),
        })
    }
}
