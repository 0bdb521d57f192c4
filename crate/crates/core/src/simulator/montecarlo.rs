//! Replicated trials and operating-characteristic aggregation.
//!
//! Replication `r` always runs on the stream seeded by
//! `stream_seed(config.seed, r)` and results are reduced in replication
//! order, so the output does not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{HypothesisTestConfig, TrialConfig};
use super::scenario::Scenario;
use super::testing::{cutoff_from_null, min_pvalue, rejects};
use super::trial::{benchmark_with_rng, stream_seed, PreparedTrial, TrialRecord};
use crate::error::{Error, Result};
use crate::wecore::SimplexVector;

/// Mean of a per-replication quantity with its across-replication standard
/// deviation and the standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

impl Metric {
    pub fn from_values(values: &[f64]) -> Metric {
        let n = values.len();
        if n == 0 {
            return Metric { mean: f64::NAN, sd: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Metric { mean, sd, se: sd / (n as f64).sqrt() }
    }
}

/// Metrics aggregated over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    pub replications: usize,
    /// Proportion of trials selecting the scenario's target arm.
    pub pcs: Option<Metric>,
    /// Successes per trial.
    pub ens: Option<Metric>,
    /// Proportion of a trial's patients treated on the target arm.
    pub p_star: Option<Metric>,
    pub mean_toxicities: Option<Metric>,
    pub termination_rate: Metric,
    pub mean_n: Metric,
    /// Power or type-I error, when hypothesis testing is configured.
    pub rejection_rate: Option<Metric>,
    /// Proportion of trials recommending each arm.
    pub selection: Vec<f64>,
}

/// Per-replication quantities kept for aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary {
    pub recommendation: Option<usize>,
    pub terminated: bool,
    pub patients: usize,
    pub successes: Option<usize>,
    pub toxicities: Option<usize>,
    pub on_target: Option<usize>,
    pub min_pvalue: Option<f64>,
    pub per_arm: Vec<u64>,
}

impl ReplicationSummary {
    fn from_record(rec: &TrialRecord, config: &TrialConfig, scenario: &Scenario) -> Self {
        let min_p = match (&config.testing, config.success_outcome) {
            (Some(t), Some(s)) => Some(min_pvalue(rec, t, s)),
            _ => None,
        };
        ReplicationSummary {
            recommendation: rec.recommendation,
            terminated: rec.terminated,
            patients: rec.patients(),
            successes: config.success_outcome.map(|s| rec.outcome_count(s)),
            toxicities: config.toxicity_category().map(|t| rec.outcome_count(t)),
            on_target: scenario.target_index.map(|t| rec.allocated_to(t)),
            min_pvalue: min_p,
            per_arm: rec.per_arm_counts.iter().map(|s| s.n()).collect(),
        }
    }
}

/// Runs `f(0..replications)` on `parallelism` threads (rayon's global pool
/// when `None`), returning results in index order.
pub fn parallel_map<T, F>(replications: usize, parallelism: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let run = || (0..replications).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match parallelism {
        None => run(),
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run),
    }
}

/// Simulates `replications` trials and keeps their summaries.
pub fn simulate_replications(
    config: &TrialConfig,
    scenario: &Scenario,
    replications: usize,
    parallelism: Option<usize>,
) -> Result<Vec<ReplicationSummary>> {
    if replications == 0 {
        return Err(Error::invalid("replications must be at least 1"));
    }
    let prepared = PreparedTrial::new(config, scenario)?;
    parallel_map(replications, parallelism, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, r as u64));
        let rec = prepared.run(&mut rng)?;
        Ok(ReplicationSummary::from_record(&rec, config, scenario))
    })
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Aggregates summaries into operating characteristics.
pub fn aggregate(
    summaries: &[ReplicationSummary],
    config: &TrialConfig,
    scenario: &Scenario,
) -> OperatingCharacteristics {
    let m = config.arms;
    let n = summaries.len();
    let collect = |f: &dyn Fn(&ReplicationSummary) -> Option<f64>| -> Option<Metric> {
        let v: Option<Vec<f64>> = summaries.iter().map(f).collect();
        v.map(|v| Metric::from_values(&v))
    };
    let pcs = if scenario.target_index.is_some() || scenario.no_safe_arm {
        collect(&|s| {
            Some(indicator(match (s.recommendation, scenario.target_index) {
                (None, _) => scenario.no_safe_arm,
                (Some(r), Some(t)) => r == t,
                (Some(_), None) => false,
            }))
        })
    } else {
        None
    };
    let mut selection = vec![0.0; m];
    for s in summaries {
        if let Some(r) = s.recommendation {
            selection[r] += 1.0;
        }
    }
    selection.iter_mut().for_each(|x| *x /= n as f64);
    let cutoff_rejects = |s: &ReplicationSummary, t: &HypothesisTestConfig| {
        s.min_pvalue.map(|p| indicator(rejects(p, t.cutoff, m - 1)))
    };
    OperatingCharacteristics {
        replications: n,
        pcs,
        ens: collect(&|s| s.successes.map(|x| x as f64)),
        p_star: collect(&|s| s.on_target.map(|t| if s.patients == 0 { 0.0 } else { t as f64 / s.patients as f64 })),
        mean_toxicities: collect(&|s| s.toxicities.map(|x| x as f64)),
        termination_rate: Metric::from_values(&summaries.iter().map(|s| indicator(s.terminated)).collect::<Vec<_>>()),
        mean_n: Metric::from_values(&summaries.iter().map(|s| s.patients as f64).collect::<Vec<_>>()),
        rejection_rate: config.testing.as_ref().and_then(|t| collect(&|s| cutoff_rejects(s, t))),
        selection,
    }
}

/// Operating characteristics over `replications` trials.
pub fn run_monte_carlo(config: &TrialConfig, scenario: &Scenario, replications: usize) -> Result<OperatingCharacteristics> {
    run_monte_carlo_with(config, scenario, replications, None)
}

/// [`run_monte_carlo`] on an explicit number of threads.
pub fn run_monte_carlo_with(
    config: &TrialConfig,
    scenario: &Scenario,
    replications: usize,
    parallelism: Option<usize>,
) -> Result<OperatingCharacteristics> {
    let summaries = simulate_replications(config, scenario, replications, parallelism)?;
    Ok(aggregate(&summaries, config, scenario))
}

/// Calibrates the family-level cutoff so that the design rejects under
/// `null_scenario` at rate `alpha_target` (at most).
pub fn calibrate_cutoff(
    config: &TrialConfig,
    null_scenario: &Scenario,
    replications: usize,
    parallelism: Option<usize>,
) -> Result<f64> {
    let test = config
        .testing
        .as_ref()
        .ok_or_else(|| Error::config("testing", "cutoff calibration needs a testing section"))?;
    if test.alpha_target <= 0.0 {
        return Ok(0.0);
    }
    let summaries = simulate_replications(config, null_scenario, replications, parallelism)?;
    let ps: Vec<f64> = summaries.iter().filter_map(|s| s.min_pvalue).collect();
    Ok(cutoff_from_null(&ps, test.alpha_target, config.arms - 1))
}

/// One row of a κ sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub ens: Option<Metric>,
    pub power: Option<Metric>,
    pub characteristics: OperatingCharacteristics,
}

/// Runs the design at every κ of `kappa_grid` with the configured
/// (fixed) cutoff.
pub fn kappa_sweep(
    config: &TrialConfig,
    scenario: &Scenario,
    kappa_grid: &[f64],
    replications: usize,
    parallelism: Option<usize>,
) -> Result<Vec<SweepRow>> {
    kappa_grid
        .iter()
        .map(|&kappa| {
            let cfg = TrialConfig { kappa, ..config.clone() };
            let oc = run_monte_carlo_with(&cfg, scenario, replications, parallelism)?;
            Ok(SweepRow {
                kappa,
                ens: oc.ens,
                power: oc.rejection_rate,
                characteristics: oc,
            })
        })
        .collect()
}

/// Selection proportions of the complete-information benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCharacteristics {
    pub replications: usize,
    pub pcs: Option<Metric>,
    pub selection: Vec<f64>,
}

pub fn run_benchmark(
    scenario: &Scenario,
    gamma: &SimplexVector,
    patients: u64,
    event_category: usize,
    replications: usize,
    seed: u64,
    parallelism: Option<usize>,
) -> Result<BenchmarkCharacteristics> {
    if replications == 0 {
        return Err(Error::invalid("replications must be at least 1"));
    }
    scenario.validate(gamma)?;
    let picks = parallel_map(replications, parallelism, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, r as u64));
        benchmark_with_rng(scenario, gamma, patients, event_category, &mut rng)
    })?;
    let mut selection = vec![0.0; scenario.arms()];
    for &p in &picks {
        selection[p] += 1.0 / replications as f64;
    }
    let pcs = scenario.target_index.map(|t| {
        Metric::from_values(&picks.iter().map(|&p| indicator(p == t)).collect::<Vec<_>>())
    });
    Ok(BenchmarkCharacteristics {
        replications,
        pcs,
        selection,
    })
}
