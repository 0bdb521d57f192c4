//! Trial simulation, Monte Carlo evaluation and hypothesis testing.

pub mod config;
pub mod montecarlo;
pub mod scenario;
pub mod testing;
pub mod trial;

pub use config::{Design, HypothesisTestConfig, PriorSpec, TrialConfig};
pub use montecarlo::{
    aggregate, calibrate_cutoff, kappa_sweep, parallel_map, run_benchmark, run_monte_carlo, run_monte_carlo_with,
    simulate_replications, BenchmarkCharacteristics, Metric, OperatingCharacteristics, ReplicationSummary, SweepRow,
};
pub use scenario::Scenario;
pub use testing::{cutoff_from_null, evaluate_hypotheses, fisher_exact_pvalue, min_pvalue, rejects};
pub use trial::{benchmark_trial, fixed_randomization_trial, run_trial, stream_seed, TrialRecord};
