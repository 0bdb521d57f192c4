//! Re-runs the built-in studies and lines the results up against the
//! published values in the bundled reference data.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocation::Rule;
use crate::calibration::safety_grid_search;
use crate::error::{Error, Result};
use crate::presets::{
    phase_one_config, phase_one_scenario, phase_two_config, phase_two_scenario, reference_table, PHASE_ONE_PATIENTS,
    PHASE_ONE_TARGET,
};
use crate::report::Comparison;
use crate::simulator::{
    calibrate_cutoff, kappa_sweep, run_benchmark, run_monte_carlo_with, Design, Metric, OperatingCharacteristics, SweepRow,
    TrialConfig,
};
use crate::wecore::SimplexVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Table1,
    Table2,
    Table3,
    Table4,
    Table5,
    Figure1,
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Study::Table1),
            "table2" => Ok(Study::Table2),
            "table3" => Ok(Study::Table3),
            "table4" => Ok(Study::Table4),
            "table5" => Ok(Study::Table5),
            "figure1" => Ok(Study::Figure1),
            other => Err(Error::invalid(format!(
                "unknown table `{other}` (expected table1..table5 or figure1)"
            ))),
        }
    }
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Table1 => "table1",
            Study::Table2 => "table2",
            Study::Table3 => "table3",
            Study::Table4 => "table4",
            Study::Table5 => "table5",
            Study::Figure1 => "figure1",
        }
    }
}

/// A labelled multi-arm design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTwoDesign {
    pub label: &'static str,
    pub design: Design,
    pub rule: Rule,
    pub kappa: f64,
}

const fn we(label: &'static str, rule: Rule, kappa: f64) -> PhaseTwoDesign {
    PhaseTwoDesign { label, design: Design::WeightedEntropy, rule, kappa }
}

/// Multi-arm designs compared in the efficacy tables.
pub const PHASE_TWO_DESIGNS: [PhaseTwoDesign; 4] = [
    PhaseTwoDesign { label: "FR", design: Design::FixedRandomization, rule: Rule::RuleI, kappa: 0.5 },
    we("WE_I(0.50)", Rule::RuleI, 0.5),
    we("WE_II(0.55)", Rule::RuleII, 0.55),
    we("WE_II(0.65)", Rule::RuleII, 0.65),
];

/// Looks a design up by its label.
pub fn phase_two_design(label: &str) -> Result<PhaseTwoDesign> {
    PHASE_TWO_DESIGNS
        .iter()
        .copied()
        .find(|d| d.label == label)
        .ok_or_else(|| Error::invalid(format!("unknown multi-arm design `{label}`")))
}

/// A multi-arm design run under both hypotheses with its own calibrated cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTwoRun {
    pub design: String,
    pub cutoff: f64,
    pub null: OperatingCharacteristics,
    pub alternative: OperatingCharacteristics,
}

/// Calibrates the cutoff on null replications seeded with `seed`, then
/// evaluates both hypotheses on an independent stream (`seed + 1`), so the
/// reported type-I error is not the calibration sample's own.
pub fn run_phase_two(
    trial: u8,
    design: PhaseTwoDesign,
    replications: usize,
    seed: u64,
    parallelism: Option<usize>,
) -> Result<PhaseTwoRun> {
    let mut cfg = phase_two_config(trial, design.design, design.rule, design.kappa)?;
    cfg.seed = seed;
    let h0 = phase_two_scenario(trial, false)?;
    let h1 = phase_two_scenario(trial, true)?;
    let cutoff = calibrate_cutoff(&cfg, &h0, replications, parallelism)?;
    if let Some(t) = cfg.testing.as_mut() {
        t.cutoff = cutoff;
    }
    cfg.seed = seed.wrapping_add(1);
    Ok(PhaseTwoRun {
        design: design.label.to_string(),
        cutoff,
        null: run_monte_carlo_with(&cfg, &h0, replications, parallelism)?,
        alternative: run_monte_carlo_with(&cfg, &h1, replications, parallelism)?,
    })
}

fn mean(m: Option<Metric>) -> Option<f64> {
    m.map(|m| m.mean)
}

fn phase_two_values(run: &PhaseTwoRun) -> BTreeMap<(String, String), f64> {
    let mut out = BTreeMap::new();
    let mut put = |sc: &str, metric: &str, v: Option<f64>| {
        if let Some(v) = v {
            out.insert((sc.to_string(), metric.to_string()), v);
        }
    };
    put("h0", "alpha", mean(run.null.rejection_rate));
    put("h0", "p_star", mean(run.null.p_star));
    put("h0", "ens", mean(run.null.ens));
    put("h1", "power", mean(run.alternative.rejection_rate));
    put("h1", "p_star", mean(run.alternative.p_star));
    put("h1", "ens", mean(run.alternative.ens));
    out
}

/// Dose-finding metrics in the published units: selection, termination in
/// percent; toxicities and patients per trial.
pub fn phase_one_values(oc: &OperatingCharacteristics) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (j, s) in oc.selection.iter().enumerate() {
        out.insert(format!("select_d{}", j + 1), 100.0 * s);
    }
    out.insert("term".into(), 100.0 * oc.termination_rate.mean);
    if let Some(t) = oc.mean_toxicities {
        out.insert("tox".into(), t.mean);
    }
    out.insert("mean_n".into(), oc.mean_n.mean);
    out
}

/// Selection percentages of the complete-information benchmark.
pub fn benchmark_values(scenario: usize, replications: usize, seed: u64, parallelism: Option<usize>) -> Result<BTreeMap<String, f64>> {
    let gamma = SimplexVector::binary(PHASE_ONE_TARGET)?;
    let sc = phase_one_scenario(scenario)?;
    let b = run_benchmark(&sc, &gamma, PHASE_ONE_PATIENTS, 0, replications, seed, parallelism)?;
    Ok(b.selection
        .iter()
        .enumerate()
        .map(|(j, s)| (format!("select_d{}", j + 1), 100.0 * s))
        .collect())
}

fn phase_one_config_seeded(seed: u64) -> TrialConfig {
    TrialConfig { seed, ..phase_one_config() }
}

/// Label of a safety-grid cell in the reference data.
pub fn safety_cell_label(gamma_star: f64, r: f64) -> String {
    format!("gamma_star={gamma_star:.2},r={r:.3}")
}

pub const SAFETY_GAMMA_STARS: [f64; 6] = [0.30, 0.35, 0.40, 0.45, 0.50, 0.55];
pub const SAFETY_RATES: [f64; 8] = [0.010, 0.015, 0.020, 0.025, 0.030, 0.035, 0.040, 0.045];

/// Simulated values keyed by (design, scenario, metric).
pub type Simulated = BTreeMap<(String, String, String), f64>;

/// Runs every non-external design of a table.
pub fn simulate_table(study: Study, replications: usize, seed: u64, parallelism: Option<usize>) -> Result<Simulated> {
    let mut out = Simulated::new();
    match study {
        Study::Table1 | Study::Table2 => {
            let trial = if study == Study::Table1 { 1 } else { 2 };
            for design in PHASE_TWO_DESIGNS {
                let run = run_phase_two(trial, design, replications, seed, parallelism)?;
                for ((sc, metric), v) in phase_two_values(&run) {
                    out.insert((design.label.to_string(), sc, metric), v);
                }
            }
        }
        Study::Table3 | Study::Table4 => {
            let scenarios = if study == Study::Table3 { 1..=3 } else { 4..=6 };
            let cfg = phase_one_config_seeded(seed);
            for k in scenarios {
                let sc = phase_one_scenario(k)?;
                let name = format!("scenario{k}");
                let oc = run_monte_carlo_with(&cfg, &sc, replications, parallelism)?;
                for (metric, v) in phase_one_values(&oc) {
                    out.insert(("WE".into(), name.clone(), metric), v);
                }
                for (metric, v) in benchmark_values(k, replications, seed, parallelism)? {
                    out.insert(("Optimal".into(), name.clone(), metric), v);
                }
            }
        }
        Study::Table5 => {
            let cfg = phase_one_config_seeded(seed);
            let cells = safety_grid_search(
                &SAFETY_GAMMA_STARS,
                &SAFETY_RATES,
                &phase_one_scenario(1)?,
                &phase_one_scenario(6)?,
                &cfg,
                replications,
                parallelism,
            )?;
            for c in cells {
                let label = safety_cell_label(c.gamma_star, c.r);
                out.insert(("WE".into(), label.clone(), "term_unsafe".into()), 100.0 * c.termination.mean);
                out.insert(("WE".into(), label, "pcs_linear".into()), 100.0 * c.pcs.mean);
            }
        }
        Study::Figure1 => return Err(Error::invalid("figure1 is a κ sweep; use figure_one")),
    }
    Ok(out)
}

/// Published values of `study` next to freshly simulated ones.
pub fn compare_table(study: Study, replications: usize, seed: u64, parallelism: Option<usize>) -> Result<Vec<Comparison>> {
    let simulated = simulate_table(study, replications, seed, parallelism)?;
    Ok(reference_table(study.name())
        .into_iter()
        .map(|r| {
            let key = (r.design.clone(), r.scenario.clone(), r.metric.clone());
            Comparison {
                table: r.table,
                simulated: if r.external { None } else { simulated.get(&key).copied() },
                design: r.design,
                scenario: r.scenario,
                metric: r.metric,
                published: r.value,
                tolerance: r.tolerance,
                external: r.external,
            }
        })
        .collect())
}

/// κ grid of the ENS/power trade-off figure.
pub fn figure_one_grid() -> Vec<f64> {
    (0..=10).map(|i| 0.5 + 0.025 * i as f64).collect()
}

/// ENS and power of Rule II over the κ grid for both multi-arm trials. The
/// cutoff is calibrated once per trial at the smallest κ and then held fixed.
pub fn figure_one(replications: usize, seed: u64, parallelism: Option<usize>) -> Result<Vec<(u8, Vec<SweepRow>)>> {
    let grid = figure_one_grid();
    [1u8, 2]
        .iter()
        .map(|&trial| {
            let mut cfg = phase_two_config(trial, Design::WeightedEntropy, Rule::RuleII, grid[0])?;
            cfg.seed = seed;
            let cutoff = calibrate_cutoff(&cfg, &phase_two_scenario(trial, false)?, replications, parallelism)?;
            if let Some(t) = cfg.testing.as_mut() {
                t.cutoff = cutoff;
            }
            cfg.seed = seed.wrapping_add(1);
            let rows = kappa_sweep(&cfg, &phase_two_scenario(trial, true)?, &grid, replications, parallelism)?;
            Ok((trial, rows))
        })
        .collect()
}
