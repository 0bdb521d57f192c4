//! Grid searches for the operational prior and the safety constraint.

use serde::{Deserialize, Serialize};

use crate::allocation::SafetyConfig;
use crate::error::{Error, Result};
use crate::presets::{linear_prior_modes, toxicity_priors};
use crate::simulator::{run_monte_carlo_with, Metric, Scenario, TrialConfig};

/// Prior concentrations β and mode spreads to search over. Modes rise
/// linearly from `base_mode` to `base_mode + step` across the arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorGrid {
    pub beta_values: Vec<f64>,
    pub step_values: Vec<f64>,
    pub base_mode: f64,
}

/// One (β, step) cell of a prior search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorCell {
    pub beta: f64,
    pub step: f64,
    /// PCS per scenario, or `None` when the modes leave (0, 1).
    pub pcs: Option<Vec<Metric>>,
    pub geometric_mean: Option<f64>,
    /// Delta-method standard error of the geometric mean.
    pub geometric_mean_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub cells: Vec<PriorCell>,
    /// Index into `cells` of the largest geometric mean (smallest β on ties).
    pub best: Option<usize>,
    /// Cells whose geometric mean is within two standard errors of the best.
    pub plateau: Vec<usize>,
}

impl CalibrationResult {
    pub fn cell(&self, beta: f64, step: f64) -> Option<&PriorCell> {
        self.cells
            .iter()
            .find(|c| (c.beta - beta).abs() < 1e-12 && (c.step - step).abs() < 1e-12)
    }

    /// Heatmap of geometric means: one row per β, one column per step.
    pub fn to_csv(&self, grid: &PriorGrid) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["beta".to_string()];
        header.extend(grid.step_values.iter().map(|s| format!("step={s}")));
        w.write_record(&header).map_err(csv_error)?;
        for &beta in &grid.beta_values {
            let mut row = vec![beta.to_string()];
            for &step in &grid.step_values {
                let v = self.cell(beta, step).and_then(|c| c.geometric_mean);
                row.push(v.map_or_else(String::new, |g| format!("{g:.6}")));
            }
            w.write_record(&row).map_err(csv_error)?;
        }
        finish_csv(w)
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(format!("csv: {e}")))
}

/// Geometric mean of positive values; zero if any value is zero.
pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

/// Runs `template` with each grid prior on every scenario and scores cells
/// by the geometric mean of their PCS values. All cells share the
/// template's seed so that cells are compared on common random numbers.
pub fn prior_grid_search(
    grid: &PriorGrid,
    scenarios: &[Scenario],
    template: &TrialConfig,
    replications: usize,
    parallelism: Option<usize>,
) -> Result<CalibrationResult> {
    if scenarios.is_empty() {
        return Err(Error::invalid("prior search needs at least one scenario"));
    }
    if scenarios.iter().any(|s| s.target_index.is_none() && !s.no_safe_arm) {
        return Err(Error::invalid("prior search scenarios need a target arm or no safe arm"));
    }
    let mut cells = Vec::new();
    for &beta in &grid.beta_values {
        for &step in &grid.step_values {
            let modes = linear_prior_modes(grid.base_mode, step, template.arms);
            if beta <= 0.0 || modes.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
                cells.push(PriorCell { beta, step, pcs: None, geometric_mean: None, geometric_mean_se: None });
                continue;
            }
            let config = TrialConfig {
                priors: toxicity_priors(&modes, beta)?,
                ..template.clone()
            };
            let pcs = scenarios
                .iter()
                .map(|s| {
                    let oc = run_monte_carlo_with(&config, s, replications, parallelism)?;
                    Ok(oc.pcs.expect("scenario has a target or no safe arm"))
                })
                .collect::<Result<Vec<Metric>>>()?;
            let means: Vec<f64> = pcs.iter().map(|m| m.mean).collect();
            let gm = geometric_mean(&means);
            let rel: f64 = pcs
                .iter()
                .map(|m| if m.mean > 0.0 { (m.se / m.mean).powi(2) } else { 0.0 })
                .sum();
            let se = gm * rel.sqrt() / pcs.len() as f64;
            cells.push(PriorCell {
                beta,
                step,
                pcs: Some(pcs),
                geometric_mean: Some(gm),
                geometric_mean_se: Some(se),
            });
        }
    }
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        let Some(g) = c.geometric_mean else { continue };
        match best.map(|b| (cells[b].geometric_mean.unwrap(), cells[b].beta)) {
            Some((bg, bb)) if g < bg || (g == bg && c.beta >= bb) => {}
            _ => best = Some(i),
        }
    }
    let plateau = match best {
        Some(b) => {
            let top = cells[b].geometric_mean.unwrap();
            cells
                .iter()
                .enumerate()
                .filter(|(_, c)| {
                    matches!((c.geometric_mean, c.geometric_mean_se),
                        (Some(g), Some(se)) if top - g <= 2.0 * (se * se + cells[b].geometric_mean_se.unwrap().powi(2)).sqrt())
                })
                .map(|(i, _)| i)
                .collect()
        }
        None => Vec::new(),
    };
    Ok(CalibrationResult { cells, best, plateau })
}

/// One (γ*, r) cell of a safety search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyCell {
    pub gamma_star: f64,
    pub r: f64,
    /// Termination rate in the scenario without a safe arm.
    pub termination: Metric,
    /// PCS in the scenario with a safe target.
    pub pcs: Metric,
}

/// Termination in `unsafe_scenario` and PCS in `linear_scenario` for every
/// (γ*, r) pair. `config` must carry a safety section; only γ* and r are
/// replaced.
pub fn safety_grid_search(
    gamma_star_values: &[f64],
    r_values: &[f64],
    linear_scenario: &Scenario,
    unsafe_scenario: &Scenario,
    config: &TrialConfig,
    replications: usize,
    parallelism: Option<usize>,
) -> Result<Vec<SafetyCell>> {
    let base = config
        .safety
        .clone()
        .ok_or_else(|| Error::config("safety", "safety search needs a safety section"))?;
    if linear_scenario.target_index.is_none() {
        return Err(Error::invalid("linear scenario needs a target arm"));
    }
    let mut out = Vec::with_capacity(gamma_star_values.len() * r_values.len());
    for &gamma_star in gamma_star_values {
        for &r in r_values {
            let cfg = TrialConfig {
                safety: Some(SafetyConfig { gamma_star, r, ..base.clone() }),
                ..config.clone()
            };
            let unsafe_oc = run_monte_carlo_with(&cfg, unsafe_scenario, replications, parallelism)?;
            let linear_oc = run_monte_carlo_with(&cfg, linear_scenario, replications, parallelism)?;
            out.push(SafetyCell {
                gamma_star,
                r,
                termination: unsafe_oc.termination_rate,
                pcs: linear_oc.pcs.expect("linear scenario has a target"),
            });
        }
    }
    Ok(out)
}

/// Safety search results, one row per (γ*, r).
pub fn safety_grid_csv(cells: &[SafetyCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["gamma_star", "r", "termination", "termination_se", "pcs", "pcs_se"])
        .map_err(csv_error)?;
    for c in cells {
        w.write_record([
            c.gamma_star.to_string(),
            c.r.to_string(),
            format!("{:.6}", c.termination.mean),
            format!("{:.6}", c.termination.se),
            format!("{:.6}", c.pcs.mean),
            format!("{:.6}", c.pcs.se),
        ])
        .map_err(csv_error)?;
    }
    finish_csv(w)
}
