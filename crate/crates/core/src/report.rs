//! CSV and JSON output of operating characteristics.

use serde::{Deserialize, Serialize};

use crate::calibration::{csv_error, finish_csv};
use crate::error::{Error, Result};
use crate::simulator::{Metric, OperatingCharacteristics, SweepRow};

/// One labelled result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub design: String,
    pub scenario: String,
    pub kappa: f64,
    pub characteristics: OperatingCharacteristics,
}

const METRICS: [&str; 7] = ["pcs", "ens", "p_star", "tox", "term", "mean_n", "power"];

fn metric_of<'a>(oc: &'a OperatingCharacteristics, name: &str) -> Option<&'a Metric> {
    match name {
        "pcs" => oc.pcs.as_ref(),
        "ens" => oc.ens.as_ref(),
        "p_star" => oc.p_star.as_ref(),
        "tox" => oc.mean_toxicities.as_ref(),
        "term" => Some(&oc.termination_rate),
        "mean_n" => Some(&oc.mean_n),
        "power" => oc.rejection_rate.as_ref(),
        _ => None,
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// CSV with one row per result: each metric followed by its standard error
/// and across-replication standard deviation, then per-arm selection rates.
/// Missing metrics are empty cells.
pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    let arms = rows.iter().map(|r| r.characteristics.selection.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["design".into(), "scenario".into(), "kappa".into(), "replications".into()];
    for m in METRICS {
        header.push(m.to_string());
        header.push(format!("{m}_se"));
        header.push(format!("{m}_sd"));
    }
    header.extend((1..=arms).map(|j| format!("select_arm{j}")));
    w.write_record(&header).map_err(csv_error)?;
    for r in rows {
        let oc = &r.characteristics;
        let mut rec = vec![r.design.clone(), r.scenario.clone(), r.kappa.to_string(), oc.replications.to_string()];
        for m in METRICS {
            match metric_of(oc, m) {
                Some(x) => rec.extend([fmt(x.mean), fmt(x.se), fmt(x.sd)]),
                None => rec.extend([String::new(), String::new(), String::new()]),
            }
        }
        for j in 0..arms {
            rec.push(oc.selection.get(j).map_or_else(String::new, |&v| fmt(v)));
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    finish_csv(w)
}

/// JSON mirror of [`results_csv`].
pub fn results_json(rows: &[ResultRow]) -> Result<String> {
    serde_json::to_string_pretty(rows).map_err(|e| Error::invalid(format!("json: {e}")))
}

/// A simulated value next to its published counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub table: String,
    pub design: String,
    pub scenario: String,
    pub metric: String,
    pub published: f64,
    pub simulated: Option<f64>,
    pub tolerance: f64,
    pub external: bool,
}

impl Comparison {
    pub fn difference(&self) -> Option<f64> {
        self.simulated.map(|s| (s - self.published).abs())
    }

    pub fn within_tolerance(&self) -> Option<bool> {
        self.difference().map(|d| d <= self.tolerance)
    }
}

/// Side-by-side CSV: published, simulated, |difference|, tolerance, flag.
/// External rows carry the published value only.
pub fn comparison_csv(rows: &[Comparison]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "table", "design", "scenario", "metric", "published", "simulated", "abs_diff", "tolerance", "status",
    ])
    .map_err(csv_error)?;
    for c in rows {
        let status = if c.external {
            "external"
        } else {
            match c.within_tolerance() {
                Some(true) => "ok",
                Some(false) => "outside",
                None => "missing",
            }
        };
        w.write_record([
            c.table.clone(),
            c.design.clone(),
            c.scenario.clone(),
            c.metric.clone(),
            c.published.to_string(),
            c.simulated.map_or_else(String::new, fmt),
            c.difference().map_or_else(String::new, fmt),
            c.tolerance.to_string(),
            status.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish_csv(w)
}

/// κ sweep as CSV: one row per (series, κ) with ENS and power and their
/// standard errors.
pub fn sweep_csv(series: &[(String, Vec<SweepRow>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "kappa", "ens", "ens_se", "power", "power_se"]).map_err(csv_error)?;
    let cells = |m: Option<Metric>| match m {
        Some(m) => [fmt(m.mean), fmt(m.se)],
        None => [String::new(), String::new()],
    };
    for (name, rows) in series {
        for r in rows {
            let mut rec = vec![name.clone(), r.kappa.to_string()];
            rec.extend(cells(r.ens));
            rec.extend(cells(r.power));
            w.write_record(&rec).map_err(csv_error)?;
        }
    }
    finish_csv(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oc() -> OperatingCharacteristics {
        let m = Metric { mean: 0.5, sd: 0.5, se: 0.005 };
        OperatingCharacteristics {
            replications: 10_000,
            pcs: Some(m),
            ens: None,
            p_star: Some(m),
            mean_toxicities: Some(m),
            termination_rate: m,
            mean_n: m,
            rejection_rate: None,
            selection: vec![0.25, 0.75],
        }
    }

    #[test]
    fn csv_has_se_and_sd_columns() {
        let rows = vec![ResultRow { design: "WE, rule II".into(), scenario: "s1".into(), kappa: 0.5, characteristics: oc() }];
        let csv = results_csv(&rows).unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.contains("pcs,pcs_se,pcs_sd,ens,ens_se,ens_sd"));
        assert!(header.ends_with("select_arm1,select_arm2"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("\"WE, rule II\",s1,0.5,10000,0.500000,0.005000,0.500000,,,"));
        let back: Vec<ResultRow> = serde_json::from_str(&results_json(&rows).unwrap()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn comparison_flags() {
        let c = Comparison {
            table: "table2".into(),
            design: "FR".into(),
            scenario: "h1".into(),
            metric: "power".into(),
            published: 0.5,
            simulated: Some(0.53),
            tolerance: 0.05,
            external: false,
        };
        assert_eq!(c.within_tolerance(), Some(true));
        let csv = comparison_csv(&[c]).unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(",ok"));
    }
}
