//! `wedesign`: batch simulation, table reproduction, calibration and the
//! conduct service.
//!
//! Exit codes: 0 on success, 1 for unreadable or unparsable input, 2 when
//! the input parses but violates a design invariant.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use wedesign::calibration::{prior_grid_search, safety_grid_csv, safety_grid_search, PriorGrid};
use wedesign::presets::{phase_one_config, phase_one_scenario, prior_calibration_scenarios};
use wedesign::report::{comparison_csv, results_csv, results_json, sweep_csv, ResultRow};
use wedesign::reproduce::{compare_table, figure_one, Study, SAFETY_GAMMA_STARS, SAFETY_RATES};
use wedesign::simulator::calibrate_cutoff;
use wedesign::simulator::montecarlo::run_monte_carlo_with;
use wedesign::{Design, Rule, Scenario, TrialConfig};
use wedesign_conduct::{AppState, Store};

/// Seed used by `reproduce` and the calibrations when none is given.
const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "wedesign", version, about = "Weighted-entropy adaptive trial designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo operating characteristics of a design on one or more scenarios.
    Simulate(SimulateArgs),
    /// Re-run a published table or figure next to its reference values.
    Reproduce(ReproduceArgs),
    /// Grid search over prior concentration and mode spread.
    CalibratePrior(CalibratePriorArgs),
    /// Grid search over the safety constraint (γ*, r).
    CalibrateSafety(CalibrateSafetyArgs),
    /// Cutoff that holds the type-I error at the configured target.
    CalibrateCutoff(CalibrateCutoffArgs),
    /// Serve the trial conduct HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Monte Carlo replications.
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    /// Master seed; overrides the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (all cores by default). Results do not depend on it.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Debug, Args)]
struct DesignOverrides {
    /// Design configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Penalty exponent κ; overrides the configuration file.
    #[arg(long)]
    kappa: Option<f64>,
    /// Allocation rule (I or II); overrides the configuration file.
    #[arg(long, value_parser = parse_rule)]
    rule: Option<Rule>,
    /// Allow κ < 0.5.
    #[arg(long)]
    experimental_kappa_below_half: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    design: DesignOverrides,
    /// Scenario file (JSON); repeat for several scenarios.
    #[arg(long, required = true)]
    scenario: Vec<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// table1 .. table5 or figure1.
    #[arg(value_parser = parse_study)]
    table: Study,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct CalibratePriorArgs {
    #[command(flatten)]
    design: DesignOverrides,
    /// Prior concentrations β.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    betas: Vec<f64>,
    /// Spreads between the lowest and highest prior modes.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.3, 0.4])]
    steps: Vec<f64>,
    /// Prior mode of the lowest arm.
    #[arg(long, default_value_t = 0.25)]
    base_mode: f64,
    /// Scenario files; the built-in calibration suite when omitted.
    #[arg(long)]
    scenario: Vec<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct CalibrateSafetyArgs {
    #[command(flatten)]
    design: DesignOverrides,
    #[arg(long, value_delimiter = ',', default_values_t = SAFETY_GAMMA_STARS)]
    gamma_stars: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = SAFETY_RATES)]
    rates: Vec<f64>,
    /// Scenario with a safe target arm (dose-finding scenario 1 by default).
    #[arg(long)]
    linear_scenario: Option<PathBuf>,
    /// Scenario without a safe arm (dose-finding scenario 6 by default).
    #[arg(long)]
    unsafe_scenario: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct CalibrateCutoffArgs {
    #[command(flatten)]
    design: DesignOverrides,
    /// Null-hypothesis scenario (JSON).
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    /// Directory for session event logs; in-memory when omitted.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Require `Authorization: Bearer <token>` on every request.
    #[arg(long)]
    token: Option<String>,
}

fn parse_rule(s: &str) -> std::result::Result<Rule, String> {
    s.parse().map_err(|e: wedesign::Error| e.to_string())
}

fn parse_study(s: &str) -> std::result::Result<Study, String> {
    s.parse().map_err(|e: wedesign::Error| e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl DesignOverrides {
    /// The configuration file (or `fallback`) with command-line overrides applied.
    fn resolve(&self, fallback: Option<fn() -> TrialConfig>, seed: Option<u64>) -> Result<TrialConfig> {
        let mut cfg = match (&self.config, fallback) {
            (Some(path), _) => read_json(path)?,
            (None, Some(f)) => f(),
            (None, None) => bail!("--config is required"),
        };
        if let Some(k) = self.kappa {
            cfg.kappa = k;
        }
        if let Some(r) = self.rule {
            cfg.rule = r;
        }
        if self.experimental_kappa_below_half {
            cfg.experimental_kappa_below_half = true;
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.criterion_params()?;
        Ok(cfg)
    }
}

fn design_label(cfg: &TrialConfig) -> &'static str {
    match (cfg.design, cfg.rule) {
        (Design::FixedRandomization, _) => "FR",
        (Design::WeightedEntropy, Rule::RuleI) => "WE_I",
        (Design::WeightedEntropy, Rule::RuleII) => "WE_II",
    }
}

/// Writes `csv` (and `json`) under `out`, or prints the CSV.
fn emit(out: Option<&Path>, stem: &str, csv: &str, json: Option<&str>) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join(format!("{stem}.csv")), csv)?;
            if let Some(j) = json {
                fs::write(dir.join(format!("{stem}.json")), j)?;
            }
            eprintln!("wrote {}", dir.join(format!("{stem}.csv")).display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = args.design.resolve(None, args.run.seed)?;
    let mut rows = Vec::new();
    for path in &args.scenario {
        let scenario: Scenario = read_json(path)?;
        let oc = run_monte_carlo_with(&cfg, &scenario, args.run.reps, args.run.parallelism)?;
        rows.push(ResultRow {
            design: design_label(&cfg).to_string(),
            scenario: scenario.name.clone(),
            kappa: cfg.kappa,
            characteristics: oc,
        });
    }
    emit(args.run.out.as_deref(), "results", &results_csv(&rows)?, Some(&results_json(&rows)?))
}

fn reproduce(args: &ReproduceArgs) -> Result<()> {
    let seed = args.run.seed.unwrap_or(DEFAULT_SEED);
    let out = args.run.out.as_deref();
    if args.table == Study::Figure1 {
        let series: Vec<(String, _)> = figure_one(args.run.reps, seed, args.run.parallelism)?
            .into_iter()
            .map(|(trial, rows)| (format!("trial{trial}"), rows))
            .collect();
        return emit(out, "figure1", &sweep_csv(&series)?, Some(&to_json(&series)?));
    }
    let rows = compare_table(args.table, args.run.reps, seed, args.run.parallelism)?;
    let outside = rows.iter().filter(|c| c.within_tolerance() == Some(false)).count();
    emit(out, args.table.name(), &comparison_csv(&rows)?, Some(&to_json(&rows)?))?;
    eprintln!("{}: {} rows, {outside} outside tolerance", args.table.name(), rows.len());
    Ok(())
}

fn calibrate_prior(args: &CalibratePriorArgs) -> Result<()> {
    let template = args.design.resolve(Some(phase_one_config), Some(args.run.seed.unwrap_or(DEFAULT_SEED)))?;
    let scenarios = if args.scenario.is_empty() {
        prior_calibration_scenarios()
    } else {
        args.scenario.iter().map(|p| read_json(p)).collect::<Result<Vec<Scenario>>>()?
    };
    let grid = PriorGrid {
        beta_values: args.betas.clone(),
        step_values: args.steps.clone(),
        base_mode: args.base_mode,
    };
    let res = prior_grid_search(&grid, &scenarios, &template, args.run.reps, args.run.parallelism)?;
    if let Some(best) = res.best.map(|i| &res.cells[i]) {
        eprintln!("best prior: beta={} step={} (plateau of {} cells)", best.beta, best.step, res.plateau.len());
    }
    emit(args.run.out.as_deref(), "prior_calibration", &res.to_csv(&grid)?, Some(&to_json(&res)?))
}

fn calibrate_safety(args: &CalibrateSafetyArgs) -> Result<()> {
    let cfg = args.design.resolve(Some(phase_one_config), Some(args.run.seed.unwrap_or(DEFAULT_SEED)))?;
    let linear = match &args.linear_scenario {
        Some(p) => read_json(p)?,
        None => phase_one_scenario(1)?,
    };
    let unsafe_scenario = match &args.unsafe_scenario {
        Some(p) => read_json(p)?,
        None => phase_one_scenario(6)?,
    };
    let cells = safety_grid_search(
        &args.gamma_stars,
        &args.rates,
        &linear,
        &unsafe_scenario,
        &cfg,
        args.run.reps,
        args.run.parallelism,
    )?;
    emit(args.run.out.as_deref(), "safety_calibration", &safety_grid_csv(&cells)?, Some(&to_json(&cells)?))
}

fn calibrate_cutoff_cmd(args: &CalibrateCutoffArgs) -> Result<()> {
    let cfg = args.design.resolve(None, args.run.seed)?;
    let null: Scenario = read_json(&args.scenario)?;
    let cutoff = calibrate_cutoff(&cfg, &null, args.run.reps, args.run.parallelism)?;
    let report = json!({
        "cutoff": cutoff,
        "alpha_target": cfg.testing.as_ref().map(|t| t.alpha_target),
        "replications": args.run.reps,
        "seed": cfg.seed,
    });
    let csv = format!("cutoff,replications,seed\n{cutoff},{},{}\n", args.run.reps, cfg.seed);
    emit(args.run.out.as_deref(), "cutoff", &csv, Some(&serde_json::to_string_pretty(&report)?))
}

fn serve(args: &ServeArgs) -> Result<()> {
    let store = match &args.data_dir {
        Some(dir) => Store::open(dir).with_context(|| format!("opening {}", dir.display()))?,
        None => Store::in_memory(),
    };
    let state = AppState { store: Arc::new(store), token: args.token.clone() };
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("listening on {}", args.addr);
    runtime.block_on(wedesign_conduct::serve(&args.addr, state))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Reproduce(a) => reproduce(a),
        Command::CalibratePrior(a) => calibrate_prior(a),
        Command::CalibrateSafety(a) => calibrate_safety(a),
        Command::CalibrateCutoff(a) => calibrate_cutoff_cmd(a),
        Command::Serve(a) => serve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Inputs that parse but break a design invariant.
            let invariant = e.chain().any(|c| c.is::<wedesign::Error>());
            ExitCode::from(if invariant { 2 } else { 1 })
        }
    }
}
