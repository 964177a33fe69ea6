//! The `run`, `sweep`, `check` and `plot` subcommands. Each returns the
//! process exit code; diagnostics go to stderr.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use ksgd_core::domain::integrate;
use ksgd_core::experiments::{run_scenario, sweep, sweep_detailed, Scenario, SweepSpec};
use ksgd_core::model::{
    gamma_admissible, gamma_threshold, validate_assumptions, EstimateConstants,
};
use ksgd_core::{RunOutcome, RunStatus};
use thiserror::Error;

use crate::config::{ConfigError, ConfigFile, RunConfig};
use crate::output;
use crate::plot::{plot_csv, PlotError};
use crate::snapshot::{Snapshot, SnapshotError};

/// Stable exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const BLOW_UP: i32 = 2;
    pub const FAILURE: i32 = 3;
    pub const HYPOTHESIS: i32 = 4;
}

/// Environment variable overriding every noise seed of a scenario.
pub const SEED_ENV: &str = "KSGD_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{SEED_ENV} must be an unsigned integer, got `{0}`")]
    BadSeed(String),
    #[error("{0}")]
    Sweep(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::BadSeed(_) | CliError::Sweep(_) => exit::CONFIG,
            _ => exit::FAILURE,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Worker threads for sweeps; `None` uses the config value or the
    /// machine's parallelism.
    pub threads: Option<usize>,
    /// Keep per-run outputs of a sweep in `run_NNNN/` subdirectories.
    pub dense: bool,
    /// Seed override (normally from `KSGD_SEED`).
    pub seed: Option<u64>,
}

impl Options {
    /// Reads the seed override from the environment.
    pub fn with_env_seed(mut self) -> Result<Self, CliError> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            let seed = raw
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::BadSeed(raw.clone()))?;
            self.seed = Some(seed);
        }
        Ok(self)
    }
}

fn report(result: Result<i32, CliError>) -> i32 {
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

fn load(config: &Path, opts: &Options) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_file(&ConfigFile::load(config)?)?;
    if let Some(seed) = opts.seed {
        cfg.scenario.reseed(seed);
    }
    Ok(cfg)
}

fn constants_for(scenario: &Scenario, outcome: &RunOutcome) -> Option<EstimateConstants> {
    let u0_mass = outcome.series.records.first()?.mass;
    EstimateConstants::derive(
        &scenario.params,
        scenario.grid.dim(),
        u0_mass,
        scenario.grid.measure(),
    )
    .ok()
}

fn write_run_outputs(dir: &Path, scenario: &Scenario, outcome: &RunOutcome) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    output::write_series(BufWriter::new(File::create(dir.join("series.csv"))?), &outcome.series)?;
    Snapshot::from_state(&outcome.final_state).write(&dir.join("final.snap"))?;
    let constants = constants_for(scenario, outcome);
    fs::write(
        dir.join("outcome.txt"),
        output::outcome_text(outcome, constants.as_ref()),
    )?;
    Ok(())
}

pub fn status_exit_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Completed => exit::OK,
        RunStatus::BlowUpDetected(_) => exit::BLOW_UP,
        _ => exit::FAILURE,
    }
}

/// Runs one scenario and writes `series.csv`, `final.snap` and `outcome.txt`.
pub fn cmd_run(config: &Path, out_dir: &Path, opts: &Options) -> i32 {
    report(run_inner(config, out_dir, opts))
}

fn run_inner(config: &Path, out_dir: &Path, opts: &Options) -> Result<i32, CliError> {
    let cfg = load(config, opts)?;
    let outcome = run_scenario(&cfg.scenario).map_err(|e| CliError::Run(e.to_string()))?;
    write_run_outputs(out_dir, &cfg.scenario, &outcome)?;
    eprintln!("{}", output::status_line(&outcome));
    Ok(status_exit_code(outcome.status))
}

fn thread_count(opts: &Options, cfg: &RunConfig) -> usize {
    opts.threads
        .or(cfg.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the configured sweep and writes `sweep.csv` (plus
/// `gamma_c_matrix.csv` when both γ and c are swept). Failed rows are data,
/// not errors.
pub fn cmd_sweep(config: &Path, out_dir: &Path, opts: &Options) -> i32 {
    report(sweep_inner(config, out_dir, opts))
}

fn sweep_inner(config: &Path, out_dir: &Path, opts: &Options) -> Result<i32, CliError> {
    let cfg = load(config, opts)?;
    let spec = SweepSpec {
        base: cfg.scenario.clone(),
        axes: cfg.axes.clone(),
        max_parallel: thread_count(opts, &cfg),
        max_combinations: cfg.max_combinations,
    };
    fs::create_dir_all(out_dir)?;
    let rows = if opts.dense {
        let detailed = sweep_detailed(&spec).map_err(|e| CliError::Sweep(e.to_string()))?;
        for (i, (row, outcome)) in detailed.iter().enumerate() {
            let dir = out_dir.join(format!("run_{i:04}"));
            match outcome {
                Some(outcome) => {
                    let mut scenario = cfg.scenario.clone();
                    for ((path, _), &v) in cfg.axes.iter().zip(&row.values) {
                        scenario
                            .set_param(path, v)
                            .expect("parameter already applied by the sweep");
                    }
                    write_run_outputs(&dir, &scenario, outcome)?;
                }
                None => {
                    fs::create_dir_all(&dir)?;
                    let msg = row.error.clone().unwrap_or_default();
                    fs::write(dir.join("outcome.txt"), format!("Error {msg}\n"))?;
                }
            }
        }
        detailed.into_iter().map(|(row, _)| row).collect()
    } else {
        sweep(&spec).map_err(|e| CliError::Sweep(e.to_string()))?
    };
    output::write_sweep(
        BufWriter::new(File::create(out_dir.join("sweep.csv"))?),
        &cfg.axes,
        &rows,
    )?;
    if output::gamma_c_axes(&cfg.axes).is_some() {
        output::write_gamma_c_matrix(
            BufWriter::new(File::create(out_dir.join("gamma_c_matrix.csv"))?),
            &cfg.axes,
            &rows,
            cfg.scenario.grid.dim(),
        )?;
    }
    let failed = rows.iter().filter(|r| r.status != "Completed").count();
    eprintln!("{} runs, {} not completed", rows.len(), failed);
    Ok(exit::OK)
}

/// Hypothesis report for a configuration and whether every gate of the
/// boundedness theorem passes.
pub fn check_report(file: &ConfigFile) -> Result<(String, bool), CliError> {
    let cfg = RunConfig::from_file_unchecked(file)?;
    let s = &cfg.scenario;
    let n_dim = s.grid.dim();
    let gamma = s.params.source.gamma();
    let sample_s: Vec<f64> = (0..=400).map(|k| 10f64.powf(-4.0 + 10.0 * k as f64 / 400.0)).collect();
    let sample_z: Vec<[f64; 2]> = sample_s.iter().map(|&r| [r * 0.6, r * 0.8]).collect();
    let assumptions = validate_assumptions(&s.params.source, s.params.c2, &sample_s, &sample_z)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let mut out = String::new();
    let mut ok = true;
    writeln!(out, "hypotheses:").unwrap();
    for check in &assumptions.checks {
        let verdict = if check.holds { "pass" } else { "FAIL" };
        let constant = check
            .constant
            .map_or_else(String::new, |c| format!(" (constant {})", output::num(c)));
        let empirical = if check.empirical { " [empirical]" } else { "" };
        writeln!(out, "  {}: {verdict}{constant}{empirical}", check.hypothesis).unwrap();
        ok &= check.holds;
    }

    let admissible = gamma_admissible(n_dim, gamma);
    ok &= admissible;
    writeln!(
        out,
        "gamma admissible: {admissible} (need 2N/(N+1) < gamma <= 2 with N = {n_dim}: bound 2N/(N+1) = {}, gamma = {})",
        output::num(gamma_threshold(n_dim)),
        output::num(gamma)
    )
    .unwrap();

    let chi_ok = s.params.chi_in_theorem_range();
    ok &= chi_ok;
    writeln!(out, "chi > 0: {chi_ok} (chi = {})", output::num(s.params.chi)).unwrap();

    let u0_mass = integrate(&s.u0.build(s.grid));
    match EstimateConstants::derive(&s.params, n_dim, u0_mass, s.grid.measure()) {
        Ok(k) => {
            writeln!(out, "constants:").unwrap();
            for (name, value) in [
                ("C1", k.c1),
                ("C2", k.c2),
                ("C3", k.c3),
                ("C_f", k.c_f),
                ("C_g", k.c_g),
                ("m0", k.m0),
            ] {
                writeln!(out, "  {name} = {}", output::num(value)).unwrap();
            }
            match k.exponent {
                Some(e) => {
                    writeln!(out, "  p = {}", output::num(e.p)).unwrap();
                    writeln!(out, "  theta = {}", output::num(e.theta)).unwrap();
                    writeln!(
                        out,
                        "  second condition = {} (with extra factor gamma: {}, admissible: {})",
                        output::num(e.second),
                        output::num(e.second_gamma_weighted),
                        e.gamma_weighted_admissible()
                    )
                    .unwrap();
                }
                None => {
                    ok = false;
                    writeln!(out, "  p = not found on the search grid").unwrap();
                }
            }
            match k.theta_check {
                Some(t) => writeln!(out, "  theta_check = {}", output::num(t)).unwrap(),
                None => writeln!(out, "  theta_check = n/a").unwrap(),
            }
        }
        Err(e) => {
            ok = false;
            writeln!(out, "constants: not derived ({e})").unwrap();
        }
    }
    let failures: Vec<&str> = assumptions.failures().map(|h| h.label()).collect();
    if !failures.is_empty() {
        writeln!(out, "failed hypotheses: {}", failures.join(", ")).unwrap();
    }
    writeln!(out, "verdict: {}", if ok { "all gates pass" } else { "gates fail" }).unwrap();
    Ok((out, ok))
}

/// Prints the hypothesis report; exit 0 iff every gate passes.
pub fn cmd_check(config: &Path) -> i32 {
    report((|| {
        let file = ConfigFile::load(config)?;
        let (text, ok) = check_report(&file)?;
        print!("{text}");
        Ok(if ok { exit::OK } else { exit::HYPOTHESIS })
    })())
}

/// Renders a series or sweep CSV to a PNG.
pub fn cmd_plot(input: &Path, output: &Path) -> i32 {
    match plot_csv(input, output) {
        Ok(()) => exit::OK,
        Err(e @ PlotError::Malformed(_)) => {
            eprintln!("error: {e}");
            exit::CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit::FAILURE
        }
    }
}
