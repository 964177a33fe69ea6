//! Scenarios, the ODE reference, parameter sweeps and the gradient-damping
//! study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::MonitorConfig;
use crate::domain::{linf_norm, DomainError, GridSpec, ScalarField};
use crate::model::{eval_f, gamma_admissible, ModelParams, SourceF, SourceG, SourceSpec, Tau};
use crate::solvers::{run, RunOutcome, SolverConfig, SolverError, TimeScheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{key}` cannot take value {value}")]
    BadValue { key: String, value: f64 },
    #[error("parameter `{0}` does not apply to the selected initial data")]
    NotApplicable(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("sweep has {size} combinations, above the cap of {cap}")]
    SweepTooLarge { size: usize, cap: usize },
    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
    #[error("base scenario is not aggressive enough: sup ‖u‖∞ grew only {growth:.2}x at c = 0")]
    NoAggression { growth: f64 },
    #[error("damping study needs c = 0 among the c values")]
    MissingUndamped,
}

/// Initial profile menu; every kind is nonnegative by construction.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    Constant(f64),
    /// `floor + amplitude · exp(−|x − center|² / width²)`.
    GaussianBump {
        center: [f64; 2],
        width: f64,
        amplitude: f64,
        floor: f64,
    },
    /// Cell-scale checkerboard: `floor + amplitude` on even cells, `floor` on
    /// odd ones.
    Checkerboard { amplitude: f64, floor: f64 },
    /// `floor + amplitude · U[0, 1)` per cell, ChaCha8 seeded.
    SeededNoise { seed: u64, floor: f64, amplitude: f64 },
}

impl InitialKind {
    pub fn build(&self, grid: GridSpec) -> ScalarField {
        match *self {
            InitialKind::Constant(k) => ScalarField::constant(grid, k),
            InitialKind::GaussianBump {
                center,
                width,
                amplitude,
                floor,
            } => ScalarField::from_fn(grid, |[x, y]| {
                let mut r2 = (x - center[0]).powi(2);
                if grid.dim() == 2 {
                    r2 += (y - center[1]).powi(2);
                }
                floor + amplitude * (-r2 / (width * width)).exp()
            }),
            InitialKind::Checkerboard { amplitude, floor } => {
                let values = (0..grid.len())
                    .map(|idx| {
                        let parity: usize = (0..grid.dim()).map(|a| grid.coord(idx, a)).sum();
                        if parity % 2 == 0 {
                            floor + amplitude
                        } else {
                            floor
                        }
                    })
                    .collect();
                ScalarField::new(grid, values).expect("length matches grid")
            }
            InitialKind::SeededNoise {
                seed,
                floor,
                amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values = (0..grid.len())
                    .map(|_| floor + amplitude * rng.gen::<f64>())
                    .collect();
                ScalarField::new(grid, values).expect("length matches grid")
            }
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match *self {
            InitialKind::Constant(k) => k >= 0.0,
            InitialKind::GaussianBump {
                amplitude, floor, ..
            }
            | InitialKind::Checkerboard { amplitude, floor }
            | InitialKind::SeededNoise {
                amplitude, floor, ..
            } => amplitude >= 0.0 && floor >= 0.0,
        }
    }

    pub fn reseed(&mut self, new_seed: u64) {
        if let InitialKind::SeededNoise { seed, .. } = self {
            *seed = new_seed;
        }
    }

    fn set(&mut self, field: &str, value: f64) -> Result<(), ()> {
        match (self, field) {
            (InitialKind::Constant(k), "k") => *k = value,
            (InitialKind::GaussianBump { center, .. }, "center_x") => center[0] = value,
            (InitialKind::GaussianBump { center, .. }, "center_y") => center[1] = value,
            (InitialKind::GaussianBump { width, .. }, "width") => *width = value,
            (
                InitialKind::GaussianBump { amplitude, .. }
                | InitialKind::Checkerboard { amplitude, .. }
                | InitialKind::SeededNoise { amplitude, .. },
                "amplitude",
            ) => *amplitude = value,
            (
                InitialKind::GaussianBump { floor, .. }
                | InitialKind::Checkerboard { floor, .. }
                | InitialKind::SeededNoise { floor, .. },
                "floor",
            ) => *floor = value,
            (InitialKind::SeededNoise { seed, .. }, "seed") => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(());
                }
                *seed = value as u64
            }
            _ => return Err(()),
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub grid: GridSpec,
    pub params: ModelParams,
    pub cfg: SolverConfig,
    pub monitors: MonitorConfig,
    pub u0: InitialKind,
    /// Signal initial data, used for `τ = 1` only.
    pub v0: Option<InitialKind>,
}

/// Numeric parameter paths understood by [`Scenario::set_param`].
pub const PARAMETER_PATHS: &[&str] = &[
    "grid.dim",
    "grid.n",
    "grid.side",
    "model.chi",
    "model.tau",
    "model.c2",
    "source.a",
    "source.b",
    "source.alpha",
    "source.beta",
    "source.c",
    "source.gamma",
    "solver.dt_init",
    "solver.dt_min",
    "solver.dt_max",
    "solver.cfl_safety",
    "solver.t_end",
    "solver.linear_tol",
    "solver.linear_max_iter",
    "solver.blowup_threshold",
    "solver.sink_fraction_cap",
    "solver.output_every",
    "scenario.u0.k",
    "scenario.u0.center_x",
    "scenario.u0.center_y",
    "scenario.u0.width",
    "scenario.u0.amplitude",
    "scenario.u0.floor",
    "scenario.u0.seed",
    "scenario.v0.k",
    "scenario.v0.center_x",
    "scenario.v0.center_y",
    "scenario.v0.width",
    "scenario.v0.amplitude",
    "scenario.v0.floor",
    "scenario.v0.seed",
];

impl Scenario {
    /// Sets one numeric parameter by its dotted path. Model and grid
    /// invariants are re-checked when the scenario runs.
    pub fn set_param(&mut self, path: &str, value: f64) -> Result<(), ExperimentError> {
        let bad = || ExperimentError::BadValue {
            key: path.to_string(),
            value,
        };
        let as_count = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 && v < 1e12 {
                Ok(v as usize)
            } else {
                Err(bad())
            }
        };
        match path {
            "grid.dim" => self.grid = GridSpec::new(as_count(value)?, self.grid.n(), self.grid.side())?,
            "grid.n" => self.grid = GridSpec::new(self.grid.dim(), as_count(value)?, self.grid.side())?,
            "grid.side" => self.grid = GridSpec::new(self.grid.dim(), self.grid.n(), value)?,
            "model.chi" => self.params.chi = value,
            "model.tau" => {
                self.params.tau = Tau::from_int(value as i64)
                    .filter(|_| value.fract() == 0.0)
                    .ok_or_else(bad)?
            }
            "model.c2" => self.params.c2 = value,
            "source.a" | "source.b" | "source.alpha" | "source.beta" => {
                let SourceF::PolynomialLogistic {
                    a,
                    b,
                    alpha,
                    beta,
                } = &mut self.params.source.f
                else {
                    return Err(ExperimentError::NotApplicable(path.into()));
                };
                match path {
                    "source.a" => *a = value,
                    "source.b" => *b = value,
                    "source.alpha" => *alpha = value,
                    _ => *beta = value,
                }
            }
            "source.c" | "source.gamma" => match &mut self.params.source.g {
                SourceG::GradientPower { c, gamma } => {
                    if path == "source.c" {
                        *c = value
                    } else {
                        *gamma = value
                    }
                }
                SourceG::Custom { gamma, .. } if path == "source.gamma" => *gamma = value,
                SourceG::Custom { .. } => return Err(ExperimentError::NotApplicable(path.into())),
            },
            "solver.dt_init" => self.cfg.dt_init = value,
            "solver.dt_min" => self.cfg.dt_min = value,
            "solver.dt_max" => self.cfg.dt_max = value,
            "solver.cfl_safety" => self.cfg.cfl_safety = value,
            "solver.t_end" => self.cfg.t_end = value,
            "solver.linear_tol" => self.cfg.linear_tol = value,
            "solver.linear_max_iter" => self.cfg.linear_max_iter = as_count(value)?,
            "solver.blowup_threshold" => self.cfg.blowup_threshold = value,
            "solver.sink_fraction_cap" => self.cfg.sink_fraction_cap = value,
            "solver.output_every" => self.cfg.output_every = as_count(value)?,
            _ => {
                if let Some(field) = path.strip_prefix("scenario.u0.") {
                    self.u0.set(field, value).map_err(|_| bad())?;
                } else if let Some(field) = path.strip_prefix("scenario.v0.") {
                    let v0 = self
                        .v0
                        .as_mut()
                        .ok_or_else(|| ExperimentError::NotApplicable(path.into()))?;
                    v0.set(field, value).map_err(|_| bad())?;
                } else {
                    return Err(ExperimentError::UnknownParameter(path.into()));
                }
            }
        }
        Ok(())
    }

    /// Replaces every noise seed (the `KSGD_SEED` override).
    pub fn reseed(&mut self, seed: u64) {
        self.u0.reseed(seed);
        if let Some(v0) = self.v0.as_mut() {
            v0.reseed(seed.wrapping_add(1));
        }
    }

    pub fn initial_fields(&self) -> (ScalarField, Option<ScalarField>) {
        let u0 = self.u0.build(self.grid);
        let v0 = match self.params.tau {
            Tau::Elliptic => None,
            Tau::Parabolic => Some(
                self.v0
                    .as_ref()
                    .map_or_else(|| u0.clone(), |k| k.build(self.grid)),
            ),
        };
        (u0, v0)
    }
}

/// Runs a scenario with its monitors attached.
pub fn run_scenario(s: &Scenario) -> Result<RunOutcome, ExperimentError> {
    let (u0, v0) = s.initial_fields();
    Ok(run(&u0, v0.as_ref(), &s.params, &s.cfg, &s.monitors)?)
}

/// Classical RK4 for `u' = f(u)`, sampled at every step (including `t = 0`).
pub fn ode_reference(source: &SourceSpec, u0: f64, t_end: f64, dt: f64) -> Vec<(f64, f64)> {
    let f = |s: f64| eval_f(source, s);
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut u = u0;
    out.push((0.0, u));
    for k in 1..=steps {
        let k1 = f(u);
        let k2 = f(u + 0.5 * h * k1);
        let k3 = f(u + 0.5 * h * k2);
        let k4 = f(u + h * k3);
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push((k as f64 * h, u));
    }
    out
}

/// Piecewise-linear lookup into an [`ode_reference`] trajectory.
pub fn interpolate_trajectory(traj: &[(f64, f64)], t: f64) -> f64 {
    let idx = traj.partition_point(|(s, _)| *s < t);
    if idx == 0 {
        return traj[0].1;
    }
    if idx >= traj.len() {
        return traj[traj.len() - 1].1;
    }
    let (t0, u0) = traj[idx - 1];
    let (t1, u1) = traj[idx];
    u0 + (u1 - u0) * (t - t0) / (t1 - t0)
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Scenario,
    /// `(parameter path, values)`, first axis slowest.
    pub axes: Vec<(String, Vec<f64>)>,
    pub max_parallel: usize,
    pub max_combinations: usize,
}

impl SweepSpec {
    pub fn new(base: Scenario, axes: Vec<(String, Vec<f64>)>) -> Self {
        Self {
            base,
            axes,
            max_parallel: rayon::current_num_threads(),
            max_combinations: 4096,
        }
    }

    /// Cartesian product in lexicographic axis order.
    pub fn combinations(&self) -> Vec<Vec<f64>> {
        let mut combos = vec![Vec::new()];
        for (_, values) in &self.axes {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut next = prefix.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }
        combos
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub values: Vec<f64>,
    /// Status name, or `Error` when the run could not start.
    pub status: String,
    pub status_time: Option<f64>,
    pub sup_linf_u: f64,
    pub initial_linf_u: f64,
    pub sup_mass: f64,
    pub t_final: f64,
    pub gamma_admissible: bool,
    pub error: Option<String>,
    pub clip_mass_total: f64,
    pub initial_mass: f64,
    /// Smallest density value seen over the whole run.
    pub min_u_seen: f64,
}

impl SweepRow {
    fn from_outcome(values: Vec<f64>, scenario: &Scenario, outcome: &RunOutcome) -> Self {
        let status_time = match outcome.status {
            crate::RunStatus::Completed => None,
            crate::RunStatus::BlowUpDetected(t)
            | crate::RunStatus::StepFloorHit(t)
            | crate::RunStatus::LinearSolveFailure(t)
            | crate::RunStatus::NumericalFailure(t) => Some(t),
        };
        let first = &outcome.series.records[0];
        Self {
            values,
            status: outcome.status.name().to_string(),
            status_time,
            sup_linf_u: outcome.series.sup_linf_u(),
            initial_linf_u: first.linf_u,
            sup_mass: outcome.series.sup_mass(),
            t_final: outcome.final_state.t,
            gamma_admissible: gamma_admissible(scenario.grid.dim(), scenario.params.source.gamma()),
            error: None,
            clip_mass_total: outcome.clip_mass_total,
            initial_mass: first.mass,
            min_u_seen: outcome.min_u_seen,
        }
    }

    fn failed(values: Vec<f64>, scenario: &Scenario, err: &ExperimentError) -> Self {
        Self {
            values,
            status: "Error".to_string(),
            status_time: None,
            sup_linf_u: f64::NAN,
            initial_linf_u: f64::NAN,
            sup_mass: f64::NAN,
            t_final: 0.0,
            gamma_admissible: gamma_admissible(scenario.grid.dim(), scenario.params.source.gamma()),
            error: Some(err.to_string()),
            clip_mass_total: 0.0,
            initial_mass: f64::NAN,
            min_u_seen: f64::NAN,
        }
    }

    /// `sup ‖u‖∞ / ‖u₀‖∞`.
    pub fn growth(&self) -> f64 {
        self.sup_linf_u / self.initial_linf_u
    }
}

fn run_row(base: &Scenario, axes: &[(String, Vec<f64>)], values: Vec<f64>) -> SweepRow {
    run_row_detailed(base, axes, values).0
}

fn run_row_detailed(
    base: &Scenario,
    axes: &[(String, Vec<f64>)],
    values: Vec<f64>,
) -> (SweepRow, Option<RunOutcome>) {
    let mut scenario = base.clone();
    for ((path, _), &value) in axes.iter().zip(&values) {
        if let Err(err) = scenario.set_param(path, value) {
            return (SweepRow::failed(values, &scenario, &err), None);
        }
    }
    match run_scenario(&scenario) {
        Ok(outcome) => (
            SweepRow::from_outcome(values, &scenario, &outcome),
            Some(outcome),
        ),
        Err(err) => (SweepRow::failed(values, &scenario, &err), None),
    }
}

fn run_sweep<T: Send>(
    spec: &SweepSpec,
    row: impl Fn(Vec<f64>) -> T + Sync + Send,
) -> Result<Vec<T>, ExperimentError> {
    let combos = spec.combinations();
    if combos.len() > spec.max_combinations {
        return Err(ExperimentError::SweepTooLarge {
            size: combos.len(),
            cap: spec.max_combinations,
        });
    }
    for (path, _) in &spec.axes {
        if !PARAMETER_PATHS.contains(&path.as_str()) {
            return Err(ExperimentError::UnknownParameter(path.clone()));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.max_parallel.max(1))
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| combos.into_par_iter().map(row).collect()))
}

/// Runs every combination in parallel. Rows come back in lexicographic axis
/// order regardless of the thread count; failed rows are kept as data.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ExperimentError> {
    run_sweep(spec, |values| run_row(&spec.base, &spec.axes, values))
}

/// Like [`sweep`], but keeps each run's full outcome (`None` for rows that
/// could not start).
pub fn sweep_detailed(
    spec: &SweepSpec,
) -> Result<Vec<(SweepRow, Option<RunOutcome>)>, ExperimentError> {
    run_sweep(spec, |values| run_row_detailed(&spec.base, &spec.axes, values))
}

/// Growth factor of `sup ‖u‖∞` that counts as aggregation in the undamped run.
pub const AGGRESSION_FACTOR: f64 = 50.0;
/// Growth factor allowed for the most damped admissible runs.
pub const BOUNDED_FACTOR: f64 = 10.0;
/// Slack on monotonicity of `sup ‖u‖∞` in `c`.
pub const MONOTONE_SLACK: f64 = 0.05;
pub const OPEN_REGIME_LABEL: &str = "open regime - numerical indication only";

/// The pinned aggregation scenario for the damping study: 2D, `τ = 0`,
/// `f(u) = u − 0.5 u^{1.5}`, `χ = 30`, a Gaussian bump on a positive floor.
pub fn q1_base_scenario() -> Scenario {
    let grid = GridSpec::new(2, 32, 1.0).expect("valid grid");
    let params = ModelParams::new(
        30.0,
        Tau::Elliptic,
        SourceSpec::logistic_gradpower(1.0, 0.5, 1.0, 1.5, 0.0, 2.0),
    )
    .expect("valid parameters");
    Scenario {
        name: "q1-aggregation".into(),
        grid,
        params,
        cfg: SolverConfig {
            t_end: 10.0,
            dt_init: 1e-4,
            dt_max: 1e-2,
            blowup_threshold: 500.0,
            linear_tol: 1e-10,
            output_every: 20,
            scheme: TimeScheme::ImexEuler,
            ..SolverConfig::default()
        },
        monitors: MonitorConfig::default(),
        u0: InitialKind::GaussianBump {
            center: [0.5, 0.5],
            width: 0.15,
            amplitude: 4.0,
            floor: 1.0,
        },
        v0: None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Q1Cell {
    pub c: f64,
    pub gamma: f64,
    pub row: SweepRow,
    pub admissible: bool,
    /// `None` for admissible cells, the open-regime label otherwise.
    pub label: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Q1Report {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    /// Row-major in `(gamma, c)`.
    pub cells: Vec<Q1Cell>,
    /// Growth of `sup ‖u‖∞` in the undamped run.
    pub baseline_growth: f64,
    pub baseline_status: String,
    /// Admissible rows: largest `c` completes with growth ≤ 10.
    pub bounded_at_largest_c: bool,
    /// Admissible rows: `sup ‖u‖∞` nonincreasing in `c` within 5%.
    pub monotone_in_c: bool,
}

impl Q1Report {
    pub fn cell(&self, gamma: f64, c: f64) -> Option<&Q1Cell> {
        self.cells.iter().find(|x| x.gamma == gamma && x.c == c)
    }

    pub fn row(&self, gamma: f64) -> Vec<&Q1Cell> {
        self.cells.iter().filter(|x| x.gamma == gamma).collect()
    }
}

/// Runs the `(c, γ)` grid on `base`. `c = 0` does not depend on γ and is run
/// once. Refuses a base scenario whose undamped run neither grows
/// `sup ‖u‖∞` by 50x nor hits the blow-up threshold.
pub fn q1_experiment(
    base: &Scenario,
    c_values: &[f64],
    gamma_values: &[f64],
    threads: usize,
) -> Result<Q1Report, ExperimentError> {
    if !c_values.contains(&0.0) {
        return Err(ExperimentError::MissingUndamped);
    }
    let mut c_sorted = c_values.to_vec();
    c_sorted.sort_by(f64::total_cmp);
    c_sorted.dedup();

    let mut undamped = base.clone();
    undamped.set_param("source.c", 0.0)?;
    let baseline = run_row(&undamped, &[], Vec::new());
    let baseline_growth = baseline.growth();
    let aggressive = baseline.status == "BlowUpDetected" || baseline_growth >= AGGRESSION_FACTOR;
    if !aggressive {
        return Err(ExperimentError::NoAggression {
            growth: baseline_growth,
        });
    }

    let damped: Vec<String> = vec!["source.gamma".into(), "source.c".into()];
    let damped_axes = vec![
        (damped[0].clone(), gamma_values.to_vec()),
        (
            damped[1].clone(),
            c_sorted.iter().copied().filter(|&c| c != 0.0).collect(),
        ),
    ];
    let spec = SweepSpec {
        base: base.clone(),
        axes: damped_axes,
        max_parallel: threads,
        max_combinations: usize::MAX,
    };
    let damped_rows = sweep(&spec)?;

    let n_dim = base.grid.dim();
    let mut cells = Vec::with_capacity(gamma_values.len() * c_sorted.len());
    for &gamma in gamma_values {
        let admissible = gamma_admissible(n_dim, gamma);
        for &c in &c_sorted {
            let row = if c == 0.0 {
                let mut r = baseline.clone();
                r.values = vec![gamma, 0.0];
                r.gamma_admissible = admissible;
                r
            } else {
                damped_rows
                    .iter()
                    .find(|r| r.values == [gamma, c])
                    .cloned()
                    .expect("every combination was run")
            };
            cells.push(Q1Cell {
                c,
                gamma,
                row,
                admissible,
                label: (!admissible).then_some(OPEN_REGIME_LABEL),
            });
        }
    }

    let largest_c = *c_sorted.last().expect("c list is non-empty");
    let mut bounded = true;
    let mut monotone = true;
    for &gamma in gamma_values.iter().filter(|&&g| gamma_admissible(n_dim, g)) {
        let row: Vec<&Q1Cell> = cells.iter().filter(|x| x.gamma == gamma).collect();
        let last = row.iter().find(|x| x.c == largest_c).expect("largest c present");
        if !(last.row.status == "Completed" && last.row.growth() <= BOUNDED_FACTOR) {
            bounded = false;
        }
        for pair in row.windows(2) {
            if !(pair[1].row.sup_linf_u <= pair[0].row.sup_linf_u * (1.0 + MONOTONE_SLACK)) {
                monotone = false;
            }
        }
    }

    Ok(Q1Report {
        c_values: c_sorted,
        gamma_values: gamma_values.to_vec(),
        cells,
        baseline_growth,
        baseline_status: baseline.status.clone(),
        bounded_at_largest_c: bounded,
        monotone_in_c: monotone,
    })
}

/// Initial `‖u₀‖∞` of a scenario.
pub fn initial_linf(s: &Scenario) -> f64 {
    linf_norm(&s.u0.build(s.grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic() -> SourceSpec {
        SourceSpec::logistic_gradpower(1.0, 1.0, 1.0, 2.0, 1.0, 2.0)
    }

    #[test]
    fn rk4_matches_logistic_closed_form() {
        let traj = ode_reference(&logistic(), 0.5, 5.0, 1e-3);
        for &(t, u) in traj.iter().step_by(250) {
            let exact = 1.0 / (1.0 + (-t).exp());
            assert!((u - exact).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn rk4_fixed_points() {
        let traj = ode_reference(&logistic(), 1.0, 2.0, 1e-2);
        assert!(traj.iter().all(|&(_, u)| u == 1.0));
        let traj = ode_reference(&logistic(), 0.0, 2.0, 1e-2);
        assert!(traj.iter().all(|&(_, u)| u == 0.0));
    }

    #[test]
    fn initial_kinds_are_nonnegative_and_seeded() {
        let grid = GridSpec::new(2, 10, 1.0).unwrap();
        let a = InitialKind::SeededNoise { seed: 7, floor: 0.1, amplitude: 1.0 }.build(grid);
        let b = InitialKind::SeededNoise { seed: 7, floor: 0.1, amplitude: 1.0 }.build(grid);
        let c = InitialKind::SeededNoise { seed: 8, floor: 0.1, amplitude: 1.0 }.build(grid);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.min() >= 0.1);
        let checker = InitialKind::Checkerboard { amplitude: 2.0, floor: 0.5 }.build(grid);
        assert_eq!(checker.values()[0], 2.5);
        assert_eq!(checker.values()[1], 0.5);
        assert_eq!(checker.values()[10], 0.5);
    }

    #[test]
    fn set_param_paths() {
        let mut s = q1_base_scenario();
        s.set_param("source.c", 1.5).unwrap();
        s.set_param("grid.n", 16.0).unwrap();
        s.set_param("scenario.u0.width", 0.2).unwrap();
        assert_eq!(s.grid.n(), 16);
        assert!(matches!(s.params.source.g, SourceG::GradientPower { c, .. } if c == 1.5));
        assert!(matches!(s.set_param("model.chy", 1.0), Err(ExperimentError::UnknownParameter(_))));
        assert!(s.set_param("scenario.u0.seed", 3.0).is_err());
        assert!(s.set_param("scenario.v0.k", 3.0).is_err());
        for path in PARAMETER_PATHS {
            assert!(!matches!(
                s.clone().set_param(path, 1.0),
                Err(ExperimentError::UnknownParameter(_))
            ));
        }
    }

    fn tiny_scenario() -> Scenario {
        let mut s = q1_base_scenario();
        s.grid = GridSpec::new(2, 8, 1.0).unwrap();
        s.params.chi = 1.0;
        s.cfg.t_end = 0.05;
        s
    }

    #[test]
    fn sweep_cardinality_and_order() {
        let spec = SweepSpec::new(tiny_scenario(), vec![("source.c".into(), vec![0.0, 0.5, 1.0, 2.0])]);
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        let cs: Vec<f64> = rows.iter().map(|r| r.values[0]).collect();
        assert_eq!(cs, vec![0.0, 0.5, 1.0, 2.0]);

        let spec = SweepSpec::new(tiny_scenario(), vec![]);
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        let direct = run_scenario(&tiny_scenario()).unwrap();
        assert_eq!(rows[0].sup_linf_u, direct.series.sup_linf_u());
    }

    #[test]
    fn sweep_tags_gamma_admissibility() {
        let gammas = vec![1.2, 1.4, 1.6, 1.8, 2.0];
        let spec = SweepSpec::new(tiny_scenario(), vec![("source.gamma".into(), gammas.clone())]);
        let rows = sweep(&spec).unwrap();
        let tags: Vec<bool> = rows.iter().map(|r| r.gamma_admissible).collect();
        assert_eq!(tags, vec![false, true, true, true, true]);
    }

    #[test]
    fn sweep_keeps_failed_rows() {
        let spec = SweepSpec::new(tiny_scenario(), vec![("source.gamma".into(), vec![2.5, 2.0])]);
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows[0].status, "Error");
        assert!(rows[0].error.is_some());
        assert_eq!(rows[1].status, "Completed");
    }

    #[test]
    fn sweep_is_independent_of_thread_count() {
        let axes = vec![("source.c".into(), vec![0.0, 1.0]), ("model.chi".into(), vec![0.5, 2.0])];
        let mut spec = SweepSpec::new(tiny_scenario(), axes);
        spec.max_parallel = 1;
        let serial = sweep(&spec).unwrap();
        spec.max_parallel = 4;
        let parallel = sweep(&spec).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn q1_requires_undamped_column() {
        assert_eq!(
            q1_experiment(&tiny_scenario(), &[1.0], &[2.0], 1),
            Err(ExperimentError::MissingUndamped)
        );
    }

    #[test]
    fn q1_refuses_tame_base() {
        let err = q1_experiment(&tiny_scenario(), &[0.0, 1.0], &[2.0], 1).unwrap_err();
        assert!(matches!(err, ExperimentError::NoAggression { .. }));
    }
}
