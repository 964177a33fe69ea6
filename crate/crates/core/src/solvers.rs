//! Linear solves and time integration.
//!
//! Diffusion is implicit (backward Euler, solved matrix-free by conjugate
//! gradient); taxis, reaction and the gradient sink are explicit. For `τ = 0`
//! the signal is the solution of `(I − Δ_h) v = u` and the state keeps it in
//! sync with `u` after every step.

use thiserror::Error;

use crate::diagnostics::{self, DiagnosticsSeries, Frame, MonitorConfig, MsrAccumulator};
use crate::domain::{
    divergence_taxis_flux, gradient_central, integrate, laplacian_into, linf_norm,
    max_face_gradient, ScalarField,
};
use crate::model::{eval_f, eval_g, ModelParams, Tau};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})")]
    LinearSolveFailure { iterations: usize, residual: f64 },
    #[error("non-finite values in the solution")]
    NumericalFailure,
    #[error("time step candidate {candidate:e} fell below dt_min")]
    StepFloor { candidate: f64 },
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("invalid initial data: {0}")]
    BadInitialData(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    /// One IMEX Euler step per time step.
    ImexEuler,
    /// Two IMEX Euler stages averaged with the old state (Heun / SSP-RK2 on
    /// the explicit part). Second order for the reaction dynamics.
    ImexSsp2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub blowup_threshold: f64,
    pub sink_fraction_cap: f64,
    pub output_every: usize,
    pub scheme: TimeScheme,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-4,
            dt_min: 1e-12,
            dt_max: 1e-2,
            cfl_safety: 0.2,
            t_end: 1.0,
            linear_tol: 1e-10,
            linear_max_iter: 20_000,
            blowup_threshold: 1e8,
            sink_fraction_cap: 0.5,
            output_every: 10,
            scheme: TimeScheme::ImexEuler,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::BadConfig(msg.to_string()));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad("need 0 < dt_min <= dt_init <= dt_max");
        }
        if !(self.linear_tol > 0.0 && self.linear_tol <= 1e-4) {
            return bad("linear_tol must lie in (0, 1e-4]");
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blowup_threshold must be positive");
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must lie in (0, 1]");
        }
        if !(self.sink_fraction_cap > 0.0 && self.sink_fraction_cap < 1.0) {
            return bad("sink_fraction_cap must lie in (0, 1)");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if self.output_every == 0 || self.linear_max_iter == 0 {
            return bad("output_every and linear_max_iter must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: ScalarField,
    pub v: ScalarField,
    pub dt_last: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Completed,
    BlowUpDetected(f64),
    StepFloorHit(f64),
    LinearSolveFailure(f64),
    NumericalFailure(f64),
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Completed => "Completed",
            RunStatus::BlowUpDetected(_) => "BlowUpDetected",
            RunStatus::StepFloorHit(_) => "StepFloorHit",
            RunStatus::LinearSolveFailure(_) => "LinearSolveFailure",
            RunStatus::NumericalFailure(_) => "NumericalFailure",
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub final_state: State,
    pub series: DiagnosticsSeries,
    /// Mass added by clipping `u` at zero, summed over the run.
    pub clip_mass_total: f64,
    /// Largest per-step clipped mass relative to the mass at that step.
    pub max_step_clip_ratio: f64,
    /// Smallest value of `u` over all steps.
    pub min_u_seen: f64,
    pub steps: usize,
    /// Every state of the run, when dense output was requested.
    pub frames: Option<Vec<Frame>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradient for a symmetric positive definite operator given as
/// `apply(x, out)`. `x` holds the initial guess and is overwritten with the
/// solution. Reductions run in index order, so results do not depend on
/// thread count.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgReport, SolverError> {
    let n = rhs.len();
    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        x.iter_mut().for_each(|xi| *xi = 0.0);
        return Ok(CgReport {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut rr = dot(&r, &r);
    let target = tol * rhs_norm;
    if rr.sqrt() <= target {
        return Ok(CgReport {
            iterations: 0,
            relative_residual: rr.sqrt() / rhs_norm,
        });
    }
    let mut p = r.clone();
    for iter in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(CgReport {
                iterations: iter,
                relative_residual: rr_new.sqrt() / rhs_norm,
            });
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    if !rr.is_finite() {
        return Err(SolverError::NumericalFailure);
    }
    Err(SolverError::LinearSolveFailure {
        iterations: max_iter,
        residual: rr.sqrt() / rhs_norm,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Applies `(shift I − scale Δ_h) x`.
fn shifted_laplacian(grid: &crate::GridSpec, shift: f64, scale: f64, x: &[f64], out: &mut [f64]) {
    laplacian_into(grid, x, out);
    for (o, xi) in out.iter_mut().zip(x) {
        *o = shift * xi - scale * *o;
    }
}

/// Solves `(I − Δ_h) v = rhs` from a zero initial guess.
pub fn helmholtz_solve(
    rhs: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarField, SolverError> {
    let guess = ScalarField::zeros(*rhs.grid());
    helmholtz_solve_from(rhs, &guess, tol, max_iter)
}

/// Solves `(I − Δ_h) v = rhs` starting from `guess`.
pub fn helmholtz_solve_from(
    rhs: &ScalarField,
    guess: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarField, SolverError> {
    if !rhs.is_finite() {
        return Err(SolverError::NumericalFailure);
    }
    let grid = *rhs.grid();
    let mut out = guess.clone();
    conjugate_gradient(
        |x, y| shifted_laplacian(&grid, 1.0, 1.0, x, y),
        rhs.values(),
        out.values_mut(),
        tol,
        max_iter,
    )?;
    Ok(out)
}

/// Relative residual `‖(I − Δ_h)v − rhs‖₂ / ‖rhs‖₂`.
pub fn helmholtz_residual(v: &ScalarField, rhs: &ScalarField) -> f64 {
    let mut av = vec![0.0; v.values().len()];
    shifted_laplacian(v.grid(), 1.0, 1.0, v.values(), &mut av);
    let res: f64 = av
        .iter()
        .zip(rhs.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = dot(rhs.values(), rhs.values()).sqrt();
    if norm == 0.0 {
        res
    } else {
        res / norm
    }
}

/// One backward-Euler step `(I − dt Δ_h + dt·decay I) out = f + dt·forcing`.
pub fn diffusion_implicit_step(
    f: &ScalarField,
    dt: f64,
    decay: f64,
    forcing: Option<&ScalarField>,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarField, SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::BadConfig(format!("dt must be positive, got {dt}")));
    }
    let grid = *f.grid();
    let rhs: Vec<f64> = match forcing {
        Some(src) => f
            .values()
            .iter()
            .zip(src.values())
            .map(|(a, b)| a + dt * b)
            .collect(),
        None => f.values().to_vec(),
    };
    if rhs.iter().any(|x| !x.is_finite()) {
        return Err(SolverError::NumericalFailure);
    }
    let mut out = f.values().to_vec();
    conjugate_gradient(
        |x, y| shifted_laplacian(&grid, 1.0 + dt * decay, dt, x, y),
        &rhs,
        &mut out,
        tol,
        max_iter,
    )?;
    ScalarField::new(grid, out).map_err(|e| SolverError::BadInitialData(e.to_string()))
}

/// Explicit tendency `−χ∇·(u∇v) + f(u) − g(∇u)` per cell.
pub fn explicit_tendency(u: &ScalarField, v: &ScalarField, params: &ModelParams) -> Vec<f64> {
    let taxis = divergence_taxis_flux(u, v).expect("u and v share a grid");
    let grad = gradient_central(u);
    u.values()
        .iter()
        .zip(taxis.values())
        .enumerate()
        .map(|(idx, (&ui, &div))| {
            -params.chi * div + eval_f(&params.source, ui) - eval_g(&params.source, grad.at(idx))
        })
        .collect()
}

/// One IMEX Euler stage for `u` driven by a given signal. Returns the new
/// density and the mass added by clipping.
fn density_stage(
    u: &ScalarField,
    v_drive: &ScalarField,
    params: &ModelParams,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<(ScalarField, f64), SolverError> {
    let tendency = explicit_tendency(u, v_drive, params);
    let mut clipped = 0.0;
    let provisional: Vec<f64> = u
        .values()
        .iter()
        .zip(&tendency)
        .map(|(ui, ti)| {
            let next = ui + dt * ti;
            if next < 0.0 {
                clipped -= next;
                0.0
            } else {
                next
            }
        })
        .collect();
    if provisional.iter().any(|x| !x.is_finite()) {
        return Err(SolverError::NumericalFailure);
    }
    let provisional = ScalarField::new(*u.grid(), provisional)
        .map_err(|e| SolverError::BadInitialData(e.to_string()))?;
    let next = diffusion_implicit_step(
        &provisional,
        dt,
        0.0,
        None,
        cfg.linear_tol,
        cfg.linear_max_iter,
    )?;
    Ok((next, clipped * u.grid().cell_volume()))
}

fn signal_for(
    u: &ScalarField,
    guess: &ScalarField,
    cfg: &SolverConfig,
) -> Result<ScalarField, SolverError> {
    helmholtz_solve_from(u, guess, cfg.linear_tol, cfg.linear_max_iter)
}

/// Result of one time step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub state: State,
    pub clip_mass: f64,
}

/// Advances the state by `dt`.
///
/// Order within a step: the signal is brought up to date with the current `u`
/// (`τ = 0`: Helmholtz solve; `τ = 1`: backward Euler with decay 1 and forcing
/// `u`), then `u` receives the explicit taxis, reaction and sink tendencies,
/// is clipped at zero and diffused implicitly. For `τ = 0` the signal is
/// re-solved against the new `u` so the returned state is consistent.
pub fn step(
    state: &State,
    params: &ModelParams,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<StepReport, SolverError> {
    let (u_next, v_next, clip_mass) = match cfg.scheme {
        TimeScheme::ImexEuler => {
            let (u1, v1, clip) = euler_step(&state.u, &state.v, params, cfg, dt)?;
            (u1, v1, clip)
        }
        TimeScheme::ImexSsp2 => {
            let (u1, v1, clip1) = euler_step(&state.u, &state.v, params, cfg, dt)?;
            let (u2, v2, clip2) = euler_step(&u1, &v1, params, cfg, dt)?;
            let u_avg = average(&state.u, &u2);
            let v_avg = match params.tau {
                Tau::Elliptic => signal_for(&u_avg, &v2, cfg)?,
                Tau::Parabolic => average(&state.v, &v2),
            };
            (u_avg, v_avg, 0.5 * (clip1 + clip2))
        }
    };
    if !u_next.is_finite() || !v_next.is_finite() {
        return Err(SolverError::NumericalFailure);
    }
    Ok(StepReport {
        state: State {
            t: state.t + dt,
            u: u_next,
            v: v_next,
            dt_last: dt,
        },
        clip_mass,
    })
}

fn euler_step(
    u: &ScalarField,
    v: &ScalarField,
    params: &ModelParams,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<(ScalarField, ScalarField, f64), SolverError> {
    match params.tau {
        Tau::Elliptic => {
            let v_drive = signal_for(u, v, cfg)?;
            let (u1, clip) = density_stage(u, &v_drive, params, dt, cfg)?;
            let v1 = signal_for(&u1, &v_drive, cfg)?;
            Ok((u1, v1, clip))
        }
        Tau::Parabolic => {
            let v1 =
                diffusion_implicit_step(v, dt, 1.0, Some(u), cfg.linear_tol, cfg.linear_max_iter)?;
            let (u1, clip) = density_stage(u, &v1, params, dt, cfg)?;
            Ok((u1, v1, clip))
        }
    }
}

fn average(a: &ScalarField, b: &ScalarField) -> ScalarField {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    ScalarField::new(*a.grid(), values).expect("same grid")
}

/// The three raw step limits, before the safety factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtConstraints {
    /// `h / (|χ| max|∇v| + ε)` with the face-difference gradient.
    pub advective: f64,
    /// `1 / (|f'(‖u‖∞)| + ε)`.
    pub reaction: f64,
    /// `cap · min u / g(∇u)` over cells with `u > 1e-14`.
    pub sink: f64,
}

impl DtConstraints {
    pub fn min(&self) -> f64 {
        self.advective.min(self.reaction).min(self.sink)
    }
}

const DT_EPS: f64 = 1e-14;

pub fn dt_constraints(state: &State, params: &ModelParams, cfg: &SolverConfig) -> DtConstraints {
    let grid = state.u.grid();
    let drift = params.chi.abs() * max_face_gradient(&state.v);
    let advective = grid.h() / (drift + DT_EPS);

    let peak = linf_norm(&state.u);
    let delta = 1e-6 * peak.max(1.0);
    let slope = if peak > delta {
        (eval_f(&params.source, peak + delta) - eval_f(&params.source, peak - delta)) / (2.0 * delta)
    } else {
        (eval_f(&params.source, peak + delta) - eval_f(&params.source, peak)) / delta
    };
    let reaction = 1.0 / (slope.abs() + DT_EPS);

    let grad = gradient_central(&state.u);
    let mut sink = f64::INFINITY;
    for (idx, &ui) in state.u.values().iter().enumerate() {
        if ui > 1e-14 {
            let rate = eval_g(&params.source, grad.at(idx)) / ui;
            if rate > 0.0 {
                sink = sink.min(cfg.sink_fraction_cap / rate);
            }
        }
    }
    DtConstraints {
        advective,
        reaction,
        sink,
    }
}

/// Chooses the next step: `clamp(cfl · min(constraints), dt_min, dt_max)`.
/// Fails with [`SolverError::StepFloor`] when the candidate drops below
/// `dt_min`.
pub fn adapt_dt(state: &State, params: &ModelParams, cfg: &SolverConfig) -> Result<f64, SolverError> {
    let candidate = cfg.cfl_safety * dt_constraints(state, params, cfg).min();
    if candidate < cfg.dt_min {
        return Err(SolverError::StepFloor { candidate });
    }
    Ok(candidate.min(cfg.dt_max))
}

/// Builds the initial state. For `τ = 0` the signal is solved from `u0` and
/// `v0` is ignored.
pub fn initial_state(
    u0: &ScalarField,
    v0: Option<&ScalarField>,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<State, SolverError> {
    if !u0.is_finite() || u0.min() < 0.0 {
        return Err(SolverError::BadInitialData("u0 must be finite and nonnegative".into()));
    }
    let v = match params.tau {
        Tau::Elliptic => helmholtz_solve(u0, cfg.linear_tol, cfg.linear_max_iter)?,
        Tau::Parabolic => {
            let v0 = v0.ok_or_else(|| SolverError::BadInitialData("tau = 1 needs v0".into()))?;
            if v0.grid() != u0.grid() {
                return Err(SolverError::BadInitialData("u0 and v0 grids differ".into()));
            }
            if !v0.is_finite() || v0.min() < 0.0 {
                return Err(SolverError::BadInitialData("v0 must be finite and nonnegative".into()));
            }
            v0.clone()
        }
    };
    Ok(State {
        t: 0.0,
        u: u0.clone(),
        v,
        dt_last: 0.0,
    })
}

/// Integrates to `cfg.t_end` or until a termination criterion fires.
///
/// Diagnostics are recorded at `t = 0`, every `output_every` steps and at
/// termination. `BlowUpDetected` fires once `‖u‖∞ ≥ blowup_threshold`.
pub fn run(
    u0: &ScalarField,
    v0: Option<&ScalarField>,
    params: &ModelParams,
    cfg: &SolverConfig,
    monitors: &MonitorConfig,
) -> Result<RunOutcome, SolverError> {
    cfg.validate()?;
    params
        .check()
        .map_err(|e| SolverError::BadConfig(e.to_string()))?;
    let mut state = initial_state(u0, v0, params, cfg)?;
    let mut series = DiagnosticsSeries::new(*u0.grid(), params, &monitors.p_list);
    let mut msr = MsrAccumulator::new(monitors.primary_p() + 1.0);
    let mut frames = monitors.dense.then(Vec::new);

    let mut push_record = |state: &State, clip_total: f64, series: &mut DiagnosticsSeries| {
        let mut rec = diagnostics::record(state, params, &monitors.p_list);
        if params.tau == Tau::Parabolic {
            let (lhs, rhs) = msr.push(state);
            rec.msr_lhs = lhs;
            rec.msr_rhs = rhs;
        }
        rec.clip_mass = clip_total;
        series.push(rec);
    };

    push_record(&state, 0.0, &mut series);
    if let Some(frames) = frames.as_mut() {
        frames.push(Frame::capture(&state, 0.0));
    }

    let mut clip_total = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut min_seen = state.u.min();
    let mut steps = 0usize;
    let t_end = cfg.t_end;
    let status = loop {
        if state.t >= t_end * (1.0 - 1e-12) {
            break RunStatus::Completed;
        }
        let mut dt = match adapt_dt(&state, params, cfg) {
            Ok(dt) => dt,
            Err(_) => break RunStatus::StepFloorHit(state.t),
        };
        if steps == 0 {
            dt = dt.min(cfg.dt_init);
        }
        dt = dt.min(t_end - state.t);
        let report = match step(&state, params, cfg, dt) {
            Ok(r) => r,
            Err(SolverError::NumericalFailure) => break RunStatus::NumericalFailure(state.t),
            Err(_) => break RunStatus::LinearSolveFailure(state.t),
        };
        let mass = integrate(&report.state.u);
        if mass > 0.0 {
            max_ratio = max_ratio.max(report.clip_mass / mass);
        }
        clip_total += report.clip_mass;
        state = report.state;
        if state.t > t_end * (1.0 - 1e-12) {
            state.t = t_end;
        }
        steps += 1;
        min_seen = min_seen.min(state.u.min());
        if let Some(frames) = frames.as_mut() {
            frames.push(Frame::capture(&state, dt));
        }
        if linf_norm(&state.u) >= cfg.blowup_threshold {
            push_record(&state, clip_total, &mut series);
            break RunStatus::BlowUpDetected(state.t);
        }
        if steps % cfg.output_every == 0 {
            push_record(&state, clip_total, &mut series);
        }
    };
    if series.last_t() < state.t {
        push_record(&state, clip_total, &mut series);
    }
    Ok(RunOutcome {
        status,
        final_state: state,
        series,
        clip_mass_total: clip_total,
        max_step_clip_ratio: max_ratio,
        min_u_seen: min_seen,
        steps,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridSpec;
    use crate::model::SourceSpec;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(2, n, 1.0).unwrap()
    }

    fn params(chi: f64, tau: Tau, c: f64) -> ModelParams {
        ModelParams::new(chi, tau, SourceSpec::logistic_gradpower(1.0, 1.0, 1.0, 2.0, c, 2.0))
            .unwrap()
    }

    #[test]
    fn helmholtz_constant_rhs() {
        let rhs = ScalarField::constant(grid(8), 2.5);
        let v = helmholtz_solve(&rhs, 1e-12, 1000).unwrap();
        for x in v.values() {
            assert!((x - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn helmholtz_preserves_integral() {
        let g = grid(16);
        let rhs = ScalarField::from_fn(g, |[x, y]| (x * 9.0).sin().abs() + y * y);
        let v = helmholtz_solve(&rhs, 1e-12, 5000).unwrap();
        let scale = g.measure() * rhs.max();
        assert!((integrate(&v) - integrate(&rhs)).abs() <= 1e-11 * scale);
        assert!(helmholtz_residual(&v, &rhs) <= 1e-12);
    }

    #[test]
    fn cg_reports_failure_when_capped() {
        let g = grid(16);
        let rhs = ScalarField::from_fn(g, |[x, y]| (x * 9.0).sin() + y);
        assert!(matches!(
            helmholtz_solve(&rhs, 1e-14, 2),
            Err(SolverError::LinearSolveFailure { iterations: 2, .. })
        ));
    }

    #[test]
    fn diffusion_of_constant_is_identity() {
        let f = ScalarField::constant(grid(6), 1.7);
        let out = diffusion_implicit_step(&f, 0.3, 0.0, None, 1e-12, 100).unwrap();
        for x in out.values() {
            assert!((x - 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn diffusion_conserves_mass() {
        let g = grid(12);
        let f = ScalarField::from_fn(g, |[x, y]| (-(x - 0.3).powi(2) * 40.0 - y * 3.0).exp());
        let out = diffusion_implicit_step(&f, 0.05, 0.0, None, 1e-12, 5000).unwrap();
        assert!((integrate(&out) - integrate(&f)).abs() <= 1e-11 * integrate(&f));
    }

    /// Spike data, large dt: the backward-Euler matrix is an M-matrix, so the
    /// solution is positive everywhere. Cross-checked against a dense solve.
    #[test]
    fn diffusion_spike_positive_against_dense_solve() {
        let g = grid(5);
        let mut vals = vec![0.0; 25];
        vals[12] = 1.0;
        let f = ScalarField::new(g, vals.clone()).unwrap();
        let dt = 10.0;
        let out = diffusion_implicit_step(&f, dt, 0.0, None, 1e-14, 1000).unwrap();
        assert!(out.values().iter().all(|&x| x > 0.0));

        // dense oracle: assemble I − dt Δ_h from the stencil and solve by
        // Gaussian elimination
        let n = 25;
        let inv_h2 = 1.0 / (g.h() * g.h());
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] += 1.0;
            for axis in 0..2 {
                let (l, r) = g.neighbours(i, axis);
                a[i][l] -= dt * inv_h2;
                a[i][r] -= dt * inv_h2;
                a[i][i] += 2.0 * dt * inv_h2;
            }
        }
        let mut b = vals;
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let m = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= m * a[col][k];
                }
                b[row] -= m * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        for (got, want) in out.values().iter().zip(&x) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_step_is_explicit_euler() {
        let g = grid(6);
        let p = params(7.0, Tau::Elliptic, 1.0);
        let cfg = SolverConfig::default();
        let u0 = ScalarField::constant(g, 0.3);
        let state = initial_state(&u0, None, &p, &cfg).unwrap();
        let dt = 1e-2;
        let next = step(&state, &p, &cfg, dt).unwrap().state;
        let expect = 0.3 + dt * (0.3 - 0.09);
        for x in next.u.values() {
            assert!((x - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_diffusion_run_conserves_mass() {
        let g = grid(16);
        let src = SourceSpec {
            f: crate::model::SourceF::Custom(std::sync::Arc::new(|_| 0.0)),
            g: crate::model::SourceG::GradientPower { c: 0.0, gamma: 2.0 },
        };
        let p = ModelParams::new(0.0, Tau::Parabolic, src).unwrap();
        let cfg = SolverConfig {
            t_end: 0.05,
            dt_max: 1e-3,
            dt_init: 1e-3,
            ..SolverConfig::default()
        };
        let u0 = ScalarField::from_fn(g, |[x, y]| 1.0 + (6.0 * x).cos() * (3.0 * y).cos());
        let v0 = ScalarField::constant(g, 0.0);
        let out = run(&u0, Some(&v0), &p, &cfg, &MonitorConfig::default()).unwrap();
        assert!(out.status.is_completed());
        let m0 = integrate(&u0);
        let bound = 10.0 * cfg.linear_tol * m0 * out.steps as f64;
        assert!((integrate(&out.final_state.u) - m0).abs() <= bound);
    }

    #[test]
    fn sink_only_mass_is_nonincreasing() {
        let g = grid(16);
        let src = SourceSpec {
            f: crate::model::SourceF::Custom(std::sync::Arc::new(|_| 0.0)),
            g: crate::model::SourceG::GradientPower { c: 0.5, gamma: 1.5 },
        };
        let p = ModelParams::new(1.0, Tau::Elliptic, src).unwrap();
        let cfg = SolverConfig {
            t_end: 0.1,
            output_every: 1,
            ..SolverConfig::default()
        };
        let u0 = ScalarField::from_fn(g, |[x, y]| 0.2 + (-((x - 0.4).powi(2) + (y - 0.6).powi(2)) * 30.0).exp());
        let out = run(&u0, None, &p, &cfg, &MonitorConfig::default()).unwrap();
        let masses: Vec<f64> = out.series.records.iter().map(|r| r.mass).collect();
        for w in masses.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0] + out.clip_mass_total);
        }
    }

    #[test]
    fn dt_unconstrained_hits_dt_max() {
        let g = grid(6);
        let src = SourceSpec {
            f: crate::model::SourceF::Custom(std::sync::Arc::new(|_| 0.0)),
            g: crate::model::SourceG::GradientPower { c: 0.0, gamma: 2.0 },
        };
        let p = ModelParams::new(3.0, Tau::Elliptic, src).unwrap();
        let cfg = SolverConfig::default();
        let state = initial_state(&ScalarField::constant(g, 1.0), None, &p, &cfg).unwrap();
        assert_eq!(adapt_dt(&state, &p, &cfg).unwrap(), cfg.dt_max);
    }

    #[test]
    fn advective_limit_scales_with_chi() {
        let g = grid(8);
        let u = ScalarField::from_fn(g, |[x, _]| 1.0 + x);
        let v = ScalarField::from_fn(g, |[x, y]| x * x + y);
        let state = State { t: 0.0, u, v, dt_last: 0.0 };
        let cfg = SolverConfig::default();
        let a = dt_constraints(&state, &params(2.0, Tau::Parabolic, 1.0), &cfg).advective;
        let b = dt_constraints(&state, &params(4.0, Tau::Parabolic, 1.0), &cfg).advective;
        assert!((a / b - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sink_limit_predicate_holds() {
        let g = grid(8);
        let u = ScalarField::from_fn(g, |[x, y]| if x < 0.5 && y < 0.5 { 1e-3 } else { 1.0 });
        let v = ScalarField::constant(g, 1.0);
        let state = State { t: 0.0, u, v, dt_last: 0.0 };
        let p = params(1.0, Tau::Parabolic, 10.0);
        let cfg = SolverConfig {
            sink_fraction_cap: 0.9,
            dt_min: 1e-14,
            dt_init: 1e-14,
            ..SolverConfig::default()
        };
        let dt = adapt_dt(&state, &p, &cfg).unwrap();
        let grad = gradient_central(&state.u);
        for (idx, &ui) in state.u.values().iter().enumerate() {
            if ui > 1e-14 {
                let sink = eval_g(&p.source, grad.at(idx));
                assert!(dt * sink / ui <= cfg.sink_fraction_cap * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn step_floor_is_reported() {
        let g = grid(8);
        let u = ScalarField::from_fn(g, |[x, _]| if x < 0.5 { 1e-10 } else { 1.0 });
        let v = ScalarField::constant(g, 1.0);
        let state = State { t: 0.0, u, v, dt_last: 0.0 };
        let p = params(1.0, Tau::Parabolic, 100.0);
        let cfg = SolverConfig {
            dt_min: 1e-6,
            ..SolverConfig::default()
        };
        assert!(matches!(adapt_dt(&state, &p, &cfg), Err(SolverError::StepFloor { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            linear_tol: 1e-3,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            dt_min: 1.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
