//! Online monitors for the a priori estimates.
//!
//! Every quantity is a continuum integral evaluated on the discrete fields
//! with the [`crate::domain`] operators; nothing here feeds back into the
//! dynamics. The Lᵖ and energy monitors report empirical values only: the
//! interpolation and maximal-regularity constants behind the analytic bounds
//! are not computable, so no quantitative comparison against them is made.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::domain::{gradient_central, integrate, laplacian_neumann, linf_norm, lp_norm, GridSpec, ScalarField};
use crate::model::{eval_g, ModelParams, Tau};
use crate::solvers::{explicit_tendency, State};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("maximal-regularity accumulators need a tau = 1 run")]
    EllipticRun,
    #[error("need at least two dense frames")]
    NotDense,
    #[error("exponent must satisfy p >= 1 (got {0})")]
    BadExponent(f64),
}

/// What the run records besides the scalar series.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    /// Exponents for the `lp_u` columns; the first one also drives the
    /// energy-term monitors.
    pub p_list: Vec<f64>,
    /// Keep every state of the run (memory `O(steps · n^dim)`).
    pub dense: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            p_list: vec![2.0],
            dense: false,
        }
    }
}

impl MonitorConfig {
    pub fn primary_p(&self) -> f64 {
        self.p_list.first().copied().unwrap_or(2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `∫u`.
    pub mass: f64,
    /// `‖u‖_{L^p}` for each configured p.
    pub lp_u: Vec<f64>,
    pub linf_u: f64,
    pub linf_v: f64,
    /// `‖v‖∞ + max|∇v|`.
    pub w1inf_v: f64,
    pub min_u: f64,
    /// `∫|∇(u^{p/2})|²`.
    pub grad_energy_p: f64,
    /// `∫u^{p−1} g(∇u)`.
    pub sink_integral: f64,
    /// `−χ(p−1)∫u^p Δ_h v`.
    pub taxis_term: f64,
    /// `∫u^{p+1}`.
    pub pplus1: f64,
    /// `∫|∇u^{(p−1+γ)/γ}|^γ`, the quantity the damping term controls.
    pub damping_gradient: f64,
    pub msr_lhs: f64,
    pub msr_rhs: f64,
    /// Cumulative clipped mass up to `t`.
    pub clip_mass: f64,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.mass,
            self.linf_u,
            self.linf_v,
            self.w1inf_v,
            self.min_u,
            self.grad_energy_p,
            self.sink_integral,
            self.taxis_term,
            self.pplus1,
            self.damping_gradient,
            self.msr_lhs,
            self.msr_rhs,
            self.clip_mass,
        ]
        .iter()
        .chain(&self.lp_u)
        .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSeries {
    pub records: Vec<DiagnosticsRecord>,
    pub p_list: Vec<f64>,
    pub grid: GridSpec,
    pub tau: Tau,
    pub params_hash: u64,
}

impl DiagnosticsSeries {
    pub fn new(grid: GridSpec, params: &ModelParams, p_list: &[f64]) -> Self {
        let mut hasher = DefaultHasher::new();
        format!("{params:?}").hash(&mut hasher);
        Self {
            records: Vec::new(),
            p_list: p_list.to_vec(),
            grid,
            tau: params.tau,
            params_hash: hasher.finish(),
        }
    }

    /// Appends a record; times must increase strictly.
    pub fn push(&mut self, record: DiagnosticsRecord) {
        debug_assert!(record.t > self.last_t() || self.records.is_empty());
        self.records.push(record);
    }

    pub fn last_t(&self) -> f64 {
        self.records.last().map_or(f64::NEG_INFINITY, |r| r.t)
    }

    pub fn sup_linf_u(&self) -> f64 {
        self.records.iter().map(|r| r.linf_u).fold(0.0, f64::max)
    }

    pub fn sup_mass(&self) -> f64 {
        self.records.iter().map(|r| r.mass).fold(0.0, f64::max)
    }

    /// Column of `lp_u` for the exponent at `index` in the p list.
    pub fn lp_column(&self, index: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.lp_u[index]).collect()
    }
}

/// Evaluates every monitor on one state. `p_list[0]` (or 2 when empty) is the
/// exponent of the energy terms.
pub fn record(state: &State, params: &ModelParams, p_list: &[f64]) -> DiagnosticsRecord {
    let u = &state.u;
    let v = &state.v;
    let p = p_list.first().copied().unwrap_or(2.0);
    let vol = u.grid().cell_volume();
    let gamma = params.source.gamma();

    let grad_u = gradient_central(u);
    let grad_v = gradient_central(v);
    let lap_v = laplacian_neumann(v);

    let half_power = u.map(|x| x.max(0.0).powf(0.5 * p));
    let grad_half = gradient_central(&half_power);
    let grad_energy_p: f64 = vol
        * (0..u.values().len())
            .map(|i| grad_half.magnitude(i).powi(2))
            .sum::<f64>();

    let damp_power = u.map(|x| x.max(0.0).powf((p - 1.0 + gamma) / gamma));
    let grad_damp = gradient_central(&damp_power);
    let damping_gradient: f64 = vol
        * (0..u.values().len())
            .map(|i| grad_damp.magnitude(i).powf(gamma))
            .sum::<f64>();

    let mut sink_integral = 0.0;
    let mut taxis = 0.0;
    let mut pplus1 = 0.0;
    for (i, &ui) in u.values().iter().enumerate() {
        let up = ui.max(0.0);
        sink_integral += up.powf(p - 1.0) * eval_g(&params.source, grad_u.at(i));
        taxis += up.powf(p) * lap_v.values()[i];
        pplus1 += up.powf(p + 1.0);
    }

    let linf_v = linf_norm(v);
    DiagnosticsRecord {
        t: state.t,
        mass: integrate(u),
        lp_u: p_list
            .iter()
            .map(|&q| lp_norm(u, q).unwrap_or(f64::NAN))
            .collect(),
        linf_u: linf_norm(u),
        linf_v,
        w1inf_v: linf_v + grad_v.max_magnitude(),
        min_u: u.min(),
        grad_energy_p,
        sink_integral: vol * sink_integral,
        taxis_term: -params.chi * (p - 1.0) * vol * taxis,
        pplus1: vol * pplus1,
        damping_gradient,
        msr_lhs: 0.0,
        msr_rhs: 0.0,
        clip_mass: 0.0,
    }
}

/// Stored state for dense-output analysis. `dt` is the step that produced
/// the frame (0 for the initial frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub dt: f64,
    pub u: ScalarField,
    pub v: ScalarField,
}

impl Frame {
    pub fn capture(state: &State, dt: f64) -> Self {
        Self {
            t: state.t,
            dt,
            u: state.u.clone(),
            v: state.v.clone(),
        }
    }
}

/// Running trapezoidal values of
/// `∫₀ᵗ eˢ ∫|Δv|^q ds` and `∫₀ᵗ eˢ ∫|u|^q ds`.
#[derive(Debug, Clone)]
pub struct MsrAccumulator {
    q: f64,
    last: Option<(f64, f64, f64)>,
    lhs: f64,
    rhs: f64,
}

impl MsrAccumulator {
    pub fn new(q: f64) -> Self {
        Self {
            q,
            last: None,
            lhs: 0.0,
            rhs: 0.0,
        }
    }

    pub fn push_fields(&mut self, t: f64, u: &ScalarField, v: &ScalarField) -> (f64, f64) {
        let vol = u.grid().cell_volume();
        let lap = laplacian_neumann(v);
        let weight = t.exp();
        let lhs_now = weight * vol * lap.values().iter().map(|x| x.abs().powf(self.q)).sum::<f64>();
        let rhs_now = weight * vol * u.values().iter().map(|x| x.abs().powf(self.q)).sum::<f64>();
        if let Some((t_prev, lhs_prev, rhs_prev)) = self.last {
            let half = 0.5 * (t - t_prev);
            self.lhs += half * (lhs_prev + lhs_now);
            self.rhs += half * (rhs_prev + rhs_now);
        }
        self.last = Some((t, lhs_now, rhs_now));
        (self.lhs, self.rhs)
    }

    pub fn push(&mut self, state: &State) -> (f64, f64) {
        self.push_fields(state.t, &state.u, &state.v)
    }

    /// Empirical stand-in for the maximal-regularity constant,
    /// `lhs / (1 + rhs)`.
    pub fn ratio(&self) -> f64 {
        self.lhs / (1.0 + self.rhs)
    }
}

/// Running `(t, lhs, rhs)` over dense frames of a `τ = 1` run.
pub fn msr_accumulate(
    frames: &[Frame],
    tau: Tau,
    q: f64,
) -> Result<Vec<(f64, f64, f64)>, DiagnosticsError> {
    if tau != Tau::Parabolic {
        return Err(DiagnosticsError::EllipticRun);
    }
    if !(q >= 1.0) {
        return Err(DiagnosticsError::BadExponent(q));
    }
    let mut acc = MsrAccumulator::new(q);
    Ok(frames
        .iter()
        .map(|f| {
            let (l, r) = acc.push_fields(f.t, &f.u, &f.v);
            (f.t, l, r)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassCheck {
    pub pass: bool,
    /// Time of the first record above `m0 (1 + headroom)`.
    pub first_violation: Option<f64>,
    /// `max_t mass(t) / m0`.
    pub max_ratio: f64,
}

/// `mass(t) ≤ m0 (1 + headroom)` on every record.
pub fn check_mass_bound(series: &DiagnosticsSeries, m0: f64, headroom: f64) -> MassCheck {
    let limit = m0 * (1.0 + headroom);
    let first_violation = series.records.iter().find(|r| r.mass > limit).map(|r| r.t);
    let max_ratio = series.records.iter().map(|r| r.mass / m0).fold(0.0, f64::max);
    MassCheck {
        pass: first_violation.is_none(),
        first_violation,
        max_ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpBoundCheck {
    pub sup: f64,
    pub initial: f64,
    pub last: f64,
    /// Final quarter of the samples never rises more than 1% above an earlier
    /// sample of that quarter.
    pub tail_nonincreasing: bool,
}

/// Supremum over time of `‖u‖_{L^p}` and the tail-monotonicity flag. `p` must
/// be one of the series' configured exponents.
pub fn check_lp_bound(series: &DiagnosticsSeries, p: f64) -> Option<LpBoundCheck> {
    let index = series.p_list.iter().position(|&q| q == p)?;
    let column = series.lp_column(index);
    let sup = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail_start = column.len() - column.len().div_ceil(4);
    let tail = &column[tail_start..];
    let mut running_min = f64::INFINITY;
    let mut tail_ok = true;
    for &x in tail {
        if x > running_min * 1.01 {
            tail_ok = false;
        }
        running_min = running_min.min(x);
    }
    Some(LpBoundCheck {
        sup,
        initial: *column.first()?,
        last: *column.last()?,
        tail_nonincreasing: tail_ok,
    })
}

/// Largest relative gap between the discrete slope of `∫u^p` and the testing
/// identity `p ∫u^{p−1}(Δu − χ∇·(u∇v) + f(u) − g(∇u))`.
///
/// The right-hand side is evaluated the way an IMEX Euler step sees it:
/// diffusion at the new density, the explicit terms at the old density with
/// the signal that drove the step. The gap is the time-discretisation
/// remainder and scales like `dt`. Pairs where both sides are below
/// `1e-12 ∫u^p` are skipped.
pub fn rhs_consistency(frames: &[Frame], params: &ModelParams, p: f64) -> Result<f64, DiagnosticsError> {
    if frames.len() < 2 {
        return Err(DiagnosticsError::NotDense);
    }
    if !(p >= 1.0) {
        return Err(DiagnosticsError::BadExponent(p));
    }
    let vol = frames[0].u.grid().cell_volume();
    let power_integral = |u: &ScalarField| vol * u.values().iter().map(|x| x.max(0.0).powf(p)).sum::<f64>();
    let mut worst: f64 = 0.0;
    for pair in frames.windows(2) {
        let (old, new) = (&pair[0], &pair[1]);
        let v_drive = match params.tau {
            Tau::Elliptic => &old.v,
            Tau::Parabolic => &new.v,
        };
        let diffusion = laplacian_neumann(&new.u);
        let explicit = explicit_tendency(&old.u, v_drive, params);
        let predicted = p * vol
            * old
                .u
                .values()
                .iter()
                .zip(diffusion.values().iter().zip(&explicit))
                .map(|(u, (d, e))| u.max(0.0).powf(p - 1.0) * (d + e))
                .sum::<f64>();
        let before = power_integral(&old.u);
        let slope = (power_integral(&new.u) - before) / new.dt;
        let scale = slope.abs().max(predicted.abs());
        if scale <= 1e-12 * before {
            continue;
        }
        worst = worst.max((slope - predicted).abs() / scale);
    }
    Ok(worst)
}

/// `∫u^p − 4((p−1)/p) ∫|∇u^{p/2}|²`; bounded above over fields of fixed mass.
pub fn gn_gap(u: &ScalarField, p: f64) -> f64 {
    let vol = u.grid().cell_volume();
    let lp = vol * u.values().iter().map(|x| x.max(0.0).powf(p)).sum::<f64>();
    let half = gradient_central(&u.map(|x| x.max(0.0).powf(0.5 * p)));
    let energy = vol * (0..u.values().len()).map(|i| half.magnitude(i).powi(2)).sum::<f64>();
    lp - 4.0 * (p - 1.0) / p * energy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SourceSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(tau: Tau) -> ModelParams {
        ModelParams::new(3.0, tau, SourceSpec::logistic_gradpower(1.0, 2.0, 1.0, 1.5, 0.7, 1.6)).unwrap()
    }

    fn random_state(n: usize, seed: u64) -> State {
        let grid = GridSpec::new(2, n, 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = ScalarField::new(grid, (0..grid.len()).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
        let v = ScalarField::new(grid, (0..grid.len()).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
        State { t: 0.5, u, v, dt_last: 0.0 }
    }

    #[test]
    fn homogeneous_record() {
        let grid = GridSpec::new(2, 6, 2.0).unwrap();
        let k = 1.7;
        let state = State {
            t: 0.0,
            u: ScalarField::constant(grid, k),
            v: ScalarField::constant(grid, k),
            dt_last: 0.0,
        };
        let rec = record(&state, &params(Tau::Elliptic), &[2.0, 3.0]);
        assert_eq!(rec.grad_energy_p, 0.0);
        assert_eq!(rec.taxis_term, 0.0);
        assert!((rec.lp_u[0] - k * 4.0_f64.powf(0.5)).abs() < 1e-12);
        assert!((rec.lp_u[1] - k * 4.0_f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn l1_column_equals_mass() {
        let state = random_state(7, 3);
        let rec = record(&state, &params(Tau::Elliptic), &[1.0, 2.0]);
        assert!((rec.lp_u[0] - rec.mass).abs() <= 1e-13 * rec.mass);
    }

    /// Independent recomputation of every field with explicit index loops.
    #[test]
    fn record_matches_brute_force() {
        let state = random_state(5, 11);
        let prm = params(Tau::Elliptic);
        let p = 2.5;
        let rec = record(&state, &prm, &[p]);
        let n = 5;
        let h = 1.3 / n as f64;
        let u = state.u.values();
        let v = state.v.values();
        let at = |f: &[f64], i: isize, j: isize| {
            let i = i.clamp(0, n as isize - 1) as usize;
            let j = j.clamp(0, n as isize - 1) as usize;
            f[j * n + i]
        };
        let grad = |f: &[f64], i: isize, j: isize| {
            [
                (at(f, i + 1, j) - at(f, i - 1, j)) / (2.0 * h),
                (at(f, i, j + 1) - at(f, i, j - 1)) / (2.0 * h),
            ]
        };
        let half: Vec<f64> = u.iter().map(|x| x.powf(p / 2.0)).collect();
        let gamma = 1.6;
        let damp: Vec<f64> = u.iter().map(|x| x.powf((p - 1.0 + gamma) / gamma)).collect();
        let (mut mass, mut lp, mut ge, mut dg, mut sink, mut taxis, mut pp1) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut linf_v, mut max_grad_v) = (0.0_f64, 0.0_f64);
        for j in 0..n as isize {
            for i in 0..n as isize {
                let ui = at(u, i, j);
                mass += ui;
                lp += ui.powf(p);
                let g = grad(&half, i, j);
                ge += g[0] * g[0] + g[1] * g[1];
                let g = grad(&damp, i, j);
                dg += (g[0] * g[0] + g[1] * g[1]).sqrt().powf(gamma);
                let gu = grad(u, i, j);
                sink += ui.powf(p - 1.0) * 0.7 * (gu[0] * gu[0] + gu[1] * gu[1]).sqrt().powf(gamma);
                let lap = (at(v, i + 1, j) + at(v, i - 1, j) + at(v, i, j + 1) + at(v, i, j - 1)
                    - 4.0 * at(v, i, j))
                    / (h * h);
                taxis += ui.powf(p) * lap;
                pp1 += ui.powf(p + 1.0);
                linf_v = linf_v.max(at(v, i, j).abs());
                let gv = grad(v, i, j);
                max_grad_v = max_grad_v.max((gv[0] * gv[0] + gv[1] * gv[1]).sqrt());
            }
        }
        let vol = h * h;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
        assert!(close(rec.mass, vol * mass));
        assert!(close(rec.lp_u[0], (vol * lp).powf(1.0 / p)));
        assert!(close(rec.grad_energy_p, vol * ge));
        assert!(close(rec.damping_gradient, vol * dg));
        assert!(close(rec.sink_integral, vol * sink));
        assert!(close(rec.taxis_term, -3.0 * (p - 1.0) * vol * taxis));
        assert!(close(rec.pplus1, vol * pp1));
        assert!(close(rec.w1inf_v, linf_v + max_grad_v));
    }

    #[test]
    fn power_mean_monotone_in_p() {
        for seed in 0..20 {
            let state = random_state(6, seed);
            let measure = state.u.grid().measure();
            let ps = [1.0, 1.5, 2.0, 3.0, 5.0];
            let rec = record(&state, &params(Tau::Elliptic), &ps);
            let normalised: Vec<f64> = ps.iter().zip(&rec.lp_u).map(|(p, l)| l / measure.powf(1.0 / p)).collect();
            for w in normalised.windows(2) {
                assert!(w[1] >= w[0] * (1.0 - 1e-14));
            }
        }
    }

    fn series_with(masses: &[f64]) -> DiagnosticsSeries {
        let grid = GridSpec::new(2, 4, 1.0).unwrap();
        let mut s = DiagnosticsSeries::new(grid, &params(Tau::Elliptic), &[2.0]);
        for (i, &m) in masses.iter().enumerate() {
            let state = State {
                t: i as f64,
                u: ScalarField::constant(grid, m),
                v: ScalarField::constant(grid, m),
                dt_last: 0.0,
            };
            s.push(record(&state, &params(Tau::Elliptic), &[2.0]));
        }
        s
    }

    #[test]
    fn mass_check_reports_first_violation() {
        let s = series_with(&[1.0, 1.5, 2.5, 3.0, 2.0]);
        let c = check_mass_bound(&s, 2.0, 0.0);
        assert!(!c.pass);
        assert_eq!(c.first_violation, Some(2.0));
        assert!(check_mass_bound(&s, 3.0, 0.0).pass);
        assert!(check_mass_bound(&s, 2.95, 0.02).pass);
    }

    #[test]
    fn lp_check_constant_and_tail() {
        let s = series_with(&[1.0; 8]);
        let c = check_lp_bound(&s, 2.0).unwrap();
        assert_eq!(c.sup, c.initial);
        assert!(c.tail_nonincreasing);
        let s = series_with(&[1.0, 2.0, 3.0, 2.0, 1.5, 1.4, 1.6, 1.7]);
        let c = check_lp_bound(&s, 2.0).unwrap();
        assert!(!c.tail_nonincreasing);
        assert!(check_lp_bound(&s, 7.0).is_none());
    }

    #[test]
    fn msr_constant_fields() {
        let grid = GridSpec::new(2, 4, 1.0).unwrap();
        let frames: Vec<Frame> = (0..=10)
            .map(|k| Frame {
                t: k as f64 * 0.1,
                dt: 0.1,
                u: ScalarField::constant(grid, 2.0),
                v: ScalarField::constant(grid, 2.0),
            })
            .collect();
        let acc = msr_accumulate(&frames, Tau::Parabolic, 3.0).unwrap();
        let (_, lhs, rhs) = *acc.last().unwrap();
        assert_eq!(lhs, 0.0);
        assert!(rhs > 0.0);
        assert_eq!(msr_accumulate(&frames, Tau::Elliptic, 3.0), Err(DiagnosticsError::EllipticRun));
    }

    /// `cos(π(i+½)/n)` profiles are exact eigenvectors of the mirror-ghost
    /// Laplacian, so `∫|Δ_h v|^q` is known in closed form and the weighted time
    /// integral is `A (eᵗ − 1)`.
    #[test]
    fn msr_matches_closed_form() {
        let n = 8;
        let grid = GridSpec::new(2, n, 1.0).unwrap();
        let h = grid.h();
        let lambda = 2.0 * (2.0 - 2.0 * (std::f64::consts::PI / n as f64).cos()) / (h * h);
        let v = ScalarField::from_fn(grid, |[x, y]| (std::f64::consts::PI * x).cos() * (std::f64::consts::PI * y).cos());
        let lap = laplacian_neumann(&v);
        for (l, x) in lap.values().iter().zip(v.values()) {
            assert!((l + lambda * x).abs() < 1e-9 * lambda);
        }
        let q = 3.0;
        let a_const = lambda.powf(q) * grid.cell_volume() * v.values().iter().map(|x| x.abs().powf(q)).sum::<f64>();
        let u = ScalarField::constant(grid, 1.5);
        let b_const = 1.5_f64.powf(q);
        let dt = 1e-3;
        let frames: Vec<Frame> = (0..=2000)
            .map(|k| Frame { t: k as f64 * dt, dt, u: u.clone(), v: v.clone() })
            .collect();
        let (t, lhs, rhs) = *msr_accumulate(&frames, Tau::Parabolic, q).unwrap().last().unwrap();
        let exact = t.exp() - 1.0;
        assert!((lhs / (a_const * exact) - 1.0).abs() < 1e-6);
        assert!((rhs / (b_const * exact) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn power_sum_bound_fuzz() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10_000 {
            let a: f64 = rng.gen_range(0.0..100.0);
            let b: f64 = rng.gen_range(0.0..100.0);
            let l: f64 = 3.0 - rng.gen_range(0.0..3.0);
            let (lhs, rhs) = crate::model::power_sum_bound(a, b, l);
            assert!(lhs <= rhs, "a={a} b={b} l={l}");
        }
    }

    /// Fixed-mass concentration family: the gap must not grow by more than a
    /// factor 2 as the bump sharpens.
    #[test]
    fn gn_gap_does_not_grow_under_concentration() {
        let grid = GridSpec::new(2, 64, 1.0).unwrap();
        let m0 = 1.0;
        let p = 2.0;
        let bump = |lambda: f64| {
            let raw = ScalarField::from_fn(grid, |[x, y]| {
                let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
                lambda * lambda * (-(lambda * lambda) * r2 / 0.02).exp()
            });
            let scale = m0 / integrate(&raw);
            raw.map(|x| x * scale)
        };
        let gaps: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|&l| gn_gap(&bump(l), p)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut sup = f64::NEG_INFINITY;
        for _ in 0..1000 {
            let raw = ScalarField::new(grid, (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
            let scale = m0 / integrate(&raw);
            sup = sup.max(gn_gap(&raw.map(|x| x * scale), p));
        }
        assert!(sup.is_finite());
        let reference = gaps[0].abs().max(1e-12);
        for g in &gaps[1..] {
            assert!(*g <= 2.0 * reference);
        }
    }
}
