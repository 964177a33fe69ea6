//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Three operations are exposed: an interactive 2D simulation that can be
//! stepped and rendered, a γ exponent report, and the logistic constants of
//! a source.

use ksgd_core::domain::{integrate, linf_norm};
use ksgd_core::experiments::{q1_base_scenario, InitialKind};
use ksgd_core::model::{
    derive_logistic_constants, find_admissible_p, gamma_admissible, gamma_threshold,
    theta_check_exponent, SourceF,
};
use ksgd_core::solvers::{adapt_dt, initial_state, step};
use ksgd_core::{GridSpec, ModelParams, SolverConfig, SourceSpec, State, Tau};
use wasm_bindgen::prelude::*;

/// A 2D run on the unit square, advanced a few steps per animation frame.
#[wasm_bindgen]
pub struct Simulation {
    params: ModelParams,
    cfg: SolverConfig,
    state: State,
    mass0: f64,
    status: String,
}

#[wasm_bindgen]
impl Simulation {
    /// See [`Simulation::try_new`].
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, chi: f64, c: f64, gamma: f64, tau: u8, seed: u32) -> Result<Simulation, JsError> {
        Self::try_new(n, chi, c, gamma, tau, seed).map_err(|e| JsError::new(&e))
    }

    /// Advances up to `k` adaptive steps; stops early on blow-up or failure.
    pub fn step(&mut self, k: u32) -> String {
        for _ in 0..k {
            if self.status != "Running" {
                break;
            }
            let outcome = adapt_dt(&self.state, &self.params, &self.cfg)
                .and_then(|dt| step(&self.state, &self.params, &self.cfg, dt));
            match outcome {
                Ok(report) => {
                    self.state = report.state;
                    if linf_norm(&self.state.u) >= self.cfg.blowup_threshold {
                        self.status = "BlowUpDetected".into();
                    }
                }
                Err(e) => self.status = format!("Failed: {e}"),
            }
        }
        self.status.clone()
    }

    /// `u` as RGBA pixels (one per cell, row-major, y up), scaled to the
    /// current maximum.
    pub fn render_rgba(&self) -> Vec<u8> {
        colour_map(self.state.u.values(), self.state.u.grid().n())
    }

    pub fn n(&self) -> usize {
        self.state.u.grid().n()
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn linf(&self) -> f64 {
        linf_norm(&self.state.u)
    }

    pub fn mass(&self) -> f64 {
        integrate(&self.state.u)
    }

    pub fn initial_mass(&self) -> f64 {
        self.mass0
    }

    pub fn status(&self) -> String {
        self.status.clone()
    }
}

impl Simulation {
    /// Damping-study setup (bump on a floor, `f(u) = u − 0.5 u^{1.5}`) with
    /// the given sensitivity, damping coefficient and exponent. `seed > 0`
    /// replaces the bump with seeded noise around 1.
    pub fn try_new(n: usize, chi: f64, c: f64, gamma: f64, tau: u8, seed: u32) -> Result<Simulation, String> {
        let mut s = q1_base_scenario();
        s.grid = GridSpec::new(2, n, 1.0).map_err(err)?;
        let tau = Tau::from_int(tau as i64).ok_or_else(|| "tau must be 0 or 1".to_string())?;
        s.params = ModelParams::new(chi, tau, SourceSpec::logistic_gradpower(1.0, 0.5, 1.0, 1.5, c, gamma))
            .map_err(err)?;
        if seed > 0 {
            s.u0 = InitialKind::SeededNoise { seed: seed as u64, floor: 0.5, amplitude: 1.0 };
        }
        let (u0, v0) = s.initial_fields();
        let state = initial_state(&u0, v0.as_ref(), &s.params, &s.cfg).map_err(err)?;
        Ok(Simulation {
            mass0: integrate(&state.u),
            params: s.params,
            cfg: s.cfg,
            state,
            status: "Running".into(),
        })
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Blue-to-red ramp; rows are flipped so `y` points up on the canvas.
pub fn colour_map(values: &[f64], n: usize) -> Vec<u8> {
    let hi = values.iter().copied().fold(0.0f64, f64::max);
    let mut out = Vec::with_capacity(values.len() * 4);
    for row in (0..n).rev() {
        for &x in &values[row * n..(row + 1) * n] {
            let s = if hi > 0.0 { (x / hi).clamp(0.0, 1.0) } else { 0.0 };
            out.extend_from_slice(&[(255.0 * s) as u8, (60.0 * (1.0 - s)) as u8, (255.0 * (1.0 - s)) as u8, 255]);
        }
    }
    out
}

/// Plain-text report on whether `γ` is admissible in dimension `n_dim` and
/// which exponent `p` makes the bootstrap work.
#[wasm_bindgen]
pub fn gamma_report(n_dim: usize, gamma: f64) -> String {
    let mut out = format!(
        "N = {n_dim}, gamma = {gamma}\nthreshold 2N/(N+1) = {}\nadmissible (threshold < gamma <= 2): {}\n",
        gamma_threshold(n_dim),
        gamma_admissible(n_dim, gamma)
    );
    match find_admissible_p(n_dim, gamma) {
        Ok(Some(e)) => {
            out += &format!("p = {}\ntheta = {}\nsecond condition = {}\n", e.p, e.theta, e.second);
            if let Ok(t) = theta_check_exponent(e.p, n_dim) {
                out += &format!("theta_check = {t}\n");
            }
        }
        Ok(None) => out += "no admissible p on the search grid\n",
        Err(e) => out += &format!("exponent search failed: {e}\n"),
    }
    out
}

/// Constants `C1` and `C_f` of `f(s) = a s^alpha − b s^beta` with sink
/// weight `c2`, as text.
#[wasm_bindgen]
pub fn logistic_report(a: f64, b: f64, alpha: f64, beta: f64, c2: f64) -> String {
    match derive_logistic_constants(&SourceF::PolynomialLogistic { a, b, alpha, beta }, c2) {
        Ok(k) => format!("C1 = {}\nC_f = {}\n", k.c1, k.c_f),
        Err(e) => format!("not derivable: {e}\n"),
    }
}
