//! Finite-difference simulator for the Keller-Segel taxis system with a
//! logistic-type source and a gradient-dependent sink,
//!
//! ```text
//! u_t       = Δu − χ∇·(u∇v) + f(u) − g(∇u)
//! τ v_t     = Δv − v + u
//! ```
//!
//! on a rectangle with homogeneous Neumann walls, together with runtime
//! monitors for the classical a priori estimates (mass bound, Lᵖ bounds, the
//! testing-procedure energy terms) and a (c, γ) sweep harness probing whether
//! gradient damping suppresses aggregation.
//!
//! Module map:
//! - [`domain`]: grid, fields and Neumann stencil operators.
//! - [`model`]: source terms, hypothesis validation, constants and exponents.
//! - [`solvers`]: conjugate gradient, implicit solves and the IMEX stepper.
//! - [`diagnostics`]: per-record monitors and series checks.
//! - [`experiments`]: scenarios, ODE oracle, sweeps and the damping study.

pub mod diagnostics;
pub mod domain;
pub mod experiments;
pub mod model;
pub mod solvers;

pub use domain::{GridSpec, ScalarField, VectorField};
pub use model::{ModelParams, SourceSpec, Tau};
pub use solvers::{RunOutcome, RunStatus, SolverConfig, State};
