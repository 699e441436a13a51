//! 1-D finite-volume simulator and diagnostics suite for a porous-medium
//! chemotaxis system with a volume-filling flux,
//!
//! ```text
//! du/dt = D lap(u^m) - chi div( u (K - u) grad c ),
//! -lap(c) + c = u,
//! zero-flux boundaries,
//! ```
//!
//! built to probe the stiff (large `m`) regime numerically: the pressure
//! `P = m/(m-1) u^(m-1)` concentrates on a congested set where a degenerate
//! elliptic relation `P [lap P + (K-1)(1-c)] = 0` emerges, while for
//! capacities `K <= 1` the pressure effect vanishes and the dynamics approach
//! a hyperbolic transport system solved here by a monotone scheme.
//!
//! The crate provides the mesh and operators ([`grid`]), the chemoattractant
//! solve ([`elliptic`]), the implicit porous-medium stepper ([`pme`]), the
//! limit solver ([`hyperbolic`]), measured quantities ([`diagnostics`]), run
//! orchestration ([`mod@run`], [`sweep`], [`config`], [`output`]) and built-in
//! verification ([`mod@selftest`], [`oracle`]).

pub mod config;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod hyperbolic;
pub mod oracle;
pub mod output;
pub mod pme;
pub mod run;
pub mod selftest;
pub mod sweep;

pub use config::{parse_config, InitPreset, RunConfig, SolverKind};
pub use diagnostics::{
    complementarity_residual, kinetic_two_valued_metric, mu_profile, pressure_sup_bound_check,
    record_diagnostics, DiagnosticsRecord, KineticGrid, MuProfile,
};
pub use elliptic::{solve_chemo, HelmholtzSystem};
pub use error::{Error, Result};
pub use grid::{norm, FaceField, Field, Grid1D, Norm};
pub use hyperbolic::step_hyperbolic;
pub use pme::{compute_pressure, stable_dt, step_pme, ModelParams, SimState, StepOutcome};
pub use run::{drive, run, run_hyperbolic, run_pme, RunResult, RunTotals, SnapshotRecord};
pub use selftest::{selftest, SelfTestReport};
pub use sweep::{
    compare_to_limit, run_sweep, run_sweep_with_options, sweep_csv, RowStatus, SweepOptions,
    SweepRow,
};
