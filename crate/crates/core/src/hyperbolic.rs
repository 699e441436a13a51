//! Monotone finite-volume solver for the limiting hyperbolic system
//!
//! ```text
//! du/dt = -chi div( u (K - u) grad c ),   -lap(c) + c = u,
//! ```
//!
//! used as the reference limit profile for `K <= 1`. The face flux is local
//! Lax-Friedrichs: `f(u) = u (K - u)` is non-monotone (sonic point at `K/2`),
//! so plain velocity upwinding is not entropy-safe here, while LLF with the
//! face-frozen velocity is monotone under the advective CFL condition.

use crate::elliptic::solve_chemo;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::pme::{compute_pressure, stable_dt, ModelParams, SimState, StepOutcome};

/// Bound-preservation slack allowed on `0 <= u <= K` after a step.
pub const INVARIANT_TOL: f64 = 1e-12;

/// Pressure reported by the limit solver: identically zero for `K <= 1`
/// (the stiff pressure effect vanishes there); the pressure law otherwise.
/// The solver remains runnable for `K > 1` but is not a valid limit
/// reference in that regime.
pub fn limit_pressure(u: &Field, params: &ModelParams) -> Result<Field> {
    if params.capacity <= 1.0 {
        Ok(Field::zeros(u.len()))
    } else {
        compute_pressure(&u.map(|v| v.max(0.0)), params.m)
    }
}

/// One conservative update
/// `u_i <- u_i - (dt/h) (F_{i+1} - F_i)` with the local Lax-Friedrichs face
/// flux `F = 1/2 [ v (f(uL) + f(uR)) - alpha (uR - uL) ]`,
/// `alpha = |v| max(|K - 2 uL|, |K - 2 uR|)` and zero boundary faces.
pub fn step_hyperbolic(
    state: &SimState,
    params: &ModelParams,
    grid: &Grid1D,
    dt: f64,
) -> Result<StepOutcome> {
    let dt_stable = stable_dt(state, params, grid);
    if dt > dt_stable * (1.0 + 1e-9) {
        return Err(Error::CflViolation { dt, dt_stable });
    }

    let n = grid.n_cells();
    let h = grid.h();
    let u = state.density.values();
    let k = params.capacity;

    let grad_c = grid.face_gradient(&state.chemo)?;
    let flux = crate::pme::advective_flux(u, grad_c.values(), params);

    let lambda = dt / h;
    let next: Vec<f64> = (0..n).map(|i| u[i] - lambda * (flux[i + 1] - flux[i])).collect();

    let (lo, hi) = next
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo < -INVARIANT_TOL || hi > k + INVARIANT_TOL {
        return Err(Error::InvariantViolation(format!(
            "hyperbolic step left [0, K] at t = {}: range [{lo}, {hi}], K = {k}",
            state.time
        )));
    }

    let density = Field::new(next);
    if !density.is_finite() {
        return Err(Error::NonFinite {
            context: "step_hyperbolic density",
            time: state.time,
        });
    }
    let chemo = solve_chemo(&density, grid)?;
    let pressure = limit_pressure(&density, params)?;

    Ok(StepOutcome {
        state: SimState {
            time: state.time + dt,
            density,
            chemo,
            pressure,
        },
        dt_taken: dt,
        clipped_mass: 0.0,
        newton_iterations: 0,
    })
}
