//! Time-loop driver shared by the porous-medium and hyperbolic solvers:
//! advances with the advective stable dt (capped to hit snapshot times
//! exactly), streams one diagnostics record per step, and accumulates the
//! space-time totals the sweep harness reports.

use crate::config::{RunConfig, SolverKind};
use crate::diagnostics::{record_diagnostics, DiagnosticsRecord};
use crate::error::Result;
use crate::grid::Grid1D;
use crate::hyperbolic::step_hyperbolic;
use crate::pme::{advance_pme, stable_dt, SimState, StepOutcome};

/// Space-time accumulators over a run prefix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunTotals {
    /// Cumulative `int int |dP/dx|^2 dx dt`.
    pub grad_p_energy: f64,
    /// Cumulative `int int ((u-1)_+)^2 dx dt`; `sqrt` gives the excess
    /// saturation norm.
    pub excess_sat_sq: f64,
    /// Cumulative dissipation defect `int int (du/dx) d(u^m)/dx dx dt`.
    pub defect: f64,
    /// Max of `P` over all cells and all states seen so far.
    pub max_pressure: f64,
    /// Largest mass clipped away in any single step.
    pub max_step_clip_mass: f64,
    /// Total mass clipped over the run.
    pub clip_mass_total: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl RunTotals {
    fn fresh(state: &SimState) -> Self {
        RunTotals {
            max_pressure: state.pressure.max(),
            u_min: state.density.min(),
            u_max: state.density.max(),
            ..RunTotals::default()
        }
    }

    fn absorb_record(&mut self, rec: &DiagnosticsRecord) {
        self.grad_p_energy += rec.grad_p_energy_increment;
        self.excess_sat_sq += rec.excess_sat_l2_sq_increment;
        self.defect += rec.defect_increment;
    }

    fn absorb_state(&mut self, state: &SimState, clipped_mass: f64) {
        self.max_pressure = self.max_pressure.max(state.pressure.max());
        self.max_step_clip_mass = self.max_step_clip_mass.max(clipped_mass);
        self.clip_mass_total += clipped_mass;
        self.u_min = self.u_min.min(state.density.min());
        self.u_max = self.u_max.max(state.density.max());
    }

    /// Excess saturation norm `||(u-1)_+||_{L2(Q_t)}` of the prefix.
    pub fn excess_sat_total(&self) -> f64 {
        self.excess_sat_sq.sqrt()
    }
}

/// State snapshot plus the run totals accumulated up to its time.
#[derive(Debug, Clone)]
pub struct SnapshotRecord {
    pub state: SimState,
    pub cumulative: RunTotals,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub snapshots: Vec<SnapshotRecord>,
    pub totals: RunTotals,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub n_steps: usize,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn mass_drift_rel(&self) -> f64 {
        if self.initial_mass == 0.0 {
            self.final_mass.abs()
        } else {
            (self.final_mass - self.initial_mass).abs() / self.initial_mass.abs()
        }
    }
}

/// Advance a configuration from `t = 0` to `t_final`, calling `on_step` with
/// the pre-step state's diagnostics (and the dt actually taken) once per
/// accepted step.
pub fn drive(
    cfg: &RunConfig,
    kind: SolverKind,
    mut on_step: impl FnMut(&DiagnosticsRecord),
) -> Result<RunResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let params = &cfg.params;
    let u0 = cfg.initial_density(&grid)?;

    let mut warnings = Vec::new();
    let mean = u0.iter().sum::<f64>() / u0.len() as f64;
    if mean >= 1.0 {
        warnings.push(format!(
            "initial mean density {mean} is >= 1: the saturated limit regime assumes \
             total mass below |domain| (L1 smallness assumption)"
        ));
    }

    let mut state = SimState::from_density(0.0, u0, params, &grid)?;
    if kind == SolverKind::Hyperbolic {
        state.pressure = crate::hyperbolic::limit_pressure(&state.density, params)?;
    }
    let initial_mass = state.mass(&grid);
    let mut totals = RunTotals::fresh(&state);

    let mut snapshots = Vec::new();
    let mut next_snap = 0usize;
    emit_due_snapshots(cfg, &state, &totals, &mut snapshots, &mut next_snap);

    let mut n_steps = 0usize;
    while state.time < cfg.t_final - time_slack(cfg.t_final) {
        let dt_stable = stable_dt(&state, params, &grid);
        let event = next_event(cfg, next_snap, state.time);
        let remaining = event - state.time;
        let (dt_proposed, targets_event) = if dt_stable >= remaining {
            (remaining, true)
        } else {
            (dt_stable, false)
        };

        let outcome = advance(&state, cfg, kind, &grid, dt_proposed)?;
        let rec = record_diagnostics(&state, params, &grid, outcome.dt_taken);
        on_step(&rec);
        totals.absorb_record(&rec);

        let mut new_state = outcome.state;
        if targets_event && outcome.dt_taken == dt_proposed {
            // land on the event exactly rather than within fp drift of it
            new_state.time = event;
        }
        totals.absorb_state(&new_state, outcome.clipped_mass);
        state = new_state;
        n_steps += 1;

        emit_due_snapshots(cfg, &state, &totals, &mut snapshots, &mut next_snap);
    }

    let mut result = RunResult {
        final_mass: state.mass(&grid),
        snapshots,
        totals,
        initial_mass,
        n_steps,
        warnings,
    };
    if result.mass_drift_rel() > 1e-8 {
        result.warnings.push(format!(
            "relative mass drift {:.3e} exceeds the 1e-8 conservation budget",
            result.mass_drift_rel()
        ));
    }
    Ok(result)
}

/// Run the porous-medium solver over `cfg` (the config's `solver` field is
/// ignored here; use [`run`] to dispatch on it).
pub fn run_pme(cfg: &RunConfig) -> Result<RunResult> {
    drive(cfg, SolverKind::Pme, |_| {})
}

/// Run the hyperbolic limit solver over `cfg`.
pub fn run_hyperbolic(cfg: &RunConfig) -> Result<RunResult> {
    drive(cfg, SolverKind::Hyperbolic, |_| {})
}

/// Dispatch on the configured solver.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    drive(cfg, cfg.solver, |_| {})
}

fn advance(
    state: &SimState,
    cfg: &RunConfig,
    kind: SolverKind,
    grid: &Grid1D,
    dt: f64,
) -> Result<StepOutcome> {
    match kind {
        SolverKind::Pme => advance_pme(state, &cfg.params, grid, dt),
        SolverKind::Hyperbolic => step_hyperbolic(state, &cfg.params, grid, dt),
    }
}

fn next_event(cfg: &RunConfig, next_snap: usize, t: f64) -> f64 {
    match cfg.snapshot_times.get(next_snap) {
        Some(&ts) if ts > t => ts.min(cfg.t_final),
        _ => cfg.t_final,
    }
}

fn emit_due_snapshots(
    cfg: &RunConfig,
    state: &SimState,
    totals: &RunTotals,
    snapshots: &mut Vec<SnapshotRecord>,
    next_snap: &mut usize,
) {
    while let Some(&ts) = cfg.snapshot_times.get(*next_snap) {
        if (state.time - ts).abs() <= time_slack(ts.max(1.0)) {
            snapshots.push(SnapshotRecord {
                state: state.clone(),
                cumulative: *totals,
            });
            *next_snap += 1;
        } else {
            break;
        }
    }
}

fn time_slack(scale: f64) -> f64 {
    1e-12 * scale.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn zero_horizon_returns_initial_snapshot() {
        let cfg = parse_config("n_cells=50\nt_final=0\nsnapshot_times=0").unwrap();
        let out = drive(&cfg, SolverKind::Pme, |_| {}).unwrap();
        assert_eq!(out.n_steps, 0);
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.snapshots[0].state.time, 0.0);
        assert_eq!(out.mass_drift_rel(), 0.0);
        let g = cfg.grid().unwrap();
        let u0 = cfg.initial_density(&g).unwrap();
        assert_eq!(out.snapshots[0].state.density, u0);
    }

    #[test]
    fn snapshot_times_are_hit_exactly() {
        let cfg = parse_config(
            "n_cells=40\nm=2\nK=1\nchi=10\nt_final=0.05\nsnapshot_times=0,0.013,0.05",
        )
        .unwrap();
        let out = drive(&cfg, SolverKind::Pme, |_| {}).unwrap();
        let times: Vec<f64> = out.snapshots.iter().map(|s| s.state.time).collect();
        assert_eq!(times, vec![0.0, 0.013, 0.05]);
    }

    #[test]
    fn steps_are_streamed_with_consistent_dt() {
        let cfg = parse_config("n_cells=30\nchi=5\nt_final=0.03\nsnapshot_times=0.03").unwrap();
        let mut t_sum = 0.0;
        let mut count = 0usize;
        let out = drive(&cfg, SolverKind::Pme, |rec| {
            assert!(rec.t >= 0.0 && rec.t < 0.03);
            assert!(rec.mass > 0.0);
            t_sum = rec.t;
            count += 1;
        })
        .unwrap();
        assert_eq!(count, out.n_steps);
        assert!(t_sum < 0.03);
        assert!(out.totals.u_max <= 1.0 + 1e-12);
        assert!(out.totals.u_min >= -1e-12);
    }

    #[test]
    fn alpha_assumption_warning_is_emitted() {
        let cfg = parse_config("K=2\ninit_M=1.2\ninit_amp=0\nt_final=0\nsnapshot_times=0").unwrap();
        let out = drive(&cfg, SolverKind::Pme, |_| {}).unwrap();
        assert_eq!(out.warnings.len(), 1, "{:?}", out.warnings);

        let ok = parse_config("K=2\ninit_M=0.8\ninit_amp=0\nt_final=0\nsnapshot_times=0").unwrap();
        let out = drive(&ok, SolverKind::Pme, |_| {}).unwrap();
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn hyperbolic_run_conserves_mass_to_roundoff() {
        let cfg =
            parse_config("n_cells=60\nchi=20\nt_final=0.5\nsnapshot_times=0.25,0.5").unwrap();
        let out = drive(&cfg, SolverKind::Hyperbolic, |_| {}).unwrap();
        assert!(out.mass_drift_rel() <= 1e-12, "drift {:e}", out.mass_drift_rel());
        assert_eq!(out.snapshots.len(), 2);
        // limit pressure vanishes identically for K <= 1
        for snap in &out.snapshots {
            assert!(snap.state.pressure.iter().all(|v| v == 0.0));
        }
    }
}
