//! Built-in verification: hand-checkable examples for every operation plus
//! the small dense-oracle equivalences, runnable from the CLI on any build.

use std::f64::consts::PI;

use crate::config::parse_config;
use crate::diagnostics::{
    complementarity_residual, kinetic_two_valued_metric, mu_profile, pressure_sup_bound_check,
    raw_indicator_defect, record_diagnostics, KineticGrid,
};
use crate::elliptic::solve_chemo;
use crate::grid::{norm, Field, Grid1D, Norm};
use crate::hyperbolic::step_hyperbolic;
use crate::oracle;
use crate::pme::{compute_pressure, stable_dt, step_pme, ModelParams, SimState};
use crate::run::{drive, run_pme};
use crate::config::SolverKind;
use crate::sweep::compare_to_limit;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
}

impl SelfTestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check {
            name,
            passed,
            detail,
        });
    }

    fn check(&mut self, name: &'static str, run: impl FnOnce() -> Result<String, String>) {
        match run() {
            Ok(detail) => self.record(name, true, detail),
            Err(detail) => self.record(name, false, detail),
        }
    }
}

fn ensure(cond: bool, detail: String) -> Result<String, String> {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Run every built-in check and report per-check pass/fail.
pub fn selftest() -> SelfTestReport {
    let mut report = SelfTestReport::default();
    let r = &mut report;

    r.check("grid: unit interval partition", || {
        let g = Grid1D::new(0.0, 1.0, 4).map_err(|e| e.to_string())?;
        let centers: Vec<f64> = g.centers().collect();
        ensure(
            g.h() == 0.25 && centers == vec![0.125, 0.375, 0.625, 0.875],
            format!("h = {}, centers = {centers:?}", g.h()),
        )
    });

    r.check("grid: gradient of linear field", || {
        let g = Grid1D::new(-1.0, 1.0, 8).map_err(|e| e.to_string())?;
        let f = g.sample(|x| x);
        let grad = g.face_gradient(&f).map_err(|e| e.to_string())?;
        let interior_ok = (1..8).all(|i| close(grad[i], 1.0, 1e-12));
        ensure(
            interior_ok && grad[0] == 0.0 && grad[8] == 0.0,
            "interior slope 1, boundary faces 0".to_string(),
        )
    });

    r.check("grid: divergence telescopes", || {
        let g = Grid1D::new(0.0, 1.0, 4).map_err(|e| e.to_string())?;
        let mut flux = crate::grid::FaceField::zeros(5);
        flux.values_mut()[2] = 1.0;
        let d = g.cell_divergence(&flux).map_err(|e| e.to_string())?;
        let total: f64 = d.iter().sum::<f64>() * g.h();
        ensure(
            d[1] == 4.0 && d[2] == -4.0 && total.abs() < 1e-13,
            format!("divergence {:?}, total {total:e}", d.values()),
        )
    });

    r.check("grid: norms", || {
        let g = Grid1D::new(0.0, 1.0, 2).map_err(|e| e.to_string())?;
        let f = Field::new(vec![3.0, -4.0]);
        let l2 = norm(&f, &g, Norm::L2);
        let ones = Field::constant(2, 1.0);
        ensure(
            close(l2, 12.5f64.sqrt(), 1e-13)
                && close(norm(&ones, &g, Norm::L1), 1.0, 1e-13)
                && norm(&ones, &g, Norm::LInf) == 1.0,
            format!("l2 = {l2}"),
        )
    });

    r.check("chemo: constant fixed point", || {
        let g = Grid1D::new(0.0, 1.0, 32).map_err(|e| e.to_string())?;
        let c = solve_chemo(&Field::constant(32, 1.0), &g).map_err(|e| e.to_string())?;
        let err = c.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        ensure(err < 1e-13, format!("max deviation {err:e}"))
    });

    r.check("chemo: cosine analytic solution", || {
        let g = Grid1D::new(0.0, 1.0, 200).map_err(|e| e.to_string())?;
        let u = g.sample(|x| (PI * x).cos());
        let c = solve_chemo(&u, &g).map_err(|e| e.to_string())?;
        let err = g
            .centers()
            .enumerate()
            .map(|(i, x)| (c[i] - (PI * x).cos() / (1.0 + PI * PI)).abs())
            .fold(0.0f64, f64::max);
        ensure(err < 1e-3, format!("max error {err:e} (bound 1e-3)"))
    });

    r.check("chemo: dense elimination oracle", || {
        let g = Grid1D::new(0.0, 1.0, 16).map_err(|e| e.to_string())?;
        let u = g.sample(|x| 0.3 + 0.5 * (7.0 * x).sin().abs());
        let c = solve_chemo(&u, &g).map_err(|e| e.to_string())?;
        let c_ref = oracle::dense_chemo_solve(&u, &g);
        let dev = (0..16).map(|i| (c[i] - c_ref[i]).abs()).fold(0.0, f64::max);
        ensure(dev <= 1e-12, format!("max deviation {dev:e}"))
    });

    r.check("pressure law values", || {
        let one = compute_pressure(&Field::constant(1, 1.0), 2.0).map_err(|e| e.to_string())?;
        let zero = compute_pressure(&Field::zeros(1), 5.0).map_err(|e| e.to_string())?;
        let half = compute_pressure(&Field::constant(1, 0.5), 3.0).map_err(|e| e.to_string())?;
        ensure(
            one[0] == 2.0 && zero[0] == 0.0 && close(half[0], 0.375, 1e-15),
            format!("P(1; m=2) = {}, P(0) = {}, P(0.5; m=3) = {}", one[0], zero[0], half[0]),
        )
    });

    r.check("stable dt: cap and formula", || {
        let g = Grid1D::new(0.0, 1.0, 100).map_err(|e| e.to_string())?;
        let params = ModelParams {
            cfl: 0.5,
            dt_max_cap: 1.0,
            ..ModelParams::default()
        };
        let quiet = SimState::from_density(0.0, Field::constant(100, 0.4), &params, &g)
            .map_err(|e| e.to_string())?;
        let dt_quiet = stable_dt(&quiet, &params, &g);
        let advected = SimState {
            time: 0.0,
            density: Field::zeros(100),
            chemo: g.sample(|x| 2.0 * x),
            pressure: Field::zeros(100),
        };
        let dt = stable_dt(&advected, &params, &g);
        ensure(
            dt_quiet == 1.0 && close(dt, 0.0025, 1e-15),
            format!("quiet dt {dt_quiet}, advected dt {dt}"),
        )
    });

    r.check("pme step: saturated and vacuum fixed points", || {
        let g = Grid1D::new(0.0, 1.0, 16).map_err(|e| e.to_string())?;
        let params = ModelParams::default();
        let full = SimState::from_density(0.0, Field::constant(16, 1.0), &params, &g)
            .map_err(|e| e.to_string())?;
        let out = step_pme(&full, &params, &g, 1e-2).map_err(|e| e.to_string())?;
        let empty = SimState::from_density(0.0, Field::zeros(16), &params, &g)
            .map_err(|e| e.to_string())?;
        let out0 = step_pme(&empty, &params, &g, 1e-2).map_err(|e| e.to_string())?;
        ensure(
            out.state.density == full.density && out0.state.density == empty.density,
            "both profiles unchanged".to_string(),
        )
    });

    r.check("pme step: dense Newton oracle (n=8)", || {
        let g = Grid1D::new(0.0, 1.0, 8).map_err(|e| e.to_string())?;
        let params = ModelParams {
            m: 4.0,
            chi: 10.0,
            ..ModelParams::default()
        };
        let u0 = g.sample(|x| 0.5 - 0.1 * (PI * x).cos());
        let state =
            SimState::from_density(0.0, u0, &params, &g).map_err(|e| e.to_string())?;
        let dt = stable_dt(&state, &params, &g);
        let out = step_pme(&state, &params, &g, dt).map_err(|e| e.to_string())?;
        let reference = oracle::dense_pme_trajectory(state.density.values(), &params, &g, &[dt])
            .map_err(|e| e.to_string())?;
        let dev = out
            .state
            .density
            .iter()
            .zip(reference[0].iter())
            .map(|(a, &b)| (a - b).abs())
            .fold(0.0, f64::max)
            / 1.0;
        ensure(dev <= 1e-10, format!("max deviation {dev:e}"))
    });

    r.check("run: zero horizon returns initial data", || {
        let cfg = parse_config("n_cells=64\nt_final=0\nsnapshot_times=0").map_err(|e| e.to_string())?;
        let out = run_pme(&cfg).map_err(|e| e.to_string())?;
        ensure(
            out.snapshots.len() == 1 && out.n_steps == 0,
            format!("{} snapshots, {} steps", out.snapshots.len(), out.n_steps),
        )
    });

    r.check("run: cosine initial mass is the mean", || {
        let cfg = parse_config("n_cells=200\nt_final=0\nsnapshot_times=0").map_err(|e| e.to_string())?;
        let out = run_pme(&cfg).map_err(|e| e.to_string())?;
        ensure(
            close(out.initial_mass, 0.5, 1e-13),
            format!("mass {}", out.initial_mass),
        )
    });

    r.check("hyperbolic: fixed points and flux-loop oracle", || {
        let g = Grid1D::new(0.0, 1.0, 24).map_err(|e| e.to_string())?;
        let params = ModelParams {
            chi: 15.0,
            ..ModelParams::default()
        };
        let flat = SimState::from_density(0.0, Field::constant(24, 0.5), &params, &g)
            .map_err(|e| e.to_string())?;
        let out_flat = step_hyperbolic(&flat, &params, &g, 1e-3).map_err(|e| e.to_string())?;
        // the solved chemoattractant is constant only to roundoff, so the
        // velocity carries fp dust
        let moved = out_flat
            .state
            .density
            .iter()
            .zip(flat.density.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved > 1e-13 {
            return Err(format!("constant state moved by {moved:e}"));
        }

        let u0 = g.sample(|x| 0.5 - 0.01 * (PI * x).cos());
        let state = SimState::from_density(0.0, u0, &params, &g).map_err(|e| e.to_string())?;
        let state = SimState {
            pressure: Field::zeros(24),
            ..state
        };
        let dt = stable_dt(&state, &params, &g);
        let stepped = step_hyperbolic(&state, &params, &g, dt).map_err(|e| e.to_string())?;
        let reference = oracle::loop_hyperbolic_step(
            state.density.values(),
            state.chemo.values(),
            &params,
            &g,
            dt,
        );
        let dev = stepped
            .state
            .density
            .iter()
            .zip(reference.iter())
            .map(|(a, &b)| (a - b).abs())
            .fold(0.0, f64::max);
        ensure(dev <= 1e-12, format!("max deviation {dev:e}"))
    });

    r.check("diagnostics: flat state record", || {
        let g = Grid1D::new(0.0, 1.0, 20).map_err(|e| e.to_string())?;
        let params = ModelParams::default();
        let s = SimState::from_density(0.0, Field::constant(20, 0.5), &params, &g)
            .map_err(|e| e.to_string())?;
        let rec = record_diagnostics(&s, &params, &g, 1e-2);
        ensure(
            rec.u_min == 0.5
                && rec.u_max == 0.5
                && rec.excess_sat_l2_sq_increment == 0.0
                && rec.defect_increment == 0.0,
            format!("record {rec:?}"),
        )
    });

    r.check("diagnostics: overfilled excess saturation", || {
        let g = Grid1D::new(0.0, 1.0, 10).map_err(|e| e.to_string())?;
        let params = ModelParams {
            capacity: 2.0,
            ..ModelParams::default()
        };
        let s = SimState::from_density(0.0, Field::constant(10, 1.5), &params, &g)
            .map_err(|e| e.to_string())?;
        let rec = record_diagnostics(&s, &params, &g, 1.0);
        ensure(
            close(rec.excess_sat_l2_sq_increment, 0.25, 1e-13),
            format!("increment {}", rec.excess_sat_l2_sq_increment),
        )
    });

    r.check("diagnostics: complementarity residual degeneracies", || {
        let g = Grid1D::new(0.0, 1.0, 12).map_err(|e| e.to_string())?;
        let params = ModelParams::default();
        let mut s = SimState::from_density(0.0, g.sample(|x| 0.2 + 0.3 * x), &params, &g)
            .map_err(|e| e.to_string())?;
        s.pressure = Field::zeros(12);
        let (_, vacuum_norm) = complementarity_residual(&s, &params, &g);
        let sat = SimState::from_density(0.0, Field::constant(12, 1.0), &params, &g)
            .map_err(|e| e.to_string())?;
        let (_, sat_norm) = complementarity_residual(&sat, &params, &g);
        ensure(
            vacuum_norm == 0.0 && sat_norm < 1e-12,
            format!("vacuum {vacuum_norm:e}, saturated {sat_norm:e}"),
        )
    });

    r.check("diagnostics: kinetic metric", || {
        let g = Grid1D::new(0.0, 1.0, 30).map_err(|e| e.to_string())?;
        let kg = KineticGrid::with_defaults(1.0);
        let flat = kinetic_two_valued_metric(&Field::constant(30, 0.4), &g, &kg);

        let g2 = Grid1D::new(0.0, 1.0, 2).map_err(|e| e.to_string())?;
        let mixed = Field::new(vec![0.0, 1.0]);
        let metric = kinetic_two_valued_metric(&mixed, &g2, &kg);
        let raw = raw_indicator_defect(&mixed, &kg);
        ensure(
            flat == 0.0 && raw == 0.0 && metric > 0.2 && metric < 0.3,
            format!("flat {flat}, mixed {metric}, raw {raw}"),
        )
    });

    r.check("diagnostics: mu profile trivials", || {
        let g = Grid1D::new(0.0, 1.0, 14).map_err(|e| e.to_string())?;
        let sup = ModelParams {
            capacity: 2.0,
            ..ModelParams::default()
        };
        let mut s = SimState::from_density(0.0, Field::constant(14, 0.4), &sup, &g)
            .map_err(|e| e.to_string())?;
        s.pressure = Field::zeros(14);
        let prof = mu_profile(&s, &sup, &g, 1e-9);
        let empty = prof.pressure_support.iter().all(|&b| !b);

        let crit = ModelParams::default();
        let sat = SimState::from_density(0.0, Field::constant(14, 1.0), &crit, &g)
            .map_err(|e| e.to_string())?;
        let prof_sat = mu_profile(&sat, &crit, &g, crate::diagnostics::default_mu_eps(&sat));
        let mu_ok = prof_sat
            .pressure_support
            .iter()
            .enumerate()
            .all(|(i, &on)| !on || prof_sat.mu[i].abs() < 1e-10);
        ensure(
            empty && mu_ok && prof_sat.degenerate,
            "empty support without pressure; zero profile on saturated critical state".to_string(),
        )
    });

    r.check("diagnostics: pressure sup bound", || {
        let p2 = ModelParams {
            m: 2.0,
            capacity: 0.6,
            ..ModelParams::default()
        };
        let p20 = ModelParams {
            m: 20.0,
            capacity: 0.6,
            ..ModelParams::default()
        };
        let b2 = pressure_sup_bound_check(&p2).map_err(|e| e.to_string())?;
        let b20 = pressure_sup_bound_check(&p20).map_err(|e| e.to_string())?;
        let rejected = pressure_sup_bound_check(&ModelParams::default()).is_err();
        ensure(
            close(b2, 1.2, 1e-14) && close(b20, 6.408e-5, 1e-7) && rejected,
            format!("bounds {b2}, {b20:e}"),
        )
    });

    r.check("config: defaults and validation", || {
        let cfg = parse_config("n_cells=100\nm=2\nK=1\nt_final=1").map_err(|e| e.to_string())?;
        let bad = parse_config("K=-1\nt_final=1");
        let bad_named = matches!(bad, Err(crate::error::Error::Config { ref key, .. }) if key == "K");
        ensure(
            cfg.params.chi == 1.0 && cfg.params.diffusivity == 1.0 && cfg.x_max == 1.0 && bad_named,
            "defaults applied; bad capacity names its key".to_string(),
        )
    });

    r.check("compare_to_limit: trivial distances", || {
        let cfg = parse_config("n_cells=40\nchi=5\nt_final=0.01\nsnapshot_times=0.01")
            .map_err(|e| e.to_string())?;
        let g = cfg.grid().map_err(|e| e.to_string())?;
        let run = drive(&cfg, SolverKind::Hyperbolic, |_| {}).map_err(|e| e.to_string())?;
        let snaps: Vec<SimState> = run.snapshots.iter().map(|s| s.state.clone()).collect();
        let zero = compare_to_limit(&snaps, &snaps, &g, 1.0).map_err(|e| e.to_string())?;

        let mut shifted = snaps.clone();
        for s in &mut shifted {
            s.density = s.density.map(|v| v + 0.1);
        }
        let d = compare_to_limit(&shifted, &snaps, &g, 1.0).map_err(|e| e.to_string())?;
        ensure(
            zero[0].1 == 0.0 && close(d[0].1, 0.1, 1e-12),
            format!("self distance {}, offset distance {}", zero[0].1, d[0].1),
        )
    });

    report
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_builtin_check_passes() {
        let report = super::selftest();
        for check in &report.checks {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
        assert!(report.checks.len() >= 20);
    }
}
