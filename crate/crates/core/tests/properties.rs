//! Invariant stress tests over randomized (but seeded) parameter corners:
//! short runs across exponents, capacities and drift strengths, checking the
//! guarantees every solver run is supposed to keep.

use stiffpress::*;

struct Rng(u64);

impl Rng {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        (self.0.wrapping_mul(0x2545f4914f6cdd1d) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }
}

fn random_config(rng: &mut Rng) -> RunConfig {
    let params = ModelParams {
        m: rng.range(1.5, 50.0),
        capacity: rng.range(0.5, 2.5),
        chi: rng.range(0.0, 60.0),
        diffusivity: rng.range(0.2, 2.0),
        ..ModelParams::default()
    };
    let mean = rng.range(0.1, 0.9) * params.capacity.min(1.0);
    let amp = mean.min(params.capacity - mean) * rng.range(0.0, 0.5);
    let t_final = rng.range(0.01, 0.08);
    RunConfig {
        n_cells: 16 + (rng.next() * 80.0) as usize,
        params,
        t_final,
        snapshot_times: vec![t_final],
        init: InitPreset::Cosine {
            mean,
            amplitude: amp,
        },
        ..RunConfig::default()
    }
}

#[test]
fn pme_runs_keep_their_guarantees() {
    let mut rng = Rng(0x5eed_1234);
    for case in 0..18 {
        let cfg = random_config(&mut rng);
        let grid = cfg.grid().unwrap();
        let run = run_pme(&cfg).unwrap_or_else(|e| panic!("case {case}: {e}\nconfig {cfg:?}"));
        let k = cfg.params.capacity;
        let ctx = || format!("case {case}, m={}, K={k}, chi={}", cfg.params.m, cfg.params.chi);

        assert!(run.mass_drift_rel() <= 1e-10, "{}: drift {:e}", ctx(), run.mass_drift_rel());
        assert!(run.totals.u_min >= 0.0, "{}: u_min {}", ctx(), run.totals.u_min);
        assert!(run.totals.u_max <= k, "{}: u_max {}", ctx(), run.totals.u_max);
        assert!(
            run.totals.max_step_clip_mass <= 1e-10 * run.initial_mass,
            "{}: clip {:e}",
            ctx(),
            run.totals.max_step_clip_mass
        );
        assert!(run.totals.defect >= 0.0, "{}", ctx());
        assert!(run.totals.grad_p_energy >= 0.0, "{}", ctx());

        for snap in &run.snapshots {
            let state = &snap.state;
            // convexity bound m (u-1)_+ <= u^m, checked cellwise
            for v in state.density.iter() {
                assert!(
                    cfg.params.m * (v - 1.0).max(0.0) <= v.powf(cfg.params.m),
                    "{}: convexity bound at u={v}",
                    ctx()
                );
            }
            // chemoattractant obeys the maximum principle against its source
            assert!(state.chemo.min() >= state.density.min() - 1e-10, "{}", ctx());
            assert!(state.chemo.max() <= state.density.max() + 1e-10, "{}", ctx());
            // pressure is exactly the power law of the density
            let law = compute_pressure(&state.density, cfg.params.m).unwrap();
            assert_eq!(law, state.pressure, "{}", ctx());
            // kinetic indicator is exactly two-valued
            let kg = KineticGrid::with_defaults(k);
            assert_eq!(
                stiffpress::diagnostics::raw_indicator_defect(&state.density, &kg),
                0.0
            );
        }

        // pressure sup bound applies whenever the capacity is subcritical
        if k < 1.0 {
            let bound = pressure_sup_bound_check(&cfg.params).unwrap();
            assert!(
                run.totals.max_pressure <= bound,
                "{}: max P {} above {bound}",
                ctx(),
                run.totals.max_pressure
            );
        }
        let _ = grid;
    }
}

#[test]
fn hyperbolic_runs_conserve_exactly_and_stay_in_the_invariant_region() {
    let mut rng = Rng(0xfeed_beef);
    for case in 0..12 {
        let cfg = random_config(&mut rng);
        let run = run_hyperbolic(&cfg)
            .unwrap_or_else(|e| panic!("case {case}: {e}\nconfig {cfg:?}"));
        let k = cfg.params.capacity;
        assert!(
            run.mass_drift_rel() <= 1e-12,
            "case {case}: drift {:e}",
            run.mass_drift_rel()
        );
        assert!(run.totals.u_min >= -1e-12, "case {case}: u_min {}", run.totals.u_min);
        assert!(run.totals.u_max <= k + 1e-12, "case {case}: u_max {}", run.totals.u_max);
        assert_eq!(run.totals.max_step_clip_mass, 0.0);
        // the limit pressure vanishes identically for subcritical capacity
        if k <= 1.0 {
            for snap in &run.snapshots {
                assert!(snap.state.pressure.iter().all(|v| v == 0.0));
            }
        }
    }
}
