//! Measured quantities tied to the stiff-limit analysis: saturation products,
//! excess saturation, pressure-gradient energy, dissipation defect,
//! complementarity residual, kinetic two-valuedness, and the thresholded
//! measure profile on the pressure support.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::pme::{ModelParams, SimState};

/// Coarse-graining radius in cells used for the windowed kinetic metric and
/// for the saturated-interior mask; the window spans `2 r + 1` cells (5 by
/// default).
pub const DEFAULT_WINDOW_RADIUS: usize = 2;

/// Number of nodes of the default kinetic velocity grid.
pub const DEFAULT_XI_NODES: usize = 64;

/// Margin factor applied above the capacity for the kinetic grid, exposing
/// any support leakage past `u = K`.
pub const XI_MARGIN: f64 = 1.05;

/// Per-step measured quantities. Increments are left-endpoint-in-time terms
/// of the corresponding space-time integrals: multiply the spatial sum by the
/// step's `dt` and accumulate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// `||P (lap_h P + (chi/D)(K-1)(1-c))||_1`.
    pub comp_residual_l1: f64,
    /// `h dt sum ((u-1)_+)^2` toward `||(u-1)_+||^2_{L2(Q_T)}`.
    pub excess_sat_l2_sq_increment: f64,
    /// `dt sum_faces |dP/dx|^2 h`.
    pub grad_p_energy_increment: f64,
    /// `dt sum_faces (du/dx)(d(u^m)/dx) h`; nonnegative since `x^m` is
    /// monotone on the nonnegative axis.
    pub defect_increment: f64,
    /// `||P (1 - u)||_1`.
    pub sat_product_p: f64,
    /// `||dP/dx (1 - u)||_1` with `u` averaged to faces.
    pub sat_product_grad_p: f64,
}

/// Evaluate every record field on one state with the supplied `dt`.
pub fn record_diagnostics(
    state: &SimState,
    params: &ModelParams,
    grid: &Grid1D,
    dt: f64,
) -> DiagnosticsRecord {
    let h = grid.h();
    let u = state.density.values();
    let p = state.pressure.values();
    let n = grid.n_cells();

    let mass = state.mass(grid);
    let u_min = state.density.min();
    let u_max = state.density.max();

    let (_, comp_residual_l1) = complementarity_residual(state, params, grid);

    let excess_sq: f64 = u.iter().map(|&v| (v - 1.0).max(0.0).powi(2)).sum();
    let excess_sat_l2_sq_increment = h * dt * excess_sq;

    let grad_p = grid
        .face_gradient(&state.pressure)
        .expect("pressure lives on the grid");
    let grad_p_energy_increment = dt * grad_p.values().iter().map(|g| g * g).sum::<f64>() * h;

    // face gradients of u and u^m share a sign per face
    let m = params.m;
    let mut defect = 0.0;
    for i in 1..n {
        let du = (u[i] - u[i - 1]) / h;
        let dum = (u[i].max(0.0).powf(m) - u[i - 1].max(0.0).powf(m)) / h;
        defect += du * dum;
    }
    let defect_increment = dt * defect * h;

    let sat_product_p: f64 = (0..n).map(|i| (p[i] * (1.0 - u[i])).abs()).sum::<f64>() * h;
    let mut sat_grad = 0.0;
    for i in 1..n {
        let u_face = 0.5 * (u[i - 1] + u[i]);
        sat_grad += (grad_p[i] * (1.0 - u_face)).abs();
    }
    let sat_product_grad_p = sat_grad * h;

    DiagnosticsRecord {
        t: state.time,
        mass,
        u_min,
        u_max,
        comp_residual_l1,
        excess_sat_l2_sq_increment,
        grad_p_energy_increment,
        defect_increment,
        sat_product_p,
        sat_product_grad_p,
    }
}

/// Cellwise residual `r_i = P_i (lap_h P_i + (chi/D)(K-1)(1-c_i))` of the
/// limiting degenerate elliptic relation, and its discrete L1 norm.
///
/// The `chi/D` factor generalizes the unit-coefficient relation
/// `P [lap P + (K-1)(1-c)] = 0` to the scaled equation: dividing the
/// pressure-equation balance `(m-1) P [D lap P + chi (K-u)(u-c)] + ... = 0`
/// by `D` shows the stiff limit pins `lap P + (chi/D)(K-1)(1-c)` to zero on
/// the pressure support. For `chi = D = 1` this is the unit-coefficient form
/// verbatim.
pub fn complementarity_residual(
    state: &SimState,
    params: &ModelParams,
    grid: &Grid1D,
) -> (Field, f64) {
    let lap_p = grid
        .cell_divergence(&grid.face_gradient(&state.pressure).expect("pressure on grid"))
        .expect("shape preserved");
    let k1 = (params.chi / params.diffusivity) * (params.capacity - 1.0);
    let n = grid.n_cells();
    let mut r = vec![0.0; n];
    for i in 0..n {
        r[i] = state.pressure[i] * (lap_p[i] + k1 * (1.0 - state.chemo[i]));
    }
    let norm = r.iter().map(|v| v.abs()).sum::<f64>() * grid.h();
    (Field::new(r), norm)
}

/// Velocity grid of the kinetic function `1_{xi < u}` plus the windowing
/// radius for its coarse-grained two-valuedness metric.
#[derive(Debug, Clone)]
pub struct KineticGrid {
    /// Strictly increasing nodes on `[0, K * margin]`.
    pub xi_nodes: Vec<f64>,
    /// Coarse-graining radius in cells.
    pub window_cells: usize,
}

impl KineticGrid {
    pub fn new(capacity: f64, n_nodes: usize, window_cells: usize) -> Self {
        let top = capacity * XI_MARGIN;
        let nodes = (0..n_nodes)
            .map(|j| top * j as f64 / (n_nodes - 1) as f64)
            .collect();
        KineticGrid {
            xi_nodes: nodes,
            window_cells,
        }
    }

    pub fn with_defaults(capacity: f64) -> Self {
        Self::new(capacity, DEFAULT_XI_NODES, DEFAULT_WINDOW_RADIUS)
    }

    /// Raw indicator matrix `f[cell][node] = 1_{xi < u}`; entries are exactly
    /// 0 or 1 and non-increasing in the node index for a fixed cell.
    pub fn indicator(&self, u: &Field) -> Vec<Vec<f64>> {
        u.iter()
            .map(|v| {
                self.xi_nodes
                    .iter()
                    .map(|&xi| if xi < v { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// Trapezoid weights on the velocity nodes.
    fn xi_weights(&self) -> Vec<f64> {
        let n = self.xi_nodes.len();
        let dxi = self.xi_nodes[1] - self.xi_nodes[0];
        (0..n)
            .map(|j| if j == 0 || j == n - 1 { 0.5 * dxi } else { dxi })
            .collect()
    }
}

/// Two-valuedness metric `int int fbar (1 - fbar) dx dxi` with `fbar` the
/// window-averaged kinetic indicator. Zero exactly when every window is
/// uniformly saturated or empty at each velocity level; strictly positive on
/// mixed windows.
pub fn kinetic_two_valued_metric(u: &Field, grid: &Grid1D, kg: &KineticGrid) -> f64 {
    let n = grid.n_cells();
    let r = kg.window_cells;
    let weights = kg.xi_weights();
    let h = grid.h();
    let uv = u.values();

    let mut metric = 0.0;
    for i in 0..n {
        let lo = i.saturating_sub(r);
        let hi = (i + r).min(n - 1);
        let count = (hi - lo + 1) as f64;
        for (j, &xi) in kg.xi_nodes.iter().enumerate() {
            let mut fbar = 0.0;
            for &v in &uv[lo..=hi] {
                if xi < v {
                    fbar += 1.0;
                }
            }
            fbar /= count;
            metric += fbar * (1.0 - fbar) * weights[j] * h;
        }
    }
    metric
}

/// Defect of the raw (unwindowed) indicator: `sum f (1 - f)` over all
/// entries. Structurally zero since entries are exactly 0 or 1.
pub fn raw_indicator_defect(u: &Field, kg: &KineticGrid) -> f64 {
    kg.indicator(u)
        .iter()
        .flatten()
        .map(|f| f * (1.0 - f))
        .sum()
}

/// Thresholded discrete analogue of the measure carried by the limit
/// pressure: `mu_i = lap_h P_i + (chi/D)(K-1)(1-c_i)` (coefficient scaling as
/// in [`complementarity_residual`]), together with the pressure support
/// `{P > eps}` and the saturated interior (cells whose window has
/// `mean(1-u) < eps`).
#[derive(Debug, Clone)]
pub struct MuProfile {
    /// `lap_h P + (K-1)(1-c)` evaluated on every cell; meaningful on the
    /// masks below.
    pub mu: Field,
    /// Discrete pressure support `{P_i > eps}`.
    pub pressure_support: Vec<bool>,
    /// Cells whose window-averaged `1 - u` falls below `eps`.
    pub saturated_interior: Vec<bool>,
    /// Set when `K <= 1`, where the limit pressure (or its gradient)
    /// vanishes and the profile carries no information.
    pub degenerate: bool,
}

/// Default support threshold: `1e-6 * max(P)`.
pub fn default_mu_eps(state: &SimState) -> f64 {
    1e-6 * state.pressure.max().max(0.0)
}

pub fn mu_profile(
    state: &SimState,
    params: &ModelParams,
    grid: &Grid1D,
    eps_threshold: f64,
) -> MuProfile {
    let n = grid.n_cells();
    let lap_p = grid
        .cell_divergence(&grid.face_gradient(&state.pressure).expect("pressure on grid"))
        .expect("shape preserved");
    let k1 = (params.chi / params.diffusivity) * (params.capacity - 1.0);
    let mu = Field::new(
        (0..n)
            .map(|i| lap_p[i] + k1 * (1.0 - state.chemo[i]))
            .collect(),
    );

    let pressure_support = (0..n).map(|i| state.pressure[i] > eps_threshold).collect();

    let r = DEFAULT_WINDOW_RADIUS;
    let u = state.density.values();
    let saturated_interior = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(n - 1);
            let mean: f64 =
                u[lo..=hi].iter().map(|&v| 1.0 - v).sum::<f64>() / (hi - lo + 1) as f64;
            mean < eps_threshold
        })
        .collect();

    MuProfile {
        mu,
        pressure_support,
        saturated_interior,
        degenerate: params.capacity <= 1.0,
    }
}

/// Erode a boolean mask by `radius` cells: a cell survives only when its
/// whole neighborhood is inside the mask (boundary-clipped).
pub fn erode_mask(mask: &[bool], radius: usize) -> Vec<bool> {
    let n = mask.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            mask[lo..=hi].iter().all(|&b| b)
        })
        .collect()
}

/// Analytic supremum bound `m/(m-1) K^(m-1)` on the pressure for
/// subcritical capacity `K < 1`; rejected otherwise.
pub fn pressure_sup_bound_check(params: &ModelParams) -> Result<f64> {
    if params.capacity >= 1.0 {
        return Err(Error::Usage(format!(
            "pressure sup bound applies to K < 1 only, got K = {}",
            params.capacity
        )));
    }
    Ok(params.m / (params.m - 1.0) * params.capacity.powf(params.m - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::solve_chemo;
    use crate::pme::compute_pressure;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(0.0, 1.0, n).unwrap()
    }

    fn state_from_u(u: Field, params: &ModelParams, g: &Grid1D) -> SimState {
        let chemo = solve_chemo(&u, g).unwrap();
        let pressure = compute_pressure(&u.map(|v| v.max(0.0)), params.m).unwrap();
        SimState {
            time: 0.0,
            density: u,
            chemo,
            pressure,
        }
    }

    #[test]
    fn record_on_flat_half_filled_state() {
        let g = grid(20);
        let params = ModelParams::default();
        let s = state_from_u(Field::constant(20, 0.5), &params, &g);
        let rec = record_diagnostics(&s, &params, &g, 1e-2);
        assert_eq!(rec.u_min, 0.5);
        assert_eq!(rec.u_max, 0.5);
        assert_eq!(rec.excess_sat_l2_sq_increment, 0.0);
        assert_eq!(rec.defect_increment, 0.0);
        assert!((rec.mass - 0.5).abs() < 1e-13);
    }

    #[test]
    fn excess_saturation_of_constant_overfill() {
        // ((1.5 - 1)_+)^2 = 0.25 over a unit domain with dt = 1
        let g = grid(16);
        let params = ModelParams {
            capacity: 2.0,
            ..ModelParams::default()
        };
        let s = state_from_u(Field::constant(16, 1.5), &params, &g);
        let rec = record_diagnostics(&s, &params, &g, 1.0);
        assert!((rec.excess_sat_l2_sq_increment - 0.25).abs() < 1e-13);
    }

    #[test]
    fn record_matches_plain_recomputation() {
        let g = grid(24);
        let params = ModelParams {
            m: 7.0,
            capacity: 2.0,
            chi: 11.0,
            ..ModelParams::default()
        };
        let u = g.sample(|x| 0.4 + 0.5 * (2.2 * x).sin().powi(2));
        let s = state_from_u(u, &params, &g);
        let dt = 3e-3;
        let rec = record_diagnostics(&s, &params, &g, dt);

        // independent recomputation with bare loops
        let h = g.h();
        let uv = s.density.values();
        let pv = s.pressure.values();
        let n = g.n_cells();
        let mass: f64 = uv.iter().sum::<f64>() * h;
        assert!((rec.mass - mass).abs() <= 1e-14);

        let mut grad_energy = 0.0;
        let mut defect = 0.0;
        let mut sat_grad = 0.0;
        for i in 1..n {
            let gp = (pv[i] - pv[i - 1]) / h;
            grad_energy += gp * gp * h;
            let du = (uv[i] - uv[i - 1]) / h;
            let dum = (uv[i].powf(params.m) - uv[i - 1].powf(params.m)) / h;
            defect += du * dum * h;
            sat_grad += (gp * (1.0 - 0.5 * (uv[i] + uv[i - 1]))).abs() * h;
        }
        assert!((rec.grad_p_energy_increment - dt * grad_energy).abs() <= 1e-12);
        assert!((rec.defect_increment - dt * defect).abs() <= 1e-12);
        assert!((rec.sat_product_grad_p - sat_grad).abs() <= 1e-12);
        assert!(rec.defect_increment >= 0.0);

        let sat_p: f64 = (0..n).map(|i| (pv[i] * (1.0 - uv[i])).abs()).sum::<f64>() * h;
        assert!((rec.sat_product_p - sat_p).abs() <= 1e-13);

        let mut comp = 0.0;
        let reaction = params.chi / params.diffusivity * (params.capacity - 1.0);
        for i in 0..n {
            let left = if i == 0 { 0.0 } else { (pv[i] - pv[i - 1]) / h };
            let right = if i == n - 1 { 0.0 } else { (pv[i + 1] - pv[i]) / h };
            let lap = (right - left) / h;
            comp += (pv[i] * (lap + reaction * (1.0 - s.chemo[i]))).abs() * h;
        }
        assert!(
            (rec.comp_residual_l1 - comp).abs() <= 1e-10 * comp.max(1.0),
            "{} vs {comp}",
            rec.comp_residual_l1
        );
    }

    #[test]
    fn complementarity_residual_vanishes_without_pressure() {
        let g = grid(12);
        let params = ModelParams::default();
        let mut s = state_from_u(g.sample(|x| 0.3 + 0.2 * x), &params, &g);
        s.pressure = Field::zeros(12);
        let (field, norm) = complementarity_residual(&s, &params, &g);
        assert_eq!(norm, 0.0);
        assert!(field.iter().all(|v| v == 0.0));
    }

    #[test]
    fn complementarity_residual_vanishes_on_saturated_critical_state() {
        // K = 1, u = 1: c = 1 so the reaction term is zero, and the constant
        // pressure has zero discrete Laplacian.
        let g = grid(10);
        let params = ModelParams::default();
        let s = state_from_u(Field::constant(10, 1.0), &params, &g);
        let (_, norm) = complementarity_residual(&s, &params, &g);
        assert!(norm < 1e-12, "norm = {norm:e}");
    }

    #[test]
    fn kinetic_metric_zero_for_constant_profiles() {
        let g = grid(30);
        let kg = KineticGrid::with_defaults(1.0);
        let m = kinetic_two_valued_metric(&Field::constant(30, 0.62), &g, &kg);
        assert_eq!(m, 0.0);
    }

    #[test]
    fn kinetic_integrand_on_two_cell_mixed_window() {
        // u = {0, 1}: the window average is 1/2 for every xi below 1, so the
        // integrand is exactly 1/4 there.
        let g = Grid1D::new(0.0, 1.0, 2).unwrap();
        let kg = KineticGrid::new(1.0, 64, 2);
        let u = Field::new(vec![0.0, 1.0]);
        let metric = kinetic_two_valued_metric(&u, &g, &kg);
        // integrand 1/4 on xi in [0,1), 0 above; both cells x-integrate to h sum = 1
        let dxi = kg.xi_nodes[1] - kg.xi_nodes[0];
        let covered: f64 = kg
            .xi_nodes
            .iter()
            .enumerate()
            .map(|(j, &xi)| {
                let w = if j == 0 || j == kg.xi_nodes.len() - 1 { 0.5 * dxi } else { dxi };
                if xi < 1.0 {
                    0.25 * w
                } else {
                    0.0
                }
            })
            .sum();
        assert!((metric - covered).abs() < 1e-14);
        assert!(metric > 0.2 && metric < 0.3);
    }

    #[test]
    fn raw_indicator_is_two_valued() {
        let g = grid(40);
        let kg = KineticGrid::with_defaults(2.0);
        let u = g.sample(|x| 2.0 * x * (1.0 - x) * 4.0 * 0.5);
        assert_eq!(raw_indicator_defect(&u, &kg), 0.0);
        // monotone in xi for each cell
        for row in kg.indicator(&u) {
            for w in row.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn mu_profile_empty_without_pressure() {
        let g = grid(14);
        let params = ModelParams {
            capacity: 2.0,
            ..ModelParams::default()
        };
        let mut s = state_from_u(Field::constant(14, 0.4), &params, &g);
        s.pressure = Field::zeros(14);
        let prof = mu_profile(&s, &params, &g, 1e-9);
        assert!(prof.pressure_support.iter().all(|&b| !b));
        assert!(!prof.degenerate);
    }

    #[test]
    fn mu_profile_zero_on_saturated_critical_state() {
        let g = grid(14);
        let params = ModelParams::default();
        let s = state_from_u(Field::constant(14, 1.0), &params, &g);
        let prof = mu_profile(&s, &params, &g, default_mu_eps(&s));
        assert!(prof.degenerate);
        for (i, &on) in prof.pressure_support.iter().enumerate() {
            if on {
                assert!(prof.mu[i].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn erosion_shrinks_masks() {
        let mask = vec![false, true, true, true, true, false];
        let eroded = erode_mask(&mask, 1);
        assert_eq!(eroded, vec![false, false, true, true, false, false]);
    }

    #[test]
    fn pressure_sup_bound_values() {
        let p = ModelParams {
            m: 2.0,
            capacity: 0.6,
            ..ModelParams::default()
        };
        assert!((pressure_sup_bound_check(&p).unwrap() - 1.2).abs() < 1e-14);

        let p20 = ModelParams {
            m: 20.0,
            capacity: 0.6,
            ..ModelParams::default()
        };
        let bound = pressure_sup_bound_check(&p20).unwrap();
        assert!((bound - 20.0 / 19.0 * 0.6f64.powi(19)).abs() < 1e-18);
        assert!((bound - 6.41e-5).abs() / 6.41e-5 < 1e-2);

        let bad = ModelParams {
            capacity: 1.0,
            ..ModelParams::default()
        };
        assert!(pressure_sup_bound_check(&bad).is_err());
    }
}
