//! Slow dense-linear-algebra reference implementations used to verify the
//! production solvers (by the self test and the test suites). Everything here
//! is assembled and solved independently of the tridiagonal code paths: full
//! matrices, Gaussian elimination with partial pivoting, bare flux loops.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::pme::ModelParams;

/// Gaussian elimination with partial pivoting on a dense system.
#[allow(clippy::needless_range_loop)] // row elimination reads two rows of `a` at once
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col][col];
        assert!(pivot.abs() > 0.0, "singular dense system");
        for row in col + 1..n {
            let factor = a[row][col] / pivot;
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Dense Neumann Laplacian times `-1` plus identity, i.e. the matrix of
/// `-lap_h + I` on the grid.
fn helmholtz_matrix(grid: &Grid1D) -> Vec<Vec<f64>> {
    let n = grid.n_cells();
    let w = 1.0 / (grid.h() * grid.h());
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        let degree = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
        a[i][i] = 1.0 + degree * w;
        if i > 0 {
            a[i][i - 1] = -w;
        }
        if i + 1 < n {
            a[i][i + 1] = -w;
        }
    }
    a
}

/// Solve the chemoattractant system by dense elimination.
pub fn dense_chemo_solve(u: &Field, grid: &Grid1D) -> Field {
    Field::new(dense_solve(helmholtz_matrix(grid), u.values().to_vec()))
}

/// One full porous-medium step (advection + implicit diffusion) computed with
/// dense assembly: the chemoattractant comes from [`dense_chemo_solve`], the
/// upwind fluxes from a bare loop, and the Newton iteration uses a dense
/// Jacobian solved by pivoted elimination.
pub fn dense_pme_step(u: &[f64], params: &ModelParams, grid: &Grid1D, dt: f64) -> Result<Vec<f64>> {
    let n = grid.n_cells();
    let h = grid.h();
    let k = params.capacity;
    let m = params.m;

    let c = dense_chemo_solve(&Field::new(u.to_vec()), grid);

    // scatter each interior Lax-Friedrichs face flux to its two cells
    let mut rhs = u.to_vec();
    for i in 1..n {
        let v = params.chi * (c[i] - c[i - 1]) / h;
        let (ul, ur) = (u[i - 1], u[i]);
        let alpha = v.abs() * (k - 2.0 * ul).abs().max((k - 2.0 * ur).abs());
        let flux = 0.5 * (v * (ul * (k - ul) + ur * (k - ur)) - alpha * (ur - ul));
        rhs[i - 1] -= dt / h * flux;
        rhs[i] += dt / h * flux;
    }

    // backward Euler on the m-power diffusion, dense Newton
    let a = dt * params.diffusivity / (h * h);
    let mut x: Vec<f64> = rhs.iter().map(|&v| v.max(0.0)).collect();
    let residual = |x: &[f64]| -> Vec<f64> {
        let w: Vec<f64> = x.iter().map(|&v| v.powf(m)).collect();
        (0..n)
            .map(|i| {
                let lap = if i == 0 {
                    w[1] - w[0]
                } else if i == n - 1 {
                    w[n - 2] - w[n - 1]
                } else {
                    w[i - 1] - 2.0 * w[i] + w[i + 1]
                };
                x[i] - a * lap - rhs[i]
            })
            .collect()
    };

    let tol = params.newton_tol;
    let target = tol * 1e-3;
    let mut res = residual(&x);
    let mut res_norm = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let mut prev_norm = f64::INFINITY;
    for iteration in 0..=params.newton_max_iter {
        if res_norm <= target || (res_norm <= tol && res_norm >= 0.25 * prev_norm) {
            return Ok(x);
        }
        if iteration == params.newton_max_iter {
            if res_norm <= tol {
                return Ok(x);
            }
            return Err(Error::NewtonStalled {
                time: f64::NAN,
                dt,
                iterations: iteration,
                residual: res_norm,
            });
        }
        let mut jac = vec![vec![0.0; n]; n];
        for i in 0..n {
            let degree = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            jac[i][i] = 1.0 + a * degree * m * x[i].powf(m - 1.0);
            if i > 0 {
                jac[i][i - 1] = -a * m * x[i - 1].powf(m - 1.0);
            }
            if i + 1 < n {
                jac[i][i + 1] = -a * m * x[i + 1].powf(m - 1.0);
            }
        }
        let delta = dense_solve(jac, res.iter().map(|r| -r).collect());
        for i in 0..n {
            x[i] = (x[i] + delta[i]).max(0.0);
        }
        prev_norm = res_norm;
        res = residual(&x);
        res_norm = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
    }
    unreachable!()
}

/// Run [`dense_pme_step`] over a prescribed dt sequence, clipping to `[0, K]`
/// after each step exactly like the production path.
pub fn dense_pme_trajectory(
    u0: &[f64],
    params: &ModelParams,
    grid: &Grid1D,
    dts: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut u = u0.to_vec();
    let mut states = Vec::with_capacity(dts.len());
    for &dt in dts {
        u = dense_pme_step(&u, params, grid, dt)?;
        for v in &mut u {
            *v = v.clamp(0.0, params.capacity);
        }
        states.push(u.clone());
    }
    Ok(states)
}

/// One local Lax-Friedrichs step computed with a bare flux loop over a given
/// chemoattractant profile.
pub fn loop_hyperbolic_step(
    u: &[f64],
    c: &[f64],
    params: &ModelParams,
    grid: &Grid1D,
    dt: f64,
) -> Vec<f64> {
    let n = grid.n_cells();
    let h = grid.h();
    let k = params.capacity;
    let mut flux = vec![0.0; n + 1];
    for i in 1..n {
        let v = params.chi * (c[i] - c[i - 1]) / h;
        let (ul, ur) = (u[i - 1], u[i]);
        let alpha = v.abs() * (k - 2.0 * ul).abs().max((k - 2.0 * ur).abs());
        flux[i] = 0.5 * (v * (ul * (k - ul) + ur * (k - ur)) - alpha * (ur - ul));
    }
    (0..n).map(|i| u[i] - dt / h * (flux[i + 1] - flux[i])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solver_reproduces_a_known_system() {
        // [2 1; 1 3] x = [3; 5] -> x = [4/5, 7/5]
        let x = dense_solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn dense_chemo_keeps_constants() {
        let g = Grid1D::new(0.0, 1.0, 12).unwrap();
        let c = dense_chemo_solve(&Field::constant(12, 0.7), &g);
        for v in c.iter() {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }
}
