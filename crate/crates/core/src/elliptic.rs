//! Chemoattractant equation: `-lap(c) + c = u` with zero-flux boundaries,
//! discretized as a symmetric tridiagonal system and solved by direct
//! elimination.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};

/// Symmetric tridiagonal system for the discrete Helmholtz operator.
///
/// The reaction term contributes `+1` to every diagonal entry, so the matrix
/// is strictly diagonally dominant: `diag[i] >= 1 + sum of adjacent |off|`.
#[derive(Debug, Clone)]
pub struct HelmholtzSystem {
    /// Main diagonal, one entry per cell.
    pub diag: Vec<f64>,
    /// Symmetric off-diagonal, one entry per interior face.
    pub off: Vec<f64>,
    /// Right-hand side.
    pub rhs: Field,
}

impl HelmholtzSystem {
    /// Assemble `-lap_h + I` on `grid` with right-hand side `u`.
    /// Boundary cells see a single interior face (zero-flux closure).
    pub fn assemble(u: &Field, grid: &Grid1D) -> Result<Self> {
        let n = grid.n_cells();
        if u.len() != n {
            return Err(Error::Shape {
                context: "HelmholtzSystem::assemble",
                expected: n,
                got: u.len(),
            });
        }
        let w = 1.0 / (grid.h() * grid.h());
        let mut diag = vec![1.0 + 2.0 * w; n];
        diag[0] = 1.0 + w;
        diag[n - 1] = 1.0 + w;
        Ok(HelmholtzSystem {
            diag,
            off: vec![-w; n - 1],
            rhs: u.clone(),
        })
    }

    /// Thomas elimination. The system is an irreducible M-matrix, so the
    /// factorization cannot break down.
    pub fn solve(&self) -> Field {
        let n = self.diag.len();
        let mut d = self.diag.clone();
        let mut r = self.rhs.values().to_vec();
        for i in 1..n {
            let m = self.off[i - 1] / d[i - 1];
            d[i] -= m * self.off[i - 1];
            r[i] -= m * r[i - 1];
        }
        let mut x = vec![0.0; n];
        x[n - 1] = r[n - 1] / d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (r[i] - self.off[i] * x[i + 1]) / d[i];
        }
        Field::new(x)
    }

    /// Residual `A x - rhs` of a candidate solution.
    pub fn residual(&self, x: &Field) -> Field {
        let n = self.diag.len();
        let v = x.values();
        let mut r = vec![0.0; n];
        for i in 0..n {
            let mut ax = self.diag[i] * v[i];
            if i > 0 {
                ax += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                ax += self.off[i] * v[i + 1];
            }
            r[i] = ax - self.rhs[i];
        }
        Field::new(r)
    }
}

/// Solve `-lap(c) + c = u` with Neumann boundaries and return `c`.
///
/// Guarantees checked on every call:
/// - maximum principle `min(u) <= c <= max(u)` (up to roundoff slack),
/// - discrete mass identity `sum(c) h = sum(u) h` (zero-flux telescoping).
pub fn solve_chemo(u: &Field, grid: &Grid1D) -> Result<Field> {
    if !u.is_finite() {
        return Err(Error::NonFinite {
            context: "solve_chemo input",
            time: f64::NAN,
        });
    }
    let system = HelmholtzSystem::assemble(u, grid)?;
    let c = system.solve();

    let u_max = u.max();
    let u_min = u.min();
    let scale = 1.0 + u_max.abs().max(u_min.abs());
    // Elimination is backward stable; allow roundoff amplified by the h^-2
    // operator scale when rejecting a solve as broken.
    let slack = scale * (64.0 * f64::EPSILON) / (grid.h() * grid.h());
    let c_min = c.min();
    let c_max = c.max();
    if c_min < u_min - slack || c_max > u_max + slack {
        return Err(Error::InvariantViolation(format!(
            "chemoattractant maximum principle failed: c in [{c_min}, {c_max}], u in [{u_min}, {u_max}]"
        )));
    }
    debug_assert!({
        let r = norm_inf(&system.residual(&c));
        r <= (1e-12 * scale).max(slack)
    });
    Ok(c)
}

fn norm_inf(f: &Field) -> f64 {
    f.iter().map(f64::abs).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{norm, Norm};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(0.0, 1.0, n).unwrap()
    }

    fn rng(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.max(1);
        move || {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545f4914f6cdd1d) >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = grid(40);
        let c = solve_chemo(&Field::constant(40, 1.0), &g).unwrap();
        for v in c.iter() {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn cosine_has_analytic_solution() {
        // -c'' + c = cos(pi x) on [0,1] with c'(0) = c'(1) = 0
        // is solved by c = cos(pi x) / (1 + pi^2).
        let g = grid(200);
        let u = g.sample(|x| (PI * x).cos());
        let c = solve_chemo(&u, &g).unwrap();
        let mut err: f64 = 0.0;
        for (i, x) in g.centers().enumerate() {
            err = err.max((c[i] - (PI * x).cos() / (1.0 + PI * PI)).abs());
        }
        assert!(err < 1e-3, "max error {err:e}");
        assert!(err < 1e-5, "expected well under the contract bound, got {err:e}");
    }

    #[test]
    fn cosine_error_is_second_order() {
        let err_at = |n: usize| {
            let g = grid(n);
            let u = g.sample(|x| (PI * x).cos());
            let c = solve_chemo(&u, &g).unwrap();
            g.centers()
                .enumerate()
                .map(|(i, x)| (c[i] - (PI * x).cos() / (1.0 + PI * PI)).abs())
                .fold(0.0f64, f64::max)
        };
        let ratio = err_at(100) / err_at(200);
        assert!(
            (3.2..=4.8).contains(&ratio),
            "halving ratio {ratio} outside 4 +/- 20%"
        );
    }

    #[test]
    fn matches_dense_elimination_oracle() {
        let g = grid(16);
        let mut r = rng(7);
        let u = Field::new((0..16).map(|_| 2.0 * r()).collect());
        let c = solve_chemo(&u, &g).unwrap();
        let c_ref = crate::oracle::dense_chemo_solve(&u, &g);
        for i in 0..16 {
            assert!(
                (c[i] - c_ref[i]).abs() <= 1e-12,
                "cell {i}: {} vs {}",
                c[i],
                c_ref[i]
            );
        }
    }

    #[test]
    fn residual_small_on_coarse_grids() {
        for n in [8usize, 16, 32, 64] {
            let g = grid(n);
            let mut r = rng(n as u64);
            let u = Field::new((0..n).map(|_| r()).collect());
            let system = HelmholtzSystem::assemble(&u, &g).unwrap();
            let c = solve_chemo(&u, &g).unwrap();
            let res = system.residual(&c);
            let bound = 1e-12 * (1.0 + norm_inf(&u));
            assert!(
                norm_inf(&res) <= bound,
                "n = {n}: residual {:e} > {bound:e}",
                norm_inf(&res)
            );
        }
    }

    #[test]
    fn maximum_principle_and_mass_identity() {
        for seed in 1..=20u64 {
            let n = 30 + (seed as usize % 17);
            let g = grid(n);
            let mut r = rng(seed);
            let u = Field::new((0..n).map(|_| 3.0 * r() - 1.0).collect());
            let c = solve_chemo(&u, &g).unwrap();
            assert!(c.min() >= u.min() - 1e-12);
            assert!(c.max() <= u.max() + 1e-12);
            let mass_u: f64 = u.iter().sum::<f64>() * g.h();
            let mass_c: f64 = c.iter().sum::<f64>() * g.h();
            let l1 = norm(&u, &g, Norm::L1);
            assert!(
                (mass_c - mass_u).abs() <= 1e-11 * l1.max(1e-30),
                "seed {seed}: mass defect {:e}",
                mass_c - mass_u
            );
        }
    }

    #[test]
    fn diagonal_dominance() {
        let g = grid(25);
        let sys = HelmholtzSystem::assemble(&Field::zeros(25), &g).unwrap();
        let n = sys.diag.len();
        for i in 0..n {
            let mut adj = 0.0;
            if i > 0 {
                adj += sys.off[i - 1].abs();
            }
            if i + 1 < n {
                adj += sys.off[i].abs();
            }
            assert!(sys.diag[i] >= 1.0 + adj - 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite_input() {
        let g = grid(4);
        let u = Field::new(vec![0.0, f64::NAN, 0.0, 0.0]);
        assert!(matches!(
            solve_chemo(&u, &g),
            Err(Error::NonFinite { .. })
        ));
    }
}
