//! Uniform 1-D finite-volume mesh and discrete Neumann-compatible operators.
//!
//! All fields are cell averages; face quantities exist only transiently as
//! [`FaceField`]. The zero-flux boundary condition is structural: every
//! operator that produces a `FaceField` writes zeros into the two boundary
//! slots, so the discrete divergence theorem holds exactly.

use crate::error::{Error, Result};

/// Uniform mesh on `[x_min, x_max]` with `n_cells` cells of width `h`.
/// Cell centers sit at `x_min + (i + 1/2) h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    h: f64,
}

impl Grid1D {
    /// Build a grid; fails on a degenerate interval or fewer than 2 cells.
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::config(
                "x_min/x_max",
                format!("domain [{x_min}, {x_max}] is not a proper interval"),
            ));
        }
        if n_cells < 2 {
            return Err(Error::config(
                "n_cells",
                format!("need at least 2 cells, got {n_cells}"),
            ));
        }
        Ok(Grid1D {
            x_min,
            x_max,
            n_cells,
            h: (x_max - x_min) / n_cells as f64,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of faces, including the two boundary faces.
    pub fn n_faces(&self) -> usize {
        self.n_cells + 1
    }

    /// Center of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.h
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|i| self.center(i))
    }

    /// Sample a function at cell centers.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.centers().map(f).collect())
    }

    /// Gradient at faces: `(f[i] - f[i-1]) / h` on interior faces, zero on the
    /// two boundary faces (zero-flux encoding).
    pub fn face_gradient(&self, f: &Field) -> Result<FaceField> {
        self.check_field("face_gradient", f)?;
        let v = f.values();
        let mut g = vec![0.0; self.n_faces()];
        for i in 1..self.n_cells {
            g[i] = (v[i] - v[i - 1]) / self.h;
        }
        Ok(FaceField(g))
    }

    /// Divergence at cells: `(F[i+1] - F[i]) / h`.
    pub fn cell_divergence(&self, flux: &FaceField) -> Result<Field> {
        if flux.len() != self.n_faces() {
            return Err(Error::Shape {
                context: "cell_divergence",
                expected: self.n_faces(),
                got: flux.len(),
            });
        }
        let f = flux.values();
        let d = (0..self.n_cells)
            .map(|i| (f[i + 1] - f[i]) / self.h)
            .collect();
        Ok(Field(d))
    }

    fn check_field(&self, context: &'static str, f: &Field) -> Result<()> {
        if f.len() != self.n_cells {
            return Err(Error::Shape {
                context,
                expected: self.n_cells,
                got: f.len(),
            });
        }
        Ok(())
    }
}

/// Cell-averaged scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field(values)
    }

    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Field(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.0.iter().map(|&x| f(x)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for Field {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Face-valued quantity (fluxes, gradients); length `n_cells + 1`.
/// Neumann-respecting operators keep the first and last entries at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField(Vec<f64>);

impl FaceField {
    pub fn new(values: Vec<f64>) -> Self {
        FaceField(values)
    }

    pub fn zeros(n_faces: usize) -> Self {
        FaceField(vec![0.0; n_faces])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn has_zero_boundary(&self) -> bool {
        self.0.first() == Some(&0.0) && self.0.last() == Some(&0.0)
    }
}

impl std::ops::Index<usize> for FaceField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Which norm [`norm`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

/// Discrete `L^1`, `L^2` or `L^inf` norm of a cell field:
/// `(sum |f_i|^p h)^(1/p)` for finite `p`, `max |f_i|` otherwise.
pub fn norm(f: &Field, grid: &Grid1D, kind: Norm) -> f64 {
    let h = grid.h();
    match kind {
        Norm::L1 => f.iter().map(f64::abs).sum::<f64>() * h,
        Norm::L2 => (f.iter().map(|x| x * x).sum::<f64>() * h).sqrt(),
        Norm::LInf => f.iter().map(f64::abs).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn build_grid_unit_interval() {
        let g = grid(4);
        assert_eq!(g.h(), 0.25);
        let centers: Vec<f64> = g.centers().collect();
        assert_eq!(centers, vec![0.125, 0.375, 0.625, 0.875]);

        let g = grid(200);
        assert!((g.h() - 0.005).abs() < 1e-16);
    }

    #[test]
    fn build_grid_symmetric_interval() {
        let g = Grid1D::new(-1.0, 1.0, 8).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.center(0), -0.875);
    }

    #[test]
    fn build_grid_rejects_bad_input() {
        assert!(Grid1D::new(1.0, 1.0, 4).is_err());
        assert!(Grid1D::new(2.0, 1.0, 4).is_err());
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn face_gradient_of_constant_is_zero() {
        let g = grid(7);
        let f = Field::constant(7, 3.25);
        let grad = g.face_gradient(&f).unwrap();
        assert!(grad.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn face_gradient_of_identity_is_one() {
        let g = grid(10);
        let f = g.sample(|x| x);
        let grad = g.face_gradient(&f).unwrap();
        assert_eq!(grad[0], 0.0);
        assert_eq!(grad[10], 0.0);
        for i in 1..10 {
            assert!((grad[i] - 1.0).abs() < 1e-12, "face {i}: {}", grad[i]);
        }
    }

    #[test]
    fn face_gradient_matches_direct_differences() {
        let g = grid(5);
        let f = Field::new(vec![0.3, -1.2, 4.0, 0.25, 2.5]);
        let grad = g.face_gradient(&f).unwrap();
        // independent per-face loop
        for i in 0..=5 {
            let expected = if i == 0 || i == 5 {
                0.0
            } else {
                (f[i] - f[i - 1]) / g.h()
            };
            assert_eq!(grad[i], expected);
        }
    }

    #[test]
    fn divergence_of_zero_flux_is_zero() {
        let g = grid(6);
        let d = g.cell_divergence(&FaceField::zeros(7)).unwrap();
        assert!(d.iter().all(|v| v == 0.0));
    }

    #[test]
    fn divergence_single_interior_face() {
        let g = grid(4);
        let mut flux = FaceField::zeros(5);
        flux.values_mut()[2] = 1.0;
        let d = g.cell_divergence(&flux).unwrap();
        // cell 1 gains across its right face, cell 2 loses across its left face
        assert_eq!(d.values(), &[0.0, 4.0, -4.0, 0.0]);
        assert_eq!(d[1], -d[2]);
    }

    #[test]
    fn discrete_divergence_theorem() {
        // any flux with zero boundary faces telescopes to zero total mass rate
        let mut state = 0x2545f4914f6cdd1du64;
        let mut rng = move || {
            // xorshift64*
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545f4914f6cdd1d) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in [2usize, 3, 17, 64] {
            let g = grid(n);
            let mut flux = FaceField::zeros(n + 1);
            for i in 1..n {
                flux.values_mut()[i] = 10.0 * rng();
            }
            let d = g.cell_divergence(&flux).unwrap();
            let total: f64 = d.iter().sum::<f64>() * g.h();
            assert!(
                total.abs() <= 1e-13 * n as f64,
                "n = {n}: total = {total:e}"
            );
        }
    }

    #[test]
    fn laplacian_of_linear_field_vanishes_in_interior() {
        let g = grid(12);
        let f = g.sample(|x| 2.0 * x - 0.7);
        let lap = g.cell_divergence(&g.face_gradient(&f).unwrap()).unwrap();
        for i in 1..11 {
            assert!(lap[i].abs() < 1e-10, "cell {i}: {}", lap[i]);
        }
        // boundary pair sees the zero-flux closure, not the linear slope
        assert!(lap[0].abs() > 1.0);
        assert!(lap[11].abs() > 1.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = grid(5);
        assert!(matches!(
            g.face_gradient(&Field::zeros(4)),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            g.cell_divergence(&FaceField::zeros(5)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn norms_match_hand_values() {
        let g = grid(5);
        let ones = Field::constant(5, 1.0);
        assert!((norm(&ones, &g, Norm::L1) - 1.0).abs() < 1e-13);
        assert_eq!(norm(&ones, &g, Norm::LInf), 1.0);

        let g2 = Grid1D::new(0.0, 1.0, 2).unwrap();
        let f = Field::new(vec![3.0, -4.0]);
        let l2 = norm(&f, &g2, Norm::L2);
        assert!((l2 - 12.5f64.sqrt()).abs() < 1e-13);
    }
}
