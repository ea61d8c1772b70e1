//! Uniform Cartesian grids on intervals and rectangles, node-valued fields
//! with optional homogeneous Dirichlet boundary, forward-difference cell
//! gradients and the corner-average cell quadrature.
//!
//! Nodes are numbered with the first axis fastest: node `(i, j)` has index
//! `i + (n1 + 1)·j`. Cells are numbered the same way by their lower corner.

use rand::Rng;
use serde::Serialize;

use crate::numeric::pairwise_sum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    extents: [f64; 2],
    cells: [usize; 2],
}

impl Grid {
    pub fn interval(length: f64, cells: usize) -> Result<Self> {
        Self::new(1, [length, 0.0], [cells, 0])
    }

    pub fn rectangle(extents: [f64; 2], cells: [usize; 2]) -> Result<Self> {
        Self::new(2, extents, cells)
    }

    fn new(dim: usize, extents: [f64; 2], cells: [usize; 2]) -> Result<Self> {
        for axis in 0..dim {
            if !(extents[axis].is_finite() && extents[axis] > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "grid extent along axis {axis} must be positive, got {}",
                    extents[axis]
                )));
            }
            if cells[axis] < 4 {
                return Err(Error::InvalidParameter(format!(
                    "grid needs at least 4 cells along axis {axis}, got {}",
                    cells[axis]
                )));
            }
        }
        Ok(Grid { dim, extents, cells })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    pub fn cells_along(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.cells[axis] as f64
    }

    fn nx(&self) -> usize {
        self.cells[0] + 1
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim).map(|a| self.cells[a] + 1).product()
    }

    pub fn cell_count(&self) -> usize {
        (0..self.dim).map(|a| self.cells[a]).product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Number of corners per cell, `2^dim`.
    pub fn corners_per_cell(&self) -> usize {
        1 << self.dim
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i + self.nx() * j
    }

    /// Lattice coordinates `(i, j)` of a node (`j = 0` in 1D).
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % self.nx(), node / self.nx())
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(node);
        if self.dim == 1 {
            [i as f64 * self.spacing(0), 0.0]
        } else {
            [i as f64 * self.spacing(0), j as f64 * self.spacing(1)]
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let (i, j) = self.node_ij(node);
        let on_x = i == 0 || i == self.cells[0];
        if self.dim == 1 {
            on_x
        } else {
            on_x || j == 0 || j == self.cells[1]
        }
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&n| !self.is_boundary(n))
            .collect()
    }

    /// Node index of the lower corner of `cell`.
    pub fn cell_origin(&self, cell: usize) -> usize {
        let i = cell % self.cells[0];
        let j = cell / self.cells[0];
        self.node_index(i, j)
    }

    /// Corner node indices of `cell`; only the first `2^dim` entries are used.
    pub fn cell_corners(&self, cell: usize) -> [usize; 4] {
        let n0 = self.cell_origin(cell);
        if self.dim == 1 {
            [n0, n0 + 1, n0, n0 + 1]
        } else {
            let nx = self.nx();
            [n0, n0 + 1, n0 + nx, n0 + nx + 1]
        }
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let o = self.node_coords(self.cell_origin(cell));
        if self.dim == 1 {
            [o[0] + 0.5 * self.spacing(0), 0.0]
        } else {
            [o[0] + 0.5 * self.spacing(0), o[1] + 0.5 * self.spacing(1)]
        }
    }

    /// Corner average of node data over one cell.
    pub fn corner_average(&self, cell: usize, nodal: &[f64]) -> f64 {
        let c = self.cell_corners(cell);
        match self.dim {
            1 => 0.5 * (nodal[c[0]] + nodal[c[1]]),
            _ => 0.25 * ((nodal[c[0]] + nodal[c[1]]) + (nodal[c[2]] + nodal[c[3]])),
        }
    }

    /// Quadrature weight carried by each node: `Σ_{cells ∋ node} vol / 2^dim`.
    pub fn nodal_weights(&self) -> Vec<f64> {
        let share = self.cell_volume() / self.corners_per_cell() as f64;
        let mut w = vec![0.0; self.node_count()];
        for cell in 0..self.cell_count() {
            for &n in &self.cell_corners(cell)[..self.corners_per_cell()] {
                w[n] += share;
            }
        }
        w
    }

    /// Transpose of the forward-difference gradient: maps per-cell vectors
    /// to node values, so that `Σ_c flux_c·(∇u)_c = Σ_n out_n·u_n`.
    pub fn gradient_adjoint(&self, flux: &[[f64; 2]]) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count()];
        let nx = self.nx();
        let h0 = self.spacing(0);
        for (cell, f) in flux.iter().enumerate() {
            let n0 = self.cell_origin(cell);
            let fx = f[0] / h0;
            out[n0] -= fx;
            out[n0 + 1] += fx;
            if self.dim == 2 {
                let fy = f[1] / self.spacing(1);
                out[n0] -= fy;
                out[n0 + nx] += fy;
            }
        }
        out
    }

    /// Transpose of the corner average.
    pub fn corner_average_adjoint(&self, cell_values: &[f64]) -> Vec<f64> {
        let k = self.corners_per_cell();
        let share = 1.0 / k as f64;
        let mut out = vec![0.0; self.node_count()];
        for (cell, v) in cell_values.iter().enumerate() {
            for &n in &self.cell_corners(cell)[..k] {
                out[n] += share * v;
            }
        }
        out
    }
}

/// One value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<T = f64> {
    grid: Grid,
    values: Vec<T>,
}

impl<T> CellField<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Self {
        assert_eq!(values.len(), grid.cell_count(), "cell field size mismatch");
        CellField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> CellField<U> {
        CellField {
            grid: self.grid,
            values: self.values.iter().map(f).collect(),
        }
    }
}

impl CellField<f64> {
    pub fn constant(grid: Grid, c: f64) -> Self {
        CellField::new(grid, vec![c; grid.cell_count()])
    }

    /// Cell rule: `Σ_c f_c · vol`.
    pub fn integrate(&self) -> f64 {
        pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        CellField::new(self.grid, values)
    }
}

impl CellField<[f64; 2]> {
    /// Euclidean magnitude per cell.
    pub fn magnitude(&self) -> CellField<f64> {
        self.map(|v| v[0].hypot(v[1]))
    }
}

/// Node-valued function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    dirichlet: bool,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, dirichlet: bool) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { node, value });
        }
        if dirichlet {
            if let Some(node) = (0..values.len()).find(|&n| grid.is_boundary(n) && values[n] != 0.0) {
                return Err(Error::Precondition(format!(
                    "dirichlet field is nonzero at boundary node {node}"
                )));
            }
        }
        Ok(Field {
            grid,
            values,
            dirichlet,
        })
    }

    pub fn zeros(grid: Grid, dirichlet: bool) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.node_count()],
            dirichlet,
        }
    }

    /// Nodewise evaluation of `expr(x, y)` (`y = 0` in 1D). With `dirichlet`
    /// the boundary is zeroed after evaluation.
    pub fn sample(grid: Grid, expr: impl Fn(f64, f64) -> f64, dirichlet: bool) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.node_count());
        for node in 0..grid.node_count() {
            let [x, y] = grid.node_coords(node);
            let v = expr(x, y);
            if !v.is_finite() {
                return Err(Error::NonFinite { node, value: v });
            }
            values.push(if dirichlet && grid.is_boundary(node) { 0.0 } else { v });
        }
        Ok(Field {
            grid,
            values,
            dirichlet,
        })
    }

    /// Tensor-product hat: `∏ (1 − |2x_i/L_i − 1|)`, zero on the boundary.
    pub fn hat(grid: Grid) -> Self {
        let dim = grid.dim();
        Field::sample(
            grid,
            |x, y| {
                let hx = 1.0 - (2.0 * x / grid.extent(0) - 1.0).abs();
                if dim == 1 {
                    hx
                } else {
                    hx * (1.0 - (2.0 * y / grid.extent(1) - 1.0).abs())
                }
            },
            true,
        )
        .expect("hat profile is finite")
    }

    /// Dirichlet field with interior values drawn uniformly from `[lo, hi)`.
    pub fn random<R: Rng + ?Sized>(grid: Grid, rng: &mut R, lo: f64, hi: f64) -> Self {
        let values = (0..grid.node_count())
            .map(|n| {
                if grid.is_boundary(n) {
                    0.0
                } else {
                    rng.gen_range(lo..hi)
                }
            })
            .collect();
        Field {
            grid,
            values,
            dirichlet: true,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    /// Smallest value over interior nodes.
    pub fn interior_min(&self) -> f64 {
        (0..self.values.len())
            .filter(|&n| !self.grid.is_boundary(n))
            .map(|n| self.values[n])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            dirichlet: self.dirichlet,
        }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, other: &Field, c: f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
            dirichlet: self.dirichlet && other.dirichlet,
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.add_scaled(other, -1.0)
    }

    pub fn dot(&self, other: &Field) -> f64 {
        let prods: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        pairwise_sum(&prods)
    }

    /// Forward-difference gradient on each cell from its lower corner.
    pub fn gradient(&self) -> CellField<[f64; 2]> {
        let g = &self.grid;
        let u = &self.values;
        let h0 = g.spacing(0);
        let h1 = if g.dim() == 2 { g.spacing(1) } else { 1.0 };
        let nx = g.cells_along(0) + 1;
        let values = (0..g.cell_count())
            .map(|cell| {
                let n0 = g.cell_origin(cell);
                let dx = (u[n0 + 1] - u[n0]) / h0;
                let dy = if g.dim() == 2 {
                    (u[n0 + nx] - u[n0]) / h1
                } else {
                    0.0
                };
                [dx, dy]
            })
            .collect();
        CellField::new(*g, values)
    }

    /// Corner average of the node values on each cell.
    pub fn corner_average(&self) -> CellField<f64> {
        let g = &self.grid;
        CellField::new(
            *g,
            (0..g.cell_count())
                .map(|c| g.corner_average(c, &self.values))
                .collect(),
        )
    }

    /// Corner average of `|u|` on each cell.
    pub fn abs_corner_average(&self) -> CellField<f64> {
        let abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        let g = &self.grid;
        CellField::new(*g, (0..g.cell_count()).map(|c| g.corner_average(c, &abs)).collect())
    }

    /// Field CSV: a `dim,n1[,n2]` line with the cell counts, then one node
    /// value per line in node order.
    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut s = if g.dim() == 1 {
            format!("1,{}\n", g.cells_along(0))
        } else {
            format!("2,{},{}\n", g.cells_along(0), g.cells_along(1))
        };
        for v in &self.values {
            s.push_str(&format!("{v:.16e}\n"));
        }
        s
    }

    /// Parses Field CSV for a known grid; the shape line must match.
    pub fn from_csv(grid: Grid, text: &str, dirichlet: bool) -> Result<Field> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field CSV".into()))?;
        let shape: Vec<usize> = header
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad field CSV header {header:?}: {e}")))?;
        let expected: Vec<usize> = std::iter::once(grid.dim())
            .chain((0..grid.dim()).map(|a| grid.cells_along(a)))
            .collect();
        if shape != expected {
            return Err(Error::Parse(format!(
                "field CSV shape {shape:?} does not match grid {expected:?}"
            )));
        }
        let mut values = Vec::with_capacity(grid.node_count());
        for line in lines {
            for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let v = tok
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value {tok:?}: {e}")))?;
                values.push(v);
            }
        }
        Field::new(grid, values, dirichlet)
    }
}

/// `∫u² / ∫|∇u|²` for a nonzero dirichlet field.
pub fn poincare_ratio(u: &Field) -> f64 {
    let num = u.corner_average().map(|v| v * v).integrate();
    let den = u.gradient().map(|v| v[0] * v[0] + v[1] * v[1]).integrate();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_exact_on_affine_1d() {
        let g = Grid::interval(1.0, 5).unwrap();
        let u = Field::sample(g, |x, _| x, false).unwrap();
        for v in u.gradient().values() {
            assert!((v[0] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_exact_on_affine_2d() {
        let g = Grid::rectangle([1.0, 2.0], [4, 6]).unwrap();
        let u = Field::sample(g, |x, y| 2.0 * x + 3.0 * y, false).unwrap();
        for v in u.gradient().values() {
            assert!((v[0] - 2.0).abs() < 1e-13 && (v[1] - 3.0).abs() < 1e-13);
        }
        let z = Field::zeros(g, true);
        assert!(z.gradient().values().iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn integrate_examples() {
        let sq = Grid::rectangle([1.0, 1.0], [4, 4]).unwrap();
        assert!((CellField::constant(sq, 1.0).integrate() - 1.0).abs() < 1e-15);
        let seg = Grid::interval(2.0, 8).unwrap();
        assert!((CellField::constant(seg, 3.0).integrate() - 6.0).abs() < 1e-14);
        let unit = Grid::interval(1.0, 4).unwrap();
        let x = Field::sample(unit, |x, _| x, false).unwrap();
        assert_eq!(x.corner_average().integrate(), 0.5);
    }

    #[test]
    fn sample_on_nodes_examples() {
        let g = Grid::interval(1.0, 4).unwrap();
        let ones = Field::sample(g, |_, _| 1.0, false).unwrap();
        assert!(ones.values().iter().all(|&v| v == 1.0));
        let s = Field::sample(g, |x, _| (std::f64::consts::PI * x).sin(), true).unwrap();
        assert_eq!(s.values()[0], 0.0);
        assert_eq!(s.values()[4], 0.0);
        let q = Field::sample(g, |x, _| x * (1.0 - x), false).unwrap();
        assert_eq!(q.values(), &[0.0, 0.1875, 0.25, 0.1875, 0.0]);
        let err = Field::sample(g, |x, _| 1.0 / (x - 0.5), false).unwrap_err();
        assert!(matches!(err, Error::NonFinite { node: 2, .. }));
    }

    #[test]
    fn grid_validation_and_counts() {
        assert!(Grid::interval(1.0, 3).is_err());
        assert!(Grid::interval(0.0, 8).is_err());
        let g = Grid::rectangle([1.0, 1.0], [4, 5]).unwrap();
        assert_eq!(g.node_count(), 30);
        assert_eq!(g.cell_count(), 20);
        assert_eq!(g.interior_nodes().len(), 3 * 4);
        let w: f64 = g.nodal_weights().iter().sum();
        assert!((w - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adjoints_are_transposes() {
        let g = Grid::rectangle([1.0, 1.5], [4, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = Field::random(g, &mut rng, -1.0, 1.0);
        let flux: Vec<[f64; 2]> = (0..g.cell_count())
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let lhs: f64 = u
            .gradient()
            .values()
            .iter()
            .zip(&flux)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
            .sum();
        let adj = g.gradient_adjoint(&flux);
        let rhs: f64 = adj.iter().zip(u.values()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);

        let cells: Vec<f64> = (0..g.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs: f64 = u.corner_average().values().iter().zip(&cells).map(|(a, b)| a * b).sum();
        let adj = g.corner_average_adjoint(&cells);
        let rhs: f64 = adj.iter().zip(u.values()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_and_shape_check() {
        let g = Grid::rectangle([1.0, 1.0], [4, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = Field::random(g, &mut rng, 0.0, 1.0);
        let back = Field::from_csv(g, &u.to_csv(), true).unwrap();
        assert_eq!(back, u);
        let other = Grid::rectangle([1.0, 1.0], [4, 5]).unwrap();
        assert!(Field::from_csv(other, &u.to_csv(), true).is_err());
    }

    #[test]
    fn dirichlet_boundary_enforced() {
        let g = Grid::interval(1.0, 4).unwrap();
        assert!(Field::new(g, vec![1.0, 0.0, 0.0, 0.0, 0.0], true).is_err());
        assert!(Field::new(g, vec![1.0, 0.0, 0.0, 0.0, 0.0], false).is_ok());
    }

    #[test]
    fn discrete_poincare_constant_is_stable() {
        let g = Grid::rectangle([1.0, 1.0], [8, 8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ratios: Vec<f64> = (0..200)
            .map(|_| poincare_ratio(&Field::random(g, &mut rng, -1.0, 1.0)))
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        // the continuous constant on the unit square is 1/(2π²) ≈ 0.0507
        assert!(max > 0.0 && max < 0.1, "{max}");
        let hat = poincare_ratio(&Field::hat(g));
        assert!(hat < 0.1);
    }
}
