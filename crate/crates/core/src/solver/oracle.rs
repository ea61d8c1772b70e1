//! Brute-force reference minimizer for tiny grids.
//!
//! Deliberately shares no assembly code with the main solver: the energy is
//! re-evaluated from scratch with its own cell loops, and minimization is
//! cyclic coordinate descent with golden-section line minimization.

use serde::Serialize;

use crate::energy::ProblemSpec;
use crate::field::Field;
use crate::numeric::golden_min;
use crate::{Error, Result};

/// Largest number of interior nodes the oracle accepts.
pub const MAX_ORACLE_NODES: usize = 8;
const MOVE_TOL: f64 = 1e-13;
const ENERGY_TOL: f64 = 1e-12;
/// Sweeps without a new smallest move before the move is taken as noise.
const STAGNATION_SWEEPS: usize = 20;
const LINE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    #[serde(skip)]
    pub field: Field,
    pub energy: f64,
    pub evaluations: usize,
    pub sweeps: usize,
    /// False if the budget ran out before the sweep tolerance was met.
    pub converged: bool,
}

struct Direct<'a> {
    p: &'a ProblemSpec,
    evaluations: usize,
}

impl Direct<'_> {
    /// `J(u)` by explicit loops over cells and their corners.
    fn energy(&mut self, u: &[f64]) -> f64 {
        self.evaluations += 1;
        let grid = self.p.grid();
        let (n1, dim) = (grid.cells_along(0), grid.dim());
        let n2 = if dim == 2 { grid.cells_along(1) } else { 1 };
        let h0 = grid.extent(0) / n1 as f64;
        let h1 = if dim == 2 { grid.extent(1) / n2 as f64 } else { 1.0 };
        let vol = h0 * h1;
        let g = self.p.g().values();
        let gamma = self.p.gamma().values();
        let (mut rho, mut sing) = (0.0, 0.0);
        for j in 0..n2 {
            for i in 0..n1 {
                let cell = i + n1 * j;
                let base = i + (n1 + 1) * j;
                let corners: Vec<usize> = if dim == 1 {
                    vec![base, base + 1]
                } else {
                    vec![base, base + 1, base + n1 + 1, base + n1 + 2]
                };
                let dx = (u[base + 1] - u[base]) / h0;
                let dy = if dim == 2 { (u[base + n1 + 1] - u[base]) / h1 } else { 0.0 };
                let m = (dx * dx + dy * dy).sqrt();
                rho += self.p.cell_nfunction(cell).value(m) * vol;
                let k = corners.len() as f64;
                let ub = corners.iter().map(|&c| u[c].abs()).sum::<f64>() / k;
                let gc = corners.iter().map(|&c| g[c]).sum::<f64>() / k;
                let q = 1.0 - corners.iter().map(|&c| gamma[c]).sum::<f64>() / k;
                sing += gc * ub.powf(q) / q * vol;
            }
        }
        self.p.kirchhoff().eval_a_hat(rho).expect("ρ ≥ 0") - sing
    }
}

/// Cyclic coordinate descent over interior nodes, each coordinate
/// minimized over `[0, U]` with `U` found by doubling (the energy is convex
/// along coordinates of the nonnegative cone). Stops when no coordinate
/// moves by more than `1e-13·(1 + max|u|)` in a sweep, or when a sweep
/// changes the energy by less than `1e-12` and the largest move has not
/// shrunk for 20 sweeps (it has hit the line-search noise floor), or when
/// `budget` energy evaluations are spent.
pub fn brute_force_oracle(p: &ProblemSpec, budget: usize) -> Result<OracleResult> {
    let grid = *p.grid();
    let interior = grid.interior_nodes();
    if interior.len() > MAX_ORACLE_NODES {
        return Err(Error::Precondition(format!(
            "oracle handles at most {MAX_ORACLE_NODES} interior nodes, grid has {}",
            interior.len()
        )));
    }
    let mut d = Direct { p, evaluations: 0 };
    let mut u = vec![0.0; grid.node_count()];
    let mut current = d.energy(&u);
    let mut sweeps = 0;
    let mut converged = false;
    let (mut best_move, mut since_best) = (f64::INFINITY, 0);
    while d.evaluations < budget {
        sweeps += 1;
        let before = current;
        let mut max_move = 0.0f64;
        for &n in &interior {
            let line = |s: f64, d: &mut Direct| {
                let mut w = u.clone();
                w[n] = s;
                d.energy(&w)
            };
            let mut hi = u[n].max(1e-3);
            while line(2.0 * hi, &mut d) < line(hi, &mut d) {
                hi *= 2.0;
            }
            hi *= 2.0;
            let (s, fs) = golden_min(|s| line(s, &mut d), 0.0, hi, LINE_TOL);
            let f0 = line(0.0, &mut d);
            let (mut s, mut fs) = if f0 < fs { (0.0, f0) } else { (s, fs) };
            // golden section resolves the minimizer only to ~sqrt(machine ε);
            // parabolic steps through well-separated points sharpen it while
            // the curvature is resolved above round-off
            let mut width = 1e-3 * (s + 1e-3);
            for _ in 0..4 {
                if s - width < 0.0 {
                    break;
                }
                let (fl, fr) = (line(s - width, &mut d), line(s + width, &mut d));
                let curv = fl - 2.0 * fs + fr;
                if !(curv > 1e-12 * fs.abs().max(f64::MIN_POSITIVE)) {
                    break;
                }
                let cand = s + 0.5 * width * (fl - fr) / curv;
                if cand < 0.0 || (cand - s).abs() > width {
                    break;
                }
                s = cand;
                fs = line(s, &mut d);
                width *= 1e-2;
            }
            max_move = max_move.max((s - u[n]).abs());
            u[n] = s;
            current = fs;
        }
        let scale = 1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_move < best_move {
            (best_move, since_best) = (max_move, 0);
        } else {
            since_best += 1;
        }
        let flat = (before - current).abs() < ENERGY_TOL && since_best >= STAGNATION_SWEEPS;
        if max_move <= MOVE_TOL * scale || flat {
            converged = true;
            break;
        }
    }
    let evaluations = d.evaluations;
    Ok(OracleResult {
        field: Field::new(grid, u, true)?,
        energy: current,
        evaluations,
        sweeps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{energy, Kirchhoff, KirchhoffSpec};
    use crate::field::Grid;
    use crate::nfunctions::NFunctionSpec;

    #[test]
    fn oracle_energy_agrees_with_assembly() {
        let grid = Grid::rectangle([1.0, 1.5], [4, 4]).unwrap();
        let p = ProblemSpec::sampled(
            grid,
            NFunctionSpec::elasticity(1.5).unwrap(),
            KirchhoffSpec::power(2.0, 2.0).unwrap(),
            |x, y| 1.0 + x * y,
            |x, _| 0.3 + 0.2 * x,
        )
        .unwrap();
        let u = Field::hat(grid).scaled(0.4);
        let mut d = Direct { p: &p, evaluations: 0 };
        let direct = d.energy(u.values());
        assert!((direct - energy(&p, &u).total).abs() < 1e-13);
    }

    #[test]
    fn zero_forcing_returns_zero() {
        let grid = Grid::interval(1.0, 6).unwrap();
        let p = ProblemSpec::new_unvalidated(
            NFunctionSpec::power(2.0).unwrap(),
            KirchhoffSpec::power(2.0, 2.0).unwrap(),
            Field::zeros(grid, false),
            Field::sample(grid, |_, _| 0.5, false).unwrap(),
        )
        .unwrap();
        let r = brute_force_oracle(&p, 100_000).unwrap();
        assert!(r.field.is_zero() && r.converged);
    }

    /// Dense Gaussian elimination with partial pivoting.
    fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, piv);
            b.swap(k, piv);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        x
    }

    #[test]
    fn quadratic_case_matches_linear_solve() {
        // J(u) = ∫|u'|² − ∫g·ū with A ≡ 1 and γ ≡ 0
        let grid = Grid::interval(1.0, 8).unwrap();
        let g = Field::sample(grid, |x, _| 1.0 + x, false).unwrap();
        let p = ProblemSpec::new_unvalidated(
            NFunctionSpec::power(2.0).unwrap(),
            KirchhoffSpec::new_unchecked(Kirchhoff::BoundedCoeff { lower: 1.0, upper: 1.0 }),
            g.clone(),
            Field::zeros(grid, false),
        )
        .unwrap();
        let h = 1.0 / 8.0;
        // stationarity: (2/h)(2u_i − u_{i−1} − u_{i+1}) = b_i, b_i = h(ḡ_{i−1/2} + ḡ_{i+1/2})/2
        let gv = g.values();
        let m = 7;
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for r in 0..m {
            let i = r + 1;
            a[r][r] = 4.0 / h;
            if r > 0 {
                a[r][r - 1] = -2.0 / h;
            }
            if r + 1 < m {
                a[r][r + 1] = -2.0 / h;
            }
            let left = 0.5 * (gv[i - 1] + gv[i]);
            let right = 0.5 * (gv[i] + gv[i + 1]);
            b[r] = 0.5 * h * (left + right);
        }
        let exact = solve_dense(a, b);
        let r = brute_force_oracle(&p, 5_000_000).unwrap();
        assert!(r.converged);
        for (k, &x) in exact.iter().enumerate() {
            assert!((r.field.values()[k + 1] - x).abs() < 1e-10, "{k}: {} vs {x}", r.field.values()[k + 1]);
        }
    }

    #[test]
    fn too_many_nodes_rejected() {
        let grid = Grid::rectangle([1.0, 1.0], [4, 5]).unwrap();
        let p = ProblemSpec::sampled(
            grid,
            NFunctionSpec::power(2.0).unwrap(),
            KirchhoffSpec::power(2.0, 2.0).unwrap(),
            |_, _| 1.0,
            |_, _| 0.5,
        )
        .unwrap();
        assert!(brute_force_oracle(&p, 10).is_err());
    }
}
