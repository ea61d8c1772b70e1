//! The energy `J(u) = Â(ρ(u)) − ∫ g|u|^{1−γ}/(1−γ)`, its smoothed gradient,
//! the weak-form residual and structural probes.
//!
//! All cell data (`Φ`, `g`, `γ`, `|u|`) are corner-averaged to cells, so the
//! discrete energy is a smooth function of node values away from `u = 0`
//! and its gradient is assembled with the exact adjoints of the grid
//! operators.
//!
//! The smoothed energy replaces the singular integrand by
//! `((ū² + ε²)^{(1−γ)/2} − ε^{1−γ})/(1−γ)` where `ū` is the corner average
//! of `u` itself; for `u ≥ 0` this agrees with the unsmoothed energy at
//! `ε = 0`, decreases to it monotonically as `ε ↓ 0`, and is differentiable
//! across `u = 0`.

mod kirchhoff;
mod probes;

use serde::Serialize;

pub use kirchhoff::{Kirchhoff, KirchhoffSpec};
pub use probes::{
    check_convexity, coercivity_probe, negative_direction, CoercivityReport, CoercivityRow, ConvexityReport,
};

use crate::field::{Field, Grid};
use crate::nfunctions::{LocalNFunction, NFunctionSpec};
use crate::numeric::{map_indices, pairwise_sum};
use crate::{Error, Result};

/// Default coefficient regularization `δ` used in flux assembly.
pub const DEFAULT_DELTA: f64 = 1e-8;

/// A discretized problem: grid, N-function, Kirchhoff coefficient, and the
/// node fields `g` and `γ` with their cell averages.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemSpec {
    grid: Grid,
    nfunction: NFunctionSpec,
    kirchhoff: KirchhoffSpec,
    #[serde(skip)]
    g: Field,
    #[serde(skip)]
    gamma: Field,
    gamma_minus: f64,
    gamma_plus: f64,
    #[serde(skip)]
    cells: CellData,
}

#[derive(Debug, Clone)]
struct CellData {
    phi: Vec<LocalNFunction>,
    g: Vec<f64>,
    gamma: Vec<f64>,
}

impl ProblemSpec {
    /// Validates `g ≥ 0` nontrivial and `γ ∈ (0,1)` on every node.
    pub fn new(nfunction: NFunctionSpec, kirchhoff: KirchhoffSpec, g: Field, gamma: Field) -> Result<Self> {
        if let Some((n, v)) = g.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "(G0) requires g to be a nontrivial nonnegative function; g = {v} < 0 at node {n}"
            )));
        }
        if !g.values().iter().any(|&v| v > 0.0) {
            return Err(Error::InvalidParameter(
                "(G0) requires g to be a nontrivial nonnegative function; g vanishes identically".into(),
            ));
        }
        if let Some((n, v)) = gamma
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && **v < 1.0))
        {
            return Err(Error::InvalidParameter(format!(
                "γ must take values in γ∈(0,1); γ = {v} at node {n}"
            )));
        }
        Self::new_unvalidated(nfunction, kirchhoff, g, gamma)
    }

    /// Skips the `g` and `γ` range checks (for controls such as `g ≡ 0` or
    /// `γ ≡ 0`); grid consistency is still checked and `γ < 1` is required.
    pub fn new_unvalidated(
        nfunction: NFunctionSpec,
        kirchhoff: KirchhoffSpec,
        g: Field,
        gamma: Field,
    ) -> Result<Self> {
        let grid = *g.grid();
        if *gamma.grid() != grid {
            return Err(Error::InvalidParameter("g and γ live on different grids".into()));
        }
        nfunction.check_grid(&grid)?;
        if let Some(v) = gamma.values().iter().find(|v| !(**v < 1.0)) {
            return Err(Error::InvalidParameter(format!("γ must stay below 1, got {v}")));
        }
        let cells = CellData {
            phi: (0..grid.cell_count()).map(|c| nfunction.at_cell(&grid, c)).collect(),
            g: g.corner_average().values().to_vec(),
            gamma: gamma.corner_average().values().to_vec(),
        };
        let gamma_minus = gamma.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let gamma_plus = gamma.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(ProblemSpec {
            grid,
            nfunction,
            kirchhoff,
            g,
            gamma,
            gamma_minus,
            gamma_plus,
            cells,
        })
    }

    /// Samples `g` and `γ` from pointwise expressions and validates.
    pub fn sampled(
        grid: Grid,
        nfunction: NFunctionSpec,
        kirchhoff: KirchhoffSpec,
        g: impl Fn(f64, f64) -> f64,
        gamma: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let g = Field::sample(grid, g, false)?;
        let gamma = Field::sample(grid, gamma, false)?;
        Self::new(nfunction, kirchhoff, g, gamma)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nfunction(&self) -> &NFunctionSpec {
        &self.nfunction
    }

    pub fn kirchhoff(&self) -> &KirchhoffSpec {
        &self.kirchhoff
    }

    pub fn g(&self) -> &Field {
        &self.g
    }

    pub fn gamma(&self) -> &Field {
        &self.gamma
    }

    pub fn gamma_minus(&self) -> f64 {
        self.gamma_minus
    }

    pub fn gamma_plus(&self) -> f64 {
        self.gamma_plus
    }

    /// `Φ` at the centre of `cell`.
    pub fn cell_nfunction(&self, cell: usize) -> &LocalNFunction {
        &self.cells.phi[cell]
    }

    /// Cell averages of `g` and `γ`.
    pub fn cell_g(&self) -> &[f64] {
        &self.cells.g
    }

    pub fn cell_gamma(&self) -> &[f64] {
        &self.cells.gamma
    }

    fn check_field(&self, u: &Field) {
        assert_eq!(*u.grid(), self.grid, "field lives on a different grid");
    }
}

/// Parts of `J(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub rho: f64,
    pub a_hat: f64,
    pub singular: f64,
    pub total: f64,
}

/// `ρ(u)` using the problem's precomputed cell N-functions.
pub fn rho(p: &ProblemSpec, u: &Field) -> f64 {
    p.check_field(u);
    let grad = u.gradient();
    let gv = grad.values();
    let terms = map_indices(gv.len(), |c| p.cells.phi[c].value(gv[c][0].hypot(gv[c][1])));
    pairwise_sum(&terms) * p.grid.cell_volume()
}

/// The unsmoothed energy with its parts.
pub fn energy(p: &ProblemSpec, u: &Field) -> EnergyBreakdown {
    let rho = rho(p, u);
    let a_hat = p.kirchhoff.a_hat(rho);
    let ubar = u.abs_corner_average();
    let ub = ubar.values();
    let terms = map_indices(ub.len(), |c| {
        let q = 1.0 - p.cells.gamma[c];
        p.cells.g[c] * ub[c].powf(q) / q
    });
    let singular = pairwise_sum(&terms) * p.grid.cell_volume();
    EnergyBreakdown {
        rho,
        a_hat,
        singular,
        total: a_hat - singular,
    }
}

/// Smoothed singular primitive and its derivative in `ū`.
fn smoothed_primitive(ubar: f64, eps: f64, q: f64) -> f64 {
    if eps == 0.0 {
        return ubar.abs().powf(q) / q;
    }
    // ((ū²+ε²)^{q/2} − ε^q)/q = ε^q·((1+r²)^{q/2} − 1)/q with r = ū/ε
    let r = ubar / eps;
    eps.powf(q) * ((0.5 * q) * (r * r).ln_1p()).exp_m1() / q
}

fn smoothed_derivative(ubar: f64, eps: f64, q: f64) -> f64 {
    let s2 = ubar * ubar + eps * eps;
    if s2 == 0.0 {
        return 0.0;
    }
    ubar * s2.powf(0.5 * q - 1.0)
}

/// `J_ε(u) = Â(ρ(u)) − ∫ g((ū²+ε²)^{(1−γ)/2} − ε^{1−γ})/(1−γ)`.
pub fn smoothed_energy(p: &ProblemSpec, u: &Field, eps: f64) -> f64 {
    let rho = rho(p, u);
    let ubar = u.corner_average();
    let ub = ubar.values();
    let terms = map_indices(ub.len(), |c| {
        let q = 1.0 - p.cells.gamma[c];
        p.cells.g[c] * smoothed_primitive(ub[c], eps, q)
    });
    p.kirchhoff.a_hat(rho) - pairwise_sum(&terms) * p.grid.cell_volume()
}

/// Nodal vector of `∇ρ(u)` with the coefficient evaluated at
/// `sqrt(|∇u|² + δ²)`.
fn rho_gradient(p: &ProblemSpec, u: &Field, delta: f64) -> Vec<f64> {
    let grad = u.gradient();
    let gv = grad.values();
    let vol = p.grid.cell_volume();
    let flux = map_indices(gv.len(), |c| {
        let [dx, dy] = gv[c];
        let a = p.cells.phi[c].flux_coefficient(dx.hypot(dy), delta);
        [vol * a * dx, vol * a * dy]
    });
    p.grid.gradient_adjoint(&flux)
}

/// Gradient of [`smoothed_energy`] with respect to node values, boundary
/// entries zeroed. With `δ > 0` the principal part uses the regularized
/// coefficient and is then exact only up to `O(δ²)`.
pub fn energy_gradient(p: &ProblemSpec, u: &Field, eps: f64, delta: f64) -> Field {
    let rho = rho(p, u);
    let a = p.kirchhoff.a(rho);
    let principal = rho_gradient(p, u, delta);
    let ubar = u.corner_average();
    let ub = ubar.values();
    let vol = p.grid.cell_volume();
    let dens = map_indices(ub.len(), |c| {
        let q = 1.0 - p.cells.gamma[c];
        vol * p.cells.g[c] * smoothed_derivative(ub[c], eps, q)
    });
    let singular = p.grid.corner_average_adjoint(&dens);
    let values = (0..p.grid.node_count())
        .map(|n| {
            if p.grid.is_boundary(n) {
                0.0
            } else {
                a * principal[n] - singular[n]
            }
        })
        .collect();
    Field::new(p.grid, values, true).expect("gradient of a finite field is finite")
}

/// Discrete weak-form residual against the nodal hat basis.
#[derive(Debug, Clone, Serialize)]
pub struct WeakResidual {
    #[serde(skip)]
    pub vector: Field,
    /// `max_i |r_i| / w_i` with `w_i` the nodal quadrature weight.
    pub norm: f64,
    /// Lower floor applied to `u` inside `u^{−γ}`.
    pub cutoff: f64,
    /// Whether any cell value fell below the floor.
    pub cutoff_active: bool,
}

/// `r_i = A(ρ(u))∫a(x,|∇u|)∇u·∇e_i − ∫g·max(u, cutoff)^{−γ}e_i` on interior
/// nodes, discretized as the exact gradient of the unsmoothed energy.
pub fn weak_residual(p: &ProblemSpec, u: &Field, cutoff: f64) -> Result<WeakResidual> {
    p.check_field(u);
    if !(cutoff > 0.0) {
        return Err(Error::domain("weak_residual cutoff", cutoff, "cutoff > 0"));
    }
    let interior = p.grid.interior_nodes();
    if let Some(&n) = interior.iter().find(|&&n| !(u.values()[n] > 0.0)) {
        return Err(Error::Precondition(format!(
            "weak residual needs u > 0 at interior nodes; u = {} at node {n}",
            u.values()[n]
        )));
    }
    let a = p.kirchhoff.a(rho(p, u));
    let principal = rho_gradient(p, u, 0.0);
    let ubar = u.corner_average();
    let vol = p.grid.cell_volume();
    let mut active = false;
    let dens: Vec<f64> = ubar
        .values()
        .iter()
        .enumerate()
        .map(|(c, &ub)| {
            if ub < cutoff {
                active = true;
            }
            vol * p.cells.g[c] * ub.max(cutoff).powf(-p.cells.gamma[c])
        })
        .collect();
    let singular = p.grid.corner_average_adjoint(&dens);
    let weights = p.grid.nodal_weights();
    let mut r = vec![0.0; p.grid.node_count()];
    let mut norm = 0.0f64;
    for &n in &interior {
        r[n] = a * principal[n] - singular[n];
        norm = norm.max(r[n].abs() / weights[n]);
    }
    Ok(WeakResidual {
        vector: Field::new(p.grid, r, true)?,
        norm,
        cutoff,
        cutoff_active: active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_1d() -> ProblemSpec {
        let grid = Grid::interval(1.0, 6).unwrap();
        ProblemSpec::sampled(
            grid,
            NFunctionSpec::power(2.0).unwrap(),
            KirchhoffSpec::power(2.0, 2.0).unwrap(),
            |_, _| 1.0,
            |_, _| 0.5,
        )
        .unwrap()
    }

    #[test]
    fn validation_messages() {
        let grid = Grid::interval(1.0, 6).unwrap();
        let nf = NFunctionSpec::power(2.0).unwrap();
        let k = KirchhoffSpec::power(2.0, 2.0).unwrap();
        let err = ProblemSpec::sampled(grid, nf.clone(), k, |_, _| 1.0, |_, _| 1.5).unwrap_err();
        assert!(err.to_string().contains("γ∈(0,1)"), "{err}");
        let err = ProblemSpec::sampled(grid, nf.clone(), k, |_, _| 0.0, |_, _| 0.5).unwrap_err();
        assert!(err.to_string().contains("nontrivial nonnegative function"), "{err}");
        let err = ProblemSpec::sampled(grid, nf, k, |x, _| x - 0.5, |_, _| 0.5).unwrap_err();
        assert!(err.to_string().contains("(G0)"));
    }

    #[test]
    fn zero_field_has_zero_energy_and_gradient() {
        let p = reference_1d();
        let z = Field::zeros(*p.grid(), true);
        assert_eq!(energy(&p, &z).total, 0.0);
        let g = energy_gradient(&p, &z, 1e-3, 0.0);
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hat_energy_matches_hand_summation() {
        let p = reference_1d();
        let u = Field::hat(*p.grid());
        let h = 1.0 / 6.0;
        let v: Vec<f64> = (0..7).map(|i| 1.0 - (2.0 * i as f64 * h - 1.0).abs()).collect();
        let mut rho = 0.0;
        let mut sing = 0.0;
        for i in 0..6 {
            let d = (v[i + 1] - v[i]) / h;
            rho += d * d * h;
            sing += ((v[i] + v[i + 1]) / 2.0).sqrt() / 0.5 * h;
        }
        let e = energy(&p, &u);
        assert!((e.rho - rho).abs() < 1e-13);
        assert!((e.singular - sing).abs() < 1e-13);
        assert!((e.total - (rho * rho - sing)).abs() < 1e-12);
        assert_eq!(e.total, e.a_hat - e.singular);
    }

    #[test]
    fn zero_forcing_energy_is_a_hat() {
        let grid = Grid::interval(1.0, 6).unwrap();
        let p = ProblemSpec::new_unvalidated(
            NFunctionSpec::power(2.0).unwrap(),
            KirchhoffSpec::power(2.0, 2.0).unwrap(),
            Field::zeros(grid, false),
            Field::sample(grid, |_, _| 0.5, false).unwrap(),
        )
        .unwrap();
        let u = Field::hat(grid);
        let e = energy(&p, &u);
        assert_eq!(e.singular, 0.0);
        assert!(e.total >= 0.0 && e.total == e.a_hat);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let p = reference_1d();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let u = Field::random(*p.grid(), &mut rng, 0.05, 1.0);
            let v = Field::random(*p.grid(), &mut rng, -1.0, 1.0);
            let h = 1e-6;
            let fd = (smoothed_energy(&p, &u.add_scaled(&v, h), 1e-3)
                - smoothed_energy(&p, &u.add_scaled(&v, -h), 1e-3))
                / (2.0 * h);
            let an = energy_gradient(&p, &u, 1e-3, 0.0).dot(&v);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "{fd} vs {an}");
        }
    }

    #[test]
    fn smoothing_decreases_to_the_energy() {
        let p = reference_1d();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = Field::random(*p.grid(), &mut rng, 0.0, 1.0);
        let exact = energy(&p, &u).total;
        let mut prev = f64::INFINITY;
        for k in 1..=10 {
            let je = smoothed_energy(&p, &u, 10f64.powi(-k));
            assert!(je >= exact - 1e-14 && je <= prev);
            prev = je;
        }
        assert!((smoothed_energy(&p, &u, 0.0) - exact).abs() < 1e-14);
        assert!((prev - exact).abs() < 1e-4);
    }

    #[test]
    fn pure_power_scaling_law() {
        let grid = Grid::interval(1.0, 8).unwrap();
        let p = ProblemSpec::sampled(
            grid,
            NFunctionSpec::power(3.0).unwrap(),
            KirchhoffSpec::power(2.0, 1.5).unwrap(),
            |_, _| 1.0,
            |_, _| 0.3,
        )
        .unwrap();
        let u = Field::random(grid, &mut ChaCha8Rng::seed_from_u64(2), 0.0, 1.0);
        let base = energy(&p, &u).a_hat;
        for c in [0.5, 2.0, 7.0] {
            let scaled = energy(&p, &u.scaled(c)).a_hat;
            let expect = c.powf(3.0 * 1.5) * base;
            assert!((scaled - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn quadratic_gradient_is_linear() {
        let grid = Grid::interval(1.0, 8).unwrap();
        let p = ProblemSpec::new_unvalidated(
            NFunctionSpec::power(2.0).unwrap(),
            KirchhoffSpec::new_unchecked(Kirchhoff::BoundedCoeff { lower: 1.0, upper: 1.0 }),
            Field::zeros(grid, false),
            Field::zeros(grid, false),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = Field::random(grid, &mut rng, -1.0, 1.0);
        let v = Field::random(grid, &mut rng, -1.0, 1.0);
        let (a, b) = (1.7, -0.4);
        let lhs = energy_gradient(&p, &u.scaled(a).add_scaled(&v, b), 0.0, 0.0);
        let rhs = energy_gradient(&p, &u, 0.0, 0.0)
            .scaled(a)
            .add_scaled(&energy_gradient(&p, &v, 0.0, 0.0), b);
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }

    #[test]
    fn singular_difference_is_controlled_pointwise() {
        // |J(u) − J(v)| ≤ |K(u) − K(v)| + ∫g|ū − v̄|^{1−γ}/(1−γ)
        let p = reference_1d();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let s = rng.gen_range(0.1..3.0);
            let u = Field::random(*p.grid(), &mut rng, 0.0, s);
            let v = Field::random(*p.grid(), &mut rng, 0.0, s);
            let (eu, ev) = (energy(&p, &u), energy(&p, &v));
            let diff = u.sub(&v).abs_corner_average();
            let bound: f64 = diff.values().iter().map(|d| d.sqrt() / 0.5).sum::<f64>() * p.grid().cell_volume();
            assert!((eu.total - ev.total).abs() <= (eu.a_hat - ev.a_hat).abs() + bound + 1e-12);
        }
    }

    #[test]
    fn weak_residual_rejects_nonpositive_interior() {
        let p = reference_1d();
        let z = Field::zeros(*p.grid(), true);
        assert!(matches!(weak_residual(&p, &z, 1e-3), Err(Error::Precondition(_))));
    }
}
