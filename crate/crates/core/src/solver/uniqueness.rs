use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{minimize, SolverConfig};
use crate::energy::{energy, Kirchhoff, ProblemSpec};
use crate::field::Field;
use crate::modular::modular;
use crate::numeric::{log_space, pairwise_sum};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StartSummary {
    pub seed: u64,
    pub energy: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultistartReport {
    pub starts: Vec<StartSummary>,
    /// `(i, j, ρ(u_i − u_j))` for `i < j`.
    pub pairwise_rho: Vec<(usize, usize, f64)>,
    pub max_pairwise_rho: f64,
    pub tolerance: f64,
    pub energy_spread: f64,
    /// Bounded Kirchhoff coefficient, with any declared `a̲` confirmed.
    pub theorem_regime: bool,
    pub passed: bool,
    #[serde(skip)]
    pub fields: Vec<Field>,
}

/// Samples `a(x,t) ≥ a̲` on a log grid when `a̲` is declared.
fn check_declared_regime(p: &ProblemSpec) -> Result<bool> {
    let bounded = matches!(p.kirchhoff().kind(), Kirchhoff::BoundedCoeff { .. });
    let Some(a_lower) = p.kirchhoff().a_lower() else {
        return Ok(false);
    };
    for cell in 0..p.grid().cell_count() {
        let f = p.cell_nfunction(cell);
        for t in log_space(1e-6, 1e6, 121) {
            let a = f.coefficient(t);
            if a < a_lower {
                return Err(Error::Precondition(format!(
                    "declared a_lower = {a_lower} but a = {a} at cell {cell}, t = {t}"
                )));
            }
        }
    }
    Ok(bounded)
}

/// Random nonnegative dirichlet start for `seed`.
fn random_start(p: &ProblemSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = rng.gen_range(0.05..2.0);
    Field::random(*p.grid(), &mut rng, 0.0, amp)
}

/// [`minimize`] from `k` random starts seeded `cfg.seed, cfg.seed+1, …`.
pub fn multistart_uniqueness(p: &ProblemSpec, cfg: &SolverConfig, k: usize) -> Result<MultistartReport> {
    if k < 2 {
        return Err(Error::Precondition(format!("multistart needs at least 2 starts, got {k}")));
    }
    let seeds: Vec<u64> = (0..k as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    multistart_with_seeds(p, cfg, &seeds)
}

/// Runs the starts concurrently; results are ordered by start index.
pub fn multistart_with_seeds(p: &ProblemSpec, cfg: &SolverConfig, seeds: &[u64]) -> Result<MultistartReport> {
    let theorem_regime = check_declared_regime(p)?;
    let results: Vec<Result<Field>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let start = random_start(p, seed);
            minimize(p, cfg, Some(&start))
                .map(|r| r.u_star)
                .map_err(|e| Error::Precondition(format!("start {i} (seed {seed}) failed: {e}")))
        })
        .collect();
    let fields: Vec<Field> = results.into_iter().collect::<Result<_>>()?;
    let nf = p.nfunction();
    let starts: Vec<StartSummary> = fields
        .iter()
        .zip(seeds)
        .map(|(u, &seed)| StartSummary {
            seed,
            energy: energy(p, u).total,
            rho: modular(nf, &u.gradient().magnitude()),
        })
        .collect();
    let mut pairwise_rho = Vec::new();
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let d = fields[i].sub(&fields[j]);
            pairwise_rho.push((i, j, modular(nf, &d.gradient().magnitude())));
        }
    }
    let max_pairwise_rho = pairwise_rho.iter().map(|t| t.2).fold(0.0, f64::max);
    let tolerance = 1e-6 * (1.0 + starts[0].rho);
    let (emin, emax) = starts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.energy), b.max(s.energy)));
    Ok(MultistartReport {
        starts,
        pairwise_rho,
        max_pairwise_rho,
        tolerance,
        energy_spread: emax - emin,
        theorem_regime,
        passed: max_pairwise_rho < tolerance,
        fields,
    })
}

/// Monotonicity quantities comparing two positive fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    /// `∫(A(ρ(u))a(|∇u|)∇u − A(ρ(v))a(|∇v|)∇v)·∇(u−v)`.
    pub lhs: f64,
    /// `∫g(u^{−γ} − v^{−γ})(u − v)`, nonpositive by monotonicity of `s^{−γ}`.
    pub rhs: f64,
    /// `lhs − C(δ)·ρ(u − v)`.
    pub strong_mono: f64,
    pub c_delta: f64,
}

/// `0.01·min{1, a̲, c̲}` with `a̲ = 1` and `c̲ = 1` where not declared.
pub fn default_c_delta(p: &ProblemSpec) -> f64 {
    let a = p.kirchhoff().a_lower().unwrap_or(1.0);
    let c = match p.kirchhoff().kind() {
        Kirchhoff::BoundedCoeff { lower, .. } => lower,
        Kirchhoff::PowerCoeff { .. } => 1.0,
    };
    0.01 * 1f64.min(a).min(c)
}

/// Evaluates the monotonicity inequalities behind uniqueness on `(u, v)`.
pub fn uniqueness_certificate(p: &ProblemSpec, u: &Field, v: &Field, c_delta: f64) -> Result<Certificate> {
    for (name, f) in [("u", u), ("v", v)] {
        if *f.grid() != *p.grid() {
            return Err(Error::Precondition(format!("{name} lives on a different grid")));
        }
        if !(f.interior_min() > 0.0) {
            return Err(Error::Precondition(format!(
                "certificate needs {name} > 0 at interior nodes, min is {}",
                f.interior_min()
            )));
        }
    }
    let k = p.kirchhoff();
    let nf = p.nfunction();
    let (gu, gv) = (u.gradient(), v.gradient());
    let au = k.eval_a(modular(nf, &gu.magnitude()))?;
    let av = k.eval_a(modular(nf, &gv.magnitude()))?;
    let vol = p.grid().cell_volume();
    let lhs_terms: Vec<f64> = (0..p.grid().cell_count())
        .map(|c| {
            let f = p.cell_nfunction(c);
            let [ux, uy] = gu.values()[c];
            let [vx, vy] = gv.values()[c];
            let cu = au * f.flux_coefficient(ux.hypot(uy), 0.0);
            let cv = av * f.flux_coefficient(vx.hypot(vy), 0.0);
            (cu * ux - cv * vx) * (ux - vx) + (cu * uy - cv * vy) * (uy - vy)
        })
        .collect();
    let (ub, vb) = (u.corner_average(), v.corner_average());
    let rhs_terms: Vec<f64> = (0..p.grid().cell_count())
        .map(|c| {
            let (a, b) = (ub.values()[c], vb.values()[c]);
            let gam = p.cell_gamma()[c];
            p.cell_g()[c] * (a.powf(-gam) - b.powf(-gam)) * (a - b)
        })
        .collect();
    let lhs = pairwise_sum(&lhs_terms) * vol;
    let rhs = pairwise_sum(&rhs_terms) * vol;
    let rho_diff = modular(nf, &u.sub(v).gradient().magnitude());
    Ok(Certificate {
        lhs,
        rhs,
        strong_mono: lhs - c_delta * rho_diff,
        c_delta,
    })
}
