//! Modulars, Luxemburg and Sobolev norms, and the sampled norm–modular
//! relations and Hölder pairing.
//!
//! Variable-exponent families are evaluated at cell centres, with the
//! exponent corner-averaged from the node map, matching the quadrature rule.

use serde::Serialize;

use crate::field::{CellField, Field};
use crate::nfunctions::{IndexReport, LocalNFunction, NFunctionSpec};
use crate::numeric::{map_indices, pairwise_sum};
use crate::report::CheckReport;
use crate::{Error, Result};

/// Maximum number of doublings (or halvings) while bracketing the norm.
pub const MAX_BRACKET_STEPS: usize = 400;
/// Maximum number of bisection steps.
pub const MAX_BISECTIONS: usize = 200;
/// Target relative width of the final bracket.
pub const LUXEMBURG_REL_TOL: f64 = 1e-10;
/// Slack granted to the norm–modular inequalities.
pub const RELATION_SLACK: f64 = 1e-8;

fn cell_functions(spec: &NFunctionSpec, f: &CellField) -> Vec<LocalNFunction> {
    let g = f.grid();
    (0..g.cell_count()).map(|c| spec.at_cell(g, c)).collect()
}

/// `∫Φ(x, f(x))dx` by the cell rule, for `f ≥ 0`.
///
/// # Panics
/// If the spec's exponent map does not match the grid of `f`.
pub fn modular(spec: &NFunctionSpec, f: &CellField) -> f64 {
    let locals = cell_functions(spec, f);
    let vals = f.values();
    let terms = map_indices(vals.len(), |c| locals[c].value(vals[c]));
    pairwise_sum(&terms) * f.grid().cell_volume()
}

/// `ρ(u) = ∫Φ(x, |∇u|)dx`.
pub fn modular_rho(spec: &NFunctionSpec, u: &Field) -> f64 {
    modular(spec, &u.gradient().magnitude())
}

/// Luxemburg norm of `f` for any cellwise modular density.
///
/// `density(c, s)` is the modular integrand at cell `c` for the scaled
/// value `s = |f_c|/μ`. The norm is `inf{μ > 0 : ∫density(|f|/μ) ≤ 1}`,
/// bracketed by doubling or halving from `μ = 1` and refined by bisection.
pub fn luxemburg_with<D>(f: &CellField, density: D) -> Result<f64>
where
    D: Fn(usize, f64) -> Result<f64> + Sync,
{
    let vals: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    if vals.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let vol = f.grid().cell_volume();
    let modular_at = |mu: f64| -> Result<f64> {
        let terms = map_indices(vals.len(), |c| density(c, vals[c] / mu));
        let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
        Ok(pairwise_sum(&terms) * vol)
    };

    let (mut lo, mut hi);
    if modular_at(1.0)? > 1.0 {
        lo = 1.0;
        hi = 2.0;
        let mut steps = 0;
        while modular_at(hi)? > 1.0 {
            steps += 1;
            if steps > MAX_BRACKET_STEPS {
                return Err(Error::LuxemburgOverflow(MAX_BRACKET_STEPS));
            }
            lo = hi;
            hi *= 2.0;
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        let mut steps = 0;
        while modular_at(lo)? <= 1.0 {
            steps += 1;
            if steps > MAX_BRACKET_STEPS {
                return Err(Error::LuxemburgOverflow(MAX_BRACKET_STEPS));
            }
            hi = lo;
            lo *= 0.5;
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= LUXEMBURG_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if modular_at(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `‖f‖_Φ = inf{μ > 0 : ∫Φ(x, |f|/μ) ≤ 1}`.
pub fn luxemburg_norm(spec: &NFunctionSpec, f: &CellField) -> Result<f64> {
    let locals = cell_functions(spec, f);
    luxemburg_with(f, |c, s| Ok(locals[c].value(s)))
}

/// `‖f‖_Φ̄`, with the conjugate evaluated numerically per cell.
pub fn conjugate_luxemburg_norm(spec: &NFunctionSpec, f: &CellField) -> Result<f64> {
    let locals = cell_functions(spec, f);
    luxemburg_with(f, |c, s| locals[c].conjugate(s))
}

/// Returns `(‖u‖_Φ + ‖∇u‖_Φ, ‖∇u‖_Φ)`; the second is the equivalent norm
/// on dirichlet fields.
pub fn sobolev_norms(spec: &NFunctionSpec, u: &Field) -> Result<(f64, f64)> {
    let grad = luxemburg_norm(spec, &u.gradient().magnitude())?;
    let value = luxemburg_norm(spec, &u.abs_corner_average())?;
    Ok((value + grad, grad))
}

/// Modular, norm, and the sampled norm–modular relations of one field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub modular_value: f64,
    pub luxemburg: f64,
    pub index_lower: f64,
    pub index_upper: f64,
    pub norm_checks: CheckReport,
}

fn relation_slack(lhs: f64, rhs: f64) -> f64 {
    rhs - lhs + RELATION_SLACK * (1.0 + lhs.abs().max(rhs.abs()))
}

/// Checks, with `‖u‖` the equivalent norm and `ρ` the gradient modular:
/// `‖u‖^{φ⁰} ≤ ρ ≤ ‖u‖^{φ₀}` when `‖u‖ < 1`, the reversed exponents when
/// `‖u‖ > 1`, and `‖u‖ ≤ ρ + 1` always.
pub fn check_modular_norm_relations(
    spec: &NFunctionSpec,
    u: &Field,
    indices: &IndexReport,
) -> Result<NormReport> {
    let grad = u.gradient().magnitude();
    let rho = modular(spec, &grad);
    let norm = luxemburg_norm(spec, &grad)?;
    let (lo, hi) = (indices.phi_lower, indices.phi_upper);
    let mut checks = CheckReport::new(format!("norm_modular[{}]", spec.family_name()));
    if norm < 1.0 {
        let (a, b) = (norm.powf(hi), norm.powf(lo));
        checks.record("small_norm_lower", relation_slack(a, rho), || {
            format!("‖u‖={norm}: ‖u‖^φ⁰={a} > ρ={rho}")
        });
        checks.record("small_norm_upper", relation_slack(rho, b), || {
            format!("‖u‖={norm}: ρ={rho} > ‖u‖^φ₀={b}")
        });
    } else if norm > 1.0 {
        let (a, b) = (norm.powf(lo), norm.powf(hi));
        checks.record("large_norm_lower", relation_slack(a, rho), || {
            format!("‖u‖={norm}: ‖u‖^φ₀={a} > ρ={rho}")
        });
        checks.record("large_norm_upper", relation_slack(rho, b), || {
            format!("‖u‖={norm}: ρ={rho} > ‖u‖^φ⁰={b}")
        });
    }
    checks.record("norm_below_modular_plus_one", relation_slack(norm, rho + 1.0), || {
        format!("‖u‖={norm} > ρ+1={}", rho + 1.0)
    });
    Ok(NormReport {
        modular_value: rho,
        luxemburg: norm,
        index_lower: lo,
        index_upper: hi,
        norm_checks: checks,
    })
}

/// Norm and modular distances of a sequence to its candidate limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub norms: Vec<f64>,
    pub modulars: Vec<f64>,
    pub check: CheckReport,
}

/// Compares `‖u_n − u‖` with `ρ(u_n − u)`: every step must move both in
/// the same direction, and each term must lie inside the unit ball of the
/// norm exactly when it lies inside the unit ball of the modular.
pub fn check_convergence_equivalence(
    spec: &NFunctionSpec,
    seq: &[Field],
    u: &Field,
) -> Result<ConvergenceReport> {
    let mut norms = Vec::with_capacity(seq.len());
    let mut modulars = Vec::with_capacity(seq.len());
    for un in seq {
        let grad = un.sub(u).gradient().magnitude();
        norms.push(luxemburg_norm(spec, &grad)?);
        modulars.push(modular(spec, &grad));
    }
    let mut check = CheckReport::new(format!("convergence[{}]", spec.family_name()));
    let band = |x: f64, y: f64| (y - x).abs() <= RELATION_SLACK * (1.0 + x.abs().max(y.abs()));
    for k in 1..seq.len() {
        let (n0, n1, m0, m1) = (norms[k - 1], norms[k], modulars[k - 1], modulars[k]);
        let same = band(n0, n1) && band(m0, m1)
            || (n1 < n0 && m1 < m0)
            || (n1 > n0 && m1 > m0);
        check.record_flag("co_monotone", same, || {
            format!("step {k}: norm {n0} -> {n1}, modular {m0} -> {m1}")
        });
    }
    for (k, (&n, &m)) in norms.iter().zip(&modulars).enumerate() {
        let near_one = band(n, 1.0) || band(m, 1.0);
        check.record_flag("unit_ball", near_one || (n < 1.0) == (m < 1.0), || {
            format!("term {k}: norm {n}, modular {m}")
        });
    }
    Ok(ConvergenceReport {
        norms,
        modulars,
        check,
    })
}

/// Hölder pairing `∫uv` against the bound `2‖u‖_Φ‖v‖_Φ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderReport {
    pub pairing: f64,
    pub phi_norm: f64,
    pub conjugate_norm: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn holder_pairing(spec: &NFunctionSpec, u: &CellField, v: &CellField) -> Result<HolderReport> {
    if u.grid() != v.grid() {
        return Err(Error::Precondition("Hölder pairing needs both fields on one grid".into()));
    }
    let pairing = u.zip_with(v, |a, b| a * b).integrate();
    let phi_norm = luxemburg_norm(spec, u)?;
    let conjugate_norm = conjugate_luxemburg_norm(spec, v)?;
    let bound = 2.0 * phi_norm * conjugate_norm;
    Ok(HolderReport {
        pairing,
        phi_norm,
        conjugate_norm,
        bound,
        holds: crate::numeric::slack(pairing, bound) >= 0.0,
    })
}
