use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{energy, ProblemSpec};
use crate::field::Field;
use crate::modular::luxemburg_norm;
use crate::nfunctions::{estimate_indices, INDEX_RANGE, INDEX_SAMPLES};
use crate::report::CheckReport;
use crate::{Error, Result};

const LAMBDAS: [f64; 3] = [0.25, 0.5, 0.75];
/// Relative slack of the convexity comparison.
const CONVEXITY_SLACK: f64 = 1e-8;

/// Convexity samples, split by whether both endpoints are nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub trials: usize,
    pub nonnegative: CheckReport,
    pub signed: CheckReport,
}

impl ConvexityReport {
    pub fn nonnegative_violations(&self) -> usize {
        self.nonnegative.violations.len()
    }
}

fn random_amplitude(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0.01f64.ln()..10f64.ln()).exp()
}

/// Midpoint-type convexity `J((1−λ)u+λv) ≤ (1−λ)J(u)+λJ(v)` on random
/// dirichlet pairs, `λ ∈ {1/4, 1/2, 3/4}`. Each trial draws one
/// nonnegative pair and one signed pair; violations are reported.
pub fn check_convexity(p: &ProblemSpec, trials: usize, seed: u64) -> Result<ConvexityReport> {
    if trials == 0 {
        return Err(Error::Precondition("convexity check needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nonnegative = CheckReport::new("convexity[nonnegative]");
    let mut signed = CheckReport::new("convexity[signed]");
    let grid = *p.grid();
    for trial in 0..trials {
        for (report, lo) in [(&mut nonnegative, 0.0), (&mut signed, -1.0)] {
            let (a, b) = (random_amplitude(&mut rng), random_amplitude(&mut rng));
            let u = Field::random(grid, &mut rng, lo, 1.0).scaled(a);
            let v = Field::random(grid, &mut rng, lo, 1.0).scaled(b);
            let (ju, jv) = (energy(p, &u).total, energy(p, &v).total);
            let scale = CONVEXITY_SLACK * (1.0 + ju.abs() + jv.abs());
            for lam in LAMBDAS {
                let w = u.scaled(1.0 - lam).add_scaled(&v, lam);
                let jw = energy(p, &w).total;
                let chord = (1.0 - lam) * ju + lam * jv;
                report.record("convexity", chord - jw + scale, || {
                    format!("trial {trial}, λ={lam}: J={jw} above chord {chord}")
                });
            }
        }
    }
    Ok(ConvexityReport {
        trials,
        nonnegative,
        signed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityRow {
    pub scale: f64,
    pub energy: f64,
    pub norm: f64,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    /// Singular-term constant measured at scale 1.
    pub singular_constant: f64,
    pub rows: Vec<CoercivityRow>,
    pub check: CheckReport,
}

/// Evaluates `J(cu)` against
/// `Â_lower(‖cu‖^e) − C‖cu‖^{1−γ⁻}`, where `e` is the lower index when
/// `‖cu‖ ≥ 1` and the upper one otherwise, and `C` makes the bound tight
/// for the singular term at `c = 1`. Also requires the last step of the
/// scale list to increase the energy.
pub fn coercivity_probe(p: &ProblemSpec, u: &Field, scales: &[f64]) -> Result<CoercivityReport> {
    if u.is_zero() {
        return Err(Error::Precondition("coercivity probe needs u ≠ 0".into()));
    }
    if let Some(c) = scales.iter().find(|c| !(**c >= 1.0)) {
        return Err(Error::Precondition(format!("coercivity scales must be ≥ 1, got {c}")));
    }
    let idx = estimate_indices(p.nfunction(), INDEX_RANGE.0, INDEX_RANGE.1, INDEX_SAMPLES)?;
    let norm1 = luxemburg_norm(p.nfunction(), &u.gradient().magnitude())?;
    let q = 1.0 - p.gamma_minus();
    let constant = energy(p, u).singular / norm1.powf(q);
    let k = p.kirchhoff();
    let mut check = CheckReport::new("coercivity");
    let mut rows = Vec::with_capacity(scales.len());
    for &c in scales {
        let e = energy(p, &u.scaled(c)).total;
        let norm = c * norm1;
        let exponent = if norm >= 1.0 { idx.phi_lower } else { idx.phi_upper };
        let lower_bound = k.a_hat_lower(norm.powf(exponent)) - constant * norm.powf(q);
        check.record("lower_bound", crate::numeric::slack(lower_bound, e), || {
            format!("c={c}: J={e} below bound {lower_bound}")
        });
        rows.push(CoercivityRow {
            scale: c,
            energy: e,
            norm,
            lower_bound,
        });
    }
    if rows.len() >= 2 {
        let (a, b) = (rows[rows.len() - 2], rows[rows.len() - 1]);
        check.record_flag("eventually_increasing", b.energy > a.energy, || {
            format!("J({})={} does not exceed J({})={}", b.scale, b.energy, a.scale, a.energy)
        });
    }
    Ok(CoercivityReport {
        singular_constant: constant,
        rows,
        check,
    })
}

/// Maximum halvings tried by [`negative_direction`].
pub const MAX_HALVINGS: usize = 60;

/// Halves `t` from 1 until `J(t·φ) < 0`; returns `(t, J(tφ))`.
pub fn negative_direction(p: &ProblemSpec, phi: &Field) -> Result<(f64, f64)> {
    if !phi.is_dirichlet() {
        return Err(Error::Precondition("direction must be a dirichlet field".into()));
    }
    if phi.values().iter().any(|&v| v < 0.0) || phi.is_zero() {
        return Err(Error::Precondition("direction must be nonnegative and nonzero".into()));
    }
    let mut t = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let j = energy(p, &phi.scaled(t)).total;
        if j < 0.0 {
            return Ok((t, j));
        }
        t *= 0.5;
    }
    Err(Error::NoNegativeDirection(MAX_HALVINGS))
}
