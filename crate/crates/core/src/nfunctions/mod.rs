//! Generalized N-functions `Φ(x, t)`, their derivatives `φ = ∂Φ/∂t`, the
//! diffusion coefficients `a = φ/t`, numerical conjugates and the sampled
//! axiom and inequality checks.
//!
//! A spec is either x-independent or carries a node-sampled exponent map
//! (`Φ(x,t) = c·t^{p(x)}`). Evaluation at a fixed `x` goes through
//! [`LocalNFunction`], which is a plain one-variable N-function.

mod checks;
mod conjugate;

use serde::Serialize;

pub use checks::{
    check_axioms, check_domination, check_scaling_inequality, check_young, estimate_indices,
    scaling_samples, young_pairs, AxiomPlan, CtRow, IndexReport, SampleGrid, INDEX_RANGE,
    INDEX_SAMPLES,
};
pub use conjugate::{conjugate, conjugate_auto, legendre_sup, legendre_sup_auto, DEFAULT_WINDOW, MAX_WINDOW};

use crate::field::Grid;
use crate::numeric::integrate;
use crate::{Error, Result};

/// Exponent of the power family: one value everywhere or one per grid node.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    Constant(f64),
    Nodes(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `Φ(x,t) = c·t^{p(x)}`.
    PowerVariable { scale: f64, exponent: Exponent },
    /// `Φ(t) = (1+t²)^α − 1`.
    Elasticity { alpha: f64 },
    /// `Φ(t) = t^α (log(1+t))^β`.
    Plasticity { alpha: f64, beta: f64 },
    /// `Φ(t) = ∫₀ᵗ s^{1−α} (sinh⁻¹ s)^β ds`.
    Newtonian { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NFunctionSpec {
    #[serde(flatten)]
    family: Family,
}

impl NFunctionSpec {
    /// Validates parameter ranges and builds the spec.
    pub fn new(family: Family) -> Result<Self> {
        validate(&family)?;
        Ok(NFunctionSpec { family })
    }

    /// Builds a spec without range checks. Only meant for negative controls.
    pub fn new_unchecked(family: Family) -> Self {
        NFunctionSpec { family }
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::scaled_power(1.0, p)
    }

    pub fn scaled_power(scale: f64, p: f64) -> Result<Self> {
        Self::new(Family::PowerVariable {
            scale,
            exponent: Exponent::Constant(p),
        })
    }

    pub fn power_variable(exponents: Vec<f64>) -> Result<Self> {
        Self::new(Family::PowerVariable {
            scale: 1.0,
            exponent: Exponent::Nodes(exponents),
        })
    }

    pub fn elasticity(alpha: f64) -> Result<Self> {
        Self::new(Family::Elasticity { alpha })
    }

    pub fn plasticity(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Family::Plasticity { alpha, beta })
    }

    pub fn newtonian(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Family::Newtonian { alpha, beta })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::PowerVariable { .. } => "power_variable",
            Family::Elasticity { .. } => "elasticity",
            Family::Plasticity { .. } => "plasticity",
            Family::Newtonian { .. } => "newtonian",
        }
    }

    /// Number of exponent-map nodes, if the spec depends on `x`.
    pub fn node_len(&self) -> Option<usize> {
        match &self.family {
            Family::PowerVariable {
                exponent: Exponent::Nodes(v),
                ..
            } => Some(v.len()),
            _ => None,
        }
    }

    /// Nodes worth sampling: every exponent-map node, or just node 0.
    pub fn sample_nodes(&self) -> Vec<usize> {
        (0..self.node_len().unwrap_or(1)).collect()
    }

    /// Errors unless the exponent map (if any) is sized for `grid`.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        match self.node_len() {
            Some(n) if n != grid.node_count() => Err(Error::InvalidParameter(format!(
                "exponent map has {n} nodes, grid has {}",
                grid.node_count()
            ))),
            _ => Ok(()),
        }
    }

    /// The one-variable N-function `Φ(x, ·)` at exponent-map node `x`.
    /// `x` is ignored for x-independent families.
    pub fn at_node(&self, x: usize) -> Result<LocalNFunction> {
        Ok(match &self.family {
            Family::PowerVariable { scale, exponent } => {
                let p = match exponent {
                    Exponent::Constant(p) => *p,
                    Exponent::Nodes(v) => *v.get(x).ok_or(Error::NodeOutOfRange {
                        node: x,
                        len: v.len(),
                    })?,
                };
                LocalNFunction::Power { scale: *scale, p }
            }
            Family::Elasticity { alpha } => LocalNFunction::Elasticity { alpha: *alpha },
            Family::Plasticity { alpha, beta } => LocalNFunction::Plasticity {
                alpha: *alpha,
                beta: *beta,
            },
            Family::Newtonian { alpha, beta } => LocalNFunction::Newtonian {
                alpha: *alpha,
                beta: *beta,
            },
        })
    }

    /// `Φ(x_c, ·)` at a cell centre; node exponents are corner-averaged.
    ///
    /// # Panics
    /// If the exponent map was not sized for `grid` (see [`Self::check_grid`]).
    pub fn at_cell(&self, grid: &Grid, cell: usize) -> LocalNFunction {
        match &self.family {
            Family::PowerVariable {
                scale,
                exponent: Exponent::Nodes(v),
            } => {
                assert_eq!(v.len(), grid.node_count(), "exponent map does not match grid");
                LocalNFunction::Power {
                    scale: *scale,
                    p: grid.corner_average(cell, v),
                }
            }
            _ => self.at_node(0).expect("x-independent family"),
        }
    }

    pub fn value(&self, x: usize, t: f64) -> Result<f64> {
        nonneg("Φ", t)?;
        Ok(self.at_node(x)?.value(t))
    }

    pub fn derivative(&self, x: usize, t: f64) -> Result<f64> {
        nonneg("φ", t)?;
        Ok(self.at_node(x)?.derivative(t))
    }

    pub fn coefficient(&self, x: usize, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain("a", t, "t > 0"));
        }
        Ok(self.at_node(x)?.coefficient(t))
    }

    /// Smallest exponent over the map, for power families.
    pub fn min_exponent(&self) -> Option<f64> {
        match &self.family {
            Family::PowerVariable { exponent, .. } => Some(match exponent {
                Exponent::Constant(p) => *p,
                Exponent::Nodes(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
            }),
            _ => None,
        }
    }
}

fn nonneg(what: &'static str, t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, t, "t ≥ 0"))
    }
}

fn validate(family: &Family) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidParameter(msg));
    match family {
        Family::PowerVariable { scale, exponent } => {
            if !(*scale > 0.0 && scale.is_finite()) {
                return bad(format!("power scale must be positive, got {scale}"));
            }
            let ps: &[f64] = match exponent {
                Exponent::Constant(p) => std::slice::from_ref(p),
                Exponent::Nodes(v) => v,
            };
            if ps.is_empty() {
                return bad("exponent map is empty".into());
            }
            if let Some(p) = ps.iter().find(|p| !(**p > 1.0 && p.is_finite())) {
                return bad(format!("power exponent must exceed 1, got {p}"));
            }
        }
        Family::Elasticity { alpha } => {
            if !(*alpha > 0.5 && alpha.is_finite()) {
                return bad(format!("elasticity needs alpha > 1/2, got {alpha}"));
            }
        }
        Family::Plasticity { alpha, beta } => {
            if !(*alpha >= 1.0 && alpha.is_finite() && *beta > 0.0 && beta.is_finite()) {
                return bad(format!(
                    "plasticity needs alpha ≥ 1 and beta > 0, got ({alpha}, {beta})"
                ));
            }
        }
        Family::Newtonian { alpha, beta } => {
            if !((0.0..=1.0).contains(alpha) && *beta > 0.0 && beta.is_finite()) {
                return bad(format!(
                    "newtonian needs 0 ≤ alpha ≤ 1 and beta > 0, got ({alpha}, {beta})"
                ));
            }
        }
    }
    Ok(())
}

/// `Φ(x, ·)` with `x` frozen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LocalNFunction {
    Power { scale: f64, p: f64 },
    Elasticity { alpha: f64 },
    Plasticity { alpha: f64, beta: f64 },
    Newtonian { alpha: f64, beta: f64 },
}

/// Relative tolerance of the quadrature behind the newtonian family.
const NEWTONIAN_QUAD_TOL: f64 = 1e-12;

impl LocalNFunction {
    /// `Φ(t)` for `t ≥ 0`.
    pub fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match *self {
            LocalNFunction::Power { scale, p } => scale * t.powf(p),
            LocalNFunction::Elasticity { alpha } => (alpha * (t * t).ln_1p()).exp_m1(),
            LocalNFunction::Plasticity { alpha, beta } => t.powf(alpha) * t.ln_1p().powf(beta),
            LocalNFunction::Newtonian { .. } => integrate(
                |s| self.derivative(s),
                0.0,
                t,
                1e-12 * f64::MIN_POSITIVE,
                NEWTONIAN_QUAD_TOL,
            ),
        }
    }

    /// `φ(t) = Φ'(t)` for `t ≥ 0`.
    pub fn derivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match *self {
            LocalNFunction::Power { scale, p } => scale * p * t.powf(p - 1.0),
            LocalNFunction::Elasticity { alpha } => {
                2.0 * alpha * t * ((alpha - 1.0) * (t * t).ln_1p()).exp()
            }
            LocalNFunction::Plasticity { alpha, beta } => {
                let l = t.ln_1p();
                alpha * t.powf(alpha - 1.0) * l.powf(beta)
                    + beta * t.powf(alpha) * l.powf(beta - 1.0) / (1.0 + t)
            }
            LocalNFunction::Newtonian { alpha, beta } => {
                t.powf(1.0 - alpha) * t.asinh().powf(beta)
            }
        }
    }

    /// `a(t) = φ(t)/t` for `t > 0`.
    pub fn coefficient(&self, t: f64) -> f64 {
        match *self {
            LocalNFunction::Power { scale, p } => scale * p * t.powf(p - 2.0),
            LocalNFunction::Elasticity { alpha } => {
                2.0 * alpha * ((alpha - 1.0) * (t * t).ln_1p()).exp()
            }
            LocalNFunction::Plasticity { alpha, beta } => {
                let l = t.ln_1p();
                alpha * t.powf(alpha - 2.0) * l.powf(beta)
                    + beta * t.powf(alpha - 1.0) * l.powf(beta - 1.0) / (1.0 + t)
            }
            LocalNFunction::Newtonian { alpha, beta } => t.powf(-alpha) * t.asinh().powf(beta),
        }
    }

    /// Coefficient used when assembling fluxes `a·ξ` for a gradient of
    /// magnitude `m`: evaluated at `sqrt(m² + δ²)`. With `δ = 0` a zero
    /// gradient carries zero flux.
    pub fn flux_coefficient(&self, m: f64, delta: f64) -> f64 {
        if delta > 0.0 {
            self.coefficient(m.hypot(delta))
        } else if m > 0.0 {
            self.coefficient(m)
        } else {
            0.0
        }
    }

    /// Legendre conjugate `Φ̄(s)` with the automatically widened window.
    pub fn conjugate(&self, s: f64) -> Result<f64> {
        legendre_sup_auto(|t| self.value(t), s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &LocalNFunction, t: f64) -> f64 {
        let h = 1e-6;
        (f.value(t + h) - f.value(t - h)) / (2.0 * h)
    }

    #[test]
    fn value_examples() {
        let cube = NFunctionSpec::power(3.0).unwrap();
        assert_eq!(cube.value(0, 2.0).unwrap(), 8.0);
        let el = NFunctionSpec::elasticity(2.0).unwrap();
        assert!((el.value(0, 1.0).unwrap() - 3.0).abs() < 1e-14);
        for spec in [
            cube,
            el,
            NFunctionSpec::plasticity(1.0, 1.0).unwrap(),
            NFunctionSpec::newtonian(0.5, 1.0).unwrap(),
        ] {
            assert_eq!(spec.value(0, 0.0).unwrap(), 0.0);
            assert!(spec.value(0, -1.0).is_err());
            assert!(spec.derivative(0, -1.0).is_err());
        }
    }

    #[test]
    fn derivative_examples() {
        let sq = NFunctionSpec::power(2.0).unwrap();
        assert_eq!(sq.derivative(0, 5.0).unwrap(), 10.0);
        let el = NFunctionSpec::elasticity(2.0).unwrap();
        // 2·α·t·(1+t²)^{α−1} = 8, confirmed against the difference quotient
        assert!((el.derivative(0, 1.0).unwrap() - 8.0).abs() < 1e-14);
        assert!((fd(&el.at_node(0).unwrap(), 1.0) - 8.0).abs() < 1e-7);
        // finite-difference oracle on Φ
        let pl = NFunctionSpec::plasticity(1.0, 1.0).unwrap();
        let local = pl.at_node(0).unwrap();
        let oracle = fd(&local, 1.0);
        let expected = 2f64.ln() + 0.5;
        assert!((oracle - expected).abs() < 1e-8);
        assert!((pl.derivative(0, 1.0).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn coefficient_examples() {
        let sq = NFunctionSpec::power(2.0).unwrap();
        assert_eq!(sq.coefficient(0, 7.0).unwrap(), 2.0);
        let cube = NFunctionSpec::power(3.0).unwrap();
        assert_eq!(cube.coefficient(0, 2.0).unwrap(), 6.0);
        assert!(cube.coefficient(0, 0.0).is_err());
        let nw = NFunctionSpec::newtonian(1.0, 1.0).unwrap();
        let a = nw.coefficient(0, 1.0).unwrap();
        assert!((a - 1f64.asinh()).abs() < 1e-15);
        // the quadrature-backed Φ must agree with the closed-form φ
        let oracle = fd(&nw.at_node(0).unwrap(), 1.0);
        assert!((oracle - a).abs() < 1e-8, "{oracle} vs {a}");
        assert!((a - 0.881_373_587_019_543).abs() < 1e-12);
    }

    #[test]
    fn newtonian_quadrature_matches_closed_form() {
        // α = 1, β = 1: Φ(t) = t·asinh t − sqrt(1+t²) + 1
        let nw = NFunctionSpec::newtonian(1.0, 1.0).unwrap().at_node(0).unwrap();
        for t in [1e-6f64, 1e-3, 0.5, 1.0, 7.0, 1e3, 1e6] {
            let exact = t * t.asinh() - ((1.0 + t * t).sqrt() - 1.0);
            let exact = if t < 1e-2 {
                t * t / 2.0 - t.powi(4) / 24.0 + t.powi(6) / 80.0
            } else {
                exact
            };
            let got = nw.value(t);
            assert!(((got - exact) / exact).abs() < 1e-10, "t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(NFunctionSpec::power(1.0).is_err());
        assert!(NFunctionSpec::power_variable(vec![1.5, 0.9]).is_err());
        assert!(NFunctionSpec::elasticity(0.5).is_err());
        assert!(NFunctionSpec::plasticity(0.9, 1.0).is_err());
        assert!(NFunctionSpec::plasticity(1.0, 0.0).is_err());
        assert!(NFunctionSpec::newtonian(1.1, 1.0).is_err());
        assert!(NFunctionSpec::newtonian(0.0, 1.0).is_ok());
        assert!(NFunctionSpec::scaled_power(0.0, 2.0).is_err());
    }

    #[test]
    fn variable_exponent_nodes() {
        let spec = NFunctionSpec::power_variable(vec![1.5, 2.0, 2.5]).unwrap();
        assert_eq!(spec.value(2, 2.0).unwrap(), 2f64.powf(2.5));
        assert!(matches!(
            spec.value(3, 1.0),
            Err(Error::NodeOutOfRange { node: 3, len: 3 })
        ));
        assert_eq!(spec.sample_nodes(), vec![0, 1, 2]);
    }

    #[test]
    fn flux_coefficient_handles_zero_gradient() {
        let f = NFunctionSpec::power(1.5).unwrap().at_node(0).unwrap();
        assert_eq!(f.flux_coefficient(0.0, 0.0), 0.0);
        assert!(f.flux_coefficient(0.0, 1e-8).is_finite());
        assert_eq!(f.flux_coefficient(4.0, 0.0), 1.5 * 0.5);
    }
}
