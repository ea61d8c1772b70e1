use serde::Serialize;

use crate::numeric::slack;
use crate::report::CheckReport;
use crate::{Error, Result};

/// Kirchhoff coefficient families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Kirchhoff {
    /// `A(t) = c·t^{α−1}` with growth constants `m₁ ≤ c ≤ m₂`.
    PowerCoeff { c: f64, alpha: f64, m1: f64, m2: f64 },
    /// `A(t) = c̄ − (c̄ − c̲)/(1+t)`, bounded between `c̲` and `c̄`.
    BoundedCoeff { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KirchhoffSpec {
    #[serde(flatten)]
    kind: Kirchhoff,
    /// Declared lower bound `a̲` of the diffusion coefficient, if any.
    a_lower: Option<f64>,
}

impl KirchhoffSpec {
    pub fn new(kind: Kirchhoff) -> Result<Self> {
        match kind {
            Kirchhoff::PowerCoeff { c, alpha, m1, m2 } => {
                if !(m1 > 1.0 && m2 >= m1 && m2.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "power_coeff needs m2 ≥ m1 > 1, got m1={m1}, m2={m2}"
                    )));
                }
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return Err(Error::InvalidParameter(format!("power_coeff needs alpha > 1, got {alpha}")));
                }
                if !(m1..=m2).contains(&c) {
                    return Err(Error::InvalidParameter(format!(
                        "power_coeff needs m1 ≤ c ≤ m2, got c={c} outside [{m1}, {m2}]"
                    )));
                }
            }
            Kirchhoff::BoundedCoeff { lower, upper } => {
                if !(lower > 0.0 && upper >= lower && upper.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "bounded_coeff needs 0 < c_lower ≤ c_upper, got ({lower}, {upper})"
                    )));
                }
            }
        }
        Ok(KirchhoffSpec { kind, a_lower: None })
    }

    /// `c·t^{α−1}` with `m₁ = m₂ = c`.
    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        Self::new(Kirchhoff::PowerCoeff { c, alpha, m1: c, m2: c })
    }

    pub fn bounded(lower: f64, upper: f64) -> Result<Self> {
        Self::new(Kirchhoff::BoundedCoeff { lower, upper })
    }

    /// No range checks; for controls such as a constant `A` with `c ≤ 1`.
    pub fn new_unchecked(kind: Kirchhoff) -> Self {
        KirchhoffSpec { kind, a_lower: None }
    }

    pub fn with_a_lower(mut self, a_lower: f64) -> Result<Self> {
        if !(a_lower > 0.0 && a_lower.is_finite()) {
            return Err(Error::InvalidParameter(format!("a_lower must be positive, got {a_lower}")));
        }
        self.a_lower = Some(a_lower);
        Ok(self)
    }

    pub fn kind(&self) -> Kirchhoff {
        self.kind
    }

    pub fn a_lower(&self) -> Option<f64> {
        self.a_lower
    }

    /// Which hypothesis set this coefficient is meant to satisfy.
    pub fn hypothesis(&self) -> &'static str {
        match (self.kind, self.a_lower) {
            (Kirchhoff::PowerCoeff { .. }, _) => "A0",
            (Kirchhoff::BoundedCoeff { .. }, None) => "A1",
            (Kirchhoff::BoundedCoeff { .. }, Some(_)) => "A1+a1",
        }
    }

    /// `A(t)` for `t > 0`.
    pub fn eval_a(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain("A", t, "t > 0"));
        }
        Ok(self.a(t))
    }

    /// `A` extended continuously to `t = 0`.
    pub(crate) fn a(&self, t: f64) -> f64 {
        match self.kind {
            Kirchhoff::PowerCoeff { c, alpha, .. } => {
                if t == 0.0 {
                    0.0
                } else {
                    c * t.powf(alpha - 1.0)
                }
            }
            Kirchhoff::BoundedCoeff { lower, upper } => upper - (upper - lower) / (1.0 + t),
        }
    }

    /// `Â(t) = ∫₀ᵗ A(s)ds` for `t ≥ 0`, in closed form.
    pub fn eval_a_hat(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::domain("Â", t, "t ≥ 0"));
        }
        Ok(self.a_hat(t))
    }

    pub(crate) fn a_hat(&self, t: f64) -> f64 {
        match self.kind {
            Kirchhoff::PowerCoeff { c, alpha, .. } => c / alpha * t.powf(alpha),
            Kirchhoff::BoundedCoeff { lower, upper } => upper * t - (upper - lower) * t.ln_1p(),
        }
    }

    /// A guaranteed lower bound on `Â(t)`: `(m₁/α)t^α` or `c̲·t`.
    pub fn a_hat_lower(&self, t: f64) -> f64 {
        match self.kind {
            Kirchhoff::PowerCoeff { alpha, m1, .. } => m1 / alpha * t.powf(alpha),
            Kirchhoff::BoundedCoeff { lower, .. } => lower * t,
        }
    }

    /// Growth exponent of `Â` at infinity.
    pub fn growth_exponent(&self) -> f64 {
        match self.kind {
            Kirchhoff::PowerCoeff { alpha, .. } => alpha,
            Kirchhoff::BoundedCoeff { .. } => 1.0,
        }
    }

    /// Growth sandwich `m₁t^{α−1} ≤ A(t) ≤ m₂t^{α−1}` (or `c̲ ≤ A ≤ c̄`) at each `t`.
    pub fn check_growth(&self, ts: &[f64]) -> Result<CheckReport> {
        let mut report = CheckReport::new(format!("kirchhoff_growth[{}]", self.hypothesis()));
        for &t in ts {
            let a = self.eval_a(t)?;
            let (lo, hi) = match self.kind {
                Kirchhoff::PowerCoeff { alpha, m1, m2, .. } => {
                    let s = t.powf(alpha - 1.0);
                    (m1 * s, m2 * s)
                }
                Kirchhoff::BoundedCoeff { lower, upper } => (lower, upper),
            };
            report.record("growth", slack(lo, a).min(slack(a, hi)), || {
                format!("t={t}: A={a} outside [{lo}, {hi}]")
            });
        }
        Ok(report)
    }
}
