//! Generalized N-functions, Musielak-Orlicz modulars and Luxemburg norms on
//! uniform grids, together with a direct minimizer for the energy of the
//! nonlocal singular Dirichlet problem
//!
//! ```text
//! -A(∫Φ(x,|∇u|)dx) div(a(x,|∇u|)∇u) = g(x) u^{-γ(x)}   in Ω,
//!  u > 0 in Ω,  u = 0 on ∂Ω.
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`nfunctions`]: pointwise N-function families, conjugates, index estimates
//!   and the axiom/inequality checks.
//! * [`field`]: grids, node fields, forward-difference gradients and quadrature.
//! * [`modular`]: modulars, Luxemburg and Sobolev norms, norm-modular relations.
//! * [`energy`]: Kirchhoff coefficients, the energy functional, its gradient,
//!   the weak residual and structural probes.
//! * [`solver`]: projected-gradient minimization with smoothing continuation,
//!   a coordinate-descent oracle and uniqueness experiments.
//! * [`denoise`]: variable-exponent image restoration by energy descent.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod denoise;
pub mod energy;
mod error;
pub mod field;
pub mod modular;
pub mod nfunctions;
pub mod numeric;
pub mod pgm;
pub mod report;
pub mod solver;

pub use energy::{EnergyBreakdown, Kirchhoff, KirchhoffSpec, ProblemSpec, WeakResidual};
pub use error::{Error, Result};
pub use field::{CellField, Field, Grid};
pub use modular::NormReport;
pub use nfunctions::{Family, IndexReport, LocalNFunction, NFunctionSpec};
pub use report::{CheckReport, Violation};
pub use solver::{SolveReport, SolverConfig};
