//! Projected-gradient minimization of the energy over nonnegative dirichlet
//! fields, with a continuation ladder in the smoothing parameter `ε`.
//!
//! Each rung runs a spectral projected gradient method: the search
//! direction is the lumped-mass preconditioned gradient `−g/w`, the trial
//! step is the Barzilai–Borwein step in the lumped-mass metric, and a
//! monotone Armijo backtracking keeps `J_ε` nonincreasing. A rung ends when
//! the projected gradient, measured in residual units, drops below
//! `grad_tol·(1 + |J|)`, or when backtracking reaches round-off level.

mod oracle;
mod uniqueness;

use serde::Serialize;

pub use oracle::{brute_force_oracle, OracleResult, MAX_ORACLE_NODES};
pub use uniqueness::{
    default_c_delta, multistart_uniqueness, multistart_with_seeds, uniqueness_certificate, Certificate,
    MultistartReport, StartSummary,
};

use crate::energy::{energy, energy_gradient, negative_direction, smoothed_energy, weak_residual, EnergyBreakdown};
use crate::energy::{ProblemSpec, WeakResidual, DEFAULT_DELTA};
use crate::field::Field;
use crate::report::format_f64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub eps_ladder: Vec<f64>,
    pub delta: f64,
    pub step0: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_ladder: (2..=8).map(|k| 10f64.powi(-k)).collect(),
            delta: DEFAULT_DELTA,
            step0: 1.0,
            backtrack: 0.5,
            armijo: 1e-4,
            grad_tol: 1e-8,
            max_iters: 5000,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.eps_ladder.is_empty() {
            return bad("eps_ladder must not be empty".into());
        }
        if self.eps_ladder.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("eps_ladder entries must be positive".into());
        }
        if self.eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_ladder must be strictly decreasing".into());
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be ≥ 0, got {}", self.delta));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return bad(format!("step0 must be positive, got {}", self.step0));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad(format!("backtrack must lie in (0,1), got {}", self.backtrack));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad(format!("armijo constant must lie in (0,1), got {}", self.armijo));
        }
        if !(self.grad_tol > 0.0) {
            return bad(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

/// One line of the solver trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub rung: usize,
    pub iter: usize,
    pub energy: f64,
    pub step: f64,
    pub pg_norm: f64,
}

/// `rung,iter,J_eps,step,pg_norm` CSV.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("rung,iter,J_eps,step,pg_norm\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.rung,
            r.iter,
            format_f64(r.energy),
            format_f64(r.step),
            format_f64(r.pg_norm)
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RungSummary {
    pub eps: f64,
    pub iterations: usize,
    pub energy: f64,
    pub pg_norm: f64,
    /// `tolerance`, `stalled` (round-off level decrease) or `max_iters`.
    pub stop: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub u_star: Field,
    pub energy: EnergyBreakdown,
    pub residual: Option<WeakResidual>,
    pub residual_norm: f64,
    pub scale_stationarity: f64,
    pub min_interior_value: f64,
    pub rungs: Vec<RungSummary>,
    pub init: &'static str,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

/// Step used for the scale-stationarity difference quotient.
pub const SCALE_STEP: f64 = 1e-6;

fn project(u: &mut [f64], boundary: &[bool]) {
    for (v, &b) in u.iter_mut().zip(boundary) {
        if b || *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Projected gradient in residual units: `max_i |pg_i| / w_i`.
fn pg_norm(u: &[f64], g: &[f64], w: &[f64], boundary: &[bool]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..u.len() {
        if boundary[i] {
            continue;
        }
        let pg = if u[i] > 0.0 { g[i] } else { g[i].min(0.0) };
        m = m.max(pg.abs() / w[i]);
    }
    m
}

/// Default starting point: the hat profile scaled onto negative energy, or
/// zero if no negative energy is reachable along it.
pub fn default_init(p: &ProblemSpec) -> (Field, &'static str) {
    let hat = Field::hat(*p.grid());
    match negative_direction(p, &hat) {
        Ok((t, _)) => (hat.scaled(t), "scaled_hat"),
        Err(_) => (Field::zeros(*p.grid(), true), "zero"),
    }
}

/// Minimizes `J` over nonnegative dirichlet fields.
pub fn minimize(p: &ProblemSpec, cfg: &SolverConfig, init: Option<&Field>) -> Result<SolveReport> {
    cfg.validate()?;
    let grid = *p.grid();
    let (start, init_kind) = match init {
        Some(f) => {
            if *f.grid() != grid {
                return Err(Error::Precondition("initial field lives on a different grid".into()));
            }
            if f.values().iter().any(|&v| v < 0.0) || !f.is_dirichlet() {
                return Err(Error::Precondition("initial field must be nonnegative and dirichlet".into()));
            }
            (f.clone(), "given")
        }
        None => default_init(p),
    };
    let n = grid.node_count();
    let boundary: Vec<bool> = (0..n).map(|i| grid.is_boundary(i)).collect();
    let w = grid.nodal_weights();
    let mut u = start.into_values();
    project(&mut u, &boundary);

    let field = |v: &[f64]| Field::new(grid, v.to_vec(), true).expect("iterates stay finite");
    let mut trace = Vec::new();
    let mut rungs = Vec::with_capacity(cfg.eps_ladder.len());
    let mut step = cfg.step0;

    for (rung, &eps) in cfg.eps_ladder.iter().enumerate() {
        let mut uf = field(&u);
        let mut j = smoothed_energy(p, &uf, eps);
        let mut g = energy_gradient(p, &uf, eps, cfg.delta).into_values();
        let mut pg = pg_norm(&u, &g, &w, &boundary);
        let mut stop = "max_iters";
        let mut iter = 0;
        trace.push(TraceRow {
            rung,
            iter,
            energy: j,
            step: 0.0,
            pg_norm: pg,
        });
        while iter < cfg.max_iters {
            if pg < cfg.grad_tol * (1.0 + j.abs()) {
                stop = "tolerance";
                break;
            }
            iter += 1;
            let mut alpha = step;
            let accepted = loop {
                let trial: Vec<f64> = (0..n)
                    .map(|i| {
                        if boundary[i] {
                            0.0
                        } else {
                            (u[i] - alpha * g[i] / w[i]).max(0.0)
                        }
                    })
                    .collect();
                let predicted: f64 = (0..n).map(|i| g[i] * (trial[i] - u[i])).sum();
                if predicted.abs() <= 1e-14 * (1.0 + j.abs()) {
                    break None;
                }
                let tf = field(&trial);
                let jt = smoothed_energy(p, &tf, eps);
                if jt <= j + cfg.armijo * predicted {
                    break Some((trial, tf, jt));
                }
                alpha *= cfg.backtrack;
                if alpha < 1e-16 {
                    return Err(Error::LineSearch {
                        rung,
                        iter,
                        step: alpha,
                        energy: j,
                        last_iterate: u,
                    });
                }
            };
            let Some((trial, tf, jt)) = accepted else {
                stop = "stalled";
                break;
            };
            if jt > j {
                return Err(Error::EnergyIncrease {
                    rung,
                    before: j,
                    after: jt,
                });
            }
            let gt = energy_gradient(p, &tf, eps, cfg.delta).into_values();
            // Barzilai–Borwein step in the lumped-mass metric
            let (mut sws, mut sy) = (0.0, 0.0);
            for i in 0..n {
                let s = trial[i] - u[i];
                sws += s * s * w[i];
                sy += s * (gt[i] - g[i]);
            }
            step = if sy > 0.0 { (sws / sy).clamp(1e-10, 1e10) } else { (4.0 * alpha).min(1e10) };
            u = trial;
            uf = tf;
            j = jt;
            g = gt;
            pg = pg_norm(&u, &g, &w, &boundary);
            trace.push(TraceRow {
                rung,
                iter,
                energy: j,
                step: alpha,
                pg_norm: pg,
            });
        }
        let _ = uf;
        rungs.push(RungSummary {
            eps,
            iterations: iter,
            energy: j,
            pg_norm: pg,
            stop,
        });
    }

    let u_star = field(&u);
    let energy = energy(p, &u_star);
    let min_interior_value = u_star.interior_min();
    let residual = if min_interior_value > 0.0 {
        Some(weak_residual(p, &u_star, min_interior_value / 10.0)?)
    } else {
        None
    };
    let residual_norm = residual.as_ref().map_or(f64::NAN, |r| r.norm);
    let scale_stationarity = scale_derivative(p, &u_star).abs();
    Ok(SolveReport {
        u_star,
        energy,
        residual,
        residual_norm,
        scale_stationarity,
        min_interior_value,
        rungs,
        init: init_kind,
        trace,
    })
}

/// Central difference of `t ↦ J(u + t·u)` at `t = 0`.
pub fn scale_derivative(p: &ProblemSpec, u: &Field) -> f64 {
    let plus = energy(p, &u.scaled(1.0 + SCALE_STEP)).total;
    let minus = energy(p, &u.scaled(1.0 - SCALE_STEP)).total;
    (plus - minus) / (2.0 * SCALE_STEP)
}
