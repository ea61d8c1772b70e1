use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{conjugate_auto, NFunctionSpec};
use crate::numeric::{log_space, slack};
use crate::report::CheckReport;
use crate::{Error, Result};

/// Where the indices were sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleGrid {
    pub t_lo: f64,
    pub t_hi: f64,
    pub n_t: usize,
    pub spacing: &'static str,
    pub nodes: usize,
}

/// x-uniform bounds of `Φ(·, t)` at one `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtRow {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Sampled growth indices of an N-function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    /// `min t·φ(x,t)/Φ(x,t)` over the samples.
    pub phi_lower: f64,
    /// `max t·φ(x,t)/Φ(x,t)` over the samples.
    pub phi_upper: f64,
    pub sample_grid: SampleGrid,
    /// `max Φ(x,2t)/Φ(x,t)` over the samples.
    pub delta2_constant: f64,
    /// Per decade in the sample range.
    pub c_t_table: Vec<CtRow>,
}

/// Default probe range and resolution for [`estimate_indices`].
pub const INDEX_RANGE: (f64, f64) = (1e-6, 1e6);
pub const INDEX_SAMPLES: usize = 2000;

/// Samples `r(x,t) = tφ/Φ` on a geometric grid in `[t_lo, t_hi]` at every
/// exponent-map node. Fails with [`Error::IndexViolation`] as soon as a
/// sample has `r ≤ 1`.
pub fn estimate_indices(spec: &NFunctionSpec, t_lo: f64, t_hi: f64, n_samples: usize) -> Result<IndexReport> {
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(Error::InvalidParameter(format!(
            "index range needs 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]"
        )));
    }
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "index estimation needs at least 100 samples, got {n_samples}"
        )));
    }
    let ts = log_space(t_lo, t_hi, n_samples);
    let nodes = spec.sample_nodes();
    let (mut lower, mut upper, mut delta2) = (f64::INFINITY, f64::NEG_INFINITY, 1.0f64);
    for &x in &nodes {
        let f = spec.at_node(x)?;
        for &t in &ts {
            let big = f.value(t);
            let ratio = t * f.derivative(t) / big;
            if !(ratio > 1.0) {
                return Err(Error::IndexViolation { node: x, t, ratio });
            }
            lower = lower.min(ratio);
            upper = upper.max(ratio);
            delta2 = delta2.max(f.value(2.0 * t) / big);
        }
    }

    let first = t_lo.log10().ceil() as i32;
    let last = t_hi.log10().floor() as i32;
    let mut c_t_table = Vec::new();
    for k in first..=last {
        let t = 10f64.powi(k);
        let mut row = CtRow {
            t,
            lower: f64::INFINITY,
            upper: 0.0,
        };
        for &x in &nodes {
            let v = spec.at_node(x)?.value(t);
            row.lower = row.lower.min(v);
            row.upper = row.upper.max(v);
        }
        c_t_table.push(row);
    }

    Ok(IndexReport {
        phi_lower: lower,
        phi_upper: upper,
        sample_grid: SampleGrid {
            t_lo,
            t_hi,
            n_t: n_samples,
            spacing: "log",
            nodes: nodes.len(),
        },
        delta2_constant: delta2,
        c_t_table,
    })
}

/// Samples for [`check_axioms`].
#[derive(Debug, Clone)]
pub struct AxiomPlan {
    pub nodes: Vec<usize>,
    /// Ordered triples `t₁ < t₂ < t₃` for monotonicity and convexity of `Φ(x,·)`.
    pub triples: Vec<[f64; 3]>,
    /// Ordered triples in the variable of `τ ↦ Φ(x, √τ)`.
    pub sqrt_triples: Vec<[f64; 3]>,
    /// Increasing probe points for the `Φ(x,t)/t` limits and x-uniform positivity.
    pub probes: Vec<f64>,
}

impl AxiomPlan {
    /// `n_triples` random triples with log-uniform points in `[1e-4, 1e4]`
    /// (and `[1e-8, 1e8]` for the square-root composition), consecutive
    /// points at least 1% apart.
    pub fn standard(spec: &NFunctionSpec, n_triples: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triple = |lo: f64, hi: f64| {
            let (a, b) = (lo.ln(), hi.ln());
            loop {
                let mut t = [0.0; 3];
                for v in &mut t {
                    *v = rng.gen_range(a..b).exp();
                }
                t.sort_by(f64::total_cmp);
                if t[1] >= 1.01 * t[0] && t[2] >= 1.01 * t[1] {
                    return t;
                }
            }
        };
        let triples = (0..n_triples).map(|_| triple(1e-4, 1e4)).collect();
        let sqrt_triples = (0..n_triples).map(|_| triple(1e-8, 1e8)).collect();
        AxiomPlan {
            nodes: spec.sample_nodes(),
            triples,
            sqrt_triples,
            probes: vec![1e-8, 1e-4, 1.0, 1e4, 1e8],
        }
    }
}

/// `Φ(t)/t` at the smallest probe must be below this fraction of its value at `t = 1`.
const SMALL_RATIO: f64 = 1e-3;
/// `Φ(t)/t` at the largest probe must exceed this multiple of its value at `t = 1`.
const LARGE_RATIO: f64 = 10.0;

fn chord_slack(f: impl Fn(f64) -> f64, t: [f64; 3]) -> (f64, f64) {
    let [a, b, c] = t;
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let w = (b - a) / (c - a);
    let chord = fa * (1.0 - w) + fc * w;
    (fb, chord)
}

/// Sampled N-function axioms: `Φ(x,0) = 0`, monotonicity of `Φ` and `φ`,
/// three-point convexity of `Φ(x,·)` and of `τ ↦ Φ(x,√τ)`, the limits of
/// `Φ(x,t)/t` at the probe ends, and x-uniform positivity at each probe.
pub fn check_axioms(spec: &NFunctionSpec, plan: &AxiomPlan) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("axioms[{}]", spec.family_name()));
    for &x in &plan.nodes {
        let f = spec.at_node(x)?;
        report.record_flag("zero_at_origin", f.value(0.0) == 0.0, || {
            format!("x={x}: Φ(0) = {}", f.value(0.0))
        });
        for &t in &plan.triples {
            let [a, b, c] = t;
            let (fa, fb, fc) = (f.value(a), f.value(b), f.value(c));
            report.record("nondecreasing", slack(fa, fb).min(slack(fb, fc)), || {
                format!("x={x}: Φ({a})={fa}, Φ({b})={fb}, Φ({c})={fc}")
            });
            let (da, db) = (f.derivative(a), f.derivative(b));
            report.record("derivative_monotone", slack(da, db), || {
                format!("x={x}: φ({a})={da} > φ({b})={db}")
            });
            let (mid, chord) = chord_slack(|t| f.value(t), t);
            report.record("convexity", slack(mid, chord), || {
                format!("x={x}: Φ({b})={mid} above chord {chord} on [{a}, {c}]")
            });
        }
        for &t in &plan.sqrt_triples {
            let (mid, chord) = chord_slack(|tau| f.value(tau.sqrt()), t);
            report.record("sqrt_convexity", slack(mid, chord), || {
                format!(
                    "x={x}: Φ(√{})={mid} above chord {chord} on [{}, {}]",
                    t[1], t[0], t[2]
                )
            });
        }
        let ratios: Vec<f64> = plan.probes.iter().map(|&t| f.value(t) / t).collect();
        for (k, w) in ratios.windows(2).enumerate() {
            report.record("ratio_monotone", slack(w[0], w[1]), || {
                format!(
                    "x={x}: Φ(t)/t drops from {} at t={} to {} at t={}",
                    w[0],
                    plan.probes[k],
                    w[1],
                    plan.probes[k + 1]
                )
            });
        }
        let at_one = f.value(1.0);
        let (first, last) = (ratios[0], ratios[ratios.len() - 1]);
        report.record_flag("limit_at_zero", first < SMALL_RATIO * at_one, || {
            format!("x={x}: Φ(t)/t = {first} at t={} is not small", plan.probes[0])
        });
        report.record_flag("limit_at_infinity", last > LARGE_RATIO * at_one, || {
            format!(
                "x={x}: Φ(t)/t = {last} at t={} is not large",
                plan.probes[plan.probes.len() - 1]
            )
        });
    }
    for &t in &plan.probes {
        let mut inf = f64::INFINITY;
        for &x in &plan.nodes {
            inf = inf.min(spec.at_node(x)?.value(t));
        }
        report.record_flag("uniform_positivity", inf > 0.0, || {
            format!("inf_x Φ(x,{t}) = {inf}")
        });
    }
    Ok(report)
}

/// Young's inequality `s·t ≤ Φ(x,t) + Φ̄(x,s)` on every node and `(s, t)` pair.
pub fn check_young(spec: &NFunctionSpec, nodes: &[usize], pairs: &[(f64, f64)]) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("young[{}]", spec.family_name()));
    for &x in nodes {
        let f = spec.at_node(x)?;
        for &(s, t) in pairs {
            let lhs = s * t;
            let rhs = f.value(t) + conjugate_auto(spec, x, s)?;
            report.record("young", slack(lhs, rhs), || {
                format!("x={x}, s={s}, t={t}: {lhs} > {rhs}")
            });
        }
    }
    Ok(report)
}

/// `n` pairs `(s, t)` uniform in `(0, hi]²`.
pub fn young_pairs(n: usize, hi: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (hi - rng.gen_range(0.0..hi), hi - rng.gen_range(0.0..hi)))
        .collect()
}

/// Growth comparison against the sampled indices:
/// `t^{φ₀}Φ(x,s) ≤ Φ(x,ts) ≤ t^{φ⁰}Φ(x,s)` for `t ≥ 1`, and
/// `Φ(x,ts) ≤ t^{φ₀}Φ(x,s)` for `0 < t < 1`.
pub fn check_scaling_inequality(
    spec: &NFunctionSpec,
    indices: &IndexReport,
    samples: &[(usize, f64, f64)],
) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("scaling[{}]", spec.family_name()));
    let (lo, hi) = (indices.phi_lower, indices.phi_upper);
    for &(x, t, s) in samples {
        if !(t > 0.0 && s > 0.0) {
            return Err(Error::domain("scaling sample", t.min(s), "t > 0 and s > 0"));
        }
        let f = spec.at_node(x)?;
        let base = f.value(s);
        let scaled = f.value(t * s);
        if t >= 1.0 {
            let below = t.powf(lo) * base;
            let above = t.powf(hi) * base;
            report.record("lower_growth", slack(below, scaled), || {
                format!("x={x}, t={t}, s={s}: t^φ₀Φ(s)={below} > Φ(ts)={scaled}")
            });
            report.record("upper_growth", slack(scaled, above), || {
                format!("x={x}, t={t}, s={s}: Φ(ts)={scaled} > t^φ⁰Φ(s)={above}")
            });
        } else {
            let above = t.powf(lo) * base;
            report.record("small_scale", slack(scaled, above), || {
                format!("x={x}, t={t}, s={s}: Φ(ts)={scaled} > t^φ₀Φ(s)={above}")
            });
        }
    }
    Ok(report)
}

/// `n` samples `(x, t, s)` with `t` log-uniform in `[0.05, 20]` and `s`
/// log-uniform in `[1e-3, 1e3]`, so `t·s` stays inside [`INDEX_RANGE`].
pub fn scaling_samples(spec: &NFunctionSpec, n: usize, seed: u64) -> Vec<(usize, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = spec.sample_nodes();
    (0..n)
        .map(|_| {
            let x = nodes[rng.gen_range(0..nodes.len())];
            let t = rng.gen_range(0.05f64.ln()..20f64.ln()).exp();
            let s = rng.gen_range(1e-3f64.ln()..1e3f64.ln()).exp();
            (x, t, s)
        })
        .collect()
}

/// Domination hypothesis `Ψ(x,t) ≤ k₁Φ(x,k₂t) + h` on the samples `(x, t)`.
pub fn check_domination(
    psi: &NFunctionSpec,
    phi: &NFunctionSpec,
    k1: f64,
    k2: f64,
    h: f64,
    samples: &[(usize, f64)],
) -> Result<CheckReport> {
    if !(k1 > 0.0 && k2 > 0.0 && h >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "domination needs k1, k2 > 0 and h ≥ 0, got ({k1}, {k2}, {h})"
        )));
    }
    let mut report = CheckReport::new(format!(
        "domination[{} by {}]",
        psi.family_name(),
        phi.family_name()
    ));
    for &(x, t) in samples {
        let lhs = psi.value(x, t)?;
        let rhs = k1 * phi.value(x, k2 * t)? + h;
        report.record("domination", slack(lhs, rhs), || {
            format!("x={x}, t={t}: Ψ={lhs} > {rhs}")
        });
    }
    Ok(report)
}
