//! Variable-exponent image restoration:
//! `E(u) = Σ|∇u|^{p(x)} + λ(u − u₀)²` over pixels of unit size, with
//! forward differences and zero flux across the image border.
//!
//! Descent directions come from the gradient of the regularized energy
//! `Σ(|∇u|² + δ²)^{p/2}`, but steps are accepted by an Armijo test on the
//! exact `E`, so the recorded energy never increases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::numeric::{map_indices, pairwise_sum};
use crate::pgm::Image;
use crate::{Error, Result};

/// Exponents are kept in `[P_MIN, 2]`; `p = 1` is outside the N-function
/// setting.
pub const P_MIN: f64 = 1.0 + 1e-3;
pub const P_MAX: f64 = 2.0;

/// How the exponent map is derived from the noisy image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PRule {
    Constant { p: f64 },
    /// `p = 1 + 1/(1 + k|∇(G*u₀)|²)` with `G` a 3×3 box blur.
    EdgeAdaptive { k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenoiseConfig {
    pub lambda: f64,
    pub rule: PRule,
    pub delta: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            lambda: 1.0,
            rule: PRule::EdgeAdaptive { k: 100.0 },
            delta: 1e-4,
            max_iters: 500,
            rel_tol: 1e-12,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be ≥ 0, got {}", self.lambda));
        }
        match self.rule {
            PRule::Constant { p } if !(1.0..=2.0).contains(&p) => {
                return bad(format!("constant p must lie in [1, 2], got {p}"))
            }
            PRule::EdgeAdaptive { k } if !(k >= 0.0 && k.is_finite()) => {
                return bad(format!("edge-adaptive k must be ≥ 0, got {k}"))
            }
            _ => {}
        }
        if !(self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0 && self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo and backtrack must lie in (0,1)".into());
        }
        Ok(())
    }
}

/// Forward differences with zero flux at the last row/column.
fn diffs(u: &[f64], w: usize, h: usize, i: usize) -> (f64, f64) {
    let (r, c) = (i / w, i % w);
    let dx = if c + 1 < w { u[i + 1] - u[i] } else { 0.0 };
    let dy = if r + 1 < h { u[i + w] - u[i] } else { 0.0 };
    (dx, dy)
}

fn box_blur(img: &Image) -> Vec<f64> {
    let (w, h) = (img.width as isize, img.height as isize);
    (0..img.pixels.len())
        .map(|i| {
            let (r, c) = (i as isize / w, i as isize % w);
            let (mut s, mut n) = (0.0, 0.0);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr >= 0 && rr < h && cc >= 0 && cc < w {
                        s += img.pixels[(rr * w + cc) as usize];
                        n += 1.0;
                    }
                }
            }
            s / n
        })
        .collect()
}

/// Exponent map and the number of pixels lifted to [`P_MIN`].
pub fn exponent_map(img: &Image, rule: PRule) -> (Vec<f64>, usize) {
    let raw: Vec<f64> = match rule {
        PRule::Constant { p } => vec![p; img.pixels.len()],
        PRule::EdgeAdaptive { k } => {
            let b = box_blur(img);
            (0..b.len())
                .map(|i| {
                    let (dx, dy) = diffs(&b, img.width, img.height, i);
                    1.0 + 1.0 / (1.0 + k * (dx * dx + dy * dy))
                })
                .collect()
        }
    };
    let clamped = raw.iter().filter(|&&p| p < P_MIN).count();
    (raw.into_iter().map(|p| p.clamp(P_MIN, P_MAX)).collect(), clamped)
}

struct Problem<'a> {
    u0: &'a [f64],
    p: Vec<f64>,
    w: usize,
    h: usize,
    lambda: f64,
    delta: f64,
}

impl Problem<'_> {
    fn energy(&self, u: &[f64]) -> f64 {
        let terms = map_indices(u.len(), |i| {
            let (dx, dy) = diffs(u, self.w, self.h, i);
            let m2 = dx * dx + dy * dy;
            let reg = if m2 == 0.0 { 0.0 } else { m2.powf(0.5 * self.p[i]) };
            let f = u[i] - self.u0[i];
            reg + self.lambda * f * f
        });
        pairwise_sum(&terms)
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let flux = map_indices(u.len(), |i| {
            let (dx, dy) = diffs(u, self.w, self.h, i);
            let a = self.p[i] * (dx * dx + dy * dy + self.delta * self.delta).powf(0.5 * self.p[i] - 1.0);
            (a * dx, a * dy)
        });
        let mut g: Vec<f64> = (0..u.len()).map(|i| 2.0 * self.lambda * (u[i] - self.u0[i])).collect();
        for (i, &(fx, fy)) in flux.iter().enumerate() {
            let c = i % self.w;
            if c + 1 < self.w {
                g[i] -= fx;
                g[i + 1] += fx;
            }
            if i + self.w < u.len() {
                g[i] -= fy;
                g[i + self.w] += fy;
            }
        }
        g
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DenoiseReport {
    #[serde(skip)]
    pub output: Image,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// `E` after each accepted iteration, starting with `E(u₀)`.
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub clamped_pixels: usize,
    pub stop: &'static str,
}

/// Descends on `E` from `u = u₀`.
pub fn denoise(img: &Image, cfg: &DenoiseConfig) -> Result<DenoiseReport> {
    cfg.validate()?;
    let (p, clamped) = exponent_map(img, cfg.rule);
    let prob = Problem {
        u0: &img.pixels,
        p,
        w: img.width,
        h: img.height,
        lambda: cfg.lambda,
        delta: cfg.delta,
    };
    let mut u = img.pixels.clone();
    let mut e = prob.energy(&u);
    let energy_initial = e;
    let mut trace = vec![e];
    let mut g = prob.gradient(&u);
    // a safe first step for the fidelity and the smoothed diffusion
    let mut step = 1.0 / (2.0 * cfg.lambda + 8.0 / cfg.delta.max(1e-2));
    let mut stop = "max_iters";
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let mut alpha = step;
        let accepted = loop {
            let trial: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
            let predicted: f64 = g.iter().zip(trial.iter().zip(&u)).map(|(gi, (t, v))| gi * (t - v)).sum();
            if predicted.abs() <= 1e-15 * (1.0 + e.abs()) {
                break None;
            }
            let et = prob.energy(&trial);
            if et <= e + cfg.armijo * predicted {
                break Some((trial, et));
            }
            alpha *= cfg.backtrack;
            if alpha < 1e-20 {
                break None;
            }
        };
        let Some((trial, et)) = accepted else {
            stop = "stalled";
            break;
        };
        if et > e {
            return Err(Error::EnergyIncrease {
                rung: 0,
                before: e,
                after: et,
            });
        }
        iterations += 1;
        let gt = prob.gradient(&trial);
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..u.len() {
            let s = trial[i] - u[i];
            ss += s * s;
            sy += s * (gt[i] - g[i]);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e6) } else { 4.0 * alpha };
        let decrease = e - et;
        u = trial;
        g = gt;
        e = et;
        trace.push(e);
        if decrease <= cfg.rel_tol * (1.0 + e.abs()) {
            stop = "tolerance";
            break;
        }
    }
    let (p_min, p_max) = prob
        .p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    Ok(DenoiseReport {
        output: Image::new(img.width, img.height, u)?,
        energy_initial,
        energy_final: e,
        energy_trace: trace,
        iterations,
        p_min,
        p_max,
        clamped_pixels: clamped,
        stop,
    })
}

/// `n×n` image: 0.2 on the left half, 0.8 on the right, plus uniform noise
/// in `[−amplitude, amplitude]`.
pub fn synthetic_step(n: usize, amplitude: f64, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = (0..n * n)
        .map(|i| {
            let base = if i % n < n / 2 { 0.2 } else { 0.8 };
            base + rng.gen_range(-amplitude..=amplitude)
        })
        .collect();
    Image::new(n, n, pixels).expect("n > 0")
}

/// `iter,energy` CSV of a trace.
pub fn energy_trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("iter,energy\n");
    for (k, e) in trace.iter().enumerate() {
        out.push_str(&format!("{k},{}\n", crate::report::format_f64(*e)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_differences_of_regularized_energy() {
        let img = synthetic_step(6, 0.1, 1);
        let (p, _) = exponent_map(&img, PRule::EdgeAdaptive { k: 50.0 });
        let delta = 0.3;
        let prob = Problem {
            u0: &img.pixels,
            p,
            w: 6,
            h: 6,
            lambda: 0.7,
            delta,
        };
        let reg = |u: &[f64]| -> f64 {
            (0..u.len())
                .map(|i| {
                    let (dx, dy) = diffs(u, 6, 6, i);
                    (dx * dx + dy * dy + delta * delta).powf(0.5 * prob.p[i])
                        + 0.7 * (u[i] - img.pixels[i]).powi(2)
                })
                .sum()
        };
        let u: Vec<f64> = img.pixels.iter().map(|v| v * 0.9 + 0.05).collect();
        let g = prob.gradient(&u);
        for i in [0, 7, 20, 35] {
            let mut a = u.clone();
            let mut b = u.clone();
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let fd = (reg(&a) - reg(&b)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-6, "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn exponent_rules() {
        let img = synthetic_step(16, 0.0, 0);
        let (p, clamped) = exponent_map(&img, PRule::EdgeAdaptive { k: 100.0 });
        assert_eq!(clamped, 0);
        assert_eq!(p[0], 2.0);
        assert!(p[6] < 1.5);
        let (p, clamped) = exponent_map(&img, PRule::Constant { p: 1.0 });
        assert_eq!(clamped, 256);
        assert!(p.iter().all(|&v| v == P_MIN));
    }

    #[test]
    fn heat_flow_tends_to_mean() {
        let img = synthetic_step(12, 0.1, 3);
        let mean = img.pixels.iter().sum::<f64>() / 144.0;
        let cfg = DenoiseConfig {
            lambda: 0.0,
            rule: PRule::Constant { p: 2.0 },
            max_iters: 3000,
            rel_tol: 0.0,
            ..DenoiseConfig::default()
        };
        let r = denoise(&img, &cfg).unwrap();
        assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        let dev = r.output.pixels.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
        assert!(dev < 1e-3, "{dev}");
    }

    #[test]
    fn large_fidelity_keeps_input() {
        let img = synthetic_step(16, 0.1, 4);
        let cfg = DenoiseConfig {
            lambda: 1e6,
            ..DenoiseConfig::default()
        };
        let r = denoise(&img, &cfg).unwrap();
        for (a, b) in r.output.pixels.iter().zip(&img.pixels) {
            assert!((a - b).abs() < 1e-3);
        }
    }
}
