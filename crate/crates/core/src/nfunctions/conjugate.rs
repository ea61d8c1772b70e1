use super::NFunctionSpec;
use crate::numeric::{golden_max, log_space};
use crate::{Error, Result};

/// Default upper end of the conjugate search window.
pub const DEFAULT_WINDOW: f64 = 1e6;
/// Largest window tried by the auto-widening variants.
pub const MAX_WINDOW: f64 = 1e12;

const SCAN_POINTS: usize = 1500;
/// The scan covers `[t_max·1e-16, t_max]` on a geometric grid.
const SCAN_DEPTH: f64 = 1e-16;
const REFINE_TOL: f64 = 1e-10;

/// `sup_{0 ≤ t ≤ t_max} (s·t − f(t))` for a convex `f` with `f(0) = 0`.
///
/// A geometric scan brackets the maximizer, golden-section refines it. If
/// the maximizer sits on `t_max` the window is reported as exhausted.
pub fn legendre_sup<F: Fn(f64) -> f64>(f: F, s: f64, t_max: f64) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::domain("conjugate", s, "s ≥ 0"));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let mut ts = Vec::with_capacity(SCAN_POINTS + 1);
    ts.push(0.0);
    ts.extend(log_space(t_max * SCAN_DEPTH, t_max, SCAN_POINTS));
    let gain = |t: f64| s * t - f(t);

    let (mut best, mut best_val) = (0, 0.0);
    for (i, &t) in ts.iter().enumerate().skip(1) {
        let v = gain(t);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    let last = ts.len() - 1;
    if best == last {
        return Err(Error::WindowExhausted { s, t_max });
    }
    let lo = ts[best.saturating_sub(1)];
    let hi = ts[best + 1];
    let (arg, refined) = golden_max(gain, lo, hi, REFINE_TOL);
    if best + 1 == last && arg >= t_max * (1.0 - 1e-9) {
        return Err(Error::WindowExhausted { s, t_max });
    }
    Ok(refined.max(best_val).max(0.0))
}

/// [`legendre_sup`] starting from [`DEFAULT_WINDOW`], doubling the window up
/// to [`MAX_WINDOW`] while it is exhausted.
pub fn legendre_sup_auto<F: Fn(f64) -> f64>(f: F, s: f64) -> Result<f64> {
    let mut t_max = DEFAULT_WINDOW;
    loop {
        match legendre_sup(&f, s, t_max) {
            Err(Error::WindowExhausted { .. }) if t_max * 2.0 <= MAX_WINDOW => t_max *= 2.0,
            other => return other,
        }
    }
}

/// Conjugate `Φ̄(x, s)` on the window `[0, t_max]`.
pub fn conjugate(spec: &NFunctionSpec, x: usize, s: f64, t_max: f64) -> Result<f64> {
    let local = spec.at_node(x)?;
    legendre_sup(|t| local.value(t), s, t_max)
}

/// Conjugate `Φ̄(x, s)` with the auto-widening window.
pub fn conjugate_auto(spec: &NFunctionSpec, x: usize, s: f64) -> Result<f64> {
    let local = spec.at_node(x)?;
    legendre_sup_auto(|t| local.value(t), s)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Uniform dense scan, independent of the geometric bracket.
    fn brute_sup(f: impl Fn(f64) -> f64, s: f64, t_hi: f64, n: usize) -> f64 {
        (0..=n)
            .map(|i| {
                let t = t_hi * i as f64 / n as f64;
                s * t - f(t)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn square_conjugate() {
        let sq = NFunctionSpec::power(2.0).unwrap();
        assert!((conjugate(&sq, 0, 2.0, DEFAULT_WINDOW).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(conjugate(&sq, 0, 0.0, DEFAULT_WINDOW).unwrap(), 0.0);
        for s in [1e-4, 0.3, 5.0, 1e3] {
            let v = conjugate(&sq, 0, s, DEFAULT_WINDOW).unwrap();
            assert!((v - s * s / 4.0).abs() <= 1e-12 * (s * s / 4.0), "{s}: {v}");
        }
    }

    #[test]
    fn plasticity_conjugate_matches_dense_scan() {
        let pl = NFunctionSpec::plasticity(2.0, 1.0).unwrap();
        let local = pl.at_node(0).unwrap();
        let oracle = brute_sup(|t| local.value(t), 1.0, 10.0, 1_000_000);
        let got = conjugate(&pl, 0, 1.0, DEFAULT_WINDOW).unwrap();
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
        assert!(got >= oracle - 1e-12);
    }

    #[test]
    fn exhausted_window_is_reported_and_auto_widens() {
        let sq = NFunctionSpec::power(2.0).unwrap();
        // maximizer t = s/2 = 50 lies outside [0, 10]
        assert!(matches!(
            conjugate(&sq, 0, 100.0, 10.0),
            Err(Error::WindowExhausted { .. })
        ));
        // t = 1e6 needs one doubling of the default window
        let v = conjugate_auto(&sq, 0, 2e6).unwrap();
        assert!((v - 1e12).abs() < 1e-9 * 1e12);
        // linear-growth limit: never found
        let lin = |t: f64| t * (1.0 + t).ln_1p().ln_1p();
        assert!(legendre_sup_auto(lin, 1e3).is_err());
    }

    #[test]
    fn biconjugate_recovers_convex_function() {
        let el = NFunctionSpec::elasticity(1.5).unwrap().at_node(0).unwrap();
        let conj = |s: f64| legendre_sup(|t| el.value(t), s, 1e3).unwrap();
        for t in [0.1, 0.7, 2.0, 5.0] {
            let back = legendre_sup(conj, t, 1e4).unwrap();
            let exact = el.value(t);
            assert!(((back - exact) / exact).abs() < 1e-6, "t={t}: {back} vs {exact}");
        }
    }
}
