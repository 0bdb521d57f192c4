//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use statrs::function::gamma::ln_gamma;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 60)
}

/// Log density of Beta(a, b), written out independently of the crate.
pub fn beta_ln_pdf(p: f64, a: f64, b: f64) -> f64 {
    let ln_b = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let t1 = if a == 1.0 { 0.0 } else { (a - 1.0) * p.ln() };
    let t2 = if b == 1.0 { 0.0 } else { (b - 1.0) * (1.0 - p).ln() };
    t1 + t2 - ln_b
}

/// `−∫ g log f` with `g = Beta(c, d)` and `f = Beta(a, b)` by quadrature.
/// The integral is split at the mode of `g` so the peak is resolved.
pub fn cross_entropy_quadrature(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let integrand = |p: f64| {
        if p <= 0.0 || p >= 1.0 {
            return 0.0;
        }
        let lg = beta_ln_pdf(p, c, d);
        if lg < -745.0 {
            return 0.0;
        }
        -lg.exp() * beta_ln_pdf(p, a, b)
    };
    let mode = if c > 1.0 && d > 1.0 { (c - 1.0) / (c + d - 2.0) } else { 0.5 };
    let sd = (c * d / ((c + d).powi(2) * (c + d + 1.0))).sqrt();
    let mut cuts = vec![0.0];
    for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
        let x = mode + k * sd;
        if x > *cuts.last().unwrap() + 1e-12 && x < 1.0 - 1e-12 {
            cuts.push(x);
        }
    }
    cuts.push(1.0);
    cuts.windows(2)
        .map(|w| adaptive_simpson(&integrand, w[0], w[1], 1e-12))
        .sum()
}

/// Kolmogorov–Smirnov distance between a sample and the standard normal.
pub fn ks_standard_normal(sample: &mut [f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let z = Normal::new(0.0, 1.0).unwrap();
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = z.cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}
