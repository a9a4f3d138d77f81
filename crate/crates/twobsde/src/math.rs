//! Small numerical helpers: standard-normal functions and composite
//! Simpson quadrature for the moment validators.

use statrs::distribution::{ContinuousCDF, Normal};

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse standard-normal CDF; `p` must lie in the open unit interval.
/// The library approximation is polished by two Newton steps, which takes
/// it from ~1e-9 to machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let n = standard_normal();
    let mut x = n.inverse_cdf(p);
    for _ in 0..2 {
        let d = normal_pdf(x);
        if d <= f64::MIN_POSITIVE {
            break;
        }
        x -= (n.cdf(x) - p) / d;
    }
    x
}

/// Map a raw 64-bit draw to the open interval (0, 1); the half-step offset
/// keeps both endpoints unattainable so `normal_quantile` stays finite.
pub fn u64_to_open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Composite Simpson rule with `n` subintervals (`n` is rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(hi >= lo);
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + h * i as f64);
    }
    acc * h / 3.0
}

/// ∫ f over [-half, half] split at zero, so integrands with a kink at the
/// origin (absolute moments) keep full Simpson accuracy.
pub fn simpson_symmetric(f: impl Fn(f64) -> f64 + Copy, half: f64, n_half: usize) -> f64 {
    simpson(f, -half, 0.0, n_half) + simpson(f, 0.0, half, n_half)
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    sxy / sxx
}
