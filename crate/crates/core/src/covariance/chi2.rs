//! Chi-square distribution function and its inverse.
//!
//! The CDF of `χ²(k)` at `x` is the regularized lower incomplete gamma
//! function `P(k/2, x/2)`. Small arguments use the power series, large ones
//! the Lentz continued fraction for the upper tail `Q = 1 − P`.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const SERIES_EPS: f64 = 1e-17;
const MAX_TERMS: usize = 10_000;

fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * SERIES_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn upper_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < SERIES_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized incomplete gamma pair `(P(a, x), Q(a, x))`.
pub fn regularized_gamma(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x < a + 1.0 {
        let p = lower_series(a, x);
        (p, 1.0 - p)
    } else {
        let q = upper_fraction(a, x);
        (1.0 - q, q)
    }
}

pub fn chi2_cdf(x: f64, dof: usize) -> f64 {
    regularized_gamma(dof as f64 / 2.0, x / 2.0).0
}

fn chi2_ln_pdf(x: f64, dof: usize) -> f64 {
    let k = dof as f64 / 2.0;
    (k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)
}

/// Quantile of `χ²(dof)`: the `x` with `P(dof/2, x/2) = prob`.
///
/// Bracketed Newton iteration; steps leaving the bracket fall back to
/// bisection. Converges to ~1e-14 relative.
pub fn chi2_quantile(prob: f64, dof: usize) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!("chi-square quantile needs prob in (0, 1), got {prob}")));
    }
    if dof == 0 {
        return Err(Error::Domain("chi-square quantile needs dof >= 1".into()));
    }
    // Residual measured on whichever tail is more accurate.
    let upper = prob > 0.5;
    let target = if upper { 1.0 - prob } else { prob };
    let residual = |x: f64| {
        let (p, q) = chi2_gamma(x, dof);
        if upper {
            target - q
        } else {
            p - target
        }
    };

    let mut lo = 0.0;
    let mut hi = (dof as f64).max(1.0);
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numeric(format!("could not bracket chi2 quantile ({prob}, {dof})")));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..2000 {
        let f = residual(x);
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = chi2_ln_pdf(x, dof).exp();
        let mut next = if pdf > 0.0 && pdf.is_finite() { x - f / pdf } else { f64::NAN };
        if !(next > lo && next < hi) {
            // geometric steps while the lower bracket is still zero
            next = if lo == 0.0 { hi / 16.0 } else { 0.5 * (lo + hi) };
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x.abs() || hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(x)
}

fn chi2_gamma(x: f64, dof: usize) -> (f64, f64) {
    regularized_gamma(dof as f64 / 2.0, x / 2.0)
}
