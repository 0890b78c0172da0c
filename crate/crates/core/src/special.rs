//! Error-function family and the standard normal law.

use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

const INV_SQRT_PI: f64 = FRAC_2_SQRT_PI / 2.0;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Direct product below `x = 26` with `x²` split exactly into `hi + lo`,
/// Laplace continued fraction above, and the reflection
/// `2exp(x²) − erfcx(−x)` for negative arguments.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 26.0 {
        let hi = x * x;
        let lo = x.mul_add(x, -hi);
        return hi.exp() * libm::erfc(x) * (1.0 + lo);
    }
    if x > 1e8 {
        return INV_SQRT_PI / x;
    }
    let mut f = x;
    for k in (1..=60).rev() {
        f = x + 0.5 * k as f64 / f;
    }
    INV_SQRT_PI / f
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile by bracketed Newton iteration on [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let mut x = 0.0;
    for _ in 0..200 {
        let f = normal_cdf(x) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = f / normal_pdf(x);
        let mut next = x - step;
        if !(next > lo && next < hi) || !step.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}
