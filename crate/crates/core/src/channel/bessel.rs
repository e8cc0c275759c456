//! Zeroth-order modified Bessel function of the first kind.
//!
//! Two regimes: the ascending power series below `SERIES_LIMIT` (all terms
//! positive, so no cancellation) and the Hankel asymptotic expansion above
//! it, truncated at its smallest term. Both are accurate to a few ulp over
//! their range.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 25.0;

/// `I0(x)`. Overflows to infinity for `x` above roughly 713.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        series(x)
    } else {
        asymptotic_scaled(x) * x.exp()
    }
}

/// Exponentially scaled `e^{-x} I0(x)`, finite for every finite `x`.
pub fn bessel_i0e(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        series(x) * (-x).exp()
    } else {
        asymptotic_scaled(x)
    }
}

fn series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

fn asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = term * odd * odd / (8.0 * k * x);
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    sum / (2.0 * PI * x).sqrt()
}
