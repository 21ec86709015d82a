//! Standard normal helpers with tails that stay finite far below zero.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const TAIL: f64 = -30.0;

pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// `1 - 1/z^2 + 3/z^4 - 15/z^6`, the asymptotic correction of Mills' ratio.
fn tail_series(z: f64) -> f64 {
    let r = 1.0 / (z * z);
    1.0 - r + 3.0 * r * r - 15.0 * r * r * r
}

pub fn log_cdf(z: f64) -> f64 {
    if z < TAIL {
        -0.5 * z * z - 0.5 * (2.0 * PI).ln() - (-z).ln() + tail_series(z).ln()
    } else {
        cdf(z).ln()
    }
}

/// `pdf(z) / cdf(z)`, the derivative of `log_cdf`.
pub fn inverse_mills(z: f64) -> f64 {
    if z < TAIL {
        -z / tail_series(z)
    } else {
        pdf(z) / cdf(z)
    }
}
