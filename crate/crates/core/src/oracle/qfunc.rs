//! Gaussian tail function Q(x) = P[N(0,1) > x] and its inverse.

use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Q(x) = erfc(x / sqrt 2) / 2.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_function`] on (0, 1/2].
///
/// Starts from the closed-form `sqrt 2 * erfc^-1(2p)` and polishes with Newton
/// steps on the log of Q, which keeps relative accuracy deep in the tail.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::Domain(format!("Q^-1 needs p in (0, 0.5], got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..8 {
        let q = q_function(x);
        if q <= 0.0 {
            break;
        }
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        // d/dx ln Q(x) = -pdf / Q
        let step = (q.ln() - p.ln()) / (pdf / q);
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}
