//! Least-squares monomial fits in log-log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest log-space error an accepted fit may have.
pub const MAX_FIT_RESIDUAL: f64 = 0.05;

/// Sample count of every fit.
pub const FIT_POINTS: usize = 64;

/// `g(f) ~ mu * f^omega` over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonomialFit {
    pub mu: f64,
    pub omega: f64,
    pub lo: f64,
    pub hi: f64,
    /// Worst |ln g - ln(mu f^omega)| over the sample points.
    pub max_log_residual: f64,
}

impl MonomialFit {
    pub fn eval(&self, f: f64) -> f64 {
        self.mu * f.powf(self.omega)
    }

    pub fn accepted(self) -> Result<Self> {
        if self.max_log_residual <= MAX_FIT_RESIDUAL {
            Ok(self)
        } else {
            Err(Error::FitRejected { residual: self.max_log_residual, lo: self.lo, hi: self.hi })
        }
    }
}

/// Fits `ln g` against `ln f` over `points` log-spaced samples of `[lo, hi]`.
///
/// A degenerate range (`lo == hi`) gives the constant `g(lo)`.
pub fn fit_monomial(g: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> Result<MonomialFit> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || points < 2 {
        return Err(Error::Domain(format!("fit range [{lo}, {hi}] with {points} points")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let xs: Vec<f64> = (0..points).map(|k| a + (b - a) * k as f64 / (points - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| g(x.exp()).ln()).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Domain(format!("fitted function is not positive on [{lo}, {hi}]")));
    }
    let n = points as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let omega = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ln_mu = my - omega * mx;
    let max_log_residual = xs.iter().zip(&ys).map(|(x, y)| (y - ln_mu - omega * x).abs()).fold(0.0, f64::max);
    Ok(MonomialFit { mu: ln_mu.exp(), omega, lo, hi, max_log_residual })
}

/// Monomial fit of `asin(1/f)` (radians) over `[lo, hi]`, `lo >= 1`.
pub fn fit_arcsin_monomial(lo: f64, hi: f64) -> Result<MonomialFit> {
    if lo < 1.0 {
        return Err(Error::Domain(format!("asin(1/f) needs f >= 1, range starts at {lo}")));
    }
    fit_monomial(|f| (1.0 / f).min(1.0).asin(), lo, hi, FIT_POINTS)?.accepted()
}
