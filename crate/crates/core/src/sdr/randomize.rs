//! Recovering a point from a lifted solution.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Eigenpairs sorted by decreasing eigenvalue, negatives clipped to zero.
fn sorted_eigen(u: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new((u + u.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..u.nrows()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let top = e.eigenvalues.max().max(0.0);
    // eigenvalues at rounding level are noise, not directions
    let floor = top * 1e-13 * u.nrows() as f64;
    let values = order.iter().map(|&k| if e.eigenvalues[k] > floor { e.eigenvalues[k] } else { 0.0 }).collect();
    let vectors = DMatrix::from_fn(u.nrows(), u.ncols(), |r, c| e.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Divides by the last coordinate so it becomes +1. `None` when that
/// coordinate is numerically zero.
pub fn dehomogenize(u: &DVector<f64>) -> Option<DVector<f64>> {
    let n = u.len();
    let a = u[n - 1];
    if !(a.abs() > 1e-12 * u.amax().max(1e-300)) {
        return None;
    }
    Some(u / a)
}

/// Principal direction of `u` when it is numerically rank one
/// (lambda_2 / lambda_1 <= tol), scaled so the last coordinate is 1.
pub fn rank1_shortcut(u: &DMatrix<f64>, tol: f64) -> Option<DVector<f64>> {
    let (values, vectors) = sorted_eigen(u);
    let l1 = *values.first()?;
    if l1 <= 0.0 {
        return None;
    }
    let l2 = values.get(1).copied().unwrap_or(0.0);
    if l2 / l1 > tol {
        return None;
    }
    dehomogenize(&(vectors.column(0) * l1.sqrt()))
}

/// `count` draws from N(0, u), each from its own seeded stream, scaled so the
/// last coordinate is +1. Draws with a vanishing last coordinate are `None`.
pub fn gaussian_samples(u: &DMatrix<f64>, count: usize, seed: u64) -> Vec<Option<DVector<f64>>> {
    let (values, vectors) = sorted_eigen(u);
    let root: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    (0..count)
        .into_par_iter()
        .map(|g| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(g as u64);
            let w = DVector::from_iterator(root.len(), root.iter().map(|r| r * Distribution::<f64>::sample(&StandardNormal, &mut rng)));
            dehomogenize(&(&vectors * w))
        })
        .collect()
}

/// Draws `count` samples, scores each (repair plus true objective, `None`
/// when irreparable) and returns the best, ties going to the earliest draw.
pub fn gaussian_randomization<F>(u: &DMatrix<f64>, count: usize, seed: u64, score: F) -> Result<(DVector<f64>, f64)>
where
    F: Fn(&DVector<f64>) -> Option<f64> + Sync,
{
    if count == 0 {
        return Err(Error::InvalidParameter("randomization needs at least one sample".into()));
    }
    let samples = gaussian_samples(u, count, seed);
    let scored: Vec<Option<f64>> = samples.par_iter().map(|s| s.as_ref().and_then(&score)).collect();
    let mut best: Option<(usize, f64)> = None;
    for (g, v) in scored.iter().enumerate() {
        if let Some(v) = *v {
            if best.is_none_or(|b| v < b.1) {
                best = Some((g, v));
            }
        }
    }
    let (g, v) = best.ok_or(Error::RandomizationFailed { samples: count })?;
    Ok((samples[g].clone().expect("scored sample exists"), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_covariance_recovers_the_point() {
        let v = DVector::from_vec(vec![0.3, -1.2, 0.7, 1.0]);
        let u = &v * v.transpose() * 2.5;
        for s in gaussian_samples(&u, 20, 9).into_iter().flatten() {
            assert!((s - &v).amax() < 1e-9);
        }
        let r = rank1_shortcut(&u, 1e-6).unwrap();
        assert!((r - &v).amax() < 1e-12);
    }

    #[test]
    fn shortcut_threshold() {
        assert!(rank1_shortcut(&DMatrix::identity(3, 3), 1e-6).is_none());
        let mut u = DMatrix::zeros(2, 2);
        u[(0, 0)] = 1e-9;
        u[(1, 1)] = 1.0;
        assert!(rank1_shortcut(&u, 1e-6).is_some());
    }

    #[test]
    fn samples_are_reproducible() {
        let u = DMatrix::identity(2, 2);
        let a = gaussian_samples(&u, 1, 42);
        let b = gaussian_samples(&u, 1, 42);
        assert_eq!(a, b);
        let c = gaussian_samples(&u, 1, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn best_sample_by_score() {
        let u = DMatrix::identity(3, 3);
        let (best, v) = gaussian_randomization(&u, 50, 1, |s| Some(s[0] * s[0])).unwrap();
        assert_eq!(v, best[0] * best[0]);
        for s in gaussian_samples(&u, 50, 1).into_iter().flatten() {
            assert!(s[0] * s[0] >= v);
        }
        assert_eq!(
            gaussian_randomization(&u, 5, 1, |_| None),
            Err(Error::RandomizationFailed { samples: 5 })
        );
    }
}
