//! Dense primal-dual interior-point solver for small semidefinite programs.
//!
//! Solves
//!
//! ```text
//! min <C, X>  s.t.  <A_k, X> (<= | =) b_k,  X psd
//! ```
//!
//! with the HKM search direction and Mehrotra predictor-corrector steps.
//! Inequalities get a nonnegative slack, handled as an LP block next to `X`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::qcqp::HomogeneousSdp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    /// Iterates diverged; the primal or the dual has no feasible point.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub c: DMatrix<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
    /// Row k is `<A_k, X> <= b_k` when set, an equality otherwise.
    pub inequality: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings { tol: 1e-7, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub z: DMatrix<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Relative duality gap |p - d| / (1 + |p| + |d|).
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest step keeping `x + t dx` psd, capped at `cap`.
fn psd_step(x: &DMatrix<f64>, dx: &DMatrix<f64>, cap: f64) -> f64 {
    let Some(ch) = Cholesky::new(x.clone()) else { return 0.0 };
    let l = ch.l();
    let Some(li) = l.clone().try_inverse() else { return 0.0 };
    let m = sym(&(&li * dx * li.transpose()));
    let lmin = SymmetricEigen::new(m).eigenvalues.min();
    if lmin >= 0.0 {
        cap
    } else {
        cap.min(-1.0 / lmin)
    }
}

fn lp_step(x: &DVector<f64>, dx: &DVector<f64>, cap: f64) -> f64 {
    let mut t = cap;
    for (xi, di) in x.iter().zip(dx.iter()) {
        if *di < 0.0 {
            t = t.min(-xi / di);
        }
    }
    t
}

struct Direction {
    dx: DMatrix<f64>,
    dxl: DVector<f64>,
    dy: DVector<f64>,
    dz: DMatrix<f64>,
    dzl: DVector<f64>,
}

impl SdpProblem {
    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|a| inner(a, x)))
    }

    fn adjoint(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (a, yk) in self.a.iter().zip(y.iter()) {
            out += a * *yk;
        }
        out
    }

    pub fn solve(&self, settings: SdpSettings) -> SdpSolution {
        let n = self.dim();
        let m = self.a.len();
        let slack: Vec<usize> = (0..m).filter(|&k| self.inequality[k]).collect();
        let p = slack.len();
        let norm_c = self.c.norm();
        let norm_b = self.b.norm();
        let scale_a = self.a.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let xi = (n as f64).sqrt().max(10.0).max(
            (0..m).map(|k| n as f64 * (1.0 + self.b[k].abs()) / (1.0 + self.a[k].norm())).fold(0.0, f64::max),
        );
        let eta = (n as f64).sqrt().max(10.0).max(scale_a).max(norm_c);

        let mut x = DMatrix::identity(n, n) * xi;
        let mut xl = DVector::from_element(p, xi);
        let mut y = DVector::zeros(m);
        let mut z = DMatrix::identity(n, n) * eta;
        let mut zl = DVector::from_element(p, eta);

        let mut status = SdpStatus::MaxIter;
        let mut iterations = 0;
        let mut last = (0.0, 0.0, f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for it in 0..=settings.max_iter {
            iterations = it;
            let ax = self.apply(&x);
            let mut rp = &self.b - &ax;
            for (s, &k) in slack.iter().enumerate() {
                rp[k] -= xl[s];
            }
            let rd = &self.c - self.adjoint(&y) - &z;
            let rdl = DVector::from_iterator(p, slack.iter().enumerate().map(|(s, &k)| -y[k] - zl[s]));
            let pobj = inner(&self.c, &x);
            let dobj = self.b.dot(&y);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let pinf = rp.norm() / (1.0 + norm_b);
            let dinf = (rd.norm() + rdl.norm()) / (1.0 + norm_c);
            let comp = (inner(&x, &z) + xl.dot(&zl)) / (1.0 + pobj.abs() + dobj.abs());
            last = (pobj, dobj, gap, pinf, dinf);
            if gap <= settings.tol && pinf <= settings.tol && dinf <= settings.tol && comp <= settings.tol {
                status = SdpStatus::Optimal;
                break;
            }
            if x.norm() > 1e13 || y.norm() > 1e13 || !pobj.is_finite() || !dobj.is_finite() {
                status = SdpStatus::Infeasible;
                break;
            }
            if it == settings.max_iter {
                break;
            }
            let mu = (inner(&x, &z) + xl.dot(&zl)) / (n + p) as f64;

            let Some(zc) = Cholesky::new(z.clone()) else {
                status = SdpStatus::Infeasible;
                break;
            };
            let zinv = zc.inverse();
            let xa: Vec<DMatrix<f64>> = self.a.iter().map(|a| &x * a * &zinv).collect();
            let mut schur = DMatrix::zeros(m, m);
            for k in 0..m {
                for i in k..m {
                    let v = inner(&self.a[k], &xa[i].transpose());
                    schur[(k, i)] = v;
                    schur[(i, k)] = v;
                }
            }
            for (s, &k) in slack.iter().enumerate() {
                schur[(k, k)] += xl[s] / zl[s];
            }
            let chol = match Cholesky::new(schur.clone()) {
                Some(c) => c,
                None => {
                    let reg = 1e-12 * (1.0 + schur.diagonal().amax());
                    match Cholesky::new(schur + DMatrix::identity(m, m) * reg) {
                        Some(c) => c,
                        None => {
                            status = SdpStatus::Infeasible;
                            break;
                        }
                    }
                }
            };

            let direction = |kmat: &DMatrix<f64>, kvec: &DVector<f64>| -> Direction {
                let base = kmat * &zinv - &x;
                let pre = &base - &x * &rd * &zinv;
                let pre_l = DVector::from_iterator(
                    p,
                    (0..p).map(|s| kvec[s] / zl[s] - xl[s] - xl[s] / zl[s] * rdl[s]),
                );
                let mut rhs = &rp - self.apply(&pre);
                for (s, &k) in slack.iter().enumerate() {
                    rhs[k] -= pre_l[s];
                }
                let dy = chol.solve(&rhs);
                let dz = &rd - self.adjoint(&dy);
                let dzl = DVector::from_iterator(p, slack.iter().enumerate().map(|(s, &k)| rdl[s] - dy[k]));
                let dx = sym(&(&base - &x * &dz * &zinv));
                let dxl = DVector::from_iterator(p, (0..p).map(|s| kvec[s] / zl[s] - xl[s] - xl[s] / zl[s] * dzl[s]));
                Direction { dx, dxl, dy, dz, dzl }
            };

            let aff = direction(&DMatrix::zeros(n, n), &DVector::zeros(p));
            let ap = psd_step(&x, &aff.dx, 1.0).min(lp_step(&xl, &aff.dxl, 1.0));
            let ad = psd_step(&z, &aff.dz, 1.0).min(lp_step(&zl, &aff.dzl, 1.0));
            let mu_aff = (inner(&(&x + &aff.dx * ap), &(&z + &aff.dz * ad))
                + (&xl + &aff.dxl * ap).dot(&(&zl + &aff.dzl * ad)))
                / (n + p) as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
            let kmat = DMatrix::identity(n, n) * (sigma * mu) - &aff.dx * &aff.dz;
            let kvec = DVector::from_iterator(p, (0..p).map(|s| sigma * mu - aff.dxl[s] * aff.dzl[s]));
            let d = direction(&kmat, &kvec);
            let gamma = 0.95;
            let ap = psd_step(&x, &d.dx, 1.0 / gamma).min(lp_step(&xl, &d.dxl, 1.0 / gamma)) * gamma;
            let ad = psd_step(&z, &d.dz, 1.0 / gamma).min(lp_step(&zl, &d.dzl, 1.0 / gamma)) * gamma;
            x = sym(&(&x + &d.dx * ap));
            xl += &d.dxl * ap;
            y += &d.dy * ad;
            z = sym(&(&z + &d.dz * ad));
            zl += &d.dzl * ad;
        }
        let (pobj, dobj, gap, pinf, dinf) = last;
        SdpSolution {
            x,
            y,
            z,
            primal_objective: pobj,
            dual_objective: dobj,
            gap,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            status,
            iterations,
        }
    }
}

/// Relaxation of a homogeneous problem, in its own objective units.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub u: DMatrix<f64>,
    /// 0.5 tr(T0 U) + r0
    pub primal_objective: f64,
    /// Dual bound in the same units.
    pub dual_objective: f64,
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

/// Relaxed problem: min 0.5 tr(T0 U) + r0 over psd U with
/// 0.5 tr(T_k U) + r_k <= 0 and tr(H U) = 1.
pub fn solve_sdp(s: &HomogeneousSdp, settings: SdpSettings) -> RelaxedSolution {
    let mut a: Vec<DMatrix<f64>> = s.rows.iter().map(|(t, _)| t * 0.5).collect();
    let mut b: Vec<f64> = s.rows.iter().map(|(_, r)| -r).collect();
    let mut inequality = vec![true; a.len()];
    a.push(s.selector.clone());
    b.push(1.0);
    inequality.push(false);
    let problem = SdpProblem { c: &s.t0 * 0.5, a, b: DVector::from_vec(b), inequality };
    let sol = problem.solve(settings);
    RelaxedSolution {
        u: sol.x,
        primal_objective: sol.primal_objective + s.r0,
        dual_objective: sol.dual_objective + s.r0,
        gap: sol.gap,
        status: sol.status,
        iterations: sol.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_constraint_gives_smallest_eigenvalue() {
        let problem = SdpProblem {
            c: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]),
            a: vec![DMatrix::identity(2, 2)],
            b: DVector::from_vec(vec![1.0]),
            inequality: vec![false],
        };
        let sol = problem.solve(SdpSettings::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective - 1.0).abs() < 1e-6);
        assert!((sol.x[(0, 0)] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn nondiagonal_eigenvalue() {
        // eigenvalues of [[2, 1], [1, 2]] are 1 and 3
        let problem = SdpProblem {
            c: DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
            a: vec![DMatrix::identity(2, 2)],
            b: DVector::from_vec(vec![1.0]),
            inequality: vec![false],
        };
        let sol = problem.solve(SdpSettings::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective - 1.0).abs() < 1e-6);
        assert!((sol.dual_objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn inequality_rows_bind() {
        // min -X11 s.t. X11 <= 2, X22 <= 1, X psd: optimum -2
        let e = |i: usize| {
            let mut m = DMatrix::zeros(2, 2);
            m[(i, i)] = 1.0;
            m
        };
        let problem = SdpProblem {
            c: -e(0),
            a: vec![e(0), e(1)],
            b: DVector::from_vec(vec![2.0, 1.0]),
            inequality: vec![true, true],
        };
        let sol = problem.solve(SdpSettings::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective + 2.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_is_reported() {
        // X11 <= -1 with X psd has no solution
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 0)] = 1.0;
        let problem = SdpProblem {
            c: DMatrix::identity(2, 2),
            a: vec![a],
            b: DVector::from_vec(vec![-1.0]),
            inequality: vec![true],
        };
        let sol = problem.solve(SdpSettings::default());
        assert_ne!(sol.status, SdpStatus::Optimal);
    }
}
