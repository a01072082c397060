//! Barrier method for geometric programs in log variables.
//!
//! With `z = ln v` a posynomial becomes a log-sum-exp of affine functions, so
//! the program is smooth and convex; monomial equalities become linear.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::posy::{Monomial, Posynomial};
use crate::error::{Error, Result};

/// minimize objective s.t. inequalities <= 1, equalities == 1, over v > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GpProblem {
    pub num_vars: usize,
    pub objective: Posynomial,
    pub inequalities: Vec<Posynomial>,
    pub equalities: Vec<Monomial>,
    /// Starting point; need not be feasible.
    pub start: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpSolverSettings {
    /// Duality-gap target on the log objective.
    pub tol: f64,
    /// Newton steps over all barrier stages.
    pub max_newton: usize,
    pub barrier_growth: f64,
}

impl Default for GpSolverSettings {
    fn default() -> Self {
        GpSolverSettings { tol: 1e-9, max_newton: 5000, barrier_growth: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
}

/// `ln sum exp(a_k z + b_k)`, stored over the variables it touches.
struct Lse {
    /// Variables with a nonzero exponent in some term, ascending.
    support: Vec<usize>,
    /// Per term: `b_k` and (local index, exponent) pairs.
    terms: Vec<(f64, Vec<(usize, f64)>)>,
}

/// Value, gradient and Hessian of an [`Lse`] restricted to its support.
struct LocalModel {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl Lse {
    fn new(p: &Posynomial, n: usize) -> Result<Lse> {
        if p.terms.is_empty() {
            return Err(Error::Gp("empty posynomial".into()));
        }
        let mut raw = Vec::with_capacity(p.terms.len());
        for t in &p.terms {
            if !(t.coef > 0.0 && t.coef.is_finite()) {
                return Err(Error::Gp(format!("coefficient {} is not positive", t.coef)));
            }
            if let Some(&(k, _)) = t.exps.iter().find(|e| e.0 >= n) {
                return Err(Error::Gp(format!("variable {k} out of range")));
            }
            raw.push((t.coef.ln(), t.exps.clone()));
        }
        Ok(Lse::from_raw(raw))
    }

    fn from_raw(raw: Vec<(f64, Vec<(usize, f64)>)>) -> Lse {
        let mut support: Vec<usize> = raw.iter().flat_map(|t| t.1.iter().map(|e| e.0)).collect();
        support.sort_unstable();
        support.dedup();
        let terms = raw
            .into_iter()
            .map(|(b, exps)| {
                let mut local: Vec<(usize, f64)> = Vec::with_capacity(exps.len());
                for (k, e) in exps {
                    let l = support.binary_search(&k).expect("support holds every variable");
                    match local.iter_mut().find(|x| x.0 == l) {
                        Some(x) => x.1 += e,
                        None => local.push((l, e)),
                    }
                }
                (b, local)
            })
            .collect();
        Lse { support, terms }
    }

    /// Same function with one extra variable entering every term as `v^-1`.
    fn shifted(&self, var: usize) -> Lse {
        let raw = self
            .terms
            .iter()
            .map(|(b, local)| {
                let mut exps: Vec<(usize, f64)> = local.iter().map(|&(l, e)| (self.support[l], e)).collect();
                exps.push((var, -1.0));
                (*b, exps)
            })
            .collect();
        Lse::from_raw(raw)
    }

    fn exponents(&self, z: &DVector<f64>) -> Vec<f64> {
        self.terms.iter().map(|(b, local)| b + local.iter().map(|&(l, e)| e * z[self.support[l]]).sum::<f64>()).collect()
    }

    fn value(&self, z: &DVector<f64>) -> f64 {
        let y = self.exponents(z);
        let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + y.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    fn full(&self, z: &DVector<f64>) -> LocalModel {
        let y = self.exponents(z);
        let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        let q = self.support.len();
        let mut grad = vec![0.0; q];
        let mut hess = vec![0.0; q * q];
        for ((_, local), ek) in self.terms.iter().zip(&e) {
            let p = ek / s;
            for &(a, ea) in local {
                grad[a] += p * ea;
                for &(b, eb) in local {
                    hess[a * q + b] += p * ea * eb;
                }
            }
        }
        for a in 0..q {
            for b in 0..q {
                hess[a * q + b] -= grad[a] * grad[b];
            }
        }
        LocalModel { value: m + s.ln(), grad, hess }
    }

    /// `g += w_g grad`, `h += w_h hess + w_o grad grad^T`, scattered to global indices.
    fn scatter(&self, m: &LocalModel, g: &mut DVector<f64>, h: &mut DMatrix<f64>, w_g: f64, w_h: f64, w_o: f64) {
        let q = self.support.len();
        for (a, &i) in self.support.iter().enumerate() {
            g[i] += w_g * m.grad[a];
            for (b, &j) in self.support.iter().enumerate() {
                h[(i, j)] += w_h * m.hess[a * q + b] + w_o * m.grad[a] * m.grad[b];
            }
        }
    }
}

const MAX_LOG_STEP: f64 = 5.0;

struct Barrier<'a> {
    objective: &'a Lse,
    cons: &'a [Lse],
    eq: Option<&'a (DMatrix<f64>, DVector<f64>)>,
}

impl Barrier<'_> {
    /// `t f0 - sum ln(-f_i)`, infinite outside the strict domain.
    fn value(&self, z: &DVector<f64>, t: f64) -> f64 {
        let mut v = t * self.objective.value(z);
        for c in self.cons {
            let f = c.value(z);
            if !(f < 0.0) {
                return f64::INFINITY;
            }
            v -= (-f).ln();
        }
        v
    }

    /// Newton centering at barrier weight `t`. Returns steps taken, or stops
    /// early once the objective drops below `stop_below`.
    fn center(&self, z: &mut DVector<f64>, t: f64, budget: usize, stop_below: Option<f64>) -> Result<(usize, bool)> {
        for step in 0..budget {
            let n = z.len();
            let obj = self.objective.full(z);
            if stop_below.is_some_and(|s| obj.value < s) {
                return Ok((step, true));
            }
            let mut g = DVector::zeros(n);
            let mut h = DMatrix::zeros(n, n);
            self.objective.scatter(&obj, &mut g, &mut h, t, t, 0.0);
            for c in self.cons {
                let m = c.full(z);
                let s = -m.value;
                c.scatter(&m, &mut g, &mut h, 1.0 / s, 1.0 / s, 1.0 / (s * s));
            }
            let mut dz = newton_direction(&h, &g, self.eq, z)?;
            // cap moves at a factor e^MAX_LOG_STEP per variable
            let big = dz.amax();
            if big > MAX_LOG_STEP {
                dz *= MAX_LOG_STEP / big;
            }
            let slope = g.dot(&dz);
            if -slope / 2.0 <= 1e-10 {
                return Ok((step, false));
            }
            let base = self.value(z, t);
            let mut s = 1.0;
            loop {
                let trial = &*z + &dz * s;
                let v = self.value(&trial, t);
                if v <= base + 0.25 * s * slope {
                    *z = trial;
                    if v >= base {
                        // decrease below rounding: centered as far as arithmetic allows
                        return Ok((step + 1, false));
                    }
                    break;
                }
                s *= 0.5;
                if s < 1e-14 {
                    return Ok((step, false));
                }
            }
        }
        Err(Error::Gp(format!("Newton budget of {budget} steps exhausted")))
    }
}

fn newton_direction(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    eq: Option<&(DMatrix<f64>, DVector<f64>)>,
    z: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = z.len();
    let scale = h.diagonal().amax().max(1e-300);
    match eq {
        None => {
            // plain Cholesky first; a ridge only when the Hessian is numerically singular
            for ridge in [0.0, 1e-14, 1e-12, 1e-10, 1e-8] {
                let mut hr = h.clone();
                for k in 0..n {
                    hr[(k, k)] += ridge * scale;
                }
                if let Some(ch) = hr.cholesky() {
                    return Ok(-ch.solve(g));
                }
            }
            Err(Error::Gp("singular Newton system".into()))
        }
        Some((a, b)) => {
            let p = a.nrows();
            let mut k = DMatrix::zeros(n + p, n + p);
            k.view_mut((0, 0), (n, n)).copy_from(h);
            k.view_mut((n, 0), (p, n)).copy_from(a);
            k.view_mut((0, n), (n, p)).copy_from(&a.transpose());
            let mut rhs = DVector::zeros(n + p);
            rhs.rows_mut(0, n).copy_from(&-g);
            // also pull accumulated rounding drift back onto the equalities
            rhs.rows_mut(n, p).copy_from(&(b - a * z));
            let sol = k.lu().solve(&rhs).ok_or_else(|| Error::Gp("singular KKT system".into()))?;
            Ok(sol.rows(0, n).into_owned())
        }
    }
}

fn barrier_method(
    objective: &Lse,
    cons: &[Lse],
    eq: Option<&(DMatrix<f64>, DVector<f64>)>,
    z: &mut DVector<f64>,
    settings: &GpSolverSettings,
    stop_below: Option<f64>,
) -> Result<usize> {
    let b = Barrier { objective, cons, eq };
    let m = cons.len() as f64;
    let mut t = 1.0;
    let mut used = 0;
    loop {
        let (steps, stopped) = b.center(z, t, settings.max_newton.saturating_sub(used), stop_below)?;
        used += steps;
        if stopped || m == 0.0 || m / t < settings.tol {
            return Ok(used);
        }
        t *= settings.barrier_growth;
    }
}

/// Solves a GP from its start point, running a phase-I search first when the
/// start violates an inequality.
pub fn solve_gp_problem(p: &GpProblem, settings: &GpSolverSettings) -> Result<GpSolution> {
    let n = p.num_vars;
    if p.start.len() != n || p.start.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Gp("start point must be positive with one value per variable".into()));
    }
    let objective = Lse::new(&p.objective, n)?;
    let cons = p.inequalities.iter().map(|c| Lse::new(c, n)).collect::<Result<Vec<_>>>()?;
    let eq = if p.equalities.is_empty() {
        None
    } else {
        let mut a = DMatrix::zeros(p.equalities.len(), n);
        let mut b = DVector::zeros(p.equalities.len());
        for (r, e) in p.equalities.iter().enumerate() {
            b[r] = -e.coef.ln();
            for &(k, x) in &e.exps {
                a[(r, k)] += x;
            }
        }
        Some((a, b))
    };

    let mut z = DVector::from_iterator(n, p.start.iter().map(|v| v.ln()));
    if let Some((a, b)) = &eq {
        let r = a * &z - b;
        let aat = a * a.transpose();
        let w = aat.lu().solve(&r).ok_or_else(|| Error::Gp("dependent equality constraints".into()))?;
        z -= a.transpose() * w;
    }

    let mut steps = 0;
    let worst = cons.iter().map(|c| c.value(&z)).fold(f64::NEG_INFINITY, f64::max);
    if worst >= -1e-9 {
        // phase I: minimize s subject to f_i(z) <= s, with s as an extra variable
        let margin = 1e-6;
        let cons1: Vec<Lse> = cons.iter().map(|c| c.shifted(n)).collect();
        let obj1 = Lse::from_raw(vec![(0.0, vec![(n, 1.0)])]);
        let eq1 = eq.as_ref().map(|(a, b)| (a.clone().insert_column(n, 0.0), b.clone()));
        let mut z1 = z.clone().insert_row(n, worst + 1.0);
        let s1 = GpSolverSettings { tol: 1e-7, ..*settings };
        steps += barrier_method(&obj1, &cons1, eq1.as_ref(), &mut z1, &s1, Some(-margin))?;
        if z1[n] >= -margin {
            return Err(Error::Gp(format!("no strictly feasible point (phase I ended at {:.3e})", z1[n])));
        }
        z = z1.rows(0, n).into_owned();
    }
    let remaining = GpSolverSettings { max_newton: settings.max_newton.saturating_sub(steps), ..*settings };
    steps += barrier_method(&objective, &cons, eq.as_ref(), &mut z, &remaining, None)?;
    Ok(GpSolution { objective: objective.value(&z).exp(), values: z.iter().map(|v| v.exp()).collect(), newton_steps: steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(objective: Posynomial, inequalities: Vec<Posynomial>, equalities: Vec<Monomial>, start: Vec<f64>) -> GpProblem {
        GpProblem { num_vars: start.len(), objective, inequalities, equalities, start }
    }

    #[test]
    fn x_plus_inverse() {
        let p = problem(Posynomial::new(vec![Monomial::var(0), Monomial::new(1.0, &[(0, -1.0)])]), vec![], vec![], vec![7.0]);
        let s = solve_gp_problem(&p, &GpSolverSettings::default()).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-6);
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn equality_elimination() {
        // min x^2 y  s.t. x y^2 = 4, x >= 1 (1/x <= 1)  ->  y = 2/sqrt(x), obj = 2 x^1.5 -> x = 1
        let p = problem(
            Monomial::new(1.0, &[(0, 2.0), (1, 1.0)]).into(),
            vec![Monomial::new(1.0, &[(0, -1.0)]).into()],
            vec![Monomial::new(0.25, &[(0, 1.0), (1, 2.0)])],
            vec![3.0, 3.0],
        );
        let s = solve_gp_problem(&p, &GpSolverSettings::default()).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-6, "{s:?}");
        assert!((s.values[1] - 2.0).abs() < 1e-6);
        assert!((s.objective - 2.0).abs() < 1e-6);
    }

    #[test]
    fn phase_one_from_infeasible_start() {
        // min x + y  s.t. 2/(x y) <= 1, x/4 <= 1, start violates the first row
        let p = problem(
            Posynomial::new(vec![Monomial::var(0), Monomial::var(1)]),
            vec![Monomial::new(2.0, &[(0, -1.0), (1, -1.0)]).into(), Monomial::new(0.25, &[(0, 1.0)]).into()],
            vec![],
            vec![0.1, 0.1],
        );
        let s = solve_gp_problem(&p, &GpSolverSettings::default()).unwrap();
        let r = 2f64.sqrt();
        assert!((s.values[0] - r).abs() < 1e-5 && (s.values[1] - r).abs() < 1e-5, "{s:?}");
    }

    #[test]
    fn empty_interior_is_reported() {
        // x <= 1 and 2 <= x
        let p = problem(
            Monomial::var(0).into(),
            vec![Monomial::var(0).into(), Monomial::new(2.0, &[(0, -1.0)]).into()],
            vec![],
            vec![1.5],
        );
        assert!(matches!(solve_gp_problem(&p, &GpSolverSettings::default()), Err(Error::Gp(_))));
    }
}
