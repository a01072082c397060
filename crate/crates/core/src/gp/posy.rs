//! Monomials and posynomials over positive variables.

/// `coef * prod v[k]^e` over the listed `(k, e)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub exps: Vec<(usize, f64)>,
}

impl Monomial {
    pub fn constant(coef: f64) -> Self {
        Monomial { coef, exps: Vec::new() }
    }

    pub fn var(k: usize) -> Self {
        Monomial { coef: 1.0, exps: vec![(k, 1.0)] }
    }

    pub fn new(coef: f64, exps: &[(usize, f64)]) -> Self {
        Monomial { coef, exps: Vec::new() }.mul(&Monomial { coef: 1.0, exps: exps.to_vec() })
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.exps.iter().fold(self.coef, |acc, &(k, e)| acc * v[k].powf(e))
    }

    /// Natural log of the value at `z = ln v`.
    pub fn log_eval(&self, z: &[f64]) -> f64 {
        self.exps.iter().fold(self.coef.ln(), |acc, &(k, e)| acc + e * z[k])
    }

    /// Product, with exponents of repeated variables merged.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = self.exps.clone();
        for &(k, e) in &other.exps {
            match exps.iter_mut().find(|p| p.0 == k) {
                Some(p) => p.1 += e,
                None => exps.push((k, e)),
            }
        }
        exps.retain(|p| p.1 != 0.0);
        exps.sort_by_key(|p| p.0);
        Monomial { coef: self.coef * other.coef, exps }
    }

    pub fn pow(&self, a: f64) -> Monomial {
        Monomial { coef: self.coef.powf(a), exps: self.exps.iter().map(|&(k, e)| (k, e * a)).collect() }
    }

    pub fn recip(&self) -> Monomial {
        self.pow(-1.0)
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        self.mul(&other.recip())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Posynomial {
    pub terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Posynomial { terms }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(v)).sum()
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Posynomial {
        Posynomial { terms: self.terms.iter().map(|t| t.mul(m)).collect() }
    }

    /// Best monomial lower bound touching the posynomial at `at`
    /// (weighted arithmetic-geometric mean inequality).
    pub fn condense(&self, at: &[f64]) -> Monomial {
        let vals: Vec<f64> = self.terms.iter().map(|t| t.eval(at)).collect();
        let total: f64 = vals.iter().sum();
        let mut out = Monomial::constant(1.0);
        for (t, &u) in self.terms.iter().zip(&vals) {
            let w = u / total;
            if w > 0.0 {
                out = out.mul(&t.pow(w)).mul(&Monomial::constant(w.powf(-w)));
            }
        }
        out
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Posynomial { terms: vec![m] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condensation_touches_and_underestimates() {
        // 1 + x + x y^2
        let p = Posynomial::new(vec![Monomial::constant(1.0), Monomial::var(0), Monomial::new(1.0, &[(0, 1.0), (1, 2.0)])]);
        let at = [2.0, 0.5];
        let m = p.condense(&at);
        assert!((m.eval(&at) - p.eval(&at)).abs() < 1e-12);
        for v in [[1.0, 1.0], [3.0, 0.1], [0.2, 4.0]] {
            assert!(m.eval(&v) <= p.eval(&v) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn merges_exponents() {
        let m = Monomial::var(0).mul(&Monomial::new(2.0, &[(0, -1.0), (1, 3.0)]));
        assert_eq!(m.exps, vec![(1, 3.0)]);
        assert_eq!(m.coef, 2.0);
        assert_eq!(m.log_eval(&[0.0, 1.0]), 2f64.ln() + 3.0);
    }
}
