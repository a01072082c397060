//! Exact search for the allocation problem.
//!
//! Subcarriers are interchangeable, so a user's allocation is a bundle: a
//! count of subcarriers and a non-decreasing list of modulations on one ABS.
//! [`Bundles`] tabulates the cheapest bundle for every (count, units) pair.
//! In the shared-pool mode a knapsack over users gives the exact optimum,
//! which the per-subcarrier branch and bound uses as its completion bound.
//! In the per-ABS mode users are branched on directly.

use super::{assignment_cost, infeasible, BilpInstance, BilpSolution};
use crate::error::{Error, Infeasibility, Result};
use crate::model::{Assignment, Link, SubcarrierMode};

const INF: f64 = f64::INFINITY;
const NODE_LIMIT: u64 = 50_000_000;
const TIE_TOL: f64 = 1e-11;

struct Bundles {
    modulations: usize,
    cmax: usize,
    umax: usize,
    table: Vec<f64>,
}

impl Bundles {
    fn new(b: &BilpInstance, i: usize, j: usize, cmax: usize) -> Self {
        let m = b.modulations;
        let umax = b.units[i];
        let mut out = Bundles { modulations: m, cmax, umax, table: vec![INF; (m + 1) * (cmax + 1) * (umax + 1)] };
        for s in (0..=m).rev() {
            for c in 0..=cmax {
                for a in 0..=umax {
                    let v = if c == 0 {
                        if a == 0 {
                            0.0
                        } else {
                            INF
                        }
                    } else if s == m {
                        INF
                    } else {
                        out.step(b, i, j, s, c, a).0
                    };
                    let at = out.idx(s, c, a);
                    out.table[at] = v;
                }
            }
        }
        out
    }

    fn idx(&self, s: usize, c: usize, a: usize) -> usize {
        (s * (self.cmax + 1) + c) * (self.umax + 1) + a
    }

    /// Best value at (s, c, a) from the two moves, and whether using modulation `s` wins.
    fn step(&self, b: &BilpInstance, i: usize, j: usize, s: usize, c: usize, a: usize) -> (f64, bool) {
        let take = b.cost(i, j, s) + self.table[self.idx(s, c - 1, a.saturating_sub(BilpInstance::bits(s)))];
        let skip = self.table[self.idx(s + 1, c, a)];
        if take <= skip {
            (take, true)
        } else {
            (skip, false)
        }
    }

    /// Cheapest cost of `c` more subcarriers using modulations `s..` and
    /// carrying at least `a` more units.
    fn get(&self, s: usize, c: usize, a: usize) -> f64 {
        if c > self.cmax {
            return INF;
        }
        self.table[self.idx(s, c, a.min(self.umax))]
    }

    fn modulations_of(&self, b: &BilpInstance, i: usize, j: usize, mut c: usize, mut a: usize) -> Vec<usize> {
        let mut s = 0;
        let mut out = Vec::with_capacity(c);
        a = a.min(self.umax);
        while c > 0 && s < self.modulations {
            let (_, take) = self.step(b, i, j, s, c, a);
            if take {
                out.push(s);
                c -= 1;
                a = a.saturating_sub(BilpInstance::bits(s));
            } else {
                s += 1;
            }
        }
        out
    }
}

/// Fewest subcarriers that can carry `units` at the highest modulation.
fn min_count(b: &BilpInstance, units: usize) -> usize {
    let top = BilpInstance::bits(b.modulations - 1);
    units.div_ceil(top).max(1)
}

/// Reason a user has no admissible ABS at all.
fn diagnose_links(b: &BilpInstance, i: usize) -> Option<Infeasibility> {
    if (0..b.abs).any(|j| b.allowed(i, j)) {
        return None;
    }
    let los_only = (0..b.abs).any(|j| !b.assoc_blocked[i * b.abs + j]);
    Some(if los_only { Infeasibility::LineOfSight { user: i } } else { Infeasibility::Association { user: i } })
}

fn precheck(b: &BilpInstance, capacity: usize) -> Result<Vec<usize>> {
    if b.modulations == 0 || b.subcarriers == 0 || b.users == 0 || b.abs == 0 {
        return Err(Error::InvalidParameter("empty allocation instance".into()));
    }
    let mut counts = Vec::with_capacity(b.users);
    for i in 0..b.users {
        if let Some(why) = diagnose_links(b, i) {
            return Err(infeasible(why));
        }
        let c = min_count(b, b.units[i]);
        if c > b.subcarriers {
            return Err(infeasible(Infeasibility::Rate { user: i }));
        }
        counts.push(c);
    }
    let needed: usize = counts.iter().sum();
    if needed > capacity {
        return Err(infeasible(Infeasibility::Subcarriers { needed, available: capacity }));
    }
    Ok(counts)
}

pub(super) fn solve(b: &BilpInstance) -> Result<BilpSolution> {
    match b.mode {
        SubcarrierMode::Global => solve_global(b),
        SubcarrierMode::PerAbs => solve_per_abs(b),
    }
}

struct Global<'a> {
    b: &'a BilpInstance,
    bundles: Vec<Vec<Option<Bundles>>>,
    /// suffix[i][r]: cheapest way for users i.. to use exactly r subcarriers
    suffix: Vec<Vec<f64>>,
    target: f64,
    nodes: u64,
    path: Vec<(usize, usize, usize)>,
}

impl Global<'_> {
    fn rest(&self, i: usize, j: usize, s: usize, need: usize, r: usize) -> f64 {
        let bundle = self.bundles[i][j].as_ref().expect("allowed link has a table");
        let mut best = INF;
        for c in 0..=r.min(bundle.cmax) {
            let v = bundle.get(s, c, need) + self.suffix[i + 1][r - c];
            if v < best {
                best = v;
            }
        }
        best
    }

    fn dfs(&mut self, l: usize, i: usize, j: Option<usize>, k_last: usize, units: usize, cost: f64) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > NODE_LIMIT {
            return Err(Error::TooLarge { size: self.nodes as f64, limit: NODE_LIMIT as f64 });
        }
        let b = self.b;
        if l == b.subcarriers {
            return Ok(i + 1 == b.users && units >= b.units[i]);
        }
        let r = b.subcarriers - l - 1;
        if let Some(j) = j {
            for k in k_last..b.modulations {
                let c = b.cost(i, j, k);
                let got = units + BilpInstance::bits(k);
                let bound = cost + c + self.rest(i, j, k, b.units[i].saturating_sub(got), r);
                if bound <= self.target {
                    self.path.push((i, k, j));
                    if self.dfs(l + 1, i, Some(j), k, got, cost + c)? {
                        return Ok(true);
                    }
                    self.path.pop();
                }
            }
        }
        let next = match j {
            None => Some(0),
            Some(_) if units >= b.units[i] && i + 1 < b.users => Some(i + 1),
            Some(_) => None,
        };
        if let Some(n) = next {
            for k in 0..b.modulations {
                for j2 in 0..b.abs {
                    if !b.allowed(n, j2) {
                        continue;
                    }
                    let c = b.cost(n, j2, k);
                    let got = BilpInstance::bits(k);
                    let bound = cost + c + self.rest(n, j2, k, b.units[n].saturating_sub(got), r);
                    if bound <= self.target {
                        self.path.push((n, k, j2));
                        if self.dfs(l + 1, n, Some(j2), k, got, cost + c)? {
                            return Ok(true);
                        }
                        self.path.pop();
                    }
                }
            }
        }
        Ok(false)
    }
}

fn solve_global(b: &BilpInstance) -> Result<BilpSolution> {
    precheck(b, b.subcarriers)?;
    let cmax = b.subcarriers - (b.users - 1);
    let bundles: Vec<Vec<Option<Bundles>>> = (0..b.users)
        .map(|i| (0..b.abs).map(|j| b.allowed(i, j).then(|| Bundles::new(b, i, j, cmax))).collect())
        .collect();
    let l = b.subcarriers;
    let mut suffix = vec![vec![INF; l + 1]; b.users + 1];
    suffix[b.users][0] = 0.0;
    for i in (0..b.users).rev() {
        let single: Vec<f64> = (0..=cmax)
            .map(|c| {
                bundles[i]
                    .iter()
                    .flatten()
                    .map(|t| t.get(0, c, b.units[i]))
                    .fold(INF, f64::min)
            })
            .collect();
        for r in 1..=l {
            let mut best = INF;
            for c in 1..=r.min(cmax) {
                let v = single[c] + suffix[i + 1][r - c];
                if v < best {
                    best = v;
                }
            }
            suffix[i][r] = best;
        }
    }
    let optimum = suffix[0][l];
    if !optimum.is_finite() {
        return Err(infeasible(Infeasibility::Exhausted));
    }
    let mut g = Global {
        b,
        bundles,
        suffix,
        target: optimum + TIE_TOL * optimum.abs(),
        nodes: 0,
        path: Vec::with_capacity(l),
    };
    if !g.dfs(0, 0, None, 0, 0, 0.0)? {
        return Err(Error::Domain("exact completion bound admitted no leaf".into()));
    }
    let assignment = Assignment::new(
        g.path
            .iter()
            .enumerate()
            .map(|(sc, &(user, modulation, abs))| Link { user, modulation, abs, subcarrier: sc })
            .collect(),
    );
    let objective = assignment_cost(b, &assignment);
    Ok(BilpSolution { assignment, objective, nodes: g.nodes })
}

struct PerAbs {
    /// per user: (cost, abs, count), sorted
    options: Vec<Vec<(f64, usize, usize)>>,
    best_rest: Vec<f64>,
    count_rest: Vec<usize>,
    capacity: Vec<usize>,
    choice: Vec<usize>,
    incumbent: Option<(f64, Vec<usize>)>,
    nodes: u64,

}

impl PerAbs {
    fn dfs(&mut self, i: usize, cost: f64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > NODE_LIMIT {
            return Err(Error::TooLarge { size: self.nodes as f64, limit: NODE_LIMIT as f64 });
        }
        if i == self.options.len() {
            if self.incumbent.as_ref().is_none_or(|(v, _)| cost < *v) {
                self.incumbent = Some((cost, self.choice.clone()));
            }
            return Ok(());
        }
        if self.count_rest[i] > self.capacity.iter().sum::<usize>() {
            return Ok(());
        }
        for o in 0..self.options[i].len() {
            let (v, j, c) = self.options[i][o];
            if c > self.capacity[j] {
                continue;
            }
            let bound = cost + v + self.best_rest[i + 1];
            if let Some((inc, _)) = &self.incumbent {
                if bound >= *inc * (1.0 - TIE_TOL) {
                    // options are sorted by cost, later ones are no better
                    break;
                }
            }
            self.capacity[j] -= c;
            self.choice.push(o);
            self.dfs(i + 1, cost + v)?;
            self.choice.pop();
            self.capacity[j] += c;
        }
        Ok(())
    }
}

fn solve_per_abs(b: &BilpInstance) -> Result<BilpSolution> {
    precheck(b, b.subcarriers * b.abs)?;
    let l = b.subcarriers;
    let mut tables: Vec<Vec<Option<Bundles>>> = Vec::with_capacity(b.users);
    let mut options = Vec::with_capacity(b.users);
    for i in 0..b.users {
        let row: Vec<Option<Bundles>> =
            (0..b.abs).map(|j| b.allowed(i, j).then(|| Bundles::new(b, i, j, l))).collect();
        let mut opts = Vec::new();
        for (j, t) in row.iter().enumerate() {
            let Some(t) = t else { continue };
            let mut last = INF;
            for c in 1..=l {
                let v = t.get(0, c, b.units[i]);
                // more subcarriers only help when strictly cheaper
                if v < last {
                    opts.push((v, j, c));
                    last = v;
                }
            }
        }
        if opts.is_empty() {
            return Err(infeasible(Infeasibility::Rate { user: i }));
        }
        opts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        options.push(opts);
        tables.push(row);
    }
    let mut best_rest = vec![0.0; b.users + 1];
    let mut count_rest = vec![0; b.users + 1];
    for i in (0..b.users).rev() {
        best_rest[i] = best_rest[i + 1] + options[i][0].0;
        count_rest[i] = count_rest[i + 1] + options[i].iter().map(|o| o.2).min().unwrap_or(0);
    }
    let mut s = PerAbs {
        options,
        best_rest,
        count_rest,
        capacity: vec![l; b.abs],
        choice: Vec::with_capacity(b.users),
        incumbent: None,
        nodes: 0,

    };
    s.dfs(0, 0.0)?;
    let Some((_, choice)) = s.incumbent.take() else {
        return Err(infeasible(Infeasibility::Exhausted));
    };
    let mut next_sc = vec![0usize; b.abs];
    let mut entries = Vec::new();
    for (i, &o) in choice.iter().enumerate() {
        let (_, j, c) = s.options[i][o];
        let table = tables[i][j].as_ref().expect("option comes from an allowed link");
        for k in table.modulations_of(b, i, j, c, b.units[i]) {
            entries.push(Link { user: i, modulation: k, abs: j, subcarrier: next_sc[j] });
            next_sc[j] += 1;
        }
    }
    let assignment = Assignment::new(entries);
    let objective = assignment_cost(b, &assignment);
    Ok(BilpSolution { assignment, objective, nodes: s.nodes })
}
