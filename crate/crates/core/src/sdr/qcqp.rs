//! Quadratic forms of the LoS placement subproblem and their homogenization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Assignment, ModulationTable, Scenario};

/// What a constraint row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Served user stays inside the ABS coverage cone.
    Coverage { user: usize, abs: usize },
    AltitudeFloor { abs: usize },
    AltitudeCeiling { abs: usize },
}

/// `0.5 v'Wv + q'v + r <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRow {
    pub w: DMatrix<f64>,
    pub q: DVector<f64>,
    pub r: f64,
    pub kind: RowKind,
}

impl QuadRow {
    pub fn eval(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.w * v)) + self.q.dot(v) + self.r
    }
}

/// Placement subproblem with `v = (x_0, y_0, h_0, x_1, ...)` stacked per ABS.
///
/// Minimizes `0.5 v'W0 v + q0'v + r0` subject to one coverage row per served
/// (user, abs) pair plus the altitude box.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpProblem {
    pub w0: DMatrix<f64>,
    pub q0: DVector<f64>,
    pub r0: f64,
    pub rows: Vec<QuadRow>,
    /// 1 - 1/sin^2 of the minimum elevation angle; negative.
    pub kappa: f64,
    /// ABS index of each 3-block of `v`.
    pub blocks: Vec<usize>,
    /// Share of `r0` contributed by each block.
    pub block_constants: Vec<f64>,
}

impl QcqpProblem {
    pub fn dim(&self) -> usize {
        self.w0.nrows()
    }

    pub fn objective(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.w0 * v)) + self.q0.dot(v) + self.r0
    }

    /// Per-ABS weight (sum of link weights), one per block.
    pub fn block_weights(&self) -> Vec<f64> {
        (0..self.blocks.len()).map(|b| 0.5 * self.w0[(3 * b, 3 * b)]).collect()
    }

    /// Keeps only the listed blocks (indices into `blocks`); rows touching
    /// other blocks are dropped.
    pub fn restrict(&self, keep: &[usize]) -> QcqpProblem {
        let idx: Vec<usize> = keep.iter().flat_map(|&b| [3 * b, 3 * b + 1, 3 * b + 2]).collect();
        let n = idx.len();
        let pick_m = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |a, b| m[(idx[a], idx[b])]);
        let pick_v = |v: &DVector<f64>| DVector::from_fn(n, |a, _| v[idx[a]]);
        let kept: Vec<usize> = keep.iter().map(|&b| self.blocks[b]).collect();
        let rows = self
            .rows
            .iter()
            .filter(|row| {
                let abs = match row.kind {
                    RowKind::Coverage { abs, .. } | RowKind::AltitudeFloor { abs } | RowKind::AltitudeCeiling { abs } => abs,
                };
                kept.contains(&abs)
            })
            .map(|row| QuadRow { w: pick_m(&row.w), q: pick_v(&row.q), r: row.r, kind: row.kind })
            .collect();
        let block_constants: Vec<f64> = keep.iter().map(|&b| self.block_constants[b]).collect();
        QcqpProblem {
            w0: pick_m(&self.w0),
            q0: pick_v(&self.q0),
            r0: block_constants.iter().sum(),
            rows,
            kappa: self.kappa,
            blocks: kept,
            block_constants,
        }
    }

    /// Change of units `v = length * v'`, objective divided by `objective`,
    /// constraint rows divided by `length^2`.
    pub fn rescaled(&self, length: f64, objective: f64) -> QcqpProblem {
        let l2 = length * length;
        QcqpProblem {
            w0: &self.w0 * (l2 / objective),
            q0: &self.q0 * (length / objective),
            r0: self.r0 / objective,
            rows: self
                .rows
                .iter()
                .map(|row| QuadRow { w: row.w.clone(), q: &row.q / length, r: row.r / l2, kind: row.kind })
                .collect(),
            kappa: self.kappa,
            blocks: self.blocks.clone(),
            block_constants: self.block_constants.iter().map(|c| c / objective).collect(),
        }
    }
}

/// Link weight of every (user, abs) pair: sum of `A_k * r_k` over the pair's entries.
pub fn link_weights(scenario: &Scenario, assignment: &Assignment, table: &ModulationTable) -> Vec<f64> {
    assignment.pair_weights(scenario.num_users(), scenario.num_abs, |k| table.los[k] * scenario.link_rate(k))
}

/// Builds the LoS placement subproblem for a fixed allocation.
pub fn assemble_qcqp(scenario: &Scenario, assignment: &Assignment, table: &ModulationTable) -> Result<QcqpProblem> {
    if assignment.is_empty() {
        return Err(Error::EmptyCoverage);
    }
    let (ni, nj) = (scenario.num_users(), scenario.num_abs);
    let n = 3 * nj;
    let weight = link_weights(scenario, assignment, table);
    let s = scenario.channel.coverage_sine();
    let kappa = 1.0 - 1.0 / (s * s);
    let mut w0 = DMatrix::zeros(n, n);
    let mut q0 = DVector::zeros(n);
    if scenario.channel.path_loss_exponent != 2.0 {
        return Err(Error::InvalidParameter("placement subproblems need a path-loss exponent of 2".into()));
    }
    let mut block_constants = vec![0.0; nj];
    let mut rows = Vec::new();
    for j in 0..nj {
        let b = 3 * j;
        let mut omega = 0.0;
        for i in 0..ni {
            let t = weight[i * nj + j];
            if t == 0.0 {
                continue;
            }
            let u = &scenario.users[i];
            omega += t;
            q0[b] -= 2.0 * t * u.x;
            q0[b + 1] -= 2.0 * t * u.y;
            block_constants[j] += t * (u.x * u.x + u.y * u.y);

            let mut w = DMatrix::zeros(n, n);
            w[(b, b)] = 2.0;
            w[(b + 1, b + 1)] = 2.0;
            w[(b + 2, b + 2)] = 2.0 * kappa;
            let mut q = DVector::zeros(n);
            q[b] = -2.0 * u.x;
            q[b + 1] = -2.0 * u.y;
            rows.push(QuadRow { w, q, r: u.x * u.x + u.y * u.y, kind: RowKind::Coverage { user: i, abs: j } });
        }
        for d in 0..3 {
            w0[(b + d, b + d)] = 2.0 * omega;
        }
        let mut floor = DVector::zeros(n);
        floor[b + 2] = -1.0;
        rows.push(QuadRow { w: DMatrix::zeros(n, n), q: floor, r: scenario.h_min, kind: RowKind::AltitudeFloor { abs: j } });
        let mut ceil = DVector::zeros(n);
        ceil[b + 2] = 1.0;
        rows.push(QuadRow { w: DMatrix::zeros(n, n), q: ceil, r: -scenario.h_max, kind: RowKind::AltitudeCeiling { abs: j } });
    }
    let r0 = block_constants.iter().sum();
    Ok(QcqpProblem { w0, q0, r0, rows, kappa, blocks: (0..nj).collect(), block_constants })
}

/// Lifted form over `u = (v, a)`: `0.5 u'Tu + r` equals the original form at a = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSdp {
    pub t0: DMatrix<f64>,
    pub r0: f64,
    pub rows: Vec<(DMatrix<f64>, f64)>,
    /// Selects the homogenizing slot: tr(H uu') = a^2.
    pub selector: DMatrix<f64>,
}

impl HomogeneousSdp {
    pub fn dim(&self) -> usize {
        self.t0.nrows()
    }
}

fn lift(w: &DMatrix<f64>, q: &DVector<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let mut t = DMatrix::zeros(n + 1, n + 1);
    t.view_mut((0, 0), (n, n)).copy_from(w);
    for a in 0..n {
        t[(a, n)] = q[a];
        t[(n, a)] = q[a];
    }
    t
}

pub fn homogenize(q: &QcqpProblem) -> HomogeneousSdp {
    let n = q.dim();
    let mut selector = DMatrix::zeros(n + 1, n + 1);
    selector[(n, n)] = 1.0;
    HomogeneousSdp {
        t0: lift(&q.w0, &q.q0),
        r0: q.r0,
        rows: q.rows.iter().map(|row| (lift(&row.w, &row.q), row.r)).collect(),
        selector,
    }
}
