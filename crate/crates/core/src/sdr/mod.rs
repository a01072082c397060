//! LoS-scheme placement: QCQP assembly, semidefinite relaxation, Gaussian
//! randomization and feasibility repair.
//!
//! With the allocation fixed the objective and every constraint separate over
//! ABSs, so each served ABS gets its own 4x4 relaxation. Idle ABSs are left
//! where they were.

mod qcqp;
mod randomize;
mod repair;
mod sdp;

pub use qcqp::{assemble_qcqp, homogenize, link_weights, HomogeneousSdp, QcqpProblem, QuadRow, RowKind};
pub use randomize::{dehomogenize, gaussian_randomization, gaussian_samples, rank1_shortcut};
pub use repair::{coverage_altitude, repair_placement, repair_position};
pub use sdp::{solve_sdp, RelaxedSolution, SdpProblem, SdpSettings, SdpSolution, SdpStatus};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{total_power_with, AbsPosition, Assignment, ModulationTable, Placement, Scenario, Scheme};
use repair::served_users;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdrConfig {
    /// Gaussian samples per relaxation.
    pub samples: usize,
    pub seed: u64,
    /// lambda_2 / lambda_1 below which the relaxation counts as rank one.
    pub rank_tol: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdrConfig {
    fn default() -> Self {
        SdrConfig { samples: 100, seed: 0, rank_tol: 1e-6, tol: 1e-9, max_iter: 200 }
    }
}

/// Which candidate won for one ABS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSource {
    RankOne,
    FirstMoment,
    Randomized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub abs: usize,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Dual bound for this ABS, W.
    pub lower_bound: f64,
    pub source: CandidateSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrOutcome {
    pub placement: Placement,
    /// True LoS-scheme power of the repaired placement, W.
    pub objective: f64,
    /// Sum of the relaxation dual bounds, W. Never above `objective`.
    pub lower_bound: f64,
    pub blocks: Vec<BlockReport>,
}

/// Per-ABS power for a position, given (x, y, weight) of its served users.
fn block_power(users: &[(f64, f64, f64)], p: &AbsPosition) -> f64 {
    users
        .iter()
        .map(|&(x, y, w)| w * ((p.x - x).powi(2) + (p.y - y).powi(2) + p.h * p.h))
        .sum()
}

/// Solves the LoS placement subproblem for a fixed allocation.
///
/// `previous` supplies the positions of ABSs that serve nobody.
pub fn solve_los_placement(
    scenario: &Scenario,
    assignment: &Assignment,
    table: &ModulationTable,
    previous: &Placement,
    cfg: &SdrConfig,
) -> Result<SdrOutcome> {
    let qcqp = assemble_qcqp(scenario, assignment, table)?;
    let served = served_users(scenario, assignment);
    let weights = link_weights(scenario, assignment, table);
    let nj = scenario.num_abs;
    let a = &scenario.area;
    let length = a.width().max(a.height()).max(scenario.h_max);
    let settings = SdpSettings { tol: cfg.tol, max_iter: cfg.max_iter };

    let mut positions = previous.positions.clone();
    for (j, p) in positions.iter_mut().enumerate() {
        if served[j].is_empty() {
            let (x, y) = a.clamp(p.x, p.y);
            *p = AbsPosition { x, y, h: p.h.clamp(scenario.h_min, scenario.h_max) };
        }
    }
    let mut blocks = Vec::new();
    let mut lower_bound = 0.0;
    for j in 0..nj {
        if served[j].is_empty() {
            continue;
        }
        let users: Vec<(f64, f64, f64)> = served[j]
            .iter()
            .map(|&i| (scenario.users[i].x, scenario.users[i].y, weights[i * nj + j]))
            .collect();
        let omega: f64 = users.iter().map(|u| u.2).sum();
        let scale = omega * length * length;
        let sub = qcqp.restrict(&[j]).rescaled(length, scale);
        let relaxed = solve_sdp(&homogenize(&sub), settings);
        if relaxed.status != SdpStatus::Optimal {
            return Err(Error::Sdp(relaxed.status));
        }

        // a candidate in relaxation units -> best repaired position and its power
        let evaluate = |v: &DVector<f64>| -> Option<(AbsPosition, f64)> {
            let raw = AbsPosition { x: v[0] * length, y: v[1] * length, h: v[2] * length };
            let floor = AbsPosition { h: scenario.h_min, ..raw };
            [raw, floor]
                .into_iter()
                .filter_map(|c| repair_position(c, j, &served[j], scenario).ok())
                .map(|p| (p, block_power(&users, &p)))
                .min_by(|x, y| x.1.total_cmp(&y.1))
        };

        let mut best: Option<(AbsPosition, f64, CandidateSource)> = None;
        let mut offer = |cand: Option<(AbsPosition, f64)>, src: CandidateSource| {
            if let Some((p, v)) = cand {
                if best.as_ref().is_none_or(|b| v < b.1) {
                    best = Some((p, v, src));
                }
            }
        };
        if let Some(v) = rank1_shortcut(&relaxed.u, cfg.rank_tol) {
            offer(evaluate(&v), CandidateSource::RankOne);
        }
        if let Some(v) = dehomogenize(&relaxed.u.column(3).into_owned()) {
            offer(evaluate(&v), CandidateSource::FirstMoment);
        }
        let seed = cfg.seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        match gaussian_randomization(&relaxed.u, cfg.samples.max(1), seed, |v| evaluate(v).map(|c| c.1)) {
            Ok((v, _)) => offer(evaluate(&v), CandidateSource::Randomized),
            Err(Error::RandomizationFailed { .. }) => {}
            Err(e) => return Err(e),
        }
        let Some((p, _, source)) = best else {
            return Err(Error::RandomizationFailed { samples: cfg.samples });
        };
        positions[j] = p;
        let bound = relaxed.dual_objective * scale;
        lower_bound += bound;
        blocks.push(BlockReport { abs: j, status: relaxed.status, iterations: relaxed.iterations, lower_bound: bound, source });
    }
    let placement = Placement { positions };
    let objective = total_power_with(scenario, table, &placement, assignment, Scheme::Los);
    Ok(SdrOutcome { placement, objective, lower_bound, blocks })
}
