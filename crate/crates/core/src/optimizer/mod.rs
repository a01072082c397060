//! Alternating optimization of placement and allocation, the fixed-altitude
//! grid baseline, and iteration-count estimates.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bilp::{build_costs, greedy_initial_assignment, grid_placement, initial_placement, nearest_order, solve_bilp};
use crate::error::{Error, Result};
use crate::gp::{solve_generalized_placement, GeneralizedConfig};
use crate::model::{
    los_feasible, modulation_constants, total_power_with, Assignment, ModulationTable, Placement, Scenario, Scheme,
};
use crate::sdr::{solve_los_placement, SdrConfig};

/// Altitude of the fixed baseline deployment, m.
pub const BASELINE_ALTITUDE: f64 = 550.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlternatingConfig {
    pub scheme: Scheme,
    /// Outer iteration cap.
    pub max_iters: usize,
    /// Stop once placement and allocation objectives differ by less than this, W.
    pub sigma: f64,
    pub sdr: SdrConfig,
    pub generalized: GeneralizedConfig,
    /// Seeds the initial allocation and every randomized inner solver.
    pub seed: u64,
    /// Store wall-clock times in the trace. Off by default so traces compare equal.
    pub record_wall_time: bool,
}

impl Default for AlternatingConfig {
    fn default() -> Self {
        AlternatingConfig {
            scheme: Scheme::Los,
            max_iters: 30,
            sigma: 1e-9,
            sdr: SdrConfig::default(),
            generalized: GeneralizedConfig::default(),
            seed: 0,
            record_wall_time: false,
        }
    }
}

impl AlternatingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    IterationLimit,
}

/// One outer iteration. Iteration 0 is the initial placement step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective of the current pair after the allocation step, W.
    pub after_allocation: f64,
    /// Objective of the current pair after the placement step, W.
    pub after_placement: f64,
    /// Whether the placement candidate replaced the previous placement.
    pub placement_accepted: bool,
    pub placement: Placement,
    pub wall_ms: Option<f64>,
    /// Why a placement candidate was dropped, if it failed outright.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
}

impl RunTrace {
    /// Accepted objective after every step, in order.
    pub fn accepted_objectives(&self) -> Vec<f64> {
        self.records.iter().flat_map(|r| [r.after_allocation, r.after_placement]).collect()
    }

    /// Outer iterations after the initial placement step.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub placement: Placement,
    pub assignment: Assignment,
    /// W
    pub objective: f64,
    pub trace: RunTrace,
}

fn placement_step(
    scenario: &Scenario,
    assignment: &Assignment,
    table: &ModulationTable,
    previous: &Placement,
    cfg: &AlternatingConfig,
    iteration: usize,
) -> Result<Placement> {
    let seed = cfg.seed.wrapping_add(iteration as u64);
    match cfg.scheme {
        Scheme::Los => {
            let sdr = SdrConfig { seed, ..cfg.sdr };
            Ok(solve_los_placement(scenario, assignment, table, previous, &sdr)?.placement)
        }
        Scheme::Generalized => {
            let gen = GeneralizedConfig { seed, ..cfg.generalized };
            Ok(solve_generalized_placement(scenario, assignment, table, previous, &gen)?.placement)
        }
    }
}

fn los_admissible(scenario: &Scenario, placement: &Placement, assignment: &Assignment) -> bool {
    assignment
        .entries
        .iter()
        .all(|l| los_feasible(&scenario.users[l.user], &placement.positions[l.abs], &scenario.channel))
}

/// Alternates exact allocation and approximate placement until the two
/// steps agree to within `sigma` or the iteration cap is hit.
///
/// A placement candidate is kept only when it strictly lowers the true
/// objective, so the accepted sequence never increases. The first placement
/// step is exempt under the LoS scheme when the greedy start is not yet
/// inside every coverage cone.
pub fn run_alternating(scenario: &Scenario, cfg: &AlternatingConfig) -> Result<RunOutcome> {
    scenario.validate()?;
    cfg.validate()?;
    let table = modulation_constants(&scenario.channel, scenario.modulation_count)?;
    let objective = |p: &Placement, a: &Assignment| total_power_with(scenario, &table, p, a, cfg.scheme);
    let clock = Instant::now();
    let stamp = || cfg.record_wall_time.then(|| clock.elapsed().as_secs_f64() * 1e3);

    let mut assignment = greedy_initial_assignment(scenario, cfg.seed)?;
    let start = initial_placement(scenario);
    let start_value = objective(&start, &assignment);
    let admissible = cfg.scheme == Scheme::Generalized || los_admissible(scenario, &start, &assignment);

    // the first placement has nothing feasible to fall back on, so its errors propagate
    let candidate = match placement_step(scenario, &assignment, &table, &start, cfg, 0) {
        Ok(p) => p,
        Err(e) if !admissible => return Err(e),
        Err(_) => start.clone(),
    };
    let candidate_value = objective(&candidate, &assignment);
    let take = !admissible || candidate_value < start_value;
    let (mut placement, mut value) = if take { (candidate, candidate_value) } else { (start, start_value) };
    let mut records = vec![IterationRecord {
        iteration: 0,
        after_allocation: value,
        after_placement: value,
        placement_accepted: take,
        placement: placement.clone(),
        wall_ms: stamp(),
        note: None,
    }];

    let mut status = RunStatus::IterationLimit;
    for t in 1..=cfg.max_iters {
        let solved = solve_bilp(&build_costs(scenario, &placement, &table, cfg.scheme))?;
        // the current allocation is feasible here, so the exact optimum cannot be worse
        let v = objective(&placement, &solved.assignment);
        if v < value {
            assignment = solved.assignment;
            value = v;
        }
        let after_allocation = value;

        let mut note = None;
        let mut accepted = false;
        match placement_step(scenario, &assignment, &table, &placement, cfg, t) {
            Ok(candidate) => {
                let v = objective(&candidate, &assignment);
                if v < value {
                    placement = candidate;
                    value = v;
                    accepted = true;
                }
            }
            Err(e) => note = Some(e.to_string()),
        }
        records.push(IterationRecord {
            iteration: t,
            after_allocation,
            after_placement: value,
            placement_accepted: accepted,
            placement: placement.clone(),
            wall_ms: stamp(),
            note,
        });
        if (after_allocation - value).abs() < cfg.sigma {
            status = RunStatus::Converged;
            break;
        }
    }
    Ok(RunOutcome { placement, assignment, objective: value, trace: RunTrace { records, status } })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub placement: Placement,
    pub assignment: Assignment,
    /// W
    pub objective: f64,
}

/// ABSs on a uniform grid at 550 m, every user tied to its nearest ABS, and
/// only subcarriers and modulations optimized.
pub fn fixed_abs_baseline(scenario: &Scenario, scheme: Scheme) -> Result<BaselineOutcome> {
    scenario.validate()?;
    let table = modulation_constants(&scenario.channel, scenario.modulation_count)?;
    let placement = grid_placement(&scenario.area, scenario.num_abs, BASELINE_ALTITUDE);
    let nearest: Vec<usize> =
        (0..scenario.num_users()).map(|i| nearest_order(scenario, &placement, i)[0]).collect();
    let mut instance = build_costs(scenario, &placement, &table, scheme);
    instance.restrict_association(&nearest)?;
    let solved = solve_bilp(&instance)?;
    let objective = total_power_with(scenario, &table, &placement, &solved.assignment, scheme);
    Ok(BaselineOutcome { placement, assignment: solved.assignment, objective })
}

/// Interior-point accuracy parameters the estimates are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IpmParams {
    /// Target accuracy.
    pub accuracy: f64,
    /// Initial barrier parameter.
    pub initial: f64,
    /// Barrier growth factor per outer step.
    pub growth: f64,
}

impl Default for IpmParams {
    fn default() -> Self {
        IpmParams { accuracy: 1e-3, initial: 1e-3, growth: 10.0 }
    }
}

/// Iteration-count surrogates of each subproblem. Dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub los_placement: f64,
    pub los_allocation: f64,
    pub generalized_allocation: f64,
    pub generalized_placement: f64,
}

/// Evaluates the per-subproblem complexity expressions. Logarithms are natural.
pub fn complexity_estimate(users: usize, abs: usize, modulations: usize, subcarriers: usize, ipm: &IpmParams) -> ComplexityReport {
    let (i, j, m, l) = (users as f64, abs as f64, modulations as f64, subcarriers as f64);
    let scaled = ipm.initial * ipm.accuracy;
    let sdp_dim = 3.0 * j + 1.0;
    let los_placement = sdp_dim.max(i + 1.0).powi(3) * sdp_dim.sqrt() * (1.0 / ipm.accuracy).ln();
    let allocation = ((4.0 * i * m * j * l + i + l) / scaled).ln() / ipm.growth.ln();
    let generalized_placement = (5.0 * i * j / scaled).ln() / ipm.growth.ln();
    ComplexityReport {
        los_placement,
        los_allocation: allocation,
        generalized_allocation: allocation,
        generalized_placement,
    }
}
