//! Joint subcarrier / modulation allocation and user association for a fixed
//! placement, solved exactly.

mod greedy;
mod search;

pub use greedy::{balanced_grid_placement, greedy_initial_assignment, grid_placement, initial_placement};
pub(crate) use greedy::nearest_order;

use crate::error::{Error, Infeasibility, Result};
use crate::model::{
    los_feasible, modulation_constants, transmit_power, Assignment, ModulationTable, Placement,
    Scenario, Scheme, SubcarrierMode,
};

/// Cost data of one allocation problem. Costs do not depend on the subcarrier,
/// so they are stored once per (user, abs, modulation).
#[derive(Debug, Clone, PartialEq)]
pub struct BilpInstance {
    pub users: usize,
    pub abs: usize,
    pub modulations: usize,
    pub subcarriers: usize,
    pub mode: SubcarrierMode,
    /// Rate units (multiples of the symbol rate) each user must reach.
    pub units: Vec<usize>,
    /// Watts, indexed `(user * abs + j) * modulations + k`.
    pub cost: Vec<f64>,
    /// Link excluded by the LoS coverage constraint.
    pub los_blocked: Vec<bool>,
    /// Link excluded by a fixed association.
    pub assoc_blocked: Vec<bool>,
}

impl BilpInstance {
    pub fn cost(&self, i: usize, j: usize, k: usize) -> f64 {
        self.cost[(i * self.abs + j) * self.modulations + k]
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        let p = i * self.abs + j;
        !self.los_blocked[p] && !self.assoc_blocked[p]
    }

    /// Units carried by one subcarrier at modulation `k`.
    pub fn bits(k: usize) -> usize {
        k + 2
    }

    /// Pins every user to one ABS, as the fixed-placement baseline does.
    pub fn restrict_association(&mut self, assoc: &[usize]) -> Result<()> {
        if assoc.len() != self.users {
            return Err(Error::InvalidParameter(format!(
                "association covers {} users, instance has {}",
                assoc.len(),
                self.users
            )));
        }
        for (i, &target) in assoc.iter().enumerate() {
            if target >= self.abs {
                return Err(Error::InvalidParameter(format!("user {i} pinned to missing ABS {target}")));
            }
            for j in 0..self.abs {
                self.assoc_blocked[i * self.abs + j] = j != target;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilpSolution {
    pub assignment: Assignment,
    /// W
    pub objective: f64,
    /// Branch-and-bound nodes expanded.
    pub nodes: u64,
}

/// Builds the cost tensor for a fixed placement. Under the LoS scheme, links
/// that miss the coverage cone are excluded.
pub fn build_costs(
    scenario: &Scenario,
    placement: &Placement,
    table: &ModulationTable,
    scheme: Scheme,
) -> BilpInstance {
    let (ni, nj, nm) = (scenario.num_users(), scenario.num_abs, scenario.modulation_count);
    let mut cost = Vec::with_capacity(ni * nj * nm);
    let mut los_blocked = Vec::with_capacity(ni * nj);
    for u in &scenario.users {
        for p in &placement.positions {
            los_blocked.push(scheme == Scheme::Los && !los_feasible(u, p, &scenario.channel));
            for k in 0..nm {
                cost.push(transmit_power(u, k, p, scenario.symbol_rate, &scenario.channel, table, scheme));
            }
        }
    }
    BilpInstance {
        users: ni,
        abs: nj,
        modulations: nm,
        subcarriers: scenario.subcarriers,
        mode: scenario.mode,
        units: (0..ni).map(|i| scenario.rate_units(i)).collect(),
        cost,
        los_blocked,
        assoc_blocked: vec![false; ni * nj],
    }
}

/// Exact minimum-power allocation. Infeasibility is reported with the
/// constraint family responsible.
pub fn solve_bilp(b: &BilpInstance) -> Result<BilpSolution> {
    search::solve(b)
}

/// Convenience wrapper: costs from the scenario, then [`solve_bilp`].
pub fn solve_for_placement(scenario: &Scenario, placement: &Placement, scheme: Scheme) -> Result<BilpSolution> {
    let table = modulation_constants(&scenario.channel, scenario.modulation_count)?;
    solve_bilp(&build_costs(scenario, placement, &table, scheme))
}

/// Sum of entry costs in canonical entry order.
pub(crate) fn assignment_cost(b: &BilpInstance, a: &Assignment) -> f64 {
    a.entries.iter().map(|l| b.cost(l.user, l.abs, l.modulation)).sum()
}

pub(crate) fn infeasible(kind: Infeasibility) -> Error {
    Error::Infeasible(kind)
}
