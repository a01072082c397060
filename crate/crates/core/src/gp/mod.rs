//! Generalized-scheme placement: a condensed geometric program plus a direct
//! multistart minimization of the exact objective.

mod fit;
mod nlp;
mod posy;
mod program;
mod solver;

pub use fit::{fit_arcsin_monomial, fit_monomial, MonomialFit, FIT_POINTS, MAX_FIT_RESIDUAL};
pub use nlp::{block_objective, generalized_objective, nlp_cross_check};
pub use posy::{Monomial, Posynomial};
pub use program::{assemble_gp, centroid_anchor, solve_gp, DisplacementForm, GpBlock, GpConfig, GpPlacement, GpProgram, LinkFits, VarRole};
pub use solver::{solve_gp_problem, GpProblem, GpSolution, GpSolverSettings};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{total_power_with, Assignment, ModulationTable, Placement, Scenario, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneralizedConfig {
    pub gp: GpConfig,
    /// Random starts of the direct minimization per ABS.
    pub multistart: usize,
    pub seed: u64,
}

impl Default for GeneralizedConfig {
    fn default() -> Self {
        GeneralizedConfig { gp: GpConfig::default(), multistart: 8, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementSource {
    GeometricProgram,
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedOutcome {
    pub placement: Placement,
    /// Exact generalized power of `placement`, W.
    pub objective: f64,
    pub source: PlacementSource,
    /// Exact power at the GP solution; `None` when the program failed.
    pub gp_objective: Option<f64>,
    pub direct_objective: f64,
    pub condensation_ratio: Option<f64>,
}

/// Solves the generalized placement subproblem for a fixed allocation.
///
/// The GP is condensed twice, at `previous` and at the weighted centroid of
/// each ABS's users; the direct minimizer is warm-started at `previous`.
/// Whichever lands on the lowest exact power wins, the GP on ties.
pub fn solve_generalized_placement(
    scenario: &Scenario,
    assignment: &Assignment,
    table: &ModulationTable,
    previous: &Placement,
    cfg: &GeneralizedConfig,
) -> Result<GeneralizedOutcome> {
    let exact = |p: &Placement| total_power_with(scenario, table, p, assignment, Scheme::Generalized);
    let centroid = centroid_anchor(scenario, assignment, table, previous);
    let mut gp: Option<(GpPlacement, f64)> = None;
    for anchor in [previous, &centroid] {
        let Ok(sol) = assemble_gp(scenario, assignment, table, anchor, &cfg.gp).and_then(|prog| solve_gp(&prog, scenario, &cfg.gp.solver))
        else {
            continue;
        };
        let value = exact(&sol.placement);
        if gp.as_ref().is_none_or(|g| value < g.1) {
            gp = Some((sol, value));
        }
    }
    let (direct, _) = nlp_cross_check(scenario, assignment, table, cfg.multistart, cfg.seed, Some(previous))?;
    let direct_objective = exact(&direct);
    let gp_objective = gp.as_ref().map(|g| g.1);
    let condensation_ratio = gp.as_ref().map(|g| g.0.condensation_ratio);
    let (placement, objective, source) = match gp {
        Some((sol, value)) if value <= direct_objective => (sol.placement, value, PlacementSource::GeometricProgram),
        _ => (direct, direct_objective, PlacementSource::Direct),
    };
    Ok(GeneralizedOutcome { placement, objective, source, gp_objective, direct_objective, condensation_ratio })
}

#[cfg(test)]
mod tests;
