//! Independent feasibility checker for allocations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{los_feasible, Assignment, Placement, Scenario, Scheme, SubcarrierMode};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    IndexOutOfRange { entry: usize },
    Rate { user: usize, achieved: f64, required: f64 },
    MultipleAbs { user: usize },
    MultipleModulations { user: usize, abs: usize, subcarrier: usize },
    SubcarrierUnused { subcarrier: usize },
    SubcarrierShared { abs: Option<usize>, subcarrier: usize },
    LineOfSight { user: usize, abs: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexOutOfRange { entry } => write!(f, "entry {entry} indexes outside the instance"),
            Violation::Rate { user, achieved, required } => {
                write!(f, "user {user} gets {achieved} bit/s, needs {required}")
            }
            Violation::MultipleAbs { user } => write!(f, "user {user} is served by more than one ABS"),
            Violation::MultipleModulations { user, abs, subcarrier } => {
                write!(f, "user {user} uses several modulations on ABS {abs} subcarrier {subcarrier}")
            }
            Violation::SubcarrierUnused { subcarrier } => write!(f, "subcarrier {subcarrier} carries no link"),
            Violation::SubcarrierShared { abs, subcarrier } => match abs {
                Some(j) => write!(f, "subcarrier {subcarrier} of ABS {j} carries several links"),
                None => write!(f, "subcarrier {subcarrier} carries several links"),
            },
            Violation::LineOfSight { user, abs } => {
                write!(f, "link {user} -> {abs} misses the LoS probability threshold")
            }
        }
    }
}

/// Checks every allocation constraint. The LoS coverage rows are checked only
/// for the LoS scheme, against `placement`.
pub fn check_assignment(
    scenario: &Scenario,
    placement: &Placement,
    assignment: &Assignment,
    scheme: Scheme,
) -> Result<(), Violation> {
    let ni = scenario.num_users();
    let mut rate = vec![0.0; ni];
    let mut abs_of: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ni];
    let mut per_link: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut per_sc: BTreeMap<(Option<usize>, usize), usize> = BTreeMap::new();
    for (n, e) in assignment.entries.iter().enumerate() {
        if e.user >= ni
            || e.abs >= scenario.num_abs
            || e.modulation >= scenario.modulation_count
            || e.subcarrier >= scenario.subcarriers
        {
            return Err(Violation::IndexOutOfRange { entry: n });
        }
        rate[e.user] += scenario.symbol_rate * (e.modulation as f64 + 2.0);
        abs_of[e.user].insert(e.abs);
        *per_link.entry((e.user, e.abs, e.subcarrier)).or_default() += 1;
        let key = match scenario.mode {
            SubcarrierMode::Global => (None, e.subcarrier),
            SubcarrierMode::PerAbs => (Some(e.abs), e.subcarrier),
        };
        *per_sc.entry(key).or_default() += 1;
    }
    for i in 0..ni {
        let need = scenario.rate_threshold[i];
        if rate[i] < need * (1.0 - 1e-12) {
            return Err(Violation::Rate { user: i, achieved: rate[i], required: need });
        }
        if abs_of[i].len() > 1 {
            return Err(Violation::MultipleAbs { user: i });
        }
    }
    if let Some((&(user, abs, subcarrier), _)) = per_link.iter().find(|(_, &n)| n > 1) {
        return Err(Violation::MultipleModulations { user, abs, subcarrier });
    }
    if let Some((&(abs, subcarrier), _)) = per_sc.iter().find(|(_, &n)| n > 1) {
        return Err(Violation::SubcarrierShared { abs, subcarrier });
    }
    if scenario.mode == SubcarrierMode::Global {
        if let Some(l) = (0..scenario.subcarriers).find(|&l| !per_sc.contains_key(&(None, l))) {
            return Err(Violation::SubcarrierUnused { subcarrier: l });
        }
    }
    if scheme == Scheme::Los {
        for (i, set) in abs_of.iter().enumerate() {
            for &j in set {
                if !los_feasible(&scenario.users[i], &placement.positions[j], &scenario.channel) {
                    return Err(Violation::LineOfSight { user: i, abs: j });
                }
            }
        }
    }
    Ok(())
}
