//! Exhaustive allocation search.

use super::check::check_assignment;
use crate::error::{Error, Infeasibility, Result};
use crate::model::{
    modulation_constants, transmit_power, Assignment, Link, Placement, Scenario, Scheme, SubcarrierMode,
};

/// Search-space guard.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Minimum-power feasible allocation by brute force, with its objective.
///
/// Shared-pool mode walks every choice of one (user, modulation, abs) per
/// subcarrier. Per-ABS mode walks every (abs, subcarrier) slot, each empty or
/// holding one (user, modulation).
pub fn enumerate_assignments(scenario: &Scenario, placement: &Placement, scheme: Scheme) -> Result<(Assignment, f64)> {
    let (ni, nj, nm, nl) = (scenario.num_users(), scenario.num_abs, scenario.modulation_count, scenario.subcarriers);
    let table = modulation_constants(&scenario.channel, nm)?;
    let cost = |l: &Link| {
        transmit_power(
            &scenario.users[l.user],
            l.modulation,
            &placement.positions[l.abs],
            scenario.symbol_rate,
            &scenario.channel,
            &table,
            scheme,
        )
    };
    let (slots, choices) = match scenario.mode {
        SubcarrierMode::Global => (nl, ni * nm * nj),
        SubcarrierMode::PerAbs => (nj * nl, ni * nm + 1),
    };
    let size = (choices as f64).powi(slots as i32);
    if size > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { size, limit: ENUMERATION_LIMIT });
    }
    let mut digits = vec![0usize; slots];
    let mut best: Option<(Assignment, f64)> = None;
    loop {
        let mut entries = Vec::with_capacity(slots);
        for (slot, &d) in digits.iter().enumerate() {
            match scenario.mode {
                SubcarrierMode::Global => {
                    let (i, rest) = (d / (nm * nj), d % (nm * nj));
                    entries.push(Link { user: i, modulation: rest / nj, abs: rest % nj, subcarrier: slot });
                }
                SubcarrierMode::PerAbs => {
                    if d > 0 {
                        let (i, k) = ((d - 1) / nm, (d - 1) % nm);
                        entries.push(Link { user: i, modulation: k, abs: slot / nl, subcarrier: slot % nl });
                    }
                }
            }
        }
        let a = Assignment::new(entries);
        if check_assignment(scenario, placement, &a, scheme).is_ok() {
            let v: f64 = a.entries.iter().map(cost).sum();
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((a, v));
            }
        }
        // odometer, last slot fastest
        let mut pos = slots;
        loop {
            if pos == 0 {
                return best.ok_or(Error::Infeasible(Infeasibility::Exhausted));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < choices {
                break;
            }
            digits[pos] = 0;
        }
    }
}
