use crate::error::{Infeasibility, Result};
use crate::model::{horizontal_distance, AbsPosition, Area, Assignment, Link, Placement, Scenario, SubcarrierMode};

use super::infeasible;

/// ABSs on the cells of a ceil(sqrt J) x ceil(sqrt J) grid, filled row-major,
/// all at altitude `h`.
pub fn grid_placement(area: &Area, num_abs: usize, h: f64) -> Placement {
    let n = (num_abs as f64).sqrt().ceil().max(1.0) as usize;
    let (dx, dy) = (area.width() / n as f64, area.height() / n as f64);
    let positions = (0..num_abs)
        .map(|idx| {
            let (row, col) = (idx / n, idx % n);
            AbsPosition {
                x: area.x_min + (col as f64 + 0.5) * dx,
                y: area.y_min + (row as f64 + 0.5) * dy,
                h,
            }
        })
        .collect();
    Placement { positions }
}

/// ABSs spread over round(sqrt J) rows whose sizes differ by at most one,
/// each row evenly spaced, all at altitude `h`. Square J gives the same layout
/// as [`grid_placement`].
pub fn balanced_grid_placement(area: &Area, num_abs: usize, h: f64) -> Placement {
    let rows = ((num_abs as f64).sqrt().round() as usize).clamp(1, num_abs.max(1));
    let dy = area.height() / rows as f64;
    let mut positions = Vec::with_capacity(num_abs);
    for row in 0..rows {
        // later rows take the remainder
        let count = num_abs / rows + usize::from(row >= rows - num_abs % rows);
        let dx = area.width() / count as f64;
        for col in 0..count {
            positions.push(AbsPosition {
                x: area.x_min + (col as f64 + 0.5) * dx,
                y: area.y_min + (row as f64 + 0.5) * dy,
                h,
            });
        }
    }
    Placement { positions }
}

/// Where the alternating optimization starts: a balanced grid at mid altitude.
pub fn initial_placement(scenario: &Scenario) -> Placement {
    balanced_grid_placement(&scenario.area, scenario.num_abs, 0.5 * (scenario.h_min + scenario.h_max))
}

/// ABS indices ordered by horizontal distance from `user`, ties by index.
pub(crate) fn nearest_order(scenario: &Scenario, placement: &Placement, user: usize) -> Vec<usize> {
    let u = &scenario.users[user];
    let mut order: Vec<usize> = (0..placement.len()).collect();
    order.sort_by(|&a, &b| {
        horizontal_distance(u, &placement.positions[a])
            .total_cmp(&horizontal_distance(u, &placement.positions[b]))
            .then(a.cmp(&b))
    });
    order
}

/// A feasible starting allocation: [`initial_placement`], each user
/// on its nearest ABS with the fewest subcarriers and the lowest modulation
/// that meets its rate. In the shared-pool mode the unused subcarriers go
/// round-robin (QPSK) starting from a seed-chosen user.
pub fn greedy_initial_assignment(scenario: &Scenario, seed: u64) -> Result<Assignment> {
    scenario.validate()?;
    let placement = initial_placement(scenario);
    let top_bits = scenario.modulation_count + 1;
    let l = scenario.subcarriers;
    let mut plan = Vec::with_capacity(scenario.num_users());
    for i in 0..scenario.num_users() {
        let units = scenario.rate_units(i).max(1);
        let count = units.div_ceil(top_bits);
        if count > l {
            return Err(infeasible(Infeasibility::Rate { user: i }));
        }
        let k = (0..scenario.modulation_count)
            .find(|&k| count * (k + 2) >= units)
            .expect("top modulation meets the rate by construction");
        plan.push((count, k));
    }
    let needed: usize = plan.iter().map(|p| p.0).sum();
    let mut entries = Vec::new();
    match scenario.mode {
        SubcarrierMode::Global => {
            if needed > l {
                return Err(infeasible(Infeasibility::Subcarriers { needed, available: l }));
            }
            let mut sc = 0;
            let home: Vec<usize> = (0..scenario.num_users()).map(|i| nearest_order(scenario, &placement, i)[0]).collect();
            for (i, &(count, k)) in plan.iter().enumerate() {
                for _ in 0..count {
                    entries.push(Link { user: i, modulation: k, abs: home[i], subcarrier: sc });
                    sc += 1;
                }
            }
            let n = scenario.num_users();
            let start = (seed % n as u64) as usize;
            let mut turn = 0;
            while sc < l {
                let i = (start + turn) % n;
                entries.push(Link { user: i, modulation: 0, abs: home[i], subcarrier: sc });
                sc += 1;
                turn += 1;
            }
        }
        SubcarrierMode::PerAbs => {
            let available = l * scenario.num_abs;
            if needed > available {
                return Err(infeasible(Infeasibility::Subcarriers { needed, available }));
            }
            let mut used = vec![0usize; scenario.num_abs];
            for (i, &(count, k)) in plan.iter().enumerate() {
                let Some(j) = nearest_order(scenario, &placement, i).into_iter().find(|&j| used[j] + count <= l) else {
                    return Err(infeasible(Infeasibility::Subcarriers { needed, available }));
                };
                for _ in 0..count {
                    entries.push(Link { user: i, modulation: k, abs: j, subcarrier: used[j] });
                    used[j] += 1;
                }
            }
        }
    }
    Ok(Assignment::new(entries))
}
