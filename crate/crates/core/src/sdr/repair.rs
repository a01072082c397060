use crate::error::{Error, Result};
use crate::model::{horizontal_distance, los_feasible, AbsPosition, Assignment, Placement, Scenario};

/// Lowest altitude at which every user within horizontal radius `r` meets
/// the LoS threshold.
pub fn coverage_altitude(scenario: &Scenario, r: f64) -> f64 {
    r * scenario.channel.coverage_altitude_per_radius()
}

/// Restores feasibility of one ABS for the users it serves: clamps into the
/// area, then raises the altitude until every served user is inside the cone.
pub fn repair_position(candidate: AbsPosition, abs: usize, served: &[usize], scenario: &Scenario) -> Result<AbsPosition> {
    if !(candidate.x.is_finite() && candidate.y.is_finite() && candidate.h.is_finite()) {
        return Err(Error::Domain(format!("candidate for ABS {abs} has non-finite coordinates")));
    }
    let (x, y) = scenario.area.clamp(candidate.x, candidate.y);
    let mut p = AbsPosition { x, y, h: candidate.h.clamp(scenario.h_min, scenario.h_max) };
    let r_max = served
        .iter()
        .map(|&i| horizontal_distance(&scenario.users[i], &p))
        .fold(0.0, f64::max);
    let required = coverage_altitude(scenario, r_max);
    if required > scenario.h_max {
        return Err(Error::Irreparable { abs, required, max: scenario.h_max });
    }
    p.h = p.h.max(required);
    // the closed form can miss by an ulp; nudge upward until the test agrees
    let ch = &scenario.channel;
    let mut guard = 0;
    while !served.iter().all(|&i| los_feasible(&scenario.users[i], &p, ch)) {
        p.h *= 1.0 + 4.0 * f64::EPSILON;
        guard += 1;
        if p.h > scenario.h_max || guard > 1000 {
            return Err(Error::Irreparable { abs, required: p.h, max: scenario.h_max });
        }
    }
    Ok(p)
}

/// Users served by each ABS.
pub(crate) fn served_users(scenario: &Scenario, assignment: &Assignment) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); scenario.num_abs];
    for (i, j) in assignment.pairs() {
        out[j].push(i);
    }
    out
}

/// [`repair_position`] applied to every ABS; idle ABSs are only clamped.
pub fn repair_placement(candidate: &Placement, scenario: &Scenario, assignment: &Assignment) -> Result<Placement> {
    let served = served_users(scenario, assignment);
    let positions = candidate
        .positions
        .iter()
        .enumerate()
        .map(|(j, &p)| repair_position(p, j, &served[j], scenario))
        .collect::<Result<Vec<_>>>()?;
    Ok(Placement { positions })
}
