//! Exhaustive placement search on a regular grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Infeasibility, Result};
use crate::model::{
    los_probability, modulation_constants, AbsPosition, Assignment, Placement, Scenario, Scheme,
};

/// Evaluated-point guard.
pub const GRID_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Horizontal step, meters.
    pub xy_step: f64,
    /// Vertical step, meters.
    pub h_step: f64,
}

impl GridSpec {
    pub fn uniform(step: f64) -> Self {
        GridSpec { xy_step: step, h_step: step }
    }
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    if hi - v[n] > 1e-9 * step {
        v.push(hi);
    }
    v
}

/// Best grid point for every ABS, with the summed objective.
///
/// The placement objective separates over ABSs once the allocation is fixed,
/// so each ABS is searched on its own. Under the LoS scheme points that leave
/// any served user outside the coverage cone are skipped.
pub fn grid_search_placement(
    scenario: &Scenario,
    assignment: &Assignment,
    scheme: Scheme,
    grid: GridSpec,
) -> Result<(Placement, f64)> {
    if !(grid.xy_step > 0.0 && grid.h_step > 0.0) {
        return Err(Error::InvalidParameter("grid steps must be positive".into()));
    }
    let a = &scenario.area;
    let xs = axis(a.x_min, a.x_max, grid.xy_step);
    let ys = axis(a.y_min, a.y_max, grid.xy_step);
    let hs = axis(scenario.h_min, scenario.h_max, grid.h_step);
    let per_abs = (xs.len() * ys.len() * hs.len()) as f64;
    let size = per_abs * scenario.num_abs as f64;
    if size > GRID_LIMIT {
        return Err(Error::TooLarge { size, limit: GRID_LIMIT });
    }
    let table = modulation_constants(&scenario.channel, scenario.modulation_count)?;
    let ch = &scenario.channel;
    let eta = ch.eta();
    let s = ch.coverage_sine();
    let (cx, cy) = a.center();

    let mut positions = Vec::with_capacity(scenario.num_abs);
    let mut total = 0.0;
    for j in 0..scenario.num_abs {
        // (user x, user y, weight) for users on ABS j
        let mut served: Vec<(f64, f64, f64)> = Vec::new();
        for i in 0..scenario.num_users() {
            let w: f64 = assignment
                .entries
                .iter()
                .filter(|l| l.user == i && l.abs == j)
                .map(|l| {
                    let c = match scheme {
                        Scheme::Los => table.los[l.modulation],
                        Scheme::Generalized => table.nlos[l.modulation],
                    };
                    c * scenario.symbol_rate * (l.modulation as f64 + 2.0)
                })
                .sum();
            if w > 0.0 {
                served.push((scenario.users[i].x, scenario.users[i].y, w));
            }
        }
        if served.is_empty() {
            positions.push(AbsPosition { x: cx, y: cy, h: scenario.h_min });
            continue;
        }
        let eval = |x: f64, y: f64, h: f64| -> Option<f64> {
            let mut v = 0.0;
            for &(ux, uy, w) in &served {
                let d2 = (x - ux).powi(2) + (y - uy).powi(2) + h * h;
                match scheme {
                    Scheme::Los => {
                        if d2.sqrt() > h / s {
                            return None;
                        }
                        v += w * d2;
                    }
                    Scheme::Generalized => {
                        let theta = (h / d2.sqrt()).asin().to_degrees();
                        v += w * d2 * 10f64.powf(eta * los_probability(theta, ch));
                    }
                }
            }
            Some(v)
        };
        let rows: Vec<Option<(f64, usize, usize)>> = xs
            .par_iter()
            .map(|&x| {
                let mut best: Option<(f64, usize, usize)> = None;
                for (iy, &y) in ys.iter().enumerate() {
                    for (ih, &h) in hs.iter().enumerate() {
                        if let Some(v) = eval(x, y, h) {
                            if best.is_none_or(|b| v < b.0) {
                                best = Some((v, iy, ih));
                            }
                        }
                    }
                }
                best
            })
            .collect();
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for (ix, r) in rows.into_iter().enumerate() {
            if let Some((v, iy, ih)) = r {
                if best.is_none_or(|b| v < b.0) {
                    best = Some((v, ix, iy, ih));
                }
            }
        }
        let Some((v, ix, iy, ih)) = best else {
            let user = assignment.entries.iter().find(|l| l.abs == j).map_or(0, |l| l.user);
            return Err(Error::Infeasible(Infeasibility::LineOfSight { user }));
        };
        positions.push(AbsPosition { x: xs[ix], y: ys[iy], h: hs[ih] });
        total += v;
    }
    Ok((Placement { positions }, total))
}
