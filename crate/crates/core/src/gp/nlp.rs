//! Direct minimization of the exact generalized objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{los_probability, AbsPosition, Assignment, ChannelParams, ModulationTable, Placement, Scenario};

/// `(x, y, weight)` of every user an ABS serves.
pub(crate) type Served = Vec<(f64, f64, f64)>;

pub(crate) fn served_with_weights(scenario: &Scenario, assignment: &Assignment, table: &ModulationTable) -> Vec<Served> {
    let nj = scenario.num_abs;
    let w = assignment.pair_weights(scenario.num_users(), nj, |k| table.nlos[k] * scenario.link_rate(k));
    (0..nj)
        .map(|j| {
            (0..scenario.num_users())
                .filter(|&i| w[i * nj + j] > 0.0)
                .map(|i| (scenario.users[i].x, scenario.users[i].y, w[i * nj + j]))
                .collect()
        })
        .collect()
}

/// Generalized power of one ABS at `p` and its gradient in (x, y, h).
pub fn block_objective(users: &[(f64, f64, f64)], p: [f64; 3], ch: &ChannelParams) -> (f64, [f64; 3]) {
    let eta_ln10 = ch.eta() * 10f64.ln();
    let deg = 180.0 / std::f64::consts::PI;
    let [x, y, h] = p;
    let mut f = 0.0;
    let mut g = [0.0; 3];
    for &(ux, uy, w) in users {
        let (dx, dy) = (x - ux, y - uy);
        let r2 = dx * dx + dy * dy;
        let d2 = r2 + h * h;
        let r = r2.sqrt();
        let theta = if d2 > 0.0 { (h / d2.sqrt()).clamp(-1.0, 1.0).asin() * deg } else { 90.0 };
        let pr = los_probability(theta, ch);
        let term = w * d2 * (eta_ln10 * pr).exp();
        f += term;
        // d ln(term) = d ln(d^2) + eta ln10 beta Pr (1 - Pr) d theta
        let k = eta_ln10 * ch.beta * pr * (1.0 - pr) * deg;
        let (dtx, dty) = if r > 0.0 { (-h * dx / (r * d2), -h * dy / (r * d2)) } else { (0.0, 0.0) };
        let dth = r / d2;
        g[0] += term * (2.0 * dx / d2 + k * dtx);
        g[1] += term * (2.0 * dy / d2 + k * dty);
        g[2] += term * (2.0 * h / d2 + k * dth);
    }
    (f, g)
}

/// Exact generalized objective of a placement and its gradient, three
/// entries per ABS.
pub fn generalized_objective(
    scenario: &Scenario,
    assignment: &Assignment,
    table: &ModulationTable,
    placement: &Placement,
) -> (f64, Vec<f64>) {
    let served = served_with_weights(scenario, assignment, table);
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(3 * scenario.num_abs);
    for (j, p) in placement.positions.iter().enumerate() {
        let (f, g) = block_objective(&served[j], [p.x, p.y, p.h], &scenario.channel);
        total += f;
        grad.extend(g);
    }
    (total, grad)
}

/// Projected gradient descent with Barzilai-Borwein steps and Armijo
/// backtracking over a box.
fn descend(f: impl Fn([f64; 3]) -> (f64, [f64; 3]), lo: [f64; 3], hi: [f64; 3], start: [f64; 3]) -> ([f64; 3], f64) {
    let proj = |v: [f64; 3]| [v[0].clamp(lo[0], hi[0]), v[1].clamp(lo[1], hi[1]), v[2].clamp(lo[2], hi[2])];
    let scale = (0..3).map(|k| hi[k] - lo[k]).fold(1.0, f64::max);
    let mut x = proj(start);
    let (mut fx, mut g) = f(x);
    let mut step = 1e-2 * scale / g.iter().fold(1e-300f64, |a, v| a.max(v.abs()));
    for _ in 0..5000 {
        let target = proj(std::array::from_fn(|k| x[k] - step * g[k]));
        let d = [target[0] - x[0], target[1] - x[1], target[2] - x[2]];
        if d.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= 1e-10 * scale {
            // a collapsed BB step is not proof of stationarity; probe with a fresh one
            let fresh = 1e-2 * scale / g.iter().fold(1e-300f64, |a, v| a.max(v.abs()));
            let probe = proj(std::array::from_fn(|k| x[k] - fresh * g[k]));
            if (0..3).all(|k| (probe[k] - x[k]).abs() <= 1e-10 * scale) || step == fresh {
                break;
            }
            step = fresh;
            continue;
        }
        let slope: f64 = (0..3).map(|k| g[k] * d[k]).sum();
        let mut s = 1.0;
        let (xn, fxn, gn) = loop {
            let xn = [x[0] + s * d[0], x[1] + s * d[1], x[2] + s * d[2]];
            let (fxn, gn) = f(xn);
            if fxn <= fx + 1e-4 * s * slope {
                break (xn, fxn, gn);
            }
            s *= 0.5;
            if s < 1e-20 {
                return (x, fx);
            }
        };
        let sk: [f64; 3] = std::array::from_fn(|k| xn[k] - x[k]);
        let yk: [f64; 3] = std::array::from_fn(|k| gn[k] - g[k]);
        let sy: f64 = (0..3).map(|k| sk[k] * yk[k]).sum();
        let ss: f64 = (0..3).map(|k| sk[k] * sk[k]).sum();
        step = if sy > 0.0 { ss / sy } else { step * 2.0 };
        let improvement = fx - fxn;
        x = xn;
        fx = fxn;
        g = gn;
        if improvement <= 0.0 {
            break;
        }
    }
    (x, fx)
}

/// Multistart local minimization of the exact generalized objective over
/// the placement box.
///
/// Each served ABS is handled on its own. Starts are the weighted centroid,
/// the matching `warm` position when given, and `starts` uniform draws from
/// a stream seeded by `seed` and the ABS index. Idle ABSs keep their `warm`
/// position, or the area center at `h_min`.
pub fn nlp_cross_check(
    scenario: &Scenario,
    assignment: &Assignment,
    table: &ModulationTable,
    starts: usize,
    seed: u64,
    warm: Option<&Placement>,
) -> Result<(Placement, f64)> {
    if warm.is_some_and(|w| w.len() != scenario.num_abs) {
        return Err(Error::InvalidParameter("warm placement has the wrong number of ABSs".into()));
    }
    let served = served_with_weights(scenario, assignment, table);
    let a = &scenario.area;
    let lo = [a.x_min, a.y_min, scenario.h_min];
    let hi = [a.x_max, a.y_max, scenario.h_max];
    let (cx, cy) = a.center();
    let mut positions = Vec::with_capacity(scenario.num_abs);
    for (j, users) in served.iter().enumerate() {
        let previous = warm.map(|w| w.positions[j]);
        if users.is_empty() {
            positions.push(previous.unwrap_or(AbsPosition { x: cx, y: cy, h: scenario.h_min }));
            continue;
        }
        let omega: f64 = users.iter().map(|u| u.2).sum();
        let mx = users.iter().map(|u| u.0 * u.2).sum::<f64>() / omega;
        let my = users.iter().map(|u| u.1 * u.2).sum::<f64>() / omega;
        let spread = (users.iter().map(|u| u.2 * ((u.0 - mx).powi(2) + (u.1 - my).powi(2))).sum::<f64>() / omega).sqrt();
        let mut points = vec![[mx, my, spread.clamp(scenario.h_min, scenario.h_max)]];
        if let Some(p) = previous {
            points.push([p.x, p.y, p.h]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        for _ in 0..starts {
            points.push(std::array::from_fn(|k| if hi[k] > lo[k] { rng.random_range(lo[k]..=hi[k]) } else { lo[k] }));
        }
        let results: Vec<([f64; 3], f64)> = points
            .par_iter()
            .map(|&s| descend(|p| block_objective(users, p, &scenario.channel), lo, hi, s))
            .collect();
        let mut best = 0;
        for (k, r) in results.iter().enumerate() {
            if r.1 < results[best].1 {
                best = k;
            }
        }
        let [x, y, h] = results[best].0;
        positions.push(AbsPosition { x, y, h });
    }
    let placement = Placement { positions };
    let (value, _) = generalized_objective(scenario, assignment, table, &placement);
    Ok((placement, value))
}
