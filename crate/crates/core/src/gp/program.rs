//! Geometric-programming form of the generalized placement subproblem.
//!
//! Per served (user, ABS) pair the program carries five auxiliary variables:
//! horizontal offsets `t0, t1`, the secant `f0 >= d/h`, the angle growth
//! factor `f1 ~ 1 + beta*theta/psi` and the LoS factor `f2 ~ 10^(eta*Pr)^(1/phi)`.
//! Non-posynomial pieces are condensed at an anchor placement, which keeps
//! every row conservative there.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fit::{fit_arcsin_monomial, fit_monomial, MonomialFit, FIT_POINTS};
use super::posy::{Monomial, Posynomial};
use super::solver::{solve_gp_problem, GpProblem, GpSolverSettings};
use crate::error::{Error, Result};
use crate::model::{AbsPosition, Assignment, ModulationTable, Placement, Scenario};

/// How offsets between ABS and user coordinates enter the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisplacementForm {
    /// `t0 >= |x - x_user|` through two condensed rows.
    #[default]
    Condensed,
    /// `x = 2 sqrt(x_user t0)`, a one-point surrogate of the offset.
    SquareRootEquality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    /// Exponent of the `(1 + x/psi)^psi` stand-in for `exp(x)`.
    pub psi: f64,
    /// Exponent of the `(1 + x/phi)^phi` stand-in for `10^(eta Pr)`.
    pub phi: f64,
    pub displacement: DisplacementForm,
    /// Initial half-width (multiplicative) of each fit range around the anchor.
    pub fit_spread: f64,
    pub solver: GpSolverSettings,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig { psi: 300.0, phi: 100.0, displacement: DisplacementForm::Condensed, fit_spread: 1.3, solver: GpSolverSettings::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    X,
    Y,
    Altitude,
    OffsetX { user: usize },
    OffsetY { user: usize },
    Secant { user: usize },
    AngleGrowth { user: usize },
    LosFactor { user: usize },
}

/// Fits used by one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFits {
    pub user: usize,
    /// `asin(1/f0) ~ mu f0^omega`, radians.
    pub angle: MonomialFit,
    /// `f1^psi + alpha e^(alpha beta) ~ mu f1^omega`.
    pub los: MonomialFit,
}

/// Independent program of one served ABS.
#[derive(Debug, Clone, PartialEq)]
pub struct GpBlock {
    pub abs: usize,
    pub roles: Vec<VarRole>,
    pub links: Vec<LinkFits>,
    pub problem: GpProblem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpProgram {
    pub blocks: Vec<GpBlock>,
    /// Placement the condensations touch; idle ABSs stay here.
    pub anchor: Placement,
    pub psi: f64,
    pub phi: f64,
}

impl GpProgram {
    pub fn num_vars(&self) -> usize {
        self.blocks.iter().map(|b| b.problem.num_vars).sum()
    }

    pub fn num_equalities(&self) -> usize {
        self.blocks.iter().map(|b| b.problem.equalities.len()).sum()
    }

    /// Surrogate objective at a full variable vector per block.
    pub fn objective_at(&self, values: &[Vec<f64>]) -> f64 {
        self.blocks.iter().zip(values).map(|(b, v)| b.problem.objective.eval(v)).sum()
    }

    /// Worst `exp(x) / (1 + x/psi)^psi` over the angle arguments realized by
    /// `values`.
    pub fn condensation_ratio(&self, scenario: &Scenario, values: &[Vec<f64>]) -> f64 {
        let beta = scenario.channel.beta;
        let mut worst: f64 = 1.0;
        for (b, v) in self.blocks.iter().zip(values) {
            for (l, fits) in b.links.iter().enumerate() {
                let x = 180.0 / PI * beta * fits.angle.eval(v[3 + 5 * l + 2]);
                worst = worst.max((x - self.psi * (x / self.psi).ln_1p()).exp());
            }
        }
        worst
    }
}

const OFFSET_FLOOR: f64 = 1.0;
const COORD_FLOOR: f64 = 1e-3;

/// Fits for one link, shrinking the range until both are accepted.
fn link_fits(secant: f64, spread: f64, psi: f64, scenario: &Scenario) -> Result<(MonomialFit, MonomialFit)> {
    let ch = &scenario.channel;
    let k = ch.alpha * (ch.alpha * ch.beta).exp();
    let mut s = spread;
    let mut last = None;
    for _ in 0..30 {
        let lo = (secant / s).max(1.0);
        let hi = secant * s;
        let attempt = fit_arcsin_monomial(lo, hi).and_then(|angle| {
            let c1 = 180.0 / PI * ch.beta * angle.mu / psi;
            let (g_lo, g_hi) = (1.0 + c1 * hi.powf(angle.omega), 1.0 + c1 * lo.powf(angle.omega));
            let los = fit_monomial(|f| (psi * f.ln()).exp() + k, g_lo.min(g_hi), g_lo.max(g_hi), FIT_POINTS)?.accepted()?;
            Ok((angle, los))
        });
        match attempt {
            Ok(f) => return Ok(f),
            Err(e @ Error::FitRejected { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
        s = s.sqrt();
    }
    Err(last.unwrap_or_else(|| Error::Gp("fit range collapsed".into())))
}

/// Weighted centroid of each ABS's users at the weighted RMS radius; idle
/// ABSs copy `fallback`.
pub fn centroid_anchor(scenario: &Scenario, assignment: &Assignment, table: &ModulationTable, fallback: &Placement) -> Placement {
    let served = super::nlp::served_with_weights(scenario, assignment, table);
    let positions = served
        .iter()
        .zip(&fallback.positions)
        .map(|(users, &prev)| {
            let omega: f64 = users.iter().map(|u| u.2).sum();
            if users.is_empty() {
                return prev;
            }
            let x = users.iter().map(|u| u.0 * u.2).sum::<f64>() / omega;
            let y = users.iter().map(|u| u.1 * u.2).sum::<f64>() / omega;
            let r2 = users.iter().map(|u| u.2 * ((u.0 - x).powi(2) + (u.1 - y).powi(2))).sum::<f64>() / omega;
            AbsPosition { x, y, h: r2.sqrt().clamp(scenario.h_min, scenario.h_max) }
        })
        .collect();
    Placement { positions }
}

/// Assembles the program for a fixed allocation, condensed at `anchor`.
pub fn assemble_gp(
    scenario: &Scenario,
    assignment: &Assignment,
    table: &ModulationTable,
    anchor: &Placement,
    cfg: &GpConfig,
) -> Result<GpProgram> {
    if assignment.is_empty() {
        return Err(Error::EmptyCoverage);
    }
    let ch = &scenario.channel;
    let eta = ch.eta();
    if !(eta < 0.0) {
        return Err(Error::InvalidParameter(format!("condensed program needs eta < 0, got {eta}")));
    }
    if ch.path_loss_exponent != 2.0 {
        return Err(Error::InvalidParameter("placement subproblems need a path-loss exponent of 2".into()));
    }
    // 1 + eta ln10 Pr / phi must stay positive for every Pr in [0, 1]
    let guard = 2.0 * eta.abs() * 10f64.ln();
    if !(cfg.phi > guard) {
        return Err(Error::InvalidParameter(format!("phi = {} must exceed {guard:.3}", cfg.phi)));
    }
    if !(cfg.psi > 0.0) || !(cfg.fit_spread > 1.0) {
        return Err(Error::InvalidParameter("psi must be positive and fit_spread above 1".into()));
    }
    if anchor.len() != scenario.num_abs {
        return Err(Error::InvalidParameter("anchor has the wrong number of ABSs".into()));
    }
    let nj = scenario.num_abs;
    let weights = assignment.pair_weights(scenario.num_users(), nj, |k| table.nlos[k] * scenario.link_rate(k));
    let area = &scenario.area;
    let (psi, phi) = (cfg.psi, cfg.phi);
    let mut anchor = anchor.clone();
    for p in anchor.positions.iter_mut() {
        let (x, y) = area.clamp(p.x, p.y);
        *p = AbsPosition { x, y, h: p.h.clamp(scenario.h_min, scenario.h_max) };
    }

    let mut blocks = Vec::new();
    for j in 0..nj {
        let served: Vec<usize> = (0..scenario.num_users()).filter(|&i| weights[i * nj + j] > 0.0).collect();
        if served.is_empty() {
            continue;
        }
        let p0 = anchor.positions[j];
        if !(p0.x > 0.0 && p0.y > 0.0) {
            return Err(Error::InvalidParameter(format!("anchor of ABS {j} must have positive coordinates")));
        }
        let n = 3 + 5 * served.len();
        let mut roles = vec![VarRole::X, VarRole::Y, VarRole::Altitude];
        let mut at = vec![p0.x, p0.y, p0.h];
        let mut links = Vec::new();
        let mut objective = Posynomial::default();
        let mut rows: Vec<Posynomial> = Vec::new();
        let mut equalities = Vec::new();
        let (vx, vy, vh) = (Monomial::var(0), Monomial::var(1), Monomial::var(2));

        rows.push(Monomial::new(scenario.h_min, &[(2, -1.0)]).into());
        rows.push(Monomial::new(1.0 / scenario.h_max, &[(2, 1.0)]).into());
        rows.push(Monomial::new(1.0 / area.x_max, &[(0, 1.0)]).into());
        rows.push(Monomial::new(1.0 / area.y_max, &[(1, 1.0)]).into());
        // log variables need a bounded box, so a zero area edge becomes a small positive one
        rows.push(Monomial::new(area.x_min.max(COORD_FLOOR), &[(0, -1.0)]).into());
        rows.push(Monomial::new(area.y_min.max(COORD_FLOOR), &[(1, -1.0)]).into());

        for (l, &i) in served.iter().enumerate() {
            let u = scenario.users[i];
            if !(u.x > 0.0 && u.y > 0.0) {
                return Err(Error::InvalidParameter(format!("user {i} must have positive coordinates")));
            }
            let b = 3 + 5 * l;
            let (t0, t1, f0, f1, f2) = (b, b + 1, b + 2, b + 3, b + 4);
            roles.extend([
                VarRole::OffsetX { user: i },
                VarRole::OffsetY { user: i },
                VarRole::Secant { user: i },
                VarRole::AngleGrowth { user: i },
                VarRole::LosFactor { user: i },
            ]);
            let (a0, b0) = match cfg.displacement {
                DisplacementForm::Condensed => ((p0.x - u.x).abs().max(OFFSET_FLOOR), (p0.y - u.y).abs().max(OFFSET_FLOOR)),
                DisplacementForm::SquareRootEquality => (p0.x * p0.x / (4.0 * u.x), p0.y * p0.y / (4.0 * u.y)),
            };
            let sec0 = (a0 * a0 + b0 * b0 + p0.h * p0.h).sqrt() / p0.h;
            let (angle, los) = link_fits(sec0, cfg.fit_spread, psi, scenario)?;
            let c1 = 180.0 / PI * ch.beta * angle.mu / psi;
            let growth = |f: f64| 1.0 + c1 * f.powf(angle.omega);
            let c6 = eta.abs() * 10f64.ln() / (phi * los.mu);
            let g1 = growth(sec0);
            let drop = c6 * g1.powf(psi - los.omega);
            at.extend([a0, b0, sec0, g1, (1.0 - drop).max(1e-3)]);
            links.push(LinkFits { user: i, angle, los });

            let (mt0, mt1, mf1, mf2) = (Monomial::var(t0), Monomial::var(t1), Monomial::var(f1), Monomial::var(f2));
            match cfg.displacement {
                DisplacementForm::Condensed => {
                    for (v, t, c) in [(&vx, &mt0, u.x), (&vy, &mt1, u.y)] {
                        let upper = Posynomial::new(vec![Monomial::constant(c), t.clone()]);
                        let lower = Posynomial::new(vec![v.clone(), t.clone()]);
                        rows.push(v.div(&upper.condense(&at)).into());
                        rows.push(Monomial::constant(c).div(&lower.condense(&at)).into());
                    }
                }
                DisplacementForm::SquareRootEquality => {
                    equalities.push(Monomial::new(0.5 / u.x.sqrt(), &[(0, 1.0), (t0, -0.5)]));
                    equalities.push(Monomial::new(0.5 / u.y.sqrt(), &[(1, 1.0), (t1, -0.5)]));
                }
            }
            // (t0^2 + t1^2 + h^2) / (h f0)^2 <= 1
            let inv = Monomial::new(1.0, &[(f0, -2.0), (2, -2.0)]);
            rows.push(Posynomial::new(vec![mt0.pow(2.0), mt1.pow(2.0), vh.pow(2.0)]).mul_monomial(&inv));
            // f1 <= 1 + c1 f0^omega
            let angle_rhs = Posynomial::new(vec![Monomial::constant(1.0), Monomial::new(c1, &[(f0, angle.omega)])]);
            rows.push(mf1.div(&angle_rhs.condense(&at)).into());
            // f2 >= 1 - c6 f1^(psi - omega)
            let los_lhs = Posynomial::new(vec![mf2.clone(), Monomial::new(c6, &[(f1, psi - los.omega)])]);
            rows.push(los_lhs.condense(&at).recip().into());
            // eta < 0, so the LoS factor never exceeds one
            rows.push(mf2.clone().into());
            // stay where the fits were made
            rows.push(Monomial::new(angle.lo, &[(f0, -1.0)]).into());
            rows.push(Monomial::new(1.0 / angle.hi, &[(f0, 1.0)]).into());
            rows.push(Monomial::new(los.lo, &[(f1, -1.0)]).into());
            rows.push(Monomial::new(1.0 / los.hi, &[(f1, 1.0)]).into());

            let w = weights[i * nj + j];
            let spread = Posynomial::new(vec![mt0.pow(2.0), mt1.pow(2.0), vh.pow(2.0)]);
            objective.terms.extend(spread.mul_monomial(&Monomial::new(w, &[(f2, phi)])).terms);
        }
        debug_assert_eq!(at.len(), n);
        blocks.push(GpBlock { abs: j, roles, links, problem: GpProblem { num_vars: n, objective, inequalities: rows, equalities, start: at } });
    }
    Ok(GpProgram { blocks, anchor, psi, phi })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpPlacement {
    pub placement: Placement,
    /// Surrogate objective at the solution, W.
    pub surrogate: f64,
    pub condensation_ratio: f64,
    /// Variable values per block.
    pub values: Vec<Vec<f64>>,
    pub newton_steps: usize,
}

/// Solves every block; idle ABSs keep their anchor position.
pub fn solve_gp(program: &GpProgram, scenario: &Scenario, settings: &GpSolverSettings) -> Result<GpPlacement> {
    let mut positions = program.anchor.positions.clone();
    let mut values = Vec::new();
    let mut steps = 0;
    for b in &program.blocks {
        let s = solve_gp_problem(&b.problem, settings)?;
        let (x, y) = scenario.area.clamp(s.values[0], s.values[1]);
        positions[b.abs] = AbsPosition { x, y, h: s.values[2].clamp(scenario.h_min, scenario.h_max) };
        steps += s.newton_steps;
        values.push(s.values);
    }
    let surrogate = program.objective_at(&values);
    let condensation_ratio = program.condensation_ratio(scenario, &values);
    Ok(GpPlacement { placement: Placement { positions }, surrogate, condensation_ratio, values, newton_steps: steps })
}
