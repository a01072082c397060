use rand::Rng;

use super::*;
use crate::bilp::grid_placement;
use crate::error::Error;
use crate::model::{modulation_constants, AbsPosition, Link, Scheme};
use crate::oracle::{grid_search_placement, GridSpec};
use crate::testutil::{rng, scenario};

fn on_first_abs(users: usize) -> Assignment {
    Assignment::new((0..users).map(|i| Link { user: i, modulation: 0, abs: 0, subcarrier: i }).collect())
}

fn anchor(s: &Scenario) -> Placement {
    grid_placement(&s.area, s.num_abs, 400.0)
}

#[test]
fn one_link_has_eight_variables() {
    let s = scenario(&[(300.0, 200.0)], 1, 1, 1);
    let t = modulation_constants(&s.channel, 1).unwrap();
    let prog = assemble_gp(&s, &on_first_abs(1), &t, &anchor(&s), &GpConfig::default()).unwrap();
    assert_eq!(prog.num_vars(), 8);
    assert_eq!(prog.num_equalities(), 0);
    let equality = GpConfig { displacement: DisplacementForm::SquareRootEquality, ..GpConfig::default() };
    let prog = assemble_gp(&s, &on_first_abs(1), &t, &anchor(&s), &equality).unwrap();
    assert_eq!(prog.num_vars(), 8);
    assert_eq!(prog.num_equalities(), 2);
}

#[test]
fn square_root_equality_fixes_the_offset() {
    let s = scenario(&[(300.0, 200.0), (700.0, 650.0)], 1, 1, 2);
    let t = modulation_constants(&s.channel, 1).unwrap();
    let cfg = GpConfig { displacement: DisplacementForm::SquareRootEquality, ..GpConfig::default() };
    let prog = assemble_gp(&s, &on_first_abs(2), &t, &anchor(&s), &cfg).unwrap();
    let sol = solve_gp(&prog, &s, &cfg.solver).unwrap();
    let v = &sol.values[0];
    for (l, u) in s.users.iter().enumerate() {
        let t0 = v[3 + 5 * l];
        assert!((t0 / (v[0] * v[0] / (4.0 * u.x)) - 1.0).abs() < 1e-6, "{v:?}");
    }
}

#[test]
fn fits_are_accepted_and_local() {
    let s = scenario(&[(30.0, 20.0), (900.0, 950.0), (520.0, 480.0)], 1, 1, 3);
    let t = modulation_constants(&s.channel, 1).unwrap();
    let prog = assemble_gp(&s, &on_first_abs(3), &t, &anchor(&s), &GpConfig::default()).unwrap();
    for l in &prog.blocks[0].links {
        assert!(l.angle.max_log_residual <= MAX_FIT_RESIDUAL);
        assert!(l.los.max_log_residual <= MAX_FIT_RESIDUAL);
        assert!(l.angle.omega < 0.0);
        assert!(l.angle.lo >= 1.0);
    }
}

#[test]
fn program_is_finite_at_the_grid_optimum() {
    let s = scenario(&[(200.0, 500.0), (800.0, 500.0)], 1, 1, 2);
    let t = modulation_constants(&s.channel, 1).unwrap();
    let a = on_first_abs(2);
    let (best, _) = grid_search_placement(&s, &a, Scheme::Generalized, GridSpec::uniform(25.0)).unwrap();
    let prog = assemble_gp(&s, &a, &t, &best, &GpConfig::default()).unwrap();
    let v = &prog.blocks[0].problem.start;
    let f = prog.objective_at(std::slice::from_ref(v));
    assert!(f.is_finite() && f > 0.0);
}

#[test]
fn guards() {
    let s = scenario(&[(300.0, 200.0)], 1, 1, 1);
    let t = modulation_constants(&s.channel, 1).unwrap();
    let a = on_first_abs(1);
    let low_phi = GpConfig { phi: 5.0, ..GpConfig::default() };
    assert!(matches!(assemble_gp(&s, &a, &t, &anchor(&s), &low_phi), Err(Error::InvalidParameter(_))));
    let mut bad = s.clone();
    bad.users[0].x = 0.0;
    assert!(matches!(assemble_gp(&bad, &a, &t, &anchor(&s), &GpConfig::default()), Err(Error::InvalidParameter(_))));
    assert_eq!(assemble_gp(&s, &Assignment::default(), &t, &anchor(&s), &GpConfig::default()), Err(Error::EmptyCoverage));
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng(21);
    let ch = crate::model::ChannelParams::urban();
    for _ in 0..50 {
        let users: Vec<(f64, f64, f64)> = (0..r.random_range(1..6))
            .map(|_| (r.random_range(1.0..1000.0), r.random_range(1.0..1000.0), r.random_range(0.5..2.0)))
            .collect();
        let p = [r.random_range(0.0..1000.0), r.random_range(0.0..1000.0), r.random_range(100.0..2000.0)];
        let (_, g) = block_objective(&users, p, &ch);
        for k in 0..3 {
            let h = 1e-4 * p[k].abs().max(1.0);
            let mut up = p;
            let mut dn = p;
            up[k] += h;
            dn[k] -= h;
            let fd = (block_objective(&users, up, &ch).0 - block_objective(&users, dn, &ch).0) / (2.0 * h);
            let norm = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!((fd - g[k]).abs() <= 1e-5 * norm, "k={k}: {fd} vs {}", g[k]);
        }
    }
}

#[test]
fn single_user_sits_overhead_at_the_floor() {
    let s = scenario(&[(300.0, 700.0)], 1, 1, 1);
    let t = modulation_constants(&s.channel, 1).unwrap();
    let a = on_first_abs(1);
    let (p, _) = nlp_cross_check(&s, &a, &t, 4, 1, None).unwrap();
    let q = p.positions[0];
    assert!((q.x - 300.0).abs() < 1e-3 && (q.y - 700.0).abs() < 1e-3, "{q:?}");
    // 1-D refinement over h confirms the floor is the minimum
    let users = [(300.0, 700.0, 1.0)];
    let at_floor = block_objective(&users, [300.0, 700.0, 100.0], &s.channel).0;
    for k in 1..=1900 {
        let h = 100.0 + k as f64;
        assert!(block_objective(&users, [300.0, 700.0, h], &s.channel).0 > at_floor);
    }
    assert_eq!(q.h, 100.0);
}

#[test]
fn no_los_gain_reduces_to_the_floor() {
    let mut s = scenario(&[(300.0, 700.0)], 1, 1, 1);
    s.channel.xi_nlos_db = s.channel.xi_los_db;
    let t = modulation_constants(&s.channel, 1).unwrap();
    let (p, _) = nlp_cross_check(&s, &on_first_abs(1), &t, 4, 1, None).unwrap();
    let q = p.positions[0];
    assert!((q.x - 300.0).abs() < 1e-3 && (q.y - 700.0).abs() < 1e-3 && q.h == 100.0, "{q:?}");
    assert!(matches!(
        assemble_gp(&s, &on_first_abs(1), &t, &anchor(&s), &GpConfig::default()),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn spread_users_lift_the_abs() {
    let s = scenario(&[(200.0, 500.0), (800.0, 500.0)], 1, 1, 2);
    let t = modulation_constants(&s.channel, 1).unwrap();
    let a = on_first_abs(2);
    let (p, v) = nlp_cross_check(&s, &a, &t, 8, 3, None).unwrap();
    assert!(p.positions[0].h > 150.0, "{:?}", p.positions[0]);
    let (g, gv) = grid_search_placement(&s, &a, Scheme::Generalized, GridSpec::uniform(10.0)).unwrap();
    assert!(v <= gv * (1.0 + 1e-9));
    let (q, r) = (p.positions[0], g.positions[0]);
    assert!((q.x - r.x).abs() <= 10.0 && (q.y - r.y).abs() <= 10.0 && (q.h - r.h).abs() <= 10.0, "{q:?} vs {r:?}");
}

#[test]
fn gp_agrees_with_direct_minimization() {
    for seed in 0..20 {
        let mut r = rng(300 + seed);
        let ni = r.random_range(2..8);
        let pts: Vec<(f64, f64)> = (0..ni).map(|_| (r.random_range(1.0..1001.0), r.random_range(1.0..1001.0))).collect();
        let s = scenario(&pts, 2, 1, ni);
        let t = modulation_constants(&s.channel, 1).unwrap();
        let a = Assignment::new((0..ni).map(|i| Link { user: i, modulation: 0, abs: i % 2, subcarrier: i }).collect());
        let prev = grid_placement(&s.area, 2, 1050.0);
        let cfg = GpConfig::default();
        let prog = assemble_gp(&s, &a, &t, &centroid_anchor(&s, &a, &t, &prev), &cfg).unwrap();
        let sol = solve_gp(&prog, &s, &cfg.solver).unwrap();
        let gp_true = total_power_with(&s, &t, &sol.placement, &a, Scheme::Generalized);
        let (_, direct) = nlp_cross_check(&s, &a, &t, 8, seed, Some(&prev)).unwrap();
        assert!(gp_true <= direct * 1.10, "seed {seed}: gp {gp_true} direct {direct}");
        assert!(sol.condensation_ratio <= 1.5);
        for (b, v) in prog.blocks.iter().zip(&sol.values) {
            for row in &b.problem.inequalities {
                assert!(row.eval(v) <= 1.0 + 1e-6);
            }
        }
    }
}

#[test]
fn pipeline_is_deterministic_and_never_worse_than_direct() {
    let s = scenario(&[(100.0, 100.0), (400.0, 900.0), (950.0, 200.0), (600.0, 600.0)], 2, 2, 4);
    let t = modulation_constants(&s.channel, 2).unwrap();
    let a = Assignment::new(vec![
        Link { user: 0, modulation: 0, abs: 0, subcarrier: 0 },
        Link { user: 1, modulation: 1, abs: 0, subcarrier: 1 },
        Link { user: 2, modulation: 0, abs: 1, subcarrier: 2 },
        Link { user: 3, modulation: 1, abs: 1, subcarrier: 3 },
    ]);
    let prev = Placement::new(vec![AbsPosition { x: 300.0, y: 300.0, h: 500.0 }, AbsPosition { x: 700.0, y: 500.0, h: 800.0 }]);
    let cfg = GeneralizedConfig::default();
    let out = solve_generalized_placement(&s, &a, &t, &prev, &cfg).unwrap();
    assert!(out.objective <= out.direct_objective);
    assert_eq!(out.objective, total_power_with(&s, &t, &out.placement, &a, Scheme::Generalized));
    let again = solve_generalized_placement(&s, &a, &t, &prev, &cfg).unwrap();
    assert_eq!(out, again);
}
