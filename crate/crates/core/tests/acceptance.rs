//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::Instant;

use abs3d::bilp::{build_costs, greedy_initial_assignment, initial_placement, solve_bilp};
use abs3d::experiments::{generate_scenario, run_sweep, summarize, write_csv, GroupSummary, ResultRow, ScenarioParams, SweepSpec};
use abs3d::gp::{assemble_gp, centroid_anchor, generalized_objective, nlp_cross_check, solve_gp, GpConfig};
use abs3d::model::{
    average_pathloss, ber_mpsk, distance, modulation_constants, pathloss, total_power_with, transmit_power, AbsPosition,
    Area, Assignment, ChannelParams, LinkKind, Placement, Scenario, Scheme, SubcarrierMode, User,
};
use abs3d::optimizer::{run_alternating, AlternatingConfig, RunTrace};
use abs3d::oracle::{check_assignment, enumerate_assignments, grid_search_placement, GridSpec};
use abs3d::sdr::{assemble_qcqp, homogenize, solve_los_placement, SdrConfig};
use abs3d::Error;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// tolerances and budgets
const ASSEMBLY_REL: f64 = 1e-10;
const ASSEMBLY_SECS: f64 = 1.0;
const TARGET_BER: f64 = 1e-8;
const BER_REL: f64 = 1e-9;
const BER_SECS: f64 = 1.0;
const BLP_MIN_INSTANCES: usize = 200;
const BLP_REL: f64 = 1e-12;
const BLP_SECS: f64 = 30.0;
const SDR_GAP: f64 = 0.03;
const SDR_GRID_M: f64 = 10.0;
const SDR_SEEDS: u64 = 10;
const SDR_SECS: f64 = 60.0;
const TREND_USERS: usize = 40;
const TREND_ABS: [usize; 4] = [2, 3, 4, 5];
const TREND_SEEDS: u64 = 20;
const TREND_SECS: f64 = 15.0 * 60.0;
const BASELINE_SHARE: f64 = 0.95;
const DOMINANCE_INSTANCES: usize = 200;
const MONOTONE_INSTANCES: u64 = 50;
const MAX_OUTER: usize = 30;
const GP_INSTANCES: u64 = 20;
const GP_AGREEMENT: f64 = 0.10;
const GRADIENT_POINTS: usize = 50;
const GRADIENT_REL: f64 = 1e-5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_scenario(r: &mut ChaCha8Rng, users: usize, abs: usize, mods: usize, subcarriers: usize) -> Scenario {
    Scenario {
        users: (0..users).map(|_| User { x: r.random_range(1.0..1001.0), y: r.random_range(1.0..1001.0) }).collect(),
        num_abs: abs,
        modulation_count: mods,
        subcarriers,
        rate_threshold: (0..users).map(|_| 2.5e5 * r.random_range(1..=5) as f64).collect(),
        symbol_rate: 2.5e5,
        h_min: 100.0,
        h_max: 2000.0,
        area: Area::square(1002.0),
        mode: if r.random_bool(0.5) { SubcarrierMode::Global } else { SubcarrierMode::PerAbs },
        channel: ChannelParams::urban(),
    }
}

fn random_placement(r: &mut ChaCha8Rng, abs: usize) -> Placement {
    Placement::new(
        (0..abs)
            .map(|_| AbsPosition { x: r.random_range(0.0..1002.0), y: r.random_range(0.0..1002.0), h: r.random_range(100.0..1500.0) })
            .collect(),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn assembly_identity() -> Verdict {
    let clock = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ni = r.random_range(1..=8);
        let nj = r.random_range(1..=3);
        let mut s = random_scenario(&mut r, ni, nj, 2, ni);
        s.rate_threshold = vec![5e5; ni];
        let t = modulation_constants(&s.channel, 2).unwrap();
        let a = Assignment::new(
            (0..ni)
                .map(|i| abs3d::model::Link { user: i, modulation: r.random_range(0..2), abs: r.random_range(0..nj), subcarrier: i })
                .collect(),
        );
        let Ok(q) = assemble_qcqp(&s, &a, &t) else { continue };
        let hom = homogenize(&q);
        let p = random_placement(&mut r, nj);
        let v = DVector::from_iterator(3 * nj, p.positions.iter().flat_map(|q| [q.x, q.y, q.h]));
        let direct = total_power_with(&s, &t, &p, &a, Scheme::Los);
        let u = v.clone().insert_row(3 * nj, 1.0);
        let lifted = 0.5 * u.dot(&(&hom.t0 * &u)) + hom.r0;
        worst = worst.max(rel(q.objective(&v), direct)).max(rel(lifted, direct));
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(worst < ASSEMBLY_REL && secs < ASSEMBLY_SECS, format!("max rel err {worst:.2e} (< {ASSEMBLY_REL:e}), {secs:.3} s"))
}

fn ber_round_trip() -> Verdict {
    let clock = Instant::now();
    let ch = ChannelParams::urban();
    let t = modulation_constants(&ch, 2).unwrap();
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let u = User { x: r.random_range(1.0..1001.0), y: r.random_range(1.0..1001.0) };
        let p = AbsPosition { x: r.random_range(0.0..1002.0), y: r.random_range(0.0..1002.0), h: r.random_range(100.0..2000.0) };
        let k = r.random_range(0..2);
        let scheme = if r.random_bool(0.5) { Scheme::Los } else { Scheme::Generalized };
        let tx = transmit_power(&u, k, &p, 2.5e5, &ch, &t, scheme);
        let loss_db = match scheme {
            Scheme::Los => pathloss(distance(&u, &p), &ch, LinkKind::Los).unwrap(),
            Scheme::Generalized => average_pathloss(&u, &p, &ch).unwrap(),
        };
        let ber = ber_mpsk(tx / 10f64.powf(loss_db / 10.0), k, 2.5e5, &ch);
        worst = worst.max(rel(ber, TARGET_BER));
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(worst < BER_REL && secs < BER_SECS, format!("max rel err {worst:.2e} (< {BER_REL:e}), {secs:.3} s"))
}

fn blp_exactness() -> Verdict {
    let clock = Instant::now();
    let mut r = rng(3);
    let (mut feasible, mut infeasible, mut mismatches) = (0, 0, Vec::new());
    for n in 0..700 {
        let (ni, nj, nm, nl) = (r.random_range(1..=3), r.random_range(1..=2), r.random_range(1..=2), r.random_range(1..=3));
        let s = random_scenario(&mut r, ni, nj, nm, nl);
        let p = random_placement(&mut r, nj);
        let scheme = if n % 2 == 0 { Scheme::Los } else { Scheme::Generalized };
        let t = modulation_constants(&s.channel, nm).unwrap();
        let fast = solve_bilp(&build_costs(&s, &p, &t, scheme));
        let slow = enumerate_assignments(&s, &p, scheme);
        match (fast, slow) {
            (Ok(f), Ok((_, v))) => {
                feasible += 1;
                if rel(f.objective, v) > BLP_REL || check_assignment(&s, &p, &f.assignment, scheme).is_err() {
                    mismatches.push(n);
                }
            }
            (Err(Error::Infeasible(_)), Err(Error::Infeasible(_))) => infeasible += 1,
            _ => mismatches.push(n),
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let total = feasible + infeasible;
    verdict(
        mismatches.is_empty() && feasible >= BLP_MIN_INSTANCES && secs < BLP_SECS,
        format!("{total} instances ({feasible} feasible, {infeasible} infeasible), mismatches {mismatches:?}, {secs:.1} s"),
    )
}

fn sdr_quality() -> Verdict {
    let clock = Instant::now();
    let (mut worst_gap, mut bound_ok) = (f64::NEG_INFINITY, true);
    for seed in 0..SDR_SEEDS {
        let s = generate_scenario(&ScenarioParams { users: 5, num_abs: 1, ..ScenarioParams::default() }, seed).unwrap();
        let t = modulation_constants(&s.channel, 1).unwrap();
        let a = greedy_initial_assignment(&s, seed).unwrap();
        let cfg = SdrConfig { seed, ..SdrConfig::default() };
        let out = solve_los_placement(&s, &a, &t, &initial_placement(&s), &cfg).unwrap();
        let (_, grid) = grid_search_placement(&s, &a, Scheme::Los, GridSpec::uniform(SDR_GRID_M)).unwrap();
        worst_gap = worst_gap.max(out.objective / grid - 1.0);
        bound_ok &= out.lower_bound <= out.objective && out.lower_bound <= grid;
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        worst_gap <= SDR_GAP && bound_ok && secs < SDR_SECS,
        format!("worst gap to {SDR_GRID_M} m grid {:+.3}% (<= {}%), bound holds: {bound_ok}, {secs:.1} s", 100.0 * worst_gap, 100.0 * SDR_GAP),
    )
}

fn trend_spec() -> SweepSpec {
    SweepSpec {
        abs_counts: TREND_ABS.to_vec(),
        users: TREND_USERS,
        modulation_sets: vec![1, 2],
        schemes: vec![Scheme::Los, Scheme::Generalized],
        seeds: TREND_SEEDS,
        ..SweepSpec::default()
    }
}

fn csv_bytes(rows: &[ResultRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).unwrap();
    buf
}

fn group(g: &[GroupSummary], scheme: Scheme, mods: usize) -> Vec<&GroupSummary> {
    let mut v: Vec<&GroupSummary> = g.iter().filter(|s| s.scheme == scheme && s.mods == mods).collect();
    v.sort_by_key(|s| s.abs);
    v
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt_series(v: &[f64], scale: f64) -> String {
    v.iter().map(|x| format!("{:.1}", x * scale)).collect::<Vec<_>>().join(" > ")
}

fn altitude_trend(rows: &[ResultRow], secs: f64) -> Verdict {
    let g = summarize(rows);
    let failures = rows.iter().filter(|r| !r.is_ok()).count();
    let mut pass = failures == 0 && secs < TREND_SECS;
    let mut parts = Vec::new();
    for mods in [1, 2] {
        let los: Vec<f64> = group(&g, Scheme::Los, mods).iter().map(|s| s.mean_altitude_m).collect();
        let gen: Vec<f64> = group(&g, Scheme::Generalized, mods).iter().map(|s| s.mean_altitude_m).collect();
        pass &= los.len() == TREND_ABS.len() && gen.len() == TREND_ABS.len();
        pass &= strictly_decreasing(&los) && strictly_decreasing(&gen);
        pass &= gen.iter().zip(&los).all(|(g, l)| g <= l);
        parts.push(format!("mods {mods}: los {} m, generalized {} m", fmt_series(&los, 1.0), fmt_series(&gen, 1.0)));
    }
    verdict(pass, format!("{}; {failures} failed runs, sweep {secs:.0} s", parts.join("; ")))
}

fn power_trend(rows: &[ResultRow]) -> Verdict {
    let g = summarize(rows);
    let mut pass = true;
    let mut parts = Vec::new();
    for mods in [1, 2] {
        let los: Vec<f64> = group(&g, Scheme::Los, mods).iter().map(|s| s.mean_power_w).collect();
        let gen: Vec<f64> = group(&g, Scheme::Generalized, mods).iter().map(|s| s.mean_power_w).collect();
        pass &= strictly_decreasing(&los) && strictly_decreasing(&gen);
        pass &= gen.iter().zip(&los).all(|(g, l)| g <= l);
        parts.push(format!("mods {mods}: los {} mW, generalized {} mW", fmt_series(&los, 1e3), fmt_series(&gen, 1e3)));
    }
    let feasible: usize = g.iter().map(|s| s.baseline_feasible).sum();
    let beaten: usize = g.iter().map(|s| s.baseline_beaten).sum();
    let share = if feasible == 0 { 0.0 } else { beaten as f64 / feasible as f64 };
    pass &= feasible > 0 && share >= BASELINE_SHARE;
    verdict(pass, format!("{}; at or below the 550 m baseline on {beaten}/{feasible} feasible runs", parts.join("; ")))
}

fn modulation_dominance(rows: &[ResultRow]) -> Verdict {
    let mut r = rng(7);
    let (mut compared, mut strict, mut violations) = (0, 0, 0);
    for n in 0..DOMINANCE_INSTANCES {
        let ni = r.random_range(1..=6);
        let nj = r.random_range(1..=3);
        let nl = r.random_range(ni..=2 * ni + 2);
        let s1 = random_scenario(&mut r, ni, nj, 1, nl);
        let s2 = Scenario { modulation_count: 2, ..s1.clone() };
        let p = random_placement(&mut r, nj);
        let scheme = if n % 2 == 0 { Scheme::Los } else { Scheme::Generalized };
        let t2 = modulation_constants(&s2.channel, 2).unwrap();
        let t1 = modulation_constants(&s1.channel, 1).unwrap();
        let one = solve_bilp(&build_costs(&s1, &p, &t1, scheme));
        let two = solve_bilp(&build_costs(&s2, &p, &t2, scheme));
        match (one, two) {
            (Ok(a), Ok(b)) => {
                compared += 1;
                if b.objective > a.objective * (1.0 + BLP_REL) {
                    violations += 1;
                } else if b.objective < a.objective * (1.0 - BLP_REL) {
                    strict += 1;
                }
            }
            (Ok(_), Err(_)) => violations += 1,
            _ => {}
        }
    }
    let g = summarize(rows);
    let (one, two) = (group(&g, Scheme::Los, 1), group(&g, Scheme::Los, 2));
    let (gone, gtwo) = (group(&g, Scheme::Generalized, 1), group(&g, Scheme::Generalized, 2));
    let sweep_ok = one.len() == two.len()
        && gone.len() == gtwo.len()
        && one.iter().zip(&two).chain(gone.iter().zip(&gtwo)).all(|(a, b)| b.mean_power_w <= a.mean_power_w);
    verdict(
        violations == 0 && compared > 0 && sweep_ok,
        format!("fixed placements: {compared} compared, {strict} strictly cheaper with 8PSK, {violations} violations; sweep means {{1,2}} <= {{1}} at every J: {sweep_ok}"),
    )
}

fn monotone_runs() -> (Verdict, Vec<RunTrace>) {
    let mut traces = Vec::new();
    let (mut bad, mut longest, mut failed) = (Vec::new(), 0, 0);
    for seed in 0..MONOTONE_INSTANCES {
        let mut r = rng(1000 + seed);
        let params = ScenarioParams {
            users: r.random_range(2..=15),
            num_abs: r.random_range(1..=3),
            modulation_count: r.random_range(1..=2),
            ..ScenarioParams::default()
        };
        let s = generate_scenario(&params, seed).unwrap();
        let scheme = if seed % 2 == 0 { Scheme::Los } else { Scheme::Generalized };
        match run_alternating(&s, &AlternatingConfig { scheme, seed, max_iters: MAX_OUTER, ..AlternatingConfig::default() }) {
            Ok(out) => {
                let objs = out.trace.accepted_objectives();
                if !objs.windows(2).all(|w| w[1] <= w[0]) {
                    bad.push(seed);
                }
                longest = longest.max(out.trace.iterations());
                traces.push(out.trace);
            }
            Err(_) => failed += 1,
        }
    }
    let v = verdict(
        bad.is_empty() && failed == 0 && longest <= MAX_OUTER,
        format!("{} runs, non-monotone {bad:?}, failed {failed}, longest {longest} iterations (<= {MAX_OUTER})", MONOTONE_INSTANCES),
    );
    (v, traces)
}

fn coord(q: &mut Placement, k: usize) -> &mut f64 {
    let pos = &mut q.positions[k / 3];
    match k % 3 {
        0 => &mut pos.x,
        1 => &mut pos.y,
        _ => &mut pos.h,
    }
}

fn gp_fidelity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for seed in 0..GP_INSTANCES {
        let mut r = rng(2000 + seed);
        let params = ScenarioParams { users: r.random_range(2..=20), num_abs: r.random_range(1..=3), ..ScenarioParams::default() };
        let s = generate_scenario(&params, seed).unwrap();
        let t = modulation_constants(&s.channel, 1).unwrap();
        let start = initial_placement(&s);
        let Ok(sol) = solve_bilp(&build_costs(&s, &start, &t, Scheme::Generalized)) else {
            failures += 1;
            continue;
        };
        let a = sol.assignment;
        let cfg = GpConfig::default();
        let gp = assemble_gp(&s, &a, &t, &centroid_anchor(&s, &a, &t, &start), &cfg).and_then(|p| solve_gp(&p, &s, &cfg.solver));
        let direct = nlp_cross_check(&s, &a, &t, 8, seed, Some(&start));
        match (gp, direct) {
            (Ok(g), Ok((_, d))) => worst = worst.max(rel(total_power_with(&s, &t, &g.placement, &a, Scheme::Generalized), d)),
            _ => failures += 1,
        }
    }

    let mut r = rng(9);
    let mut grad_worst: f64 = 0.0;
    for _ in 0..GRADIENT_POINTS {
        let ni = r.random_range(1..=10);
        let nj = r.random_range(1..=3);
        let mut s = random_scenario(&mut r, ni, nj, 2, ni);
        s.rate_threshold = vec![5e5; ni];
        let t = modulation_constants(&s.channel, 2).unwrap();
        let a = Assignment::new(
            (0..ni)
                .map(|i| abs3d::model::Link { user: i, modulation: r.random_range(0..2), abs: r.random_range(0..nj), subcarrier: i })
                .collect(),
        );
        let p = random_placement(&mut r, nj);
        let (_, g) = generalized_objective(&s, &a, &t, &p);
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..3 * nj {
            let (mut up, mut dn) = (p.clone(), p.clone());
            let step = 1e-4 * coord(&mut p.clone(), k).abs().max(1.0);
            *coord(&mut up, k) += step;
            *coord(&mut dn, k) -= step;
            let fd = (generalized_objective(&s, &a, &t, &up).0 - generalized_objective(&s, &a, &t, &dn).0) / (2.0 * step);
            if scale > 0.0 {
                grad_worst = grad_worst.max((fd - g[k]).abs() / scale);
            }
        }
    }
    verdict(
        worst <= GP_AGREEMENT && failures == 0 && grad_worst <= GRADIENT_REL,
        format!(
            "GP vs direct worst rel gap {:.2}% (<= {}%) over {GP_INSTANCES} instances, {failures} failures; gradient worst rel err {grad_worst:.2e} (<= {GRADIENT_REL:e}) at {GRADIENT_POINTS} points",
            100.0 * worst,
            100.0 * GP_AGREEMENT
        ),
    )
}

fn determinism(first_csv: &[u8], traces: &[RunTrace]) -> Verdict {
    let rows: Vec<ResultRow> = run_sweep(&trend_spec()).unwrap().into_iter().map(|r| r.row).collect();
    let sweep_same = csv_bytes(&rows) == first_csv;
    let (_, again) = monotone_runs();
    let traces_same = serde_json::to_vec(traces).unwrap() == serde_json::to_vec(&again).unwrap();
    verdict(
        sweep_same && traces_same,
        format!("sweep CSV byte-identical: {sweep_same} ({} bytes); run traces identical: {traces_same}", first_csv.len()),
    )
}

fn main() {
    let mut results: Vec<(u8, &str, Verdict)> = Vec::new();
    let mut report = |n: u8, title: &'static str, v: Verdict| {
        println!("criterion {n:>2} [{}] {title}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, title, v));
    };
    report(1, "assembly identity", assembly_identity());
    report(2, "BER round trip", ber_round_trip());
    report(3, "BLP exactness", blp_exactness());
    report(4, "SDR quality", sdr_quality());

    let clock = Instant::now();
    let rows: Vec<ResultRow> = run_sweep(&trend_spec()).unwrap().into_iter().map(|r| r.row).collect();
    let secs = clock.elapsed().as_secs_f64();
    let first_csv = csv_bytes(&rows);
    report(5, "altitude falls with J", altitude_trend(&rows, secs));
    report(6, "power falls with J", power_trend(&rows));
    report(7, "two modulation orders dominate", modulation_dominance(&rows));
    let (monotone, traces) = monotone_runs();
    report(8, "monotone and terminating", monotone);
    report(9, "GP fidelity", gp_fidelity());
    report(10, "determinism", determinism(&first_csv, &traces));

    let failed: Vec<u8> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
