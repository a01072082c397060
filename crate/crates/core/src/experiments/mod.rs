//! Scenario generation, parameter sweeps and CSV export.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Area, Assignment, ChannelParams, Placement, Scenario, Scheme, SubcarrierMode, User};
use crate::optimizer::{fixed_abs_baseline, run_alternating, AlternatingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelPreset {
    #[default]
    Urban,
}

impl ChannelPreset {
    pub fn params(self) -> ChannelParams {
        match self {
            ChannelPreset::Urban => ChannelParams::urban(),
        }
    }
}

/// Everything about a generated scenario except the user draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub users: usize,
    pub num_abs: usize,
    pub modulation_count: usize,
    /// Defaults to one subcarrier per user.
    pub subcarriers: Option<usize>,
    /// Side of the square deployment area, m.
    pub area_side: f64,
    /// Shift applied to every coordinate so none is zero, m.
    pub pad: f64,
    /// Per-user minimum rate, bit/s.
    pub rate_threshold: f64,
    pub symbol_rate: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub mode: SubcarrierMode,
    pub channel: ChannelPreset,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            users: 40,
            num_abs: 2,
            modulation_count: 1,
            subcarriers: None,
            area_side: 1000.0,
            pad: 1.0,
            rate_threshold: 5e5,
            symbol_rate: 2.5e5,
            h_min: 100.0,
            h_max: 2000.0,
            mode: SubcarrierMode::Global,
            channel: ChannelPreset::Urban,
        }
    }
}

/// Users uniform over the square, shifted by `pad`. The draw depends only on
/// `seed` and the user count, so scenarios that differ in ABS count or
/// modulation set share their users.
pub fn generate_scenario(params: &ScenarioParams, seed: u64) -> Result<Scenario> {
    if params.users == 0 {
        return Err(Error::InvalidParameter("at least one user is required".into()));
    }
    if !(params.area_side > 0.0 && params.pad > 0.0) {
        return Err(Error::InvalidParameter("area side and pad must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = params.area_side;
    let users = (0..params.users)
        .map(|_| User { x: rng.random_range(0.0..side) + params.pad, y: rng.random_range(0.0..side) + params.pad })
        .collect();
    let scenario = Scenario {
        users,
        num_abs: params.num_abs,
        modulation_count: params.modulation_count,
        subcarriers: params.subcarriers.unwrap_or(params.users),
        rate_threshold: vec![params.rate_threshold; params.users],
        symbol_rate: params.symbol_rate,
        h_min: params.h_min,
        h_max: params.h_max,
        area: Area::square(side + 2.0 * params.pad),
        mode: params.mode,
        channel: params.channel.params(),
    };
    scenario.validate()?;
    Ok(scenario)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub abs_counts: Vec<usize>,
    pub users: usize,
    /// Modulation set sizes: 1 is QPSK only, 2 adds 8PSK.
    pub modulation_sets: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub seeds: u64,
    pub first_seed: u64,
    pub record_wall_time: bool,
    pub output: Option<PathBuf>,
    pub scenario: ScenarioParams,
    /// Scheme and seed are overridden per cell.
    pub solver: AlternatingConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            abs_counts: vec![2, 3, 4, 5],
            users: 40,
            modulation_sets: vec![1, 2],
            schemes: vec![Scheme::Los, Scheme::Generalized],
            seeds: 20,
            first_seed: 0,
            record_wall_time: false,
            output: None,
            scenario: ScenarioParams::default(),
            solver: AlternatingConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.abs_counts.is_empty() || self.modulation_sets.is_empty() || self.schemes.is_empty() {
            return bad("abs_counts, modulation_sets and schemes must be nonempty");
        }
        if self.seeds == 0 {
            return bad("at least one seed is required");
        }
        if self.users == 0 || self.abs_counts.contains(&0) || self.modulation_sets.contains(&0) {
            return bad("user, ABS and modulation counts must be positive");
        }
        self.solver.validate()
    }

    /// Every (J, scheme, modulation set, seed) cell in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &abs in &self.abs_counts {
            for &scheme in &self.schemes {
                for &mods in &self.modulation_sets {
                    for seed in self.first_seed..self.first_seed + self.seeds {
                        cells.push(Cell { abs, scheme, mods, seed });
                    }
                }
            }
        }
        cells.sort();
        cells.dedup();
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub abs: usize,
    pub scheme: Scheme,
    pub mods: usize,
    pub seed: u64,
}

/// "1", "1+2", ... for a modulation set of the given size.
pub fn modulation_label(count: usize) -> String {
    (1..=count).map(|m| m.to_string()).collect::<Vec<_>>().join("+")
}

fn parse_modulation_label(s: &str) -> Result<usize> {
    let parts: Vec<&str> = s.split('+').collect();
    let ok = !parts.is_empty() && parts.iter().enumerate().all(|(k, p)| p.parse::<usize>() == Ok(k + 1));
    if ok {
        Ok(parts.len())
    } else {
        Err(Error::InvalidParameter(format!("bad modulation set {s:?}")))
    }
}

/// One CSV line. Power and altitude are empty when the run failed; the
/// baseline is empty when the fixed deployment is infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub seed: u64,
    pub scheme: Scheme,
    #[serde(rename = "J")]
    pub abs: usize,
    #[serde(rename = "I")]
    pub users: usize,
    #[serde(serialize_with = "ser_mods", deserialize_with = "de_mods")]
    pub mods: usize,
    pub total_power_w: Option<f64>,
    pub avg_altitude_m: Option<f64>,
    pub iters: usize,
    pub wall_ms: f64,
    pub baseline_power_w: Option<f64>,
    pub status: String,
}

fn ser_mods<S: serde::Serializer>(m: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&modulation_label(*m))
}

fn de_mods<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<usize, D::Error> {
    let s = String::deserialize(d)?;
    parse_modulation_label(&s).map_err(serde::de::Error::custom)
}

pub const STATUS_OK: &str = "ok";

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    fn cell(&self) -> Cell {
        Cell { abs: self.abs, scheme: self.scheme, mods: self.mods, seed: self.seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub row: ResultRow,
    /// Final placement and allocation of a successful run.
    pub solution: Option<(Placement, Assignment)>,
}

fn run_cell(spec: &SweepSpec, cell: Cell) -> SweepResult {
    let params = ScenarioParams { users: spec.users, num_abs: cell.abs, modulation_count: cell.mods, ..spec.scenario.clone() };
    let mut row = ResultRow {
        seed: cell.seed,
        scheme: cell.scheme,
        abs: cell.abs,
        users: spec.users,
        mods: cell.mods,
        total_power_w: None,
        avg_altitude_m: None,
        iters: 0,
        wall_ms: 0.0,
        baseline_power_w: None,
        status: STATUS_OK.into(),
    };
    let scenario = match generate_scenario(&params, cell.seed) {
        Ok(s) => s,
        Err(e) => {
            row.status = format!("error: {e}");
            return SweepResult { row, solution: None };
        }
    };
    let cfg = AlternatingConfig { scheme: cell.scheme, seed: cell.seed, ..spec.solver };
    let clock = Instant::now();
    let outcome = run_alternating(&scenario, &cfg);
    if spec.record_wall_time {
        row.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    }
    row.baseline_power_w = fixed_abs_baseline(&scenario, cell.scheme).ok().map(|b| b.objective);
    match outcome {
        Ok(out) => {
            row.total_power_w = Some(out.objective);
            row.avg_altitude_m = Some(out.placement.average_altitude(&out.assignment));
            row.iters = out.trace.iterations();
            SweepResult { row, solution: Some((out.placement, out.assignment)) }
        }
        Err(e) => {
            row.status = format!("error: {e}");
            SweepResult { row, solution: None }
        }
    }
}

/// Runs every cell in parallel. Failed cells become annotated rows; results
/// come back sorted by (J, scheme, modulation set, seed).
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepResult>> {
    spec.validate()?;
    let mut out: Vec<SweepResult> = spec.cells().into_par_iter().map(|c| run_cell(spec, c)).collect();
    out.sort_by_key(|r| r.row.cell());
    Ok(out)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("nothing to export".into()));
    }
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn export_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Seed means of one (scheme, J, modulation set) group over its successful rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupSummary {
    pub scheme: Scheme,
    pub abs: usize,
    pub mods: usize,
    pub runs: usize,
    pub mean_power_w: f64,
    pub mean_altitude_m: f64,
    /// Runs with a feasible baseline.
    pub baseline_feasible: usize,
    /// Of those, runs at or below the baseline.
    pub baseline_beaten: usize,
}

pub fn summarize(rows: &[ResultRow]) -> Vec<GroupSummary> {
    let mut groups: BTreeMap<(Scheme, usize, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        groups.entry((r.scheme, r.abs, r.mods)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((scheme, abs, mods), rs)| {
            let n = rs.len() as f64;
            let power = |r: &&ResultRow| r.total_power_w.unwrap_or(f64::NAN);
            let with_baseline: Vec<_> = rs.iter().filter(|r| r.baseline_power_w.is_some()).collect();
            GroupSummary {
                scheme,
                abs,
                mods,
                runs: rs.len(),
                mean_power_w: rs.iter().map(power).sum::<f64>() / n,
                mean_altitude_m: rs.iter().map(|r| r.avg_altitude_m.unwrap_or(f64::NAN)).sum::<f64>() / n,
                baseline_feasible: with_baseline.len(),
                baseline_beaten: with_baseline.iter().filter(|r| power(r) <= r.baseline_power_w.unwrap()).count(),
            }
        })
        .collect()
}
