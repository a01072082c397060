//! Command-line front end: scenario generation, single runs, baselines,
//! sweeps and complexity estimates.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abs3d::experiments::{export_csv, generate_scenario, summarize, ResultRow, ScenarioParams, SweepSpec};
use abs3d::model::{Scenario, Scheme};
use abs3d::optimizer::{complexity_estimate, fixed_abs_baseline, run_alternating, AlternatingConfig, IpmParams};
use abs3d::Error;
use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "abs3d", version, about = "Placement and resource allocation for aerial base stations serving uplink IoT users")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random scenario and write it as JSON.
    Generate(GenerateArgs),
    /// Run the alternating optimization on a scenario.
    Solve(SolveArgs),
    /// Evaluate the fixed 550 m grid deployment.
    Baseline(BaselineArgs),
    /// Run a parameter sweep and export CSV.
    Sweep(SweepArgs),
    /// Print iteration-count estimates of each subproblem.
    Complexity(ComplexityArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 40)]
    users: usize,
    #[arg(long = "abs", default_value_t = 2)]
    num_abs: usize,
    /// Number of modulation orders (1 = QPSK, 2 = QPSK + 8PSK).
    #[arg(long, default_value_t = 1)]
    mods: usize,
    #[arg(long)]
    seed: u64,
    /// TOML file with scenario parameters; the flags above override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario JSON as written by `generate`.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "los")]
    scheme: Scheme,
    #[arg(long)]
    seed: u64,
    /// TOML file with solver settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    wall_time: bool,
    /// Write placement, allocation and trace here.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "generalized")]
    scheme: Scheme,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep specification; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "abs", value_delimiter = ',')]
    abs_counts: Option<Vec<usize>>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    mods: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    first_seed: Option<u64>,
    #[arg(long)]
    wall_time: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long)]
    users: usize,
    #[arg(long = "abs")]
    num_abs: usize,
    #[arg(long, default_value_t = 1)]
    mods: usize,
    /// Defaults to the user count.
    #[arg(long)]
    subcarriers: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    accuracy: f64,
    #[arg(long, default_value_t = 1e-3)]
    initial: f64,
    #[arg(long, default_value_t = 10.0)]
    growth: f64,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_scenario(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let s: Scenario = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    s.validate()?;
    Ok(s)
}

/// Pretty JSON to `out`, or to stdout when absent.
fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(a: GenerateArgs) -> anyhow::Result<()> {
    let base: ScenarioParams = match &a.config {
        Some(p) => read_toml(p)?,
        None => ScenarioParams::default(),
    };
    let params = ScenarioParams { users: a.users, num_abs: a.num_abs, modulation_count: a.mods, ..base };
    emit(&generate_scenario(&params, a.seed)?, a.out.as_deref())
}

fn solve(a: SolveArgs) -> anyhow::Result<()> {
    let scenario = read_scenario(&a.scenario)?;
    let mut cfg: AlternatingConfig = match &a.config {
        Some(p) => read_toml(p)?,
        None => AlternatingConfig::default(),
    };
    cfg.scheme = a.scheme;
    cfg.seed = a.seed;
    cfg.record_wall_time |= a.wall_time;
    if let Some(t) = a.max_iters {
        cfg.max_iters = t;
    }
    if let Some(s) = a.sigma {
        cfg.sigma = s;
    }
    let out = run_alternating(&scenario, &cfg)?;
    let summary = json!({
        "scheme": a.scheme,
        "total_power_w": out.objective,
        "avg_altitude_m": out.placement.average_altitude(&out.assignment),
        "iters": out.trace.iterations(),
        "status": out.trace.status,
    });
    match &a.out {
        Some(p) => {
            emit(&out, Some(p))?;
            emit(&summary, None)
        }
        None => emit(&json!({ "summary": summary, "solution": out }), None),
    }
}

fn baseline(a: BaselineArgs) -> anyhow::Result<()> {
    let scenario = read_scenario(&a.scenario)?;
    emit(&fixed_abs_baseline(&scenario, a.scheme)?, a.out.as_deref())
}

fn sweep(a: SweepArgs) -> anyhow::Result<bool> {
    let mut spec = match &a.config {
        Some(p) => SweepSpec::load(p)?,
        None => SweepSpec::default(),
    };
    if let Some(v) = a.abs_counts {
        spec.abs_counts = v;
    }
    if let Some(v) = a.users {
        spec.users = v;
    }
    if let Some(v) = a.mods {
        spec.modulation_sets = v;
    }
    if let Some(v) = a.schemes {
        spec.schemes = v;
    }
    if let Some(v) = a.seeds {
        spec.seeds = v;
    }
    if let Some(v) = a.first_seed {
        spec.first_seed = v;
    }
    spec.record_wall_time |= a.wall_time;
    if a.out.is_some() {
        spec.output = a.out;
    }
    let rows: Vec<ResultRow> = abs3d::experiments::run_sweep(&spec)?.into_iter().map(|r| r.row).collect();
    match &spec.output {
        Some(p) => export_csv(&rows, p)?,
        None => abs3d::experiments::write_csv(&rows, std::io::stdout().lock())?,
    }
    let failed: Vec<&ResultRow> = rows.iter().filter(|r| !r.is_ok()).collect();
    if spec.output.is_some() {
        emit(&summarize(&rows), None)?;
    }
    if failed.is_empty() {
        return Ok(true);
    }
    let report = json!({
        "error": format!("{} of {} runs failed", failed.len(), rows.len()),
        "kind": "partial-sweep",
        "failures": failed.iter().map(|r| json!({
            "seed": r.seed, "scheme": r.scheme, "J": r.abs, "mods": r.mods, "status": r.status,
        })).collect::<Vec<_>>(),
    });
    eprintln!("{report}");
    Ok(false)
}

fn complexity(a: ComplexityArgs) -> anyhow::Result<()> {
    let positive = a.users > 0 && a.num_abs > 0 && a.mods > 0 && a.subcarriers != Some(0);
    let ipm = IpmParams { accuracy: a.accuracy, initial: a.initial, growth: a.growth };
    if !positive || !(ipm.accuracy > 0.0 && ipm.initial > 0.0 && ipm.growth > 1.0) {
        return Err(Error::InvalidParameter("counts must be positive, accuracies positive and growth above 1".into()).into());
    }
    let report = complexity_estimate(a.users, a.num_abs, a.mods, a.subcarriers.unwrap_or(a.users), &ipm);
    emit(&report, None)
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    match e.downcast_ref::<Error>() {
        Some(Error::InvalidParameter(_)) => "invalid-parameter",
        Some(Error::Domain(_)) => "domain",
        Some(Error::ModulationOrder { .. }) => "modulation-order",
        Some(Error::EmptyCoverage) => "empty-coverage",
        Some(Error::Irreparable { .. }) => "irreparable",
        Some(Error::RandomizationFailed { .. }) => "randomization-failed",
        Some(Error::Sdp(_)) => "sdp",
        Some(Error::FitRejected { .. }) => "fit-rejected",
        Some(Error::Gp(_)) => "geometric-program",
        Some(Error::Infeasible(_)) => "infeasible",
        Some(Error::TooLarge { .. }) => "too-large",
        Some(Error::Io(_)) => "io",
        None if e.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "input",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a).map(|_| true),
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Baseline(a) => baseline(a).map(|_| true),
        Command::Sweep(a) => sweep(a),
        Command::Complexity(a) => complexity(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{}", json!({ "error": format!("{e:#}"), "kind": error_kind(&e) }));
            ExitCode::FAILURE
        }
    }
}
