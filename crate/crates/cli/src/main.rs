//! `posetinfo`: coordinates, projections, decompositions and structure
//! learning for distributions on finite posets. Every run writes one JSON
//! report.
//!
//! Exit status: 0 on success, 1 for invalid input, 2 when a solver fails to
//! converge.

mod commands;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "posetinfo", version, about = "Information decomposition on finite posets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Outer-loop tolerance on θ residuals.
    #[arg(long, global = true, default_value_t = 1e-9)]
    theta_tol: f64,
    /// Cap on full sweeps of the mixed-distribution solver.
    #[arg(long, global = true, default_value_t = 10_000)]
    max_outer: usize,
    /// Worker threads for batch work; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    parallel: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// θ and η coordinates of a distribution.
    Coords(commands::CoordsArgs),
    /// Mixed distribution of (p, q) with respect to a subset.
    Project(commands::ProjectArgs),
    /// KL decomposition along a chain of subsets, or a Pythagorean split.
    Decompose(commands::DecomposeArgs),
    /// Entropy decomposition and information gain of a subset.
    Entropy(commands::EntropyArgs),
    /// Information gain and G-test for every single element.
    GainScan(commands::GainScanArgs),
    /// Subvaluation, weighted covering graph and poset distances.
    Metric(commands::MetricArgs),
    /// G-test of a θ knock-down.
    Gtest(commands::GtestArgs),
    /// Refined mutual information from a joint table.
    Mi(commands::MiArgs),
    /// Learn a poset and empirical distribution from data.
    Learn(commands::LearnArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Coords(_) => "coords",
            Command::Project(_) => "project",
            Command::Decompose(_) => "decompose",
            Command::Entropy(_) => "entropy",
            Command::GainScan(_) => "gain-scan",
            Command::Metric(_) => "metric",
            Command::Gtest(_) => "gtest",
            Command::Mi(_) => "mi",
            Command::Learn(_) => "learn",
        }
    }
}

/// A failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    status: u8,
    kind: &'static str,
    message: String,
    source: Option<String>,
}

impl Failure {
    pub fn input(message: impl Into<String>, source: Option<&Path>) -> Self {
        Failure {
            status: 1,
            kind: "invalid_input",
            message: message.into(),
            source: source.map(|p| p.display().to_string()),
        }
    }

    pub fn from_core(e: posetinfo::Error, source: Option<&Path>) -> Self {
        let solver = e.is_solver_failure();
        Failure {
            status: if solver { 2 } else { 1 },
            kind: if solver { "solver_failure" } else { "invalid_input" },
            message: e.to_string(),
            source: source.map(|p| p.display().to_string()),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;

pub fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read file: {e}"), Some(path)))
}

pub fn read_json(path: &Path) -> Outcome<Value> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Failure::input(format!("invalid JSON: {e}"), Some(path)))
}

pub struct Context {
    pub solver: posetinfo::SolverConfig,
    pub par: posetinfo::Parallelism,
}

fn run(cli: &Cli) -> Outcome<Value> {
    let ctx = Context {
        solver: posetinfo::SolverConfig {
            theta_tol: cli.common.theta_tol,
            max_outer: cli.common.max_outer,
            ..Default::default()
        },
        par: posetinfo::Parallelism::from_degree(cli.common.parallel),
    };
    if !(ctx.solver.theta_tol > 0.0) {
        return Err(Failure::input("--theta-tol must be positive", None));
    }
    if ctx.solver.max_outer == 0 {
        return Err(Failure::input("--max-outer must be positive", None));
    }
    let (args, result) = match &cli.command {
        Command::Coords(a) => (to_value(a), commands::coords(a, &ctx)?),
        Command::Project(a) => (to_value(a), commands::project(a, &ctx)?),
        Command::Decompose(a) => (to_value(a), commands::decompose(a, &ctx)?),
        Command::Entropy(a) => (to_value(a), commands::entropy(a, &ctx)?),
        Command::GainScan(a) => (to_value(a), commands::gain_scan(a, &ctx)?),
        Command::Metric(a) => (to_value(a), commands::metric(a, &ctx)?),
        Command::Gtest(a) => (to_value(a), commands::gtest(a, &ctx)?),
        Command::Mi(a) => (to_value(a), commands::mi(a, &ctx)?),
        Command::Learn(a) => (to_value(a), commands::learn(a, &ctx)?),
    };
    let mut config = json!({
        "solver": ctx.solver,
        "parallelism": ctx.par,
        "parallel_available": posetinfo::Parallelism::available(),
        "output": cli.common.output,
    });
    if let (Value::Object(c), Value::Object(a)) = (&mut config, args) {
        c.extend(a);
    }
    let mut report = serde_json::Map::new();
    report.insert("command".into(), json!(cli.command.name()));
    report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    report.insert("config".into(), config);
    match result {
        Value::Object(fields) => report.extend(fields),
        other => {
            report.insert("result".into(), other);
        }
    }
    Ok(Value::Object(report))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn emit(report: &Value, output: Option<&Path>) -> Outcome<()> {
    let text = serde_json::to_string_pretty(report).expect("reports are plain JSON") + "\n";
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("cannot write report: {e}"), Some(path))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli).and_then(|report| emit(&report, cli.common.output.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let report = json!({
                "command": cli.command.name(),
                "version": env!("CARGO_PKG_VERSION"),
                "error": { "kind": f.kind, "message": f.message, "source": f.source },
            });
            eprintln!("{}", serde_json::to_string_pretty(&report).expect("plain JSON"));
            ExitCode::from(f.status)
        }
    }
}
