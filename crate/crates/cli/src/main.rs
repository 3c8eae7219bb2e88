//! Command-line front end: run one solver on a built-in example, compare a
//! set of algorithms on the same instance, or check current behavior against
//! golden convergence histories.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use bregsfp::{
    feasibility_gap, make_bundle, run_algorithm, run_experiment, Algorithm, AnchorMode,
    CellRun, ConfigOverrides, Error, ExampleBundle, ExampleChoice, ExperimentReport,
    ExperimentSpec, IterationRecord, MuSchedule, SolveStatus, SolverConfig,
};

const EXIT_OK: i32 = 0;
const EXIT_ARGS: i32 = 1;
const EXIT_UNCONVERGED: i32 = 2;
const EXIT_RUNTIME: i32 = 3;
const EXIT_ALL_CELLS_FAILED: i32 = 4;
const EXIT_GOLDEN_MISMATCH: i32 = 5;

/// Column layout of every history file this tool reads or writes.
const HISTORY_HEADER: &str = "iter,residual,dist_C,gap_Q,step,backtracks";

/// Relative tolerance for golden-history comparisons.
const GOLDEN_RTOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "bregsfp", version, about = "Bregman projection solvers for split feasibility problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one example instance and write its history
    Solve(SolveArgs),
    /// Run several algorithms on the same instance and tabulate the results
    Compare(CompareArgs),
    /// Re-run pinned instances and compare against golden histories
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Example family: 1 (random Gaussian feasibility), 2 (sine multiplier
    /// on a grid), 3 (box-constrained lasso)
    #[arg(long)]
    example: u8,
    /// Column count for examples 1 and 3
    #[arg(long)]
    n: Option<usize>,
    /// Row count for example 3
    #[arg(long)]
    m: Option<usize>,
    /// Grid points for example 2
    #[arg(long)]
    grid: Option<usize>,
    /// L1 weight for example 3
    #[arg(long)]
    mu: Option<f64>,
    /// Instance seed
    #[arg(long)]
    seed: Option<u64>,
    /// Full-size dimensions (n = 1000, grid = 1024, m x n = 500 x 1000)
    /// instead of the quick defaults (100, 128, 50 x 100)
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct SolverArgs {
    /// Residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration budget
    #[arg(long)]
    max_iter: Option<usize>,
    /// Inertia weight
    #[arg(long)]
    beta: Option<f64>,
    /// Line search acceptance fraction, in (0,1)
    #[arg(long)]
    tau: Option<f64>,
    /// Initial line search step
    #[arg(long)]
    iota0: Option<f64>,
    /// Forward gradient step length
    #[arg(long)]
    eta: Option<f64>,
    /// Constant anchor weight instead of the 1/(n+1) schedule
    #[arg(long)]
    mu_anchor: Option<f64>,
    /// Anchor point: latest or initial
    #[arg(long)]
    anchor: Option<String>,
    /// Plain key=value file supplying defaults for any of the flags above
    /// plus n, m, grid, mu, seed; command-line flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Algorithm: alg1, alg2, cq, icq, or proxgrad
    #[arg(long)]
    algorithm: String,
    /// Directory for history.csv and summary.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated algorithm list, e.g. alg1,alg2,cq,icq
    #[arg(long)]
    algorithms: String,
    /// Repeated runs of every cell, for wall-clock statistics
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    /// Summary table format
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Directory for the summary table and per-algorithm histories
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory holding manifest.json and the golden history files
    #[arg(long, default_value = "goldens")]
    goldens: PathBuf,
    /// Rewrite the golden histories from the current build instead of checking
    #[arg(long)]
    update: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

/// A fully resolved compare invocation.
struct RunManifest {
    spec: ExperimentSpec,
    out_dir: PathBuf,
    format: OutputFormat,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn args(message: impl Into<String>) -> Self {
        Self { code: EXIT_ARGS, message: message.into() }
    }

    fn io(what: &str, err: std::io::Error) -> Self {
        Self { code: EXIT_RUNTIME, message: format!("{what}: {err}") }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        // errors escaping a solver call come from input validation; mid-run
        // problems are folded into SolveStatus::Error by the solve loops
        let code = match e {
            Error::LineSearchFailure(_) => EXIT_RUNTIME,
            _ => EXIT_ARGS,
        };
        Self { code, message: e.to_string() }
    }
}

fn main() {
    env_logger::init();
    apply_thread_cap();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ARGS } else { EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Verify(args) => cmd_verify(args),
    };
    let code = outcome.unwrap_or_else(|f| {
        eprintln!("error: {}", f.message);
        f.code
    });
    std::process::exit(code);
}

fn apply_thread_cap() {
    if let Ok(raw) = std::env::var("BREGSFP_THREADS") {
        match raw.parse::<usize>() {
            Ok(t) if t > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => log::warn!("ignoring BREGSFP_THREADS={raw:?}: not a positive integer"),
        }
    }
}

// ---- config file and flag resolution ----

/// key=value lines, # comments, later occurrences win within the file.
fn parse_kv(text: &str) -> Result<HashMap<String, String>, String> {
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {} is not key=value: {raw:?}", idx + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value
        .parse()
        .map_err(|_| Failure::args(format!("config key {key}: cannot parse value {value:?}")))
}

fn fill<T: std::str::FromStr>(
    slot: &mut Option<T>,
    key: &str,
    map: &mut HashMap<String, String>,
) -> Result<(), Failure> {
    if let Some(value) = map.remove(key) {
        if slot.is_none() {
            *slot = Some(parse_value(key, &value)?);
        }
    }
    Ok(())
}

fn merge_config_file(problem: &mut ProblemArgs, solver: &mut SolverArgs) -> Result<(), Failure> {
    let Some(path) = solver.config.clone() else {
        return Ok(());
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::args(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map =
        parse_kv(&text).map_err(|e| Failure::args(format!("{}: {e}", path.display())))?;

    fill(&mut problem.n, "n", &mut map)?;
    fill(&mut problem.m, "m", &mut map)?;
    fill(&mut problem.grid, "grid", &mut map)?;
    fill(&mut problem.mu, "mu", &mut map)?;
    fill(&mut problem.seed, "seed", &mut map)?;
    fill(&mut solver.tol, "tol", &mut map)?;
    fill(&mut solver.max_iter, "max-iter", &mut map)?;
    fill(&mut solver.beta, "beta", &mut map)?;
    fill(&mut solver.tau, "tau", &mut map)?;
    fill(&mut solver.iota0, "iota0", &mut map)?;
    fill(&mut solver.eta, "eta", &mut map)?;
    fill(&mut solver.mu_anchor, "mu-anchor", &mut map)?;
    fill(&mut solver.anchor, "anchor", &mut map)?;

    if let Some(key) = map.keys().next() {
        return Err(Failure::args(format!("{}: unknown config key {key:?}", path.display())));
    }
    Ok(())
}

fn resolve_choice(p: &ProblemArgs) -> Result<ExampleChoice, Failure> {
    let full = p.full_scale;
    match p.example {
        1 => Ok(ExampleChoice::Example1 { n: p.n.unwrap_or(if full { 1000 } else { 100 }) }),
        2 => Ok(ExampleChoice::Example2 {
            grid_points: p.grid.unwrap_or(if full { 1024 } else { 128 }),
        }),
        3 => Ok(ExampleChoice::Example3 {
            m: p.m.unwrap_or(if full { 500 } else { 50 }),
            n: p.n.unwrap_or(if full { 1000 } else { 100 }),
            mu: p.mu.unwrap_or(0.1),
        }),
        other => Err(Failure::args(format!("unknown example '{other}' (expected 1, 2, or 3)"))),
    }
}

fn parse_anchor(raw: &str) -> Result<AnchorMode, Failure> {
    match raw {
        "latest" => Ok(AnchorMode::Latest),
        "initial" => Ok(AnchorMode::Initial),
        other => Err(Failure::args(format!("unknown anchor '{other}' (expected latest or initial)"))),
    }
}

fn build_overrides(s: &SolverArgs) -> Result<ConfigOverrides, Failure> {
    Ok(ConfigOverrides {
        tol: s.tol,
        max_iter: s.max_iter,
        beta: s.beta,
        tau: s.tau,
        iota0: s.iota0,
        eta: s.eta,
        mu_const: s.mu_anchor,
        anchor: s.anchor.as_deref().map(parse_anchor).transpose()?,
    })
}

fn prepared_run(
    choice: &ExampleChoice,
    seed: u64,
    overrides: &ConfigOverrides,
) -> Result<(ExampleBundle, SolverConfig), Error> {
    let bundle = make_bundle(choice, seed)?;
    let mut cfg = bundle.config.clone();
    overrides.apply(&mut cfg);
    Ok((bundle, cfg))
}

// ---- serialization ----

/// 17 significant digits, enough to reproduce any f64 exactly on re-parse.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn history_csv(history: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (history.len() + 1));
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            fmt_float(r.residual),
            fmt_float(r.dist_c),
            fmt_float(r.gap_q),
            fmt_float(r.step),
            r.backtracks
        ));
    }
    out
}

fn config_json(cfg: &SolverConfig) -> Value {
    let mu = match cfg.mu {
        MuSchedule::InverseLinear => json!("inverse-linear"),
        MuSchedule::Constant(c) => json!(c),
    };
    let bregsfp::BetaSchedule::Constant(beta) = cfg.beta;
    json!({
        "tol": cfg.tol,
        "max_iter": cfg.max_iter,
        "beta": beta,
        "beta_max": cfg.beta_max,
        "tau": cfg.tau,
        "eta": cfg.eta,
        "iota0": cfg.linesearch.iota0,
        "backtrack": cfg.linesearch.backtrack,
        "max_backtracks": cfg.linesearch.max_backtracks,
        "mu": mu,
        "anchor": match cfg.anchor {
            AnchorMode::Latest => "latest",
            AnchorMode::Initial => "initial",
        },
        "forward_step": match cfg.forward_step {
            bregsfp::ForwardStepMode::Auto => "auto",
            bregsfp::ForwardStepMode::LegendreGradient => "legendre-gradient",
            bregsfp::ForwardStepMode::Disabled => "disabled",
        },
        "lipschitz_sum": cfg.lipschitz_sum,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(&format!("writing {}", path.display()), e))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::io(&format!("creating directory {}", dir.display()), e))
}

fn status_exit(status: &SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIterations | SolveStatus::InfeasibleSuspected => EXIT_UNCONVERGED,
        SolveStatus::Error(_) => EXIT_RUNTIME,
    }
}

// ---- solve ----

fn cmd_solve(mut args: SolveArgs) -> Result<i32, Failure> {
    merge_config_file(&mut args.problem, &mut args.solver)?;
    let choice = resolve_choice(&args.problem)?;
    let seed = args.problem.seed.unwrap_or(0);
    let algorithm: Algorithm = args.algorithm.parse()?;
    let overrides = build_overrides(&args.solver)?;

    let (bundle, cfg) = prepared_run(&choice, seed, &overrides)?;
    let result = run_algorithm(algorithm, &bundle.instance, &cfg, &bundle.zeta0)?;
    let (dist_c, gap_q) = feasibility_gap(&bundle.instance, &result.final_point)?;

    ensure_dir(&args.out)?;
    write_text(&args.out.join("history.csv"), &history_csv(&result.history))?;
    let summary = json!({
        "example": choice.id(),
        "algorithm": algorithm.name(),
        "seed": seed,
        "n": choice.dim(),
        "status": result.status.to_string(),
        "iterations": result.iterations,
        "elapsed_seconds": result.elapsed,
        "final_dist_C": dist_c,
        "final_gap_Q": gap_q,
        "config": config_json(&cfg),
    });
    let mut text = serde_json::to_string_pretty(&summary)
        .map_err(|e| Failure { code: EXIT_RUNTIME, message: format!("summary serialization: {e}") })?;
    text.push('\n');
    write_text(&args.out.join("summary.json"), &text)?;

    println!(
        "{} {} seed {}: {} after {} iterations ({:.3} s), dist_C {:.3e}, gap_Q {:.3e}",
        choice.id(),
        algorithm.name(),
        seed,
        result.status,
        result.iterations,
        result.elapsed,
        dist_c,
        gap_q
    );
    Ok(status_exit(&result.status))
}

// ---- compare ----

fn cmd_compare(mut args: CompareArgs) -> Result<i32, Failure> {
    merge_config_file(&mut args.problem, &mut args.solver)?;
    let choice = resolve_choice(&args.problem)?;
    let seed = args.problem.seed.unwrap_or(0);
    let mut algorithms = Vec::new();
    for name in args.algorithms.split(',') {
        algorithms.push(name.trim().parse::<Algorithm>()?);
    }
    let manifest = RunManifest {
        spec: ExperimentSpec {
            example: choice,
            seed,
            algorithms,
            overrides: build_overrides(&args.solver)?,
            repetitions: args.repetitions,
        },
        out_dir: args.out,
        format: args.format,
    };

    let report = run_experiment(&manifest.spec)?;
    ensure_dir(&manifest.out_dir)?;

    for summary in &report.summaries {
        let first_ok = report.cells.iter().find_map(|c| match (&c.outcome, c.algorithm) {
            (Ok(solve), alg) if alg == summary.algorithm => Some(solve),
            _ => None,
        });
        if let Some(solve) = first_ok {
            let name = format!("history-{}.csv", summary.algorithm.name());
            write_text(&manifest.out_dir.join(name), &history_csv(&solve.result.history))?;
        }
    }

    match manifest.format {
        OutputFormat::Csv => {
            write_text(&manifest.out_dir.join("summary.csv"), &summary_table_csv(&report))?
        }
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(&report_json(&manifest.spec, &report))
                .map_err(|e| Failure {
                    code: EXIT_RUNTIME,
                    message: format!("summary serialization: {e}"),
                })?;
            text.push('\n');
            write_text(&manifest.out_dir.join("summary.json"), &text)?;
        }
    }

    print_table(&report);
    for cell in &report.cells {
        if let Err(msg) = &cell.outcome {
            eprintln!("cell {} rep {}: {}", cell.algorithm.name(), cell.repetition, msg);
        }
    }

    let any_ok = report.cells.iter().any(cell_completed);
    Ok(if any_ok { EXIT_OK } else { EXIT_ALL_CELLS_FAILED })
}

/// The cell produced a full run, whatever its status; aborted runs do not count.
fn cell_completed(cell: &CellRun) -> bool {
    matches!(&cell.outcome, Ok(s) if !matches!(s.result.status, SolveStatus::Error(_)))
}

fn opt_float_csv(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn summary_table_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "algorithm,runs,converged,median_iterations,mean_iterations,\
         median_elapsed_seconds,mean_elapsed_seconds,max_final_dist_C,max_final_gap_Q\n",
    );
    for s in &report.summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.algorithm.name(),
            s.runs,
            s.converged,
            opt_float_csv(s.median_iterations),
            opt_float_csv(s.mean_iterations),
            opt_float_csv(s.median_elapsed),
            opt_float_csv(s.mean_elapsed),
            opt_float_csv(s.max_final_dist_c),
            opt_float_csv(s.max_final_gap_q),
        ));
    }
    out
}

fn report_json(spec: &ExperimentSpec, report: &ExperimentReport) -> Value {
    let cells: Vec<Value> = report
        .cells
        .iter()
        .map(|cell| match &cell.outcome {
            Ok(s) => json!({
                "algorithm": cell.algorithm.name(),
                "repetition": cell.repetition,
                "status": s.result.status.to_string(),
                "iterations": s.result.iterations,
                "elapsed_seconds": s.result.elapsed,
                "final_dist_C": s.final_dist_c,
                "final_gap_Q": s.final_gap_q,
                "final_objective": s.final_objective,
            }),
            Err(msg) => json!({
                "algorithm": cell.algorithm.name(),
                "repetition": cell.repetition,
                "error": msg,
            }),
        })
        .collect();
    let summaries: Vec<Value> = report
        .summaries
        .iter()
        .map(|s| {
            json!({
                "algorithm": s.algorithm.name(),
                "runs": s.runs,
                "converged": s.converged,
                "median_iterations": s.median_iterations,
                "mean_iterations": s.mean_iterations,
                "median_elapsed_seconds": s.median_elapsed,
                "mean_elapsed_seconds": s.mean_elapsed,
                "max_final_dist_C": s.max_final_dist_c,
                "max_final_gap_Q": s.max_final_gap_q,
            })
        })
        .collect();
    json!({
        "example": spec.example.id(),
        "seed": spec.seed,
        "n": spec.example.dim(),
        "repetitions": spec.repetitions,
        "config": config_json(&report.resolved_config),
        "environment": {
            "package": report.environment.package,
            "version": report.environment.version,
            "os": report.environment.os,
            "threads": report.environment.threads,
        },
        "algorithms": summaries,
        "cells": cells,
    })
}

fn opt_human(v: Option<f64>, width: usize, precision: usize) -> String {
    match v {
        Some(x) => format!("{x:>width$.precision$}"),
        None => format!("{:>width$}", "-"),
    }
}

fn opt_human_exp(v: Option<f64>, width: usize) -> String {
    match v {
        Some(x) => format!("{x:>width$.2e}"),
        None => format!("{:>width$}", "-"),
    }
}

fn print_table(report: &ExperimentReport) {
    println!(
        "{:<10} {:>5} {:>10} {:>12} {:>14} {:>12} {:>12}",
        "algorithm", "runs", "converged", "iters(med)", "elapsed(med)s", "dist_C(max)", "gap_Q(max)"
    );
    for s in &report.summaries {
        println!(
            "{:<10} {:>5} {:>10} {} {} {} {}",
            s.algorithm.name(),
            s.runs,
            s.converged,
            opt_human(s.median_iterations, 12, 1),
            opt_human(s.median_elapsed, 14, 6),
            opt_human_exp(s.max_final_dist_c, 12),
            opt_human_exp(s.max_final_gap_q, 12),
        );
    }
}

// ---- verify ----

struct GoldenEntry {
    name: String,
    choice: ExampleChoice,
    seed: u64,
    algorithm: Algorithm,
    overrides: ConfigOverrides,
    history: PathBuf,
}

fn get_u64(obj: &Value, key: &str) -> Result<Option<u64>, Failure> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| Failure::args(format!("manifest key {key:?} is not an integer"))),
    }
}

fn get_f64(obj: &Value, key: &str) -> Result<Option<f64>, Failure> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Failure::args(format!("manifest key {key:?} is not a number"))),
    }
}

fn get_str(obj: &Value, key: &str) -> Result<String, Failure> {
    obj.get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| Failure::args(format!("manifest entry is missing string key {key:?}")))
}

fn parse_manifest(dir: &Path) -> Result<Vec<GoldenEntry>, Failure> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::args(format!("cannot read {}: {e}", path.display())))?;
    let root: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::args(format!("{}: {e}", path.display())))?;
    let entries = root
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| Failure::args(format!("{}: no entries array", path.display())))?;

    let mut out = Vec::new();
    for entry in entries {
        let name = get_str(entry, "name")?;
        let problem = ProblemArgs {
            example: get_u64(entry, "example")?
                .ok_or_else(|| Failure::args(format!("golden {name}: missing example")))?
                as u8,
            n: get_u64(entry, "n")?.map(|v| v as usize),
            m: get_u64(entry, "m")?.map(|v| v as usize),
            grid: get_u64(entry, "grid")?.map(|v| v as usize),
            mu: get_f64(entry, "mu")?,
            seed: get_u64(entry, "seed")?,
            full_scale: false,
        };
        let empty = json!({});
        let ov = entry.get("overrides").unwrap_or(&empty);
        let overrides = ConfigOverrides {
            tol: get_f64(ov, "tol")?,
            max_iter: get_u64(ov, "max-iter")?.map(|v| v as usize),
            beta: get_f64(ov, "beta")?,
            tau: get_f64(ov, "tau")?,
            iota0: get_f64(ov, "iota0")?,
            eta: get_f64(ov, "eta")?,
            mu_const: get_f64(ov, "mu-anchor")?,
            anchor: match ov.get("anchor").and_then(Value::as_str) {
                Some(raw) => Some(parse_anchor(raw)?),
                None => None,
            },
        };
        out.push(GoldenEntry {
            choice: resolve_choice(&problem)?,
            seed: problem.seed.unwrap_or(0),
            algorithm: get_str(entry, "algorithm")?.parse()?,
            overrides,
            history: dir.join(get_str(entry, "history")?),
            name,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy)]
struct HistoryRow {
    iter: u64,
    residual: f64,
    dist_c: f64,
    gap_q: f64,
    step: f64,
    backtracks: u64,
}

fn parse_history(text: &str, origin: &str) -> Result<Vec<HistoryRow>, Failure> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != HISTORY_HEADER {
        return Err(Failure::args(format!("{origin}: unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Failure::args(format!("{origin}: row {} has {} fields", idx + 2, fields.len())));
        }
        let bad = |what: &str| Failure::args(format!("{origin}: row {}: bad {what}", idx + 2));
        rows.push(HistoryRow {
            iter: fields[0].parse().map_err(|_| bad("iter"))?,
            residual: fields[1].parse().map_err(|_| bad("residual"))?,
            dist_c: fields[2].parse().map_err(|_| bad("dist_C"))?,
            gap_q: fields[3].parse().map_err(|_| bad("gap_Q"))?,
            step: fields[4].parse().map_err(|_| bad("step"))?,
            backtracks: fields[5].parse().map_err(|_| bad("backtracks"))?,
        });
    }
    Ok(rows)
}

fn within_rtol(a: f64, b: f64) -> bool {
    (a - b).abs() <= GOLDEN_RTOL * a.abs().max(b.abs()) + f64::MIN_POSITIVE
}

/// First difference between the freshly computed history and the golden one,
/// as a human-readable description.
fn first_divergence(ours: &[HistoryRow], golden: &[HistoryRow]) -> Option<String> {
    for (a, b) in ours.iter().zip(golden) {
        let cols: [(&str, f64, f64); 4] = [
            ("residual", a.residual, b.residual),
            ("dist_C", a.dist_c, b.dist_c),
            ("gap_Q", a.gap_q, b.gap_q),
            ("step", a.step, b.step),
        ];
        if a.iter != b.iter {
            return Some(format!("iteration numbering diverges at {} vs {}", a.iter, b.iter));
        }
        for (name, ours, theirs) in cols {
            if !within_rtol(ours, theirs) {
                return Some(format!(
                    "first divergence at iteration {}, column {name}: {} vs golden {}",
                    a.iter,
                    fmt_float(ours),
                    fmt_float(theirs)
                ));
            }
        }
        if a.backtracks != b.backtracks {
            return Some(format!(
                "first divergence at iteration {}, column backtracks: {} vs golden {}",
                a.iter, a.backtracks, b.backtracks
            ));
        }
    }
    if ours.len() != golden.len() {
        return Some(format!("history lengths differ: {} vs golden {}", ours.len(), golden.len()));
    }
    None
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, Failure> {
    let entries = parse_manifest(&args.goldens)?;
    if entries.is_empty() {
        return Err(Failure::args("manifest has no entries"));
    }

    let mut mismatches = 0usize;
    for entry in &entries {
        let (bundle, cfg) = prepared_run(&entry.choice, entry.seed, &entry.overrides)?;
        let result = run_algorithm(entry.algorithm, &bundle.instance, &cfg, &bundle.zeta0)?;
        let fresh = history_csv(&result.history);

        if args.update {
            write_text(&entry.history, &fresh)?;
            println!("updated {}", entry.history.display());
            continue;
        }

        let golden_text = fs::read_to_string(&entry.history)
            .map_err(|e| Failure::args(format!("cannot read golden {}: {e}", entry.history.display())))?;
        let ours = parse_history(&fresh, "computed history")?;
        let golden = parse_history(&golden_text, &entry.history.display().to_string())?;
        match first_divergence(&ours, &golden) {
            None => println!("golden {}: ok ({} iterations)", entry.name, ours.len()),
            Some(msg) => {
                mismatches += 1;
                println!("golden {}: MISMATCH: {msg}", entry.name);
            }
        }
    }

    if args.update {
        println!("rewrote {} golden histories", entries.len());
        return Ok(EXIT_OK);
    }
    if mismatches > 0 {
        println!("{mismatches} of {} golden histories diverged", entries.len());
        return Ok(EXIT_GOLDEN_MISMATCH);
    }
    println!("verified {} golden histories", entries.len());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_parsing_handles_comments_and_spaces() {
        let text = "# defaults\n\n tol = 1e-8 \nmax-iter=5000\ntol=1e-9\n";
        let map = parse_kv(text).unwrap();
        assert_eq!(map.get("tol").unwrap(), "1e-9");
        assert_eq!(map.get("max-iter").unwrap(), "5000");
        assert_eq!(map.len(), 2);
        assert!(parse_kv("tol 1e-8").is_err());
    }

    #[test]
    fn flags_win_over_config_file() {
        let mut problem = ProblemArgs {
            example: 1,
            n: Some(64),
            m: None,
            grid: None,
            mu: None,
            seed: None,
            full_scale: false,
        };
        let mut solver = SolverArgs {
            tol: Some(1e-4),
            max_iter: None,
            beta: None,
            tau: None,
            iota0: None,
            eta: None,
            mu_anchor: None,
            anchor: None,
            config: None,
        };
        let mut map = parse_kv("tol=1e-9\nmax-iter=77\nn=12\nseed=5").unwrap();
        fill(&mut problem.n, "n", &mut map).unwrap();
        fill(&mut problem.seed, "seed", &mut map).unwrap();
        fill(&mut solver.tol, "tol", &mut map).unwrap();
        fill(&mut solver.max_iter, "max-iter", &mut map).unwrap();
        assert_eq!(problem.n, Some(64));
        assert_eq!(problem.seed, Some(5));
        assert_eq!(solver.tol, Some(1e-4));
        assert_eq!(solver.max_iter, Some(77));
    }

    #[test]
    fn float_format_round_trips() {
        for x in [1.0 / 3.0, -2.5e-17, 6.02214076e23, 0.1 + 0.2, f64::MIN_POSITIVE] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn desk_and_full_scale_defaults() {
        let p = |example, full_scale| ProblemArgs {
            example,
            n: None,
            m: None,
            grid: None,
            mu: None,
            seed: None,
            full_scale,
        };
        match resolve_choice(&p(1, false)).unwrap() {
            ExampleChoice::Example1 { n } => assert_eq!(n, 100),
            _ => unreachable!(),
        }
        match resolve_choice(&p(3, true)).unwrap() {
            ExampleChoice::Example3 { m, n, mu } => {
                assert_eq!((m, n), (500, 1000));
                assert_eq!(mu, 0.1);
            }
            _ => unreachable!(),
        }
        assert!(resolve_choice(&p(4, false)).is_err());
    }

    #[test]
    fn history_round_trips_through_csv() {
        let history = vec![IterationRecord {
            n: 1,
            residual: 1.0 / 3.0,
            dist_c: 2e-9,
            gap_q: 0.0,
            step: 4.0,
            backtracks: 3,
            bregman_to_ref: None,
        }];
        let text = history_csv(&history);
        assert!(text.starts_with(HISTORY_HEADER));
        let rows = parse_history(&text, "test").unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].residual, 1.0 / 3.0);
        assert_eq!(rows[0].backtracks, 3);
        assert!(first_divergence(&rows, &rows).is_none());
    }

    #[test]
    fn divergence_reports_first_differing_column() {
        let base = HistoryRow { iter: 1, residual: 1.0, dist_c: 0.5, gap_q: 0.25, step: 2.0, backtracks: 1 };
        let changed = HistoryRow { gap_q: 0.25 + 1e-6, ..base };
        let msg = first_divergence(std::slice::from_ref(&base), &[changed]).unwrap();
        assert!(msg.contains("iteration 1"));
        assert!(msg.contains("gap_Q"));
        assert!(within_rtol(1.0, 1.0 + 1e-12));
        assert!(!within_rtol(1.0, 1.0 + 1e-9));
        assert!(within_rtol(0.0, 0.0));
    }
}
