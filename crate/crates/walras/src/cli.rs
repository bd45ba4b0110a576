//! Command-line interface.
//!
//! Three subcommands, all operating on a bundled model (`--builtin ex1` …
//! `ex4`) or a JSON model file (`--model path`):
//!
//! * `solve` — compute an equilibrium from each given start point and print
//!   a report; optionally emit the reports as JSON and the first converged
//!   homotopy path as CSV.
//! * `trace-dump` — trace from exactly one start and write every accepted
//!   predictor-corrector step to a CSV file.
//! * `validate` — check the market-clearing identities of the model at
//!   random prices and certify its known equilibria.
//!
//! Exit codes: `0` success, `1` bad input (flags, files, schema), `2`
//! numerical failure (no convergence, failed validation checks).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::builtins::Builtin;
use crate::economy::{
    compute_equilibrium_with_trace, known_equilibrium_residual, Economy, EconomyModel,
    EquilibriumReport, ExchangeEconomy, Normalization,
};
use crate::error::Error;
use crate::model_file;
use crate::tracer::{TraceConfig, TraceResult};

const EXIT_OK: i32 = 0;
const EXIT_INPUT: i32 = 1;
const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser)]
#[command(
    name = "walras",
    version,
    about = "Computes competitive equilibria of exchange and production economies",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an equilibrium from each start point
    Solve(SolveArgs),
    /// Trace the homotopy path from one start and dump it as CSV
    TraceDump(TraceDumpArgs),
    /// Check model identities and certify its known equilibria
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ModelSource {
    /// Bundled model: ex1, ex2, ex3 or ex4
    #[arg(long, value_name = "NAME", conflicts_with = "model")]
    builtin: Option<String>,
    /// Path to a JSON model file
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct SolverFlags {
    /// Start point as comma-separated values (repeat the flag for several
    /// starts); prices first, then activity levels. Defaults to all ones.
    #[arg(long = "start", value_name = "V1,V2,...")]
    starts: Vec<String>,
    /// Stop the trace once lambda falls below this threshold
    #[arg(long = "eps-lambda", value_name = "TOL", default_value_t = 1e-6)]
    eps_lambda: f64,
    /// Corrector residual tolerance
    #[arg(long = "eps-res", value_name = "TOL", default_value_t = 1e-5)]
    eps_res: f64,
    /// Initial predictor steplength
    #[arg(long = "h0", value_name = "H", default_value_t = 0.3)]
    h0: f64,
    /// Predictor-step budget per trace attempt
    #[arg(long = "max-it", value_name = "N", default_value_t = 1000)]
    max_it: usize,
    /// Extra random starts after a failed attempt
    #[arg(long = "restarts", value_name = "N", default_value_t = 5)]
    restarts: usize,
    /// Seed for the restart draws
    #[arg(long = "seed", value_name = "SEED", default_value_t = 0)]
    seed: u64,
    /// Price-scale handling: replace-last-row or none (default depends on
    /// the model kind)
    #[arg(long, value_name = "SCHEME")]
    normalization: Option<String>,
    /// Skip the final Newton polish at lambda = 0
    #[arg(long = "no-polish")]
    no_polish: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: ModelSource,
    #[command(flatten)]
    solver: SolverFlags,
    /// Write all run reports to this file as JSON
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the homotopy path of the first converged run to this CSV file
    #[arg(long = "trace-csv", value_name = "PATH")]
    trace_csv: Option<PathBuf>,
}

#[derive(Args)]
struct TraceDumpArgs {
    #[command(flatten)]
    source: ModelSource,
    #[command(flatten)]
    solver: SolverFlags,
    /// CSV file receiving one row per accepted predictor-corrector step
    #[arg(long = "trace-csv", value_name = "PATH")]
    trace_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    source: ModelSource,
}

/// One entry of the JSON report written by `solve --json`.
#[derive(Serialize)]
struct RunOutcome {
    start: Vec<f64>,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<EquilibriumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Runs the CLI on `args` (without the program name), writing human output
/// to `out` and errors to `err`; returns the process exit code.
pub fn run<I>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator,
    I::Item: Into<String>,
{
    let argv = std::iter::once("walras".to_string()).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return EXIT_INPUT;
        }
        Err(e) => {
            // --help and --version land here and are not failures
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match cli.command {
        Command::Solve(args) => cmd_solve(args, out, err),
        Command::TraceDump(args) => cmd_trace_dump(args, out, err),
        Command::Validate(args) => cmd_validate(args, out, err),
    }
}

fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::InvalidInput(_)
        | Error::InvalidModel(_)
        | Error::InvalidConfig(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_INPUT,
        _ => EXIT_NUMERICAL,
    }
}

fn resolve_model(source: &ModelSource, err: &mut dyn Write) -> Result<(String, EconomyModel), i32> {
    match (&source.builtin, &source.model) {
        (Some(name), None) => match Builtin::from_name(name) {
            Some(b) => Ok((b.name().to_string(), b.model())),
            None => {
                let names: Vec<_> = Builtin::ALL.iter().map(|b| b.name()).collect();
                let _ = writeln!(
                    err,
                    "error: unknown builtin '{name}' (available: {})",
                    names.join(", ")
                );
                Err(EXIT_INPUT)
            }
        },
        (None, Some(path)) => match model_file::load(path) {
            Ok(model) => Ok((path.display().to_string(), model)),
            Err(e) => {
                let _ = writeln!(err, "error: cannot load {}: {e}", path.display());
                Err(exit_code_for(&e))
            }
        },
        _ => {
            let _ = writeln!(err, "error: exactly one of --builtin or --model is required");
            Err(EXIT_INPUT)
        }
    }
}

fn build_config(flags: &SolverFlags, err: &mut dyn Write) -> Result<TraceConfig, i32> {
    let cfg = TraceConfig {
        eps_lambda: flags.eps_lambda,
        eps_residual: flags.eps_res,
        h0: flags.h0,
        max_iterations: flags.max_it,
        restart_max: flags.restarts,
        rng_seed: flags.seed,
        final_polish: !flags.no_polish,
        ..TraceConfig::default()
    };
    if let Err(e) = cfg.validate() {
        let _ = writeln!(err, "error: {e}");
        return Err(EXIT_INPUT);
    }
    Ok(cfg)
}

fn resolve_normalization(
    flags: &SolverFlags,
    economy: &Economy,
    err: &mut dyn Write,
) -> Result<Normalization, i32> {
    match flags.normalization.as_deref() {
        None => Ok(Normalization::default_for(economy)),
        Some("replace-last-row") => Ok(Normalization::ReplaceLastRow),
        Some("none") => Ok(Normalization::None),
        Some(other) => {
            let _ = writeln!(
                err,
                "error: unknown normalization '{other}' (available: replace-last-row, none)"
            );
            Err(EXIT_INPUT)
        }
    }
}

fn parse_starts(
    specs: &[String],
    economy: &Economy,
    err: &mut dyn Write,
) -> Result<Vec<DVector<f64>>, i32> {
    let n = economy.dimension();
    if specs.is_empty() {
        return Ok(vec![DVector::from_element(n, 1.0)]);
    }
    let mut starts = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut values = Vec::new();
        for piece in spec.split(',') {
            match piece.trim().parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => values.push(v),
                Ok(v) => {
                    let _ = writeln!(
                        err,
                        "error: start value {v} in '{spec}' must be strictly positive and finite"
                    );
                    return Err(EXIT_INPUT);
                }
                Err(_) => {
                    let _ = writeln!(err, "error: cannot parse '{piece}' in start '{spec}'");
                    return Err(EXIT_INPUT);
                }
            }
        }
        if values.len() != n {
            let _ = writeln!(
                err,
                "error: start '{spec}' has {} values but the model needs {n} \
                 ({} goods, {} activities)",
                values.len(),
                economy.goods(),
                economy.activities()
            );
            return Err(EXIT_INPUT);
        }
        starts.push(DVector::from_vec(values));
    }
    Ok(starts)
}

fn describe(model: &EconomyModel) -> String {
    match &model.economy {
        Economy::Exchange(e) => format!(
            "exchange economy, {} goods, {} consumers",
            e.goods(),
            e.consumers().len()
        ),
        Economy::Production(p) => format!(
            "production economy, {} goods, {} activities, {} consumers",
            p.goods(),
            p.activities(),
            p.exchange.consumers().len()
        ),
    }
}

fn format_vector(values: &[f64]) -> String {
    let pieces: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    format!("({})", pieces.join(", "))
}

fn print_report(out: &mut dyn Write, report: &EquilibriumReport) {
    let _ = writeln!(
        out,
        "  status: converged in {} predictor steps ({} restarts)",
        report.iterations, report.restarts
    );
    let _ = writeln!(out, "  prices: {}", format_vector(&report.prices));
    if let Some(y) = &report.activities {
        let _ = writeln!(out, "  activities: {}", format_vector(y));
    }
    let _ = writeln!(
        out,
        "  complementarity residual: {:.3e}",
        report.complementarity_residual
    );
    if let Some(label) = &report.matched_known_equilibrium {
        let _ = writeln!(out, "  matches known equilibrium: {label}");
    }
    for warning in &report.warnings {
        let _ = writeln!(out, "  warning: {warning}");
    }
}

/// Writes the path log as CSV: `step,lambda,residual,steplength,x1,...,x2n`
/// with the homotopy variables `(x, y)` flattened into the `x*` columns.
fn write_trace_csv(w: &mut dyn Write, trace: &TraceResult) -> std::io::Result<()> {
    let width = 2 * trace.endpoint.dimension();
    let mut header = String::from("step,lambda,residual,steplength");
    for i in 1..=width {
        header.push_str(&format!(",x{i}"));
    }
    writeln!(w, "{header}")?;
    for (step, record) in trace.path_log.iter().enumerate() {
        let mut row = format!(
            "{},{},{},{}",
            step + 1,
            record.lambda,
            record.residual,
            record.steplength
        );
        for v in record.point.x.iter().chain(record.point.y.iter()) {
            row.push_str(&format!(",{v}"));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

fn write_trace_csv_file(
    path: &Path,
    trace: &TraceResult,
    err: &mut dyn Write,
) -> Result<(), i32> {
    let mut buffer = Vec::new();
    if let Err(e) = write_trace_csv(&mut buffer, trace) {
        let _ = writeln!(err, "error: cannot render CSV: {e}");
        return Err(EXIT_INPUT);
    }
    if let Err(e) = std::fs::write(path, buffer) {
        let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
        return Err(EXIT_INPUT);
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (name, model) = match resolve_model(&args.source, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let cfg = match build_config(&args.solver, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let normalization = match resolve_normalization(&args.solver, &model.economy, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let starts = match parse_starts(&args.solver.starts, &model.economy, err) {
        Ok(v) => v,
        Err(code) => return code,
    };

    let _ = writeln!(out, "model {name}: {}", describe(&model));
    let mut outcomes = Vec::with_capacity(starts.len());
    let mut csv_written = false;
    let mut worst = EXIT_OK;

    for (i, start) in starts.iter().enumerate() {
        let start_values: Vec<f64> = start.iter().copied().collect();
        let _ = writeln!(
            out,
            "run {}: start {}",
            i + 1,
            format_vector(&start_values)
        );
        match compute_equilibrium_with_trace(&model, start, &cfg, normalization) {
            Ok((report, solution)) => {
                print_report(out, &report);
                if let Some(path) = &args.trace_csv {
                    if !csv_written {
                        if let Err(code) = write_trace_csv_file(path, &solution.trace, err) {
                            return code;
                        }
                        csv_written = true;
                    }
                }
                outcomes.push(RunOutcome {
                    start: start_values,
                    ok: true,
                    report: Some(report),
                    error: None,
                });
            }
            Err(e) => {
                let _ = writeln!(out, "  status: FAILED - {e}");
                worst = worst.max(exit_code_for(&e));
                outcomes.push(RunOutcome {
                    start: start_values,
                    ok: false,
                    report: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    if let Some(path) = &args.json {
        let text = match serde_json::to_string_pretty(&outcomes) {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(err, "error: cannot render JSON: {e}");
                return EXIT_INPUT;
            }
        };
        if let Err(e) = std::fs::write(path, text + "\n") {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return EXIT_INPUT;
        }
    }
    worst
}

fn cmd_trace_dump(args: TraceDumpArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(csv_path) = args.trace_csv.clone() else {
        let _ = writeln!(err, "error: trace-dump requires --trace-csv PATH");
        return EXIT_INPUT;
    };
    if args.solver.starts.len() > 1 {
        let _ = writeln!(err, "error: trace-dump takes exactly one --start");
        return EXIT_INPUT;
    }
    let (name, model) = match resolve_model(&args.source, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let cfg = match build_config(&args.solver, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let normalization = match resolve_normalization(&args.solver, &model.economy, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let starts = match parse_starts(&args.solver.starts, &model.economy, err) {
        Ok(v) => v,
        Err(code) => return code,
    };

    match compute_equilibrium_with_trace(&model, &starts[0], &cfg, normalization) {
        Ok((report, solution)) => {
            if let Err(code) = write_trace_csv_file(&csv_path, &solution.trace, err) {
                return code;
            }
            let _ = writeln!(
                out,
                "model {name}: traced {} accepted steps to lambda = {:.3e} \
                 ({} restarts); path written to {}",
                solution.trace.path_log.len(),
                solution
                    .trace
                    .path_log
                    .last()
                    .map(|r| r.lambda)
                    .unwrap_or(1.0),
                solution.restarts_used,
                csv_path.display()
            );
            print_report(out, &report);
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Relative tolerance for the aggregate budget identity (value of excess
/// demand must vanish at every price vector).
const VALUE_IDENTITY_TOL: f64 = 1e-9;

/// Tolerance for zero-degree homogeneity of excess demand.
const HOMOGENEITY_TOL: f64 = 1e-10;

/// Residual bound certifying a known equilibrium.
const CERTIFY_TOL: f64 = 2e-3;

fn cmd_validate(args: ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (name, model) = match resolve_model(&args.source, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let _ = writeln!(out, "model {name}: {}", describe(&model));

    let exchange: &ExchangeEconomy = match &model.economy {
        Economy::Exchange(e) => e,
        Economy::Production(p) => &p.exchange,
    };

    let mut failures = 0usize;
    let mut checks = 0usize;
    let mut check = |out: &mut dyn Write, label: &str, outcome: Result<String, String>| {
        checks += 1;
        match outcome {
            Ok(detail) => {
                let _ = writeln!(out, "check {label}: ok{detail}");
            }
            Err(reason) => {
                failures += 1;
                let _ = writeln!(out, "check {label}: FAILED {reason}");
            }
        }
    };

    let goods = exchange.goods();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let probes: Vec<DVector<f64>> = (0..10)
        .map(|_| DVector::from_fn(goods, |_, _| rng.random_range(0.1..3.0)))
        .collect();

    let value_identity = probes.iter().try_for_each(|p| {
        let xi = exchange
            .excess_demand(p)
            .map_err(|e| format!("(excess demand failed: {e})"))?;
        let value = p.dot(&xi).abs();
        let bound = VALUE_IDENTITY_TOL * (1.0 + xi.abs().sum());
        if value <= bound {
            Ok(())
        } else {
            Err(format!("(p'xi = {value:.3e} exceeds {bound:.3e})"))
        }
    });
    check(
        out,
        "budget-identity",
        value_identity.map(|_| " (10 price vectors)".to_string()),
    );

    let homogeneity = probes.iter().try_for_each(|p| {
        let xi = exchange
            .excess_demand(p)
            .map_err(|e| format!("(excess demand failed: {e})"))?;
        let scaled = exchange
            .excess_demand(&(p * 2.0))
            .map_err(|e| format!("(excess demand failed: {e})"))?;
        let gap = (&xi - &scaled).amax();
        let bound = HOMOGENEITY_TOL * (1.0 + xi.amax());
        if gap <= bound {
            Ok(())
        } else {
            Err(format!("(degree-0 gap {gap:.3e} exceeds {bound:.3e})"))
        }
    });
    check(
        out,
        "homogeneity",
        homogeneity.map(|_| " (10 price vectors)".to_string()),
    );

    for known in &model.known_equilibria {
        let label = format!("equilibrium {}", known.label);
        let outcome = match known_equilibrium_residual(&model, known) {
            Ok(residual) if residual <= CERTIFY_TOL => {
                Ok(format!(" (residual {residual:.3e})"))
            }
            Ok(residual) => Err(format!("(residual {residual:.3e} exceeds {CERTIFY_TOL:.1e})")),
            Err(e) => Err(format!("({e})")),
        };
        check(out, &label, outcome);
    }

    let _ = writeln!(out, "{} checks passed, {failures} failed", checks - failures);
    if failures == 0 {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().map(|s| s.to_string()), &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_and_version_exit_zero() {
        let (code, out, _) = run_cli(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("solve"));
        assert!(out.contains("trace-dump"));
        assert!(out.contains("validate"));
        let (code, out, _) = run_cli(&["--version"]);
        assert_eq!(code, 0);
        assert!(out.contains("walras"));
    }

    #[test]
    fn unknown_flags_exit_one() {
        let (code, _, err) = run_cli(&["solve", "--builtin", "ex1", "--bogus"]);
        assert_eq!(code, 1);
        assert!(!err.is_empty());
    }

    #[test]
    fn missing_model_source_exits_one() {
        let (code, _, err) = run_cli(&["solve"]);
        assert_eq!(code, 1);
        assert!(err.contains("--builtin"));
    }

    #[test]
    fn unknown_builtin_exits_one() {
        let (code, _, err) = run_cli(&["solve", "--builtin", "ex9"]);
        assert_eq!(code, 1);
        assert!(err.contains("ex9"));
        assert!(err.contains("ex1"));
    }

    #[test]
    fn malformed_starts_exit_one() {
        let (code, _, err) = run_cli(&["solve", "--builtin", "ex1", "--start", "0.5"]);
        assert_eq!(code, 1);
        assert!(err.contains("2"), "{err}");
        let (code, _, _) = run_cli(&["solve", "--builtin", "ex1", "--start", "-1,1"]);
        assert_eq!(code, 1);
        let (code, _, _) = run_cli(&["solve", "--builtin", "ex1", "--start", "a,b"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn solve_ex1_prints_a_report_and_exits_zero() {
        let (code, out, err) = run_cli(&["solve", "--builtin", "ex1", "--start", "0.5,0.5"]);
        assert_eq!(code, 0, "stderr: {err}");
        assert!(out.contains("prices: (0.5000, 0.5000)"), "{out}");
        assert!(out.contains("matches known equilibrium: p1*"), "{out}");
    }

    #[test]
    fn trace_dump_requires_csv_path_and_single_start() {
        let (code, _, err) = run_cli(&["trace-dump", "--builtin", "ex1"]);
        assert_eq!(code, 1);
        assert!(err.contains("--trace-csv"));

        let (code, _, err) = run_cli(&[
            "trace-dump",
            "--builtin",
            "ex1",
            "--trace-csv",
            "/tmp/unused.csv",
            "--start",
            "1,1",
            "--start",
            "2,2",
        ]);
        assert_eq!(code, 1);
        assert!(err.contains("exactly one"));
    }

    #[test]
    fn bad_config_exits_one() {
        let (code, _, err) = run_cli(&["solve", "--builtin", "ex1", "--h0", "0.9"]);
        assert_eq!(code, 1);
        assert!(err.contains("h_min <= h0 <= h_max"), "{err}");
    }
}
