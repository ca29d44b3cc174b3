use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use picklab::Tolerance;
use picklab_cli::commands::{
    cmd_agler, cmd_check, cmd_choi, cmd_cpcheck, cmd_necessity, cmd_sample, parse_tol, Flags, Outcome, SampleSpec,
    EXIT_USAGE, SCHEMA_VERSION,
};
use serde_json::json;

/// Decide Nevanlinna-Pick interpolation problems from JSON requests.
///
/// Reports go to stdout as one JSON document; diagnostics go to stderr.
/// Exit codes: 0 feasible, 1 infeasible, 2 unknown, 64 usage error, 65 data error.
#[derive(Parser, Debug)]
#[command(name = "picklab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the criterion named by the request's `setting`.
    Check(RequestArgs),
    /// Semidefinite feasibility for a polydisk setting.
    Agler(RequestArgs),
    /// Choi matrix and complete-positivity verdict of a `cp.*` map.
    Choi(RequestArgs),
    /// Complete-positivity check with a sampled witness on failure.
    Cpcheck(RequestArgs),
    /// Draw a seeded Schur-class element.
    Sample(SampleArgs),
    /// Run a seeded necessity suite for one criterion.
    Necessity(NecessityArgs),
}

#[derive(Args, Debug)]
struct RequestArgs {
    /// Request document; `-` reads stdin.
    input: PathBuf,
    /// Absolute PSD tolerance, or `auto`.
    #[arg(long, value_parser = parse_tol)]
    tol: Option<Tolerance>,
    /// Largest word or path length summed by series criteria.
    #[arg(long)]
    max_level: Option<usize>,
    /// Iteration cap for the semidefinite solver.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the feasibility certificate to this path.
    #[arg(long)]
    emit_certificate: Option<PathBuf>,
    /// Drop the multinomial weights in the commuting ball kernel.
    #[arg(long)]
    literal_unweighted: bool,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// disk, ball, quiver or blaschke.
    #[arg(long, default_value = "disk")]
    kind: String,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    rows: usize,
    #[arg(long, default_value_t = 1)]
    cols: usize,
    /// Number of ball variables.
    #[arg(long, default_value_t = 2)]
    variables: usize,
    /// Per-vertex output dimensions for `quiver`.
    #[arg(long, value_delimiter = ',', default_value = "1,1")]
    y_dims: Vec<usize>,
    /// Per-vertex input dimensions for `quiver`.
    #[arg(long, value_delimiter = ',', default_value = "1,1")]
    u_dims: Vec<usize>,
    /// Also write the sample to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NecessityArgs {
    setting: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn flags(a: &RequestArgs, budget: Option<usize>) -> Flags {
    Flags {
        tol: a.tol,
        max_level: a.max_level,
        max_iter: a.max_iter,
        seed: a.seed,
        emit_certificate: a.emit_certificate.clone(),
        literal_unweighted: a.literal_unweighted,
        budget,
    }
}

fn emit(o: &Outcome) -> ExitCode {
    println!("{}", o.render());
    if let Some(err) = o.report.get("error") {
        eprintln!("picklab: {}", err["message"].as_str().unwrap_or("error"));
    }
    ExitCode::from(o.exit as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "verdict": "error",
                "error": { "code": "usage", "message": e.kind().to_string(), "path": "" },
            });
            return emit(&Outcome { exit: EXIT_USAGE, report });
        }
    };
    let budget = match std::env::var("PICKLAB_BUDGET") {
        Ok(s) => match s.parse::<usize>() {
            Ok(b) => Some(b),
            Err(_) => {
                let report = json!({
                    "schema_version": SCHEMA_VERSION,
                    "verdict": "error",
                    "error": { "code": "usage", "message": format!("PICKLAB_BUDGET=`{s}` is not an integer"), "path": "" },
                });
                return emit(&Outcome { exit: EXIT_USAGE, report });
            }
        },
        Err(_) => None,
    };
    let outcome = match &cli.command {
        Command::Check(a) => cmd_check(&a.input, &flags(a, budget)),
        Command::Agler(a) => cmd_agler(&a.input, &flags(a, budget)),
        Command::Choi(a) => cmd_choi(&a.input, &flags(a, budget)),
        Command::Cpcheck(a) => cmd_cpcheck(&a.input, &flags(a, budget)),
        Command::Sample(a) => {
            let spec = SampleSpec {
                kind: a.kind.clone(),
                degree: a.degree,
                seed: a.seed,
                rows: a.rows,
                cols: a.cols,
                variables: a.variables,
                y_dims: a.y_dims.clone(),
                u_dims: a.u_dims.clone(),
            };
            cmd_sample(&spec, a.out.as_deref())
        }
        Command::Necessity(a) => cmd_necessity(&a.setting, a.trials, a.seed),
    };
    emit(&outcome)
}
