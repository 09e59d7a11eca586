//! `contlog` command-line front end.
//!
//! Every command writes a JSON report to stdout and a short human summary to
//! stderr. Exit codes: 0 success, 1 non-success (budget exhausted, undecided,
//! failed check), 2 input error, 3 internal invariant violation.

mod commands;
mod manifest;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CliError, Outcome};

#[derive(Parser, Debug)]
#[command(name = "contlog", version, about = "Continuous logic of Hilbert spaces with operators")]
struct Cli {
    /// Write a run manifest (flags, input digests, report) to FILE.
    #[arg(long, value_name = "FILE", global = true)]
    emit_manifest: Option<PathBuf>,
    /// Replay a run manifest and compare its report.
    #[arg(long, value_name = "FILE", conflicts_with = "emit_manifest")]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a formula file and print its canonical form.
    Parse(ParseArgs),
    /// Evaluate a closed formula on a model.
    Eval(EvalArgs),
    /// Degree of truth over models of a fixed dimension.
    Degree(DegreeArgs),
    /// Quantum automaton acceptance values and searches.
    Automaton(AutomatonArgs),
    /// Check an (ε, F)-approximation of a group fragment by unitaries.
    Mfcheck(MfcheckArgs),
    /// Elementary equivalence of two single-operator models.
    Eqcheck(EqcheckArgs),
    /// Interpret a first-order sentence about two equivalence relations.
    Interpret(InterpretArgs),
}

#[derive(Args, Debug)]
struct ParseArgs {
    #[arg(long, value_name = "FILE")]
    formula: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EvalMode {
    Certified,
    Heuristic,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    formula: PathBuf,
    #[arg(long, value_name = "Q", default_value = "1/100")]
    eps: String,
    #[arg(long, value_enum, default_value = "certified")]
    mode: EvalMode,
    /// Boxes (certified) or point evaluations (heuristic).
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DegreeModeArg {
    Certified,
    LowerProfile,
}

#[derive(Args, Debug)]
struct DegreeArgs {
    #[arg(long, value_name = "FILE")]
    formula: PathBuf,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    ops: usize,
    #[arg(long, value_name = "Q", default_value = "1/20")]
    eps: String,
    #[arg(long, value_enum, default_value = "certified")]
    mode: DegreeModeArg,
    /// Largest dimension in the lower profile.
    #[arg(long)]
    maxdim: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AutomatonMode {
    Acc,
    Search,
    Margin,
}

#[derive(Args, Debug)]
struct AutomatonArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "BITSTRING")]
    proj: String,
    #[arg(long, value_name = "Q")]
    lambda: String,
    #[arg(long, value_enum, default_value = "acc")]
    mode: AutomatonMode,
    /// Comma-separated 1-based letters; empty for the empty word.
    #[arg(long, value_name = "CSV")]
    word: Option<String>,
    #[arg(long, default_value_t = 8)]
    maxlen: usize,
}

#[derive(Args, Debug)]
struct MfcheckArgs {
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    #[arg(long, value_name = "FILE")]
    gamma: PathBuf,
    #[arg(long, value_name = "Q")]
    eps: String,
    #[arg(long, value_name = "Q", default_value = "1/1000000")]
    prec: String,
}

#[derive(Args, Debug)]
struct EqcheckArgs {
    #[arg(long, value_name = "FILE")]
    a: PathBuf,
    #[arg(long, value_name = "FILE")]
    b: PathBuf,
    #[arg(long, value_name = "Q", default_value = "1/1000")]
    eps: String,
}

#[derive(Args, Debug)]
struct InterpretArgs {
    #[arg(long, value_name = "FILE", required_unless_present = "battery")]
    structure: Option<PathBuf>,
    #[arg(long, value_name = "FILE", required_unless_present = "battery")]
    sentence: Option<PathBuf>,
    #[arg(long, default_value = "constants")]
    scheme: String,
    #[arg(long, value_name = "Q")]
    tol: Option<String>,
    /// Run the shipped sentence battery on every structure up to --maxsize.
    #[arg(long, conflicts_with_all = ["structure", "sentence"])]
    battery: bool,
    #[arg(long, default_value_t = 3)]
    maxsize: usize,
}

fn dispatch(cmd: &Command, ctx: &mut commands::Context) -> Result<Outcome, CliError> {
    match cmd {
        Command::Parse(a) => commands::parse(ctx, a),
        Command::Eval(a) => commands::eval(ctx, a),
        Command::Degree(a) => commands::degree(ctx, a),
        Command::Automaton(a) => commands::automaton(ctx, a),
        Command::Mfcheck(a) => commands::mfcheck(ctx, a),
        Command::Eqcheck(a) => commands::eqcheck(ctx, a),
        Command::Interpret(a) => commands::interpret(ctx, a),
    }
}

/// Runs one command line (without the program name) and returns the report,
/// summary and exit code.
fn run_args(args: &[String]) -> Result<(Outcome, commands::Context), CliError> {
    let argv = std::iter::once("contlog".to_string()).chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(CliError::Usage)?;
    let cmd = cli.command.ok_or_else(|| CliError::Input("no subcommand given".into()))?;
    let mut ctx = commands::Context::default();
    let out = dispatch(&cmd, &mut ctx)?;
    Ok((out, ctx))
}

/// Printing ignores write errors so that a closed pipe is not a crash.
fn print_json(v: &serde_json::Value) {
    let text = serde_json::to_string_pretty(v).expect("report serializes");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn emit(out: &Outcome) {
    print_json(&out.report);
    let _ = writeln!(std::io::stderr().lock(), "{}", out.summary);
}

fn fail(e: CliError) -> ExitCode {
    match e {
        CliError::Usage(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            ExitCode::from(code)
        }
        other => {
            let report = serde_json::json!({ "error": other.to_string(), "kind": other.kind() });
            print_json(&report);
            let _ = writeln!(std::io::stderr().lock(), "error: {other}");
            ExitCode::from(other.code())
        }
    }
}

fn real_main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse_from(std::iter::once("contlog".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => return fail(CliError::Usage(e)),
    };
    if let Some(path) = &cli.manifest {
        if cli.command.is_some() {
            return fail(CliError::Input("--manifest replays a recorded command; give no subcommand".into()));
        }
        return match manifest::replay(path, run_args) {
            Ok(out) => {
                emit(&out);
                ExitCode::from(out.code)
            }
            Err(e) => fail(e),
        };
    }
    let inner: Vec<String> = manifest::strip_emit_flag(&args);
    let started = std::time::Instant::now();
    match run_args(&inner) {
        Ok((out, ctx)) => {
            if let Some(path) = &cli.emit_manifest {
                if let Err(e) = manifest::write(path, &inner, &ctx, &out, started.elapsed()) {
                    return fail(e);
                }
            }
            emit(&out);
            ExitCode::from(out.code)
        }
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    match std::panic::catch_unwind(real_main) {
        Ok(code) => code,
        Err(_) => {
            eprintln!("error: internal invariant violated");
            ExitCode::from(3)
        }
    }
}
