//! Command-line front end: `run`, `dump-ir`, `dot`, `bench` and `evolve`.
//!
//! Standard output carries only the requested artifact; diagnostics go to
//! standard error. Exit codes: 0 success, 1 runtime or benchmark failure,
//! 2 usage, parse or type error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ast::{to_dot, type_check_with, Program, TypedProgram};
use crate::bench::{csv_string, emit_table, run_benchmark, BenchConfig, BenchError};
use crate::exec::{make_executor, ExecConfig, NativeRegistry, Value};
use crate::frontend::{parse_bytes, pretty_print};
use crate::gp::{evolve, genome_program, Dataset, GpError, GpParams, InitMethod};
use crate::ir::{codegen_program, optimize, PassSelection};

#[derive(Parser, Debug)]
#[command(
    name = "gpjit",
    version,
    about = "Run, inspect, benchmark and evolve toy-language programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute a program and print its result as `int:<v>` or `double:<v>`.
    Run(RunArgs),
    /// Print the IR of a program.
    DumpIr(DumpIrArgs),
    /// Print the AST as a Graphviz digraph.
    Dot(DotArgs),
    /// Time translate-and-execute loops and print a table.
    Bench(BenchArgs),
    /// Evolve a `gp_main` for a CSV dataset by symbolic regression.
    Evolve(EvolveArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EngineArg {
    Direct,
    Int,
    Jit,
}

impl EngineArg {
    fn name(self) -> &'static str {
        match self {
            EngineArg::Direct => "direct",
            EngineArg::Int => "int",
            EngineArg::Jit => "jit",
        }
    }
}

#[derive(Args, Debug)]
struct EngineFlags {
    #[arg(long, value_enum, default_value = "direct")]
    engine: EngineArg,
    /// Run the optimization pipeline (not available for `direct`).
    #[arg(long)]
    opt: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    file: PathBuf,
    #[command(flatten)]
    engine: EngineFlags,
    /// Make the double math natives (`sqrt_d`, `sin_d`, ..) callable.
    #[arg(long)]
    math: bool,
    /// Inputs for `gp_main`; integers stay `int`, anything else is `double`.
    #[arg(long = "input", allow_negative_numbers = true)]
    inputs: Vec<String>,
}

#[derive(Args, Debug)]
struct DumpIrArgs {
    file: PathBuf,
    #[arg(long)]
    opt: bool,
    #[arg(long)]
    math: bool,
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DotArgs {
    file: PathBuf,
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Program to measure; defaults to the built-in sample program.
    file: Option<PathBuf>,
    /// Configurations to measure, e.g. `ALG,JIT-OPT`.
    #[arg(long, value_delimiter = ',', default_value = "ALG,INT,INT-OPT,JIT,JIT-OPT")]
    configs: Vec<ExecConfig>,
    #[arg(long, default_value_t = 50)]
    avg: usize,
    #[arg(long, value_delimiter = ',', default_value = "10,100,500")]
    outer: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,200,500,1000")]
    inner: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Skip the untimed warmup pass.
    #[arg(long, conflicts_with = "warmup")]
    no_warmup: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    math: bool,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    pop: usize,
    #[arg(long, default_value_t = 20)]
    gens: usize,
    #[arg(long = "max-depth", default_value_t = 6)]
    max_depth: usize,
    #[arg(long, default_value_t = 3)]
    tournament: usize,
    #[arg(long, default_value_t = 1)]
    elitism: usize,
    #[arg(long, default_value_t = 0.8)]
    crossover: f64,
    #[arg(long, default_value_t = 0.1)]
    mutation: f64,
    #[arg(long, default_value = "ramped-half-and-half")]
    init: InitMethod,
    /// Evaluate individuals on several threads (same result).
    #[arg(long)]
    parallel: bool,
    #[command(flatten)]
    engine: EngineFlags,
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, out),
        Command::DumpIr(a) => cmd_dump_ir(&a, out),
        Command::Dot(a) => cmd_dot(&a, out),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::Evolve(a) => cmd_evolve(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn registry(math: bool) -> NativeRegistry {
    if math {
        NativeRegistry::math()
    } else {
        NativeRegistry::new()
    }
}

fn config_of(flags: &EngineFlags) -> Result<ExecConfig, Failure> {
    ExecConfig::from_engine(flags.engine.name(), flags.opt)
        .ok_or_else(|| usage("`--opt` is not available for the direct engine"))
}

fn read_program(path: &Path) -> Result<Program, Failure> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_bytes(&bytes).map_err(|e| {
        let (line, column) = e.position();
        usage(format!("{}:{line}:{column}: {e}", path.display()))
    })
}

fn check(path: &Path, program: Program, registry: &NativeRegistry) -> Result<TypedProgram, Failure> {
    type_check_with(program, registry).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_artifact(text: &str, output: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| runtime(e.to_string())),
    }
}

fn parse_input(text: &str) -> Result<Value, Failure> {
    if let Ok(i) = text.parse::<i64>() {
        return Ok(Value::Int(i));
    }
    text.parse::<f64>()
        .map(Value::Double)
        .map_err(|_| usage(format!("input `{text}` is not a number")))
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = config_of(&a.engine)?;
    let inputs = a.inputs.iter().map(|s| parse_input(s)).collect::<Result<Vec<_>, _>>()?;
    let reg = registry(a.math);
    let typed = check(&a.file, read_program(&a.file)?, &reg)?;
    let mut exec = make_executor(config, &typed, &reg).map_err(|e| runtime(e.to_string()))?;
    let value = exec.run(&inputs).map_err(|e| runtime(e.to_string()))?;
    writeln!(out, "{value}").map_err(|e| runtime(e.to_string()))
}

fn cmd_dump_ir(a: &DumpIrArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let reg = registry(a.math);
    let typed = check(&a.file, read_program(&a.file)?, &reg)?;
    let mut module = codegen_program(&typed, &reg).map_err(|e| runtime(e.to_string()))?;
    if a.opt {
        module = optimize(module, &PassSelection::all()).map_err(|e| runtime(e.to_string()))?;
    }
    write_artifact(&module.dump(), a.output.as_deref(), out)
}

fn cmd_dot(a: &DotArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let program = read_program(&a.file)?;
    write_artifact(&to_dot(&program), a.output.as_deref(), out)
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let source = match &a.file {
        Some(path) => std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => BenchConfig::default().program_source,
    };
    let config = BenchConfig {
        program_source: source,
        configs: a.configs.clone(),
        outer: a.outer.clone(),
        inner: a.inner.clone(),
        averaging: a.avg,
        warmup: if a.no_warmup { 0 } else { a.warmup },
        inputs: Vec::new(),
    };
    let report = run_benchmark(&config, &registry(a.math)).map_err(|e| match e {
        BenchError::Config(_) | BenchError::Frontend(_) | BenchError::Type(_) => usage(e.to_string()),
        other => runtime(other.to_string()),
    })?;
    if !report.metadata.untrusted_cells.is_empty() {
        let _ = writeln!(
            err,
            "note: cells below ten clock ticks ({:.0} ns): {}",
            report.metadata.clock_resolution_ns,
            report.metadata.untrusted_cells.join(" ")
        );
    }
    if let Some(path) = &a.csv {
        std::fs::write(path, csv_string(&report)).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    out.write_all(emit_table(&report).as_bytes())
        .map_err(|e| runtime(e.to_string()))
}

fn cmd_evolve(a: &EvolveArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = config_of(&a.engine)?;
    let dataset = Dataset::from_csv_path(&a.dataset).map_err(|e| usage(e.to_string()))?;
    let params = GpParams {
        population_size: a.pop,
        generations: a.gens,
        crossover_prob: a.crossover,
        mutation_prob: a.mutation,
        tournament_size: a.tournament,
        max_depth: a.max_depth,
        init_method: a.init,
        seed: a.seed,
        elitism: a.elitism,
        parallel: a.parallel,
    };
    let run = evolve(&params, &dataset, config, &NativeRegistry::new()).map_err(|e| match e {
        GpError::InvalidParams(_) => usage(e.to_string()),
        other => runtime(other.to_string()),
    })?;
    let program = genome_program(&run.best.genome, dataset.arity());
    let sse = run.best.fitness.unwrap_or(f64::NAN);
    writeln!(out, "{}sse:{sse:?}", pretty_print(&program)).map_err(|e| runtime(e.to_string()))
}
