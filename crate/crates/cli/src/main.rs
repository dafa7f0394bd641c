use clap::{Args, Parser, Subcommand, ValueEnum};
use cqpl::kraus::{compose, Halt, DEFAULT_MAX_QBITS, DEFAULT_RESOLVE_QBITS};
use cqpl::qcore::{format_probability, DEFAULT_HEAP, DEFAULT_SIM_CAP};
use cqpl::types::{comm_balance_check, BalanceReport};
use cqpl::{check_source, extract_semantics, programs_equiv, run_program, CheckedProgram, EquivMode, Interleave, RunConfig};
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_USAGE: u8 = 3;

/// Interpreter, type checker and semantics engine for cQPL.
#[derive(Parser, Debug)]
#[command(name = "cqpl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print debug messages about each pass on stderr
    #[arg(long, global = true)]
    debug: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Type-check and execute a program
    Run(RunArgs),
    /// Run the lexical, syntactic and semantic passes only
    Check(Input),
    /// Print the Kraus semantics extracted from a program
    Semantics(SemanticsArgs),
    /// Decide whether two programs denote the same semantics
    Equiv(EquivArgs),
}

#[derive(Args, Debug)]
struct Input {
    /// Source file; standard input when omitted
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    input: Input,
    /// Seed for measurements and random interleaving
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Size of the quantum heap in qbits
    #[arg(long, default_value_t = DEFAULT_HEAP, value_parser = at_least_one)]
    qheap: usize,
    /// Most qbits the dense simulator holds at once
    #[arg(long, default_value_t = DEFAULT_SIM_CAP, value_parser = at_least_one)]
    sim_cap: usize,
    /// Module order within a scheduling round
    #[arg(long, value_enum, default_value_t = Order::Roundrobin)]
    interleave: Order,
    /// Prefix each output line with the emitting module
    #[arg(long)]
    trace: bool,
    /// Deepest procedure call nesting
    #[arg(long, default_value_t = RunConfig::default().recursion_limit)]
    recursion_limit: usize,
    /// Abort after this many statements
    #[arg(long)]
    max_steps: Option<u64>,
}

#[derive(Args, Debug)]
struct SemanticsArgs {
    #[command(flatten)]
    input: Input,
    /// Link the modules into one schedule
    #[arg(long)]
    linked: bool,
    /// Apply the linked trace to the all-zero state and list the outcomes
    #[arg(long)]
    resolve: bool,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Most qbits a linked trace may hold
    #[arg(long, default_value_t = DEFAULT_RESOLVE_QBITS, value_parser = at_least_one)]
    max_qbits: usize,
}

#[derive(Args, Debug)]
struct EquivArgs {
    first: PathBuf,
    second: PathBuf,
    /// Which notion of equality to decide
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Most qbits compared in channel mode
    #[arg(long, default_value_t = DEFAULT_MAX_QBITS, value_parser = at_least_one)]
    max_qbits: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Order {
    Roundrobin,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Exact,
    Reorder,
    Channel,
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// A failure that ends the process with the given exit code after its
/// message is written to stderr.
struct Exit(u8, String);

type Outcome = Result<(), Exit>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let debug = cli.debug;
    let result = match cli.command {
        Command::Run(a) => run(a, debug),
        Command::Check(a) => check(a, debug),
        Command::Semantics(a) => semantics(a, debug),
        Command::Equiv(a) => equiv(a, debug),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code, message)) => {
            if !message.is_empty() {
                eprintln!("{message}");
            }
            ExitCode::from(code)
        }
    }
}

fn log(debug: bool, message: impl FnOnce() -> String) {
    if debug {
        eprintln!("debug: {}", message());
    }
}

/// Writes a line to stdout. A closed pipe is not an error.
fn emit(line: &str) {
    let _ = writeln!(io::stdout(), "{line}");
}

fn read(input: &Option<PathBuf>) -> Result<(String, String), Exit> {
    match input {
        Some(path) => std::fs::read_to_string(path)
            .map(|s| (path.display().to_string(), s))
            .map_err(|e| Exit(EXIT_USAGE, format!("cqpl: cannot read {}: {e}", path.display()))),
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Exit(EXIT_USAGE, format!("cqpl: cannot read standard input: {e}")))?;
            Ok(("<stdin>".to_string(), s))
        }
    }
}

fn load(input: &Option<PathBuf>, debug: bool) -> Result<(String, CheckedProgram), Exit> {
    let (name, source) = read(input)?;
    log(debug, || format!("read {} bytes from {name}", source.len()));
    match check_source(&source) {
        Ok(p) => {
            log(debug, || format!("{name}: syntax and type check passed"));
            Ok((name, p))
        }
        Err(ds) => {
            let lines: Vec<String> = ds.iter().map(|d| d.render(&name)).collect();
            Err(Exit(EXIT_DIAGNOSTICS, lines.join("\n")))
        }
    }
}

fn run(a: RunArgs, debug: bool) -> Outcome {
    let (name, program) = load(&a.input.input, debug)?;
    let config = RunConfig {
        seed: a.seed,
        heap: a.qheap,
        sim_cap: a.sim_cap,
        interleave: match a.interleave {
            Order::Roundrobin => Interleave::RoundRobin,
            Order::Random => Interleave::Random,
        },
        recursion_limit: a.recursion_limit,
        max_steps: a.max_steps,
        check_ownership: debug,
    };
    log(debug, || format!("{config:?}"));
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let trace = a.trace;
    let mut sink = |module: &str, line: &str| {
        let _ = if trace {
            writeln!(out, "{module}: {line}")
        } else {
            writeln!(out, "{line}")
        };
        let _ = out.flush();
    };
    let result = run_program(program.program(), &config, &mut sink);
    match result {
        Ok(stats) => {
            log(debug, || format!("finished after {} steps in {} rounds", stats.steps, stats.rounds));
            Ok(())
        }
        Err(e) => Err(Exit(EXIT_RUNTIME, e.render(&name))),
    }
}

fn check(a: Input, debug: bool) -> Outcome {
    let (name, program) = load(&a.input, debug)?;
    match comm_balance_check(program.program()) {
        BalanceReport::Imbalanced(ds) => {
            for d in ds {
                eprintln!("{}", d.render(&name));
            }
        }
        BalanceReport::Unknown(why) => log(debug, || format!("communication balance unknown: {why}")),
        BalanceReport::Balanced(traffic) => log(debug, || format!("communication balanced over {} channels", traffic.len())),
    }
    emit(&format!("{name}: ok"));
    Ok(())
}

fn json(value: &impl serde::Serialize) -> Result<String, Exit> {
    serde_json::to_string_pretty(value).map_err(|e| Exit(EXIT_RUNTIME, format!("cqpl: {e}")))
}

fn render_halt(h: &Halt) -> String {
    format!("Halt {h}")
}

fn semantics(a: SemanticsArgs, debug: bool) -> Outcome {
    let (name, program) = load(&a.input.input, debug)?;
    let fail = |e: cqpl::kraus::SemanticsError| Exit(EXIT_RUNTIME, format!("{name}: error[{}]: {}", e.code, e.message));
    let sem = extract_semantics(&program).map_err(fail)?;
    log(debug, || format!("extracted {} module traces", sem.modules.len()));
    if !a.linked && !a.resolve {
        let text = match a.format {
            Format::Text => sem.to_string(),
            Format::Json => json(&sem)?,
        };
        emit(text.trim_end());
        return Ok(());
    }
    let composite = compose(&sem, a.max_qbits).map_err(fail)?;
    log(debug, || format!("linked trace holds {} qbits", composite.qbits));
    if !a.resolve {
        let text = match a.format {
            Format::Text => composite.to_string(),
            Format::Json => json(&composite)?,
        };
        emit(text.trim_end());
        return Ok(());
    }
    match a.format {
        Format::Json => emit(&json(&composite.resolve(a.max_qbits).map_err(fail)?)?),
        Format::Text => {
            for (lines, halt, p) in composite.distribution(a.max_qbits).map_err(fail)? {
                let mut parts: Vec<String> = Vec::new();
                for (module, out) in composite.modules.iter().zip(&lines) {
                    parts.extend(out.iter().map(|l| format!("{module}: {l}")));
                }
                parts.extend(halt.as_ref().map(render_halt));
                emit(&format!("{}  {}", format_probability(p), parts.join(" | ")));
            }
        }
    }
    Ok(())
}

fn equiv(a: EquivArgs, debug: bool) -> Outcome {
    let (_, p1) = load(&Some(a.first.clone()), debug)?;
    let (_, p2) = load(&Some(a.second.clone()), debug)?;
    let mode = match a.mode {
        Mode::Exact => EquivMode::Exact,
        Mode::Reorder => EquivMode::Reorder,
        Mode::Channel => EquivMode::Channel,
    };
    let same = programs_equiv(&p1, &p2, mode, a.max_qbits)
        .map_err(|e| Exit(EXIT_RUNTIME, format!("cqpl: error[{}]: {}", e.code, e.message)))?;
    emit(&same.to_string());
    Ok(())
}
