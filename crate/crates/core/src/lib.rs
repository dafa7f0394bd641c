//! cQPL: a quantum programming language with communication primitives.
//!
//! The passes run in order: [`syntax`] turns source into an AST, [`types`]
//! enforces the typing judgments, and then either [`comm::run_program`]
//! executes the program on the [`qcore`] simulator or [`kraus`] extracts its
//! denotation as a Kraus aggregation.

pub mod comm;
pub mod interp;
pub mod kraus;
pub mod qcore;
pub mod syntax;
pub mod types;

pub use comm::{run_program, Interleave, RunConfig, RunStats};
pub use interp::{OutputSink, RuntimeError, Transcript};
pub use kraus::{extract_semantics, programs_equiv, EquivMode, Semantics};
pub use syntax::{parse_source, Program};
pub use types::{check_program, CheckedProgram, Code, Diagnostic, TypeSignature};

use std::fmt;

impl From<syntax::SyntaxError> for Diagnostic {
    fn from(e: syntax::SyntaxError) -> Self {
        let message = match &e {
            syntax::SyntaxError::Lex(l) => l.to_string(),
            syntax::SyntaxError::Parse(p) => p.to_string(),
        };
        Diagnostic::error(Code::Syntax, e.pos(), message)
    }
}

/// Parses and type-checks source text.
pub fn check_source(source: &str) -> Result<CheckedProgram, Vec<Diagnostic>> {
    let program = parse_source(source).map_err(|e| vec![Diagnostic::from(e)])?;
    check_program(program)
}

/// Why a program did not run to completion.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Rejected(Vec<Diagnostic>),
    Runtime(RuntimeError),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Rejected(ds) => {
                let lines: Vec<String> = ds.iter().map(|d| d.render("<input>")).collect();
                f.write_str(&lines.join("\n"))
            }
            Failure::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for Failure {}

/// Checks and runs source text, collecting its output.
pub fn run_source(source: &str, config: &RunConfig) -> Result<Transcript, Failure> {
    let checked = check_source(source).map_err(Failure::Rejected)?;
    let mut out = Transcript::default();
    run_program(checked.program(), config, &mut out).map_err(Failure::Runtime)?;
    Ok(out)
}
