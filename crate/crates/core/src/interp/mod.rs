//! Operational execution of checked programs.

mod machine;
mod output;
pub mod value;

pub use machine::{Gateway, Machine, Status};
pub use output::{OutputLine, OutputSink, Transcript};
pub use value::{eval_binary, eval_unary, EvalError, Value};

use crate::syntax::Pos;
use std::fmt;

/// A failure during execution.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeError {
    pub code: &'static str,
    pub message: String,
    pub pos: Option<Pos>,
    pub module: Option<String>,
}

impl RuntimeError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        RuntimeError {
            code,
            message: message.into(),
            pos: None,
            module: None,
        }
    }

    pub fn at(mut self, pos: Pos) -> Self {
        self.pos.get_or_insert(pos);
        self
    }

    pub fn in_module(mut self, module: &str) -> Self {
        self.module.get_or_insert_with(|| module.to_string());
        self
    }

    /// `file:line:col: error[CODE]: message`, without the position when the
    /// error is not tied to a statement.
    pub fn render(&self, file: &str) -> String {
        let module = match &self.module {
            Some(m) => format!(" (module {m})"),
            None => String::new(),
        };
        match self.pos {
            Some(p) => format!(
                "{}:{}:{}: error[{}]: {}{}",
                file, p.line, p.column, self.code, self.message, module
            ),
            None => format!("{}: error[{}]: {}{}", file, self.code, self.message, module),
        }
    }
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl std::error::Error for RuntimeError {}

impl From<crate::qcore::QError> for RuntimeError {
    fn from(e: crate::qcore::QError) -> Self {
        RuntimeError::new(e.code(), e.to_string())
    }
}

impl From<EvalError> for RuntimeError {
    fn from(e: EvalError) -> Self {
        RuntimeError::new(e.code(), e.to_string())
    }
}
