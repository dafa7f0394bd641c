//! Lexing and parsing of cQPL source text.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod token;

pub use ast::*;
pub use lexer::{tokenize, LexError};
pub use parser::{parse, ParseError};
pub use token::{Keyword, Op, Pos, Punct, Token, TokenKind};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntaxError {
    #[error("lexical error at {0}")]
    Lex(#[from] LexError),
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn pos(&self) -> Pos {
        match self {
            SyntaxError::Lex(e) => e.pos(),
            SyntaxError::Parse(e) => e.pos,
        }
    }
}

/// Tokenizes and parses in one step.
pub fn parse_source(source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}
