//! Lexer, parser and pretty-printer for the toy language.

mod lexer;
mod parser;
mod printer;

pub use lexer::{tokenize, tokenize_bytes, LexError, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use printer::{expr_to_string, format_double, pretty_print};

use crate::ast::Program;

/// A small two-function program used by the benchmarks and examples.
pub const SAMPLE_PROGRAM: &str = "\
int compute(int A, int B) {
    return B + 2*A
}
int A1 = (5 + 7) * 14
int A2 = compute(A1, 11)
return A2 + compute(11, 12 + 2)
";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("lex error at {0}")]
    Lex(#[from] LexError),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
}

impl FrontendError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            FrontendError::Lex(e) => (e.line, e.column),
            FrontendError::Parse(e) => (e.line, e.column),
        }
    }
}

/// `tokenize` followed by `parse`; the first error wins.
pub fn parse_source(source: &str) -> Result<Program, FrontendError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}

/// Like [`parse_source`] but starting from raw bytes, which may not be valid UTF-8.
pub fn parse_bytes(source: &[u8]) -> Result<Program, FrontendError> {
    let tokens = tokenize_bytes(source)?;
    Ok(parse(&tokens)?)
}
