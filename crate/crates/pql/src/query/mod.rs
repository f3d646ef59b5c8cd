//! PQL: parsing, printing and evaluation of queries.

pub mod ast;
mod eval;
mod lexer;
mod parser;
mod print;
pub mod templates;

use std::fmt;

pub use ast::*;
pub use eval::{evaluate, resolve_task, EvalError, EvalOptions, QueryResult, Row};
pub use lexer::{tokenize, Tok, Token};
pub use parser::parse;
pub use print::dump_parse_tree;

/// Lexical or syntax error. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
    /// Tokens that would have been accepted at the error position.
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn at(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
            expected: Vec::new(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.col, self.message
        )?;
        if !self.expected.is_empty() {
            write!(f, "; expected one of: {}", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}
