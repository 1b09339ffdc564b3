//! Text formats: litmus programs, annotated programs (proof outlines) and
//! standalone assertions.
//!
//! A program file declares locations, then threads, then an optional
//! postcondition:
//!
//! ```text
//! program tx-mp
//! locations d
//! txlocations f
//! thread t1 {
//!   d := 5
//!   TxBegin^R({})
//!   TxWrite(f, 1)
//!   TxEnd
//! }
//! thread t2 {
//!   do {
//!     TxBegin^A({r1}); TxRead(f, r1); TxEnd
//!   } until r1 = 1
//!   r2 <- d
//! }
//! forall r2 = 5
//! ```
//!
//! Any name not declared as a location is a register, owned by the one
//! thread that mentions it. An outline file is a program with `{ ... }`
//! assertion blocks between statements plus optional top-level
//! `initially { ... }` and `finally { ... }` blocks.

mod assertion;
mod cursor;
mod lexer;
mod program;

use std::fmt;

use ratm_core::outline::ProofOutline;
use ratm_core::program::{BoolExpr, Postcondition, Program};
use ratm_core::taro::Assertion;

pub use lexer::Tok;

/// One-based line and column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError { pos, message: message.into() }
    }
}

/// Parses a program. Assertion blocks, if any, are checked and dropped.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    parse_outline(src).map(|(prog, _)| prog)
}

/// Parses an annotated program. Points without a block are annotated
/// `true`; a missing `finally` block means `true`.
pub fn parse_outline(src: &str) -> Result<(Program, ProofOutline), ParseError> {
    let toks = lexer::tokenize(src)?;
    program::parse(&toks)
}

/// Parses an assertion over `prog`'s names.
pub fn parse_assertion(src: &str, prog: &Program) -> Result<Assertion, ParseError> {
    let toks = lexer::tokenize(src)?;
    let mut cur = cursor::Cursor::new(&toks);
    let a = assertion::parse(&mut cur, prog)?;
    cur.finish()?;
    Ok(a)
}

/// Parses a postcondition over `prog`'s registers, with an optional leading
/// `forall` or `exists` (default `forall`).
pub fn parse_postcondition(src: &str, prog: &Program) -> Result<Postcondition, ParseError> {
    let toks = lexer::tokenize(src)?;
    let mut cur = cursor::Cursor::new(&toks);
    let post = program::postcondition(&mut cur, prog)?;
    cur.finish()?;
    Ok(post)
}

/// Parses a register predicate over `prog`'s registers.
pub fn parse_predicate(src: &str, prog: &Program) -> Result<BoolExpr, ParseError> {
    parse_postcondition(src, prog).map(|p| p.predicate)
}
