//! The `.scop.dsl` loop nest language: parsing, checking and lowering to
//! iteration domain, schedule and access map.

mod ast;
mod interp;
mod lower;
mod parse;

use std::fmt;

pub use ast::{
    AccessKind, ArrayDecl, AssignOp, BinOp, Expr, ExprKind, Loop, LoopNestAst, Node, Pos, Ref, Stmt,
};
pub use interp::execution_order;
pub use lower::{lower, Access, Program, Statement};
pub use parse::{parse_program, parse_program_with};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    NonAffine,
    UndeclaredArray,
    Arity,
    UnknownIdentifier,
    Duplicate,
    /// A set operation failed while lowering.
    Internal,
}

/// A diagnostic with a source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrontendError {
    pub kind: ErrorKind,
    pub pos: Pos,
    pub msg: String,
}

impl FrontendError {
    pub fn new(kind: ErrorKind, pos: Pos, msg: String) -> Self {
        FrontendError { kind, pos, msg }
    }
}

impl fmt::Display for FrontendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for FrontendError {}

/// Parses and lowers in one step.
pub fn load(src: &str, overrides: &std::collections::HashMap<String, i64>, line_size: i64) -> Result<Program, FrontendError> {
    lower(&parse_program_with(src, overrides)?, line_size)
}
