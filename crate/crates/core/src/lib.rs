//! A small object calculus with flow-sensitive record constraints: syntax,
//! parser, constraint algebra, typechecker, small-step interpreter, runtime
//! model and a randomized soundness harness.

pub mod constraints;
pub mod eval;
pub mod generator;
pub mod model;
pub mod parser;
pub mod props;
pub mod syntax;
pub mod trial;
pub mod typeck;

pub use parser::{parse_constraints, parse_program, parse_type, pretty_print, ParseError};
pub use syntax::*;
pub use typeck::{typecheck_program, Checker, TypeError, TypeErrorKind, TypeResult, TypeState};
