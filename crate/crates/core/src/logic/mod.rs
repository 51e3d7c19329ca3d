//! The quantum modal logic: formulas, satisfaction over snapshots and
//! distributions, and bounded search for distinguishing formulas.

mod ast;
mod parse;
mod sat;
mod search;

pub use ast::*;
pub use parse::{parse_formula, parse_op_expr};
pub use sat::*;
pub use search::*;
