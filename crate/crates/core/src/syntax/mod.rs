//! Abstract syntax, the `.qccs` parser, and static analyses.

mod analysis;
mod ast;
mod lexer;
mod parser;
mod pretty;

pub use analysis::*;
pub use ast::*;
pub use lexer::{lex, Tok, Token};
pub use parser::{parse_bexp, parse_evaluation, parse_program, parse_term};
pub use pretty::pretty_program;
