use thiserror::Error;

use crate::syntax::Pos;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{pos}: {msg}")]
    Parse { pos: Pos, msg: String },
    #[error("{0}")]
    Static(String),
    #[error("state cap of {cap} snapshots exceeded")]
    StateCapExceeded { cap: usize },
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("{0}")]
    Quantum(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn parse(pos: Pos, msg: impl Into<String>) -> Error {
        Error::Parse { pos, msg: msg.into() }
    }
}
