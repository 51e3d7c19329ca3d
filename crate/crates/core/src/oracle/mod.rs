//! Concrete semantics over explicit density matrices, ground bisimilarity
//! of the resulting probabilistic systems, and sampling-based comparison
//! with the symbolic checker.

mod concrete;
mod crosscheck;
mod plts;
mod sample;

pub use concrete::*;
pub use crosscheck::*;
pub use plts::*;
pub use sample::*;
