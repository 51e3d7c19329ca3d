//! Snapshots, the symbolic transition rules, and qLTS construction.

mod dist;
mod export;
mod qlts;
mod snapshot;
mod step;

pub use dist::*;
pub use export::*;
pub use qlts::*;
pub use snapshot::*;
pub use step::*;
