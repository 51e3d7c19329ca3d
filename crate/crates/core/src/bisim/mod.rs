//! The most general boolean under which two snapshots are symbolically
//! ground bisimilar, with the table of booleans for the visited pairs.

mod algorithm;
mod table;
mod unionfind;

pub use algorithm::*;
pub use table::Table;
pub use unionfind::{equivalence_closure, UnionFind};
