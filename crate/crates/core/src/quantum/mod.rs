//! Dense complex linear algebra and the semiring of completely positive maps
//! over a finite universe of named qubit registers.
//!
//! Everything here is generic over the real scalar ([`Scalar`]); the rest of
//! the crate uses the `f64` aliases re-exported at the crate root.

mod builtin;
mod matrix;
mod superop;

pub use builtin::*;
pub use matrix::*;
pub use superop::*;
