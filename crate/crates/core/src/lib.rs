pub mod bisim;
pub mod boolean;
pub mod cli;
pub mod error;
pub mod logic;
pub mod oracle;
pub mod quantum;
pub mod semantics;
pub mod syntax;

pub use error::{Error, Result};

pub type SuperOp = quantum::SuperOpT<f64>;
pub type DensityMatrix = quantum::DensityMatrixT<f64>;
pub type Measurement = quantum::MeasurementT<f64>;

use std::sync::OnceLock;

/// Default numerical tolerance, overridable through `QSYMB_TOL`.
pub fn default_tol() -> f64 {
    static TOL: OnceLock<f64> = OnceLock::new();
    *TOL.get_or_init(|| {
        std::env::var("QSYMB_TOL")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|t| *t > 0.0 && t.is_finite())
            .unwrap_or(1e-9)
    })
}
