use std::collections::BTreeMap;

use super::qlts::SnapId;
use crate::error::{Error, Result};
use crate::quantum::RegSet;
use crate::SuperOp;

/// Super-operator valued distribution over interned snapshots.
pub type SoDist = Vec<(SnapId, SuperOp)>;

/// `Σ_i A_i • Δ_i`: the entry for `s` is `Σ_i Δ_i(s) ∘ A_i`. Zero entries
/// are dropped.
pub fn combine(n: usize, weights: &[SuperOp], dists: &[SoDist], tol: f64) -> Result<SoDist> {
    if weights.len() != dists.len() {
        return Err(Error::Quantum(format!("combine: {} weights for {} distributions", weights.len(), dists.len())));
    }
    let total = SuperOp::sum(n, weights.iter());
    if !total.eqsim_v(&SuperOp::identity(n), RegSet::EMPTY, tol) {
        return Err(Error::Quantum("combine: weights do not sum to the identity".into()));
    }
    let mut acc: BTreeMap<SnapId, SuperOp> = BTreeMap::new();
    for (a, d) in weights.iter().zip(dists) {
        for (s, w) in d {
            let term = w.compose(a);
            match acc.remove(s) {
                Some(prev) => acc.insert(*s, prev.add(&term)),
                None => acc.insert(*s, term),
            };
        }
    }
    Ok(acc.into_iter().filter(|(_, w)| !w.is_zero(tol)).collect())
}

/// `E • Δ`: every weight composed after the history `E`.
pub fn after_env(e: &SuperOp, d: &SoDist, tol: f64) -> SoDist {
    d.iter().map(|(s, w)| (*s, w.compose(e))).filter(|(_, w)| !w.is_zero(tol)).collect()
}

/// Total weight of a distribution.
pub fn total_weight(n: usize, d: &SoDist) -> SuperOp {
    SuperOp::sum(n, d.iter().map(|(_, w)| w))
}
