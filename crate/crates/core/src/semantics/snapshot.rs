use crate::syntax::{alpha_normal, Term};
use crate::SuperOp;

/// `⟦t, E⟧`: a term together with its trace-preserving history.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub term: Term,
    pub env: SuperOp,
}

impl Snapshot {
    pub fn new(term: Term, env: SuperOp) -> Self {
        Snapshot { term, env }
    }

    pub fn initial(term: Term, registers: usize) -> Self {
        Snapshot { term, env: SuperOp::identity(registers) }
    }
}

/// Alpha-equivalent terms and Choi-equal histories.
pub fn snapshot_eq(a: &Snapshot, b: &Snapshot, tol: f64) -> bool {
    alpha_normal(&a.term) == alpha_normal(&b.term) && a.env.choi_eq(&b.env, tol)
}
