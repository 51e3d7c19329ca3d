use std::collections::HashMap;

use rayon::prelude::*;

use super::snapshot::Snapshot;
use super::step::{Stepper, TermTransition};
use crate::error::{Error, Result};
use crate::quantum::RegSet;
use crate::syntax::*;
use crate::SuperOp;

pub type SnapId = usize;

pub const DEFAULT_STATE_CAP: usize = 10_000;

/// A transition of the qLTS: guard, action, and a super-operator valued
/// distribution over snapshots. Weights are as emitted by the rules, not yet
/// composed with the source history.
#[derive(Clone, Debug)]
pub struct SymTransition {
    pub guard: BExp,
    pub action: Action,
    pub target: Vec<(SnapId, SuperOp)>,
}

/// Reachable snapshots with their transitions. Several roots may share one
/// store, so snapshots of the two sides of a check are compared by id.
pub struct Qlts<'p> {
    stepper: Stepper<'p>,
    tol: f64,
    cap: usize,
    states: Vec<Snapshot>,
    qv: Vec<RegSet>,
    keys: HashMap<Term, Vec<SnapId>>,
    trans: Vec<Option<Vec<SymTransition>>>,
}

impl<'p> Qlts<'p> {
    pub fn new(prog: &'p Program, tol: f64, cap: usize) -> Self {
        Qlts {
            stepper: Stepper::new(prog),
            tol,
            cap: cap.max(1),
            states: Vec::new(),
            qv: Vec::new(),
            keys: HashMap::new(),
            trans: Vec::new(),
        }
    }

    pub fn program(&self) -> &'p Program {
        self.stepper.program()
    }

    pub fn registers(&self) -> usize {
        self.program().universe_size()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn snapshot(&self, id: SnapId) -> &Snapshot {
        &self.states[id]
    }

    /// Free quantum variables of the snapshot's term as a register set.
    pub fn qv(&self, id: SnapId) -> RegSet {
        self.qv[id]
    }

    pub fn transitions(&self, id: SnapId) -> &[SymTransition] {
        self.trans[id].as_deref().expect("snapshot not explored")
    }

    pub fn is_explored(&self, id: SnapId) -> bool {
        self.trans[id].is_some()
    }

    fn regset(&self, names: &std::collections::BTreeSet<Name>) -> Result<RegSet> {
        let p = self.program();
        names
            .iter()
            .map(|q| p.register_index(q).ok_or_else(|| Error::Static(format!("'{q}' is not a register"))))
            .collect::<Result<Vec<_>>>()
            .map(RegSet::from_indices)
    }

    /// Returns the id of an equal snapshot, adding it if new.
    pub fn intern(&mut self, term: Term, env: SuperOp) -> Result<SnapId> {
        let key = alpha_normal(&term);
        if let Some(ids) = self.keys.get(&key) {
            for &id in ids {
                if self.states[id].env.choi_eq(&env, self.tol) {
                    return Ok(id);
                }
            }
        }
        if self.states.len() >= self.cap {
            return Err(Error::StateCapExceeded { cap: self.cap });
        }
        let qv_set = self.regset(&qv(&term, self.program()))?;
        let id = self.states.len();
        self.states.push(Snapshot { term, env });
        self.qv.push(qv_set);
        self.trans.push(None);
        self.keys.entry(key).or_default().push(id);
        Ok(id)
    }

    pub fn add_root(&mut self, term: Term) -> Result<SnapId> {
        let env = SuperOp::identity(self.registers());
        self.intern(term, env)
    }

    /// Explores everything reachable from `roots`, frontier by frontier.
    pub fn explore(&mut self, roots: &[SnapId]) -> Result<()> {
        let mut frontier: Vec<SnapId> = roots.iter().copied().filter(|&r| !self.is_explored(r)).collect();
        frontier.sort_unstable();
        frontier.dedup();
        while !frontier.is_empty() {
            let stepped: Vec<Result<Vec<TermTransition>>> = frontier
                .par_iter()
                .map(|&id| self.canonical_step(&self.states[id].term))
                .collect();
            let mut next = Vec::new();
            for (&id, res) in frontier.iter().zip(stepped) {
                let raw = res?;
                let env = self.states[id].env.clone();
                let mut out = Vec::with_capacity(raw.len());
                for tr in raw {
                    let mut target: Vec<(SnapId, SuperOp)> = Vec::new();
                    for br in tr.branches {
                        let env2 = match &br.post {
                            Some(f) => f.compose(&env),
                            None => env.clone(),
                        };
                        let w = br.weight.unwrap_or_else(|| SuperOp::identity(self.registers()));
                        let sid = self.intern(br.term, env2)?;
                        if let Some(slot) = target.iter_mut().find(|(s, _)| *s == sid) {
                            slot.1 = slot.1.add(&w);
                        } else {
                            target.push((sid, w));
                        }
                        if !self.is_explored(sid) {
                            next.push(sid);
                        }
                    }
                    target.retain(|(_, w)| !w.is_zero(self.tol));
                    out.push(SymTransition { guard: tr.guard, action: tr.action, target });
                }
                self.trans[id] = Some(out);
            }
            next.sort_unstable();
            next.dedup();
            next.retain(|&s| !self.is_explored(s));
            frontier = next;
        }
        Ok(())
    }

    /// Steps a state's term and fixes the names of top-level input binders:
    /// a classical binder keeps its name unless free in the term; a quantum
    /// binder becomes the first spare register the term does not use.
    fn canonical_step(&self, t: &Term) -> Result<Vec<TermTransition>> {
        let prog = self.program();
        let raw = self.stepper.step(t)?;
        raw.into_iter()
            .map(|mut tr| {
                match tr.action.clone() {
                    Action::CIn(c, x) => {
                        let ft = fv(t);
                        if ft.contains(&x) {
                            let mut avoid = ft;
                            for br in &tr.branches {
                                avoid.extend(fv(&br.term));
                            }
                            let x2 = fresh(&x, &avoid);
                            let cs = CSubst::from([(x.clone(), Exp::Var(x2.clone()))]);
                            for br in &mut tr.branches {
                                br.term = subst(&br.term, &cs, &QSubst::new());
                            }
                            tr.action = Action::CIn(c, x2);
                        }
                    }
                    Action::QIn(c, q) => {
                        let used = qv(t, prog);
                        let spare = prog
                            .spares
                            .iter()
                            .find(|r| !used.contains(*r))
                            .cloned()
                            .ok_or_else(|| Error::Static(format!("no spare register free to receive on '{c}'")))?;
                        let qs = QSubst::from([(q.clone(), spare.clone())]);
                        for br in &mut tr.branches {
                            br.term = subst(&br.term, &CSubst::new(), &qs);
                        }
                        tr.action = Action::QIn(c, spare);
                    }
                    _ => {}
                }
                Ok(tr)
            })
            .collect()
    }

    /// Ids reachable from `roots` (which must be explored).
    pub fn reachable(&self, roots: &[SnapId]) -> Vec<SnapId> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<SnapId> = roots.to_vec();
        let mut out = Vec::new();
        while let Some(s) = stack.pop() {
            if std::mem::replace(&mut seen[s], true) {
                continue;
            }
            out.push(s);
            for tr in self.transitions(s) {
                for (t, _) in &tr.target {
                    stack.push(*t);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// No reachable snapshot can perform a quantum input.
    pub fn quantum_input_free(&self, roots: &[SnapId]) -> bool {
        self.reachable(roots)
            .into_iter()
            .all(|s| self.transitions(s).iter().all(|tr| !matches!(tr.action, Action::QIn(..))))
    }

    pub fn transition_count(&self, roots: &[SnapId]) -> usize {
        self.reachable(roots).into_iter().map(|s| self.transitions(s).len()).sum()
    }
}

/// Builds the qLTS of `⟦t, I⟧`.
pub fn reachable_qlts<'p>(prog: &'p Program, t: &Term, tol: f64, cap: usize) -> Result<(Qlts<'p>, SnapId)> {
    let mut q = Qlts::new(prog, tol, cap);
    let root = q.add_root(t.clone())?;
    q.explore(&[root])?;
    Ok((q, root))
}
