use std::collections::HashMap;

use super::ast::*;
use super::sat::{Dist, Model};
use crate::bisim::equivalence_closure;
use crate::boolean::{ConcreteAction, Evaluation};
use crate::error::Result;
use crate::quantum::RegSet;
use crate::semantics::{Qlts, SnapId};
use crate::syntax::*;
use crate::SuperOp;

/// Bounded search for formulas telling snapshots apart. Formulas are built
/// from the histories and weights that occur in the qLTS, and every
/// candidate is checked against the satisfaction relation before use.
pub struct Search<'a, 'p> {
    model: Model<'a, 'p>,
    psi: Evaluation,
    memo: HashMap<(SnapId, SnapId, usize), Option<Formula>>,
}

fn label_to_faction(a: &ConcreteAction) -> FAction {
    match a {
        ConcreteAction::Tau => FAction::Tau,
        ConcreteAction::COut(c, v) => FAction::Out(c.clone(), Exp::Lit(v.clone())),
        ConcreteAction::CIn(c, v) => FAction::In(c.clone(), Exp::Lit(v.clone())),
        ConcreteAction::QOut(c, q) => FAction::QOut(c.clone(), q.clone()),
        ConcreteAction::QIn(c, q) => FAction::QIn(c.clone(), q.clone()),
    }
}

impl<'a, 'p> Search<'a, 'p> {
    pub fn new(q: &'a mut Qlts<'p>, psi: Evaluation) -> Self {
        Search { model: Model::new(q), psi, memo: HashMap::new() }
    }

    pub fn model(&mut self) -> &mut Model<'a, 'p> {
        &mut self.model
    }

    fn names(&self, regs: RegSet) -> Vec<Name> {
        let u = self.model.qlts().program().universe();
        regs.iter().map(|i| u[i].clone()).collect()
    }

    fn op_label(&self, op: &SuperOp, fallback: String) -> OpExpr {
        let n = self.model.qlts().registers();
        let tol = self.model.qlts().tol();
        let text = if op.choi_eq(&SuperOp::identity(n), tol) {
            "I".to_string()
        } else if op.is_zero(tol) {
            "0".to_string()
        } else {
            fallback
        };
        OpExpr::new(text, op.clone())
    }

    fn env_atom(&self, s: SnapId, regs: RegSet) -> Formula {
        let env = self.model.qlts().snapshot(s).env.clone();
        Formula::Atom { g: self.op_label(&env, format!("env(s{s})")), regs, names: self.names(regs) }
    }

    /// A formula of diamond depth at most `depth` that `s` satisfies and
    /// `u` does not.
    pub fn separate(&mut self, s: SnapId, u: SnapId, depth: usize) -> Result<Option<Formula>> {
        if s == u {
            return Ok(None);
        }
        if let Some(hit) = self.memo.get(&(s, u, depth)) {
            return Ok(hit.clone());
        }
        // provisional entry so that cycles through the same query end
        self.memo.insert((s, u, depth), None);
        let found = self.separate_uncached(s, u, depth)?;
        self.memo.insert((s, u, depth), found.clone());
        if let Some(f) = &found {
            self.memo.insert((u, s, depth), Some(Formula::not(f.clone())));
        }
        Ok(found)
    }

    fn separate_uncached(&mut self, s: SnapId, u: SnapId, depth: usize) -> Result<Option<Formula>> {
        let n = self.model.qlts().registers();
        let (qs, qu) = (self.model.qlts().qv(s), self.model.qlts().qv(u));
        if qs != qu {
            if let Some(r) = qu.minus(qs).iter().next() {
                return Ok(Some(self.env_atom(s, RegSet::single(r))));
            }
            let r = qs.minus(qu).iter().next().expect("sets differ");
            return Ok(Some(Formula::not(self.env_atom(u, RegSet::single(r)))));
        }
        let rest = qs.complement(n);
        if !rest.is_empty() {
            let atom = self.env_atom(s, rest);
            if !self.model.sat(&self.psi, u, &atom)? {
                return Ok(Some(atom));
            }
        }
        if depth == 0 {
            return Ok(None);
        }
        if let Some(f) = self.diamond(s, u, depth)? {
            return Ok(Some(f));
        }
        if let Some(f) = self.diamond(u, s, depth)? {
            return Ok(Some(Formula::not(f)));
        }
        Ok(None)
    }

    /// `⟨α⟩Φ` true at `s` and false at `u`.
    fn diamond(&mut self, s: SnapId, u: SnapId, depth: usize) -> Result<Option<Formula>> {
        let psi = self.psi.clone();
        let moves = self.model.moves(&psi, s)?;
        'moves: for (alpha, delta) in moves {
            let others = self.model.moves_on(&psi, u, &alpha)?;
            let mut parts = Vec::new();
            for xi in &others {
                match self.separate_dist(&delta, xi, depth - 1)? {
                    Some(d) => parts.push(d),
                    None => continue 'moves,
                }
            }
            if parts.is_empty() {
                let total = self.model.mass(&psi, &delta, &Formula::truth())?;
                parts.push(DistFormula::AtLeast(self.op_label(&total, "mass(true)".to_string()), Box::new(Formula::truth())));
            }
            let f = Formula::Dia(label_to_faction(&alpha), DistFormula::and(parts));
            if self.model.sat(&psi, s, &f)? && !self.model.sat(&psi, u, &f)? {
                return Ok(Some(f));
            }
        }
        Ok(None)
    }

    /// A distribution formula `delta` satisfies and `xi` does not.
    pub fn separate_dist(&mut self, delta: &Dist, xi: &Dist, depth: usize) -> Result<Option<DistFormula>> {
        let psi = self.psi.clone();
        let mut support: Vec<SnapId> = delta.iter().chain(xi).map(|(s, _)| *s).collect();
        support.sort_unstable();
        support.dedup();
        let mut same = Vec::new();
        for (i, &a) in support.iter().enumerate() {
            for &b in &support[i + 1..] {
                if self.separate(a, b, depth)?.is_none() && self.separate(b, a, depth)?.is_none() {
                    same.push((a, b));
                }
            }
        }
        let classes = equivalence_closure(support.iter().copied(), same);
        for class in &classes {
            let rep = class[0];
            let mut conj = Vec::new();
            for &o in &support {
                if class.contains(&o) {
                    continue;
                }
                if let Some(f) = self.separate(rep, o, depth)? {
                    conj.push(f);
                }
            }
            let chi = Formula::and(conj);
            let d_in = self.model.mass(&psi, delta, &chi)?;
            let cand = DistFormula::AtLeast(self.op_label(&d_in, format!("mass(s{rep})")), Box::new(chi.clone()));
            if self.model.sat_dist(&psi, delta, &cand)? && !self.model.sat_dist(&psi, xi, &cand)? {
                return Ok(Some(cand));
            }
            let not_chi = Formula::not(chi);
            let d_out = self.model.mass(&psi, delta, &not_chi)?;
            let dual = DistFormula::AtLeast(self.op_label(&d_out, format!("mass(not s{rep})")), Box::new(not_chi));
            if self.model.sat_dist(&psi, delta, &dual)? && !self.model.sat_dist(&psi, xi, &dual)? {
                return Ok(Some(dual));
            }
        }
        Ok(None)
    }
}

/// The dual of a distribution formula that `xi` satisfies and `delta` does
/// not: a formula `delta` satisfies and `xi` does not.
pub fn dual_witness(model: &mut Model<'_, '_>, psi: &Evaluation, delta: &Dist, xi: &Dist, phi: &DistFormula) -> Result<Option<DistFormula>> {
    match phi {
        DistFormula::AtLeast(_, f) => {
            let not_f = Formula::not((**f).clone());
            let b = model.mass(psi, delta, &not_f)?;
            Ok(Some(DistFormula::AtLeast(OpExpr::new("mass(complement)", b), Box::new(not_f))))
        }
        DistFormula::AndD(parts) => {
            let mut out = Vec::new();
            for p in parts {
                if model.sat_dist(psi, delta, p)? {
                    out.push(p.clone());
                } else {
                    match dual_witness(model, psi, delta, xi, p)? {
                        Some(d) => out.push(d),
                        None => return Ok(None),
                    }
                }
            }
            Ok(Some(DistFormula::AndD(out)))
        }
    }
}

/// Result of a distinguishing-formula search.
#[derive(Clone, Debug)]
pub struct Witness {
    pub formula: Formula,
    pub depth: usize,
    pub left: bool,
    pub right: bool,
}

/// Searches for a formula of depth at most `depth` satisfied by exactly one
/// of `⟦t, I⟧` and `⟦u, I⟧` under `psi`.
pub fn distinguish(prog: &Program, t: &Term, u: &Term, psi: &Evaluation, depth: usize, tol: f64, cap: usize) -> Result<Option<Witness>> {
    let mut q = Qlts::new(prog, tol, cap);
    let a = q.add_root(t.clone())?;
    let b = q.add_root(u.clone())?;
    q.explore(&[a, b])?;
    distinguish_in(&mut q, psi, a, b, depth)
}

/// Like [`distinguish`] on snapshots of an existing qLTS, trying depths
/// in increasing order so that the witness is as shallow as possible.
pub fn distinguish_in(q: &mut Qlts<'_>, psi: &Evaluation, a: SnapId, b: SnapId, depth: usize) -> Result<Option<Witness>> {
    let mut search = Search::new(q, psi.clone());
    for d in 0..=depth {
        if let Some(f) = search.separate(a, b, d)? {
            let left = search.model().sat(psi, a, &f)?;
            let right = search.model().sat(psi, b, &f)?;
            return Ok(Some(Witness { depth: f.depth(), formula: f, left, right }));
        }
    }
    Ok(None)
}
