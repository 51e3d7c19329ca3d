use super::ast::*;
use crate::boolean::{eval, eval_exp, ConcreteAction, Evaluation};
use crate::error::{Error, Result};
use crate::semantics::{Qlts, SnapId};
use crate::syntax::*;
use crate::SuperOp;

/// A super-operator valued distribution over snapshots.
pub type Dist = crate::semantics::SoDist;

/// Evaluates formulas over a qLTS, adding snapshots reached by applying
/// super-operators or fixing input values as needed.
pub struct Model<'a, 'p> {
    q: &'a mut Qlts<'p>,
    notes: Vec<String>,
}

impl<'a, 'p> Model<'a, 'p> {
    pub fn new(q: &'a mut Qlts<'p>) -> Self {
        Model { q, notes: Vec::new() }
    }

    pub fn qlts(&self) -> &Qlts<'p> {
        self.q
    }

    /// Applications that were unsatisfied because the operator touches
    /// registers the term owns or is not trace preserving.
    pub fn ill_kinded(&self) -> &[String] {
        &self.notes
    }

    fn tol(&self) -> f64 {
        self.q.tol()
    }

    fn explored(&mut self, s: SnapId) -> Result<()> {
        if !self.q.is_explored(s) {
            self.q.explore(&[s])?;
        }
        Ok(())
    }

    /// The concrete label of a diamond action under `psi`.
    pub fn label(psi: &Evaluation, a: &FAction) -> Result<ConcreteAction> {
        Ok(match a {
            FAction::Tau => ConcreteAction::Tau,
            FAction::Out(c, e) => ConcreteAction::COut(c.clone(), eval_exp(psi, e)?),
            FAction::In(c, e) => ConcreteAction::CIn(c.clone(), eval_exp(psi, e)?),
            FAction::QOut(c, q) => ConcreteAction::QOut(c.clone(), q.clone()),
            FAction::QIn(c, q) => ConcreteAction::QIn(c.clone(), q.clone()),
        })
    }

    /// Every move of `s` enabled under `psi`, labelled concretely, with the
    /// target weights composed after the history of `s`. Inputs give one
    /// move per value of the binder's domain.
    pub fn moves(&mut self, psi: &Evaluation, s: SnapId) -> Result<Vec<(ConcreteAction, Dist)>> {
        self.explored(s)?;
        let env = self.q.snapshot(s).env.clone();
        let tol = self.tol();
        let mut out = Vec::new();
        for tr in self.q.transitions(s).to_vec() {
            if !eval(psi, &tr.guard)? {
                continue;
            }
            let alphas: Vec<ConcreteAction> = match &tr.action {
                Action::Tau => vec![ConcreteAction::Tau],
                Action::COut(c, e) => vec![ConcreteAction::COut(c.clone(), eval_exp(psi, e)?)],
                Action::QOut(c, q) => vec![ConcreteAction::QOut(c.clone(), q.clone())],
                Action::QIn(c, q) => vec![ConcreteAction::QIn(c.clone(), q.clone())],
                Action::CIn(c, x) => {
                    let dom = self
                        .q
                        .program()
                        .domain(x)
                        .ok_or_else(|| Error::Static(format!("input variable '{x}' has no domain")))?;
                    dom.iter().map(|v| ConcreteAction::CIn(c.clone(), v.clone())).collect()
                }
                other => return Err(Error::Static(format!("unexpected transition label {other:?}"))),
            };
            for alpha in alphas {
                let mut dist = Vec::new();
                for (t, w) in &tr.target {
                    let w = w.compose(&env);
                    if w.is_zero(tol) {
                        continue;
                    }
                    let t = match (&tr.action, &alpha) {
                        (Action::CIn(_, x), ConcreteAction::CIn(_, v)) => {
                            let snap = self.q.snapshot(*t);
                            let term = subst(&snap.term, &CSubst::from([(x.clone(), Exp::Lit(v.clone()))]), &QSubst::new());
                            let env = snap.env.clone();
                            self.q.intern(term, env)?
                        }
                        _ => *t,
                    };
                    dist.push((t, w));
                }
                out.push((alpha, dist));
            }
        }
        Ok(out)
    }

    /// Moves of `s` under `psi` whose label matches `alpha`.
    pub fn moves_on(&mut self, psi: &Evaluation, s: SnapId, alpha: &ConcreteAction) -> Result<Vec<Dist>> {
        Ok(self.moves(psi, s)?.into_iter().filter(|(a, _)| a == alpha).map(|(_, d)| d).collect())
    }

    pub fn sat(&mut self, psi: &Evaluation, s: SnapId, phi: &Formula) -> Result<bool> {
        match phi {
            Formula::Atom { g, regs, .. } => {
                let snap = self.q.snapshot(s);
                Ok(self.q.qv(s).intersect(*regs).is_empty() && snap.env.eqsim_v(&g.op, *regs, self.tol()))
            }
            Formula::Not(f) => Ok(!self.sat(psi, s, f)?),
            Formula::And(fs) => {
                for f in fs {
                    if !self.sat(psi, s, f)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Apply(g, f) => {
                let owned = self.q.qv(s);
                if !g.op.support().intersect(owned).is_empty() || !g.op.is_trace_preserving(self.tol()) {
                    self.notes.push(format!("{} is not a trace-preserving map outside the owned registers", g.text));
                    return Ok(false);
                }
                let snap = self.q.snapshot(s);
                let (term, env) = (snap.term.clone(), g.op.compose(&snap.env));
                let s2 = self.q.intern(term, env)?;
                self.sat(psi, s2, f)
            }
            Formula::Dia(a, d) => {
                let alpha = Self::label(psi, a)?;
                for dist in self.moves_on(psi, s, &alpha)? {
                    if self.sat_dist(psi, &dist, d)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    pub fn sat_dist(&mut self, psi: &Evaluation, d: &Dist, phi: &DistFormula) -> Result<bool> {
        match phi {
            DistFormula::AtLeast(a, f) => {
                let mass = self.mass(psi, d, f)?;
                Ok(a.op.lesssim_trace(&mass, self.tol()))
            }
            DistFormula::AndD(ds) => {
                for x in ds {
                    if !self.sat_dist(psi, d, x)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Total weight of the points satisfying `f`.
    pub fn mass(&mut self, psi: &Evaluation, d: &Dist, f: &Formula) -> Result<SuperOp> {
        let mut parts = Vec::new();
        for (s, w) in d {
            if self.sat(psi, *s, f)? {
                parts.push(w.clone());
            }
        }
        Ok(SuperOp::sum(self.q.registers(), parts.iter()))
    }
}

/// Checks `psi, ⟦t, I⟧ ⊨ phi` on a fresh qLTS.
pub fn satisfies_term(prog: &Program, t: &Term, psi: &Evaluation, phi: &Formula, tol: f64, cap: usize) -> Result<bool> {
    let mut q = Qlts::new(prog, tol, cap);
    let r = q.add_root(t.clone())?;
    Model::new(&mut q).sat(psi, r, phi)
}
