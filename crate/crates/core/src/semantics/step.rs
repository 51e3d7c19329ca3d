use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::quantum::Builtin;
use crate::syntax::*;
use crate::SuperOp;

/// Calls unfolded in a row without passing a prefix before recursion is
/// declared unguarded.
pub const UNFOLD_LIMIT: usize = 256;

/// One point of a transition target: weight `B`, history update `F`, and
/// the continuation. `None` stands for the identity map.
#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: Option<SuperOp>,
    pub post: Option<SuperOp>,
    pub term: Term,
}

/// A transition of a bare term, independent of the environment it runs in.
#[derive(Clone, Debug)]
pub struct TermTransition {
    pub guard: BExp,
    pub action: Action,
    pub branches: Vec<Branch>,
}

impl TermTransition {
    fn point(guard: BExp, action: Action, term: Term) -> Self {
        TermTransition { guard, action, branches: vec![Branch { weight: None, post: None, term }] }
    }

    fn map_terms(mut self, f: impl Fn(Term) -> Term) -> Self {
        for b in &mut self.branches {
            b.term = f(std::mem::replace(&mut b.term, Term::Nil));
        }
        self
    }
}

/// Channel an action uses, if any.
pub fn action_channel(a: &Action) -> Option<&Name> {
    match a {
        Action::CIn(c, _) | Action::COut(c, _) | Action::QIn(c, _) | Action::QOut(c, _) => Some(c),
        _ => None,
    }
}

fn relabel_action(a: &Action, f: &[(Name, Name)]) -> Action {
    let map = |c: &Name| f.iter().find(|(x, _)| x == c).map(|(_, y)| y.clone()).unwrap_or_else(|| c.clone());
    match a {
        Action::CIn(c, x) => Action::CIn(map(c), x.clone()),
        Action::COut(c, e) => Action::COut(map(c), e.clone()),
        Action::QIn(c, q) => Action::QIn(map(c), q.clone()),
        Action::QOut(c, q) => Action::QOut(map(c), q.clone()),
        other => other.clone(),
    }
}

/// The symbolic transition rules on terms.
pub struct Stepper<'p> {
    prog: &'p Program,
}

impl<'p> Stepper<'p> {
    pub fn new(prog: &'p Program) -> Self {
        Stepper { prog }
    }

    pub fn program(&self) -> &'p Program {
        self.prog
    }

    fn regs(&self, names: &[Name]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|q| self.prog.register_index(q).ok_or_else(|| Error::Static(format!("'{q}' is not a register"))))
            .collect()
    }

    pub fn step(&self, t: &Term) -> Result<Vec<TermTransition>> {
        self.go(t, 0)
    }

    fn go(&self, t: &Term, unfolds: usize) -> Result<Vec<TermTransition>> {
        let n = self.prog.universe_size();
        Ok(match t {
            Term::Nil => Vec::new(),
            Term::Call(name, cargs, qargs) => {
                if unfolds >= UNFOLD_LIMIT {
                    return Err(Error::Static(format!("unguarded recursion through '{name}'")));
                }
                let body = unfold(self.prog, name, cargs, qargs)?;
                self.go(&body, unfolds + 1)?
            }
            Term::Prefix(a, body) => match a {
                Action::Tau | Action::CIn(..) | Action::COut(..) | Action::QIn(..) | Action::QOut(..) => {
                    vec![TermTransition::point(TRUE, a.clone(), (**body).clone())]
                }
                Action::Op(op, names) => {
                    let idx = self.regs(names)?;
                    let e = match self.prog.op(op) {
                        Some(Builtin::Op(o)) => o.lift(n, &idx),
                        _ => return Err(Error::Static(format!("'{op}' is not a super-operator"))),
                    };
                    vec![TermTransition {
                        guard: TRUE,
                        action: Action::Tau,
                        branches: vec![Branch { weight: None, post: Some(e), term: (**body).clone() }],
                    }]
                }
                Action::Meas(m, names, x) => {
                    let idx = self.regs(names)?;
                    let meas = match self.prog.op(m) {
                        Some(Builtin::Meas(mm)) => mm,
                        _ => return Err(Error::Static(format!("'{m}' is not a measurement"))),
                    };
                    let branches = meas
                        .branches(n, &idx)
                        .into_iter()
                        .map(|br| {
                            let cs = CSubst::from([(x.clone(), Exp::Lit(br.lambda.clone()))]);
                            Branch { weight: Some(br.project), post: Some(br.set), term: subst(body, &cs, &QSubst::new()) }
                        })
                        .collect();
                    vec![TermTransition { guard: TRUE, action: Action::Tau, branches }]
                }
            },
            Term::Sum(a, b) => {
                let mut out = self.go(a, unfolds)?;
                out.extend(self.go(b, unfolds)?);
                out
            }
            Term::If(c, body) => self
                .go(body, unfolds)?
                .into_iter()
                .map(|mut tr| {
                    tr.guard = BExp::and2(c.clone(), tr.guard);
                    tr
                })
                .collect(),
            Term::Restrict(body, l) => self
                .go(body, unfolds)?
                .into_iter()
                .filter(|tr| action_channel(&tr.action).map_or(true, |c| !l.contains(c)))
                .map(|tr| tr.map_terms(|t| Term::Restrict(t.into(), l.clone())))
                .collect(),
            Term::Relabel(body, f) => self
                .go(body, unfolds)?
                .into_iter()
                .map(|mut tr| {
                    tr.action = relabel_action(&tr.action, f);
                    tr.map_terms(|t| Term::Relabel(t.into(), f.clone()))
                })
                .collect(),
            Term::Par(a, b) => self.par(a, b, unfolds)?,
        })
    }

    fn par(&self, a: &Term, b: &Term, unfolds: usize) -> Result<Vec<TermTransition>> {
        let ta = self.go(a, unfolds)?;
        let tb = self.go(b, unfolds)?;
        let mut out = Vec::new();
        for tr in &ta {
            let tr = self.avoid_capture(tr.clone(), b);
            out.push(tr.map_terms(|t| Term::par(t, b.clone())));
        }
        for tr in &tb {
            let tr = self.avoid_capture(tr.clone(), a);
            out.push(tr.map_terms(|t| Term::par(a.clone(), t)));
        }
        for l in &ta {
            for r in &tb {
                if let Some(t) = communicate(l, r, false) {
                    out.push(t);
                }
                if let Some(t) = communicate(r, l, true) {
                    out.push(t);
                }
            }
        }
        Ok(out)
    }

    /// Renames the binder of an input so it is not captured by the sibling.
    fn avoid_capture(&self, tr: TermTransition, other: &Term) -> TermTransition {
        match &tr.action {
            Action::CIn(c, x) => {
                let fo = fv(other);
                if !fo.contains(x) {
                    return tr;
                }
                let mut avoid = fo;
                for br in &tr.branches {
                    avoid.extend(fv(&br.term));
                }
                let x2 = fresh(x, &avoid);
                let cs = CSubst::from([(x.clone(), Exp::Var(x2.clone()))]);
                let action = Action::CIn(c.clone(), x2);
                TermTransition { action, ..tr }.map_terms(|t| subst(&t, &cs, &QSubst::new()))
            }
            Action::QIn(c, q) => {
                let qo = qv(other, self.prog);
                if !qo.contains(q) {
                    return tr;
                }
                let mut avoid: BTreeSet<Name> = qo;
                avoid.extend(self.prog.universe());
                for br in &tr.branches {
                    avoid.extend(free_qnames(&br.term));
                    avoid.extend(qv(&br.term, self.prog));
                }
                let q2 = fresh(q, &avoid);
                let qs = QSubst::from([(q.clone(), q2.clone())]);
                let action = Action::QIn(c.clone(), q2);
                TermTransition { action, ..tr }.map_terms(|t| subst(&t, &CSubst::new(), &qs))
            }
            _ => tr,
        }
    }
}

/// Synchronises an input of `inp` with an output of `out`. When `swapped`
/// the input came from the right component.
fn communicate(inp: &TermTransition, out: &TermTransition, swapped: bool) -> Option<TermTransition> {
    let (t1, t2) = (&inp.branches[0].term, &out.branches[0].term);
    let cont = match (&inp.action, &out.action) {
        (Action::CIn(c, x), Action::COut(d, e)) if c == d => {
            subst(t1, &CSubst::from([(x.clone(), e.clone())]), &QSubst::new())
        }
        (Action::QIn(c, q), Action::QOut(d, r)) if c == d => {
            subst(t1, &CSubst::new(), &QSubst::from([(q.clone(), r.clone())]))
        }
        _ => return None,
    };
    let term = if swapped { Term::par(t2.clone(), cont) } else { Term::par(cont, t2.clone()) };
    Some(TermTransition::point(BExp::and2(inp.guard.clone(), out.guard.clone()), Action::Tau, term))
}
