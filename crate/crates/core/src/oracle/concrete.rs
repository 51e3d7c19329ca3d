use num_rational::BigRational;

use crate::boolean::{eval, eval_exp, ConcreteAction, Evaluation};
use crate::error::{Error, Result};
use crate::quantum::{embed, outer, Builtin, CMat, RegSet};
use crate::semantics::UNFOLD_LIMIT;
use crate::syntax::*;

/// A closed term together with the state of every register.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub term: Term,
    pub state: CMat<f64>,
}

/// What a leaf move does to the quantum state.
#[derive(Clone, Debug)]
enum Effect {
    None,
    Kraus(Vec<CMat<f64>>),
    /// Outcome of a measurement: probability from `project`, state reset by
    /// the Kraus operators of `set`.
    Outcome { project: CMat<f64>, set: Vec<CMat<f64>> },
}

#[derive(Clone, Debug)]
struct Move {
    action: ConcreteAction,
    points: Vec<(Effect, Term)>,
}

impl Move {
    fn map(mut self, f: impl Fn(Term) -> Term) -> Move {
        for p in &mut self.points {
            p.1 = f(std::mem::replace(&mut p.1, Term::Nil));
        }
        self
    }
}

/// The concrete transition rules on closed terms, acting on explicit
/// density matrices.
pub struct Interpreter<'p> {
    prog: &'p Program,
    tol: f64,
}

impl<'p> Interpreter<'p> {
    pub fn new(prog: &'p Program, tol: f64) -> Self {
        Interpreter { prog, tol }
    }

    pub fn program(&self) -> &'p Program {
        self.prog
    }

    fn n(&self) -> usize {
        self.prog.universe_size()
    }

    fn regs(&self, names: &[Name]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|q| self.prog.register_index(q).ok_or_else(|| Error::Static(format!("'{q}' is not a register"))))
            .collect()
    }

    fn value(&self, e: &Exp) -> Result<BigRational> {
        eval_exp(&Evaluation::new(), e)
    }

    /// Transitions of a configuration. Outcomes of probability at most the
    /// tolerance are dropped.
    pub fn step(&self, c: &Configuration) -> Result<Vec<(ConcreteAction, Vec<(f64, Configuration)>)>> {
        let mut out = Vec::new();
        for mv in self.moves(&c.term, 0)? {
            let mut dist = Vec::new();
            for (eff, term) in mv.points {
                let (p, state) = match eff {
                    Effect::None => (1.0, c.state.clone()),
                    Effect::Kraus(ks) => (1.0, conj_sum(&ks, &c.state)),
                    Effect::Outcome { project, set } => {
                        let p = (&project * &c.state).trace().re;
                        (p, conj_sum(&set, &c.state))
                    }
                };
                if p > self.tol {
                    dist.push((p, Configuration { term, state }));
                }
            }
            out.push((mv.action, dist));
        }
        Ok(out)
    }

    fn moves(&self, t: &Term, unfolds: usize) -> Result<Vec<Move>> {
        let n = self.n();
        let point = |action, term: &Term| Move { action, points: vec![(Effect::None, term.clone())] };
        Ok(match t {
            Term::Nil => Vec::new(),
            Term::Call(name, cargs, qargs) => {
                if unfolds >= UNFOLD_LIMIT {
                    return Err(Error::Static(format!("unguarded recursion through '{name}'")));
                }
                self.moves(&unfold(self.prog, name, cargs, qargs)?, unfolds + 1)?
            }
            Term::Prefix(a, body) => match a {
                Action::Tau => vec![point(ConcreteAction::Tau, body)],
                Action::COut(c, e) => vec![point(ConcreteAction::COut(c.clone(), self.value(e)?), body)],
                Action::CIn(c, x) => {
                    let dom = self
                        .prog
                        .domain(x)
                        .ok_or_else(|| Error::Static(format!("input variable '{x}' has no domain")))?;
                    dom.iter()
                        .map(|v| {
                            let cont = subst(body, &CSubst::from([(x.clone(), Exp::Lit(v.clone()))]), &QSubst::new());
                            point(ConcreteAction::CIn(c.clone(), v.clone()), &cont)
                        })
                        .collect()
                }
                Action::QOut(c, q) => vec![point(ConcreteAction::QOut(c.clone(), q.clone()), body)],
                Action::QIn(c, q) => {
                    let busy = qv(t, self.prog);
                    self.prog
                        .universe()
                        .into_iter()
                        .filter(|r| !busy.contains(r))
                        .map(|r| {
                            let cont = subst(body, &CSubst::new(), &QSubst::from([(q.clone(), r.clone())]));
                            point(ConcreteAction::QIn(c.clone(), r), &cont)
                        })
                        .collect()
                }
                Action::Op(op, names) => {
                    let idx = self.regs(names)?;
                    let Some(Builtin::Op(o)) = self.prog.op(op) else {
                        return Err(Error::Static(format!("'{op}' is not a super-operator")));
                    };
                    let ks = o.kraus.iter().map(|k| embed(k, &idx, n)).collect();
                    vec![Move { action: ConcreteAction::Tau, points: vec![(Effect::Kraus(ks), (**body).clone())] }]
                }
                Action::Meas(m, names, x) => {
                    let idx = self.regs(names)?;
                    let Some(Builtin::Meas(mm)) = self.prog.op(m) else {
                        return Err(Error::Static(format!("'{m}' is not a measurement")));
                    };
                    let points = mm
                        .basis
                        .iter()
                        .zip(&mm.eigenvalues)
                        .map(|(phi, lambda)| {
                            let project = embed(&outer(phi, phi), &idx, n);
                            let set = mm.basis.iter().map(|pj| embed(&outer(phi, pj), &idx, n)).collect();
                            let cont = subst(body, &CSubst::from([(x.clone(), Exp::Lit(lambda.clone()))]), &QSubst::new());
                            (Effect::Outcome { project, set }, cont)
                        })
                        .collect();
                    vec![Move { action: ConcreteAction::Tau, points }]
                }
            },
            Term::Sum(a, b) => {
                let mut out = self.moves(a, unfolds)?;
                out.extend(self.moves(b, unfolds)?);
                out
            }
            Term::If(b, body) => {
                if eval(&Evaluation::new(), b)? {
                    self.moves(body, unfolds)?
                } else {
                    Vec::new()
                }
            }
            Term::Restrict(body, l) => self
                .moves(body, unfolds)?
                .into_iter()
                .filter(|m| channel(&m.action).map_or(true, |c| !l.contains(c)))
                .map(|m| m.map(|t| Term::Restrict(t.into(), l.clone())))
                .collect(),
            Term::Relabel(body, f) => self
                .moves(body, unfolds)?
                .into_iter()
                .map(|mut m| {
                    m.action = relabel(&m.action, f);
                    m.map(|t| Term::Relabel(t.into(), f.clone()))
                })
                .collect(),
            Term::Par(a, b) => {
                let ma = self.moves(a, unfolds)?;
                let mb = self.moves(b, unfolds)?;
                let (qa, qb) = (qv(a, self.prog), qv(b, self.prog));
                let mut out = Vec::new();
                for m in &ma {
                    if matches!(&m.action, ConcreteAction::QIn(_, r) if qb.contains(r)) {
                        continue;
                    }
                    out.push(m.clone().map(|t| Term::par(t, (**b).clone())));
                }
                for m in &mb {
                    if matches!(&m.action, ConcreteAction::QIn(_, r) if qa.contains(r)) {
                        continue;
                    }
                    out.push(m.clone().map(|t| Term::par((**a).clone(), t)));
                }
                for l in &ma {
                    for r in &mb {
                        if let Some(t) = sync(l, r) {
                            out.push(Move { action: ConcreteAction::Tau, points: vec![(Effect::None, Term::par(t.0, t.1))] });
                        }
                        if let Some(t) = sync(r, l) {
                            out.push(Move { action: ConcreteAction::Tau, points: vec![(Effect::None, Term::par(t.1, t.0))] });
                        }
                    }
                }
                out
            }
        })
    }
}

/// Continuations of an input of `inp` meeting an output of `out`.
fn sync(inp: &Move, out: &Move) -> Option<(Term, Term)> {
    let ok = match (&inp.action, &out.action) {
        (ConcreteAction::CIn(c, v), ConcreteAction::COut(d, w)) => c == d && v == w,
        (ConcreteAction::QIn(c, q), ConcreteAction::QOut(d, r)) => c == d && q == r,
        _ => false,
    };
    ok.then(|| (inp.points[0].1.clone(), out.points[0].1.clone()))
}

fn channel(a: &ConcreteAction) -> Option<&Name> {
    match a {
        ConcreteAction::Tau => None,
        ConcreteAction::CIn(c, _) | ConcreteAction::COut(c, _) | ConcreteAction::QIn(c, _) | ConcreteAction::QOut(c, _) => {
            Some(c)
        }
    }
}

fn relabel(a: &ConcreteAction, f: &[(Name, Name)]) -> ConcreteAction {
    let map = |c: &Name| f.iter().find(|(x, _)| x == c).map(|(_, y)| y.clone()).unwrap_or_else(|| c.clone());
    match a {
        ConcreteAction::Tau => ConcreteAction::Tau,
        ConcreteAction::CIn(c, v) => ConcreteAction::CIn(map(c), v.clone()),
        ConcreteAction::COut(c, v) => ConcreteAction::COut(map(c), v.clone()),
        ConcreteAction::QIn(c, q) => ConcreteAction::QIn(map(c), q.clone()),
        ConcreteAction::QOut(c, q) => ConcreteAction::QOut(map(c), q.clone()),
    }
}

fn conj_sum(ks: &[CMat<f64>], rho: &CMat<f64>) -> CMat<f64> {
    let d = rho.nrows();
    ks.iter().fold(CMat::<f64>::zeros(d, d), |acc, k| acc + k * rho * k.adjoint())
}

/// `tr_{qv(t)} ρ`: the part of the state the term does not own.
pub fn unowned_state(prog: &Program, c: &Configuration) -> Result<CMat<f64>> {
    let idx = qv(&c.term, prog)
        .iter()
        .map(|q| prog.register_index(q).ok_or_else(|| Error::Static(format!("'{q}' is not a register"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::quantum::partial_trace(&c.state, prog.universe_size(), RegSet::from_indices(idx)))
}
