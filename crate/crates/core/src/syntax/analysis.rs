use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;

use super::ast::*;
use crate::error::{Error, Result};

pub type CSubst = BTreeMap<Name, Exp>;
pub type QSubst = BTreeMap<Name, Name>;

/// Free quantum variables, with calls to parameterless definitions taking
/// the registers their bodies use.
pub fn qv(t: &Term, prog: &Program) -> BTreeSet<Name> {
    qv_with(t, &prog.def_qv, prog)
}

fn qv_with(t: &Term, table: &BTreeMap<Name, BTreeSet<Name>>, prog: &Program) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    qv_into(t, table, prog, &mut out);
    out
}

fn qv_into(t: &Term, table: &BTreeMap<Name, BTreeSet<Name>>, prog: &Program, out: &mut BTreeSet<Name>) {
    match t {
        Term::Nil => {}
        Term::Call(n, _, qargs) => match prog.defs.get(n).and_then(|d| d.qparams.as_ref()) {
            Some(_) => out.extend(qargs.iter().cloned()),
            None => {
                if let Some(s) = table.get(n) {
                    out.extend(s.iter().cloned());
                }
            }
        },
        Term::Prefix(a, body) => match a {
            Action::QIn(_, q) => {
                let mut inner = qv_with(body, table, prog);
                inner.remove(q);
                out.extend(inner);
            }
            Action::QOut(_, q) => {
                out.insert(q.clone());
                qv_into(body, table, prog, out);
            }
            Action::Op(_, regs) | Action::Meas(_, regs, _) => {
                out.extend(regs.iter().cloned());
                qv_into(body, table, prog, out);
            }
            _ => qv_into(body, table, prog, out),
        },
        Term::Sum(a, b) | Term::Par(a, b) => {
            qv_into(a, table, prog, out);
            qv_into(b, table, prog, out);
        }
        Term::Restrict(b, _) | Term::Relabel(b, _) | Term::If(_, b) => qv_into(b, table, prog, out),
    }
}

pub(crate) fn compute_def_qv(prog: &Program) -> BTreeMap<Name, BTreeSet<Name>> {
    let mut table: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
    loop {
        let mut changed = false;
        for d in prog.defs.values() {
            if d.qparams.is_some() {
                continue;
            }
            let s = qv_with(&d.body, &table, prog);
            if table.get(&d.name) != Some(&s) {
                table.insert(d.name.clone(), s);
                changed = true;
            }
        }
        if !changed {
            return table;
        }
    }
}

pub fn exp_fv(e: &Exp, out: &mut BTreeSet<Name>) {
    match e {
        Exp::Lit(_) => {}
        Exp::Var(v) => {
            out.insert(v.clone());
        }
        Exp::Neg(a) => exp_fv(a, out),
        Exp::Add(a, b) | Exp::Sub(a, b) | Exp::Mul(a, b) => {
            exp_fv(a, out);
            exp_fv(b, out);
        }
    }
}

pub fn bexp_fv(b: &BExp, out: &mut BTreeSet<Name>) {
    match b {
        BExp::Const(_) => {}
        BExp::Cmp(_, l, r) => {
            exp_fv(l, out);
            exp_fv(r, out);
        }
        BExp::Not(a) => bexp_fv(a, out),
        BExp::And(xs) | BExp::Or(xs) => xs.iter().for_each(|x| bexp_fv(x, out)),
        BExp::Imp(a, c) => {
            bexp_fv(a, out);
            bexp_fv(c, out);
        }
    }
}

pub fn bexp_vars(b: &BExp) -> BTreeSet<Name> {
    let mut s = BTreeSet::new();
    bexp_fv(b, &mut s);
    s
}

/// Free classical variables.
pub fn fv(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    fv_into(t, &mut out);
    out
}

fn fv_into(t: &Term, out: &mut BTreeSet<Name>) {
    match t {
        Term::Nil => {}
        Term::Call(_, cargs, _) => cargs.iter().for_each(|e| exp_fv(e, out)),
        Term::Prefix(a, body) => match a {
            Action::CIn(_, x) | Action::Meas(_, _, x) => {
                let mut inner = fv(body);
                inner.remove(x);
                out.extend(inner);
            }
            Action::COut(_, e) => {
                exp_fv(e, out);
                fv_into(body, out);
            }
            _ => fv_into(body, out),
        },
        Term::Sum(a, b) | Term::Par(a, b) => {
            fv_into(a, out);
            fv_into(b, out);
        }
        Term::Restrict(b, _) | Term::Relabel(b, _) => fv_into(b, out),
        Term::If(c, b) => {
            bexp_fv(c, out);
            fv_into(b, out);
        }
    }
}

/// Syntactic quantum names occurring free, not looking through calls.
pub fn free_qnames(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    qnames_into(t, &mut out);
    out
}

fn qnames_into(t: &Term, out: &mut BTreeSet<Name>) {
    match t {
        Term::Nil => {}
        Term::Call(_, _, qargs) => out.extend(qargs.iter().cloned()),
        Term::Prefix(a, body) => match a {
            Action::QIn(_, q) => {
                let mut inner = free_qnames(body);
                inner.remove(q);
                out.extend(inner);
            }
            Action::QOut(_, q) => {
                out.insert(q.clone());
                qnames_into(body, out);
            }
            Action::Op(_, regs) | Action::Meas(_, regs, _) => {
                out.extend(regs.iter().cloned());
                qnames_into(body, out);
            }
            _ => qnames_into(body, out),
        },
        Term::Sum(a, b) | Term::Par(a, b) => {
            qnames_into(a, out);
            qnames_into(b, out);
        }
        Term::Restrict(b, _) | Term::Relabel(b, _) | Term::If(_, b) => qnames_into(b, out),
    }
}

/// Channel names occurring in the term, including restricted ones.
pub fn channels(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    fn go(t: &Term, out: &mut BTreeSet<Name>) {
        match t {
            Term::Nil | Term::Call(..) => {}
            Term::Prefix(a, b) => {
                match a {
                    Action::CIn(c, _) | Action::COut(c, _) | Action::QIn(c, _) | Action::QOut(c, _) => {
                        out.insert(c.clone());
                    }
                    _ => {}
                }
                go(b, out);
            }
            Term::Sum(a, b) | Term::Par(a, b) => {
                go(a, out);
                go(b, out);
            }
            Term::Restrict(b, l) => {
                out.extend(l.iter().cloned());
                go(b, out);
            }
            Term::Relabel(b, f) => {
                for (x, y) in f.iter() {
                    out.insert(x.clone());
                    out.insert(y.clone());
                }
                go(b, out);
            }
            Term::If(_, b) => go(b, out),
        }
    }
    go(t, &mut out);
    out
}

/// A well-formedness violation, located at the enclosing definition or check.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub pos: Pos,
    pub msg: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.msg)
    }
}

struct Wf<'a> {
    prog: &'a Program,
    pos: Pos,
    out: Vec<Violation>,
}

impl Wf<'_> {
    fn report(&mut self, msg: String) {
        let v = Violation { pos: self.pos, msg };
        if !self.out.contains(&v) {
            self.out.push(v);
        }
    }

    /// `scope` holds quantum names usable here; `bound` the input-bound ones.
    fn term(&mut self, t: &Term, scope: &BTreeSet<Name>, bound: &BTreeSet<Name>, cbound: &BTreeSet<Name>) {
        match t {
            Term::Nil => {}
            Term::Call(n, _, qargs) => {
                for q in qargs {
                    self.qname(q, scope);
                }
                let d = qargs.iter().collect::<BTreeSet<_>>();
                if d.len() != qargs.len() {
                    self.report(format!("call to '{n}' repeats a quantum argument"));
                }
                if let Some(def) = self.prog.defs.get(n) {
                    if def.qparams.is_none() {
                        let used = self.prog.def_qv.get(n).cloned().unwrap_or_default();
                        for q in used.intersection(bound) {
                            self.report(format!(
                                "'{n}' uses register '{q}' which is rebound by a quantum input here; pass it as a quantum argument"
                            ));
                        }
                    }
                }
            }
            Term::Prefix(a, body) => {
                match a {
                    Action::Tau => self.term(body, scope, bound, cbound),
                    Action::CIn(_, x) => {
                        if self.prog.domain(x).is_none() {
                            self.report(format!("input variable '{x}' has no declared domain"));
                        }
                        let mut cb = cbound.clone();
                        cb.insert(x.clone());
                        self.term(body, scope, bound, &cb);
                    }
                    Action::COut(..) => self.term(body, scope, bound, cbound),
                    Action::QIn(_, q) => {
                        let mut s = scope.clone();
                        s.insert(q.clone());
                        let mut b = bound.clone();
                        b.insert(q.clone());
                        self.term(body, &s, &b, cbound);
                    }
                    Action::QOut(c, q) => {
                        self.qname(q, scope);
                        if qv(body, self.prog).contains(q) {
                            self.report(format!("'{c}!{q}' is followed by a continuation that still uses '{q}'"));
                        }
                        self.term(body, scope, bound, cbound);
                    }
                    Action::Op(_, regs) => {
                        regs.iter().for_each(|q| self.qname(q, scope));
                        self.term(body, scope, bound, cbound);
                    }
                    Action::Meas(_, regs, x) => {
                        regs.iter().for_each(|q| self.qname(q, scope));
                        let mut cb = cbound.clone();
                        cb.insert(x.clone());
                        self.term(body, scope, bound, &cb);
                    }
                }
            }
            Term::Sum(a, b) => {
                self.term(a, scope, bound, cbound);
                self.term(b, scope, bound, cbound);
            }
            Term::Par(a, b) => {
                let qa = qv(a, self.prog);
                let qb = qv(b, self.prog);
                let common: Vec<_> = qa.intersection(&qb).map(|q| q.to_string()).collect();
                if !common.is_empty() {
                    self.report(format!("parallel components share quantum variables {{{}}}", common.join(", ")));
                }
                self.term(a, scope, bound, cbound);
                self.term(b, scope, bound, cbound);
            }
            Term::Restrict(b, _) | Term::Relabel(b, _) => self.term(b, scope, bound, cbound),
            Term::If(_, b) => self.term(b, scope, bound, cbound),
        }
    }

    fn qname(&mut self, q: &Name, scope: &BTreeSet<Name>) {
        if !scope.contains(q) {
            self.report(format!("unknown quantum variable '{q}'"));
        }
    }

}

/// Checks the quantum side conditions of every definition and check
/// directive, plus the containment conditions on definitions.
pub fn well_formed(prog: &Program) -> Vec<Violation> {
    let mut wf = Wf { prog, pos: Pos::default(), out: Vec::new() };
    let globals: BTreeSet<Name> = prog.universe().into_iter().collect();
    for d in prog.defs.values() {
        wf.pos = d.pos;
        let scope = match &d.qparams {
            Some(qs) => {
                let set: BTreeSet<Name> = qs.iter().cloned().collect();
                if set.len() != qs.len() {
                    wf.report(format!("'{}' repeats a quantum parameter", d.name));
                }
                set
            }
            None => globals.clone(),
        };
        let extra: Vec<String> = fv(&d.body).difference(&d.cparams.iter().cloned().collect()).map(|x| x.to_string()).collect();
        if !extra.is_empty() {
            wf.report(format!("body of '{}' has free classical variables {{{}}} not among its parameters", d.name, extra.join(", ")));
        }
        wf.term(&d.body, &scope, &BTreeSet::new(), &BTreeSet::new());
    }
    for c in &prog.checks {
        wf.pos = c.pos;
        for t in &c.terms {
            wf.term(t, &globals, &BTreeSet::new(), &BTreeSet::new());
        }
    }
    wf.out
}

/// Well-formedness of a single top-level term.
pub fn well_formed_term(t: &Term, prog: &Program) -> Vec<Violation> {
    let mut wf = Wf { prog, pos: Pos::default(), out: Vec::new() };
    let globals: BTreeSet<Name> = prog.universe().into_iter().collect();
    wf.term(t, &globals, &BTreeSet::new(), &BTreeSet::new());
    wf.out
}

// ---- substitution ----

/// A name `base'k` outside `avoid`, where `base` drops any existing suffix.
pub fn fresh(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let stem = base.split('\'').next().unwrap_or(base);
    let stem = if stem.is_empty() { "v" } else { stem };
    (1..)
        .map(|k| name(&format!("{stem}'{k}")))
        .find(|n| !avoid.contains(n))
        .expect("unbounded supply")
}

/// Arithmetic simplification of literal subterms.
pub fn fold_exp(e: Exp) -> Exp {
    match e {
        Exp::Neg(a) => match fold_exp((*a).clone()) {
            Exp::Lit(x) => Exp::Lit(-x),
            a => Exp::Neg(Arc::new(a)),
        },
        Exp::Add(a, b) => match (fold_exp((*a).clone()), fold_exp((*b).clone())) {
            (Exp::Lit(x), Exp::Lit(y)) => Exp::Lit(x + y),
            (a, b) => Exp::Add(a.into(), b.into()),
        },
        Exp::Sub(a, b) => match (fold_exp((*a).clone()), fold_exp((*b).clone())) {
            (Exp::Lit(x), Exp::Lit(y)) => Exp::Lit(x - y),
            (a, b) => Exp::Sub(a.into(), b.into()),
        },
        Exp::Mul(a, b) => match (fold_exp((*a).clone()), fold_exp((*b).clone())) {
            (Exp::Lit(x), Exp::Lit(y)) => Exp::Lit(x * y),
            (a, b) => Exp::Mul(a.into(), b.into()),
        },
        e => e,
    }
}

pub fn subst_exp(e: &Exp, s: &CSubst) -> Exp {
    fn go(e: &Exp, s: &CSubst) -> Exp {
        match e {
            Exp::Lit(_) => e.clone(),
            Exp::Var(v) => s.get(v).cloned().unwrap_or_else(|| e.clone()),
            Exp::Neg(a) => Exp::Neg(go(a, s).into()),
            Exp::Add(a, b) => Exp::Add(go(a, s).into(), go(b, s).into()),
            Exp::Sub(a, b) => Exp::Sub(go(a, s).into(), go(b, s).into()),
            Exp::Mul(a, b) => Exp::Mul(go(a, s).into(), go(b, s).into()),
        }
    }
    if s.is_empty() {
        return e.clone();
    }
    fold_exp(go(e, s))
}

fn cmp_lits(op: CmpOp, x: &BigRational, y: &BigRational) -> bool {
    match op {
        CmpOp::Lt => x < y,
        CmpOp::Le => x <= y,
        CmpOp::Gt => x > y,
        CmpOp::Ge => x >= y,
        CmpOp::Eq => x == y,
    }
}

/// Substitutes and folds comparisons between literals to constants.
pub fn subst_bexp(b: &BExp, s: &CSubst) -> BExp {
    match b {
        BExp::Const(_) => b.clone(),
        BExp::Cmp(op, l, r) => {
            let (l, r) = (subst_exp(l, s), subst_exp(r, s));
            match (&l, &r) {
                (Exp::Lit(x), Exp::Lit(y)) => BExp::Const(cmp_lits(*op, x, y)),
                _ => BExp::Cmp(*op, l, r),
            }
        }
        BExp::Not(a) => BExp::not(subst_bexp(a, s)),
        BExp::And(xs) => BExp::and(xs.iter().map(|x| subst_bexp(x, s))),
        BExp::Or(xs) => BExp::or(xs.iter().map(|x| subst_bexp(x, s))),
        BExp::Imp(a, c) => BExp::imp(subst_bexp(a, s), subst_bexp(c, s)),
    }
}

fn all_cvars(t: &Term, out: &mut BTreeSet<Name>) {
    match t {
        Term::Nil => {}
        Term::Call(_, cargs, _) => cargs.iter().for_each(|e| exp_fv(e, out)),
        Term::Prefix(a, body) => {
            match a {
                Action::CIn(_, x) | Action::Meas(_, _, x) => {
                    out.insert(x.clone());
                }
                Action::COut(_, e) => exp_fv(e, out),
                _ => {}
            }
            all_cvars(body, out);
        }
        Term::Sum(a, b) | Term::Par(a, b) => {
            all_cvars(a, out);
            all_cvars(b, out);
        }
        Term::Restrict(b, _) | Term::Relabel(b, _) => all_cvars(b, out),
        Term::If(c, b) => {
            bexp_fv(c, out);
            all_cvars(b, out);
        }
    }
}

fn all_qnames(t: &Term, out: &mut BTreeSet<Name>) {
    match t {
        Term::Nil => {}
        Term::Call(_, _, qargs) => out.extend(qargs.iter().cloned()),
        Term::Prefix(a, body) => {
            match a {
                Action::QIn(_, q) | Action::QOut(_, q) => {
                    out.insert(q.clone());
                }
                Action::Op(_, regs) | Action::Meas(_, regs, _) => out.extend(regs.iter().cloned()),
                _ => {}
            }
            all_qnames(body, out);
        }
        Term::Sum(a, b) | Term::Par(a, b) => {
            all_qnames(a, out);
            all_qnames(b, out);
        }
        Term::Restrict(b, _) | Term::Relabel(b, _) | Term::If(_, b) => all_qnames(b, out),
    }
}

/// Simultaneous capture-avoiding substitution of classical expressions and
/// quantum names on free occurrences.
pub fn subst(t: &Term, cs: &CSubst, qs: &QSubst) -> Term {
    if cs.is_empty() && qs.is_empty() {
        return t.clone();
    }
    let qmap = |q: &Name, qs: &QSubst| qs.get(q).cloned().unwrap_or_else(|| q.clone());
    match t {
        Term::Nil => Term::Nil,
        Term::Call(n, cargs, qargs) => Term::Call(
            n.clone(),
            cargs.iter().map(|e| subst_exp(e, cs)).collect(),
            qargs.iter().map(|q| qmap(q, qs)).collect(),
        ),
        Term::Prefix(a, body) => match a {
            Action::Tau => Term::prefix(Action::Tau, subst(body, cs, qs)),
            Action::COut(c, e) => Term::prefix(Action::COut(c.clone(), subst_exp(e, cs)), subst(body, cs, qs)),
            Action::QOut(c, q) => Term::prefix(Action::QOut(c.clone(), qmap(q, qs)), subst(body, cs, qs)),
            Action::Op(o, regs) => {
                Term::prefix(Action::Op(o.clone(), regs.iter().map(|q| qmap(q, qs)).collect()), subst(body, cs, qs))
            }
            Action::CIn(c, x) => {
                let (x2, cs2) = classical_binder(x, body, cs);
                Term::prefix(Action::CIn(c.clone(), x2), subst(body, &cs2, qs))
            }
            Action::Meas(m, regs, x) => {
                let regs = regs.iter().map(|q| qmap(q, qs)).collect();
                let (x2, cs2) = classical_binder(x, body, cs);
                Term::prefix(Action::Meas(m.clone(), regs, x2), subst(body, &cs2, qs))
            }
            Action::QIn(c, q) => {
                let mut qs2 = qs.clone();
                qs2.remove(q);
                let free = free_qnames(body);
                let captures = free.iter().any(|y| y != q && qs2.get(y) == Some(q));
                let q2 = if captures {
                    let mut avoid = BTreeSet::new();
                    all_qnames(body, &mut avoid);
                    avoid.extend(qs2.values().cloned());
                    avoid.extend(qs2.keys().cloned());
                    let q2 = fresh(q, &avoid);
                    qs2.insert(q.clone(), q2.clone());
                    q2
                } else {
                    q.clone()
                };
                Term::prefix(Action::QIn(c.clone(), q2), subst(body, cs, &qs2))
            }
        },
        Term::Sum(a, b) => Term::sum(subst(a, cs, qs), subst(b, cs, qs)),
        Term::Par(a, b) => Term::par(subst(a, cs, qs), subst(b, cs, qs)),
        Term::Restrict(b, l) => Term::Restrict(Arc::new(subst(b, cs, qs)), l.clone()),
        Term::Relabel(b, f) => Term::Relabel(Arc::new(subst(b, cs, qs)), f.clone()),
        Term::If(c, b) => Term::guard(subst_bexp(c, cs), subst(b, cs, qs)),
    }
}

fn classical_binder(x: &Name, body: &Term, cs: &CSubst) -> (Name, CSubst) {
    let mut cs2 = cs.clone();
    cs2.remove(x);
    if cs2.is_empty() {
        return (x.clone(), cs2);
    }
    let free = fv(body);
    let captures = free.iter().filter_map(|y| cs2.get(y)).any(|e| {
        let mut s = BTreeSet::new();
        exp_fv(e, &mut s);
        s.contains(x)
    });
    if !captures {
        return (x.clone(), cs2);
    }
    let mut avoid = BTreeSet::new();
    all_cvars(body, &mut avoid);
    for (k, e) in &cs2 {
        avoid.insert(k.clone());
        exp_fv(e, &mut avoid);
    }
    let x2 = fresh(x, &avoid);
    cs2.insert(x.clone(), Exp::Var(x2.clone()));
    (x2, cs2)
}

/// Renames one binder occurrence: `(c?x.t)` with fresh `y` becomes `c?y.t{y/x}`.
pub fn alpha_rename(t: &Term, fresh_name: &Name) -> Result<Term> {
    match t {
        Term::Prefix(Action::CIn(c, x), body) => {
            if fv(body).contains(fresh_name) && fresh_name != x {
                return Err(Error::Static(format!("renaming '{x}' to '{fresh_name}' would capture")));
            }
            let cs = CSubst::from([(x.clone(), Exp::Var(fresh_name.clone()))]);
            Ok(Term::prefix(Action::CIn(c.clone(), fresh_name.clone()), subst(body, &cs, &QSubst::new())))
        }
        Term::Prefix(Action::Meas(m, regs, x), body) => {
            if fv(body).contains(fresh_name) && fresh_name != x {
                return Err(Error::Static(format!("renaming '{x}' to '{fresh_name}' would capture")));
            }
            let cs = CSubst::from([(x.clone(), Exp::Var(fresh_name.clone()))]);
            Ok(Term::prefix(
                Action::Meas(m.clone(), regs.clone(), fresh_name.clone()),
                subst(body, &cs, &QSubst::new()),
            ))
        }
        Term::Prefix(Action::QIn(c, q), body) => {
            if free_qnames(body).contains(fresh_name) && fresh_name != q {
                return Err(Error::Static(format!("renaming '{q}' to '{fresh_name}' would capture")));
            }
            let qs = QSubst::from([(q.clone(), fresh_name.clone())]);
            Ok(Term::prefix(Action::QIn(c.clone(), fresh_name.clone()), subst(body, &CSubst::new(), &qs)))
        }
        _ => Err(Error::Static("alpha_rename expects a binding prefix".into())),
    }
}

/// Alpha-normal form: every binder renamed to a depth-indexed name no
/// source identifier can spell.
pub fn alpha_normal(t: &Term) -> Term {
    fn exp(e: &Exp, env: &BTreeMap<Name, Name>) -> Exp {
        match e {
            Exp::Lit(_) => e.clone(),
            Exp::Var(v) => Exp::Var(env.get(v).cloned().unwrap_or_else(|| v.clone())),
            Exp::Neg(a) => Exp::Neg(exp(a, env).into()),
            Exp::Add(a, b) => Exp::Add(exp(a, env).into(), exp(b, env).into()),
            Exp::Sub(a, b) => Exp::Sub(exp(a, env).into(), exp(b, env).into()),
            Exp::Mul(a, b) => Exp::Mul(exp(a, env).into(), exp(b, env).into()),
        }
    }
    fn bexp(b: &BExp, env: &BTreeMap<Name, Name>) -> BExp {
        match b {
            BExp::Const(_) => b.clone(),
            BExp::Cmp(op, l, r) => BExp::Cmp(*op, exp(l, env), exp(r, env)),
            BExp::Not(a) => BExp::Not(bexp(a, env).into()),
            BExp::And(xs) => BExp::And(xs.iter().map(|x| bexp(x, env)).collect()),
            BExp::Or(xs) => BExp::Or(xs.iter().map(|x| bexp(x, env)).collect()),
            BExp::Imp(a, c) => BExp::Imp(bexp(a, env).into(), bexp(c, env).into()),
        }
    }
    fn go(t: &Term, d: usize, cenv: &BTreeMap<Name, Name>, qenv: &BTreeMap<Name, Name>) -> Term {
        let q = |x: &Name| qenv.get(x).cloned().unwrap_or_else(|| x.clone());
        match t {
            Term::Nil => Term::Nil,
            Term::Call(n, cargs, qargs) => {
                Term::Call(n.clone(), cargs.iter().map(|e| exp(e, cenv)).collect(), qargs.iter().map(q).collect())
            }
            Term::Prefix(a, body) => match a {
                Action::Tau => Term::prefix(Action::Tau, go(body, d, cenv, qenv)),
                Action::COut(c, e) => Term::prefix(Action::COut(c.clone(), exp(e, cenv)), go(body, d, cenv, qenv)),
                Action::QOut(c, x) => Term::prefix(Action::QOut(c.clone(), q(x)), go(body, d, cenv, qenv)),
                Action::Op(o, regs) => Term::prefix(Action::Op(o.clone(), regs.iter().map(q).collect()), go(body, d, cenv, qenv)),
                Action::CIn(c, x) => {
                    let nx = name(&format!("#{d}"));
                    let mut env = cenv.clone();
                    env.insert(x.clone(), nx.clone());
                    Term::prefix(Action::CIn(c.clone(), nx), go(body, d + 1, &env, qenv))
                }
                Action::Meas(m, regs, x) => {
                    let nx = name(&format!("#{d}"));
                    let mut env = cenv.clone();
                    env.insert(x.clone(), nx.clone());
                    Term::prefix(Action::Meas(m.clone(), regs.iter().map(q).collect(), nx), go(body, d + 1, &env, qenv))
                }
                Action::QIn(c, x) => {
                    let nx = name(&format!("#{d}"));
                    let mut env = qenv.clone();
                    env.insert(x.clone(), nx.clone());
                    Term::prefix(Action::QIn(c.clone(), nx), go(body, d + 1, cenv, &env))
                }
            },
            Term::Sum(a, b) => Term::sum(go(a, d, cenv, qenv), go(b, d, cenv, qenv)),
            Term::Par(a, b) => Term::par(go(a, d, cenv, qenv), go(b, d, cenv, qenv)),
            Term::Restrict(b, l) => Term::Restrict(Arc::new(go(b, d, cenv, qenv)), l.clone()),
            Term::Relabel(b, f) => Term::Relabel(Arc::new(go(b, d, cenv, qenv)), f.clone()),
            Term::If(c, b) => Term::If(bexp(c, cenv), Arc::new(go(b, d, cenv, qenv))),
        }
    }
    go(t, 0, &BTreeMap::new(), &BTreeMap::new())
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    alpha_normal(a) == alpha_normal(b)
}

/// Instantiates a call with its definition body.
pub fn unfold(prog: &Program, n: &Name, cargs: &[Exp], qargs: &[Name]) -> Result<Term> {
    let d = prog.defs.get(n).ok_or_else(|| Error::Static(format!("unknown process '{n}'")))?;
    if d.cparams.len() != cargs.len() {
        return Err(Error::Static(format!("'{n}' applied to {} classical arguments", cargs.len())));
    }
    let cs: CSubst = d.cparams.iter().cloned().zip(cargs.iter().cloned()).collect();
    let qs: QSubst = match &d.qparams {
        Some(ps) if ps.len() == qargs.len() => ps.iter().cloned().zip(qargs.iter().cloned()).collect(),
        Some(_) => return Err(Error::Static(format!("'{n}' applied to {} quantum arguments", qargs.len()))),
        None => QSubst::new(),
    };
    Ok(subst(&d.body, &cs, &qs))
}
