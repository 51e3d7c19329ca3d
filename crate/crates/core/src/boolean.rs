//! Evaluation and decision procedures for boolean expressions over
//! finite-domain classical variables.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::syntax::{bexp_vars, exp_fv, Action, BExp, CmpOp, Exp, Name, Program};

/// A (possibly partial) map from classical variables to values.
pub type Evaluation = BTreeMap<Name, BigRational>;

/// Beyond this many assignments enumeration is refused.
pub const ENUMERATION_LIMIT: usize = 1 << 20;

pub fn eval_exp(psi: &Evaluation, e: &Exp) -> Result<BigRational> {
    Ok(match e {
        Exp::Lit(r) => r.clone(),
        Exp::Var(v) => psi.get(v).cloned().ok_or_else(|| Error::Eval(format!("unbound variable '{v}'")))?,
        Exp::Neg(a) => -eval_exp(psi, a)?,
        Exp::Add(a, b) => eval_exp(psi, a)? + eval_exp(psi, b)?,
        Exp::Sub(a, b) => eval_exp(psi, a)? - eval_exp(psi, b)?,
        Exp::Mul(a, b) => eval_exp(psi, a)? * eval_exp(psi, b)?,
    })
}

pub fn eval(psi: &Evaluation, b: &BExp) -> Result<bool> {
    Ok(match b {
        BExp::Const(v) => *v,
        BExp::Cmp(op, l, r) => {
            let (x, y) = (eval_exp(psi, l)?, eval_exp(psi, r)?);
            match op {
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Gt => x > y,
                CmpOp::Ge => x >= y,
                CmpOp::Eq => x == y,
            }
        }
        BExp::Not(a) => !eval(psi, a)?,
        BExp::And(xs) => {
            for x in xs.iter() {
                if !eval(psi, x)? {
                    return Ok(false);
                }
            }
            true
        }
        BExp::Or(xs) => {
            for x in xs.iter() {
                if eval(psi, x)? {
                    return Ok(true);
                }
            }
            false
        }
        BExp::Imp(a, c) => !eval(psi, a)? || eval(psi, c)?,
    })
}

/// Decision backend for satisfiability over finite domains.
pub trait Solver: Send + Sync {
    fn satisfiable(&self, ctx: &BoolCtx, b: &BExp) -> Result<bool>;
}

/// Exhaustive enumeration of domain assignments.
#[derive(Clone, Copy, Debug, Default)]
pub struct Enumerate;

impl Solver for Enumerate {
    fn satisfiable(&self, ctx: &BoolCtx, b: &BExp) -> Result<bool> {
        let vars: Vec<Name> = bexp_vars(b).into_iter().collect();
        let mut found = false;
        ctx.for_each_assignment(&vars, &Evaluation::new(), |psi| {
            found = eval(psi, b)?;
            Ok(!found)
        })?;
        Ok(found)
    }
}

/// Domain declarations in scope plus the solver used to decide queries.
#[derive(Clone)]
pub struct BoolCtx {
    domains: BTreeMap<Name, Vec<BigRational>>,
    solver: std::sync::Arc<dyn Solver>,
}

impl std::fmt::Debug for BoolCtx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoolCtx").field("domains", &self.domains).finish()
    }
}

impl BoolCtx {
    pub fn new(domains: BTreeMap<Name, Vec<BigRational>>) -> Self {
        BoolCtx { domains, solver: std::sync::Arc::new(Enumerate) }
    }

    pub fn from_program(p: &Program) -> Self {
        Self::new(p.domains.clone())
    }

    pub fn with_solver(mut self, solver: std::sync::Arc<dyn Solver>) -> Self {
        self.solver = solver;
        self
    }

    /// Domain of `v`; derived names `x'k` share the domain of `x`.
    pub fn domain(&self, v: &str) -> Result<&[BigRational]> {
        if let Some(d) = self.domains.get(v) {
            return Ok(d);
        }
        let base = v.split('\'').next().unwrap_or(v);
        self.domains
            .get(base)
            .map(|d| d.as_slice())
            .ok_or_else(|| Error::Eval(format!("no domain declared for '{v}'")))
    }

    pub fn declare(&mut self, v: Name, dom: Vec<BigRational>) {
        self.domains.insert(v, dom);
    }

    /// Calls `f` on every extension of `base` to `vars`; stops when `f`
    /// returns `Ok(false)`.
    pub fn for_each_assignment<F>(&self, vars: &[Name], base: &Evaluation, mut f: F) -> Result<()>
    where
        F: FnMut(&Evaluation) -> Result<bool>,
    {
        let vars: Vec<&Name> = vars.iter().filter(|v| !base.contains_key(*v)).collect();
        let doms: Vec<&[BigRational]> = vars.iter().map(|v| self.domain(v)).collect::<Result<_>>()?;
        let total = doms.iter().try_fold(1usize, |acc, d| acc.checked_mul(d.len()));
        match total {
            Some(n) if n <= ENUMERATION_LIMIT => {}
            _ => return Err(Error::Eval("too many assignments to enumerate".into())),
        }
        if doms.iter().any(|d| d.is_empty()) {
            return Ok(());
        }
        let mut idx = vec![0usize; vars.len()];
        let mut psi = base.clone();
        for (v, d) in vars.iter().zip(&doms) {
            psi.insert((*v).clone(), d[0].clone());
        }
        loop {
            if !f(&psi)? {
                return Ok(());
            }
            let mut k = 0;
            loop {
                if k == vars.len() {
                    return Ok(());
                }
                idx[k] += 1;
                if idx[k] < doms[k].len() {
                    psi.insert(vars[k].clone(), doms[k][idx[k]].clone());
                    break;
                }
                idx[k] = 0;
                psi.insert(vars[k].clone(), doms[k][0].clone());
                k += 1;
            }
        }
    }

    pub fn satisfiable(&self, b: &BExp) -> Result<bool> {
        if let Some(v) = b.as_const() {
            return Ok(v);
        }
        self.solver.satisfiable(self, b)
    }

    pub fn valid(&self, b: &BExp) -> Result<bool> {
        Ok(!self.satisfiable(&BExp::not(b.clone()))?)
    }

    pub fn implies(&self, b1: &BExp, b2: &BExp) -> Result<bool> {
        Ok(!self.satisfiable(&BExp::and2(b1.clone(), BExp::not(b2.clone())))?)
    }

    pub fn equivalent(&self, b1: &BExp, b2: &BExp) -> Result<bool> {
        Ok(self.implies(b1, b2)? && self.implies(b2, b1)?)
    }

    /// Canonical disjunction of satisfying minterms over the variables that
    /// actually influence `b`.
    pub fn simplify(&self, b: &BExp) -> Result<BExp> {
        if b.as_const().is_some() {
            return Ok(b.clone());
        }
        let vars: Vec<Name> = bexp_vars(b).into_iter().collect();
        let mut rows: Vec<(Evaluation, bool)> = Vec::new();
        self.for_each_assignment(&vars, &Evaluation::new(), |psi| {
            rows.push((psi.clone(), eval(psi, b)?));
            Ok(true)
        })?;
        if rows.iter().all(|r| r.1) {
            return Ok(BExp::Const(true));
        }
        if rows.iter().all(|r| !r.1) {
            return Ok(BExp::Const(false));
        }
        let table: BTreeMap<Vec<&BigRational>, bool> =
            rows.iter().map(|(psi, v)| (vars.iter().map(|x| &psi[x]).collect(), *v)).collect();
        let relevant: Vec<usize> = (0..vars.len())
            .filter(|&k| {
                rows.iter().any(|(psi, v)| {
                    let dom = self.domain(&vars[k]).expect("enumerated above");
                    dom.iter().any(|alt| {
                        let key: Vec<&BigRational> =
                            vars.iter().enumerate().map(|(j, x)| if j == k { alt } else { &psi[x] }).collect();
                        table[&key] != *v
                    })
                })
            })
            .collect();
        let mut minterms: BTreeSet<Vec<BigRational>> = BTreeSet::new();
        for (psi, v) in &rows {
            if *v {
                minterms.insert(relevant.iter().map(|&k| psi[&vars[k]].clone()).collect());
            }
        }
        let rel: Vec<&Name> = relevant.iter().map(|&k| &vars[k]).collect();
        if rel.len() == 1 {
            let dom = self.domain(rel[0])?;
            if minterms.len() + 1 == dom.len() {
                let missing = dom.iter().find(|v| !minterms.contains(&vec![(*v).clone()])).expect("one value missing");
                return Ok(BExp::not(BExp::eq(Exp::Var(rel[0].clone()), Exp::Lit(missing.clone()))));
            }
        }
        Ok(BExp::or(minterms.into_iter().map(|vals| {
            BExp::and(rel.iter().zip(vals).map(|(x, v)| BExp::eq(Exp::Var((*x).clone()), Exp::Lit(v))))
        })))
    }

    /// Universal closure of `b` over `vars`, simplified.
    pub fn forall(&self, vars: &[Name], b: &BExp) -> Result<BExp> {
        self.quantify(vars, b, true)
    }

    pub fn exists(&self, vars: &[Name], b: &BExp) -> Result<BExp> {
        self.quantify(vars, b, false)
    }

    fn quantify(&self, vars: &[Name], b: &BExp, all: bool) -> Result<BExp> {
        let bound: Vec<Name> = vars.iter().filter(|v| bexp_vars(b).contains(*v)).cloned().collect();
        if bound.is_empty() {
            return Ok(b.clone());
        }
        let mut parts = Vec::new();
        self.for_each_assignment(&bound, &Evaluation::new(), |psi| {
            let s: crate::syntax::CSubst = psi.iter().map(|(k, v)| (k.clone(), Exp::Lit(v.clone()))).collect();
            parts.push(crate::syntax::subst_bexp(b, &s));
            Ok(true)
        })?;
        let q = if all { BExp::and(parts) } else { BExp::or(parts) };
        self.simplify(&q)
    }

    /// `γ₁ =_b γ₂`: outputs on the same channel whose values agree under
    /// `b`, or syntactically identical actions otherwise.
    pub fn action_eq_b(&self, b: &BExp, g1: &Action, g2: &Action) -> Result<bool> {
        match (g1, g2) {
            (Action::COut(c1, e1), Action::COut(c2, e2)) => {
                Ok(c1 == c2 && self.implies(b, &BExp::eq(e1.clone(), e2.clone()))?)
            }
            (Action::COut(..), _) | (_, Action::COut(..)) => Ok(false),
            _ => Ok(g1 == g2),
        }
    }
}

/// Concrete transition labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConcreteAction {
    Tau,
    CIn(Name, BigRational),
    COut(Name, BigRational),
    QIn(Name, Name),
    QOut(Name, Name),
}

impl std::fmt::Display for ConcreteAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = |r: &BigRational| if r.is_integer() { r.numer().to_string() } else { r.to_string() };
        match self {
            ConcreteAction::Tau => f.write_str("tau"),
            ConcreteAction::CIn(c, x) => write!(f, "{c}?{}", v(x)),
            ConcreteAction::COut(c, x) => write!(f, "{c}!{}", v(x)),
            ConcreteAction::QIn(c, q) => write!(f, "{c}?{q}"),
            ConcreteAction::QOut(c, q) => write!(f, "{c}!{q}"),
        }
    }
}

/// `α =_ψ γ`. A concrete input `c?v` matches any symbolic input on `c`,
/// whose binder is then instantiated with `v`.
pub fn action_eq_psi(psi: &Evaluation, alpha: &ConcreteAction, gamma: &Action) -> Result<bool> {
    Ok(match (alpha, gamma) {
        (ConcreteAction::Tau, Action::Tau) => true,
        (ConcreteAction::COut(c, v), Action::COut(d, e)) => c == d && eval_exp(psi, e)? == *v,
        (ConcreteAction::CIn(c, _), Action::CIn(d, _)) => c == d,
        (ConcreteAction::QIn(c, q), Action::QIn(d, r)) | (ConcreteAction::QOut(c, q), Action::QOut(d, r)) => {
            c == d && q == r
        }
        _ => false,
    })
}

/// Variables of an expression list.
pub fn exps_vars<'a, I: IntoIterator<Item = &'a Exp>>(es: I) -> BTreeSet<Name> {
    let mut s = BTreeSet::new();
    for e in es {
        exp_fv(e, &mut s);
    }
    s
}
