use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::quantum::Builtin;

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exp {
    Lit(BigRational),
    Var(Name),
    Neg(Arc<Exp>),
    Add(Arc<Exp>, Arc<Exp>),
    Sub(Arc<Exp>, Arc<Exp>),
    Mul(Arc<Exp>, Arc<Exp>),
}

impl Exp {
    pub fn lit(n: i64) -> Exp {
        Exp::Lit(rat(n))
    }
    pub fn var(s: &str) -> Exp {
        Exp::Var(name(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
        }
    }
}

/// Boolean expressions. Children are shared, so cloning is cheap.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BExp {
    Const(bool),
    Cmp(CmpOp, Exp, Exp),
    Not(Arc<BExp>),
    And(Arc<[BExp]>),
    Or(Arc<[BExp]>),
    Imp(Arc<BExp>, Arc<BExp>),
}

pub const TRUE: BExp = BExp::Const(true);
pub const FALSE: BExp = BExp::Const(false);

impl BExp {
    pub fn eq(a: Exp, b: Exp) -> BExp {
        match (&a, &b) {
            (Exp::Lit(x), Exp::Lit(y)) => BExp::Const(x == y),
            _ if a == b => TRUE,
            _ => BExp::Cmp(CmpOp::Eq, a, b),
        }
    }

    pub fn not(b: BExp) -> BExp {
        match b {
            BExp::Const(v) => BExp::Const(!v),
            BExp::Not(inner) => (*inner).clone(),
            other => BExp::Not(Arc::new(other)),
        }
    }

    pub fn and<I: IntoIterator<Item = BExp>>(items: I) -> BExp {
        let mut out: Vec<BExp> = Vec::new();
        for b in items {
            match b {
                BExp::Const(true) => {}
                BExp::Const(false) => return FALSE,
                BExp::And(xs) => {
                    for x in xs.iter() {
                        if !out.contains(x) {
                            out.push(x.clone());
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other)
                    }
                }
            }
        }
        match out.len() {
            0 => TRUE,
            1 => out.pop().unwrap(),
            _ => BExp::And(out.into()),
        }
    }

    pub fn or<I: IntoIterator<Item = BExp>>(items: I) -> BExp {
        let mut out: Vec<BExp> = Vec::new();
        for b in items {
            match b {
                BExp::Const(false) => {}
                BExp::Const(true) => return TRUE,
                BExp::Or(xs) => {
                    for x in xs.iter() {
                        if !out.contains(x) {
                            out.push(x.clone());
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other)
                    }
                }
            }
        }
        match out.len() {
            0 => FALSE,
            1 => out.pop().unwrap(),
            _ => BExp::Or(out.into()),
        }
    }

    pub fn imp(a: BExp, b: BExp) -> BExp {
        match (&a, &b) {
            (BExp::Const(false), _) | (_, BExp::Const(true)) => TRUE,
            (BExp::Const(true), _) => b,
            (_, BExp::Const(false)) => BExp::not(a),
            _ => BExp::Imp(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn and2(a: BExp, b: BExp) -> BExp {
        BExp::and([a, b])
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            BExp::Const(v) => Some(*v),
            _ => None,
        }
    }
}

/// Channel names; quantum channels carry a leading `@`.
pub fn is_quantum_channel(c: &str) -> bool {
    c.starts_with('@')
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Tau,
    CIn(Name, Name),
    COut(Name, Exp),
    QIn(Name, Name),
    QOut(Name, Name),
    Op(Name, Vec<Name>),
    Meas(Name, Vec<Name>, Name),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Nil,
    Call(Name, Vec<Exp>, Vec<Name>),
    Prefix(Action, Arc<Term>),
    Sum(Arc<Term>, Arc<Term>),
    Par(Arc<Term>, Arc<Term>),
    Restrict(Arc<Term>, Arc<BTreeSet<Name>>),
    Relabel(Arc<Term>, Arc<Vec<(Name, Name)>>),
    If(BExp, Arc<Term>),
}

impl Term {
    pub fn prefix(a: Action, t: Term) -> Term {
        Term::Prefix(a, Arc::new(t))
    }
    pub fn sum(a: Term, b: Term) -> Term {
        Term::Sum(Arc::new(a), Arc::new(b))
    }
    pub fn par(a: Term, b: Term) -> Term {
        Term::Par(Arc::new(a), Arc::new(b))
    }
    pub fn guard(b: BExp, t: Term) -> Term {
        Term::If(b, Arc::new(t))
    }
    pub fn restrict<I: IntoIterator<Item = Name>>(t: Term, chans: I) -> Term {
        Term::Restrict(Arc::new(t), Arc::new(chans.into_iter().collect()))
    }
    pub fn call(n: &str) -> Term {
        Term::Call(name(n), Vec::new(), Vec::new())
    }
}

#[derive(Clone, Debug)]
pub struct ProcDef {
    pub name: Name,
    pub cparams: Vec<Name>,
    /// `None` when the definition refers to global registers directly.
    pub qparams: Option<Vec<Name>>,
    pub body: Term,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Lts,
    Bisim,
    Oracle,
    Logic,
}

#[derive(Clone, Debug)]
pub struct CheckDirective {
    pub kind: CheckKind,
    pub terms: Vec<Term>,
    pub formula: Option<String>,
    pub psi: Vec<(Name, BigRational)>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub pos: Pos,
}

/// A parsed `.qccs` file with every name resolved.
#[derive(Clone, Debug, Default)]
pub struct Program {
    /// Declared registers followed by spares; index order is tensor order.
    pub registers: Vec<Name>,
    pub spares: Vec<Name>,
    pub domains: BTreeMap<Name, Vec<BigRational>>,
    pub channels: BTreeSet<Name>,
    pub ops: BTreeMap<Name, Builtin<f64>>,
    /// Names bound in the `ops` section, mapped to the builtin they stand for.
    pub op_aliases: BTreeMap<Name, Name>,
    pub defs: BTreeMap<Name, ProcDef>,
    pub checks: Vec<CheckDirective>,
    pub(crate) def_qv: BTreeMap<Name, BTreeSet<Name>>,
}

impl Program {
    /// All registers (declared then spare) in universe order.
    pub fn universe(&self) -> Vec<Name> {
        self.registers.iter().chain(self.spares.iter()).cloned().collect()
    }

    pub fn universe_size(&self) -> usize {
        self.registers.len() + self.spares.len()
    }

    pub fn register_index(&self, r: &str) -> Option<usize> {
        self.registers
            .iter()
            .chain(self.spares.iter())
            .position(|x| &**x == r)
    }

    pub fn spare_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (self.registers.len()..self.universe_size()).into_iter()
    }

    pub fn op(&self, n: &str) -> Option<&Builtin<f64>> {
        self.ops.get(n)
    }

    pub fn domain(&self, v: &str) -> Option<&Vec<BigRational>> {
        if let Some(d) = self.domains.get(v) {
            return Some(d);
        }
        let base = v.split('\'').next().unwrap_or(v);
        self.domains.get(base)
    }

    /// Binds an additional super-operator or measurement under `n`.
    pub fn bind_op(&mut self, n: &str, b: Builtin<f64>) {
        self.ops.insert(name(n), b);
    }
}
