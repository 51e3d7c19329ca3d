use std::fmt;

use crate::quantum::RegSet;
use crate::syntax::{Exp, Name};
use crate::SuperOp;

/// A super-operator inside a formula, with the text it is shown as.
#[derive(Clone, Debug)]
pub struct OpExpr {
    pub text: String,
    pub op: SuperOp,
}

impl OpExpr {
    pub fn new(text: impl Into<String>, op: SuperOp) -> Self {
        OpExpr { text: text.into(), op }
    }
}

/// Action of a diamond. The value of an input is an expression, so a
/// formula can ask for the input of a particular value.
#[derive(Clone, Debug, PartialEq)]
pub enum FAction {
    Tau,
    Out(Name, Exp),
    In(Name, Exp),
    QOut(Name, Name),
    QIn(Name, Name),
}

/// Snapshot formulas.
#[derive(Clone, Debug)]
pub enum Formula {
    /// `G_q̃`: the history agrees with `G` on `q̃`, none of which the term owns.
    Atom { g: OpExpr, regs: RegSet, names: Vec<Name> },
    Not(Box<Formula>),
    And(Vec<Formula>),
    /// `G.φ`
    Apply(OpExpr, Box<Formula>),
    Dia(FAction, DistFormula),
}

/// Distribution formulas.
#[derive(Clone, Debug)]
pub enum DistFormula {
    /// `Q_{≳A}(φ)`
    AtLeast(OpExpr, Box<Formula>),
    AndD(Vec<DistFormula>),
}

impl Formula {
    pub fn truth() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn falsity() -> Formula {
        Formula::Not(Box::new(Formula::truth()))
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn and(mut fs: Vec<Formula>) -> Formula {
        if fs.len() == 1 {
            fs.pop().unwrap()
        } else {
            Formula::And(fs)
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        Formula::not(Formula::And(fs.into_iter().map(Formula::not).collect()))
    }

    /// Nesting depth of diamonds.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom { .. } => 0,
            Formula::Not(f) | Formula::Apply(_, f) => f.depth(),
            Formula::And(fs) => fs.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Dia(_, d) => 1 + d.depth(),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom { .. } => 1,
            Formula::Not(f) | Formula::Apply(_, f) => 1 + f.size(),
            Formula::And(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Dia(_, d) => 1 + d.size(),
        }
    }
}

impl DistFormula {
    pub fn depth(&self) -> usize {
        match self {
            DistFormula::AtLeast(_, f) => f.depth(),
            DistFormula::AndD(ds) => ds.iter().map(DistFormula::depth).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            DistFormula::AtLeast(_, f) => 1 + f.size(),
            DistFormula::AndD(ds) => 1 + ds.iter().map(DistFormula::size).sum::<usize>(),
        }
    }

    pub fn and(mut ds: Vec<DistFormula>) -> DistFormula {
        if ds.len() == 1 {
            ds.pop().unwrap()
        } else {
            DistFormula::AndD(ds)
        }
    }
}

impl fmt::Display for FAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FAction::Tau => f.write_str("tau"),
            FAction::Out(c, e) => write!(f, "{c}!{e}"),
            FAction::In(c, e) => write!(f, "{c}?{e}"),
            FAction::QOut(c, q) => write!(f, "{c}!{q}"),
            FAction::QIn(c, q) => write!(f, "{c}?{q}"),
        }
    }
}

fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, head: &str, items: &[T]) -> fmt::Result {
    write!(f, "{head}(")?;
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::And(fs) if fs.is_empty() => f.write_str("true"),
            Formula::Not(inner) if matches!(&**inner, Formula::And(fs) if fs.is_empty()) => f.write_str("false"),
            Formula::Atom { g, names, .. } => {
                write!(f, "atom({}, {{", g.text)?;
                for (i, q) in names.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{q}")?;
                }
                f.write_str("})")
            }
            Formula::Not(inner) => write!(f, "not({inner})"),
            Formula::And(fs) => list(f, "and", fs),
            Formula::Apply(g, inner) => write!(f, "apply({}, {inner})", g.text),
            Formula::Dia(a, d) => write!(f, "dia({a}, {d})"),
        }
    }
}

impl fmt::Display for DistFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistFormula::AtLeast(a, phi) => write!(f, "Q[>= {}]({phi})", a.text),
            DistFormula::AndD(ds) => list(f, "andd", ds),
        }
    }
}
