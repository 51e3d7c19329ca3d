use num_bigint::BigInt;
use num_rational::BigRational;

use super::ast::*;
use crate::error::{Error, Result};
use crate::quantum::{builtin, Builtin, RegSet};
use crate::syntax::{is_quantum_channel, lex, name, Exp, Name, Pos, Program, Tok, Token};
use crate::SuperOp;

#[derive(Clone, Debug)]
enum OpAst {
    Id,
    Zero,
    Named(String, Option<Vec<String>>, Pos),
    Compose(Box<OpAst>, Box<OpAst>),
    Sum(Box<OpAst>, Box<OpAst>),
}

impl OpAst {
    fn text(&self) -> String {
        match self {
            OpAst::Id => "I".into(),
            OpAst::Zero => "0".into(),
            OpAst::Named(n, None, _) => n.clone(),
            OpAst::Named(n, Some(rs), _) => format!("{n}[{}]", rs.join(", ")),
            OpAst::Compose(a, b) => format!("{} * {}", a.factor_text(), b.factor_text()),
            OpAst::Sum(a, b) => format!("{} + {}", a.text(), b.text()),
        }
    }

    fn factor_text(&self) -> String {
        match self {
            OpAst::Sum(..) => format!("({})", self.text()),
            _ => self.text(),
        }
    }
}

struct P<'a> {
    toks: Vec<Token>,
    i: usize,
    prog: &'a Program,
}

/// Parses a formula in prefix notation against the registers and operators
/// of `prog`. See `docs/grammar.md`.
pub fn parse_formula(src: &str, prog: &Program) -> Result<Formula> {
    let mut p = P { toks: lex(src)?, i: 0, prog };
    let f = p.formula(None)?;
    if p.peek() != &Tok::Eof {
        return Err(p.err("trailing input after formula"));
    }
    Ok(f)
}

/// Parses a super-operator expression, with bare names acting on the first
/// declared registers.
pub fn parse_op_expr(src: &str, prog: &Program) -> Result<OpExpr> {
    let mut p = P { toks: lex(src)?, i: 0, prog };
    let ast = p.op_expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.err("trailing input after operator"));
    }
    p.resolve(&ast, None)
}

impl<'a> P<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.pos(), msg)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}'")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            _ => {
                self.i -= 1;
                Err(self.err("expected a name"))
            }
        }
    }

    fn args<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        self.expect("(")?;
        let mut out = Vec::new();
        if self.eat(")") {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(")") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn formula(&mut self, regs: Option<&[usize]>) -> Result<Formula> {
        let pos = self.pos();
        let head = self.ident()?;
        match head.as_str() {
            "true" => Ok(Formula::truth()),
            "false" => Ok(Formula::falsity()),
            "not" => {
                let mut a = self.args(|p| p.formula(regs))?;
                if a.len() != 1 {
                    return Err(Error::parse(pos, "not takes one formula"));
                }
                Ok(Formula::Not(Box::new(a.pop().unwrap())))
            }
            "and" => Ok(Formula::And(self.args(|p| p.formula(regs))?)),
            "or" => Ok(Formula::or(self.args(|p| p.formula(regs))?)),
            "atom" => {
                self.expect("(")?;
                let g = self.op_expr()?;
                self.expect(",")?;
                self.expect("{")?;
                let mut names = Vec::new();
                if !self.is_sym("}") {
                    loop {
                        names.push(name(&self.ident()?));
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect("}")?;
                self.expect(")")?;
                let idx = self.reg_indices(&names, pos)?;
                let g = self.resolve(&g, Some(&idx))?;
                Ok(Formula::Atom { g, regs: RegSet::from_indices(idx), names })
            }
            "apply" => {
                self.expect("(")?;
                let g = self.op_expr()?;
                self.expect(",")?;
                let g = self.resolve(&g, regs)?;
                let f = self.formula(regs)?;
                self.expect(")")?;
                Ok(Formula::Apply(g, Box::new(f)))
            }
            "dia" => {
                self.expect("(")?;
                let a = self.action()?;
                self.expect(",")?;
                let d = self.dist(regs)?;
                self.expect(")")?;
                Ok(Formula::Dia(a, d))
            }
            other => Err(Error::parse(pos, format!("unknown formula head '{other}'"))),
        }
    }

    fn dist(&mut self, regs: Option<&[usize]>) -> Result<DistFormula> {
        let pos = self.pos();
        let head = self.ident()?;
        match head.as_str() {
            "Q" => {
                self.expect("[")?;
                self.expect(">=")?;
                let a = self.op_expr()?;
                self.expect("]")?;
                let a = self.resolve(&a, regs)?;
                self.expect("(")?;
                let f = self.formula(regs)?;
                self.expect(")")?;
                Ok(DistFormula::AtLeast(a, Box::new(f)))
            }
            "andd" => Ok(DistFormula::AndD(self.args(|p| p.dist(regs))?)),
            other => Err(Error::parse(pos, format!("unknown distribution formula head '{other}'"))),
        }
    }

    fn action(&mut self) -> Result<FAction> {
        let c = self.ident()?;
        if c == "tau" {
            return Ok(FAction::Tau);
        }
        let c = name(&c);
        let out = if self.eat("!") {
            true
        } else if self.eat("?") {
            false
        } else {
            return Err(self.err("expected '!' or '?' after channel"));
        };
        if is_quantum_channel(&c) {
            let q = name(&self.ident()?);
            return Ok(if out { FAction::QOut(c, q) } else { FAction::QIn(c, q) });
        }
        let v = self.value()?;
        Ok(if out { FAction::Out(c, v) } else { FAction::In(c, v) })
    }

    fn value(&mut self) -> Result<Exp> {
        let neg = self.eat("-");
        let e = match self.bump() {
            Tok::Num(n) => {
                let mut r = BigRational::from_integer(n);
                if self.eat("/") {
                    match self.bump() {
                        Tok::Num(d) if d != BigInt::from(0) => r /= BigRational::from_integer(d),
                        _ => return Err(self.err("expected a nonzero denominator")),
                    }
                }
                Exp::Lit(r)
            }
            Tok::Ident(s) if !neg => Exp::Var(name(&s)),
            _ => {
                self.i -= 1;
                return Err(self.err("expected a value or variable"));
            }
        };
        Ok(match e {
            Exp::Lit(r) if neg => Exp::Lit(-r),
            e => e,
        })
    }

    fn op_expr(&mut self) -> Result<OpAst> {
        let mut a = self.op_prod()?;
        while self.eat("+") {
            let b = self.op_prod()?;
            a = OpAst::Sum(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn op_prod(&mut self) -> Result<OpAst> {
        let mut a = self.op_factor()?;
        while self.eat("*") {
            let b = self.op_factor()?;
            a = OpAst::Compose(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn op_factor(&mut self) -> Result<OpAst> {
        let pos = self.pos();
        if self.eat("(") {
            let a = self.op_expr()?;
            self.expect(")")?;
            return Ok(a);
        }
        match self.bump() {
            Tok::Num(n) if n == BigInt::from(0) => Ok(OpAst::Zero),
            Tok::Ident(s) => {
                if self.eat("[") {
                    let mut rs = Vec::new();
                    loop {
                        rs.push(self.ident()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                    self.expect("]")?;
                    Ok(OpAst::Named(s, Some(rs), pos))
                } else if s == "I" {
                    Ok(OpAst::Id)
                } else {
                    Ok(OpAst::Named(s, None, pos))
                }
            }
            _ => Err(Error::parse(pos, "expected a super-operator")),
        }
    }

    fn reg_indices(&self, names: &[Name], pos: Pos) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|q| self.prog.register_index(q).ok_or_else(|| Error::parse(pos, format!("unknown register '{q}'"))))
            .collect()
    }

    fn resolve(&self, a: &OpAst, regs: Option<&[usize]>) -> Result<OpExpr> {
        let op = self.lower(a, regs)?;
        Ok(OpExpr::new(a.text(), op))
    }

    fn lower(&self, a: &OpAst, regs: Option<&[usize]>) -> Result<SuperOp> {
        let n = self.prog.universe_size();
        Ok(match a {
            OpAst::Id => SuperOp::identity(n),
            OpAst::Zero => SuperOp::zero(n),
            OpAst::Compose(x, y) => self.lower(x, regs)?.compose(&self.lower(y, regs)?),
            OpAst::Sum(x, y) => self.lower(x, regs)?.add(&self.lower(y, regs)?),
            OpAst::Named(op, rs, pos) => {
                let b = self.prog.op(op).cloned().or_else(|| builtin::<f64>(op));
                let local = match b {
                    Some(Builtin::Op(o)) => o,
                    Some(Builtin::Meas(_)) => {
                        return Err(Error::parse(*pos, format!("'{op}' is a measurement, not a super-operator")))
                    }
                    None => return Err(Error::parse(*pos, format!("unknown super-operator '{op}'"))),
                };
                let idx = match rs {
                    Some(rs) => self.reg_indices(&rs.iter().map(|r| name(r)).collect::<Vec<_>>(), *pos)?,
                    None => match regs {
                        Some(r) if r.len() == local.arity => r.to_vec(),
                        _ => (0..local.arity).collect(),
                    },
                };
                if idx.len() != local.arity {
                    return Err(Error::parse(*pos, format!("'{op}' acts on {} registers", local.arity)));
                }
                if idx.iter().any(|&r| r >= n) {
                    return Err(Error::parse(*pos, format!("'{op}' needs more registers than the program has")));
                }
                let mut seen = idx.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != idx.len() {
                    return Err(Error::parse(*pos, "repeated register"));
                }
                local.lift(n, &idx)
            }
        })
    }
}
