use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::analysis::compute_def_qv;
use super::ast::*;
use super::lexer::{lex, Tok, Token};
use crate::error::{Error, Result};
use crate::quantum::{builtin, Builtin};

const SECTIONS: &[&str] = &["registers", "spares", "domains", "channels", "ops", "defs", "checks"];
const KEYWORDS: &[&str] = &[
    "nil", "tau", "if", "then", "sum", "in", "and", "or", "not", "true", "false", "registers", "spares",
    "domains", "channels", "ops", "defs", "checks",
];

struct Parser<'p> {
    toks: Vec<Token>,
    i: usize,
    prog: &'p mut Program,
    index_env: Vec<(String, BigRational)>,
}

/// Parses a complete `.qccs` program.
pub fn parse_program(src: &str) -> Result<Program> {
    let mut prog = Program::default();
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0, prog: &mut prog, index_env: Vec::new() };
    p.program()?;
    resolve(&prog)?;
    prog.def_qv = compute_def_qv(&prog);
    Ok(prog)
}

/// Parses a process term in the context of `prog`, adding any builtin
/// operators it mentions to the program's operator table.
pub fn parse_term(src: &str, prog: &mut Program) -> Result<Term> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0, prog, index_env: Vec::new() };
    let t = p.par()?;
    p.expect_eof()?;
    check_calls(&t, p.prog, Pos::default())?;
    Ok(t)
}

pub fn parse_bexp(src: &str, prog: &mut Program) -> Result<BExp> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0, prog, index_env: Vec::new() };
    let b = p.bexp()?;
    p.expect_eof()?;
    Ok(b)
}

/// Parses `x = 1, y = 0` style evaluations.
pub fn parse_evaluation(src: &str) -> Result<Vec<(Name, BigRational)>> {
    let mut prog = Program::default();
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0, prog: &mut prog, index_env: Vec::new() };
    let mut out = Vec::new();
    if p.at_eof() {
        return Ok(out);
    }
    loop {
        let v = p.ident()?;
        p.expect("=")?;
        let r = p.signed_rational()?;
        out.push((name(&v), r));
        if !p.eat(",") {
            break;
        }
    }
    p.expect_eof()?;
    Ok(out)
}

impl<'p> Parser<'p> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }
    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }
    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }
    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }
    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }
    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }
    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) || self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::parse(self.pos(), msg))
    }
    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Num(n) => format!("'{n}'"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".into(),
        }
    }
    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", self.describe()))
        }
    }
    fn expect_eof(&self) -> Result<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err(format!("unexpected {}", self.describe()))
        }
    }
    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }
    fn at_section(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if SECTIONS.contains(&s.as_str()))
    }

    fn program(&mut self) -> Result<()> {
        while !self.at_eof() {
            let pos = self.pos();
            let sec = match self.peek() {
                Tok::Ident(s) if SECTIONS.contains(&s.as_str()) => s.clone(),
                _ => return self.err(format!("expected a section keyword, found {}", self.describe())),
            };
            self.bump();
            while !self.at_eof() && !self.at_section() {
                match sec.as_str() {
                    "registers" | "spares" => self.registers(sec == "spares")?,
                    "domains" => self.domain_item()?,
                    "channels" => self.channel_item()?,
                    "ops" => self.op_item()?,
                    "defs" => self.def_item()?,
                    "checks" => self.check_item()?,
                    _ => return Err(Error::parse(pos, "unknown section")),
                }
            }
        }
        Ok(())
    }

    fn registers(&mut self, spare: bool) -> Result<()> {
        loop {
            let pos = self.pos();
            let r = self.ident()?;
            if r.starts_with('@') {
                return Err(Error::parse(pos, "register names cannot start with '@'"));
            }
            if self.prog.register_index(&r).is_some() {
                return Err(Error::parse(pos, format!("register '{r}' declared twice")));
            }
            if spare {
                self.prog.spares.push(name(&r));
            } else {
                if !self.prog.spares.is_empty() {
                    return Err(Error::parse(pos, "registers must be declared before spares"));
                }
                self.prog.registers.push(name(&r));
            }
            if self.prog.universe_size() > 10 {
                return Err(Error::parse(pos, "at most 10 registers are supported"));
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")
    }

    fn signed_rational(&mut self) -> Result<BigRational> {
        let neg = self.eat("-");
        let n = match self.bump() {
            Tok::Num(n) => n,
            _ => {
                self.i -= 1;
                return self.err(format!("expected number, found {}", self.describe()));
            }
        };
        let mut r = BigRational::from_integer(n);
        if self.is_sym("/") {
            self.bump();
            match self.bump() {
                Tok::Num(d) if d != BigInt::from(0) => r /= BigRational::from_integer(d),
                _ => return self.err("expected non-zero denominator"),
            }
        }
        Ok(if neg { -r } else { r })
    }

    fn value_set(&mut self) -> Result<Vec<BigRational>> {
        self.expect("{")?;
        let mut vals: Vec<BigRational> = Vec::new();
        if !self.is_sym("}") {
            loop {
                let lo = self.signed_rational()?;
                if self.eat("..") {
                    let hi = self.signed_rational()?;
                    if !lo.is_integer() || !hi.is_integer() || hi < lo {
                        return self.err("ranges need integer bounds lo..hi with lo <= hi");
                    }
                    let mut v = lo.clone();
                    while v <= hi {
                        if !vals.contains(&v) {
                            vals.push(v.clone());
                        }
                        v += BigRational::from_integer(BigInt::from(1));
                    }
                } else if !vals.contains(&lo) {
                    vals.push(lo);
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("}")?;
        Ok(vals)
    }

    fn domain_item(&mut self) -> Result<()> {
        let mut vars = vec![self.ident()?];
        while self.eat(",") {
            vars.push(self.ident()?);
        }
        self.expect(":")?;
        let pos = self.pos();
        let vals = self.value_set()?;
        if vals.is_empty() {
            return Err(Error::parse(pos, "domains must be non-empty"));
        }
        for v in vars {
            self.prog.domains.insert(name(&v), vals.clone());
        }
        self.expect(";")
    }

    fn channel_item(&mut self) -> Result<()> {
        loop {
            let pos = self.pos();
            let c = self.ident()?;
            if !self.prog.channels.insert(name(&c)) {
                return Err(Error::parse(pos, format!("channel '{c}' declared twice")));
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")
    }

    fn op_item(&mut self) -> Result<()> {
        let pos = self.pos();
        let alias = self.ident()?;
        self.expect("=")?;
        let tpos = self.pos();
        let target = self.ident()?;
        let b = match self.lookup_op(&target) {
            Some(b) => b,
            None => return Err(Error::parse(tpos, format!("unknown operator '{target}'"))),
        };
        if self.prog.ops.contains_key(alias.as_str()) {
            return Err(Error::parse(pos, format!("operator '{alias}' bound twice")));
        }
        self.prog.bind_op(&alias, b);
        let base = self.prog.op_aliases.get(target.as_str()).cloned().unwrap_or_else(|| name(&target));
        self.prog.op_aliases.insert(name(&alias), base);
        self.expect(";")
    }

    fn lookup_op(&mut self, n: &str) -> Option<Builtin<f64>> {
        if let Some(b) = self.prog.ops.get(n) {
            return Some(b.clone());
        }
        let b = builtin::<f64>(n)?;
        self.prog.bind_op(n, b.clone());
        Some(b)
    }

    fn def_item(&mut self) -> Result<()> {
        let pos = self.pos();
        let n = self.ident()?;
        let mut cparams = Vec::new();
        let mut qparams = None;
        if self.eat("(") {
            if !self.is_sym(";") && !self.is_sym(")") {
                loop {
                    cparams.push(name(&self.ident()?));
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            if self.eat(";") {
                let mut qs = Vec::new();
                if !self.is_sym(")") {
                    loop {
                        qs.push(name(&self.ident()?));
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                qparams = Some(qs);
            }
            self.expect(")")?;
        }
        self.expect("=")?;
        let body = self.par()?;
        self.expect(";")?;
        if self.prog.defs.contains_key(n.as_str()) {
            return Err(Error::parse(pos, format!("process '{n}' defined twice")));
        }
        let def = ProcDef { name: name(&n), cparams, qparams, body, pos };
        self.prog.defs.insert(name(&n), def);
        Ok(())
    }

    fn check_item(&mut self) -> Result<()> {
        let pos = self.pos();
        let kind = match self.ident()?.as_str() {
            "lts" => CheckKind::Lts,
            "bisim" => CheckKind::Bisim,
            "oracle" => CheckKind::Oracle,
            "logic" => CheckKind::Logic,
            other => return Err(Error::parse(pos, format!("unknown check '{other}'"))),
        };
        let mut terms = vec![self.par()?];
        let arity = match kind {
            CheckKind::Lts | CheckKind::Logic => 1,
            _ => 2,
        };
        while terms.len() < arity {
            self.expect(",")?;
            terms.push(self.par()?);
        }
        let mut d = CheckDirective { kind, terms, formula: None, psi: Vec::new(), samples: None, seed: None, pos };
        if d.kind == CheckKind::Logic {
            match self.bump() {
                Tok::Str(s) => d.formula = Some(s),
                _ => {
                    self.i -= 1;
                    return self.err("expected a quoted formula");
                }
            }
        }
        loop {
            if self.is_kw("samples") || self.is_kw("seed") {
                let key = self.ident()?;
                let v = match self.bump() {
                    Tok::Num(n) => n,
                    _ => return self.err("expected a number"),
                };
                let v: u64 = v.try_into().map_err(|_| Error::parse(pos, "number out of range"))?;
                if key == "samples" {
                    d.samples = Some(v as usize);
                } else {
                    d.seed = Some(v);
                }
            } else if self.is_kw("with") {
                self.bump();
                loop {
                    let v = self.ident()?;
                    self.expect("=")?;
                    let r = self.signed_rational()?;
                    d.psi.push((name(&v), r));
                    if !self.eat(",") {
                        break;
                    }
                }
            } else {
                break;
            }
        }
        self.expect(";")?;
        self.prog.checks.push(d);
        Ok(())
    }

    // ---- terms ----

    fn par(&mut self) -> Result<Term> {
        let mut t = self.sum()?;
        while self.eat("||") {
            let u = self.sum()?;
            t = Term::par(t, u);
        }
        Ok(t)
    }

    fn sum(&mut self) -> Result<Term> {
        let mut t = self.pre()?;
        while self.eat("+") {
            let u = self.pre()?;
            t = Term::sum(t, u);
        }
        Ok(t)
    }

    fn channel(&mut self) -> Result<Name> {
        let pos = self.pos();
        let c = self.ident()?;
        if !self.prog.channels.contains(c.as_str()) {
            return Err(Error::parse(pos, format!("unknown channel '{c}'")));
        }
        Ok(name(&c))
    }

    /// Reads an operator name, expanding `Name{i}` templates inside `sum`.
    fn op_name(&mut self) -> Result<Option<String>> {
        let base = match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return Ok(None),
        };
        let mut n = base.clone();
        let mut k = 1;
        if matches!(self.peek_at(1), Tok::Sym("{")) {
            if let (Tok::Ident(idx), Tok::Sym("}")) = (self.peek_at(2), self.peek_at(3)) {
                if let Some((_, v)) = self.index_env.iter().rev().find(|(x, _)| x == idx) {
                    n = format!("{base}{v}");
                    k = 4;
                }
            }
        }
        if matches!(self.peek_at(k), Tok::Sym("[")) && (self.prog.ops.contains_key(n.as_str()) || builtin::<f64>(&n).is_some()) {
            for _ in 0..k {
                self.bump();
            }
            return Ok(Some(n));
        }
        if k == 4 {
            return self.err(format!("unknown operator '{n}'"));
        }
        Ok(None)
    }

    fn reg_list(&mut self) -> Result<Vec<Name>> {
        let mut regs = Vec::new();
        loop {
            regs.push(name(&self.ident()?));
            if !self.eat(",") {
                break;
            }
        }
        Ok(regs)
    }

    fn pre(&mut self) -> Result<Term> {
        let pos = self.pos();
        if self.eat("tau") {
            self.expect(".")?;
            return Ok(Term::prefix(Action::Tau, self.pre()?));
        }
        if self.eat("if") {
            let b = self.bexp()?;
            self.expect("then")?;
            return Ok(Term::guard(b, self.pre()?));
        }
        if self.eat("sum") {
            return self.sum_sugar(pos);
        }
        if let Tok::Ident(_) = self.peek() {
            if matches!(self.peek_at(1), Tok::Sym("?") | Tok::Sym("!")) {
                let c = self.channel()?;
                let quantum = is_quantum_channel(&c);
                let input = self.is_sym("?");
                self.bump();
                let act = match (quantum, input) {
                    (false, true) => Action::CIn(c, name(&self.ident()?)),
                    (false, false) => Action::COut(c, self.atomic_exp()?),
                    (true, true) => Action::QIn(c, name(&self.ident()?)),
                    (true, false) => Action::QOut(c, name(&self.ident()?)),
                };
                self.expect(".")?;
                return Ok(Term::prefix(act, self.pre()?));
            }
            if let Some(op) = self.op_name()? {
                let b = self.lookup_op(&op).expect("checked by op_name");
                self.expect("[")?;
                let regs = self.reg_list()?;
                let act = match &b {
                    Builtin::Op(_) => Action::Op(name(&op), regs.clone()),
                    Builtin::Meas(_) => {
                        self.expect(";")?;
                        Action::Meas(name(&op), regs.clone(), name(&self.ident()?))
                    }
                };
                self.expect("]")?;
                if regs.len() != b.arity() {
                    return Err(Error::parse(
                        pos,
                        format!("operator '{op}' expects {} registers, got {}", b.arity(), regs.len()),
                    ));
                }
                let distinct: BTreeSet<&Name> = regs.iter().collect();
                if distinct.len() != regs.len() {
                    return Err(Error::parse(pos, format!("operator '{op}' applied to repeated registers")));
                }
                self.expect(".")?;
                return Ok(Term::prefix(act, self.pre()?));
            }
        }
        self.post()
    }

    fn sum_sugar(&mut self, pos: Pos) -> Result<Term> {
        let idx = self.ident()?;
        self.expect("in")?;
        let vals = self.value_set()?;
        self.expect(":")?;
        if vals.is_empty() {
            return Err(Error::parse(pos, "sum over an empty index set"));
        }
        let start = self.i;
        let mut acc: Option<Term> = None;
        let mut end = start;
        for v in vals {
            self.i = start;
            self.index_env.push((idx.clone(), v));
            let t = self.pre();
            self.index_env.pop();
            let t = t?;
            end = self.i;
            acc = Some(match acc {
                None => t,
                Some(a) => Term::sum(a, t),
            });
        }
        self.i = end;
        Ok(acc.unwrap())
    }

    fn post(&mut self) -> Result<Term> {
        let mut t = self.atom()?;
        loop {
            if self.eat("\\") {
                self.expect("{")?;
                let mut chans = Vec::new();
                if !self.is_sym("}") {
                    loop {
                        chans.push(self.channel()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect("}")?;
                t = Term::restrict(t, chans);
            } else if self.is_sym("[") {
                self.bump();
                let mut pairs = Vec::new();
                loop {
                    let pos = self.pos();
                    let a = self.channel()?;
                    self.expect("->")?;
                    let b = self.channel()?;
                    if is_quantum_channel(&a) != is_quantum_channel(&b) {
                        return Err(Error::parse(pos, "relabelling must preserve channel kind"));
                    }
                    pairs.push((a, b));
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect("]")?;
                t = Term::Relabel(std::sync::Arc::new(t), std::sync::Arc::new(pairs));
            } else {
                return Ok(t);
            }
        }
    }

    fn atom(&mut self) -> Result<Term> {
        if self.eat("nil") {
            return Ok(Term::Nil);
        }
        if self.eat("(") {
            let t = self.par()?;
            self.expect(")")?;
            return Ok(t);
        }
        let pos = self.pos();
        let n = match self.ident() {
            Ok(n) => n,
            Err(_) => return self.err(format!("expected a process term, found {}", self.describe())),
        };
        if n.starts_with('@') {
            return Err(Error::parse(pos, format!("'{n}' is a channel, not a process")));
        }
        let mut cargs = Vec::new();
        let mut qargs = Vec::new();
        if self.eat("(") {
            if !self.is_sym(";") && !self.is_sym(")") {
                loop {
                    cargs.push(self.exp()?);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            if self.eat(";") && !self.is_sym(")") {
                qargs = self.reg_list()?;
            }
            self.expect(")")?;
        }
        Ok(Term::Call(name(&n), cargs, qargs))
    }

    // ---- expressions ----

    fn exp(&mut self) -> Result<Exp> {
        let mut e = self.mul_exp()?;
        loop {
            if self.eat("+") {
                e = Exp::Add(e.into(), self.mul_exp()?.into());
            } else if self.is_sym("-") {
                self.bump();
                e = Exp::Sub(e.into(), self.mul_exp()?.into());
            } else {
                return Ok(e);
            }
        }
    }

    fn mul_exp(&mut self) -> Result<Exp> {
        let mut e = self.atomic_exp()?;
        while self.eat("*") {
            e = Exp::Mul(e.into(), self.atomic_exp()?.into());
        }
        Ok(e)
    }

    fn atomic_exp(&mut self) -> Result<Exp> {
        if self.eat("-") {
            return Ok(match self.atomic_exp()? {
                Exp::Lit(r) => Exp::Lit(-r),
                e => Exp::Neg(e.into()),
            });
        }
        if self.eat("(") {
            let e = self.exp()?;
            self.expect(")")?;
            return Ok(e);
        }
        if let Tok::Num(_) = self.peek() {
            return Ok(Exp::Lit(self.signed_rational()?));
        }
        let v = self.ident()?;
        if let Some((_, val)) = self.index_env.iter().rev().find(|(x, _)| *x == v) {
            return Ok(Exp::Lit(val.clone()));
        }
        Ok(Exp::Var(name(&v)))
    }

    fn bexp(&mut self) -> Result<BExp> {
        let a = self.or_b()?;
        if self.eat("=>") {
            let b = self.bexp()?;
            return Ok(BExp::Imp(a.into(), b.into()));
        }
        Ok(a)
    }

    fn or_b(&mut self) -> Result<BExp> {
        let mut xs = vec![self.and_b()?];
        while self.eat("or") {
            xs.push(self.and_b()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { BExp::Or(xs.into()) })
    }

    fn and_b(&mut self) -> Result<BExp> {
        let mut xs = vec![self.unary_b()?];
        while self.eat("and") {
            xs.push(self.unary_b()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { BExp::And(xs.into()) })
    }

    fn unary_b(&mut self) -> Result<BExp> {
        if self.eat("not") {
            return Ok(BExp::Not(self.unary_b()?.into()));
        }
        if self.eat("true") {
            return Ok(TRUE);
        }
        if self.eat("false") {
            return Ok(FALSE);
        }
        if self.is_sym("(") {
            let save = self.i;
            self.bump();
            if let Ok(b) = self.bexp() {
                if self.eat(")") {
                    return Ok(b);
                }
            }
            self.i = save;
        }
        let l = self.exp()?;
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("=") => CmpOp::Eq,
            _ => return self.err(format!("expected a comparison, found {}", self.describe())),
        };
        self.bump();
        let r = self.exp()?;
        Ok(BExp::Cmp(op, l, r))
    }
}

fn check_calls(t: &Term, prog: &Program, pos: Pos) -> Result<()> {
    match t {
        Term::Nil => Ok(()),
        Term::Call(n, cargs, qargs) => match prog.defs.get(n) {
            None => Err(Error::parse(pos, format!("unknown process '{n}'"))),
            Some(d) => {
                if d.cparams.len() != cargs.len() {
                    return Err(Error::parse(
                        pos,
                        format!("'{n}' expects {} classical arguments, got {}", d.cparams.len(), cargs.len()),
                    ));
                }
                let want = d.qparams.as_ref().map_or(0, |q| q.len());
                if want != qargs.len() {
                    return Err(Error::parse(pos, format!("'{n}' expects {want} quantum arguments, got {}", qargs.len())));
                }
                Ok(())
            }
        },
        Term::Prefix(_, t) | Term::Restrict(t, _) | Term::Relabel(t, _) | Term::If(_, t) => check_calls(t, prog, pos),
        Term::Sum(a, b) | Term::Par(a, b) => {
            check_calls(a, prog, pos)?;
            check_calls(b, prog, pos)
        }
    }
}

fn resolve(prog: &Program) -> Result<()> {
    for d in prog.defs.values() {
        check_calls(&d.body, prog, d.pos)?;
    }
    for c in &prog.checks {
        for t in &c.terms {
            check_calls(t, prog, c.pos)?;
        }
    }
    Ok(())
}
