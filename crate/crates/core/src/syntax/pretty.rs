use std::fmt::{self, Display, Formatter, Write};

use num_rational::BigRational;

use super::ast::*;

fn lit(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn exp_prec(e: &Exp) -> u8 {
    match e {
        Exp::Add(..) | Exp::Sub(..) => 0,
        Exp::Mul(..) => 1,
        Exp::Lit(r) if !r.is_integer() => 1,
        _ => 2,
    }
}

fn write_exp(f: &mut Formatter<'_>, e: &Exp, min: u8) -> fmt::Result {
    if exp_prec(e) < min {
        f.write_char('(')?;
        write_exp(f, e, 0)?;
        return f.write_char(')');
    }
    match e {
        Exp::Lit(r) => f.write_str(&lit(r)),
        Exp::Var(v) => f.write_str(v),
        Exp::Neg(a) => {
            f.write_char('-')?;
            write_exp(f, a, 2)
        }
        Exp::Add(a, b) => {
            write_exp(f, a, 0)?;
            f.write_str(" + ")?;
            write_exp(f, b, 1)
        }
        Exp::Sub(a, b) => {
            write_exp(f, a, 0)?;
            f.write_str(" - ")?;
            write_exp(f, b, 1)
        }
        Exp::Mul(a, b) => {
            write_exp(f, a, 1)?;
            f.write_str(" * ")?;
            write_exp(f, b, 2)
        }
    }
}

impl Display for Exp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_exp(f, self, 0)
    }
}

fn bexp_prec(b: &BExp) -> u8 {
    match b {
        BExp::Imp(..) => 0,
        BExp::Or(xs) if xs.len() > 1 => 1,
        BExp::And(xs) if xs.len() > 1 => 2,
        _ => 3,
    }
}

fn write_bexp(f: &mut Formatter<'_>, b: &BExp, min: u8) -> fmt::Result {
    if bexp_prec(b) < min {
        f.write_char('(')?;
        write_bexp(f, b, 0)?;
        return f.write_char(')');
    }
    match b {
        BExp::Const(v) => f.write_str(if *v { "true" } else { "false" }),
        BExp::Cmp(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
        BExp::Not(a) => {
            f.write_str("not ")?;
            write_bexp(f, a, 3)
        }
        BExp::And(xs) | BExp::Or(xs) if xs.is_empty() => f.write_str(if matches!(b, BExp::And(_)) { "true" } else { "false" }),
        BExp::And(xs) | BExp::Or(xs) if xs.len() == 1 => write_bexp(f, &xs[0], min),
        BExp::And(xs) | BExp::Or(xs) => {
            let (sep, lvl) = if matches!(b, BExp::And(_)) { (" and ", 3) } else { (" or ", 2) };
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write_bexp(f, x, lvl)?;
            }
            Ok(())
        }
        BExp::Imp(a, c) => {
            write_bexp(f, a, 1)?;
            f.write_str(" => ")?;
            write_bexp(f, c, 0)
        }
    }
}

impl Display for BExp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_bexp(f, self, 0)
    }
}

impl Display for Action {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Action::Tau => f.write_str("tau"),
            Action::CIn(c, x) | Action::QIn(c, x) => write!(f, "{c}?{x}"),
            Action::QOut(c, q) => write!(f, "{c}!{q}"),
            Action::COut(c, e) => {
                write!(f, "{c}!")?;
                write_exp(f, e, 2)
            }
            Action::Op(o, regs) => write!(f, "{o}[{}]", regs.join(", ")),
            Action::Meas(m, regs, x) => write!(f, "{m}[{}; {x}]", regs.join(", ")),
        }
    }
}

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Par(..) => 0,
        Term::Sum(..) => 1,
        Term::Prefix(..) | Term::If(..) => 2,
        Term::Restrict(..) | Term::Relabel(..) => 3,
        Term::Nil | Term::Call(..) => 4,
    }
}

fn write_term(f: &mut Formatter<'_>, t: &Term, min: u8) -> fmt::Result {
    if term_prec(t) < min {
        f.write_char('(')?;
        write_term(f, t, 0)?;
        return f.write_char(')');
    }
    match t {
        Term::Nil => f.write_str("nil"),
        Term::Call(n, cargs, qargs) => {
            f.write_str(n)?;
            if !cargs.is_empty() || !qargs.is_empty() {
                f.write_char('(')?;
                for (i, e) in cargs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                if !qargs.is_empty() {
                    write!(f, "; {}", qargs.join(", "))?;
                }
                f.write_char(')')?;
            }
            Ok(())
        }
        Term::Prefix(a, body) => {
            write!(f, "{a}.")?;
            write_term(f, body, 2)
        }
        Term::If(b, body) => {
            write!(f, "if {b} then ")?;
            write_term(f, body, 2)
        }
        Term::Sum(a, b) => {
            write_term(f, a, 1)?;
            f.write_str(" + ")?;
            write_term(f, b, 2)
        }
        Term::Par(a, b) => {
            write_term(f, a, 0)?;
            f.write_str(" || ")?;
            write_term(f, b, 1)
        }
        Term::Restrict(b, l) => {
            write_term(f, b, 3)?;
            let chans: Vec<&str> = l.iter().map(|c| &**c).collect();
            write!(f, " \\ {{{}}}", chans.join(", "))
        }
        Term::Relabel(b, pairs) => {
            write_term(f, b, 3)?;
            let items: Vec<String> = pairs.iter().map(|(a, b)| format!("{a} -> {b}")).collect();
            write!(f, "[{}]", items.join(", "))
        }
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_term(f, self, 0)
    }
}

/// Renders a program back into the concrete syntax.
pub fn pretty_program(p: &Program) -> String {
    let mut s = String::new();
    let join = |xs: &[Name]| xs.iter().map(|x| &**x).collect::<Vec<_>>().join(", ");
    if !p.registers.is_empty() {
        let _ = writeln!(s, "registers {};", join(&p.registers));
    }
    if !p.spares.is_empty() {
        let _ = writeln!(s, "spares {};", join(&p.spares));
    }
    if !p.domains.is_empty() {
        s.push_str("domains\n");
        for (x, vals) in &p.domains {
            let vs: Vec<String> = vals.iter().map(lit).collect();
            let _ = writeln!(s, "  {x} : {{{}}};", vs.join(", "));
        }
    }
    if !p.channels.is_empty() {
        let cs: Vec<&str> = p.channels.iter().map(|c| &**c).collect();
        let _ = writeln!(s, "channels {};", cs.join(", "));
    }
    if !p.op_aliases.is_empty() {
        s.push_str("ops\n");
        for (a, b) in &p.op_aliases {
            let _ = writeln!(s, "  {a} = {b};");
        }
    }
    if !p.defs.is_empty() {
        s.push_str("defs\n");
        for d in p.defs.values() {
            let _ = write!(s, "  {}", d.name);
            if !d.cparams.is_empty() || d.qparams.is_some() {
                let _ = write!(s, "({}", join(&d.cparams));
                if let Some(qs) = &d.qparams {
                    let _ = write!(s, "; {}", join(qs));
                }
                s.push(')');
            }
            let _ = writeln!(s, " = {};", d.body);
        }
    }
    if !p.checks.is_empty() {
        s.push_str("checks\n");
        for c in &p.checks {
            let kind = match c.kind {
                CheckKind::Lts => "lts",
                CheckKind::Bisim => "bisim",
                CheckKind::Oracle => "oracle",
                CheckKind::Logic => "logic",
            };
            let ts: Vec<String> = c.terms.iter().map(|t| t.to_string()).collect();
            let _ = write!(s, "  {kind} {}", ts.join(", "));
            if let Some(f) = &c.formula {
                let _ = write!(s, " \"{f}\"");
            }
            if let Some(n) = c.samples {
                let _ = write!(s, " samples {n}");
            }
            if let Some(n) = c.seed {
                let _ = write!(s, " seed {n}");
            }
            if !c.psi.is_empty() {
                let vs: Vec<String> = c.psi.iter().map(|(x, v)| format!("{x} = {}", lit(v))).collect();
                let _ = write!(s, " with {}", vs.join(", "));
            }
            s.push_str(";\n");
        }
    }
    s
}
