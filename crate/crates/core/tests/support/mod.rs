#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::Complex;
use num_traits::ToPrimitive;
use qsymb::boolean::{eval, eval_exp, BoolCtx, ConcreteAction, Evaluation};
use qsymb::oracle::{random_rho, Configuration, Interpreter, RhoKind};
use qsymb::quantum::{hermitian_eigen, kron, trace, trace_norm, CMat, RegSet};
use qsymb::semantics::{Qlts, SnapId};
use qsymb::syntax::*;
use qsymb::SuperOp;
use rand::Rng;
use rand_distr::StandardNormal;

pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

pub fn fixture(name: &str) -> Program {
    let src = std::fs::read_to_string(format!("{FIXTURES}/{name}.qccs")).unwrap();
    parse_program(&src).unwrap()
}

pub fn terms(prog: &mut Program, t: &str, u: &str) -> (Term, Term) {
    (parse_term(t, prog).unwrap(), parse_term(u, prog).unwrap())
}

/// Every pair of the fixture corpus with a known relationship.
pub const PAIRS: &[(&str, &str, &str)] = &[
    ("setzero", "P", "Q"),
    ("outs", "A", "B"),
    ("sdc", "SdcSpec", "Sdc"),
    ("sdc", "SpecOpen(x)", "SdcOpen(x)"),
    ("sdc_mutant", "SdcSpec", "Mutant"),
    ("sdc_mutant", "SpecOpen(x)", "MutantOpen(x)"),
    ("params", "Out(x)", "Zero"),
    ("params", "Guarded(x)", "Out(x)"),
    ("params", "Flip(x)", "Keep(x)"),
    ("params", "Echo", "EchoZero"),
    ("params", "Echo", "EchoOne"),
    ("params", "Pair(x, y)", "Swap(x, y)"),
    ("params", "Meas(x)", "Prep(x)"),
    ("params", "Out(x)", "Out(y)"),
];

fn gauss<R: Rng>(rng: &mut R) -> Complex<f64> {
    Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix<R: Rng>(rng: &mut R, d: usize) -> CMat<f64> {
    CMat::from_fn(d, d, |_, _| gauss(rng))
}

fn inv_sqrt(m: &CMat<f64>) -> CMat<f64> {
    let d = m.nrows();
    let mut out = CMat::zeros(d, d);
    for (l, v) in hermitian_eigen(m) {
        out += (&v * v.adjoint()) * Complex::new(1.0 / l.sqrt(), 0.0);
    }
    out
}

/// Random Kraus map with `k` operators on the registers `regs` of an
/// `n`-register universe; trace preserving, or scaled below that.
pub fn random_map<R: Rng>(rng: &mut R, n: usize, regs: &[usize], k: usize, tp: bool) -> SuperOp {
    let d = 1 << regs.len();
    let ks: Vec<CMat<f64>> = (0..k).map(|_| random_matrix(rng, d)).collect();
    let s = ks.iter().fold(CMat::zeros(d, d), |acc, m| acc + m.adjoint() * m);
    let norm = inv_sqrt(&s);
    let factor = if tp { 1.0 } else { rng.random_range(0.2..0.9f64).sqrt() };
    let ks: Vec<CMat<f64>> = ks.iter().map(|m| m * &norm * Complex::new(factor, 0.0)).collect();
    SuperOp::local(n, regs, &ks)
}

pub fn random_regs<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    let k = rng.random_range(1..=n.min(2));
    let mut out = Vec::new();
    for _ in 0..k {
        let i = rng.random_range(0..all.len());
        out.push(all.remove(i));
    }
    out.sort_unstable();
    out
}

// ---------------------------------------------------------------------------
// Direct check of ground symbolic bisimulation on the grounded qLTS.

/// Moves of a closed snapshot: guard evaluated, inputs expanded over the
/// domain, weights composed after the history.
fn ground_moves(q: &mut Qlts<'_>, s: SnapId) -> Vec<(ConcreteAction, Vec<(SnapId, SuperOp)>)> {
    if !q.is_explored(s) {
        q.explore(&[s]).unwrap();
    }
    let empty = Evaluation::new();
    let env = q.snapshot(s).env.clone();
    let mut out = Vec::new();
    for tr in q.transitions(s).to_vec() {
        if !eval(&empty, &tr.guard).unwrap() {
            continue;
        }
        let mut cases: Vec<(ConcreteAction, Option<(Name, Exp)>)> = Vec::new();
        match &tr.action {
            Action::Tau => cases.push((ConcreteAction::Tau, None)),
            Action::COut(c, e) => cases.push((ConcreteAction::COut(c.clone(), eval_exp(&empty, e).unwrap()), None)),
            Action::QOut(c, r) => cases.push((ConcreteAction::QOut(c.clone(), r.clone()), None)),
            Action::QIn(c, r) => cases.push((ConcreteAction::QIn(c.clone(), r.clone()), None)),
            Action::CIn(c, x) => {
                for v in q.program().domain(x).unwrap().clone() {
                    cases.push((ConcreteAction::CIn(c.clone(), v.clone()), Some((x.clone(), Exp::Lit(v)))));
                }
            }
            other => panic!("unexpected label {other:?}"),
        }
        for (alpha, sub) in cases {
            let mut dist = Vec::new();
            for (t, w) in &tr.target {
                let t = match &sub {
                    None => *t,
                    Some((x, v)) => {
                        let snap = q.snapshot(*t).clone();
                        let term = subst(&snap.term, &CSubst::from([(x.clone(), v.clone())]), &QSubst::new());
                        q.intern(term, snap.env).unwrap()
                    }
                };
                dist.push((t, w.compose(&env)));
            }
            out.push((alpha, dist));
        }
    }
    out
}

fn close(m: &CMat<f64>, o: &CMat<f64>, tol: f64) -> bool {
    (m - o).iter().all(|z| z.norm() <= tol)
}

/// Largest ground bisimulation on the closed snapshots reachable from
/// `roots`, by partition refinement. Returns the block of every node.
pub struct GroundGraph {
    pub nodes: Vec<SnapId>,
    pub moves: Vec<Vec<(ConcreteAction, Vec<(usize, CMat<f64>)>)>>,
    pub block: Vec<usize>,
}

pub fn ground_graph(q: &mut Qlts<'_>, roots: &[SnapId], tol: f64) -> GroundGraph {
    let mut nodes: Vec<SnapId> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut raw = Vec::new();
    let mut stack: Vec<SnapId> = roots.to_vec();
    while let Some(s) = stack.pop() {
        if index.contains_key(&s) {
            continue;
        }
        index.insert(s, nodes.len());
        nodes.push(s);
        let ms = ground_moves(q, s);
        for (_, d) in &ms {
            stack.extend(d.iter().map(|(t, _)| *t));
        }
        raw.push(ms);
    }
    // raw follows discovery order, which matches `nodes`
    let moves: Vec<Vec<(ConcreteAction, Vec<(usize, CMat<f64>)>)>> = raw
        .into_iter()
        .map(|ms| ms.into_iter().map(|(a, d)| (a, d.into_iter().map(|(t, w)| (index[&t], w.kraus_sum())).collect())).collect())
        .collect();
    let n = q.registers();
    // clause 1: same quantum variables, histories equal outside them
    let mut block = vec![usize::MAX; nodes.len()];
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..nodes.len() {
        let (si, qi) = (q.snapshot(nodes[i]).env.clone(), q.qv(nodes[i]));
        let found = reps.iter().position(|&r| {
            q.qv(nodes[r]) == qi && si.eqsim_v(&q.snapshot(nodes[r]).env, qi.complement(n), tol)
        });
        block[i] = match found {
            Some(b) => b,
            None => {
                reps.push(i);
                reps.len() - 1
            }
        };
    }
    let d = 1usize << n;
    let slack = tol.max(1e-7);
    loop {
        let nblocks = reps.len();
        let mass = |m: &(ConcreteAction, Vec<(usize, CMat<f64>)>), block: &[usize]| -> Vec<CMat<f64>> {
            let mut v = vec![CMat::zeros(d, d); nblocks];
            for (t, k) in &m.1 {
                v[block[*t]] += k;
            }
            v
        };
        let sim = |a: usize, b: usize, block: &[usize]| -> bool {
            moves[a].iter().all(|ma| {
                let va = mass(ma, block);
                moves[b].iter().any(|mb| mb.0 == ma.0 && mass(mb, block).iter().zip(&va).all(|(x, y)| close(x, y, slack)))
            })
        };
        let mut next = vec![usize::MAX; nodes.len()];
        let mut new_reps: Vec<usize> = Vec::new();
        for i in 0..nodes.len() {
            let found = new_reps.iter().position(|&r| block[r] == block[i] && sim(i, r, &block) && sim(r, i, &block));
            next[i] = match found {
                Some(b) => b,
                None => {
                    new_reps.push(i);
                    new_reps.len() - 1
                }
            };
        }
        let stable = new_reps.len() == reps.len();
        block = next;
        reps = new_reps;
        if stable {
            break;
        }
    }
    GroundGraph { nodes, moves, block }
}

/// Whether the instances of `t` and `u` under `psi` are ground bisimilar,
/// decided directly on the grounded qLTS.
pub fn ground_related(prog: &Program, t: &Term, u: &Term, psi: &Evaluation, tol: f64) -> bool {
    let sub: CSubst = psi.iter().map(|(k, v)| (k.clone(), Exp::Lit(v.clone()))).collect();
    let (tg, ug) = (subst(t, &sub, &QSubst::new()), subst(u, &sub, &QSubst::new()));
    let mut q = Qlts::new(prog, tol, 20_000);
    let a = q.add_root(tg).unwrap();
    let b = q.add_root(ug).unwrap();
    let g = ground_graph(&mut q, &[a, b], tol);
    let ia = g.nodes.iter().position(|&s| s == a).unwrap();
    let ib = g.nodes.iter().position(|&s| s == b).unwrap();
    g.block[ia] == g.block[ib]
}

/// All evaluations of `vars` over the program's domains.
pub fn evaluations(ctx: &BoolCtx, vars: &[Name]) -> Vec<Evaluation> {
    let mut out = Vec::new();
    ctx.for_each_assignment(vars, &Evaluation::new(), |p| {
        out.push(p.clone());
        Ok(true)
    })
    .unwrap();
    out
}

pub fn minterm(psi: &Evaluation) -> BExp {
    BExp::and(psi.iter().map(|(k, v)| BExp::eq(Exp::Var(k.clone()), Exp::Lit(v.clone()))))
}

pub fn free_vars(t: &Term, u: &Term) -> Vec<Name> {
    let mut v: BTreeSet<Name> = fv(t);
    v.extend(fv(u));
    v.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Random terms for the transition correspondence.

pub const GEN_PROGRAM: &str = "
registers q1, q2;
spares r, s;
domains x, y : {0..2};
channels c, d, @e, @f;
";

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
}

impl<R: Rng> Gen<'_, R> {
    fn exp(&mut self) -> String {
        ["0", "1", "x", "x + 1", "2 - x"][self.rng.random_range(0..5)].to_string()
    }

    fn term(&mut self, depth: usize, owned: &[&str]) -> String {
        if depth == 0 {
            return "nil".into();
        }
        let k = self.rng.random_range(0..16);
        let sub = |g: &mut Self, o: &[&str]| g.term(depth - 1, o);
        match k {
            0 => "nil".into(),
            1 => format!("tau.{}", sub(self, owned)),
            2 => format!("c!{}.{}", self.exp(), sub(self, owned)),
            3 => format!("c?y.d!y.{}", sub(self, owned)),
            4 | 5 if !owned.is_empty() => {
                let q = owned[self.rng.random_range(0..owned.len())];
                let g = ["X", "H", "Z", "Y", "Set0", "SetPlus"][self.rng.random_range(0..6)];
                format!("{g}[{q}].{}", sub(self, owned))
            }
            6 if owned.len() >= 2 => format!("CN[{}, {}].{}", owned[0], owned[1], sub(self, owned)),
            7 | 13 | 14 if !owned.is_empty() => {
                let q = owned[self.rng.random_range(0..owned.len())];
                let m = ["M01", "Mpm"][self.rng.random_range(0..2)];
                format!("{m}[{q}; y].d!y.{}", sub(self, owned))
            }
            8 if !owned.is_empty() => {
                let i = self.rng.random_range(0..owned.len());
                let rest: Vec<&str> = owned.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| *q).collect();
                format!("@e!{}.{}", owned[i], sub(self, &rest))
            }
            9 => format!("if x = {} then {}", self.rng.random_range(0..3), sub(self, owned)),
            10 => format!("({} + {})", sub(self, owned), sub(self, owned)),
            11 => {
                let split = self.rng.random_range(0..=owned.len());
                let (l, r) = owned.split_at(split);
                format!("({} || {})", sub(self, l), sub(self, r))
            }
            12 => {
                let split = self.rng.random_range(0..=owned.len());
                let (l, r) = owned.split_at(split);
                format!("((c!{}.{} || c?y.d!y.{}) \\ {{c}})", self.exp(), sub(self, l), sub(self, r))
            }
            _ => format!("@f?q2.{}", sub(self, &["q2"])),
        }
    }
}

/// A well-formed random term over [`GEN_PROGRAM`].
/// A random well-formed term, without checking that its qLTS is finite.
pub fn random_syntax<R: Rng>(rng: &mut R, prog: &mut Program, depth: usize) -> Term {
    loop {
        let owned: Vec<&str> = ["q1", "q2"].into_iter().filter(|_| rng.random_bool(0.7)).collect();
        let src = Gen { rng: &mut *rng }.term(depth, &owned);
        if let Ok(t) = parse_term(&src, prog) {
            if well_formed_term(&t, prog).is_empty() {
                return t;
            }
        }
    }
}

pub fn random_term<R: Rng>(rng: &mut R, prog: &mut Program, depth: usize) -> Term {
    loop {
        let owned: Vec<&str> = ["q1", "q2"].into_iter().filter(|_| rng.random_bool(0.7)).collect();
        let src = Gen { rng: &mut *rng }.term(depth, &owned);
        let Ok(t) = parse_term(&src, prog) else { continue };
        if !well_formed_term(&t, prog).is_empty() {
            continue;
        }
        // terms needing more spare registers than the universe has are skipped
        let mut q = Qlts::new(prog, 1e-9, 10_000);
        if q.add_root(t.clone()).and_then(|r| q.explore(&[r])).is_ok() {
            return t;
        }
    }
}

/// Outcome of comparing the instantiated symbolic transitions of `⟦t, I⟧`
/// with the concrete moves of `⟨tψ, ρ⟩`.
#[derive(Debug, Default)]
pub struct Correspondence {
    pub concrete_moves: usize,
    pub symbolic_moves: usize,
    /// Concrete moves with more than one outcome.
    pub branching: usize,
    pub quantum_inputs: usize,
    pub max_prob_err: f64,
    pub max_state_err: f64,
    pub unmatched: Vec<String>,
}

struct Inst {
    action: ConcreteAction,
    points: Vec<(Term, f64, CMat<f64>)>,
}

pub fn correspondence(prog: &Program, t: &Term, psi: &Evaluation, rho: &CMat<f64>, tol: f64) -> Correspondence {
    let sub: CSubst = psi.iter().map(|(k, v)| (k.clone(), Exp::Lit(v.clone()))).collect();
    let mut q = Qlts::new(prog, tol, 10_000);
    let root = q.add_root(t.clone()).unwrap();
    q.explore(&[root]).unwrap();
    let universe = prog.universe();
    let mut sym: Vec<Inst> = Vec::new();
    for tr in q.transitions(root).to_vec() {
        if !eval(psi, &tr.guard).unwrap() {
            continue;
        }
        let point = |q: &Qlts<'_>, s: SnapId, w: &SuperOp, cs: &CSubst, qs: &QSubst| {
            let snap = q.snapshot(s);
            let term = subst(&subst(&snap.term, cs, qs), &sub, &QSubst::new());
            let p = trace(&w.apply_matrix(rho)).re;
            (term, p, snap.env.apply_matrix(rho))
        };
        match &tr.action {
            Action::CIn(c, x) => {
                for v in prog.domain(x).unwrap() {
                    let cs = CSubst::from([(x.clone(), Exp::Lit(v.clone()))]);
                    let points = tr.target.iter().map(|(s, w)| point(&q, *s, w, &cs, &QSubst::new())).collect();
                    sym.push(Inst { action: ConcreteAction::CIn(c.clone(), v.clone()), points });
                }
            }
            Action::QIn(c, s0) => {
                // any register the renaming does not capture in the continuation
                let mut taken = BTreeSet::new();
                for (s, _) in &tr.target {
                    taken.extend(qv(&q.snapshot(*s).term, prog));
                }
                taken.remove(s0);
                for r in &universe {
                    if taken.contains(r) {
                        continue;
                    }
                    let qs = QSubst::from([(s0.clone(), r.clone())]);
                    let points = tr.target.iter().map(|(s, w)| point(&q, *s, w, &CSubst::new(), &qs)).collect();
                    sym.push(Inst { action: ConcreteAction::QIn(c.clone(), r.clone()), points });
                }
            }
            a => {
                let action = match a {
                    Action::Tau => ConcreteAction::Tau,
                    Action::COut(c, e) => ConcreteAction::COut(c.clone(), eval_exp(psi, e).unwrap()),
                    Action::QOut(c, r) => ConcreteAction::QOut(c.clone(), r.clone()),
                    other => panic!("unexpected label {other:?}"),
                };
                let points = tr.target.iter().map(|(s, w)| point(&q, *s, w, &CSubst::new(), &QSubst::new())).collect();
                sym.push(Inst { action, points });
            }
        }
    }
    let interp = Interpreter::new(prog, tol);
    let conc = interp.step(&Configuration { term: subst(t, &sub, &QSubst::new()), state: rho.clone() }).unwrap();
    let mut report = Correspondence { concrete_moves: conc.len(), symbolic_moves: sym.len(), ..Default::default() };
    let mut used = vec![false; sym.len()];
    for (alpha, dist) in &conc {
        report.branching += usize::from(dist.len() > 1);
        report.quantum_inputs += usize::from(matches!(alpha, ConcreteAction::QIn(..)));
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, inst) in sym.iter().enumerate() {
            if used[j] || inst.action != *alpha {
                continue;
            }
            if let Some((pe, se)) = match_points(dist, &inst.points) {
                if best.map_or(true, |(_, p, s)| pe + se < p + s) {
                    best = Some((j, pe, se));
                }
            }
        }
        match best {
            Some((j, pe, se)) => {
                used[j] = true;
                report.max_prob_err = report.max_prob_err.max(pe);
                report.max_state_err = report.max_state_err.max(se);
            }
            None => report.unmatched.push(format!("concrete {alpha}")),
        }
    }
    for (j, inst) in sym.iter().enumerate() {
        if !used[j] {
            report.unmatched.push(format!("symbolic {}", inst.action));
        }
    }
    report
}

/// Matches concrete points to symbolic ones with equal continuation;
/// symbolic points of negligible probability may be missing concretely.
fn match_points(conc: &[(f64, Configuration)], sym: &[(Term, f64, CMat<f64>)]) -> Option<(f64, f64)> {
    let mut used = vec![false; sym.len()];
    let (mut pe, mut se) = (0.0f64, 0.0f64);
    for (p, c) in conc {
        let j = (0..sym.len()).find(|&j| !used[j] && alpha_eq(&sym[j].0, &c.term) && (sym[j].1 - p).abs() <= 1e-6)?;
        used[j] = true;
        pe = pe.max((sym[j].1 - p).abs());
        if *p > 1e-12 {
            se = se.max(trace_norm(&(&sym[j].2 - &c.state)));
        }
    }
    for (j, s) in sym.iter().enumerate() {
        if !used[j] {
            pe = pe.max(s.1.abs());
        }
    }
    Some((pe, se))
}

pub fn rho_for<R: Rng>(rng: &mut R, i: usize, n: usize) -> CMat<f64> {
    random_rho(rng, RhoKind::ALL[i % RhoKind::ALL.len()], n)
}

pub fn rational_f64(r: &num_rational::BigRational) -> f64 {
    r.to_f64().unwrap()
}

pub fn product(a: &CMat<f64>, b: &CMat<f64>) -> CMat<f64> {
    kron(a, b)
}

pub fn regset(ix: &[usize]) -> RegSet {
    RegSet::from_indices(ix.iter().copied())
}
