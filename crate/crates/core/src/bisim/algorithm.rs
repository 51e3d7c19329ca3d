use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use super::table::Table;
use super::unionfind::equivalence_closure;
use crate::boolean::{eval, BoolCtx, Evaluation};
use crate::error::Result;
use crate::semantics::{Qlts, SnapId, SymTransition};
use crate::syntax::*;
use crate::SuperOp;

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct Stats {
    pub pairs_visited: usize,
    pub max_depth: usize,
    pub snapshots: usize,
    /// Left out of serialized reports so that they stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}


#[derive(Clone, Debug)]
pub struct MgbResult {
    pub theta: BExp,
    pub table: Table,
    pub root: (SnapId, SnapId),
    pub quantum_input_free: bool,
    pub stats: Stats,
}

/// Classes of actions that `Match` treats together.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Shape {
    Out(Name),
    Tau,
    In(Name),
    Exact(Action),
}

fn shape(a: &Action) -> Shape {
    match a {
        Action::COut(c, _) => Shape::Out(c.clone()),
        Action::Tau => Shape::Tau,
        Action::CIn(c, _) => Shape::In(c.clone()),
        other => Shape::Exact(other.clone()),
    }
}

type Dist = Vec<(SnapId, SuperOp)>;

/// State of one run of the algorithm over a shared qLTS. Snapshots created
/// by renaming input binders are added and explored on demand.
pub struct Checker<'a, 'p> {
    q: &'a mut Qlts<'p>,
    ctx: &'a BoolCtx,
    path: HashSet<(SnapId, SnapId)>,
    stats: Stats,
}

impl<'a, 'p> Checker<'a, 'p> {
    pub fn new(q: &'a mut Qlts<'p>, ctx: &'a BoolCtx) -> Self {
        Checker { q, ctx, path: HashSet::new(), stats: Stats::default() }
    }

    pub fn bisim(mut self, t: SnapId, u: SnapId) -> Result<MgbResult> {
        let start = Instant::now();
        self.q.explore(&[t, u])?;
        let quantum_input_free = self.q.quantum_input_free(&[t, u]);
        let (theta, table) = self.match_snapshots(t, u, &TRUE)?;
        let mut stats = self.stats;
        stats.snapshots = self.q.len();
        stats.wall_time = start.elapsed();
        Ok(MgbResult { theta, table, root: (t, u), quantum_input_free, stats })
    }

    fn side_condition(&self, t: SnapId, u: SnapId) -> bool {
        let (qt, qu) = (self.q.qv(t), self.q.qv(u));
        if qt != qu {
            return false;
        }
        let n = self.q.registers();
        let (e, f) = (&self.q.snapshot(t).env, &self.q.snapshot(u).env);
        e.eqsim_v(f, qt.complement(n), self.q.tol())
    }

    fn trans(&mut self, s: SnapId) -> Result<Vec<SymTransition>> {
        if !self.q.is_explored(s) {
            self.q.explore(&[s])?;
        }
        Ok(self.q.transitions(s).to_vec())
    }

    pub fn match_snapshots(&mut self, t: SnapId, u: SnapId, b: &BExp) -> Result<(BExp, Table)> {
        self.stats.pairs_visited += 1;
        let side = BExp::Const(self.side_condition(t, u));
        if self.path.contains(&(t, u)) {
            return Ok((side, Table::new()));
        }
        self.path.insert((t, u));
        self.stats.max_depth = self.stats.max_depth.max(self.path.len());
        let tt = self.trans(t)?;
        let tu = self.trans(u)?;
        let shapes: BTreeSet<Shape> = tt.iter().chain(&tu).map(|tr| shape(&tr.action)).collect();
        let mut parts = Vec::new();
        let mut table = Table::new();
        for g in shapes {
            let (th, tb) = self.match_action(&g, t, u, &tt, &tu, b)?;
            parts.push(th);
            table.join(tb, self.ctx)?;
        }
        self.path.remove(&(t, u));
        let theta = self.ctx.simplify(&BExp::and(parts))?;
        let entry = self.ctx.simplify(&BExp::and([b.clone(), theta.clone(), side.clone()]))?;
        table.insert((t, u), entry, self.ctx)?;
        Ok((self.ctx.simplify(&BExp::and2(theta, side))?, table))
    }

    #[allow(clippy::too_many_arguments)]
    fn match_action(
        &mut self,
        g: &Shape,
        t: SnapId,
        u: SnapId,
        tt: &[SymTransition],
        tu: &[SymTransition],
        b: &BExp,
    ) -> Result<(BExp, Table)> {
        let left: Vec<&SymTransition> = tt.iter().filter(|tr| shape(&tr.action) == *g).collect();
        let right: Vec<&SymTransition> = tu.iter().filter(|tr| shape(&tr.action) == *g).collect();
        let mut table = Table::new();
        let mut bound = Vec::new();
        // theta[i][j] and the side constraint under which move i meets move j
        let mut theta = vec![vec![FALSE; right.len()]; left.len()];
        let mut meet = vec![vec![TRUE; right.len()]; left.len()];
        match g {
            Shape::Out(_) => {
                for (i, l) in left.iter().enumerate() {
                    for (j, r) in right.iter().enumerate() {
                        let (Action::COut(_, e), Action::COut(_, e2)) = (&l.action, &r.action) else { unreachable!() };
                        let eq = BExp::eq(e.clone(), e2.clone());
                        let bij = BExp::and([b.clone(), l.guard.clone(), r.guard.clone(), eq.clone()]);
                        let (th, tb) = self.match_snapshots(point(l), point(r), &bij)?;
                        theta[i][j] = th;
                        meet[i][j] = eq;
                        table.join(tb, self.ctx)?;
                    }
                }
            }
            Shape::Tau => {
                let e = self.q.snapshot(t).env.clone();
                let f = self.q.snapshot(u).env.clone();
                let tol = self.q.tol();
                for (i, l) in left.iter().enumerate() {
                    for (j, r) in right.iter().enumerate() {
                        let bij = BExp::and([b.clone(), l.guard.clone(), r.guard.clone()]);
                        let (th, tb) = self.match_distribution(&after(&l.target, &e, tol), &after(&r.target, &f, tol), &bij)?;
                        theta[i][j] = th;
                        table.join(tb, self.ctx)?;
                    }
                }
            }
            Shape::In(_) => {
                let z = self.common_binder(t, u, &left, &right, b);
                bound.push(z.clone());
                let lt: Vec<SnapId> = left.iter().map(|tr| self.rename_input(tr, &z)).collect::<Result<_>>()?;
                let rt: Vec<SnapId> = right.iter().map(|tr| self.rename_input(tr, &z)).collect::<Result<_>>()?;
                for (i, l) in left.iter().enumerate() {
                    for (j, r) in right.iter().enumerate() {
                        let bij = BExp::and([b.clone(), l.guard.clone(), r.guard.clone()]);
                        let (th, tb) = self.match_snapshots(lt[i], rt[j], &bij)?;
                        theta[i][j] = th;
                        table.join(tb, self.ctx)?;
                    }
                }
            }
            Shape::Exact(_) => {
                for (i, l) in left.iter().enumerate() {
                    for (j, r) in right.iter().enumerate() {
                        let bij = BExp::and([b.clone(), l.guard.clone(), r.guard.clone()]);
                        let (th, tb) = self.match_snapshots(point(l), point(r), &bij)?;
                        theta[i][j] = th;
                        table.join(tb, self.ctx)?;
                    }
                }
            }
        }
        let mut conj = Vec::new();
        for (i, l) in left.iter().enumerate() {
            let alts = right
                .iter()
                .enumerate()
                .map(|(j, r)| BExp::and([r.guard.clone(), meet[i][j].clone(), theta[i][j].clone()]));
            conj.push(BExp::imp(l.guard.clone(), BExp::or(alts)));
        }
        for (j, r) in right.iter().enumerate() {
            let alts = left
                .iter()
                .enumerate()
                .map(|(i, l)| BExp::and([l.guard.clone(), meet[i][j].clone(), theta[i][j].clone()]));
            conj.push(BExp::imp(r.guard.clone(), BExp::or(alts)));
        }
        // an input binder is fresh, so the condition must hold for every value received
        let joined = self.ctx.simplify(&BExp::and(conj))?;
        Ok((self.ctx.forall(&bound, &joined)?, table))
    }

    /// A binder name shared by both sides, fresh for `b`, `t` and `u`.
    fn common_binder(&self, t: SnapId, u: SnapId, left: &[&SymTransition], right: &[&SymTransition], b: &BExp) -> Name {
        let mut avoid = BTreeSet::new();
        bexp_fv(b, &mut avoid);
        avoid.extend(fv(&self.q.snapshot(t).term));
        avoid.extend(fv(&self.q.snapshot(u).term));
        let binders: BTreeSet<Name> = left
            .iter()
            .chain(right)
            .filter_map(|tr| match &tr.action {
                Action::CIn(_, x) => Some(x.clone()),
                _ => None,
            })
            .collect();
        match binders.iter().find(|x| !avoid.contains(*x)) {
            Some(x) => x.clone(),
            None => fresh(binders.first().map(|x| &**x).unwrap_or("x"), &avoid),
        }
    }

    fn rename_input(&mut self, tr: &SymTransition, z: &Name) -> Result<SnapId> {
        let target = point(tr);
        let Action::CIn(_, x) = &tr.action else { unreachable!() };
        if x == z {
            return Ok(target);
        }
        let snap = self.q.snapshot(target);
        let cs = CSubst::from([(x.clone(), Exp::Var(z.clone()))]);
        let term = subst(&snap.term, &cs, &QSubst::new());
        let env = snap.env.clone();
        self.q.intern(term, env)
    }

    pub fn match_distribution(&mut self, delta: &Dist, theta: &Dist, b: &BExp) -> Result<(BExp, Table)> {
        let mut table = Table::new();
        let mut assumed = Vec::new();
        for (s, _) in delta {
            for (s2, _) in theta {
                let on_path = self.path.contains(&(*s, *s2));
                let (th, tb) = self.match_snapshots(*s, *s2, b)?;
                if on_path && th.as_const() == Some(true) {
                    assumed.push((*s, *s2));
                }
                table.join(tb, self.ctx)?;
            }
        }
        let support: Vec<SnapId> = delta.iter().chain(theta).map(|(s, _)| *s).collect();
        let (n, tol) = (self.q.registers(), self.q.tol());
        let mut vars = bexp_vars(b);
        for (_, entry) in table.iter() {
            vars.extend(bexp_vars(entry));
        }
        let vars: Vec<Name> = vars.into_iter().collect();
        // one Check per evaluation of the variables involved, so that the
        // result keeps the dependence of the relation on those variables
        let mut cases = Vec::new();
        self.ctx.for_each_assignment(&vars, &Evaluation::new(), |psi| {
            if !eval(psi, b)? {
                return Ok(true);
            }
            let mut related = assumed.clone();
            for (&pair, entry) in table.iter() {
                if eval(psi, entry)? {
                    related.push(pair);
                }
            }
            if check(delta, theta, &support, related, n, tol) {
                cases.push(minterm(psi));
            }
            Ok(true)
        })?;
        Ok((self.ctx.simplify(&BExp::or(cases))?, table))
    }
}

fn minterm(psi: &Evaluation) -> BExp {
    BExp::and(psi.iter().map(|(x, v)| BExp::eq(Exp::Var(x.clone()), Exp::Lit(v.clone()))))
}

fn point(tr: &SymTransition) -> SnapId {
    debug_assert_eq!(tr.target.len(), 1);
    tr.target[0].0
}

/// `E • Δ`: every weight composed after the history `e`.
fn after(d: &Dist, e: &SuperOp, tol: f64) -> Dist {
    d.iter().map(|(s, w)| (*s, w.compose(e))).filter(|(_, w)| !w.is_zero(tol)).collect()
}

/// Per-class comparison of the two distributions under the relation `pairs`.
pub fn check<P>(delta: &Dist, theta: &Dist, support: &[SnapId], pairs: P, n: usize, tol: f64) -> bool
where
    P: IntoIterator<Item = (SnapId, SnapId)>,
{
    let classes = equivalence_closure(support.iter().copied(), pairs);
    let mass = |d: &Dist, class: &[SnapId]| {
        SuperOp::sum(n, d.iter().filter(|(s, _)| class.contains(s)).map(|(_, w)| w))
    };
    classes.iter().filter(|c| c.iter().any(|s| support.contains(s))).all(|c| {
        let (a, b) = (mass(delta, c), mass(theta, c));
        a.eqsim_v(&b, crate::quantum::RegSet::EMPTY, tol)
    })
}

/// Most general boolean for `⟦t, I⟧` and `⟦u, I⟧`.
pub fn bisim(q: &mut Qlts<'_>, ctx: &BoolCtx, t: SnapId, u: SnapId) -> Result<MgbResult> {
    Checker::new(q, ctx).bisim(t, u)
}

/// Builds a fresh qLTS containing both terms and runs the algorithm.
pub fn bisim_terms(prog: &Program, t: &Term, u: &Term, tol: f64, cap: usize) -> Result<MgbResult> {
    let mut q = Qlts::new(prog, tol, cap);
    let rt = q.add_root(t.clone())?;
    let ru = q.add_root(u.clone())?;
    let ctx = BoolCtx::from_program(prog);
    bisim(&mut q, &ctx, rt, ru)
}
