use std::collections::HashMap;

use super::concrete::{unowned_state, Configuration, Interpreter};
use crate::boolean::ConcreteAction;
use crate::error::{Error, Result};
use crate::quantum::{max_abs_diff, trace_norm, CMat, RegSet};
use crate::syntax::*;

pub type ConfId = usize;

/// A concrete transition: label and probability distribution.
#[derive(Clone, Debug)]
pub struct ConcreteTransition {
    pub action: ConcreteAction,
    pub target: Vec<(ConfId, f64)>,
}

/// Reachable configurations of one or more roots.
pub struct Plts<'p> {
    interp: Interpreter<'p>,
    tol: f64,
    cap: usize,
    confs: Vec<Configuration>,
    owned: Vec<RegSet>,
    keys: HashMap<Term, Vec<ConfId>>,
    trans: Vec<Vec<ConcreteTransition>>,
}

impl<'p> Plts<'p> {
    pub fn new(prog: &'p Program, tol: f64, cap: usize) -> Self {
        Plts {
            interp: Interpreter::new(prog, tol),
            tol,
            cap: cap.max(1),
            confs: Vec::new(),
            owned: Vec::new(),
            keys: HashMap::new(),
            trans: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.confs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.confs.is_empty()
    }

    pub fn configuration(&self, id: ConfId) -> &Configuration {
        &self.confs[id]
    }

    pub fn transitions(&self, id: ConfId) -> &[ConcreteTransition] {
        &self.trans[id]
    }

    fn intern(&mut self, c: Configuration) -> Result<(ConfId, bool)> {
        let key = alpha_normal(&c.term);
        if let Some(ids) = self.keys.get(&key) {
            for &id in ids {
                if max_abs_diff(&self.confs[id].state, &c.state) <= self.tol {
                    return Ok((id, false));
                }
            }
        }
        if self.confs.len() >= self.cap {
            return Err(Error::StateCapExceeded { cap: self.cap });
        }
        let prog = self.interp.program();
        let owned = qv(&c.term, prog).iter().filter_map(|q| prog.register_index(q)).collect::<Vec<_>>();
        let id = self.confs.len();
        self.owned.push(RegSet::from_indices(owned));
        self.confs.push(c);
        self.trans.push(Vec::new());
        self.keys.entry(key).or_default().push(id);
        Ok((id, true))
    }

    /// Adds a root and everything reachable from it.
    pub fn add(&mut self, c: Configuration) -> Result<ConfId> {
        let (root, new) = self.intern(c)?;
        if !new {
            return Ok(root);
        }
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let moves = self.interp.step(&self.confs[id])?;
            let mut out = Vec::with_capacity(moves.len());
            for (action, dist) in moves {
                let mut target: Vec<(ConfId, f64)> = Vec::new();
                for (p, conf) in dist {
                    let (cid, fresh) = self.intern(conf)?;
                    if fresh {
                        stack.push(cid);
                    }
                    match target.iter_mut().find(|(c, _)| *c == cid) {
                        Some(slot) => slot.1 += p,
                        None => target.push((cid, p)),
                    }
                }
                out.push(ConcreteTransition { action, target });
            }
            self.trans[id] = out;
        }
        Ok(root)
    }

    /// Ground bisimilarity classes of all configurations: blocks start from
    /// owned registers and the state of the rest, and are split until every
    /// member of a block matches every move of the others with the same
    /// probability on each block.
    pub fn partition(&self) -> Result<Vec<usize>> {
        let prog = self.interp.program();
        let mut block = vec![0usize; self.len()];
        let mut reps: Vec<(RegSet, CMat<f64>)> = Vec::new();
        for id in 0..self.len() {
            let rest = unowned_state(prog, &self.confs[id])?;
            let found = reps.iter().position(|(o, r)| *o == self.owned[id] && trace_norm(&(r - &rest)) <= self.tol);
            block[id] = match found {
                Some(b) => b,
                None => {
                    reps.push((self.owned[id], rest));
                    reps.len() - 1
                }
            };
        }
        let mut count = reps.len();
        loop {
            let sigs: Vec<Vec<(ConcreteAction, Vec<(usize, f64)>)>> = (0..self.len()).map(|id| self.signature(id, &block)).collect();
            let mut next = vec![usize::MAX; self.len()];
            let mut heads: Vec<ConfId> = Vec::new();
            for id in 0..self.len() {
                let same = heads.iter().position(|&h| block[h] == block[id] && self.sig_eq(&sigs[h], &sigs[id]));
                next[id] = match same {
                    Some(b) => b,
                    None => {
                        heads.push(id);
                        heads.len() - 1
                    }
                };
            }
            block = next;
            if heads.len() == count {
                return Ok(block);
            }
            count = heads.len();
        }
    }

    fn signature(&self, id: ConfId, block: &[usize]) -> Vec<(ConcreteAction, Vec<(usize, f64)>)> {
        self.trans[id]
            .iter()
            .map(|tr| {
                let mut mass: Vec<(usize, f64)> = Vec::new();
                for &(c, p) in &tr.target {
                    match mass.iter_mut().find(|(b, _)| *b == block[c]) {
                        Some(slot) => slot.1 += p,
                        None => mass.push((block[c], p)),
                    }
                }
                mass.sort_by(|a, b| a.0.cmp(&b.0));
                (tr.action.clone(), mass)
            })
            .collect()
    }

    fn sig_eq(&self, a: &[(ConcreteAction, Vec<(usize, f64)>)], b: &[(ConcreteAction, Vec<(usize, f64)>)]) -> bool {
        let tol = self.tol.max(1e-7);
        let dist_eq = |x: &[(usize, f64)], y: &[(usize, f64)]| {
            let get = |d: &[(usize, f64)], k: usize| d.iter().find(|(b, _)| *b == k).map_or(0.0, |e| e.1);
            x.iter().chain(y).all(|&(k, _)| (get(x, k) - get(y, k)).abs() <= tol)
        };
        let covered = |x: &[(ConcreteAction, Vec<(usize, f64)>)], y: &[(ConcreteAction, Vec<(usize, f64)>)]| {
            x.iter().all(|(act, d)| y.iter().any(|(act2, d2)| act == act2 && dist_eq(d, d2)))
        };
        covered(a, b) && covered(b, a)
    }
}

/// Whether two configurations are ground bisimilar.
pub fn ground_bisim_concrete(prog: &Program, c1: Configuration, c2: Configuration, tol: f64, cap: usize) -> Result<bool> {
    let mut p = Plts::new(prog, tol, cap);
    let a = p.add(c1)?;
    let b = p.add(c2)?;
    let blocks = p.partition()?;
    Ok(blocks[a] == blocks[b])
}
