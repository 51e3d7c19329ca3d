use std::collections::hash_map::DefaultHasher;
use std::fmt::Write;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use super::qlts::{Qlts, SnapId};
use crate::boolean::BoolCtx;
use crate::error::Result;
use crate::SuperOp;

/// Short stable digest of a map's Choi matrix, rounded to 1e-6.
pub fn fingerprint(op: &SuperOp) -> String {
    let mut h = DefaultHasher::new();
    for z in op.choi().iter() {
        ((z.re * 1e6).round() as i64).hash(&mut h);
        ((z.im * 1e6).round() as i64).hash(&mut h);
    }
    format!("{:012x}", h.finish() & 0xffff_ffff_ffff)
}

#[derive(Serialize)]
pub struct StateJson {
    pub id: SnapId,
    pub term: String,
    pub env: String,
    pub qv: Vec<String>,
}

#[derive(Serialize)]
pub struct PointJson {
    pub to: SnapId,
    pub weight: String,
}

#[derive(Serialize)]
pub struct TransitionJson {
    pub from: SnapId,
    pub guard: String,
    pub action: String,
    pub target: Vec<PointJson>,
}

#[derive(Serialize)]
pub struct QltsJson {
    pub registers: Vec<String>,
    pub roots: Vec<SnapId>,
    pub states: Vec<StateJson>,
    pub transitions: Vec<TransitionJson>,
}

/// Reachable part of the qLTS in export form. With `prune`, transitions
/// whose guard is unsatisfiable are left out.
pub fn export_json(q: &Qlts<'_>, roots: &[SnapId], prune: Option<&BoolCtx>) -> Result<QltsJson> {
    let prog = q.program();
    let universe = prog.universe();
    let mut states = Vec::new();
    let mut transitions = Vec::new();
    for s in q.reachable(roots) {
        let snap = q.snapshot(s);
        states.push(StateJson {
            id: s,
            term: snap.term.to_string(),
            env: fingerprint(&snap.env),
            qv: q.qv(s).iter().map(|i| universe[i].to_string()).collect(),
        });
        for tr in q.transitions(s) {
            if let Some(ctx) = prune {
                if !ctx.satisfiable(&tr.guard)? {
                    continue;
                }
            }
            transitions.push(TransitionJson {
                from: s,
                guard: tr.guard.to_string(),
                action: tr.action.to_string(),
                target: tr.target.iter().map(|(t, w)| PointJson { to: *t, weight: fingerprint(w) }).collect(),
            });
        }
    }
    Ok(QltsJson { registers: universe.iter().map(|r| r.to_string()).collect(), roots: roots.to_vec(), states, transitions })
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: snapshots as boxes, multi-point targets through a
/// small junction node whose out-edges carry the weight digests.
pub fn export_dot(j: &QltsJson) -> String {
    let mut s = String::from("digraph qlts {\n  node [shape=box, fontname=\"monospace\"];\n");
    for st in &j.states {
        let _ = writeln!(s, "  s{} [label=\"{}\\nenv {}\"];", st.id, escape(&st.term), st.env);
    }
    for (k, tr) in j.transitions.iter().enumerate() {
        let label = if tr.guard == "true" { tr.action.clone() } else { format!("{}, {}", tr.guard, tr.action) };
        if tr.target.len() == 1 {
            let _ = writeln!(s, "  s{} -> s{} [label=\"{}\"];", tr.from, tr.target[0].to, escape(&label));
        } else {
            let _ = writeln!(s, "  j{k} [shape=point];");
            let _ = writeln!(s, "  s{} -> j{k} [label=\"{}\"];", tr.from, escape(&label));
            for p in &tr.target {
                let _ = writeln!(s, "  j{k} -> s{} [label=\"{}\", style=dashed];", p.to, p.weight);
            }
        }
    }
    s.push_str("}\n");
    s
}
