use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::concrete::Configuration;
use super::plts::ground_bisim_concrete;
use super::sample::{random_rho, RhoKind};
use crate::bisim::bisim_terms;
use crate::boolean::{eval, BoolCtx, Evaluation};
use crate::error::Result;
use crate::quantum::{dump, MatrixDump};
use crate::semantics::{Qlts, DEFAULT_STATE_CAP};
use crate::syntax::*;

#[derive(Clone, Debug, Serialize)]
pub struct RhoSpec {
    pub kind: RhoKind,
    pub matrix: MatrixDump,
}

#[derive(Clone, Debug, Serialize)]
pub struct Disagreement {
    pub psi: BTreeMap<String, String>,
    #[serde(rename = "rho-spec")]
    pub rho_spec: RhoSpec,
    pub expected: bool,
    pub got: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrosscheckReport {
    pub samples: usize,
    pub agreements: usize,
    pub disagreements: Vec<Disagreement>,
    pub seed: u64,
    pub theta: String,
    pub condition: String,
    /// `b` has no satisfying evaluation, so nothing was sampled.
    pub unsatisfiable: bool,
    pub quantum_input_free: bool,
    /// Samples on which the concrete configurations were bisimilar.
    pub concrete_bisimilar: usize,
}

impl CrosscheckReport {
    pub fn all_agree(&self) -> bool {
        self.disagreements.is_empty() && self.agreements == self.samples
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CrosscheckOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub cap: usize,
}

impl Default for CrosscheckOptions {
    fn default() -> Self {
        CrosscheckOptions { samples: 10, seed: 0, tol: crate::default_tol(), cap: DEFAULT_STATE_CAP }
    }
}

fn show(psi: &Evaluation) -> BTreeMap<String, String> {
    psi.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Compares the symbolic verdict for `t`, `u` with concrete ground
/// bisimilarity on sampled evaluations satisfying `b` and sampled states.
pub fn crosscheck(prog: &Program, t: &Term, u: &Term, b: &BExp, opts: CrosscheckOptions) -> Result<CrosscheckReport> {
    let ctx = BoolCtx::from_program(prog);
    let mgb = bisim_terms(prog, t, u, opts.tol, opts.cap)?;
    let theta = mgb.theta.clone();
    let mut vars = fv(t);
    vars.extend(fv(u));
    vars.extend(bexp_vars(b));
    let vars: Vec<Name> = vars.into_iter().collect();
    let mut models = Vec::new();
    ctx.for_each_assignment(&vars, &Evaluation::new(), |psi| {
        if eval(psi, b)? {
            models.push(psi.clone());
        }
        Ok(true)
    })?;
    let mut report = CrosscheckReport {
        samples: 0,
        agreements: 0,
        disagreements: Vec::new(),
        seed: opts.seed,
        theta: theta.to_string(),
        condition: b.to_string(),
        unsatisfiable: models.is_empty(),
        quantum_input_free: mgb.quantum_input_free,
        concrete_bisimilar: 0,
    };
    if models.is_empty() {
        return Ok(report);
    }
    let n = prog.universe_size();
    let results: Vec<Result<(Evaluation, RhoKind, crate::quantum::CMat<f64>, bool, bool)>> = (0..opts.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            let psi = models[rng.random_range(0..models.len())].clone();
            let kind = RhoKind::ALL[i % RhoKind::ALL.len()];
            let rho = random_rho(&mut rng, kind, n);
            let expected = eval(&psi, &ctx.forall(&unbound(&theta, &psi), &theta)?)?;
            let cs: CSubst = psi.iter().map(|(k, v)| (k.clone(), Exp::Lit(v.clone()))).collect();
            let c1 = Configuration { term: subst(t, &cs, &QSubst::new()), state: rho.clone() };
            let c2 = Configuration { term: subst(u, &cs, &QSubst::new()), state: rho.clone() };
            let got = ground_bisim_concrete(prog, c1, c2, opts.tol, opts.cap)?;
            Ok((psi, kind, rho, expected, got))
        })
        .collect();
    for r in results {
        let (psi, kind, rho, expected, got) = r?;
        report.samples += 1;
        report.concrete_bisimilar += got as usize;
        if expected == got {
            report.agreements += 1;
        } else {
            report.disagreements.push(Disagreement {
                psi: show(&psi),
                rho_spec: RhoSpec { kind, matrix: dump(&rho) },
                expected,
                got,
            });
        }
    }
    Ok(report)
}

fn unbound(theta: &BExp, psi: &Evaluation) -> Vec<Name> {
    bexp_vars(theta).into_iter().filter(|v| !psi.contains_key(v)).collect()
}

/// Whether `t` can never receive a quantum register, checked on its qLTS.
pub fn is_quantum_input_free(prog: &Program, t: &Term, tol: f64, cap: usize) -> Result<bool> {
    let mut q = Qlts::new(prog, tol, cap);
    let r = q.add_root(t.clone())?;
    q.explore(&[r])?;
    Ok(q.quantum_input_free(&[r]))
}
