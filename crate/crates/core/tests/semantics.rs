mod support;

use proptest::prelude::*;
use qsymb::boolean::BoolCtx;
use qsymb::quantum::{basis, outer, trace, CMat, RegSet};
use qsymb::semantics::*;
use qsymb::syntax::*;
use qsymb::SuperOp;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

const TOL: f64 = 1e-9;
const CAP: usize = 10_000;

fn one_qubit() -> Program {
    parse_program("registers q;\ndomains x : {0..2};\nchannels c, @e;\n").unwrap()
}

fn plus() -> CMat<f64> {
    let v = (basis::<f64>(2, 0) + basis::<f64>(2, 1)) / nalgebra::Complex::new(2f64.sqrt(), 0.0);
    outer(&v, &v)
}

fn zero() -> CMat<f64> {
    let v = basis::<f64>(2, 0);
    outer(&v, &v)
}

fn close(a: &CMat<f64>, b: &CMat<f64>) -> bool {
    qsymb::quantum::max_abs_diff(a, b) < 1e-12
}

fn op(p: &Program, g: &str, regs: &[usize]) -> SuperOp {
    match p.op(g).cloned().or_else(|| qsymb::quantum::builtin::<f64>(g)).unwrap() {
        qsymb::quantum::Builtin::Op(o) => o.lift(p.universe_size(), regs),
        _ => panic!("{g} is a measurement"),
    }
}

#[test]
fn operator_prefix_is_a_silent_update() {
    let mut p = one_qubit();
    let t = parse_term("X[q].nil", &mut p).unwrap();
    let trs = Stepper::new(&p).step(&t).unwrap();
    assert_eq!(trs.len(), 1);
    assert_eq!(trs[0].action, Action::Tau);
    assert_eq!(trs[0].guard, TRUE);
    let br = &trs[0].branches[0];
    assert!(br.weight.is_none());
    assert!(br.post.as_ref().unwrap().choi_eq(&op(&p, "X", &[0]), TOL));
    assert_eq!(br.term, Term::Nil);
}

#[test]
fn measurement_splits_into_projections_and_resets() {
    let mut p = one_qubit();
    let t = parse_term("M01[q; x].c!x.nil", &mut p).unwrap();
    let trs = Stepper::new(&p).step(&t).unwrap();
    assert_eq!(trs.len(), 1);
    let brs = &trs[0].branches;
    assert_eq!(brs.len(), 2);
    for (i, br) in brs.iter().enumerate() {
        assert_eq!(br.term, parse_term(&format!("c!{i}.nil"), &mut p).unwrap());
        let a = br.weight.as_ref().unwrap();
        let s = br.post.as_ref().unwrap();
        assert!(a.choi_eq(&op(&p, &format!("A{i}"), &[0]), TOL));
        assert!(s.choi_eq(&op(&p, &format!("Set{i}"), &[0]), TOL));
        // on |+⟩ each outcome has probability one half
        let out = a.apply_matrix(&plus());
        assert!((trace(&out).re - 0.5).abs() < 1e-12);
    }
    // the reset leaves |0⟩ whatever the input
    assert!(close(&brs[0].post.as_ref().unwrap().apply_matrix(&plus()), &zero()));
}

#[test]
fn guards_and_sums() {
    let mut p = one_qubit();
    let t = parse_term("if x = 1 then c!x.nil + tau.nil", &mut p).unwrap();
    let trs = Stepper::new(&p).step(&t).unwrap();
    assert_eq!(trs.len(), 2);
    assert!(trs.iter().any(|tr| tr.action == Action::Tau && tr.guard == TRUE));
    let out = trs.iter().find(|tr| matches!(tr.action, Action::COut(..))).unwrap();
    assert_eq!(out.guard, parse_bexp("x = 1", &mut p).unwrap());
}

#[test]
fn parallel_components_synchronise() {
    let mut p = parse_program("registers q;\nspares r;\nchannels c, @e;\n").unwrap();
    let t = parse_term("(@e!q.nil || @e?r.X[r].nil) \\ {@e}", &mut p).unwrap();
    let trs = Stepper::new(&p).step(&t).unwrap();
    assert_eq!(trs.len(), 1);
    assert_eq!(trs[0].action, Action::Tau);
    assert_eq!(trs[0].branches[0].term, parse_term("(nil || X[q].nil) \\ {@e}", &mut p).unwrap());
}

#[test]
fn restriction_blocks_the_channel() {
    let mut p = one_qubit();
    let t = parse_term("(c!1.nil + tau.nil) \\ {c}", &mut p).unwrap();
    let trs = Stepper::new(&p).step(&t).unwrap();
    assert_eq!(trs.len(), 1);
    assert_eq!(trs[0].action, Action::Tau);
}

#[test]
fn qlts_sizes_of_the_fixtures() {
    let cases = [("setzero", "P", 3, 2), ("setzero", "Q", 5, 3), ("nil", "N", 1, 0), ("sdc", "Sdc", 29, 0)];
    for (f, n, states, trans) in cases {
        let mut p = fixture(f);
        let t = parse_term(n, &mut p).unwrap();
        let (q, root) = reachable_qlts(&p, &t, TOL, CAP).unwrap();
        assert_eq!(q.reachable(&[root]).len(), states, "{f}/{n}");
        if trans > 0 {
            let pruned = export_json(&q, &[root], Some(&BoolCtx::from_program(&p))).unwrap();
            assert_eq!(pruned.transitions.len(), trans, "{f}/{n}");
        }
    }
}

#[test]
fn state_cap_is_enforced() {
    let mut p = fixture("sdc");
    let t = parse_term("Sdc", &mut p).unwrap();
    let err = reachable_qlts(&p, &t, TOL, 5).err().unwrap();
    assert!(matches!(err, qsymb::Error::StateCapExceeded { cap: 5 }));
}

#[test]
fn snapshot_equality_is_alpha_and_choi() {
    let mut p = one_qubit();
    let xx = op(&p, "X", &[0]).compose(&op(&p, "X", &[0]));
    let id = SuperOp::identity(1);
    let a = parse_term("c?x.c!x.nil", &mut p).unwrap();
    let b = parse_term("c?y.c!y.nil", &mut p).unwrap();
    assert!(snapshot_eq(&Snapshot::new(a.clone(), xx.clone()), &Snapshot::new(b.clone(), id.clone()), TOL));
    assert!(!snapshot_eq(&Snapshot::new(a.clone(), op(&p, "X", &[0])), &Snapshot::new(b, id.clone()), TOL));
    let c = parse_term("c?x.c!1.nil", &mut p).unwrap();
    assert!(!snapshot_eq(&Snapshot::new(a, id.clone()), &Snapshot::new(c, id), TOL));
}

#[test]
fn interning_merges_equal_snapshots() {
    let mut p = one_qubit();
    let a = parse_term("c?x.c!x.nil", &mut p).unwrap();
    let b = parse_term("c?y.c!y.nil", &mut p).unwrap();
    let mut q = Qlts::new(&p, TOL, CAP);
    let xx = op(&p, "X", &[0]).compose(&op(&p, "X", &[0]));
    let i = q.intern(a, SuperOp::identity(1)).unwrap();
    let j = q.intern(b.clone(), xx).unwrap();
    let k = q.intern(b, op(&p, "X", &[0])).unwrap();
    assert_eq!(i, j);
    assert_ne!(i, k);
}

#[test]
fn combining_distributions() {
    let p = one_qubit();
    let (a0, a1) = (op(&p, "A0", &[0]), op(&p, "A1", &[0]));
    let x = op(&p, "X", &[0]);
    let d0: SoDist = vec![(0, SuperOp::identity(1))];
    let d1: SoDist = vec![(0, x.clone()), (1, SuperOp::identity(1))];
    let out = combine(1, &[a0.clone(), a1.clone()], &[d0, d1.clone()], TOL).unwrap();
    assert_eq!(out.len(), 2);
    assert!(out[0].1.choi_eq(&a0.add(&x.compose(&a1)), TOL));
    assert!(out[1].1.choi_eq(&a1, TOL));
    assert!(combine(1, &[a0.clone()], &[d1.clone()], TOL).is_err());
    assert!(combine(1, &[a0, a1], &[d1.clone(), d1], TOL).is_ok());
    let zeroed = after_env(&SuperOp::zero(1), &vec![(0, x)], TOL);
    assert!(zeroed.is_empty());
}

#[test]
fn pruning_drops_unsatisfiable_guards() {
    let mut p = one_qubit();
    let t = parse_term("if x = 5 then c!1.nil + tau.nil", &mut p).unwrap();
    let (q, root) = reachable_qlts(&p, &t, TOL, CAP).unwrap();
    let all = export_json(&q, &[root], None).unwrap();
    let pruned = export_json(&q, &[root], Some(&BoolCtx::from_program(&p))).unwrap();
    assert_eq!(all.transitions.len(), 2);
    assert_eq!(pruned.transitions.len(), 1);
    assert!(export_dot(&pruned).starts_with("digraph"));
}

#[test]
fn quantum_input_freedom() {
    let mut p = fixture("sdc");
    for (n, free) in [("Sdc", true), ("@e?q1.H[q1].nil", false)] {
        let t = parse_term(n, &mut p).unwrap();
        let (q, root) = reachable_qlts(&p, &t, TOL, CAP).unwrap();
        assert_eq!(q.quantum_input_free(&[root]), free, "{n}");
    }
}

/// Weights of each transition add up to a trace-preserving map, and every
/// history stays trace preserving.
fn check_conservation(p: &Program, t: &Term) -> Result<(), TestCaseError> {
    let (q, root) = reachable_qlts(p, t, TOL, CAP).unwrap();
    let n = p.universe_size();
    for s in q.reachable(&[root]) {
        prop_assert!(q.snapshot(s).env.is_trace_preserving(1e-8));
        for tr in q.transitions(s) {
            let w = total_weight(n, &tr.target);
            prop_assert!(w.eqsim_v(&SuperOp::identity(n), RegSet::EMPTY, 1e-8), "{} at {}", tr.action, q.snapshot(s).term);
        }
    }
    Ok(())
}

#[test]
fn fixtures_conserve_weight() {
    for (f, n) in [("setzero", "Q"), ("sdc", "Sdc"), ("sdc_mutant", "Mutant"), ("outs", "A")] {
        let mut p = fixture(f);
        let Ok(t) = parse_term(n, &mut p) else { continue };
        check_conservation(&p, &t).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_terms_conserve_weight(seed in any::<u64>()) {
        let mut p = parse_program(GEN_PROGRAM).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_term(&mut rng, &mut p, 4);
        check_conservation(&p, &t)?;
    }

    #[test]
    fn exploration_is_deterministic(seed in any::<u64>()) {
        let mut p = parse_program(GEN_PROGRAM).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_term(&mut rng, &mut p, 4);
        let dump = |p: &Program| {
            let (q, root) = reachable_qlts(p, &t, TOL, CAP).unwrap();
            serde_json::to_string(&export_json(&q, &[root], None).unwrap()).unwrap()
        };
        prop_assert_eq!(dump(&p), dump(&p));
    }
}
