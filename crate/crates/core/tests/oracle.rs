mod support;

use proptest::prelude::*;
use qsymb::boolean::{BoolCtx, ConcreteAction};
use qsymb::oracle::*;
use qsymb::quantum::{basis, max_abs_diff, outer, trace, CMat};
use qsymb::syntax::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

const TOL: f64 = 1e-9;
const CAP: usize = 10_000;

fn ket(i: usize) -> CMat<f64> {
    let v = basis::<f64>(2, i);
    outer(&v, &v)
}

fn plus() -> CMat<f64> {
    let v = (basis::<f64>(2, 0) + basis::<f64>(2, 1)) / nalgebra::Complex::new(2f64.sqrt(), 0.0);
    outer(&v, &v)
}

fn one_qubit() -> Program {
    parse_program("registers q;\ndomains x : {0..2};\nchannels c;\n").unwrap()
}

#[test]
fn operator_moves_the_state() {
    let mut p = one_qubit();
    let term = parse_term("Set0[q].nil", &mut p).unwrap();
    let steps = Interpreter::new(&p, TOL).step(&Configuration { term, state: plus() }).unwrap();
    assert_eq!(steps.len(), 1);
    let (a, dist) = &steps[0];
    assert_eq!(*a, ConcreteAction::Tau);
    assert_eq!(dist.len(), 1);
    assert!((dist[0].0 - 1.0).abs() < 1e-12);
    assert!(max_abs_diff(&dist[0].1.state, &ket(0)) < 1e-12);
}

#[test]
fn measurement_outcomes_and_resets() {
    let mut p = one_qubit();
    let term = parse_term("M01[q; x].c!x.nil", &mut p).unwrap();
    let conts: Vec<Term> = (0..2).map(|i| parse_term(&format!("c!{i}.nil"), &mut p).unwrap()).collect();
    let interp = Interpreter::new(&p, TOL);
    let steps = interp.step(&Configuration { term: term.clone(), state: plus() }).unwrap();
    let dist = &steps[0].1;
    assert_eq!(dist.len(), 2);
    for (i, (prob, conf)) in dist.iter().enumerate() {
        assert!((prob - 0.5).abs() < 1e-12);
        assert_eq!(conf.term, conts[i]);
        assert!(max_abs_diff(&conf.state, &ket(i)) < 1e-12);
        assert!((trace(&conf.state).re - 1.0).abs() < 1e-12);
    }
    // an impossible outcome is dropped
    let sure = interp.step(&Configuration { term, state: ket(1) }).unwrap();
    assert_eq!(sure[0].1.len(), 1);
    assert!((sure[0].1[0].0 - 1.0).abs() < 1e-12);
}

#[test]
fn inputs_range_over_the_domain() {
    let mut p = one_qubit();
    let term = parse_term("c?x.c!x.nil", &mut p).unwrap();
    let steps = Interpreter::new(&p, TOL).step(&Configuration { term, state: ket(0) }).unwrap();
    let labels: Vec<String> = steps.iter().map(|(a, _)| a.to_string()).collect();
    assert_eq!(labels, ["c?0", "c?1", "c?2"]);
}

#[test]
fn unowned_state_traces_out_the_owned_registers() {
    let mut p = parse_program("registers q, r;\n").unwrap();
    let term = parse_term("X[q].nil", &mut p).unwrap();
    let state = support::product(&plus(), &ket(1));
    let rest = unowned_state(&p, &Configuration { term, state }).unwrap();
    assert!(max_abs_diff(&rest, &ket(1)) < 1e-12);
}

#[test]
fn concrete_bisimilarity_examples() {
    let mut p = one_qubit();
    let conf = |p: &mut Program, s: &str, st: CMat<f64>| Configuration { term: parse_term(s, p).unwrap(), state: st };
    let a = conf(&mut p, "c!0.nil", ket(0));
    let b = conf(&mut p, "tau.c!0.nil", ket(0));
    let c = conf(&mut p, "c!1.nil", ket(0));
    assert!(ground_bisim_concrete(&p, a.clone(), a.clone(), TOL, CAP).unwrap());
    assert!(!ground_bisim_concrete(&p, a.clone(), b, TOL, CAP).unwrap());
    assert!(!ground_bisim_concrete(&p, a.clone(), c, TOL, CAP).unwrap());
    // q is not owned, so its state is observable
    let flipped = conf(&mut p, "c!0.nil", ket(1));
    assert!(!ground_bisim_concrete(&p, a, flipped, TOL, CAP).unwrap());
    let m = conf(&mut p, "M01[q; x].c!0.nil", plus());
    let s = conf(&mut p, "Set0[q].c!0.nil", plus());
    assert!(!ground_bisim_concrete(&p, m, s, TOL, CAP).unwrap());
    let m0 = conf(&mut p, "M01[q; x].c!0.nil", ket(0));
    let s0 = conf(&mut p, "Set0[q].c!0.nil", ket(0));
    assert!(ground_bisim_concrete(&p, m0, s0, TOL, CAP).unwrap());
}

#[test]
fn random_states_are_density_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in RhoKind::ALL {
        for n in 1..4 {
            let rho = random_rho(&mut rng, kind, n);
            assert!(qsymb::DensityMatrix::new(n, rho, 1e-9).is_ok(), "{kind:?} on {n}");
        }
    }
}

#[test]
fn crosscheck_agrees_on_set_zero() {
    let mut p = fixture("setzero");
    let (t, u) = terms(&mut p, "P", "Q");
    let opts = CrosscheckOptions { samples: 20, seed: 1, tol: TOL, cap: CAP };
    let r = crosscheck(&p, &t, &u, &TRUE, opts).unwrap();
    assert_eq!((r.samples, r.agreements, r.concrete_bisimilar), (20, 20, 20));
    assert!(r.all_agree());
}

#[test]
fn crosscheck_is_deterministic() {
    let mut p = fixture("params");
    let (t, u) = terms(&mut p, "Pair(x, y)", "Swap(x, y)");
    let run = |seed| {
        let opts = CrosscheckOptions { samples: 12, seed, tol: TOL, cap: CAP };
        serde_json::to_string(&crosscheck(&p, &t, &u, &TRUE, opts).unwrap()).unwrap()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

#[test]
fn unsatisfiable_conditions_sample_nothing() {
    let mut p = fixture("params");
    let (t, u) = terms(&mut p, "Out(x)", "Zero");
    let b = parse_bexp("x = 7", &mut p).unwrap();
    let r = crosscheck(&p, &t, &u, &b, CrosscheckOptions { samples: 5, seed: 0, tol: TOL, cap: CAP }).unwrap();
    assert!(r.unsatisfiable);
    assert_eq!(r.samples, 0);
}

#[test]
fn conditional_pairs_agree() {
    for (a, b) in [("Out(x)", "Zero"), ("Pair(x, y)", "Swap(x, y)"), ("Guarded(x)", "Out(x)"), ("Echo", "EchoZero")] {
        let mut p = fixture("params");
        let (t, u) = terms(&mut p, a, b);
        let r = crosscheck(&p, &t, &u, &TRUE, CrosscheckOptions { samples: 16, seed: 2, tol: TOL, cap: CAP }).unwrap();
        assert!(r.all_agree(), "{a} vs {b}: {:?}", r.disagreements);
    }
}

#[test]
fn measurement_against_preparation_disagrees_only_on_lucky_states() {
    // symbolically distinct for all states, yet concretely equal whenever
    // q already holds |0⟩
    let mut p = fixture("params");
    let (t, u) = terms(&mut p, "Meas(x)", "Prep(x)");
    let r = crosscheck(&p, &t, &u, &TRUE, CrosscheckOptions { samples: 24, seed: 4, tol: TOL, cap: CAP }).unwrap();
    assert_eq!(r.theta, "false");
    assert!(!r.disagreements.is_empty());
    assert!(r.disagreements.iter().all(|d| !d.expected && d.got));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn outcome_probabilities_sum_to_one(seed in any::<u64>()) {
        let mut p = parse_program(GEN_PROGRAM).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_term(&mut rng, &mut p, 4);
        let ctx = BoolCtx::from_program(&p);
        let vars: Vec<Name> = fv(&t).into_iter().collect();
        let interp = Interpreter::new(&p, TOL);
        for (i, psi) in evaluations(&ctx, &vars).into_iter().enumerate() {
            let cs: CSubst = psi.iter().map(|(k, v)| (k.clone(), Exp::Lit(v.clone()))).collect();
            let rho = rho_for(&mut rng, i, p.universe_size());
            let conf = Configuration { term: subst(&t, &cs, &QSubst::new()), state: rho };
            for (a, dist) in interp.step(&conf).unwrap() {
                let total: f64 = dist.iter().map(|(pr, _)| pr).sum();
                prop_assert!((total - 1.0).abs() < 1e-8, "{} from {}: {}", a, conf.term, total);
                for (_, c) in &dist {
                    prop_assert!((trace(&c.state).re - 1.0).abs() < 1e-8);
                }
            }
        }
    }
}
