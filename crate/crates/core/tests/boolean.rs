use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use qsymb::boolean::*;
use qsymb::syntax::*;

fn ctx() -> BoolCtx {
    let mut p = parse_program("domains x, y, z : {0..2};").unwrap();
    p.domains.insert(name("w"), vec![rat(-1), rat(1)]);
    BoolCtx::from_program(&p)
}

fn b(src: &str) -> BExp {
    let mut p = parse_program("domains x, y, z : {0..2};").unwrap();
    parse_bexp(src, &mut p).unwrap()
}

fn psi(pairs: &[(&str, i64)]) -> Evaluation {
    pairs.iter().map(|(k, v)| (name(k), rat(*v))).collect()
}

fn all_assignments(vars: &[&str]) -> Vec<Evaluation> {
    let c = ctx();
    let vars: Vec<Name> = vars.iter().map(|v| name(v)).collect();
    let mut out = Vec::new();
    c.for_each_assignment(&vars, &Evaluation::new(), |p| {
        out.push(p.clone());
        Ok(true)
    })
    .unwrap();
    out
}

const VARS: [&str; 3] = ["x", "y", "z"];

#[test]
fn evaluation_examples() {
    assert!(eval(&psi(&[("x", 1)]), &b("x = 1")).unwrap());
    assert!(!eval(&psi(&[("x", 1), ("y", 2)]), &b("x + 1 > y")).unwrap());
    assert!(eval(&psi(&[("x", 2), ("y", 1)]), &b("x - y = 1 and not x = y")).unwrap());
    assert!(eval(&psi(&[("x", 0)]), &b("x = 1 => y = 2")).unwrap());
    assert!(eval(&psi(&[("x", 2), ("y", 0)]), &b("x * 2 >= 4 or y < 0")).unwrap());
    assert!(eval(&psi(&[]), &b("x = 1")).is_err());
}

#[test]
fn exact_rational_arithmetic() {
    let half = BExp::eq(Exp::Mul(Arc::new(Exp::lit(2)), Arc::new(Exp::var("x"))), Exp::Lit(rat(1)));
    let e: Evaluation = BTreeMap::from([(name("x"), num_rational::BigRational::new(1.into(), 2.into()))]);
    assert!(eval(&e, &half).unwrap());
}

#[test]
fn decision_examples() {
    let c = ctx();
    assert!(c.satisfiable(&b("x = 1 and y = 2")).unwrap());
    assert!(!c.satisfiable(&b("x = 1 and x = 2")).unwrap());
    assert!(!c.satisfiable(&b("x = 3")).unwrap());
    assert!(c.valid(&b("x = 0 or x = 1 or x = 2")).unwrap());
    assert!(c.implies(&b("x = 1 and y = 1"), &b("x = y")).unwrap());
    assert!(!c.implies(&b("x = y"), &b("x = 1")).unwrap());
    assert!(c.implies(&FALSE, &b("x = 1")).unwrap());
    assert!(c.equivalent(&b("not x = 0"), &b("x > 0")).unwrap());
}

#[test]
fn undeclared_variables_are_errors() {
    assert!(ctx().satisfiable(&b("v = 1")).is_err());
}

#[test]
fn primed_names_share_the_base_domain() {
    let c = ctx();
    assert_eq!(c.domain("x'3").unwrap().len(), 3);
}

#[test]
fn simplification_examples() {
    let c = ctx();
    assert_eq!(c.simplify(&b("x = 1 or not x = 1")).unwrap(), TRUE);
    assert_eq!(c.simplify(&b("x = 1 and x = 2")).unwrap(), FALSE);
    assert_eq!(c.simplify(&b("x = 1 and (y = 0 or not y = 0)")).unwrap(), b("x = 1"));
    assert_eq!(c.simplify(&b("x > 0")).unwrap(), b("not x = 0"));
}

#[test]
fn quantifier_examples() {
    let c = ctx();
    let x = [name("x")];
    assert_eq!(c.forall(&x, &b("x = 1 => y = 1")).unwrap(), b("y = 1"));
    assert_eq!(c.forall(&x, &b("x = y")).unwrap(), FALSE);
    assert_eq!(c.exists(&x, &b("x = y")).unwrap(), TRUE);
    assert_eq!(c.forall(&x, &b("y = 2")).unwrap(), b("y = 2"));
}

#[test]
fn action_equality_under_a_condition() {
    let c = ctx();
    let out = |e: &str| Action::COut(name("c"), {
        let mut p = parse_program("domains x, y : {0..2};").unwrap();
        let BExp::Cmp(_, l, _) = parse_bexp(&format!("{e} = 0"), &mut p).unwrap() else { panic!() };
        l
    });
    assert!(c.action_eq_b(&b("x = y"), &out("x"), &out("y")).unwrap());
    assert!(!c.action_eq_b(&TRUE, &out("x"), &out("y")).unwrap());
    assert!(c.action_eq_b(&b("x = 1"), &out("x"), &out("1")).unwrap());
    assert!(!c.action_eq_b(&TRUE, &out("x"), &Action::COut(name("d"), Exp::var("x"))).unwrap());
    assert!(c.action_eq_b(&TRUE, &Action::Tau, &Action::Tau).unwrap());
    let qi = |q: &str| Action::QIn(name("@e"), name(q));
    assert!(c.action_eq_b(&TRUE, &qi("q"), &qi("q")).unwrap());
    assert!(!c.action_eq_b(&TRUE, &qi("q"), &qi("r")).unwrap());
    assert!(!c.action_eq_b(&TRUE, &Action::Tau, &out("x")).unwrap());
}

#[test]
fn concrete_action_matching() {
    let e = psi(&[("x", 2)]);
    let c = name("c");
    assert!(action_eq_psi(&e, &ConcreteAction::COut(c.clone(), rat(2)), &Action::COut(c.clone(), Exp::var("x"))).unwrap());
    assert!(!action_eq_psi(&e, &ConcreteAction::COut(c.clone(), rat(1)), &Action::COut(c.clone(), Exp::var("x"))).unwrap());
    assert!(action_eq_psi(&e, &ConcreteAction::CIn(c.clone(), rat(0)), &Action::CIn(c.clone(), name("y"))).unwrap());
    assert!(action_eq_psi(&e, &ConcreteAction::Tau, &Action::Tau).unwrap());
    assert!(!action_eq_psi(&e, &ConcreteAction::Tau, &Action::CIn(c, name("y"))).unwrap());
    let q = |r: &str| Action::QOut(name("@e"), name(r));
    assert!(action_eq_psi(&e, &ConcreteAction::QOut(name("@e"), name("q")), &q("q")).unwrap());
    assert!(!action_eq_psi(&e, &ConcreteAction::QOut(name("@e"), name("q")), &q("r")).unwrap());
    assert_eq!(ConcreteAction::COut(name("d"), rat(3)).to_string(), "d!3");
}

fn atom() -> impl Strategy<Value = BExp> {
    let var = prop::sample::select(&VARS[..]);
    prop_oneof![
        (var.clone(), 0i64..3).prop_map(|(v, k)| BExp::eq(Exp::var(v), Exp::lit(k))),
        (var.clone(), var.clone()).prop_map(|(v, w)| BExp::Cmp(CmpOp::Lt, Exp::var(v), Exp::var(w))),
        (var.clone(), var, 0i64..3).prop_map(|(v, w, k)| {
            BExp::Cmp(CmpOp::Ge, Exp::Add(Arc::new(Exp::var(v)), Arc::new(Exp::var(w))), Exp::lit(k))
        }),
        any::<bool>().prop_map(BExp::Const),
    ]
}

fn bexp() -> impl Strategy<Value = BExp> {
    atom().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(BExp::not),
            prop::collection::vec(inner.clone(), 1..3).prop_map(BExp::and),
            prop::collection::vec(inner.clone(), 1..3).prop_map(BExp::or),
            (inner.clone(), inner).prop_map(|(a, c)| BExp::imp(a, c)),
        ]
    })
}

fn truth_table(e: &BExp) -> Vec<bool> {
    all_assignments(&VARS).iter().map(|p| eval(p, e).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn simplify_preserves_the_truth_table(e in bexp()) {
        let s = ctx().simplify(&e).unwrap();
        prop_assert_eq!(truth_table(&s), truth_table(&e));
    }

    #[test]
    fn simplify_is_canonical(e in bexp(), f in bexp()) {
        let c = ctx();
        if truth_table(&e) == truth_table(&f) {
            prop_assert_eq!(c.simplify(&e).unwrap(), c.simplify(&f).unwrap());
        }
        let g = BExp::or([e.clone(), BExp::and2(f.clone(), FALSE)]);
        prop_assert_eq!(c.simplify(&g).unwrap(), c.simplify(&e).unwrap());
    }

    #[test]
    fn decisions_agree_with_the_truth_table(e in bexp(), f in bexp()) {
        let c = ctx();
        let te = truth_table(&e);
        let tf = truth_table(&f);
        prop_assert_eq!(c.satisfiable(&e).unwrap(), te.iter().any(|v| *v));
        prop_assert_eq!(c.valid(&e).unwrap(), te.iter().all(|v| *v));
        prop_assert_eq!(c.implies(&e, &f).unwrap(), te.iter().zip(&tf).all(|(a, b)| !a || *b));
    }

    #[test]
    fn implication_is_a_preorder(e in bexp(), f in bexp(), g in bexp()) {
        let c = ctx();
        prop_assert!(c.implies(&e, &e).unwrap());
        if c.implies(&e, &f).unwrap() && c.implies(&f, &g).unwrap() {
            prop_assert!(c.implies(&e, &g).unwrap());
        }
    }

    #[test]
    fn quantifiers_agree_with_the_truth_table(e in bexp()) {
        let c = ctx();
        let a = c.forall(&[name("x")], &e).unwrap();
        let s = c.exists(&[name("x")], &e).unwrap();
        prop_assert!(!qsymb::syntax::bexp_vars(&a).contains("x"));
        for p in all_assignments(&["y", "z"]) {
            let vals: Vec<bool> = (0..3)
                .map(|k| {
                    let mut q = p.clone();
                    q.insert(name("x"), rat(k));
                    eval(&q, &e).unwrap()
                })
                .collect();
            let mut q = p.clone();
            q.insert(name("x"), rat(0));
            prop_assert_eq!(eval(&q, &a).unwrap(), vals.iter().all(|v| *v));
            prop_assert_eq!(eval(&q, &s).unwrap(), vals.iter().any(|v| *v));
        }
    }
}
