mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{problem, tuples, QUADRATIC, REGULAR_ORIENTED, WITH_REGULAR_CONSTRAINTS};
use quadword::accel::{decide_flat, FlatOptions, FlatVerdict};
use quadword::nielsen::{check_solution, DEFAULT_NODE_BUDGET};
use quadword::oracle::{enumerate_solutions, length_abstraction, to_assignment};
use quadword::pad::{bounded_sat, check_model, check_well_formed, eval, export_smtlib, Truth};
use quadword::{build_ca, is_flat, proof_graph, solve, Config, Equation, LinTerm, PadFormula, Problem, SolveOptions, Status, Symbol, Var};

const NAMES: [&str; 3] = ["x", "y", "z"];

fn symbol() -> impl Strategy<Value = Symbol> {
    prop_oneof![
        (0u32..3).prop_map(|i| Symbol::Var(Var(i))),
        prop_oneof![Just('a'), Just('b')].prop_map(Symbol::Const),
    ]
}

fn quadratic_equation() -> impl Strategy<Value = Equation> {
    (prop::collection::vec(symbol(), 0..5), prop::collection::vec(symbol(), 0..5))
        .prop_map(|(l, r)| Equation::new(l, r))
        .prop_filter("quadratic", |e| e.is_quadratic())
}

fn as_problem(eq: Equation) -> Problem {
    Problem::from_equation(NAMES.iter().map(|s| s.to_string()).collect(), eq)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reach_eps_matches_oracle(eq in quadratic_equation()) {
        let p = as_problem(eq);
        let cs = build_ca(&p, DEFAULT_NODE_BUDGET).unwrap();
        let sample = length_abstraction(&p, 4);
        for t in tuples(3, 4) {
            prop_assert_eq!(cs.reach_eps(&Config { state: 0, values: t.clone() }), sample.contains(&t), "{:?}", t);
        }
    }

    #[test]
    fn rewriting_preserves_shape(eq in quadratic_equation()) {
        let g = proof_graph(&eq, DEFAULT_NODE_BUDGET).unwrap();
        for e in &g.edges {
            let (a, b) = (g.node(e.from).classify(), g.node(e.to).classify());
            prop_assert!(b.quadratic);
            if a.regular_oriented() {
                prop_assert!(b.regular_oriented());
            }
        }
    }

    #[test]
    fn solutions_check(eq in quadratic_equation()) {
        let p = as_problem(eq);
        for sigma in enumerate_solutions(&p, 3).take(50) {
            prop_assert!(check_solution(&p.equation, &sigma));
        }
    }
}

#[test]
fn sample_witnesses_are_solutions() {
    for src in QUADRATIC.iter().chain(WITH_REGULAR_CONSTRAINTS) {
        let p = problem(src);
        let sample = length_abstraction(&p, 5);
        for (lens, words) in &sample.witnesses {
            let sigma = to_assignment(words);
            assert!(p.is_solution(&sigma), "{src}: {lens:?}");
            let got: Vec<u64> = words.iter().map(|w| w.chars().count() as u64).collect();
            assert_eq!(&got, lens);
        }
    }
}

#[test]
fn decide_flat_matches_abstraction() {
    for src in REGULAR_ORIENTED {
        let p = problem(src);
        if p.vars.len() > 3 {
            continue;
        }
        let cs = build_ca(&p, DEFAULT_NODE_BUDGET).unwrap();
        let flat = is_flat(&cs);
        let fin = cs.finals.first().copied();
        let sample = length_abstraction(&p, 4);
        for t in tuples(p.vars.len(), 4) {
            let psi = PadFormula::and(p.vars.iter().zip(&t).map(|(n, &v)| PadFormula::eq(LinTerm::var(n.clone()), v as i64)));
            let sat = match fin {
                None => false,
                Some(fin) => match decide_flat(&cs, &flat, 0, fin, &psi, None, &FlatOptions::default()) {
                    FlatVerdict::Sat { .. } => true,
                    FlatVerdict::NoModelFound { exhaustive, .. } => {
                        assert!(exhaustive, "{src}: {t:?} undecided");
                        false
                    }
                    FlatVerdict::Unsupported(r) => panic!("{src}: {r}"),
                },
            };
            assert_eq!(sat, sample.contains(&t), "{src}: {t:?}");
        }
    }
}

#[test]
fn unsat_never_contradicts_oracle() {
    let mut rng = StdRng::seed_from_u64(200);
    let pool = ["(a|b)*b", "a*", "(ab)*", "b*a", "(a|b)(a|b)(a|b)*"];
    let mut unsat = 0;
    for _ in 0..200 {
        let src = REGULAR_ORIENTED[rng.gen_range(0..REGULAR_ORIENTED.len())];
        let base = problem(src);
        let mut text = src.to_string();
        let bounds: Vec<String> = base.vars.iter().map(|v| format!("|{v}| <= {}", rng.gen_range(0..=4))).collect();
        text.push_str(&format!(" len: {};", bounds.join(" && ")));
        for v in &base.vars {
            if rng.gen_bool(0.3) {
                text.push_str(&format!(" re: {v} in /{}/;", pool[rng.gen_range(0..pool.len())]));
            }
        }
        let p = problem(&text);
        let v = solve(&p, &SolveOptions::default()).unwrap();
        let oracle = enumerate_solutions(&p, 4).next().is_some();
        match v.status {
            Status::Unsat => {
                assert!(!oracle, "{text}: UNSAT but the oracle has a solution");
                unsat += 1;
            }
            Status::Sat => {
                assert!(oracle, "{text}: SAT but the oracle has none");
                let w = v.witness.expect("witness");
                let words: Vec<String> = p.vars.iter().map(|n| w[n].clone()).collect();
                assert!(p.is_solution(&to_assignment(&words)), "{text}");
            }
            Status::Unknown => {}
        }
    }
    assert!(unsat > 0);
}

fn random_formula(rng: &mut StdRng, depth: u32) -> PadFormula {
    let term = |rng: &mut StdRng| {
        let mut t = LinTerm::constant(rng.gen_range(-3..=5));
        for v in ["x", "y"] {
            if rng.gen_bool(0.6) {
                t = t + LinTerm::scaled_var(v, rng.gen_range(-2..=2));
            }
        }
        t
    };
    if depth == 0 || rng.gen_bool(0.3) {
        let (f, g) = (term(rng), term(rng));
        return match rng.gen_range(0..3) {
            0 => PadFormula::le(f, g),
            1 => PadFormula::eq(f, g),
            _ => PadFormula::divides(f, g),
        };
    }
    let parts: Vec<PadFormula> = (0..2).map(|_| random_formula(rng, depth - 1)).collect();
    if rng.gen_bool(0.5) {
        PadFormula::and(parts)
    } else {
        PadFormula::or(parts)
    }
}

#[test]
fn bounded_sat_agrees_with_eval() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..300 {
        let phi = random_formula(&mut rng, 3);
        check_well_formed(&export_smtlib(&phi)).unwrap();
        let by_eval = (0..=6u64).any(|x| {
            (0..=6u64).any(|y| {
                let mu: BTreeMap<String, u64> = [("x".to_string(), x), ("y".to_string(), y)].into();
                eval(&phi, &mu, 0) == Ok(Truth::True)
            })
        });
        let boxed = PadFormula::and([phi.clone(), PadFormula::le(LinTerm::var("x"), 6), PadFormula::le(LinTerm::var("y"), 6)]);
        let r = bounded_sat(&boxed, 6);
        assert_eq!(r.is_sat(), by_eval, "{phi:?}");
        if let Some(m) = r.model() {
            assert_eq!(check_model(&boxed, &m.values), Ok(true));
        }
    }
}
