//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{problem, tuples, QUADRATIC, REGULAR_ORIENTED, WITH_REGULAR_CONSTRAINTS};
use quadword::accel::{accelerate, VectorNames};
use quadword::flatness::{simple_cycles, DEFAULT_CYCLE_CAP};
use quadword::nielsen::DEFAULT_NODE_BUDGET;
use quadword::oracle::{enumerate_solutions, length_abstraction, to_assignment};
use quadword::pad::{bounded_sat, check_model, check_well_formed, export_smtlib, parse_model, BoundedSat};
use quadword::{
    build_ca, build_ca_reg, check_characterization, is_flat, proof_graph, solve, Config, CounterSystem, CycleInfo, LinTerm, PadFormula, Problem,
    SolveOptions, Status,
};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn var(s: &str) -> LinTerm {
    LinTerm::var(s)
}

fn names(p: &Problem) -> Vec<String> {
    p.vars.clone()
}

fn xab_abx_solved() -> Outcome {
    let p = problem("vars: x; eq: x a b = a b x;");
    let v = solve(&p, &SolveOptions::default()).map_err(|e| e.to_string())?;
    ensure(v.status == Status::Sat, || format!("status {:?}", v.status))?;
    let dot = proof_graph(&p.equation, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?.to_dot(&names(&p));
    ensure(dot.contains("\"ε = ε\""), || "no ε = ε node in the proof graph".into())?;
    Ok(format!("SAT, witness x = {:?}", v.witness.and_then(|w| w.get("x").cloned())))
}

fn shifted_abstraction() -> Outcome {
    let p = problem("vars: x y z; eq: x a b y = y z;");
    let sample = length_abstraction(&p, 6);
    let expected: BTreeSet<Vec<u64>> = tuples(3, 6).into_iter().filter(|t| t[2] == t[0] + 2).collect();
    let got = sample.tuples();
    let diff = got.symmetric_difference(&expected).count();
    ensure(diff == 0, || format!("{diff} mismatched tuples"))?;
    let phi = PadFormula::eq(var("z"), var("x") + LinTerm::constant(2));
    let report = check_characterization(&p, &phi, 6);
    ensure(report.is_empty(), || format!("{} mismatches against |z| = |x| + 2", report.len()))?;
    Ok(format!("{} tuples, 0 mismatches", got.len()))
}

/// `|x| = |y| ∨ (|x| = 0 ∧ 2 | |y|) ∨ (|y| = 0 ∧ 2 | |x|) ∨ (|x|,|y| > 0 ∧ gcd(|x|+2, |y|+2) > 1)`.
fn gcd_characterization() -> PadFormula {
    let two = || LinTerm::constant(2);
    let gcd = PadFormula::exists(
        ["d".to_string()],
        PadFormula::and([
            PadFormula::ge(var("d"), 2),
            PadFormula::divides(var("d"), var("x") + two()),
            PadFormula::divides(var("d"), var("y") + two()),
        ]),
    );
    PadFormula::or([
        PadFormula::eq(var("x"), var("y")),
        PadFormula::and([PadFormula::eq(var("x"), 0), PadFormula::divides(two(), var("y"))]),
        PadFormula::and([PadFormula::eq(var("y"), 0), PadFormula::divides(two(), var("x"))]),
        PadFormula::and([PadFormula::ge(var("x"), 1), PadFormula::ge(var("y"), 1), gcd]),
    ])
}

fn gcd_characterization_holds() -> Outcome {
    let p = problem("vars: x y; eq: x a b y = y a b x;");
    let report = check_characterization(&p, &gcd_characterization(), 8);
    ensure(report.is_empty(), || format!("{} mismatches, first {:?}", report.len(), report.first()))?;
    let coprime = length_abstraction(&p, 8).tuples().into_iter().filter(|t| t[0] != t[1] && t[0] > 0 && t[1] > 0).count();
    Ok(format!("0 mismatches on [0,8]², {coprime} tuples from the gcd disjunct alone"))
}

fn divisibility_formula() -> PadFormula {
    PadFormula::and([
        PadFormula::eq(var("x"), var("y")),
        PadFormula::ge(var("x"), 1),
        PadFormula::divides(var("x"), var("z")),
    ])
}

fn non_presburger_regular() -> Outcome {
    let forms = [
        ("xz = zy", "vars: x y z; eq: x z = z y; re: x in /#(a|b)*/; re: y in /#(a|b)*/;"),
        ("xy = yz", "vars: x y z; eq: x y = y z; re: x in /#(a|b)*/; re: y in /#(a|b)*/;"),
    ];
    let mut counts = Vec::new();
    for (label, src) in forms {
        let report = check_characterization(&problem(src), &divisibility_formula(), 8);
        counts.push((label, report.len()));
    }
    let summary = counts.iter().map(|(l, n)| format!("{l}: {n} mismatches")).collect::<Vec<_>>().join(", ");
    ensure(counts[0].1 == 0, || format!("selected form xz = zy disagrees ({summary})"))?;
    Ok(format!("selected xz = zy ({summary})"))
}

fn reach_matches_oracle() -> Outcome {
    let mut checked = 0;
    let mut tuples_total = 0;
    for src in QUADRATIC {
        let p = problem(src);
        let cs = build_ca(&p, DEFAULT_NODE_BUDGET).map_err(|e| format!("{src}: {e}"))?;
        let sample = length_abstraction(&p, 8);
        for t in tuples(p.vars.len(), 8) {
            let reach = cs.reach_eps(&Config { state: 0, values: t.clone() });
            ensure(reach == sample.contains(&t), || format!("{src}: {t:?} reach_eps {reach}, oracle {}", !reach))?;
            tuples_total += 1;
        }
        checked += 1;
    }
    ensure(checked >= 10, || format!("only {checked} equations"))?;
    Ok(format!("{checked} equations, {tuples_total} vectors agree"))
}

fn regular_oriented_flat() -> Outcome {
    let mut checked = 0;
    let mut cycles_seen = 0;
    for src in REGULAR_ORIENTED {
        let p = problem(src);
        ensure(p.equation.classify().regular_oriented(), || format!("{src}: not regular-oriented"))?;
        let cs = build_ca(&p, DEFAULT_NODE_BUDGET).map_err(|e| format!("{src}: {e}"))?;
        let fl = is_flat(&cs);
        ensure(fl.flat, || format!("{src}: not flat, witness {:?}", fl.witness))?;
        let (cycles, truncated) = simple_cycles(&cs, DEFAULT_CYCLE_CAP);
        ensure(!truncated, || format!("{src}: cycle enumeration truncated"))?;
        ensure(cycles.len() == fl.cycles.len(), || format!("{src}: {} simple cycles, {} components", cycles.len(), fl.cycles.len()))?;
        let n = p.equation.lhs.len().max(p.equation.rhs.len());
        for c in cycles {
            let info = CycleInfo::new(&cs, c);
            ensure(info.reduced_counter.is_some(), || format!("{src}: cycle {:?} is not 1-variable-reducing", info.transitions))?;
            ensure(info.len() < n, || format!("{src}: cycle of length {} exceeds {}", info.len(), n - 1))?;
            cycles_seen += 1;
        }
        checked += 1;
    }
    ensure(checked >= 10, || format!("only {checked} equations"))?;
    Ok(format!("{checked} equations, {cycles_seen} cycles"))
}

fn is_closed_walk<S>(cs: &CounterSystem<S>, state: usize, walk: &[usize]) -> bool {
    let mut cur = state;
    for &t in walk {
        if cs.transitions[t].from != cur {
            return false;
        }
        cur = cs.transitions[t].to;
    }
    !walk.is_empty() && cur == state
}

fn commuting_non_flat() -> Outcome {
    let p = problem("vars: x y; eq: x y = y x;");
    let cs = build_ca(&p, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
    let fl = is_flat(&cs);
    ensure(!fl.flat, || "reported flat".into())?;
    let w = fl.witness.ok_or("no witness")?;
    ensure(w.cycles[0] != w.cycles[1], || "witness cycles coincide".into())?;
    for c in &w.cycles {
        ensure(is_closed_walk(&cs, w.state, c), || format!("{c:?} is not a cycle through the witness"))?;
    }
    Ok(format!("witness node {}", p.render_equation(&cs.states[w.state])))
}

/// Configurations at `q` reached from `(p, v)` by following the cycle.
fn simulate<S>(cs: &CounterSystem<S>, cycle: &CycleInfo, p: usize, q: usize, v: &[u64]) -> BTreeSet<Vec<u64>> {
    let n = cycle.len();
    let mut pos = cycle.position(p).unwrap();
    let mut cur = v.to_vec();
    let mut seen = HashSet::new();
    let mut out = BTreeSet::new();
    loop {
        if !seen.insert((pos, cur.clone())) {
            return out;
        }
        if cycle.states[pos] == q {
            out.insert(cur.clone());
        }
        match cs.transitions[cycle.transitions[pos]].apply(&cur) {
            Some(next) => cur = next,
            None => return out,
        }
        pos = (pos + 1) % n;
    }
}

fn pin<'a>(names: &'a [String], values: &'a [u64]) -> impl Iterator<Item = PadFormula> + 'a {
    names.iter().zip(values).map(|(n, &v)| PadFormula::eq(var(n), v as i64))
}

const ACCEL_BOUND: u64 = 10;

/// Compares `{w ∈ [0,10]^n : φ(v, w)}` with simulation for every `v`.
/// Counters never grow along a cycle, so a search bounded by 10 decides
/// every query.
fn check_cycle<S>(cs: &CounterSystem<S>, cycle: &CycleInfo) -> Result<usize, String> {
    let y = cycle.reduced_counter.unwrap().index();
    let k = cs.counters.len();
    let mut queries = 0;
    for &p in &cycle.states {
        for &q in &cycle.states {
            let mut vn = VectorNames::new(&cs.counters);
            let (pre, post) = (vn.initial(), vn.primed());
            let phi = accelerate(cs, cycle, p, q, &pre, &post, &mut vn).map_err(|e| e.to_string())?;
            for v in tuples(k, ACCEL_BOUND) {
                let sim = simulate(cs, cycle, p, q, &v);
                // enumerate {w_y : φ(v, w)} by blocking each value found
                let frame = (0..k).filter(|&i| i != y).map(|i| PadFormula::eq(var(&post[i]), v[i] as i64));
                let mut query = PadFormula::and(pin(&pre, &v).chain(frame).chain([PadFormula::le(var(&post[y]), ACCEL_BOUND as i64), phi.clone()]));
                let mut got = BTreeSet::new();
                loop {
                    queries += 1;
                    let Some(m) = bounded_sat(&query, ACCEL_BOUND).model().map(|m| m.values.clone()) else { break };
                    let wy = m[&post[y]];
                    let mut w = v.clone();
                    w[y] = wy;
                    ensure(got.insert(w), || format!("value {wy} not blocked"))?;
                    let not_wy = PadFormula::or([PadFormula::le(var(&post[y]), wy as i64 - 1), PadFormula::ge(var(&post[y]), wy as i64 + 1)]);
                    query = PadFormula::and([query, not_wy]);
                }
                ensure(got == sim, || {
                    format!("cycle {:?} p={p} q={q} v={v:?}: formula {got:?}, simulation {sim:?}", cycle.transitions)
                })?;
                let others: Vec<PadFormula> = (0..k)
                    .filter(|&i| i != y)
                    .map(|i| {
                        PadFormula::or([
                            PadFormula::le(var(&post[i]), v[i] as i64 - 1),
                            PadFormula::ge(var(&post[i]), v[i] as i64 + 1),
                        ])
                    })
                    .collect();
                if !others.is_empty() {
                    let boxed = post.iter().map(|n| PadFormula::le(var(n), ACCEL_BOUND as i64));
                    let query = PadFormula::and(pin(&pre, &v).chain(boxed).chain([PadFormula::or(others), phi.clone()]));
                    queries += 1;
                    if let BoundedSat::Sat(m) = bounded_sat(&query, ACCEL_BOUND) {
                        return Err(format!("cycle {:?} p={p} q={q} v={v:?}: formula changes a frame counter ({:?})", cycle.transitions, m.values));
                    }
                }
            }
        }
    }
    Ok(queries)
}

fn acceleration_exactness() -> Outcome {
    let mut cycles = 0;
    let mut queries = 0;
    let mut seen = HashSet::new();
    let mut visit = |src: &str, cs_cycles: Vec<(Vec<usize>, CycleInfo)>, f: &dyn Fn(&CycleInfo) -> Result<usize, String>| -> Result<(), String> {
        for (key, info) in cs_cycles {
            if info.reduced_counter.is_none() || !seen.insert((src.to_string(), key)) {
                continue;
            }
            queries += f(&info)?;
            cycles += 1;
        }
        Ok(())
    };
    for src in QUADRATIC.iter().chain(REGULAR_ORIENTED) {
        let p = problem(src);
        let cs = build_ca(&p, DEFAULT_NODE_BUDGET).map_err(|e| format!("{src}: {e}"))?;
        let (raw, _) = simple_cycles(&cs, DEFAULT_CYCLE_CAP);
        let infos = raw.into_iter().map(|c| (c.clone(), CycleInfo::new(&cs, c))).collect();
        visit(src, infos, &|c| check_cycle(&cs, c).map_err(|e| format!("{src}: {e}")))?;
    }
    for src in WITH_REGULAR_CONSTRAINTS {
        let p = problem(src);
        let rc = build_ca_reg(&p, 4096, DEFAULT_NODE_BUDGET).map_err(|e| format!("{src}: {e}"))?;
        let cs = &rc.system;
        let (raw, _) = simple_cycles(cs, DEFAULT_CYCLE_CAP);
        let infos = raw.into_iter().map(|c| (c.clone(), CycleInfo::new(cs, c))).collect();
        visit(src, infos, &|c| check_cycle(cs, c).map_err(|e| format!("{src}: {e}")))?;
    }
    ensure(cycles > 0, || "no reducing cycles in the corpus".into())?;
    Ok(format!("{cycles} cycles, {queries} queries"))
}

const REGEX_POOL: &[&str] = &["(a|b)*a", "a*", "(ab)*", "b(a|b)*", "(a|b)(a|b)", "a*b*"];

fn random_box_problem(rng: &mut StdRng) -> String {
    let src = REGULAR_ORIENTED[rng.gen_range(0..REGULAR_ORIENTED.len())];
    let base = problem(src);
    let mut out = src.to_string();
    let mut len = Vec::new();
    for v in &base.vars {
        len.push(format!("|{v}| <= {}", rng.gen_range(0..=5)));
    }
    let x = &base.vars[rng.gen_range(0..base.vars.len())];
    let y = &base.vars[rng.gen_range(0..base.vars.len())];
    match rng.gen_range(0..4) {
        0 => len.push(format!("|{x}| = |{y}|")),
        1 => len.push(format!("|{x}| + |{y}| = {}", rng.gen_range(0..=6))),
        2 => len.push(format!("|{x}| >= |{y}| + 1")),
        _ => {}
    }
    out.push_str(&format!(" len: {};", len.join(" && ")));
    if rng.gen_bool(0.5) {
        for v in &base.vars {
            if rng.gen_bool(0.4) {
                out.push_str(&format!(" re: {v} in /{}/;", REGEX_POOL[rng.gen_range(0..REGEX_POOL.len())]));
            }
        }
    }
    out
}

fn end_to_end() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let (mut sat, mut unsat) = (0, 0);
    let mut routes: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..50 {
        let src = random_box_problem(&mut rng);
        let p = problem(&src);
        ensure(p.vars.len() <= 6, || format!("{src}: too many variables"))?;
        let oracle = enumerate_solutions(&p, 5).next().is_some();
        let v = solve(&p, &SolveOptions::default()).map_err(|e| format!("{src}: {e}"))?;
        *routes.entry(v.diagnostics.route.clone()).or_default() += 1;
        let expected = if oracle { Status::Sat } else { Status::Unsat };
        ensure(v.status == expected, || format!("{src}: solve {:?}, oracle {expected:?} ({:?})", v.status, v.diagnostics.notes))?;
        if v.status == Status::Sat {
            let w = v.witness.as_ref().ok_or_else(|| format!("{src}: SAT without witness"))?;
            let words: Vec<String> = p.vars.iter().map(|n| w[n].clone()).collect();
            ensure(p.is_solution(&to_assignment(&words)), || format!("{src}: witness {w:?} fails"))?;
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    Ok(format!("50 problems agree ({sat} SAT, {unsat} UNSAT; routes {routes:?})"))
}

fn random_term(rng: &mut StdRng, vars: &[String]) -> LinTerm {
    let mut t = LinTerm::constant(rng.gen_range(-4..=6));
    for v in vars {
        if rng.gen_bool(0.5) {
            t = t + LinTerm::scaled_var(v.clone(), rng.gen_range(-2..=2));
        }
    }
    t
}

fn random_formula(rng: &mut StdRng, vars: &mut Vec<String>, depth: u32, fresh: &mut usize) -> PadFormula {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        let (f, g) = (random_term(rng, vars), random_term(rng, vars));
        return match rng.gen_range(0..4) {
            0 => PadFormula::le(f, g),
            1 => PadFormula::eq(f, g),
            2 => PadFormula::divides(LinTerm::constant(rng.gen_range(2..=4)), g),
            _ => PadFormula::divides(f, g),
        };
    }
    match rng.gen_range(0..3) {
        0 => PadFormula::and((0..rng.gen_range(2..=3)).map(|_| random_formula(rng, vars, depth - 1, fresh)).collect::<Vec<_>>()),
        1 => PadFormula::or((0..rng.gen_range(2..=3)).map(|_| random_formula(rng, vars, depth - 1, fresh)).collect::<Vec<_>>()),
        _ => {
            *fresh += 1;
            let e = format!("e{fresh}");
            vars.push(e.clone());
            let body = random_formula(rng, vars, depth - 1, fresh);
            vars.pop();
            PadFormula::exists([e], body)
        }
    }
}

fn z3_model(script: &str) -> Option<Result<BTreeMap<String, i128>, String>> {
    let dir = std::env::temp_dir().join(format!("quadword-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).ok()?;
    let file = dir.join("query.smt2");
    std::fs::write(&file, script).ok()?;
    let out = Command::new("z3").arg("-T:20").arg(&file).output().ok()?;
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let mut lines = text.lines();
    Some(match lines.next() {
        Some("sat") => parse_model(&lines.collect::<Vec<_>>().join("\n")).map_err(|e| e.to_string()),
        other => Err(format!("z3 answered {other:?}")),
    })
}

fn smt_round_trip() -> Outcome {
    let mut rng = StdRng::seed_from_u64(12);
    let mut found = 0;
    let mut external = 0;
    let mut tries = 0;
    while found < 100 {
        tries += 1;
        ensure(tries < 10_000, || "too few satisfiable formulas".into())?;
        let mut vars: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let phi = random_formula(&mut rng, &mut vars, 3, &mut 0);
        let BoundedSat::Sat(m) = bounded_sat(&phi, 12) else { continue };
        found += 1;
        ensure(check_model(&phi, &m.values) == Ok(true), || format!("bounded_sat model fails: {phi:?}"))?;
        let script = export_smtlib(&phi);
        check_well_formed(&script).map_err(|e| format!("{e}: {script}"))?;
        let ingested = match z3_model(&script) {
            Some(r) => {
                external += 1;
                r?
            }
            None => {
                let text: String = m.values.iter().map(|(k, v)| format!("(define-fun |{k}| () Int {v})\n")).collect();
                parse_model(&format!("(model\n{text})")).map_err(|e| e.to_string())?
            }
        };
        let model: BTreeMap<String, u64> = ingested
            .into_iter()
            .filter(|(k, _)| !k.starts_with("div!"))
            .map(|(k, v)| u64::try_from(v).map(|v| (k, v)).map_err(|_| "negative value".to_string()))
            .collect::<Result<_, _>>()?;
        ensure(check_model(&phi, &model) == Ok(true), || format!("ingested model {model:?} fails {phi:?}"))?;
    }
    Ok(if external > 0 {
        format!("100 formulas, {external} models from z3")
    } else {
        "100 formulas, z3 not found; synthesized models ingested".into()
    })
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { name: "xab=abx is SAT with ε = ε in the proof graph", limit: secs(1), run: xab_abx_solved },
        Criterion { name: "length abstraction of xaby=yz", limit: secs(30), run: shifted_abstraction },
        Criterion { name: "gcd characterization of xaby=yabx", limit: secs(120), run: gcd_characterization_holds },
        Criterion { name: "divisibility abstraction with regular constraints", limit: secs(120), run: non_presburger_regular },
        Criterion { name: "reach_eps equals the length abstraction", limit: None, run: reach_matches_oracle },
        Criterion { name: "regular-oriented systems are flat and reducing", limit: None, run: regular_oriented_flat },
        Criterion { name: "xy=yx is not flat", limit: None, run: commuting_non_flat },
        Criterion { name: "acceleration exactness", limit: secs(300), run: acceleration_exactness },
        Criterion { name: "end-to-end verdicts agree with the oracle", limit: None, run: end_to_end },
        Criterion { name: "SMT-LIB export round trip", limit: None, run: smt_round_trip },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if took > limit => Err(format!("took {took:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS {:>2} {}: {detail} [{took:.2?}]", i + 1, c.name),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {}: {e} [{took:.2?}]", i + 1, c.name);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
