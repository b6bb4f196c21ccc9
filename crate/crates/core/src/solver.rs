//! End-to-end decision pipeline with a conservative verdict policy.
//!
//! SAT is reported when a length model is found and realized by words.
//! UNSAT is reported only when the search provably covered every model:
//! the lengths do not balance, no final configuration is reachable, every
//! skeleton query was refuted exhaustively, or the length constraint confines
//! all variables to a box that the concrete search covered. Anything else is
//! UNKNOWN.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accel::{decide_flat, skeleton_queries, FlatOptions, FlatVerdict};
use crate::automata::{ProgressionSet, DEFAULT_MONOID_CAP};
use crate::counters::{build_ca, build_ca_reg, Config, CounterSystem};
use crate::flatness::{is_flat, DEFAULT_SKELETON_LIMIT};
use crate::nielsen::{NielsenError, DEFAULT_NODE_BUDGET};
use crate::oracle::first_with_lengths;
use crate::pad::{eval, LinTerm, PadFormula, SearchOptions, Truth, DEFAULT_NODE_BUDGET as PAD_NODE_BUDGET};
use crate::regnielsen::RegError;
use crate::terms::{Classification, Problem, Var};

/// Witnesses are reconstructed only when the total length is at most this.
const WITNESS_LENGTH_LIMIT: u64 = 256;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Search bound; `None` selects [`default_bound`].
    pub bound: Option<u64>,
    pub node_budget: usize,
    pub pad_node_budget: u64,
    pub monoid_cap: usize,
    pub skeleton_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            bound: None,
            node_budget: DEFAULT_NODE_BUDGET,
            pad_node_budget: PAD_NODE_BUDGET,
            monoid_cap: DEFAULT_MONOID_CAP,
            skeleton_limit: DEFAULT_SKELETON_LIMIT,
        }
    }
}

/// `max(2·(|L| + |R| + Σ|constants of θ|), 64)`.
pub fn default_bound(p: &Problem) -> u64 {
    (2 * (p.equation.len() as u64 + p.length_constraint_weight())).max(64)
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("equation is not quadratic")]
    NotQuadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub classification: Option<Classification>,
    /// `balance`, `graph`, `accelerate` or `concrete`.
    pub route: String,
    pub states: usize,
    pub transitions: usize,
    pub initial_maps: usize,
    pub flat: Option<bool>,
    pub reducing: Option<bool>,
    pub skeletons: usize,
    pub bound: u64,
    pub exhaustive: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub model: Option<BTreeMap<String, u64>>,
    pub witness: Option<BTreeMap<String, String>>,
    pub diagnostics: Diagnostics,
    /// PAD queries left open when the verdict is UNKNOWN.
    #[serde(skip)]
    pub open_queries: Vec<PadFormula>,
}

impl Verdict {
    fn new(status: Status, diagnostics: Diagnostics) -> Self {
        Verdict {
            status,
            model: None,
            witness: None,
            diagnostics,
            open_queries: Vec::new(),
        }
    }
}

/// Upper bounds on every variable implied by top-level conjuncts of `phi`,
/// if each variable gets one. Variables range over ℕ.
pub fn syntactic_box(phi: &PadFormula, vars: &[String]) -> Option<Vec<u64>> {
    let mut atoms = Vec::new();
    fn top<'a>(phi: &'a PadFormula, out: &mut Vec<LinTerm>) {
        match phi {
            PadFormula::And(ps) => ps.iter().for_each(|p| top(p, out)),
            PadFormula::Le(f, g) => out.push(f.clone() - g.clone()),
            PadFormula::Eq(f, g) => {
                out.push(f.clone() - g.clone());
                out.push(g.clone() - f.clone());
            }
            _ => {}
        }
    }
    top(phi, &mut atoms);
    let mut ub: BTreeMap<&str, i128> = BTreeMap::new();
    for _ in 0..=vars.len() {
        let mut changed = false;
        for h in &atoms {
            // h ≤ 0: a·v ≤ −k − Σ_{c<0} c·x
            for v in vars {
                let a = h.coeff(v) as i128;
                if a <= 0 {
                    continue;
                }
                let mut rhs = -(h.constant as i128);
                let mut ok = true;
                for w in h.vars() {
                    let c = h.coeff(w) as i128;
                    if w == v || c >= 0 {
                        continue;
                    }
                    match ub.get(w) {
                        Some(&b) => rhs -= c * b,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let b = rhs.div_euclid(a);
                if ub.get(v.as_str()).is_none_or(|&old| b < old) {
                    ub.insert(v, b);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // a negative bound leaves no value; the box [0, 0] is then searched in vain
    vars.iter().map(|v| ub.get(v.as_str()).map(|&b| b.max(0) as u64)).collect()
}

/// `θ ∧ |L| = |R|` over the length variables.
pub fn length_query(p: &Problem) -> PadFormula {
    PadFormula::and([p.theta(), PadFormula::eq(p.equation.length_balance(&p.vars), 0)])
}

/// Initial configurations: state and admissible initial lengths.
struct Roots {
    roots: Vec<(usize, Option<BTreeMap<Var, ProgressionSet>>)>,
}

pub fn solve(p: &Problem, opts: &SolveOptions) -> Result<Verdict, SolveError> {
    let classification = p.equation.classify();
    if !classification.quadratic {
        return Err(SolveError::NotQuadratic);
    }
    let bound = opts.bound.unwrap_or_else(|| default_bound(p));
    let mut diag = Diagnostics {
        classification: Some(classification),
        bound,
        ..Default::default()
    };

    let balance = p.equation.length_balance(&p.vars);
    if balance.is_constant() && balance.constant != 0 {
        diag.route = "balance".into();
        diag.exhaustive = true;
        diag.notes.push("the two sides have different lengths under every assignment".into());
        return Ok(Verdict::new(Status::Unsat, diag));
    }
    let psi = length_query(p);

    if p.has_regular_constraints() {
        match build_ca_reg(p, opts.monoid_cap, opts.node_budget) {
            Ok(rc) => {
                diag.initial_maps = rc.initial.len();
                let absent_ok = rc.context.absent_vars_satisfiable(&p.equation);
                let roots = Roots {
                    roots: rc.initial.iter().map(|i| (i.state, Some(i.lengths.clone()))).collect(),
                };
                if !absent_ok {
                    diag.route = "graph".into();
                    diag.exhaustive = true;
                    diag.notes.push("a constrained variable has an empty language".into());
                    return Ok(Verdict::new(Status::Unsat, diag));
                }
                run(p, &rc.system, roots, &psi, opts, diag)
            }
            Err(e) => {
                let note = match e {
                    RegError::Budget(b) => format!("configuration graph exceeded node budget {b}"),
                    other => other.to_string(),
                };
                diag.notes.push(note);
                Ok(Verdict::new(Status::Unknown, diag))
            }
        }
    } else {
        match build_ca(p, opts.node_budget) {
            Ok(cs) => {
                diag.initial_maps = 1;
                let roots = Roots { roots: vec![(0, None)] };
                run(p, &cs, roots, &psi, opts, diag)
            }
            Err(NielsenError::Budget { budget, .. }) => {
                diag.notes.push(format!("proof graph exceeded node budget {budget}"));
                Ok(Verdict::new(Status::Unknown, diag))
            }
            Err(NielsenError::NotQuadratic) => Err(SolveError::NotQuadratic),
        }
    }
}

fn run<S>(p: &Problem, cs: &CounterSystem<S>, roots: Roots, psi: &PadFormula, opts: &SolveOptions, mut diag: Diagnostics) -> Result<Verdict, SolveError> {
    diag.states = cs.num_states();
    diag.transitions = cs.transitions.len();
    let Some(&fin) = cs.finals.first() else {
        diag.route = "graph".into();
        diag.exhaustive = true;
        diag.notes.push("ε = ε is not reachable".into());
        return Ok(Verdict::new(Status::Unsat, diag));
    };

    let flat = is_flat(cs);
    diag.flat = Some(flat.flat);
    let reducing = flat.flat && flat.cycles.iter().all(|c| c.reduced_counter.is_some());
    diag.reducing = flat.flat.then_some(reducing);

    if reducing {
        diag.route = "accelerate".into();
        let fopts = FlatOptions {
            search: SearchOptions {
                bound: diag.bound,
                node_budget: opts.pad_node_budget,
            },
            skeleton_limit: opts.skeleton_limit,
        };
        let mut exhaustive = true;
        let mut open = Vec::new();
        for (state, sets) in &roots.roots {
            match decide_flat(cs, &flat, *state, fin, psi, sets.as_ref(), &fopts) {
                FlatVerdict::Sat { model, .. } => {
                    let lens: Vec<u64> = p.vars.iter().map(|v| model.get(v).unwrap_or(0)).collect();
                    diag.skeletons += 1;
                    return Ok(sat_with_witness(p, lens, diag));
                }
                FlatVerdict::NoModelFound {
                    skeletons,
                    partial,
                    exhaustive: e,
                    ..
                } => {
                    diag.skeletons += skeletons;
                    if partial {
                        diag.notes.push("skeleton limit reached".into());
                    }
                    if !e {
                        exhaustive = false;
                        if let Ok((qs, _)) = skeleton_queries(cs, &flat, *state, fin, psi, sets.as_ref(), opts.skeleton_limit) {
                            open.extend(qs);
                        }
                    }
                }
                FlatVerdict::Unsupported(reason) => unreachable!("checked before: {reason}"),
            }
        }
        diag.exhaustive = exhaustive;
        if exhaustive {
            return Ok(Verdict::new(Status::Unsat, diag));
        }
        diag.notes.push(format!("no model with values up to {}", diag.bound));
        if syntactic_box(&p.theta(), &p.vars).is_none() {
            let mut v = Verdict::new(Status::Unknown, diag);
            v.open_queries = open;
            return Ok(v);
        }
        diag.notes.push("falling back to the concrete search over the length box".into());
    }

    diag.route = "concrete".into();
    let boxed = syntactic_box(&p.theta(), &p.vars);
    let limits: Vec<u64> = match &boxed {
        Some(b) => b.clone(),
        None => vec![diag.bound; p.vars.len()],
    };
    let mut lens = vec![0u64; p.vars.len()];
    loop {
        let mu: BTreeMap<String, u64> = p.vars.iter().cloned().zip(lens.iter().copied()).collect();
        if eval(psi, &mu, 0).is_ok_and(Truth::is_true) {
            for (state, sets) in &roots.roots {
                let admitted = sets.as_ref().is_none_or(|s| s.iter().all(|(x, set)| set.contains(lens[x.index()])));
                if admitted && cs.reach_eps(&Config { state: *state, values: lens.clone() }) {
                    return Ok(sat_with_witness(p, lens, diag));
                }
            }
        }
        let mut i = lens.len();
        loop {
            if i == 0 {
                diag.exhaustive = boxed.is_some();
                if boxed.is_some() {
                    return Ok(Verdict::new(Status::Unsat, diag));
                }
                diag.notes.push(format!("no run with lengths up to {}", diag.bound));
                return Ok(Verdict::new(Status::Unknown, diag));
            }
            i -= 1;
            if lens[i] < limits[i] {
                lens[i] += 1;
                break;
            }
            lens[i] = 0;
        }
    }
}

fn sat_with_witness(p: &Problem, lens: Vec<u64>, mut diag: Diagnostics) -> Verdict {
    let model: BTreeMap<String, u64> = p.vars.iter().cloned().zip(lens.iter().copied()).collect();
    let mut v = Verdict::new(Status::Sat, Diagnostics::default());
    if lens.iter().sum::<u64>() <= WITNESS_LENGTH_LIMIT {
        match first_with_lengths(p, &lens) {
            Some(words) => v.witness = Some(p.vars.iter().cloned().zip(words).collect()),
            None => {
                diag.notes.push("length model is not realized by any solution".into());
                v.status = Status::Unknown;
            }
        }
    } else {
        diag.notes.push("lengths exceed the witness limit; model only".into());
    }
    v.model = Some(model);
    v.diagnostics = diag;
    v
}
