//! Counter systems with ID/ZERO/DEC/SUB guards, the compilation of proof
//! graphs into counter systems, and concrete reachability.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::automata::{matrix_language_length_set, ProgressionSet};
use crate::nielsen::{dot_escape, proof_graph, NielsenError, Rule};
use crate::pad::{LinTerm, PadFormula};
use crate::regnielsen::{reg_graph, RegConfig, RegContext, RegError};
use crate::terms::{Equation, Problem, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Guard {
    Id,
    /// `y = 0`, values unchanged.
    Zero(Var),
    /// `y > 0 ∧ y′ = y − 1`.
    Dec(Var),
    /// `Sub(y, z)`: `0 < z ≤ y ∧ y′ = y − z`.
    Sub(Var, Var),
}

impl Guard {
    pub fn from_rule(rule: Rule) -> Guard {
        match rule {
            Rule::EmptyPrefix { var, .. } => Guard::Zero(var),
            Rule::P1 => Guard::Id,
            Rule::P2 { var, .. } | Rule::P3 { var, .. } => Guard::Dec(var),
            Rule::P4 { prefix, extended } => Guard::Sub(extended, prefix),
        }
    }

    /// The counter this guard decreases.
    pub fn reduced(&self) -> Option<Var> {
        match self {
            Guard::Dec(y) | Guard::Sub(y, _) => Some(*y),
            _ => None,
        }
    }

    pub fn apply(&self, v: &[u64]) -> Option<Vec<u64>> {
        match *self {
            Guard::Id => Some(v.to_vec()),
            Guard::Zero(y) => (v[y.index()] == 0).then(|| v.to_vec()),
            Guard::Dec(y) => {
                let mut w = v.to_vec();
                w[y.index()] = v[y.index()].checked_sub(1)?;
                Some(w)
            }
            Guard::Sub(y, z) => {
                let (vy, vz) = (v[y.index()], v[z.index()]);
                if vz == 0 || vz > vy {
                    return None;
                }
                let mut w = v.to_vec();
                w[y.index()] = vy - vz;
                Some(w)
            }
        }
    }

    /// The guard as a formula relating `pre` to `post`, both indexed by
    /// counter.
    pub fn to_formula(&self, pre: &[String], post: &[String]) -> PadFormula {
        let x = |i: usize| LinTerm::var(pre[i].clone());
        let x2 = |i: usize| LinTerm::var(post[i].clone());
        let frame = |skip: Option<usize>| {
            (0..pre.len())
                .filter(move |&i| Some(i) != skip)
                .map(move |i| PadFormula::eq(x2(i), x(i)))
        };
        match *self {
            Guard::Id => PadFormula::and(frame(None)),
            Guard::Zero(y) => PadFormula::and(std::iter::once(PadFormula::eq(x(y.index()), 0)).chain(frame(None))),
            Guard::Dec(y) => {
                let y = y.index();
                PadFormula::and(
                    [PadFormula::ge(x(y), 1), PadFormula::eq(x2(y), x(y) - LinTerm::constant(1))]
                        .into_iter()
                        .chain(frame(Some(y))),
                )
            }
            Guard::Sub(y, z) => {
                let (y, z) = (y.index(), z.index());
                PadFormula::and(
                    [
                        PadFormula::ge(x(z), 1),
                        PadFormula::le(x(z), x(y)),
                        PadFormula::eq(x2(y), x(y) - x(z)),
                    ]
                    .into_iter()
                    .chain(frame(Some(y))),
                )
            }
        }
    }

    pub fn label(&self, names: &[String]) -> String {
        let n = |v: &Var| names[v.index()].as_str();
        match self {
            Guard::Id => "ID".to_string(),
            Guard::Zero(y) => format!("ZERO({})", n(y)),
            Guard::Dec(y) => format!("DEC({})", n(y)),
            Guard::Sub(y, z) => format!("SUB({},{})", n(y), n(z)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub guard: Guard,
    pub to: usize,
    /// Variables leaving the equation on this step, with the lengths their
    /// monoid element admits. The guard additionally requires membership.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub leaving: Vec<(Var, ProgressionSet)>,
}

impl Transition {
    pub fn new(from: usize, guard: Guard, to: usize) -> Self {
        Transition {
            from,
            guard,
            to,
            leaving: Vec::new(),
        }
    }

    pub fn apply(&self, v: &[u64]) -> Option<Vec<u64>> {
        if !self.leaving.iter().all(|(x, s)| s.contains(v[x.index()])) {
            return None;
        }
        self.guard.apply(v)
    }

    pub fn to_formula(&self, pre: &[String], post: &[String]) -> PadFormula {
        PadFormula::and(
            self.leaving
                .iter()
                .map(|(x, s)| s.to_formula(&pre[x.index()]))
                .chain([self.guard.to_formula(pre, post)]),
        )
    }

    pub fn label(&self, names: &[String]) -> String {
        let mut s = self.guard.label(names);
        for (x, set) in &self.leaving {
            write!(s, " ∧ {}∈{}", names[x.index()], set).unwrap();
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Config {
    pub state: usize,
    pub values: Vec<u64>,
}

/// Control states of type `S` with one counter per problem variable.
#[derive(Clone, Debug)]
pub struct CounterSystem<S> {
    pub counters: Vec<String>,
    pub states: IndexSet<S>,
    pub transitions: Vec<Transition>,
    /// States whose equation is `ε = ε`.
    pub finals: Vec<usize>,
    out: Vec<Vec<usize>>,
}

impl<S> CounterSystem<S> {
    pub fn new(counters: Vec<String>, states: IndexSet<S>, transitions: Vec<Transition>, finals: Vec<usize>) -> Self {
        let mut out = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            out[t.from].push(i);
        }
        CounterSystem {
            counters,
            states,
            transitions,
            finals,
            out,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Indices of the transitions leaving `state`.
    pub fn out(&self, state: usize) -> &[usize] {
        &self.out[state]
    }

    pub fn step(&self, c: &Config) -> Vec<Config> {
        self.out[c.state]
            .iter()
            .filter_map(|&t| {
                let t = &self.transitions[t];
                t.apply(&c.values).map(|values| Config { state: t.to, values })
            })
            .collect()
    }

    /// Whether a final state is reachable from `c0`. Every step either
    /// shortens the equation or lowers a counter, so the search is finite.
    pub fn reach_eps(&self, c0: &Config) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![c0.clone()];
        while let Some(c) = stack.pop() {
            if self.finals.contains(&c.state) {
                return true;
            }
            for d in self.step(&c) {
                if !seen.contains(&d) {
                    seen.insert(d.clone());
                    stack.push(d);
                }
            }
        }
        false
    }

    pub fn to_dot(&self, label: impl Fn(&S) -> String) -> String {
        let mut s = String::from("digraph ca {\n  node [shape=box];\n");
        for (i, st) in self.states.iter().enumerate() {
            let extra = if self.finals.contains(&i) { ", peripheries=2" } else { "" };
            writeln!(s, "  n{i} [label=\"{}\"{extra}];", dot_escape(&label(st)).replace('\n', "\\n")).unwrap();
        }
        for t in &self.transitions {
            writeln!(s, "  n{} -> n{} [label=\"{}\"];", t.from, t.to, dot_escape(&t.label(&self.counters))).unwrap();
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self, label: impl Fn(&S) -> String) -> serde_json::Value {
        json!({
            "counters": self.counters,
            "states": self.states.iter().map(label).collect::<Vec<_>>(),
            "finals": self.finals,
            "transitions": self.transitions.iter().map(|t| json!({
                "from": t.from,
                "to": t.to,
                "guard": t.label(&self.counters),
            })).collect::<Vec<_>>(),
        })
    }
}

/// `CA(E)` over the proof graph of the problem's equation. State 0 is the
/// equation itself.
pub fn build_ca(problem: &Problem, budget: usize) -> Result<CounterSystem<Equation>, NielsenError> {
    let g = proof_graph(&problem.equation, budget)?;
    let transitions = g.edges.iter().map(|e| Transition::new(e.from, Guard::from_rule(e.rule), e.to)).collect();
    let finals = g.trivial_node().into_iter().collect();
    Ok(CounterSystem::new(problem.vars.clone(), g.nodes, transitions, finals))
}

/// An initial state of `CA(E,S)` and the lengths its map admits.
#[derive(Clone, Debug)]
pub struct RegInitial {
    pub state: usize,
    /// Length set of `{w : φ(w) = f(x)}` per variable; for variables not in
    /// the equation, the lengths of words meeting all constraints on them.
    pub lengths: BTreeMap<Var, ProgressionSet>,
}

#[derive(Clone, Debug)]
pub struct RegCounterSystem {
    pub system: CounterSystem<RegConfig>,
    pub context: RegContext,
    pub initial: Vec<RegInitial>,
}

/// `CA(E,S)`: reachable configurations from every consistent initial map.
pub fn build_ca_reg(problem: &Problem, cap: usize, budget: usize) -> Result<RegCounterSystem, RegError> {
    let ctx = RegContext::new(problem, cap)?;
    let g = reg_graph(&problem.equation, &ctx, budget)?;
    let present = problem.equation.vars();

    let mut absent = BTreeMap::new();
    for x in problem.all_vars().filter(|x| !present.contains(x)) {
        let mut set = ProgressionSet::empty();
        for m in ctx.consistent_elements(x) {
            set.progressions.extend(matrix_language_length_set(&ctx.monoid, m)?.progressions);
        }
        set.normalize();
        absent.insert(x, set);
    }

    let mut initial = Vec::new();
    for &root in &g.roots {
        let mut lengths = absent.clone();
        for (&x, &m) in &g.nodes[root].f {
            lengths.insert(x, matrix_language_length_set(&ctx.monoid, m)?);
        }
        initial.push(RegInitial { state: root, lengths });
    }

    // A variable leaving the equation keeps its counter, which must then be
    // the length of some word with its current monoid element.
    let mut sets: BTreeMap<usize, ProgressionSet> = BTreeMap::new();
    let mut transitions = Vec::with_capacity(g.edges.len());
    for e in &g.edges {
        let guard = Guard::from_rule(e.rule);
        let (src, dst) = (&g.nodes[e.from], &g.nodes[e.to]);
        let mut t = Transition::new(e.from, guard, e.to);
        for x in src.equation.vars().difference(&dst.equation.vars()) {
            if guard == Guard::Zero(*x) {
                continue;
            }
            let m = src.f[x];
            if !sets.contains_key(&m) {
                sets.insert(m, matrix_language_length_set(&ctx.monoid, m)?);
            }
            t.leaving.push((*x, sets[&m].clone()));
        }
        transitions.push(t);
    }
    let finals = g.final_node().into_iter().collect();
    Ok(RegCounterSystem {
        system: CounterSystem::new(problem.vars.clone(), g.nodes, transitions, finals),
        context: ctx,
        initial,
    })
}
