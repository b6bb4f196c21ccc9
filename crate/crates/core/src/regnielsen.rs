//! Nielsen rewriting over pairs `(E, f)` where `f` assigns each variable of
//! `E` a realizable characteristic matrix.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{AutomataError, BoolMatrix, Monoid, UnionAutomaton};
use crate::nielsen::{dot_escape, rewrite, Edge, Rule, RewriteStep};
use crate::terms::{Equation, Problem, Var};

/// Multiplication tables are precomputed up to this many monoid elements.
const TABLE_LIMIT: usize = 1024;

/// An equation with a monoid element (by index) for each of its variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegConfig {
    pub equation: Equation,
    pub f: BTreeMap<Var, usize>,
}

impl RegConfig {
    pub fn is_final(&self) -> bool {
        self.equation.is_trivial()
    }

    fn restrict(mut self) -> Self {
        let vars = self.equation.vars();
        self.f.retain(|v, _| vars.contains(v));
        self
    }

    pub fn render(&self, names: &[String], monoid: &Monoid) -> String {
        let mut s = self.equation.render(names);
        for (v, m) in &self.f {
            write!(s, "\n{}: {}", names[v.index()], monoid.get(*m).render()).unwrap();
        }
        s
    }
}

#[derive(Debug, Error, Clone)]
pub enum RegError {
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error("equation is not quadratic")]
    NotQuadratic,
    #[error("configuration graph exceeded the node budget of {0}")]
    Budget(usize),
}

/// The union automaton of a problem together with its realizable monoid.
#[derive(Clone, Debug)]
pub struct RegContext {
    pub automaton: UnionAutomaton,
    pub monoid: Monoid,
    table: Option<Vec<u32>>,
}

impl RegContext {
    /// Fails if the monoid closure hits `cap`.
    pub fn new(problem: &Problem, cap: usize) -> Result<Self, AutomataError> {
        let automaton = UnionAutomaton::from_problem(problem);
        let monoid = Monoid::realizable(&automaton, cap);
        if monoid.truncated {
            return Err(AutomataError::MonoidCap(cap));
        }
        let n = monoid.len();
        let table = (n <= TABLE_LIMIT).then(|| {
            let mut t = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    t.push(monoid.mul(i, j).expect("closed under product") as u32);
                }
            }
            t
        });
        Ok(RegContext { automaton, monoid, table })
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        match &self.table {
            Some(t) => t[i * self.monoid.len() + j] as usize,
            None => self.monoid.mul(i, j).expect("closed under product"),
        }
    }

    pub fn letter(&self, a: char) -> usize {
        self.monoid.step(self.monoid.identity(), a).expect("letter in alphabet")
    }

    /// All `m` with `left · m = target`.
    pub fn right_divisors(&self, left: usize, target: usize) -> Vec<usize> {
        (0..self.monoid.len()).filter(|&m| self.mul(left, m) == target).collect()
    }

    /// Monoid elements consistent with every constraint on `x`.
    pub fn consistent_elements(&self, x: Var) -> Vec<usize> {
        (0..self.monoid.len())
            .filter(|&m| self.automaton.consistent_for(x, self.monoid.get(m)))
            .collect()
    }

    /// Every consistent `f` on the variables of `eq`, in lexicographic order
    /// of matrix indices over increasing variables.
    pub fn initial_maps(&self, eq: &Equation) -> Vec<BTreeMap<Var, usize>> {
        let mut maps = vec![BTreeMap::new()];
        for x in eq.vars() {
            let choices = self.consistent_elements(x);
            maps = maps
                .into_iter()
                .flat_map(|f| {
                    choices.iter().map(move |&m| {
                        let mut g = f.clone();
                        g.insert(x, m);
                        g
                    })
                })
                .collect();
        }
        maps
    }

    /// Whether each constrained variable absent from `eq` has a word
    /// meeting all of its constraints.
    pub fn absent_vars_satisfiable(&self, eq: &Equation) -> bool {
        let present = eq.vars();
        self.automaton
            .constrained_vars()
            .into_iter()
            .filter(|x| !present.contains(x))
            .all(|x| !self.consistent_elements(x).is_empty())
    }

    pub fn matrix(&self, i: usize) -> &BoolMatrix {
        self.monoid.get(i)
    }
}

/// All `(E', f')` with `(E, f) ⇒ (E', f')`.
pub fn successors_reg(cfg: &RegConfig, ctx: &RegContext) -> Vec<(RewriteStep, RegConfig)> {
    let id = ctx.monoid.identity();
    let mut out = Vec::new();
    for (rule, target) in rewrite(&cfg.equation) {
        let step = RewriteStep {
            rule,
            source: cfg.equation.clone(),
            target: target.clone(),
        };
        let mut push = |f: BTreeMap<Var, usize>| {
            let next = RegConfig {
                equation: target.clone(),
                f,
            }
            .restrict();
            out.push((step.clone(), next));
        };
        match rule {
            Rule::EmptyPrefix { var, .. } => {
                if cfg.f[&var] == id {
                    push(cfg.f.clone());
                }
            }
            Rule::P1 => push(cfg.f.clone()),
            Rule::P2 { constant: c, var } | Rule::P3 { var, constant: c } => {
                for m in ctx.right_divisors(ctx.letter(c), cfg.f[&var]) {
                    let mut f = cfg.f.clone();
                    f.insert(var, m);
                    push(f);
                }
            }
            Rule::P4 { prefix, extended } => {
                for m in ctx.right_divisors(cfg.f[&prefix], cfg.f[&extended]) {
                    let mut f = cfg.f.clone();
                    f.insert(extended, m);
                    push(f);
                }
            }
        }
    }
    out
}

/// Configurations reachable from every consistent initial map.
#[derive(Clone, Debug, Default)]
pub struct RegGraph {
    pub nodes: IndexSet<RegConfig>,
    pub edges: Vec<Edge>,
    /// Initial configurations, one per consistent map.
    pub roots: Vec<usize>,
    out: Vec<Vec<usize>>,
}

impl RegGraph {
    pub fn out_edges(&self, i: usize) -> impl Iterator<Item = &Edge> {
        self.out[i].iter().map(|&e| &self.edges[e])
    }

    pub fn final_node(&self) -> Option<usize> {
        self.nodes.get_index_of(&RegConfig {
            equation: Equation::empty(),
            f: BTreeMap::new(),
        })
    }

    /// Nodes from which the final configuration is reachable.
    pub fn co_reachable(&self) -> BTreeSet<usize> {
        let mut pred = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            pred[e.to].push(e.from);
        }
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = self.final_node().into_iter().collect();
        while let Some(i) = stack.pop() {
            if seen.insert(i) {
                stack.extend(pred[i].iter().copied());
            }
        }
        seen
    }

    pub fn to_dot(&self, names: &[String], monoid: &Monoid) -> String {
        let mut s = String::from("digraph reg {\n  node [shape=box];\n");
        for (i, cfg) in self.nodes.iter().enumerate() {
            let shape = if self.roots.contains(&i) { ", penwidth=2" } else { "" };
            writeln!(s, "  n{i} [label=\"{}\"{shape}];", dot_escape(&cfg.render(names, monoid)).replace('\n', "\\n")).unwrap();
        }
        for e in &self.edges {
            writeln!(s, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, dot_escape(&e.rule.label(names))).unwrap();
        }
        s.push_str("}\n");
        s
    }
}

pub fn reg_graph(eq: &Equation, ctx: &RegContext, budget: usize) -> Result<RegGraph, RegError> {
    if !eq.is_quadratic() {
        return Err(RegError::NotQuadratic);
    }
    let mut g = RegGraph::default();
    let mut queue = VecDeque::new();
    for f in ctx.initial_maps(eq) {
        let (i, fresh) = g.nodes.insert_full(RegConfig { equation: eq.clone(), f });
        if fresh {
            g.out.push(Vec::new());
            queue.push_back(i);
        }
        g.roots.push(i);
    }
    while let Some(i) = queue.pop_front() {
        let cfg = g.nodes[i].clone();
        for (step, next) in successors_reg(&cfg, ctx) {
            let j = match g.nodes.get_index_of(&next) {
                Some(j) => j,
                None => {
                    if g.nodes.len() >= budget {
                        return Err(RegError::Budget(budget));
                    }
                    let (j, _) = g.nodes.insert_full(next);
                    g.out.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            g.out[i].push(g.edges.len());
            g.edges.push(Edge { from: i, rule: step.rule, to: j });
        }
    }
    Ok(g)
}

/// Satisfiability of the equation together with its regular constraints.
/// The length constraint is ignored.
pub fn is_satisfiable_reg(problem: &Problem, cap: usize, budget: usize) -> Result<bool, RegError> {
    let ctx = RegContext::new(problem, cap)?;
    if !ctx.absent_vars_satisfiable(&problem.equation) {
        return Ok(false);
    }
    let g = reg_graph(&problem.equation, &ctx, budget)?;
    Ok(g.final_node().is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::DEFAULT_MONOID_CAP;
    use crate::nielsen::{proof_graph, DEFAULT_NODE_BUDGET};
    use crate::parse::parse_problem;

    #[test]
    fn constrained_root_reaches_final() {
        let p = parse_problem("vars: x; eq: x a b = a b x; re: x in /aba*/;").unwrap();
        let ctx = RegContext::new(&p, DEFAULT_MONOID_CAP).unwrap();
        let ab = ctx.monoid.index_of(&ctx.automaton.char_matrix("ab").unwrap()).unwrap();
        let g = reg_graph(&p.equation, &ctx, DEFAULT_NODE_BUDGET).unwrap();
        let start = g.nodes.get_index_of(&RegConfig { equation: p.equation.clone(), f: [(Var(0), ab)].into() }).unwrap();
        assert!(g.roots.contains(&start));
        assert!(g.co_reachable().contains(&start));
        assert!(is_satisfiable_reg(&p, DEFAULT_MONOID_CAP, DEFAULT_NODE_BUDGET).unwrap());
    }

    #[test]
    fn unsatisfiable_prefix() {
        let p = parse_problem("vars: x; eq: x a b = a b x; re: x in /b(a|b)*/;").unwrap();
        assert!(!is_satisfiable_reg(&p, DEFAULT_MONOID_CAP, DEFAULT_NODE_BUDGET).unwrap());
    }

    #[test]
    fn final_config_has_no_successors() {
        let p = parse_problem("vars: ; eq: = ;").unwrap();
        let ctx = RegContext::new(&p, DEFAULT_MONOID_CAP).unwrap();
        let cfg = RegConfig { equation: Equation::empty(), f: BTreeMap::new() };
        assert!(successors_reg(&cfg, &ctx).is_empty());
    }

    #[test]
    fn branch_count_matches_direct_filter() {
        let p = parse_problem("vars: x y; eq: a x = y b; re: x in /(a|b)*b/; re: y in /a(a|b)*/;").unwrap();
        let ctx = RegContext::new(&p, DEFAULT_MONOID_CAP).unwrap();
        for f in ctx.initial_maps(&p.equation) {
            let cfg = RegConfig { equation: p.equation.clone(), f: f.clone() };
            let succ = successors_reg(&cfg, &ctx);
            // P2 on y with constant a
            let phi_a = ctx.automaton.char_matrix("a").unwrap();
            let expect = (0..ctx.monoid.len())
                .filter(|&m| phi_a.mul(ctx.matrix(m)) == *ctx.matrix(f[&Var(1)]))
                .count();
            let got = succ.iter().filter(|(s, _)| matches!(s.rule, Rule::P2 { .. })).count();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn unconstrained_matches_plain() {
        for src in ["vars: x; eq: x a b = a b x;", "vars: x; eq: a x = x b;", "vars: x y z; eq: x y = y z;"] {
            let p = parse_problem(src).unwrap();
            let plain = proof_graph(&p.equation, DEFAULT_NODE_BUDGET).unwrap().trivial_node().is_some();
            assert_eq!(is_satisfiable_reg(&p, DEFAULT_MONOID_CAP, DEFAULT_NODE_BUDGET).unwrap(), plain);
        }
    }

    #[test]
    fn projection_is_subgraph_of_plain() {
        let p = parse_problem("vars: x y z; eq: x y = y z; re: x in /#(a|b)*/; re: y in /#(a|b)*/;").unwrap();
        let ctx = RegContext::new(&p, DEFAULT_MONOID_CAP).unwrap();
        let g = reg_graph(&p.equation, &ctx, DEFAULT_NODE_BUDGET).unwrap();
        let plain = proof_graph(&p.equation, DEFAULT_NODE_BUDGET).unwrap();
        for e in &g.edges {
            let (s, t) = (&g.nodes[e.from].equation, &g.nodes[e.to].equation);
            let ps = plain.index_of(s).unwrap();
            let pt = plain.index_of(t).unwrap();
            assert!(plain.out_edges(ps).any(|pe| pe.to == pt && pe.rule == e.rule));
        }
    }
}
