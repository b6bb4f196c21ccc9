//! Nielsen transformation: one-step rewrites of quadratic equations, the
//! finite proof graph, satisfiability and solution checking.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::terms::{Equation, Side, Symbol, Var};

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// The leading variable of `side` is guessed empty.
    EmptyPrefix { side: Side, var: Var },
    /// Equal leading symbols are dropped.
    P1,
    /// `a w₁ = β w₂` with `β := aβ`.
    P2 { constant: char, var: Var },
    /// `α w₁ = b w₂` with `α := bα`.
    P3 { var: Var, constant: char },
    /// Leading variables: `extended := prefix · extended`.
    P4 { prefix: Var, extended: Var },
}

impl Rule {
    pub fn label(&self, names: &[String]) -> String {
        let n = |v: &Var| names.get(v.index()).cloned().unwrap_or_else(|| format!("v{}", v.0));
        match self {
            Rule::EmptyPrefix { var, .. } => format!("{}=ε", n(var)),
            Rule::P1 => "P1".to_string(),
            Rule::P2 { constant, var } => format!("P2 {0}:={constant}{0}", n(var)),
            Rule::P3 { var, constant } => format!("P3 {0}:={constant}{0}", n(var)),
            Rule::P4 { prefix, extended } => format!("P4 {0}:={1}{0}", n(extended), n(prefix)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteStep {
    pub rule: Rule,
    pub source: Equation,
    pub target: Equation,
}

#[derive(Debug, Error, Clone)]
pub enum NielsenError {
    #[error("equation is not quadratic")]
    NotQuadratic,
    #[error("proof graph exceeded the node budget of {budget}")]
    Budget { budget: usize, partial: Box<ProofGraph> },
}

fn erase(eq: &Equation, v: Var) -> Equation {
    eq.substitute(v, &[])
}

/// `E[prefix·v / v]`.
fn extend(w: &[Symbol], v: Var, prefix: Symbol) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(w.len() + 1);
    for &s in w {
        if s == Symbol::Var(v) {
            out.push(prefix);
        }
        out.push(s);
    }
    out
}

/// All one-step rewrites of a quadratic equation.
pub fn successors(eq: &Equation) -> Result<Vec<RewriteStep>, NielsenError> {
    if !eq.is_quadratic() {
        return Err(NielsenError::NotQuadratic);
    }
    Ok(rewrite(eq)
        .into_iter()
        .map(|(rule, target)| RewriteStep {
            rule,
            source: eq.clone(),
            target,
        })
        .collect())
}

pub(crate) fn rewrite(eq: &Equation) -> Vec<(Rule, Equation)> {
    let mut out = Vec::new();
    let (Some(&alpha), Some(&beta)) = (eq.lhs.first(), eq.rhs.first()) else {
        // one side empty: only the other side's leading variable may vanish
        for side in [Side::Left, Side::Right] {
            if let Some(Symbol::Var(v)) = eq.side(side).first() {
                out.push((Rule::EmptyPrefix { side, var: *v }, erase(eq, *v)));
            }
        }
        return out;
    };
    if let Symbol::Var(a) = alpha {
        out.push((Rule::EmptyPrefix { side: Side::Left, var: a }, erase(eq, a)));
    }
    if let Symbol::Var(b) = beta {
        if alpha != beta {
            out.push((Rule::EmptyPrefix { side: Side::Right, var: b }, erase(eq, b)));
        }
    }
    let w1 = &eq.lhs[1..];
    let w2 = &eq.rhs[1..];
    if alpha == beta {
        out.push((Rule::P1, Equation::new(w1.to_vec(), w2.to_vec())));
        return out;
    }
    // α w₁ = β w₂ ⇒ w₁[αβ/β] = β w₂[αβ/β]
    let left_into_right = |b: Var| {
        let mut rhs = vec![Symbol::Var(b)];
        rhs.extend(extend(w2, b, alpha));
        Equation::new(extend(w1, b, alpha), rhs)
    };
    // α w₁ = β w₂ ⇒ α w₁[βα/α] = w₂[βα/α]
    let right_into_left = |a: Var| {
        let mut lhs = vec![Symbol::Var(a)];
        lhs.extend(extend(w1, a, beta));
        Equation::new(lhs, extend(w2, a, beta))
    };
    match (alpha, beta) {
        (Symbol::Const(c), Symbol::Var(b)) => out.push((Rule::P2 { constant: c, var: b }, left_into_right(b))),
        (Symbol::Var(a), Symbol::Const(c)) => out.push((Rule::P3 { var: a, constant: c }, right_into_left(a))),
        (Symbol::Var(a), Symbol::Var(b)) => {
            out.push((Rule::P4 { prefix: a, extended: b }, left_into_right(b)));
            out.push((Rule::P4 { prefix: b, extended: a }, right_into_left(a)));
        }
        (Symbol::Const(_), Symbol::Const(_)) => {}
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub rule: Rule,
    pub to: usize,
}

/// Equations reachable from the root (node 0) with all rewrite steps.
#[derive(Clone, Debug, Default)]
pub struct ProofGraph {
    pub nodes: IndexSet<Equation>,
    pub edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
}

impl ProofGraph {
    pub fn root(&self) -> &Equation {
        &self.nodes[0]
    }

    pub fn node(&self, i: usize) -> &Equation {
        &self.nodes[i]
    }

    pub fn index_of(&self, eq: &Equation) -> Option<usize> {
        self.nodes.get_index_of(eq)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edges leaving node `i`, in creation order.
    pub fn out_edges(&self, i: usize) -> impl Iterator<Item = &Edge> {
        self.out[i].iter().map(|&e| &self.edges[e])
    }

    pub fn trivial_node(&self) -> Option<usize> {
        self.index_of(&Equation::empty())
    }

    pub fn to_dot(&self, names: &[String]) -> String {
        let mut s = String::from("digraph proof {\n  node [shape=box];\n");
        for (i, eq) in self.nodes.iter().enumerate() {
            writeln!(s, "  n{i} [label=\"{}\"];", dot_escape(&eq.render(names))).unwrap();
        }
        for e in &self.edges {
            writeln!(s, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, dot_escape(&e.rule.label(names))).unwrap();
        }
        s.push_str("}\n");
        s
    }
}

pub(crate) fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Breadth-first closure of `root` under [`successors`].
pub fn proof_graph(root: &Equation, budget: usize) -> Result<ProofGraph, NielsenError> {
    if !root.is_quadratic() {
        return Err(NielsenError::NotQuadratic);
    }
    let mut g = ProofGraph::default();
    g.nodes.insert(root.clone());
    g.out.push(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let steps = rewrite(&g.nodes[i]);
        for (rule, target) in steps {
            let j = match g.nodes.get_index_of(&target) {
                Some(j) => j,
                None => {
                    if g.nodes.len() >= budget {
                        return Err(NielsenError::Budget {
                            budget,
                            partial: Box::new(g),
                        });
                    }
                    let (j, _) = g.nodes.insert_full(target);
                    g.out.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            g.out[i].push(g.edges.len());
            g.edges.push(Edge { from: i, rule, to: j });
        }
    }
    Ok(g)
}

/// Whether `ε = ε` is reachable from `root`.
pub fn is_satisfiable(root: &Equation, budget: usize) -> Result<bool, NielsenError> {
    Ok(proof_graph(root, budget)?.trivial_node().is_some())
}

/// Whether `sigma` equates both sides; false if a variable is unassigned.
pub fn check_solution(eq: &Equation, sigma: &BTreeMap<Var, String>) -> bool {
    matches!(eq.apply(sigma), Some((l, r)) if l == r)
}
