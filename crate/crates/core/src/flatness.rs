//! Control-structure analysis of counter systems: strongly connected
//! components, flatness, simple cycles, 1-variable-reducing cycles and
//! skeletons.

use std::collections::{BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::counters::{CounterSystem, Guard};
use crate::terms::Var;

pub const DEFAULT_SKELETON_LIMIT: usize = 10_000;
pub const DEFAULT_CYCLE_CAP: usize = 10_000;

/// A simple cycle given by its transitions, starting and ending at
/// `states[0]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleInfo {
    pub states: Vec<usize>,
    pub transitions: Vec<usize>,
    pub guards: Vec<Guard>,
    pub reduced_counter: Option<Var>,
}

impl CycleInfo {
    pub fn new<S>(cs: &CounterSystem<S>, transitions: Vec<usize>) -> Self {
        let states = transitions.iter().map(|&t| cs.transitions[t].from).collect();
        let guards: Vec<Guard> = transitions.iter().map(|&t| cs.transitions[t].guard).collect();
        let plain = transitions.iter().all(|&t| cs.transitions[t].leaving.is_empty());
        let reduced_counter = cycle_check(&guards).filter(|_| plain);
        CycleInfo {
            states,
            transitions,
            guards,
            reduced_counter,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Position of `state` on the cycle.
    pub fn position(&self, state: usize) -> Option<usize> {
        self.states.iter().position(|&s| s == state)
    }

    /// Transitions from `p` forward to `q` along the cycle (empty if equal).
    pub fn path(&self, p: usize, q: usize) -> Option<Vec<usize>> {
        let (i, j) = (self.position(p)?, self.position(q)?);
        let n = self.len();
        Some((0..(j + n - i) % n).map(|k| self.transitions[(i + k) % n]).collect())
    }
}

/// The counter `y` if every guard is `DEC(y)` or `SUB(y, z)`.
pub fn cycle_check(guards: &[Guard]) -> Option<Var> {
    let y = guards.first()?.reduced()?;
    guards.iter().all(|g| g.reduced() == Some(y)).then_some(y)
}

/// Strongly connected components in topological order (sources first),
/// with the component index of every state.
#[derive(Clone, Debug)]
pub struct Sccs {
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
}

pub fn sccs<S>(cs: &CounterSystem<S>) -> Sccs {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(cs.num_states(), cs.transitions.len());
    for _ in 0..cs.num_states() {
        g.add_node(());
    }
    for t in &cs.transitions {
        g.add_edge(NodeIndex::new(t.from), NodeIndex::new(t.to), ());
    }
    let mut components: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            c.sort_unstable();
            c
        })
        .collect();
    components.reverse();
    let mut component_of = vec![0; cs.num_states()];
    for (i, c) in components.iter().enumerate() {
        for &s in c {
            component_of[s] = i;
        }
    }
    Sccs {
        components,
        component_of,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatWitness {
    pub state: usize,
    pub cycles: [Vec<usize>; 2],
}

#[derive(Clone, Debug)]
pub struct Flatness {
    pub flat: bool,
    pub witness: Option<FlatWitness>,
    /// The simple cycle of each nontrivial component, if flat.
    pub cycles: Vec<CycleInfo>,
}

/// A strongly connected component lies on one simple cycle per node exactly
/// when it has as many internal transitions as nodes.
pub fn is_flat<S>(cs: &CounterSystem<S>) -> Flatness {
    let sc = sccs(cs);
    let mut cycles = Vec::new();
    for comp in &sc.components {
        let c = sc.component_of[comp[0]];
        let internal: Vec<usize> = comp
            .iter()
            .flat_map(|&s| cs.out(s).iter().copied())
            .filter(|&t| sc.component_of[cs.transitions[t].to] == c)
            .collect();
        if internal.is_empty() {
            continue;
        }
        if internal.len() > comp.len() {
            let witness = non_flat_witness(cs, &sc, c, comp);
            return Flatness {
                flat: false,
                witness: Some(witness),
                cycles: Vec::new(),
            };
        }
        let start = comp[0];
        let mut path = Vec::new();
        let mut s = start;
        loop {
            let t = cs.out(s).iter().copied().find(|&t| sc.component_of[cs.transitions[t].to] == c).unwrap();
            path.push(t);
            s = cs.transitions[t].to;
            if s == start {
                break;
            }
        }
        cycles.push(CycleInfo::new(cs, path));
    }
    Flatness {
        flat: true,
        witness: None,
        cycles,
    }
}

/// A node with two internal out-transitions, each closed into a simple
/// cycle by a shortest path back.
fn non_flat_witness<S>(cs: &CounterSystem<S>, sc: &Sccs, c: usize, comp: &[usize]) -> FlatWitness {
    let inside = |t: usize| sc.component_of[cs.transitions[t].to] == c;
    let state = comp
        .iter()
        .copied()
        .find(|&s| cs.out(s).iter().filter(|&&t| inside(t)).count() >= 2)
        .expect("more internal transitions than nodes");
    let firsts: Vec<usize> = cs.out(state).iter().copied().filter(|&t| inside(t)).take(2).collect();
    let close = |t0: usize| -> Vec<usize> {
        let mut prev: Vec<Option<usize>> = vec![None; cs.num_states()];
        let mut queue = VecDeque::from([cs.transitions[t0].to]);
        let mut seen = BTreeSet::from([cs.transitions[t0].to]);
        while let Some(s) = queue.pop_front() {
            if s == state {
                break;
            }
            for &t in cs.out(s) {
                let to = cs.transitions[t].to;
                if inside(t) && seen.insert(to) {
                    prev[to] = Some(t);
                    queue.push_back(to);
                }
            }
        }
        let mut back = Vec::new();
        let mut s = state;
        while s != cs.transitions[t0].to {
            let t = prev[s].unwrap();
            back.push(t);
            s = cs.transitions[t].from;
        }
        back.reverse();
        std::iter::once(t0).chain(back).collect()
    };
    FlatWitness {
        state,
        cycles: [close(firsts[0]), close(firsts[1])],
    }
}

/// All simple cycles, each reported once starting at its smallest state.
/// Stops after `cap` cycles; the flag reports truncation.
pub fn simple_cycles<S>(cs: &CounterSystem<S>, cap: usize) -> (Vec<Vec<usize>>, bool) {
    fn dfs<S>(cs: &CounterSystem<S>, start: usize, s: usize, on: &mut Vec<bool>, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, cap: usize) -> bool {
        for &t in cs.out(s) {
            let to = cs.transitions[t].to;
            if to < start {
                continue;
            }
            path.push(t);
            if to == start {
                out.push(path.clone());
                if out.len() >= cap {
                    return true;
                }
            } else if !on[to] {
                on[to] = true;
                if dfs(cs, start, to, on, path, out, cap) {
                    return true;
                }
                on[to] = false;
            }
            path.pop();
        }
        false
    }
    let mut out = Vec::new();
    let mut on = vec![false; cs.num_states()];
    for start in 0..cs.num_states() {
        on[start] = true;
        if dfs(cs, start, start, &mut on, &mut Vec::new(), &mut out, cap) {
            return (out, true);
        }
        on[start] = false;
    }
    (out, false)
}

/// One component visited by a skeleton: entered at `entry`, left at `exit`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonPart {
    pub entry: usize,
    pub exit: usize,
    /// Index into [`Flatness::cycles`] of the component's cycle.
    pub cycle: Option<usize>,
}

/// `v₀ v₀′ e₁ v₁ v₁′ … e_k v_k v_k′`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skeleton {
    pub parts: Vec<SkeletonPart>,
    /// `bridges[i]` leads from `parts[i].exit` to `parts[i + 1].entry`.
    pub bridges: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Skeletons {
    pub skeletons: Vec<Skeleton>,
    pub truncated: bool,
}

/// Skeletons from `from` to `to` of a flat system, in depth-first order over
/// exit states and bridging transitions.
pub fn skeletons<S>(cs: &CounterSystem<S>, flat: &Flatness, from: usize, to: usize, limit: usize) -> Skeletons {
    let sc = sccs(cs);
    let mut cycle_of = vec![None; sc.components.len()];
    for (i, c) in flat.cycles.iter().enumerate() {
        cycle_of[sc.component_of[c.states[0]]] = Some(i);
    }
    let mut useful = vec![false; cs.num_states()];
    let mut pred = vec![Vec::new(); cs.num_states()];
    for t in &cs.transitions {
        pred[t.to].push(t.from);
    }
    let mut stack = vec![to];
    useful[to] = true;
    while let Some(s) = stack.pop() {
        for &p in &pred[s] {
            if !useful[p] {
                useful[p] = true;
                stack.push(p);
            }
        }
    }

    struct Walk<'a, S> {
        cs: &'a CounterSystem<S>,
        sc: &'a Sccs,
        cycle_of: &'a [Option<usize>],
        useful: &'a [bool],
        to: usize,
        limit: usize,
        out: Vec<Skeleton>,
        truncated: bool,
    }

    impl<S> Walk<'_, S> {
        fn go(&mut self, entry: usize, parts: &mut Vec<SkeletonPart>, bridges: &mut Vec<usize>) {
            let c = self.sc.component_of[entry];
            for &exit in &self.sc.components[c] {
                if self.truncated {
                    return;
                }
                if !self.useful[exit] {
                    continue;
                }
                parts.push(SkeletonPart {
                    entry,
                    exit,
                    cycle: self.cycle_of[c],
                });
                if exit == self.to {
                    if self.out.len() >= self.limit {
                        self.truncated = true;
                        parts.pop();
                        return;
                    }
                    self.out.push(Skeleton {
                        parts: parts.clone(),
                        bridges: bridges.clone(),
                    });
                }
                for &t in self.cs.out(exit) {
                    let next = self.cs.transitions[t].to;
                    if self.sc.component_of[next] == c || !self.useful[next] {
                        continue;
                    }
                    bridges.push(t);
                    self.go(next, parts, bridges);
                    bridges.pop();
                }
                parts.pop();
            }
        }
    }

    let mut w = Walk {
        cs,
        sc: &sc,
        cycle_of: &cycle_of,
        useful: &useful,
        to,
        limit,
        out: Vec::new(),
        truncated: false,
    };
    if useful[from] {
        w.go(from, &mut Vec::new(), &mut Vec::new());
    }
    Skeletons {
        skeletons: w.out,
        truncated: w.truncated,
    }
}
