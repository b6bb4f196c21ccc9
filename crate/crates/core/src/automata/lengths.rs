//! Length sets of regular languages as finite unions of arithmetic
//! progressions.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::matrix::{BoolMatrix, Bits};
use super::monoid::{AutomataError, Monoid};
use super::nfa::Nfa;
use crate::pad::{LinTerm, PadFormula};

/// `⋃ {offset + period·k : k ∈ ℕ}`; period 0 denotes the singleton.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProgressionSet {
    pub progressions: BTreeSet<(u64, u64)>,
}

impl ProgressionSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// All of ℕ.
    pub fn naturals() -> Self {
        Self::from_iter([(0, 1)])
    }

    pub fn is_empty(&self) -> bool {
        self.progressions.is_empty()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.progressions.iter().any(|&(o, p)| covers(o, p, n))
    }

    pub fn is_naturals(&self) -> bool {
        self.progressions.contains(&(0, 1))
    }

    /// Merges `{o} ∪ (o+p)+pℕ` into `o+pℕ` and removes progressions
    /// contained in another one.
    pub fn normalize(&mut self) {
        loop {
            let merge = self
                .progressions
                .iter()
                .find(|&&(o, p)| p > 0 && o >= p && self.progressions.contains(&(o - p, 0)))
                .copied();
            let Some((o, p)) = merge else { break };
            self.progressions.remove(&(o, p));
            self.progressions.remove(&(o - p, 0));
            self.progressions.insert((o - p, p));
        }
        let all: Vec<(u64, u64)> = self.progressions.iter().copied().collect();
        self.progressions = all
            .iter()
            .copied()
            .filter(|&a| !all.iter().any(|&b| b != a && subsumes(b, a)))
            .collect();
    }

    /// Membership of `var` as a formula: `var = o` or `∃k. var = o + p·k`.
    pub fn to_formula(&self, var: &str) -> PadFormula {
        let k = format!("{var}.k");
        PadFormula::or(self.progressions.iter().map(|&(o, p)| {
            let base = LinTerm::constant(o as i64);
            if p == 0 {
                PadFormula::eq(LinTerm::var(var), base)
            } else {
                PadFormula::exists([k.clone()], PadFormula::eq(LinTerm::var(var), base + LinTerm::scaled_var(&k, p as i64)))
            }
        }))
    }
}

impl FromIterator<(u64, u64)> for ProgressionSet {
    fn from_iter<I: IntoIterator<Item = (u64, u64)>>(iter: I) -> Self {
        let mut s = ProgressionSet {
            progressions: iter.into_iter().collect(),
        };
        s.normalize();
        s
    }
}

impl fmt::Display for ProgressionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self
            .progressions
            .iter()
            .map(|&(o, p)| if p == 0 { o.to_string() } else { format!("{o}+{p}ℕ") })
            .collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

fn covers(o: u64, p: u64, n: u64) -> bool {
    if p == 0 {
        n == o
    } else {
        n >= o && (n - o) % p == 0
    }
}

/// Whether progression `b` contains progression `a`.
fn subsumes(b: (u64, u64), a: (u64, u64)) -> bool {
    let (ob, pb) = b;
    let (oa, pa) = a;
    if !covers(ob, pb, oa) {
        return false;
    }
    pa == 0 || (pb != 0 && pa % pb == 0)
}

/// Successor lists of the letter-erased transition graph.
fn graph(nfa: &Nfa) -> Vec<Vec<usize>> {
    (0..nfa.num_states())
        .map(|p| {
            let s: BTreeSet<usize> = nfa.out(p).iter().map(|&(_, q)| q).collect();
            s.into_iter().collect()
        })
        .collect()
}

/// `{|w| : w ∈ L(nfa)}`.
///
/// Lengths up to `2r²` are enumerated exactly. Beyond that, every accepting
/// run contains a closed walk of some length `c ≤ r` at some state `q`;
/// for each such `c` the shortest paths `init → q` and `q → final` per
/// residue class modulo `c` give progressions with period `c` that cover
/// all longer accepted lengths and contain only accepted lengths.
pub fn length_set(nfa: &Nfa) -> ProgressionSet {
    let r = nfa.num_states();
    let succ = graph(nfa);
    let mut pred = vec![Vec::new(); r];
    for (p, out) in succ.iter().enumerate() {
        for &q in out {
            pred[q].push(p);
        }
    }
    let mut out = BTreeSet::new();

    let mut frontier = nfa.initial_set();
    let limit = 2 * (r as u64) * (r as u64);
    for n in 0..=limit {
        if nfa.is_accepting(&frontier) {
            out.insert((n, 0));
        }
        let mut next = Bits::new(r);
        for p in frontier.ones() {
            for &q in &succ[p] {
                next.set(q);
            }
        }
        if next.none() {
            break;
        }
        frontier = next;
    }

    let mut adj = BoolMatrix::zero(r);
    for (p, qs) in succ.iter().enumerate() {
        for &q in qs {
            adj.set(p, q);
        }
    }
    let mut power = BoolMatrix::identity(r);
    for c in 1..=r {
        power = power.mul(&adj);
        let on_cycle: Vec<usize> = (0..r).filter(|&q| power.get(q, q)).collect();
        if on_cycle.is_empty() {
            continue;
        }
        let fwd = residue_bfs(&succ, [nfa.initial], c);
        let bwd = residue_bfs(&pred, nfa.finals.iter().copied(), c);
        let mut best: Vec<Option<u64>> = vec![None; c];
        for &q in &on_cycle {
            for (rd, d) in fwd[q].iter().enumerate() {
                let Some(d) = d else { continue };
                for (re, e) in bwd[q].iter().enumerate() {
                    let Some(e) = e else { continue };
                    let slot = &mut best[(rd + re) % c];
                    let off = d + e;
                    if slot.is_none_or(|b| off < b) {
                        *slot = Some(off);
                    }
                }
            }
        }
        for off in best.into_iter().flatten() {
            out.insert((off, c as u64));
        }
    }
    ProgressionSet::from_iter(out)
}

/// Shortest distances in the product of the graph with `ℤ/c`:
/// `dist[q][ρ]` is the length of a shortest walk from a source to `q` whose
/// length is `≡ ρ (mod c)`.
fn residue_bfs(adj: &[Vec<usize>], sources: impl IntoIterator<Item = usize>, c: usize) -> Vec<Vec<Option<u64>>> {
    let mut dist = vec![vec![None; c]; adj.len()];
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s][0].is_none() {
            dist[s][0] = Some(0);
            queue.push_back((s, 0usize));
        }
    }
    while let Some((p, rho)) = queue.pop_front() {
        let d = dist[p][rho].unwrap();
        let next = (rho + 1) % c;
        for &q in &adj[p] {
            if dist[q][next].is_none() {
                dist[q][next] = Some(d + 1);
                queue.push_back((q, next));
            }
        }
    }
    dist
}

/// Length set of `{w : φ(w) = M}` for the monoid element `target`.
pub fn matrix_language_length_set(monoid: &Monoid, target: usize) -> Result<ProgressionSet, AutomataError> {
    Ok(length_set(&monoid.automaton(target)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{UnionAutomaton, DEFAULT_MONOID_CAP};
    use crate::terms::Var;

    fn brute_lengths(nfa: &Nfa, alphabet: &[char], max: usize) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        let mut layer = vec![String::new()];
        for n in 0..=max {
            if layer.iter().any(|w| nfa.accepts(w)) {
                out.insert(n as u64);
            }
            layer = layer
                .iter()
                .flat_map(|w| alphabet.iter().map(move |a| format!("{w}{a}")))
                .filter(|w| {
                    // keep only words that are still live prefixes
                    let mut s = nfa.initial_set();
                    for a in w.chars() {
                        s = nfa.step(&s, a);
                    }
                    !s.none()
                })
                .collect();
        }
        out
    }

    #[test]
    fn hash_ab_star() {
        let nfa = Nfa::from_regex("#(a|b)*").unwrap();
        let s = length_set(&nfa);
        assert_eq!(s, ProgressionSet::from_iter([(1, 1)]));
        let brute = brute_lengths(&nfa, &['#', 'a', 'b'], 12);
        for n in 0..=12 {
            assert_eq!(s.contains(n), brute.contains(&n));
        }
    }

    #[test]
    fn aba_star() {
        let nfa = Nfa::from_regex("aba*").unwrap();
        let s = length_set(&nfa);
        for n in 0..=20 {
            assert_eq!(s.contains(n), n >= 2, "{n}");
        }
    }

    #[test]
    fn empty_language() {
        let mut nfa = Nfa::new(2, 0);
        nfa.add_transition(0, 'a', 0);
        assert!(length_set(&nfa).is_empty());
    }

    #[test]
    fn periodic_language() {
        let nfa = Nfa::from_regex("a(aaa)*|bb(bbbbb)*").unwrap();
        let s = length_set(&nfa);
        for n in 0..=40u64 {
            let expect = n % 3 == 1 || (n >= 2 && (n - 2) % 5 == 0);
            assert_eq!(s.contains(n), expect, "{n}");
        }
    }

    #[test]
    fn identity_over_empty_alphabet() {
        let ua = UnionAutomaton::new(BTreeSet::new(), Vec::new());
        let m = Monoid::realizable(&ua, DEFAULT_MONOID_CAP);
        let s = matrix_language_length_set(&m, 0).unwrap();
        assert_eq!(s, ProgressionSet::from_iter([(0, 0)]));
    }

    #[test]
    fn matrix_of_ab() {
        let nfa = Nfa::from_regex("aba*").unwrap();
        let ua = UnionAutomaton::new(['a', 'b'].into(), vec![(Var(0), nfa)]);
        let m = Monoid::realizable(&ua, DEFAULT_MONOID_CAP);
        let ab = m.index_of(&ua.char_matrix("ab").unwrap()).unwrap();
        assert!(matrix_language_length_set(&m, ab).unwrap().contains(2));
    }

    #[test]
    fn subsumption() {
        let s = ProgressionSet::from_iter([(1, 1), (3, 0), (4, 2), (0, 0)]);
        assert_eq!(s.progressions, [(0, 1)].into());
        let s = ProgressionSet::from_iter([(2, 3), (8, 0), (5, 6), (1, 0)]);
        assert_eq!(s.to_string(), "1 ∪ 2+3ℕ");
    }
}
