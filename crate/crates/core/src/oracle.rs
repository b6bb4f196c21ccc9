//! Brute-force ground truth: bounded solution enumeration and length
//! abstractions.
//!
//! For a fixed tuple of word lengths both sides of the equation become
//! sequences of positions. Positions equated by the equation are merged with
//! union-find; the remaining free classes are filled in depth-first order,
//! pruning with the constraint automata.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::automata::Bits;
use crate::pad::{eval, PadFormula, Truth};
use crate::terms::{Problem, Symbol, Var};

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// `σ` as words in variable order.
pub type Words = Vec<String>;

fn length_env(p: &Problem, lens: &[u64]) -> BTreeMap<String, u64> {
    p.vars.iter().cloned().zip(lens.iter().copied()).collect()
}

fn meets_length_constraint(p: &Problem, lens: &[u64]) -> bool {
    match &p.length_constraint {
        None => true,
        Some(phi) => eval(phi, &length_env(p, lens), 0).map(Truth::is_true).unwrap_or(false),
    }
}

/// Calls `visit` on every solution with `|σ(x)| = lens[x]` until it returns
/// false. Returns false if stopped early.
pub fn for_each_with_lengths(p: &Problem, lens: &[u64], visit: &mut dyn FnMut(&Words) -> bool) -> bool {
    if !meets_length_constraint(p, lens) {
        return true;
    }
    let side_len = |w: &[Symbol]| -> u64 {
        w.iter()
            .map(|s| match s {
                Symbol::Const(_) => 1,
                Symbol::Var(v) => lens[v.index()],
            })
            .sum()
    };
    if side_len(&p.equation.lhs) != side_len(&p.equation.rhs) {
        return true;
    }
    let mut base = Vec::with_capacity(lens.len() + 1);
    let mut n = 0usize;
    for &l in lens {
        base.push(n);
        n += l as usize;
    }
    base.push(n);
    let alphabet: Vec<char> = p.alphabet.iter().copied().collect();
    let const_node = |c: char| n + alphabet.iter().position(|&a| a == c).expect("constant in alphabet");
    let cells = |w: &[Symbol]| -> Vec<usize> {
        let mut out = Vec::new();
        for s in w {
            match s {
                Symbol::Const(c) => out.push(const_node(*c)),
                Symbol::Var(v) => out.extend(base[v.index()]..base[v.index() + 1]),
            }
        }
        out
    };
    let mut uf = UnionFind((0..n + alphabet.len()).collect());
    for (a, b) in cells(&p.equation.lhs).into_iter().zip(cells(&p.equation.rhs)) {
        uf.union(a, b);
    }
    let mut fixed: Vec<Option<char>> = vec![None; n + alphabet.len()];
    for (k, &c) in alphabet.iter().enumerate() {
        let r = uf.find(n + k);
        if fixed[r].is_some_and(|d| d != c) {
            return true;
        }
        fixed[r] = Some(c);
    }
    let root: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();

    let mut constraints: Vec<Vec<usize>> = vec![Vec::new(); lens.len()];
    for (i, rc) in p.regular_constraints.iter().enumerate() {
        constraints[rc.var.index()].push(i);
    }

    struct Dfs<'a> {
        p: &'a Problem,
        alphabet: &'a [char],
        base: &'a [usize],
        root: &'a [usize],
        constraints: &'a [Vec<usize>],
        assigned: Vec<Option<char>>,
        word: Vec<char>,
        visit: &'a mut dyn FnMut(&Words) -> bool,
    }

    impl Dfs<'_> {
        /// Fills position `i` of variable `x`; `states` tracks the automata
        /// of `x`'s constraints.
        fn go(&mut self, x: usize, i: usize, states: Vec<Bits>) -> bool {
            let nfa = |k: usize| &self.p.regular_constraints[k].nfa;
            if x == self.base.len() - 1 {
                let words = (0..x)
                    .map(|v| self.word[self.base[v]..self.base[v + 1]].iter().collect())
                    .collect();
                return (self.visit)(&words);
            }
            let len = self.base[x + 1] - self.base[x];
            if i == len {
                if !self.constraints[x].iter().zip(&states).all(|(&k, s)| nfa(k).is_accepting(s)) {
                    return true;
                }
                let next = x + 1;
                let init = if next < self.base.len() - 1 {
                    self.constraints[next].iter().map(|&k| nfa(k).initial_set()).collect()
                } else {
                    Vec::new()
                };
                return self.go(next, 0, init);
            }
            let pos = self.base[x] + i;
            let r = self.root[pos];
            let choices: Vec<char> = match self.assigned[r] {
                Some(c) => vec![c],
                None => self.alphabet.to_vec(),
            };
            let fresh = self.assigned[r].is_none();
            for c in choices {
                let next: Vec<Bits> = self.constraints[x].iter().zip(&states).map(|(&k, s)| nfa(k).step(s, c)).collect();
                if next.iter().any(Bits::none) {
                    continue;
                }
                self.assigned[r] = Some(c);
                self.word[pos] = c;
                let go_on = self.go(x, i + 1, next);
                if fresh {
                    self.assigned[r] = None;
                }
                if !go_on {
                    return false;
                }
            }
            true
        }
    }

    let init = if lens.is_empty() {
        Vec::new()
    } else {
        constraints[0].iter().map(|&k| p.regular_constraints[k].nfa.initial_set()).collect()
    };
    let mut dfs = Dfs {
        p,
        alphabet: &alphabet,
        base: &base,
        root: &root,
        constraints: &constraints,
        assigned: fixed,
        word: vec!['?'; n],
        visit,
    };
    dfs.go(0, 0, init)
}

pub fn first_with_lengths(p: &Problem, lens: &[u64]) -> Option<Words> {
    let mut found = None;
    for_each_with_lengths(p, lens, &mut |w| {
        found = Some(w.clone());
        false
    });
    found
}

pub fn to_assignment(words: &Words) -> BTreeMap<Var, String> {
    words.iter().enumerate().map(|(i, w)| (Var(i as u32), w.clone())).collect()
}

/// Length tuples of `[0, bound]^n` in lexicographic order.
fn tuples(n: usize, bound: u64) -> impl Iterator<Item = Vec<u64>> {
    let mut cur = Some(vec![0u64; n]);
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let mut next = out.clone();
        let mut i = n;
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            if next[i] < bound {
                next[i] += 1;
                cur = Some(next);
                break;
            }
            next[i] = 0;
        }
        Some(out)
    })
}

/// All solutions with every `|σ(x)| ≤ bound`, by length tuple and then
/// lexicographically.
pub fn enumerate_solutions(p: &Problem, bound: u64) -> impl Iterator<Item = BTreeMap<Var, String>> + '_ {
    tuples(p.vars.len(), bound).flat_map(move |lens| {
        let mut found = Vec::new();
        for_each_with_lengths(p, &lens, &mut |w| {
            found.push(to_assignment(w));
            true
        });
        found
    })
}

/// Length tuples of solutions within `[0, bound]^n`, each with a witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LenAbsSample {
    pub bound: u64,
    pub vars: Vec<String>,
    pub witnesses: BTreeMap<Vec<u64>, Words>,
}

impl LenAbsSample {
    pub fn tuples(&self) -> BTreeSet<Vec<u64>> {
        self.witnesses.keys().cloned().collect()
    }

    pub fn contains(&self, lens: &[u64]) -> bool {
        self.witnesses.contains_key(lens)
    }

    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.vars.join(",");
        s.push('\n');
        for t in self.witnesses.keys() {
            let row: Vec<String> = t.iter().map(u64::to_string).collect();
            writeln!(s, "{}", row.join(",")).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "bound": self.bound,
            "vars": self.vars,
            "tuples": self.witnesses.iter().map(|(t, w)| json!({"lengths": t, "witness": w})).collect::<Vec<_>>(),
        })
    }
}

pub fn length_abstraction(p: &Problem, bound: u64) -> LenAbsSample {
    let witnesses = tuples(p.vars.len(), bound)
        .filter_map(|lens| first_with_lengths(p, &lens).map(|w| (lens, w)))
        .collect();
    LenAbsSample {
        bound,
        vars: p.vars.clone(),
        witnesses,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub lengths: Vec<u64>,
    pub in_abstraction: bool,
    /// `None` if evaluation was inconclusive.
    pub in_formula: Option<bool>,
}

/// Tuples of `[0, bound]^n` on which `phi` and the length abstraction
/// disagree. `phi` names length variables like the word variables.
pub fn check_characterization(p: &Problem, phi: &PadFormula, bound: u64) -> Vec<Mismatch> {
    let sample = length_abstraction(p, bound);
    let witness_bound = 4 * bound + 8;
    tuples(p.vars.len(), bound)
        .filter_map(|lens| {
            let in_abstraction = sample.contains(&lens);
            let in_formula = match eval(phi, &length_env(p, &lens), witness_bound) {
                Ok(Truth::True) => Some(true),
                Ok(Truth::False) => Some(false),
                _ => None,
            };
            (in_formula != Some(in_abstraction)).then_some(Mismatch {
                lengths: lens,
                in_abstraction,
                in_formula,
            })
        })
        .collect()
}
