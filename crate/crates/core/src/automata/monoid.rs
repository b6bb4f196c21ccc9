//! The union of all constraint automata, characteristic matrices and the
//! monoid of realizable matrices.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use super::matrix::BoolMatrix;
use super::nfa::Nfa;
use crate::terms::{Problem, Var};

pub const DEFAULT_MONOID_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomataError {
    #[error("letter `{0}` is outside the alphabet")]
    ForeignLetter(char),
    #[error("no matrix assigned to constrained variable {0:?}")]
    Unassigned(Var),
    #[error("monoid closure exceeded {0} elements")]
    MonoidCap(usize),
}

/// Disjoint union of the constraint NFAs; state `offsets[i] + q` is state
/// `q` of the `i`-th constraint.
#[derive(Clone, Debug)]
pub struct UnionAutomaton {
    pub alphabet: BTreeSet<char>,
    pub constraints: Vec<(Var, Nfa)>,
    offsets: Vec<usize>,
    dim: usize,
    letters: BTreeMap<char, BoolMatrix>,
}

impl UnionAutomaton {
    pub fn new(alphabet: BTreeSet<char>, constraints: Vec<(Var, Nfa)>) -> Self {
        let mut offsets = Vec::with_capacity(constraints.len());
        let mut dim = 0;
        for (_, nfa) in &constraints {
            offsets.push(dim);
            dim += nfa.num_states();
        }
        let mut letters = BTreeMap::new();
        for &a in &alphabet {
            let mut m = BoolMatrix::zero(dim);
            for ((_, nfa), off) in constraints.iter().zip(&offsets) {
                for (p, b, q) in nfa.transitions() {
                    if a == b {
                        m.set(off + p, off + q);
                    }
                }
            }
            letters.insert(a, m);
        }
        UnionAutomaton {
            alphabet,
            constraints,
            offsets,
            dim,
            letters,
        }
    }

    pub fn from_problem(p: &Problem) -> Self {
        let cs = p.regular_constraints.iter().map(|rc| (rc.var, rc.nfa.clone())).collect();
        Self::new(p.alphabet.clone(), cs)
    }

    /// Number of states `r`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn identity(&self) -> BoolMatrix {
        BoolMatrix::identity(self.dim)
    }

    pub fn letter_matrix(&self, a: char) -> Result<&BoolMatrix, AutomataError> {
        self.letters.get(&a).ok_or(AutomataError::ForeignLetter(a))
    }

    /// `φ(w)`: entry `(i, j)` is set iff `w` labels a path from `i` to `j`.
    pub fn char_matrix(&self, w: &str) -> Result<BoolMatrix, AutomataError> {
        let mut m = self.identity();
        for a in w.chars() {
            m = m.mul(self.letter_matrix(a)?);
        }
        Ok(m)
    }

    /// Whether `m` certifies membership in the language of constraint `i`.
    pub fn accepts_matrix(&self, i: usize, m: &BoolMatrix) -> bool {
        let (_, nfa) = &self.constraints[i];
        let off = self.offsets[i];
        let row = m.row(off + nfa.initial);
        nfa.finals.iter().any(|&q| row.get(off + q))
    }

    /// Whether every matrix assigned to a constrained variable has a final
    /// state in the initial row of each of that variable's automata.
    pub fn is_consistent(&self, f: &BTreeMap<Var, BoolMatrix>) -> Result<bool, AutomataError> {
        for (i, (x, _)) in self.constraints.iter().enumerate() {
            let m = f.get(x).ok_or(AutomataError::Unassigned(*x))?;
            if !self.accepts_matrix(i, m) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Consistency of a single variable's matrix with its own constraints.
    pub fn consistent_for(&self, x: Var, m: &BoolMatrix) -> bool {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, (y, _))| *y == x)
            .all(|(i, _)| self.accepts_matrix(i, m))
    }

    pub fn constrained_vars(&self) -> BTreeSet<Var> {
        self.constraints.iter().map(|(x, _)| *x).collect()
    }
}

/// Realizable characteristic matrices, each with a shortest witness word.
/// Element 0 is the identity.
#[derive(Clone, Debug)]
pub struct Monoid {
    pub elements: Vec<BoolMatrix>,
    pub witnesses: Vec<String>,
    /// Set when the closure stopped at the cap.
    pub truncated: bool,
    index: HashMap<BoolMatrix, usize>,
    /// `letter_step[m][a]`: index of `elements[m]·φ(a)`, if present.
    letter_step: Vec<BTreeMap<char, usize>>,
}

impl Monoid {
    /// Breadth-first closure of the identity under right multiplication by
    /// letter matrices, stopping after `cap` elements.
    pub fn realizable(ua: &UnionAutomaton, cap: usize) -> Monoid {
        let mut m = Monoid {
            elements: vec![ua.identity()],
            witnesses: vec![String::new()],
            truncated: false,
            index: HashMap::new(),
            letter_step: vec![BTreeMap::new()],
        };
        m.index.insert(ua.identity(), 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for (&a, lm) in &ua.letters {
                let prod = m.elements[i].mul(lm);
                let j = match m.index.get(&prod) {
                    Some(&j) => j,
                    None if m.elements.len() < cap => {
                        let j = m.elements.len();
                        let w = format!("{}{a}", m.witnesses[i]);
                        m.index.insert(prod.clone(), j);
                        m.elements.push(prod);
                        m.witnesses.push(w);
                        m.letter_step.push(BTreeMap::new());
                        queue.push_back(j);
                        j
                    }
                    None => {
                        m.truncated = true;
                        continue;
                    }
                };
                m.letter_step[i].insert(a, j);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn index_of(&self, m: &BoolMatrix) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn get(&self, i: usize) -> &BoolMatrix {
        &self.elements[i]
    }

    pub fn mul(&self, i: usize, j: usize) -> Option<usize> {
        self.index_of(&self.elements[i].mul(&self.elements[j]))
    }

    pub fn step(&self, i: usize, a: char) -> Option<usize> {
        self.letter_step[i].get(&a).copied()
    }

    /// All `m` with `left · m = target`.
    pub fn right_divisors(&self, left: &BoolMatrix, target: usize) -> Vec<usize> {
        let t = &self.elements[target];
        (0..self.len()).filter(|&m| &left.mul(&self.elements[m]) == t).collect()
    }

    /// Deterministic automaton over the monoid: states are elements, `a`
    /// moves `N` to `N·φ(a)`, the initial state is the identity and `target`
    /// is the only final state. Its language is `{w : φ(w) = target}`.
    pub fn automaton(&self, target: usize) -> Result<Nfa, AutomataError> {
        if self.truncated {
            return Err(AutomataError::MonoidCap(self.len()));
        }
        let mut nfa = Nfa::new(self.len(), 0);
        for (i, steps) in self.letter_step.iter().enumerate() {
            for (&a, &j) in steps {
                nfa.add_transition(i, a, j);
            }
        }
        nfa.add_final(target);
        Ok(nfa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aba_star() -> UnionAutomaton {
        let nfa = Nfa::from_regex("aba*").unwrap();
        UnionAutomaton::new(['a', 'b'].into(), vec![(Var(0), nfa)])
    }

    #[test]
    fn identity_for_empty_word() {
        let ua = aba_star();
        assert_eq!(ua.char_matrix("").unwrap(), ua.identity());
        assert!(ua.char_matrix("c").is_err());
    }

    #[test]
    fn ab_is_consistent() {
        let ua = aba_star();
        let m = ua.char_matrix("ab").unwrap();
        assert!(ua.accepts_matrix(0, &m));
        assert!(!ua.accepts_matrix(0, &ua.identity()));
        let f: BTreeMap<Var, BoolMatrix> = [(Var(0), m.clone())].into();
        assert!(ua.is_consistent(&f).unwrap());
        assert!(ua.is_consistent(&BTreeMap::new()).is_err());
        let monoid = Monoid::realizable(&ua, DEFAULT_MONOID_CAP);
        assert!(monoid.index_of(&m).is_some());
        assert!(!monoid.truncated);
    }

    #[test]
    fn no_constraints_gives_trivial_monoid() {
        let ua = UnionAutomaton::new(['a', 'b'].into(), Vec::new());
        let monoid = Monoid::realizable(&ua, 10);
        assert_eq!(monoid.len(), 1);
        let empty = UnionAutomaton::new(BTreeSet::new(), Vec::new());
        assert_eq!(Monoid::realizable(&empty, 10).len(), 1);
    }

    #[test]
    fn single_state_all_accepting() {
        let mut nfa = Nfa::new(1, 0);
        nfa.add_transition(0, 'a', 0);
        nfa.add_final(0);
        let ua = UnionAutomaton::new(['a'].into(), vec![(Var(0), nfa)]);
        let monoid = Monoid::realizable(&ua, 10);
        assert_eq!(monoid.len(), 1);
        assert_eq!(monoid.step(0, 'a'), Some(0));
    }

    #[test]
    fn closed_under_product() {
        let ua = aba_star();
        let monoid = Monoid::realizable(&ua, DEFAULT_MONOID_CAP);
        for i in 0..monoid.len() {
            for j in 0..monoid.len() {
                assert!(monoid.mul(i, j).is_some());
            }
            assert_eq!(ua.char_matrix(&monoid.witnesses[i]).unwrap(), monoid.elements[i]);
        }
    }

    #[test]
    fn cap_is_reported() {
        let ua = aba_star();
        let monoid = Monoid::realizable(&ua, 2);
        assert!(monoid.truncated);
        assert_eq!(monoid.len(), 2);
        assert!(monoid.automaton(0).is_err());
    }
}
