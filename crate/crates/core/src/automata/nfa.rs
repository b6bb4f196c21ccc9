//! ε-free NFAs and their construction from regular expressions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::matrix::Bits;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nfa {
    num_states: usize,
    pub alphabet: BTreeSet<char>,
    /// Outgoing transitions per state, sorted.
    delta: Vec<Vec<(char, usize)>>,
    pub initial: usize,
    pub finals: BTreeSet<usize>,
}

impl Nfa {
    pub fn new(num_states: usize, initial: usize) -> Self {
        assert!(initial < num_states.max(1));
        Nfa {
            num_states: num_states.max(1),
            alphabet: BTreeSet::new(),
            delta: vec![Vec::new(); num_states.max(1)],
            initial,
            finals: BTreeSet::new(),
        }
    }

    pub fn from_regex(src: &str) -> Result<Nfa, RegexError> {
        let ast = Parser::new(src).parse()?;
        Ok(glushkov(&ast))
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn add_transition(&mut self, p: usize, a: char, q: usize) {
        self.alphabet.insert(a);
        let out = &mut self.delta[p];
        if let Err(i) = out.binary_search(&(a, q)) {
            out.insert(i, (a, q));
        }
    }

    pub fn add_final(&mut self, q: usize) {
        self.finals.insert(q);
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, char, usize)> + '_ {
        self.delta
            .iter()
            .enumerate()
            .flat_map(|(p, out)| out.iter().map(move |&(a, q)| (p, a, q)))
    }

    pub fn out(&self, p: usize) -> &[(char, usize)] {
        &self.delta[p]
    }

    pub fn initial_set(&self) -> Bits {
        let mut s = Bits::new(self.num_states);
        s.set(self.initial);
        s
    }

    pub fn step(&self, set: &Bits, a: char) -> Bits {
        let mut next = Bits::new(self.num_states);
        for p in set.ones() {
            for &(b, q) in &self.delta[p] {
                if b == a {
                    next.set(q);
                }
            }
        }
        next
    }

    pub fn is_accepting(&self, set: &Bits) -> bool {
        set.ones().any(|q| self.finals.contains(&q))
    }

    pub fn accepts(&self, w: &str) -> bool {
        let mut s = self.initial_set();
        for a in w.chars() {
            s = self.step(&s, a);
            if s.none() {
                return false;
            }
        }
        self.is_accepting(&s)
    }

    /// States from which a final state is reachable.
    pub fn co_reachable(&self) -> Bits {
        let mut co = Bits::new(self.num_states);
        for &f in &self.finals {
            co.set(f);
        }
        loop {
            let mut changed = false;
            for p in 0..self.num_states {
                if !co.get(p) && self.delta[p].iter().any(|&(_, q)| co.get(q)) {
                    co.set(p);
                    changed = true;
                }
            }
            if !changed {
                return co;
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "states": self.num_states,
            "alphabet": self.alphabet.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "transitions": self.transitions().map(|(p, a, q)| serde_json::json!([p, a.to_string(), q])).collect::<Vec<_>>(),
            "initial": self.initial,
            "finals": self.finals,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{msg} at offset {offset}")]
pub struct RegexError {
    /// Character offset into the regex source.
    pub offset: usize,
    pub msg: String,
}

#[derive(Clone, Debug)]
enum Regex {
    Empty,
    Letter(char),
    Concat(Box<Regex>, Box<Regex>),
    Alt(Box<Regex>, Box<Regex>),
    Star(Box<Regex>),
}

const SPECIAL: &str = "|*+?()/";

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
        }
    }

    fn peek(&mut self) -> Option<char> {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
        self.chars.get(self.pos).copied()
    }

    fn err(&self, msg: &str) -> RegexError {
        RegexError {
            offset: self.pos,
            msg: msg.to_string(),
        }
    }

    fn parse(mut self) -> Result<Regex, RegexError> {
        let r = self.alt()?;
        match self.peek() {
            None => Ok(r),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn alt(&mut self) -> Result<Regex, RegexError> {
        let mut r = self.concat()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            let rhs = self.concat()?;
            r = Regex::Alt(Box::new(r), Box::new(rhs));
        }
        Ok(r)
    }

    fn concat(&mut self) -> Result<Regex, RegexError> {
        let mut r = Regex::Empty;
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            let item = self.repeat()?;
            r = match r {
                Regex::Empty => item,
                prev => Regex::Concat(Box::new(prev), Box::new(item)),
            };
        }
        Ok(r)
    }

    fn repeat(&mut self) -> Result<Regex, RegexError> {
        let mut r = self.atom()?;
        while let Some(op) = self.peek() {
            r = match op {
                '*' => Regex::Star(Box::new(r)),
                '+' => Regex::Concat(Box::new(r.clone()), Box::new(Regex::Star(Box::new(r)))),
                '?' => Regex::Alt(Box::new(r), Box::new(Regex::Empty)),
                _ => break,
            };
            self.pos += 1;
        }
        Ok(r)
    }

    fn atom(&mut self) -> Result<Regex, RegexError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let r = self.alt()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(r)
            }
            Some(c) if !SPECIAL.contains(c) => {
                self.pos += 1;
                Ok(Regex::Letter(c))
            }
            Some(_) => Err(self.err("unexpected operator")),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

/// Position-automaton data of a linearized expression.
struct Lin {
    nullable: bool,
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
}

fn linearize(r: &Regex, letters: &mut Vec<char>, follow: &mut Vec<BTreeSet<usize>>) -> Lin {
    match r {
        Regex::Empty => Lin {
            nullable: true,
            first: BTreeSet::new(),
            last: BTreeSet::new(),
        },
        Regex::Letter(c) => {
            letters.push(*c);
            follow.push(BTreeSet::new());
            let p = letters.len();
            Lin {
                nullable: false,
                first: [p].into(),
                last: [p].into(),
            }
        }
        Regex::Concat(a, b) => {
            let la = linearize(a, letters, follow);
            let lb = linearize(b, letters, follow);
            for &p in &la.last {
                follow[p - 1].extend(&lb.first);
            }
            let mut first = la.first.clone();
            if la.nullable {
                first.extend(&lb.first);
            }
            let mut last = lb.last.clone();
            if lb.nullable {
                last.extend(&la.last);
            }
            Lin {
                nullable: la.nullable && lb.nullable,
                first,
                last,
            }
        }
        Regex::Alt(a, b) => {
            let la = linearize(a, letters, follow);
            let lb = linearize(b, letters, follow);
            Lin {
                nullable: la.nullable || lb.nullable,
                first: la.first.union(&lb.first).copied().collect(),
                last: la.last.union(&lb.last).copied().collect(),
            }
        }
        Regex::Star(a) => {
            let la = linearize(a, letters, follow);
            for &p in &la.last {
                follow[p - 1].extend(&la.first);
            }
            Lin {
                nullable: true,
                first: la.first,
                last: la.last,
            }
        }
    }
}

/// Glushkov construction: state 0 is initial, state `p` stands for the
/// `p`-th letter occurrence.
fn glushkov(r: &Regex) -> Nfa {
    let mut letters = Vec::new();
    let mut follow = Vec::new();
    let lin = linearize(r, &mut letters, &mut follow);
    let mut nfa = Nfa::new(letters.len() + 1, 0);
    for &p in &lin.first {
        nfa.add_transition(0, letters[p - 1], p);
    }
    for (i, succ) in follow.iter().enumerate() {
        for &q in succ {
            nfa.add_transition(i + 1, letters[q - 1], q);
        }
    }
    for &p in &lin.last {
        nfa.add_final(p);
    }
    if lin.nullable {
        nfa.add_final(0);
    }
    nfa
}
