//! Words over constants and variables, word equations and full problems.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::automata::Nfa;
use crate::pad::{LinTerm, PadFormula};

/// Index into a problem's variable list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Const(char),
    Var(Var),
}

impl Symbol {
    pub fn as_var(self) -> Option<Var> {
        match self {
            Symbol::Var(v) => Some(v),
            Symbol::Const(_) => None,
        }
    }

    pub fn is_var(self) -> bool {
        matches!(self, Symbol::Var(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub quadratic: bool,
    pub regular: bool,
    pub oriented: bool,
}

impl Classification {
    pub fn regular_oriented(&self) -> bool {
        self.regular && self.oriented
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Equation {
    pub lhs: Vec<Symbol>,
    pub rhs: Vec<Symbol>,
}

impl Equation {
    pub fn new(lhs: Vec<Symbol>, rhs: Vec<Symbol>) -> Self {
        Equation { lhs, rhs }
    }

    /// `ε = ε`.
    pub fn empty() -> Self {
        Equation::default()
    }

    pub fn is_trivial(&self) -> bool {
        self.lhs.is_empty() && self.rhs.is_empty()
    }

    /// Total number of symbols on both sides.
    pub fn len(&self) -> usize {
        self.lhs.len() + self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn side(&self, side: Side) -> &[Symbol] {
        match side {
            Side::Left => &self.lhs,
            Side::Right => &self.rhs,
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.lhs.iter().chain(&self.rhs).copied()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.symbols().filter_map(Symbol::as_var).collect()
    }

    pub fn constants(&self) -> BTreeSet<char> {
        self.symbols()
            .filter_map(|s| match s {
                Symbol::Const(c) => Some(c),
                Symbol::Var(_) => None,
            })
            .collect()
    }

    /// Occurrences of `v` on the left and right side.
    pub fn occurrences(&self, v: Var) -> (usize, usize) {
        let count = |w: &[Symbol]| w.iter().filter(|s| **s == Symbol::Var(v)).count();
        (count(&self.lhs), count(&self.rhs))
    }

    pub fn contains(&self, v: Var) -> bool {
        self.symbols().any(|s| s == Symbol::Var(v))
    }

    pub fn is_quadratic(&self) -> bool {
        self.vars().into_iter().all(|v| {
            let (l, r) = self.occurrences(v);
            l + r <= 2
        })
    }

    pub fn classify(&self) -> Classification {
        let vars = self.vars();
        let mut quadratic = true;
        let mut regular = true;
        for &v in &vars {
            let (l, r) = self.occurrences(v);
            quadratic &= l + r <= 2;
            regular &= l <= 1 && r <= 1;
        }
        Classification {
            quadratic,
            regular,
            oriented: self.is_oriented(),
        }
    }

    /// Whether some total order on the variables is respected by the order
    /// of occurrences on both sides: the precedence digraph must be acyclic.
    pub fn is_oriented(&self) -> bool {
        let vars: Vec<Var> = self.vars().into_iter().collect();
        let pos: BTreeMap<Var, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let n = vars.len();
        let mut succ = vec![BTreeSet::new(); n];
        for side in [&self.lhs, &self.rhs] {
            let occ: Vec<usize> = side.iter().filter_map(|s| s.as_var()).map(|v| pos[&v]).collect();
            for (i, &a) in occ.iter().enumerate() {
                for &b in &occ[i + 1..] {
                    if a == b {
                        return false;
                    }
                    succ[a].insert(b);
                }
            }
        }
        // Kahn's algorithm
        let mut indeg = vec![0usize; n];
        for s in &succ {
            for &b in s {
                indeg[b] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(a) = ready.pop() {
            seen += 1;
            for &b in &succ[a] {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.push(b);
                }
            }
        }
        seen == n
    }

    /// Replaces every occurrence of `v` by `by`.
    pub fn substitute(&self, v: Var, by: &[Symbol]) -> Equation {
        let sub = |w: &[Symbol]| -> Vec<Symbol> {
            let mut out = Vec::with_capacity(w.len() + by.len());
            for s in w {
                if *s == Symbol::Var(v) {
                    out.extend_from_slice(by);
                } else {
                    out.push(*s);
                }
            }
            out
        };
        Equation {
            lhs: sub(&self.lhs),
            rhs: sub(&self.rhs),
        }
    }

    /// `Σ|lhs| − Σ|rhs|` as a linear term over length variables named by
    /// `names`. Any solution makes it vanish.
    pub fn length_balance(&self, names: &[String]) -> LinTerm {
        let mut t = LinTerm::constant(0);
        for (side, sign) in [(&self.lhs, 1), (&self.rhs, -1)] {
            for s in side.iter() {
                match s {
                    Symbol::Const(_) => t.constant += sign,
                    Symbol::Var(v) => t.add_coeff(names[v.index()].clone(), sign),
                }
            }
        }
        t
    }

    /// Applies an assignment to both sides; `None` if some variable is
    /// unassigned.
    pub fn apply(&self, sigma: &BTreeMap<Var, String>) -> Option<(String, String)> {
        let image = |w: &[Symbol]| -> Option<String> {
            let mut out = String::new();
            for s in w {
                match s {
                    Symbol::Const(c) => out.push(*c),
                    Symbol::Var(v) => out.push_str(sigma.get(v)?),
                }
            }
            Some(out)
        };
        Some((image(&self.lhs)?, image(&self.rhs)?))
    }

    pub fn render(&self, names: &[String]) -> String {
        let compact = self
            .vars()
            .iter()
            .all(|v| names.get(v.index()).is_some_and(|n| n.chars().count() == 1));
        let side = |w: &[Symbol]| -> String {
            if w.is_empty() {
                return "ε".to_string();
            }
            let toks: Vec<String> = w
                .iter()
                .map(|s| match s {
                    Symbol::Const(c) => c.to_string(),
                    Symbol::Var(v) => names.get(v.index()).cloned().unwrap_or_else(|| format!("v{}", v.0)),
                })
                .collect();
            toks.join(if compact { "" } else { " " })
        };
        format!("{} = {}", side(&self.lhs), side(&self.rhs))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularConstraint {
    pub var: Var,
    /// Source text of the regular expression.
    pub regex: String,
    pub nfa: Nfa,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Problem {
    pub alphabet: BTreeSet<char>,
    /// Declaration order; fixes the order of length tuples.
    pub vars: Vec<String>,
    pub equation: Equation,
    pub regular_constraints: Vec<RegularConstraint>,
    /// Presburger constraint over the length variables, named like the
    /// word variables.
    pub length_constraint: Option<PadFormula>,
}

impl Problem {
    /// A problem with just an equation over the given variables. The alphabet
    /// is the equation's constants, or `{a}` if there are none.
    pub fn from_equation(vars: Vec<String>, equation: Equation) -> Self {
        let mut p = Problem {
            alphabet: BTreeSet::new(),
            vars,
            equation,
            regular_constraints: Vec::new(),
            length_constraint: None,
        };
        p.alphabet = p.default_alphabet();
        p
    }

    /// Constants of the equation and of the constraint languages, or `{a}`
    /// when that set is empty.
    pub fn default_alphabet(&self) -> BTreeSet<char> {
        let mut a = self.equation.constants();
        for rc in &self.regular_constraints {
            a.extend(rc.nfa.alphabet.iter().copied());
        }
        if a.is_empty() {
            a.insert('a');
        }
        a
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.vars.iter().position(|v| v == name).map(|i| Var(i as u32))
    }

    pub fn name(&self, v: Var) -> &str {
        &self.vars[v.index()]
    }

    pub fn all_vars(&self) -> impl Iterator<Item = Var> {
        (0..self.vars.len() as u32).map(Var)
    }

    pub fn render_equation(&self, eq: &Equation) -> String {
        eq.render(&self.vars)
    }

    pub fn has_regular_constraints(&self) -> bool {
        !self.regular_constraints.is_empty()
    }

    /// The length constraint, or `true`.
    pub fn theta(&self) -> PadFormula {
        self.length_constraint.clone().unwrap_or_else(PadFormula::tt)
    }

    /// Sum of the absolute values of all constants in the length constraint.
    pub fn length_constraint_weight(&self) -> u64 {
        fn walk(phi: &PadFormula, acc: &mut u64) {
            match phi {
                PadFormula::Le(f, g) | PadFormula::Eq(f, g) | PadFormula::Div(f, g) => {
                    *acc += f.constant.unsigned_abs() + g.constant.unsigned_abs();
                }
                PadFormula::And(ps) | PadFormula::Or(ps) => ps.iter().for_each(|p| walk(p, acc)),
                PadFormula::Exists(_, b) => walk(b, acc),
            }
        }
        let mut acc = 0;
        if let Some(phi) = &self.length_constraint {
            walk(phi, &mut acc);
        }
        acc
    }

    /// Whether `sigma` solves the equation and meets every regular
    /// constraint and the length constraint.
    pub fn is_solution(&self, sigma: &BTreeMap<Var, String>) -> bool {
        let Some((l, r)) = self.equation.apply(sigma) else { return false };
        if l != r {
            return false;
        }
        for rc in &self.regular_constraints {
            match sigma.get(&rc.var) {
                Some(w) if rc.nfa.accepts(w) => {}
                _ => return false,
            }
        }
        if let Some(phi) = &self.length_constraint {
            let mu: BTreeMap<String, u64> = self
                .all_vars()
                .map(|v| (self.name(v).to_string(), sigma.get(&v).map_or(0, |w| w.chars().count() as u64)))
                .collect();
            if !crate::pad::eval(phi, &mu, 0).is_ok_and(|t| t.is_true()) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq_of(lhs: &str, rhs: &str) -> Equation {
        let sym = |c: char| {
            if c.is_ascii_lowercase() && c >= 'u' {
                Symbol::Var(Var((c as u32) - ('u' as u32)))
            } else {
                Symbol::Const(c)
            }
        };
        Equation::new(lhs.chars().map(sym).collect(), rhs.chars().map(sym).collect())
    }

    #[test]
    fn classification_examples() {
        let c = eq_of("xy", "yz").classify();
        assert_eq!(c, Classification { quadratic: true, regular: true, oriented: true });
        let c = eq_of("xy", "yx").classify();
        assert_eq!(c, Classification { quadratic: true, regular: true, oriented: false });
        let c = eq_of("xxyy", "zz").classify();
        assert_eq!(c, Classification { quadratic: true, regular: false, oriented: false });
        assert!(!eq_of("xxx", "y").classify().quadratic);
    }

    #[test]
    fn balance_term() {
        let names: Vec<String> = "uvwxyz".chars().map(String::from).collect();
        let t = eq_of("xaby", "yz").length_balance(&names);
        assert_eq!(t.to_string(), "x - z + 2");
    }

    #[test]
    fn render_compact_and_spaced() {
        let names: Vec<String> = "uvwxyz".chars().map(String::from).collect();
        assert_eq!(eq_of("xab", "abx").render(&names), "xab = abx");
        assert_eq!(Equation::empty().render(&names), "ε = ε");
        let long: Vec<String> = vec!["foo".into(); 6];
        assert_eq!(eq_of("xa", "").render(&long), "foo a = ε");
    }

    #[test]
    fn substitution() {
        let names: Vec<String> = "uvwxyz".chars().map(String::from).collect();
        let e = eq_of("xab", "abx").substitute(Var(3), &[Symbol::Const('a'), Symbol::Var(Var(3))]);
        assert_eq!(e.render(&names), "axab = abax");
    }
}
