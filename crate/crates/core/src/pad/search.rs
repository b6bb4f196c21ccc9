//! Bounded model finding for existential PAD formulas.
//!
//! The search works per disjunct of the (prenexed) formula. Within a
//! conjunction, equalities with a unit coefficient are eliminated by
//! substitution, interval bounds are propagated to a fixed point, and the
//! remaining variables are enumerated smallest-domain-first. When the bounds
//! derived at the root already confine every relevant variable to the search
//! box, a failed search is a proof that the conjunction has no model at all;
//! this is reported through the `exhaustive` flag.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::eval::{check_model, divides, prenex};
use super::formula::{LinTerm, PadFormula};

pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;
const PROPAGATION_ROUNDS: usize = 200;

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Free and existential variables are searched in `[0, bound]`.
    pub bound: u64,
    /// Maximum number of search nodes before giving up.
    pub node_budget: u64,
}

impl SearchOptions {
    pub fn with_bound(bound: u64) -> Self {
        SearchOptions {
            bound,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// A satisfying assignment. Besides the formula's free variables it carries
/// a witness for every existential, named as by [`prenex`](super::prenex).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadModel {
    pub values: BTreeMap<String, u64>,
}

impl PadModel {
    pub fn get(&self, var: &str) -> Option<u64> {
        self.values.get(var).copied()
    }

    /// Restriction to the free variables of `phi`.
    pub fn free_part(&self, phi: &PadFormula) -> BTreeMap<String, u64> {
        phi.free_vars()
            .into_iter()
            .filter_map(|v| self.values.get(&v).map(|x| (v, *x)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundedSat {
    Sat(PadModel),
    /// No model with search variables in `[0, bound]`. If `exhaustive` is
    /// set, the derived bounds prove that no model exists at all.
    NoModelUpTo { bound: u64, exhaustive: bool },
}

impl BoundedSat {
    pub fn is_sat(&self) -> bool {
        matches!(self, BoundedSat::Sat(_))
    }

    pub fn model(&self) -> Option<&PadModel> {
        match self {
            BoundedSat::Sat(m) => Some(m),
            _ => None,
        }
    }

    /// True only for a proven absence of models.
    pub fn is_unsat(&self) -> bool {
        matches!(self, BoundedSat::NoModelUpTo { exhaustive: true, .. })
    }
}

pub fn bounded_sat(phi: &PadFormula, bound: u64) -> BoundedSat {
    bounded_sat_with(phi, &SearchOptions::with_bound(bound))
}

pub fn bounded_sat_with(phi: &PadFormula, opts: &SearchOptions) -> BoundedSat {
    let (matrix, _) = prenex(phi);
    let all_vars = matrix.free_vars();
    let mut s = Searcher {
        opts: opts.clone(),
        nodes: 0,
        budget_hit: false,
        exhaustive: true,
    };
    match s.branch(vec![&matrix], Vec::new(), Vec::new()) {
        Some(mut values) => {
            for v in all_vars {
                values.entry(v).or_insert(0);
            }
            debug_assert!(check_model(phi, &values).unwrap_or(false));
            BoundedSat::Sat(PadModel { values })
        }
        None => BoundedSat::NoModelUpTo {
            bound: opts.bound,
            exhaustive: s.exhaustive && !s.budget_hit,
        },
    }
}

#[derive(Clone, Debug)]
enum Atom {
    /// `t <= 0`
    Le(LinTerm),
    /// `t = 0`
    Eq(LinTerm),
    Div(LinTerm, LinTerm),
}

impl Atom {
    fn substitute(&self, v: &str, by: &LinTerm) -> Atom {
        match self {
            Atom::Le(t) => Atom::Le(t.substitute(v, by)),
            Atom::Eq(t) => Atom::Eq(t.substitute(v, by)),
            Atom::Div(f, g) => Atom::Div(f.substitute(v, by), g.substitute(v, by)),
        }
    }
}

struct Searcher {
    opts: SearchOptions,
    nodes: u64,
    budget_hit: bool,
    exhaustive: bool,
}

type Values = BTreeMap<String, u64>;

impl Searcher {
    fn branch<'a>(
        &mut self,
        mut pending: Vec<&'a PadFormula>,
        mut atoms: Vec<Atom>,
        mut ors: Vec<&'a [PadFormula]>,
    ) -> Option<Values> {
        while let Some(f) = pending.pop() {
            match f {
                PadFormula::And(ps) => pending.extend(ps.iter().rev()),
                PadFormula::Or(ps) => ors.push(ps),
                PadFormula::Le(a, b) => atoms.push(Atom::Le(a.clone() - b.clone())),
                PadFormula::Eq(a, b) => atoms.push(Atom::Eq(a.clone() - b.clone())),
                PadFormula::Div(a, b) => atoms.push(Atom::Div(a.clone(), b.clone())),
                PadFormula::Exists(..) => unreachable!("formula is prenexed"),
            }
        }
        if ors.is_empty() {
            return self.solve_conjunction(atoms);
        }
        // prune before splitting
        if Conjunction::build(atoms.clone()).is_none_or(|c| !c.root_feasible()) {
            return None;
        }
        let first = ors.remove(0);
        for alt in first {
            let found = self.branch(vec![alt], atoms.clone(), ors.clone());
            if found.is_some() || self.budget_hit {
                return found;
            }
        }
        None
    }

    fn solve_conjunction(&mut self, atoms: Vec<Atom>) -> Option<Values> {
        let conj = Conjunction::build(atoms)?;
        let n = conj.vars.len();
        let mut dom: Vec<(i128, Option<i128>)> = vec![(0, None); n];
        if !conj.propagate(&mut dom) {
            return None;
        }
        let bound = self.opts.bound as i128;
        if dom.iter().any(|(_, hi)| hi.is_none_or(|h| h > bound)) {
            self.exhaustive = false;
        }
        let mut clipped: Vec<(i128, i128)> = Vec::with_capacity(n);
        for (lo, hi) in dom {
            let hi = hi.map_or(bound, |h| h.min(bound));
            if lo > hi {
                return None;
            }
            clipped.push((lo, hi));
        }
        let assignment = self.dfs(&conj, clipped)?;
        let mut values: Values = conj
            .vars
            .iter()
            .zip(&assignment)
            .map(|(v, x)| (v.clone(), *x as u64))
            .collect();
        for (v, t) in &conj.defs {
            let x = t.eval(&values).expect("definitions range over search variables");
            debug_assert!(x >= 0);
            values.insert(v.clone(), x as u64);
        }
        Some(values)
    }

    fn dfs(&mut self, conj: &Conjunction, mut dom: Vec<(i128, i128)>) -> Option<Vec<i128>> {
        self.nodes += 1;
        if self.nodes > self.opts.node_budget {
            self.budget_hit = true;
            return None;
        }
        let mut open: Vec<(i128, Option<i128>)> = dom.iter().map(|&(l, h)| (l, Some(h))).collect();
        if !conj.propagate(&mut open) {
            return None;
        }
        for (d, o) in dom.iter_mut().zip(&open) {
            *d = (o.0, o.1.expect("bounded"));
        }
        if !conj.ground_divisibility_ok(&dom) {
            return None;
        }
        let pick = dom
            .iter()
            .enumerate()
            .filter(|(_, (l, h))| l < h)
            .min_by_key(|(_, (l, h))| h.saturating_sub(*l))
            .map(|(i, _)| i);
        let Some(i) = pick else {
            return Some(dom.iter().map(|(l, _)| *l).collect());
        };
        let (lo, hi) = dom[i];
        for val in lo..=hi {
            let mut next = dom.clone();
            next[i] = (val, val);
            if let Some(found) = self.dfs(conj, next) {
                return Some(found);
            }
            if self.budget_hit {
                return None;
            }
        }
        None
    }
}

/// Linear expression over variable indices.
#[derive(Clone, Debug)]
struct Lin {
    c: i128,
    terms: Vec<(usize, i128)>,
}

impl Lin {
    fn neg(&self) -> Lin {
        Lin {
            c: -self.c,
            terms: self.terms.iter().map(|&(i, a)| (i, -a)).collect(),
        }
    }

    fn min_max(&self, dom: &[(i128, Option<i128>)]) -> (Option<i128>, Option<i128>) {
        let mut lo = Some(self.c);
        let mut hi = Some(self.c);
        for &(i, a) in &self.terms {
            let (l, h) = dom[i];
            let (tl, th) = if a > 0 {
                (a.checked_mul(l), h.and_then(|h| a.checked_mul(h)))
            } else {
                (h.and_then(|h| a.checked_mul(h)), a.checked_mul(l))
            };
            lo = lo.zip(tl).and_then(|(x, y)| x.checked_add(y));
            hi = hi.zip(th).and_then(|(x, y)| x.checked_add(y));
        }
        (lo, hi)
    }

    fn value(&self, dom: &[(i128, i128)]) -> Option<i128> {
        let mut acc = self.c;
        for &(i, a) in &self.terms {
            let (l, h) = dom[i];
            if l != h {
                return None;
            }
            acc = acc.checked_add(a.checked_mul(l)?)?;
        }
        Some(acc)
    }
}

struct Conjunction {
    vars: Vec<String>,
    /// `lin <= 0`
    les: Vec<Lin>,
    divs: Vec<(Lin, Lin)>,
    /// Eliminated variables with their defining terms over `vars`.
    defs: Vec<(String, LinTerm)>,
}

impl Conjunction {
    /// Eliminates unit-coefficient equalities; `None` on a ground contradiction.
    fn build(mut atoms: Vec<Atom>) -> Option<Conjunction> {
        let mut defs: Vec<(String, LinTerm)> = Vec::new();
        loop {
            let mut pick = None;
            for (k, a) in atoms.iter_mut().enumerate() {
                if let Atom::Eq(t) = a {
                    *t = normalize_eq(t)?;
                    if let Some((v, c)) = t.coeffs.iter().find(|(_, c)| c.abs() == 1) {
                        pick = Some((k, v.clone(), *c));
                        break;
                    }
                }
            }
            let Some((k, v, c)) = pick else { break };
            let Atom::Eq(t) = atoms.swap_remove(k) else { unreachable!() };
            let mut rest = t.clone();
            rest.coeffs.remove(&v);
            let by = rest * (-c);
            atoms = atoms.iter().map(|a| a.substitute(&v, &by)).collect();
            for (_, d) in defs.iter_mut() {
                *d = d.substitute(&v, &by);
            }
            atoms.push(Atom::Le(-by.clone()));
            defs.push((v, by));
        }

        let mut names = BTreeSet::new();
        for a in &atoms {
            match a {
                Atom::Le(t) | Atom::Eq(t) => names.extend(t.vars().map(str::to_string)),
                Atom::Div(f, g) => {
                    names.extend(f.vars().map(str::to_string));
                    names.extend(g.vars().map(str::to_string));
                }
            }
        }
        for (_, d) in &defs {
            names.extend(d.vars().map(str::to_string));
        }
        let vars: Vec<String> = names.into_iter().collect();
        let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let lin = |t: &LinTerm| Lin {
            c: t.constant as i128,
            terms: t.coeffs.iter().map(|(v, a)| (index[v.as_str()], *a as i128)).collect(),
        };
        let mut les = Vec::new();
        let mut divs = Vec::new();
        for a in &atoms {
            match a {
                Atom::Le(t) => {
                    if t.is_constant() && t.constant > 0 {
                        return None;
                    }
                    les.push(lin(t));
                }
                Atom::Eq(t) => {
                    let l = lin(t);
                    les.push(l.neg());
                    les.push(l);
                }
                Atom::Div(f, g) => {
                    if f.is_constant() && g.is_constant() && !divides(f.constant as i128, g.constant as i128) {
                        return None;
                    }
                    divs.push((lin(f), lin(g)));
                }
            }
        }
        Some(Conjunction { vars, les, divs, defs })
    }

    fn root_feasible(&self) -> bool {
        let mut dom = vec![(0, None); self.vars.len()];
        self.propagate(&mut dom)
    }

    /// Bounds propagation; false if some domain becomes empty.
    fn propagate(&self, dom: &mut [(i128, Option<i128>)]) -> bool {
        for _ in 0..PROPAGATION_ROUNDS {
            let mut changed = false;
            for l in &self.les {
                match tighten(l, dom) {
                    None => return false,
                    Some(c) => changed |= c,
                }
            }
            for (f, g) in &self.divs {
                // f | g with g != 0 forces |f| <= |g|
                let (glo, ghi) = g.min_max(dom);
                let nonzero = glo.is_some_and(|x| x > 0) || ghi.is_some_and(|x| x < 0);
                if !nonzero {
                    continue;
                }
                let (Some(glo), Some(ghi)) = (glo, ghi) else { continue };
                let m = glo.saturating_abs().max(ghi.saturating_abs());
                for side in [
                    Lin { c: f.c.saturating_sub(m), terms: f.terms.clone() },
                    Lin { c: (-f.c).saturating_sub(m), terms: f.neg().terms },
                ] {
                    match tighten(&side, dom) {
                        None => return false,
                        Some(c) => changed |= c,
                    }
                }
            }
            if !changed {
                break;
            }
        }
        true
    }

    fn ground_divisibility_ok(&self, dom: &[(i128, i128)]) -> bool {
        self.divs.iter().all(|(f, g)| match (f.value(dom), g.value(dom)) {
            (Some(a), Some(b)) => divides(a, b),
            _ => true,
        })
    }
}

/// Tightens domains with `l <= 0`. Returns `None` if infeasible, otherwise
/// whether any bound changed.
fn tighten(l: &Lin, dom: &mut [(i128, Option<i128>)]) -> Option<bool> {
    let mut changed = false;
    if l.terms.is_empty() {
        return if l.c <= 0 { Some(false) } else { None };
    }
    for (j, &(vj, aj)) in l.terms.iter().enumerate() {
        // aj·vj <= -c - Σ_{i≠j} ai·vi, using the minimum of the other terms
        let mut rhs = Some(-l.c);
        for (i, &(vi, ai)) in l.terms.iter().enumerate() {
            if i == j {
                continue;
            }
            let (lo, hi) = dom[vi];
            let min_term = if ai > 0 { ai.checked_mul(lo) } else { hi.and_then(|h| ai.checked_mul(h)) };
            rhs = rhs.zip(min_term).and_then(|(r, m)| r.checked_sub(m));
        }
        // an overflowing bound is no bound
        let Some(rhs) = rhs.filter(|&r| r != i128::MIN) else { continue };
        let (lo, hi) = dom[vj];
        if aj > 0 {
            let b = rhs.div_euclid(aj);
            if hi.is_none_or(|h| b < h) {
                dom[vj].1 = Some(b);
                changed = true;
            }
        } else {
            // vj >= ceil(rhs / aj)
            let Some(b) = ceil_div(rhs, aj) else { continue };
            if b > lo {
                dom[vj].0 = b;
                changed = true;
            }
        }
        let (lo, hi) = dom[vj];
        if hi.is_some_and(|h| lo > h) {
            return None;
        }
    }
    Some(changed)
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> Option<i128> {
    floor_div(-a, b).checked_neg()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Divides an equality by the gcd of its coefficients; `None` if the
/// constant is not divisible (no integer solutions).
fn normalize_eq(t: &LinTerm) -> Option<LinTerm> {
    if t.is_constant() {
        return if t.constant == 0 { Some(t.clone()) } else { None };
    }
    let g = t.coeffs.values().fold(0, |acc, c| gcd(acc, *c));
    if g <= 1 {
        return Some(t.clone());
    }
    if t.constant % g != 0 {
        return None;
    }
    Some(LinTerm {
        constant: t.constant / g,
        coeffs: t.coeffs.iter().map(|(v, c)| (v.clone(), c / g)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pad::eval::{eval, Truth};

    fn v(n: &str) -> LinTerm {
        LinTerm::var(n)
    }

    #[test]
    fn divisibility_with_box() {
        // x = 2 ∧ x | y ∧ y <= 6
        let phi = PadFormula::and([
            PadFormula::eq(v("x"), 2),
            PadFormula::divides(v("x"), v("y")),
            PadFormula::le(v("y"), 6),
        ]);
        let r = bounded_sat(&phi, 10);
        let m = r.model().expect("sat");
        assert_eq!(m.get("x"), Some(2));
        assert!([0, 2, 4, 6].contains(&m.get("y").unwrap()));
    }

    #[test]
    fn constant_contradiction() {
        let r = bounded_sat(&PadFormula::eq(1, 2), 5);
        assert_eq!(r, BoundedSat::NoModelUpTo { bound: 5, exhaustive: true });
    }

    #[test]
    fn unbounded_search_is_not_exhaustive() {
        // 3 | x ∧ x >= 1 ∧ 2 | x, bound 4: smallest model x = 6 lies outside
        let phi = PadFormula::and([
            PadFormula::divides(3, v("x")),
            PadFormula::divides(2, v("x")),
            PadFormula::le(1, v("x")),
        ]);
        assert_eq!(bounded_sat(&phi, 4), BoundedSat::NoModelUpTo { bound: 4, exhaustive: false });
        assert_eq!(bounded_sat(&phi, 6).model().unwrap().get("x"), Some(6));
    }

    #[test]
    fn bounded_no_model_is_exhaustive() {
        // x <= 5 ∧ y <= x ∧ 7 | (x + y) ∧ x + y >= 1: x+y ∈ {7} needs x>=4,y<=x: x=4,y=3
        let phi = PadFormula::and([
            PadFormula::le(v("x"), 5),
            PadFormula::le(v("y"), v("x")),
            PadFormula::divides(7, v("x") + v("y")),
            PadFormula::le(1, v("x") + v("y")),
        ]);
        assert!(bounded_sat(&phi, 100).is_sat());
        let phi2 = PadFormula::and([phi, PadFormula::le(v("x"), 3)]);
        assert!(bounded_sat(&phi2, 100).is_unsat());
    }

    #[test]
    fn existentials_get_witnesses() {
        // ∃k. x = 1 + 3k ∧ x >= 5
        let phi = PadFormula::and([
            PadFormula::exists(["k".into()], PadFormula::eq(v("x"), LinTerm::constant(1) + LinTerm::scaled_var("k", 3))),
            PadFormula::le(5, v("x")),
        ]);
        let r = bounded_sat(&phi, 20);
        let m = r.model().unwrap();
        assert_eq!(m.get("x"), Some(7));
        assert_eq!(m.get("k.e0"), Some(2));
        assert!(check_model(&phi, &m.values).unwrap());
        assert_eq!(eval(&phi, &m.free_part(&phi), 20).unwrap(), Truth::True);
    }

    #[test]
    fn disjunction_branches() {
        let phi = PadFormula::and([
            PadFormula::or([PadFormula::eq(v("x"), 100), PadFormula::eq(v("x"), 3)]),
            PadFormula::le(v("x"), 50),
        ]);
        assert_eq!(bounded_sat(&phi, 10).model().unwrap().get("x"), Some(3));
        assert!(bounded_sat(&PadFormula::ff(), 10).is_unsat());
        assert!(bounded_sat(&PadFormula::tt(), 0).is_sat());
    }

    #[test]
    fn gcd_normalization_refutes() {
        // 2x - 2y = 1 has no integer solution
        let phi = PadFormula::eq(LinTerm::scaled_var("x", 2) - LinTerm::scaled_var("y", 2), 1);
        assert!(bounded_sat(&phi, 50).is_unsat());
    }

    #[test]
    fn ceil_div_signs() {
        assert_eq!(ceil_div(7, 2), Some(4));
        assert_eq!(ceil_div(-7, 2), Some(-3));
        assert_eq!(ceil_div(7, -2), Some(-3));
        assert_eq!(ceil_div(-7, -2), Some(4));
        assert_eq!(ceil_div(6, -2), Some(-3));
    }
}
