//! Linear terms and existential formulas of Presburger arithmetic with
//! divisibility. Variables are named by strings and range over ℕ.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A linear polynomial `constant + Σ coeff·var` with integer coefficients.
///
/// Zero coefficients are never stored, so structural equality coincides with
/// equality of polynomials.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinTerm {
    pub constant: i64,
    pub coeffs: BTreeMap<String, i64>,
}

impl LinTerm {
    pub fn constant(c: i64) -> Self {
        LinTerm {
            constant: c,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Self::scaled_var(name, 1)
    }

    pub fn scaled_var(name: impl Into<String>, coeff: i64) -> Self {
        let mut t = LinTerm::constant(0);
        t.add_coeff(name.into(), coeff);
        t
    }

    pub fn coeff(&self, name: &str) -> i64 {
        self.coeffs.get(name).copied().unwrap_or(0)
    }

    pub fn add_coeff(&mut self, name: String, c: i64) {
        if c == 0 {
            return;
        }
        let entry = self.coeffs.entry(name.clone()).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.coeffs.remove(&name);
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(String::as_str)
    }

    /// Evaluates under `mu`; `None` if some variable is unassigned.
    pub fn eval(&self, mu: &BTreeMap<String, u64>) -> Option<i128> {
        let mut acc = self.constant as i128;
        for (v, c) in &self.coeffs {
            acc += (*c as i128) * (*mu.get(v)? as i128);
        }
        Some(acc)
    }

    /// Replaces `name` by `by` everywhere.
    pub fn substitute(&self, name: &str, by: &LinTerm) -> LinTerm {
        let c = self.coeff(name);
        if c == 0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.coeffs.remove(name);
        out + by.clone() * c
    }

    pub fn rename(&self, from: &str, to: &str) -> LinTerm {
        self.substitute(from, &LinTerm::var(to))
    }
}

impl Add for LinTerm {
    type Output = LinTerm;
    fn add(mut self, rhs: LinTerm) -> LinTerm {
        self.constant += rhs.constant;
        for (v, c) in rhs.coeffs {
            self.add_coeff(v, c);
        }
        self
    }
}

impl Sub for LinTerm {
    type Output = LinTerm;
    fn sub(self, rhs: LinTerm) -> LinTerm {
        self + (-rhs)
    }
}

impl Neg for LinTerm {
    type Output = LinTerm;
    fn neg(self) -> LinTerm {
        self * -1
    }
}

impl Mul<i64> for LinTerm {
    type Output = LinTerm;
    fn mul(self, k: i64) -> LinTerm {
        if k == 0 {
            return LinTerm::constant(0);
        }
        LinTerm {
            constant: self.constant * k,
            coeffs: self.coeffs.into_iter().map(|(v, c)| (v, c * k)).collect(),
        }
    }
}

impl From<i64> for LinTerm {
    fn from(c: i64) -> Self {
        LinTerm::constant(c)
    }
}

impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let (sign, mag) = if *c < 0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}*{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", -self.constant)
        } else {
            Ok(())
        }
    }
}

/// Existential PAD formula. Negation is deliberately absent: every formula is
/// positive, so existential quantifiers can always be pulled to the front.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PadFormula {
    Le(LinTerm, LinTerm),
    Eq(LinTerm, LinTerm),
    /// `Div(f, g)` holds iff `g = k·f` for some integer `k`; in particular
    /// `0 | g` iff `g = 0`.
    Div(LinTerm, LinTerm),
    And(Vec<PadFormula>),
    Or(Vec<PadFormula>),
    Exists(String, Box<PadFormula>),
}

impl PadFormula {
    pub fn tt() -> Self {
        PadFormula::And(Vec::new())
    }

    pub fn ff() -> Self {
        PadFormula::Or(Vec::new())
    }

    pub fn le(f: impl Into<LinTerm>, g: impl Into<LinTerm>) -> Self {
        PadFormula::Le(f.into(), g.into())
    }

    pub fn lt(f: impl Into<LinTerm>, g: impl Into<LinTerm>) -> Self {
        PadFormula::Le(f.into() + LinTerm::constant(1), g.into())
    }

    pub fn ge(f: impl Into<LinTerm>, g: impl Into<LinTerm>) -> Self {
        PadFormula::Le(g.into(), f.into())
    }

    pub fn eq(f: impl Into<LinTerm>, g: impl Into<LinTerm>) -> Self {
        PadFormula::Eq(f.into(), g.into())
    }

    pub fn divides(f: impl Into<LinTerm>, g: impl Into<LinTerm>) -> Self {
        PadFormula::Div(f.into(), g.into())
    }

    /// Conjunction, flattening nested conjunctions.
    pub fn and(parts: impl IntoIterator<Item = PadFormula>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                PadFormula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            PadFormula::And(out)
        }
    }

    pub fn or(parts: impl IntoIterator<Item = PadFormula>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                PadFormula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            PadFormula::Or(out)
        }
    }

    pub fn exists(vars: impl IntoIterator<Item = String>, body: PadFormula) -> Self {
        let vars: Vec<String> = vars.into_iter().collect();
        vars.into_iter()
            .rev()
            .fold(body, |acc, v| PadFormula::Exists(v, Box::new(acc)))
    }

    pub fn is_divisibility_free(&self) -> bool {
        match self {
            PadFormula::Div(..) => false,
            PadFormula::Le(..) | PadFormula::Eq(..) => true,
            PadFormula::And(ps) | PadFormula::Or(ps) => ps.iter().all(Self::is_divisibility_free),
            PadFormula::Exists(_, b) => b.is_divisibility_free(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut term = |t: &LinTerm| {
            for v in t.vars() {
                if !bound.iter().any(|b| b == v) {
                    out.insert(v.to_string());
                }
            }
        };
        match self {
            PadFormula::Le(f, g) | PadFormula::Eq(f, g) | PadFormula::Div(f, g) => {
                term(f);
                term(g);
            }
            PadFormula::And(ps) | PadFormula::Or(ps) => {
                for p in ps {
                    p.collect_free(bound, out);
                }
            }
            PadFormula::Exists(v, b) => {
                bound.push(v.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Capture-avoiding renaming of a free variable.
    pub fn rename_free(&self, from: &str, to: &str) -> PadFormula {
        match self {
            PadFormula::Le(f, g) => PadFormula::Le(f.rename(from, to), g.rename(from, to)),
            PadFormula::Eq(f, g) => PadFormula::Eq(f.rename(from, to), g.rename(from, to)),
            PadFormula::Div(f, g) => PadFormula::Div(f.rename(from, to), g.rename(from, to)),
            PadFormula::And(ps) => PadFormula::And(ps.iter().map(|p| p.rename_free(from, to)).collect()),
            PadFormula::Or(ps) => PadFormula::Or(ps.iter().map(|p| p.rename_free(from, to)).collect()),
            PadFormula::Exists(v, b) if v == from => PadFormula::Exists(v.clone(), b.clone()),
            PadFormula::Exists(v, b) => PadFormula::Exists(v.clone(), Box::new(b.rename_free(from, to))),
        }
    }

    /// Number of nodes, for diagnostics.
    pub fn size(&self) -> usize {
        match self {
            PadFormula::Le(..) | PadFormula::Eq(..) | PadFormula::Div(..) => 1,
            PadFormula::And(ps) | PadFormula::Or(ps) => 1 + ps.iter().map(Self::size).sum::<usize>(),
            PadFormula::Exists(_, b) => 1 + b.size(),
        }
    }
}

impl fmt::Display for PadFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PadFormula::Le(a, b) => write!(f, "{a} <= {b}"),
            PadFormula::Eq(a, b) => write!(f, "{a} = {b}"),
            PadFormula::Div(a, b) => write!(f, "({a}) | ({b})"),
            PadFormula::And(ps) if ps.is_empty() => write!(f, "true"),
            PadFormula::Or(ps) if ps.is_empty() => write!(f, "false"),
            PadFormula::And(ps) => join(f, ps, " && "),
            PadFormula::Or(ps) => join(f, ps, " || "),
            PadFormula::Exists(v, b) => write!(f, "exists {v}. ({b})"),
        }
    }
}

fn join(f: &mut fmt::Formatter<'_>, ps: &[PadFormula], sep: &str) -> fmt::Result {
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            write!(f, "{sep}")?;
        }
        match p {
            PadFormula::And(_) | PadFormula::Or(_) => write!(f, "({p})")?,
            _ => write!(f, "{p}")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_vanish() {
        let t = LinTerm::var("x") - LinTerm::var("x") + LinTerm::constant(3);
        assert!(t.is_constant());
        assert_eq!(t, LinTerm::constant(3));
    }

    #[test]
    fn substitution() {
        let t = LinTerm::scaled_var("y", 2) + LinTerm::var("x");
        let s = t.substitute("y", &(LinTerm::var("z") + LinTerm::constant(1)));
        assert_eq!(s.coeff("z"), 2);
        assert_eq!(s.coeff("x"), 1);
        assert_eq!(s.constant, 2);
    }

    #[test]
    fn free_vars_respect_binders() {
        let phi = PadFormula::exists(
            ["d".to_string()],
            PadFormula::and([
                PadFormula::le(2, LinTerm::var("d")),
                PadFormula::divides(LinTerm::var("d"), LinTerm::var("x")),
            ]),
        );
        assert_eq!(phi.free_vars().into_iter().collect::<Vec<_>>(), vec!["x"]);
    }

    #[test]
    fn display_is_readable() {
        let t = LinTerm::var("y") - LinTerm::var("y'");
        assert_eq!(t.to_string(), "y - y'");
        assert_eq!(LinTerm::constant(-4).to_string(), "-4");
        let phi = PadFormula::divides(LinTerm::var("x"), t);
        assert_eq!(phi.to_string(), "(x) | (y - y')");
    }
}
