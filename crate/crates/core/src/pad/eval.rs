//! Direct evaluation of PAD formulas under an assignment.

use std::collections::BTreeMap;

use super::formula::{LinTerm, PadFormula};
use super::PadError;

/// Three-valued outcome of evaluation: existential quantifiers are searched
/// only up to a witness bound, so a failed search may be inconclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn is_true(self) -> bool {
        self == Truth::True
    }

    fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

/// `f | g` over the integers, with `0 | g` iff `g = 0`.
pub fn divides(f: i128, g: i128) -> bool {
    if f == 0 {
        g == 0
    } else {
        g % f == 0
    }
}

/// Evaluates `phi` under `mu`, which must cover every free variable.
///
/// An existential `∃v. body` is decided by trying `v = 0, 1, …, witness_bound`.
/// When the body's top-level conjuncts syntactically bound `v` from above by
/// a value within the witness bound, a failed search is conclusive (`False`);
/// otherwise it yields `Unknown`.
pub fn eval(phi: &PadFormula, mu: &BTreeMap<String, u64>, witness_bound: u64) -> Result<Truth, PadError> {
    for v in phi.free_vars() {
        if !mu.contains_key(&v) {
            return Err(PadError::Unbound(v));
        }
    }
    let mut mu = mu.clone();
    Ok(eval_rec(phi, &mut mu, witness_bound))
}

fn eval_term(t: &LinTerm, mu: &BTreeMap<String, u64>) -> i128 {
    t.eval(mu).expect("free variables checked before evaluation")
}

fn eval_rec(phi: &PadFormula, mu: &mut BTreeMap<String, u64>, wb: u64) -> Truth {
    match phi {
        PadFormula::Le(f, g) => (eval_term(f, mu) <= eval_term(g, mu)).into(),
        PadFormula::Eq(f, g) => (eval_term(f, mu) == eval_term(g, mu)).into(),
        PadFormula::Div(f, g) => divides(eval_term(f, mu), eval_term(g, mu)).into(),
        PadFormula::And(ps) => {
            let mut acc = Truth::True;
            for p in ps {
                acc = acc.and(eval_rec(p, mu, wb));
                if acc == Truth::False {
                    break;
                }
            }
            acc
        }
        PadFormula::Or(ps) => {
            let mut acc = Truth::False;
            for p in ps {
                acc = acc.or(eval_rec(p, mu, wb));
                if acc == Truth::True {
                    break;
                }
            }
            acc
        }
        PadFormula::Exists(v, body) => {
            let shadowed = mu.remove(v);
            let syntactic = syntactic_upper_bound(v, body, mu);
            let limit = match syntactic {
                Some(ub) if ub < 0 => None,
                Some(ub) => Some((ub as u64).min(wb)),
                None => Some(wb),
            };
            let mut result = Truth::False;
            if let Some(limit) = limit {
                for w in 0..=limit {
                    mu.insert(v.clone(), w);
                    result = result.or(eval_rec(body, mu, wb));
                    if result == Truth::True {
                        break;
                    }
                }
            }
            mu.remove(v);
            if let Some(old) = shadowed {
                mu.insert(v.clone(), old);
            }
            let conclusive = matches!(syntactic, Some(ub) if ub <= wb as i128);
            if result == Truth::False && !conclusive {
                Truth::Unknown
            } else {
                result
            }
        }
    }
}

/// Upper bound on `v` implied by a single top-level atom of `body`, given the
/// other variables' values. `None` if no atom bounds `v`.
fn syntactic_upper_bound(v: &str, body: &PadFormula, mu: &BTreeMap<String, u64>) -> Option<i128> {
    let mut atoms = Vec::new();
    top_conjuncts(body, &mut atoms);
    let mut best: Option<i128> = None;
    let mut offer = |b: i128| best = Some(best.map_or(b, |x| x.min(b)));
    for atom in atoms {
        match atom {
            PadFormula::Le(f, g) => {
                if let Some(b) = le_bound(v, &(f.clone() - g.clone()), mu) {
                    offer(b);
                }
            }
            PadFormula::Eq(f, g) => {
                let h = f.clone() - g.clone();
                for h in [h.clone(), -h] {
                    if let Some(b) = le_bound(v, &h, mu) {
                        offer(b);
                    }
                }
            }
            PadFormula::Div(f, g) => {
                if g.coeff(v) != 0 || f.coeff(v) == 0 {
                    continue;
                }
                let Some(gv) = g.eval(mu) else { continue };
                if gv == 0 {
                    continue;
                }
                let a = f.coeff(v) as i128;
                let mut rest_t = f.clone();
                rest_t.coeffs.remove(v);
                let Some(rest) = rest_t.eval(mu) else { continue };
                // |a·v + rest| <= |g|
                let b = if a > 0 {
                    (gv.abs() - rest).div_euclid(a)
                } else {
                    (rest + gv.abs()).div_euclid(-a)
                };
                offer(b);
            }
            _ => {}
        }
    }
    best
}

/// From `h <= 0` with positive coefficient on `v`.
fn le_bound(v: &str, h: &LinTerm, mu: &BTreeMap<String, u64>) -> Option<i128> {
    let a = h.coeff(v) as i128;
    if a <= 0 {
        return None;
    }
    let mut rest = h.clone();
    rest.coeffs.remove(v);
    let r = rest.eval(mu)?;
    Some((-r).div_euclid(a))
}

fn top_conjuncts<'a>(phi: &'a PadFormula, out: &mut Vec<&'a PadFormula>) {
    match phi {
        PadFormula::And(ps) => ps.iter().for_each(|p| top_conjuncts(p, out)),
        other => out.push(other),
    }
}

/// Renames every bound variable to a fresh, globally unique name and drops
/// the binders. Returns the quantifier-free matrix and the fresh names in
/// traversal order. Sound because formulas contain no negation.
pub fn prenex(phi: &PadFormula) -> (PadFormula, Vec<String>) {
    let mut fresh = Vec::new();
    let m = prenex_rec(phi, &mut fresh);
    (m, fresh)
}

fn prenex_rec(phi: &PadFormula, fresh: &mut Vec<String>) -> PadFormula {
    match phi {
        PadFormula::And(ps) => PadFormula::And(ps.iter().map(|p| prenex_rec(p, fresh)).collect()),
        PadFormula::Or(ps) => PadFormula::Or(ps.iter().map(|p| prenex_rec(p, fresh)).collect()),
        PadFormula::Exists(v, b) => {
            let name = format!("{v}.e{}", fresh.len());
            fresh.push(name.clone());
            let renamed = b.rename_free(v, &name);
            prenex_rec(&renamed, fresh)
        }
        atom => atom.clone(),
    }
}

/// Checks a complete model: free variables and the witnesses of every
/// existential (under the names assigned by [`prenex`]). No search happens.
pub fn check_model(phi: &PadFormula, model: &BTreeMap<String, u64>) -> Result<bool, PadError> {
    let (matrix, _) = prenex(phi);
    match eval(&matrix, model, 0)? {
        Truth::True => Ok(true),
        _ => Ok(false),
    }
}
