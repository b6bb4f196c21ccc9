//! Acceleration of 1-variable-reducing cycles into PAD formulas, skeleton
//! formulas, and the decision procedure for flat counter systems.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::ProgressionSet;
use crate::counters::{CounterSystem, Guard};
use crate::flatness::{skeletons, CycleInfo, Flatness, Skeleton, DEFAULT_SKELETON_LIMIT};
use crate::pad::{bounded_sat_with, BoundedSat, LinTerm, PadFormula, PadModel, SearchOptions};
use crate::terms::Var;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AccelError {
    #[error("cycle is not 1-variable-reducing")]
    NotReducing,
    #[error("state {0} is not on the cycle")]
    NotOnCycle(usize),
    #[error("drop coefficient {0} does not fit a formula coefficient")]
    Overflow(BigUint),
}

/// `M = a₀ + Σ a_x·x`: how much the reduced counter drops per iteration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropExpression {
    pub reduced: Var,
    #[serde(with = "binary")]
    pub a0: BigUint,
    #[serde(with = "binary_map")]
    pub a: BTreeMap<Var, BigUint>,
}

impl DropExpression {
    pub fn new(cycle: &CycleInfo) -> Result<Self, AccelError> {
        let reduced = crate::flatness::cycle_check(&cycle.guards).ok_or(AccelError::NotReducing)?;
        let mut a0 = BigUint::ZERO;
        let mut a = BTreeMap::new();
        for g in &cycle.guards {
            match g {
                Guard::Dec(_) => a0 += 1u32,
                Guard::Sub(_, z) => *a.entry(*z).or_insert(BigUint::ZERO) += 1u32,
                _ => unreachable!("checked reducing"),
            }
        }
        Ok(DropExpression { reduced, a0, a })
    }

    pub fn eval(&self, v: &[u64]) -> BigUint {
        self.a.iter().fold(self.a0.clone(), |acc, (x, c)| acc + c * v[x.index()])
    }

    pub fn to_term(&self, names: &[String]) -> Result<LinTerm, AccelError> {
        let conv = |c: &BigUint| i64::try_from(c).map_err(|_| AccelError::Overflow(c.clone()));
        let mut t = LinTerm::constant(conv(&self.a0)?);
        for (x, c) in &self.a {
            t.add_coeff(names[x.index()].clone(), conv(c)?);
        }
        Ok(t)
    }
}

mod binary {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{n:b}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 2).ok_or_else(|| serde::de::Error::custom("expected a binary numeral"))
    }
}

mod binary_map {
    use std::collections::BTreeMap;

    use num_bigint::BigUint;
    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::terms::Var;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Var, BigUint>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(&k.0, &format!("{v:b}"))?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Var, BigUint>, D::Error> {
        let raw = BTreeMap::<u32, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                BigUint::parse_bytes(v.as_bytes(), 2)
                    .map(|n| (Var(k), n))
                    .ok_or_else(|| serde::de::Error::custom("expected a binary numeral"))
            })
            .collect()
    }
}

/// Supplies fresh counter vectors `x#1, y#1, …`.
#[derive(Clone, Debug)]
pub struct VectorNames {
    names: Vec<String>,
    next: usize,
}

impl VectorNames {
    pub fn new(names: &[String]) -> Self {
        VectorNames {
            names: names.to_vec(),
            next: 0,
        }
    }

    pub fn initial(&self) -> Vec<String> {
        self.names.clone()
    }

    pub fn primed(&self) -> Vec<String> {
        self.names.iter().map(|n| format!("{n}'")).collect()
    }

    pub fn fresh(&mut self) -> Vec<String> {
        self.next += 1;
        self.names.iter().map(|n| format!("{n}#{}", self.next)).collect()
    }
}

/// Any number of iterations of the cycle from one of its states:
/// `y′ = y ∨ (⋀ z ≥ 1 ∧ y′ < y ∧ M | y − y′)`, other counters fixed.
///
/// The `z ≥ 1` conjuncts make a blocked `SUB(y, z)` with `z = 0` stop the
/// loop even when `M` is positive.
pub fn loop_formula(drop: &DropExpression, pre: &[String], post: &[String]) -> Result<PadFormula, AccelError> {
    let y = drop.reduced.index();
    let m = drop.to_term(pre)?;
    let (yv, yv2) = (LinTerm::var(pre[y].clone()), LinTerm::var(post[y].clone()));
    let frame = (0..pre.len())
        .filter(|&i| i != y)
        .map(|i| PadFormula::eq(LinTerm::var(post[i].clone()), LinTerm::var(pre[i].clone())));
    let iterate = PadFormula::and(
        drop.a
            .keys()
            .map(|z| PadFormula::ge(LinTerm::var(pre[z.index()].clone()), 1))
            .chain([PadFormula::lt(yv2.clone(), yv.clone()), PadFormula::divides(m, yv.clone() - yv2.clone())]),
    );
    Ok(PadFormula::and(frame.chain([PadFormula::or([PadFormula::eq(yv2, yv), iterate])])))
}

/// Guards of `path` composed from `pre` to `post` through fresh vectors,
/// which are returned for quantification.
fn path_formula<S>(cs: &CounterSystem<S>, path: &[usize], pre: &[String], post: &[String], names: &mut VectorNames, bound: &mut Vec<String>) -> PadFormula {
    let mut parts = Vec::new();
    let mut cur = pre.to_vec();
    for (i, &t) in path.iter().enumerate() {
        let next = if i + 1 == path.len() {
            post.to_vec()
        } else {
            let v = names.fresh();
            bound.extend(v.iter().cloned());
            v
        };
        parts.push(cs.transitions[t].to_formula(&cur, &next));
        cur = next;
    }
    if path.is_empty() {
        parts.extend((0..pre.len()).map(|i| PadFormula::eq(LinTerm::var(post[i].clone()), LinTerm::var(pre[i].clone()))));
    }
    PadFormula::and(parts)
}

/// `φ_{p,q}(pre, post)`: iterate the cycle at `p`, then follow it to `q`.
pub fn accelerate<S>(cs: &CounterSystem<S>, cycle: &CycleInfo, p: usize, q: usize, pre: &[String], post: &[String], names: &mut VectorNames) -> Result<PadFormula, AccelError> {
    let drop = DropExpression::new(cycle)?;
    let path = cycle.path(p, q).ok_or(AccelError::NotOnCycle(if cycle.position(p).is_none() { p } else { q }))?;
    if path.is_empty() {
        return loop_formula(&drop, pre, post);
    }
    let mid = names.fresh();
    let mut bound = mid.clone();
    let lp = loop_formula(&drop, pre, &mid)?;
    let rest = path_formula(cs, &path, &mid, post, names, &mut bound);
    Ok(PadFormula::exists(bound, PadFormula::and([lp, rest])))
}

/// Runs of the skeleton from the initial vector `names` to the primed
/// vector, conjoined with `psi`.
pub fn skeleton_formula<S>(cs: &CounterSystem<S>, flat: &Flatness, sk: &Skeleton, psi: &PadFormula, names: &mut VectorNames) -> Result<PadFormula, AccelError> {
    let mut bound = Vec::new();
    let mut parts = Vec::new();
    let mut cur = names.initial();
    let last = sk.parts.len() - 1;
    for (i, part) in sk.parts.iter().enumerate() {
        if i > 0 {
            let entry = names.fresh();
            bound.extend(entry.iter().cloned());
            parts.push(cs.transitions[sk.bridges[i - 1]].to_formula(&cur, &entry));
            cur = entry;
        }
        let exit = if i == last {
            names.primed()
        } else {
            let v = names.fresh();
            bound.extend(v.iter().cloned());
            v
        };
        let phi = match part.cycle {
            Some(c) => accelerate(cs, &flat.cycles[c], part.entry, part.exit, &cur, &exit, names)?,
            None => path_formula(cs, &[], &cur, &exit, names, &mut bound),
        };
        parts.push(phi);
        cur = exit;
    }
    parts.push(psi.clone());
    Ok(PadFormula::exists(bound, PadFormula::and(parts)))
}

/// `x ∈ S` for each variable's progression set.
pub fn membership_formula(sets: &BTreeMap<Var, ProgressionSet>, names: &[String]) -> PadFormula {
    PadFormula::and(sets.iter().map(|(x, s)| s.to_formula(&names[x.index()])))
}

#[derive(Clone, Debug)]
pub struct FlatOptions {
    pub search: SearchOptions,
    pub skeleton_limit: usize,
}

impl Default for FlatOptions {
    fn default() -> Self {
        FlatOptions {
            search: SearchOptions::with_bound(64),
            skeleton_limit: DEFAULT_SKELETON_LIMIT,
        }
    }
}

#[derive(Clone, Debug)]
pub enum FlatVerdict {
    Sat {
        model: PadModel,
        skeleton: usize,
    },
    NoModelFound {
        bound: u64,
        skeletons: usize,
        /// The skeleton limit was hit.
        partial: bool,
        /// Every skeleton formula was shown to have no model at all.
        exhaustive: bool,
    },
    Unsupported(String),
}

/// One query per skeleton: skeleton formula, `psi` over the initial and
/// primed vectors, and the initial length sets.
pub fn skeleton_queries<S>(
    cs: &CounterSystem<S>,
    flat: &Flatness,
    from: usize,
    to: usize,
    psi: &PadFormula,
    initial_sets: Option<&BTreeMap<Var, ProgressionSet>>,
    limit: usize,
) -> Result<(Vec<PadFormula>, bool), String> {
    if !flat.flat {
        return Err("counter system is not flat".into());
    }
    if flat.cycles.iter().any(|c| c.reduced_counter.is_none()) {
        return Err("a cycle is not 1-variable-reducing".into());
    }
    let sks = skeletons(cs, flat, from, to, limit);
    let eta = initial_sets.map(|s| membership_formula(s, &cs.counters));
    let mut out = Vec::new();
    for sk in &sks.skeletons {
        let mut names = VectorNames::new(&cs.counters);
        let phi = skeleton_formula(cs, flat, sk, psi, &mut names).map_err(|e| e.to_string())?;
        out.push(match &eta {
            Some(eta) => PadFormula::and([eta.clone(), phi]),
            None => phi,
        });
    }
    Ok((out, sks.truncated))
}

pub fn decide_flat<S>(
    cs: &CounterSystem<S>,
    flat: &Flatness,
    from: usize,
    to: usize,
    psi: &PadFormula,
    initial_sets: Option<&BTreeMap<Var, ProgressionSet>>,
    opts: &FlatOptions,
) -> FlatVerdict {
    let (queries, partial) = match skeleton_queries(cs, flat, from, to, psi, initial_sets, opts.skeleton_limit) {
        Ok(q) => q,
        Err(e) => return FlatVerdict::Unsupported(e),
    };
    let mut exhaustive = !partial;
    for (i, q) in queries.iter().enumerate() {
        match bounded_sat_with(q, &opts.search) {
            BoundedSat::Sat(model) => return FlatVerdict::Sat { model, skeleton: i },
            BoundedSat::NoModelUpTo { exhaustive: e, .. } => exhaustive &= e,
        }
    }
    FlatVerdict::NoModelFound {
        bound: opts.search.bound,
        skeletons: queries.len(),
        partial,
        exhaustive,
    }
}
