//! Problems shared by the integration test targets.

#![allow(dead_code)]

use quadword::{parse_problem, Problem};

/// Quadratic equations without constraints.
pub const QUADRATIC: &[&str] = &[
    "vars: x; eq: x a b = a b x;",
    "vars: x y z; eq: x a b y = y z;",
    "vars: x y; eq: x a b y = y a b x;",
    "vars: x y; eq: x y = y x;",
    "vars: x y z; eq: x y = y z;",
    "vars: x y z; eq: x z = z y;",
    "vars: x y; eq: x a y = y b x;",
    "vars: x y; eq: a x y = y x a;",
    "vars: x y; eq: x x = y y;",
    "vars: x y; eq: x a x = y b y;",
    "vars: x y z; eq: x y z = z y x;",
    "vars: x y; eq: x a b = b y;",
    "vars: x y z w; eq: x y = z w;",
    "vars: x y; eq: x a y = y a x;",
];

/// Regular-oriented equations without constraints.
pub const REGULAR_ORIENTED: &[&str] = &[
    "vars: x; eq: x a b = a b x;",
    "vars: x y z; eq: x a b y = y z;",
    "vars: x y z; eq: x y = y z;",
    "vars: x y z; eq: x z = z y;",
    "vars: x; eq: x a = a x;",
    "vars: x; eq: a b x = x b a;",
    "vars: x y z; eq: x a y b = y z;",
    "vars: x y z w; eq: x y z = z w;",
    "vars: x y z; eq: x b y = y a z;",
    "vars: x y z; eq: x a b y = y b a z;",
    "vars: x; eq: x a a = a a x;",
    "vars: x y z; eq: x y a = y z a;",
    "vars: x y; eq: a x b = x a y;",
];

/// Regular-oriented equations with regular constraints.
pub const WITH_REGULAR_CONSTRAINTS: &[&str] = &[
    "vars: x y z; eq: x z = z y; re: x in /#(a|b)*/; re: y in /#(a|b)*/;",
    "vars: x y z; eq: x y = y z; re: x in /#(a|b)*/; re: y in /#(a|b)*/;",
    "vars: x; eq: x a b = a b x; re: x in /(ab)*a?/;",
    "vars: x y z; eq: x a b y = y z; re: y in /a*/;",
    "vars: x y; eq: a x b = x a y; re: x in /(a|b)*b/;",
];

pub fn problem(src: &str) -> Problem {
    parse_problem(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

/// All tuples of `[0, bound]^n` in lexicographic order.
pub fn tuples(n: usize, bound: u64) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..=bound).map(move |v| {
                    let mut t = t.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    out
}
