//! SMT-LIB v2 export of PAD formulas and ingestion of solver models.
//!
//! Existentials are pulled to the top and declared as constants. Each
//! divisibility atom `f | g` gets its own integer multiplier `k` and becomes
//! `g = k·f`, which also covers `0 | g` iff `g = 0`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::eval::prenex;
use super::formula::{LinTerm, PadFormula};
use super::PadError;

pub fn export_smtlib(phi: &PadFormula) -> String {
    let (matrix, _) = prenex(phi);
    let vars = matrix.free_vars();
    let mut multipliers = Vec::new();
    let body = formula_sexpr(&matrix, &mut multipliers);

    let mut out = String::new();
    out.push_str("(set-logic NIA)\n");
    for v in &vars {
        writeln!(out, "(declare-fun {} () Int)", symbol(v)).unwrap();
    }
    for k in &multipliers {
        writeln!(out, "(declare-fun {} () Int)", symbol(k)).unwrap();
    }
    for v in &vars {
        writeln!(out, "(assert (>= {} 0))", symbol(v)).unwrap();
    }
    writeln!(out, "(assert {body})").unwrap();
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

fn formula_sexpr(phi: &PadFormula, multipliers: &mut Vec<String>) -> String {
    match phi {
        PadFormula::Le(f, g) => format!("(<= {} {})", term_sexpr(f), term_sexpr(g)),
        PadFormula::Eq(f, g) => format!("(= {} {})", term_sexpr(f), term_sexpr(g)),
        PadFormula::Div(f, g) => {
            let k = format!("div!{}", multipliers.len());
            let s = format!("(= {} (* {} {}))", term_sexpr(g), symbol(&k), term_sexpr(f));
            multipliers.push(k);
            s
        }
        PadFormula::And(ps) => connective("and", "true", ps, multipliers),
        PadFormula::Or(ps) => connective("or", "false", ps, multipliers),
        PadFormula::Exists(..) => unreachable!("formula is prenexed"),
    }
}

fn connective(op: &str, unit: &str, ps: &[PadFormula], multipliers: &mut Vec<String>) -> String {
    match ps {
        [] => unit.to_string(),
        [p] => formula_sexpr(p, multipliers),
        _ => {
            let parts: Vec<String> = ps.iter().map(|p| formula_sexpr(p, multipliers)).collect();
            format!("({op} {})", parts.join(" "))
        }
    }
}

fn numeral(n: i64) -> String {
    if n < 0 {
        format!("(- {})", n.unsigned_abs())
    } else {
        n.to_string()
    }
}

fn term_sexpr(t: &LinTerm) -> String {
    let mut parts = Vec::new();
    for (v, c) in &t.coeffs {
        if *c == 1 {
            parts.push(symbol(v));
        } else {
            parts.push(format!("(* {} {})", numeral(*c), symbol(v)));
        }
    }
    if t.constant != 0 || parts.is_empty() {
        parts.push(numeral(t.constant));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

const SYMBOL_PUNCT: &str = "~!@$%^&*_-+=<>.?/";

fn is_simple_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || SYMBOL_PUNCT.contains(c) => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || SYMBOL_PUNCT.contains(c))
}

fn symbol(s: &str) -> String {
    if is_simple_symbol(s) && !RESERVED.contains(&s) {
        s.to_string()
    } else {
        format!("|{s}|")
    }
}

const RESERVED: &[&str] = &["and", "or", "not", "true", "false", "exists", "forall", "let", "_", "!", "as"];

/// S-expression as read from SMT-LIB text. Quoted symbols are unquoted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

fn parse_sexprs(text: &str) -> Result<Vec<SExpr>, PadError> {
    let mut stack: Vec<Vec<SExpr>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' => stack.push(Vec::new()),
            ')' => {
                let list = stack.pop().unwrap();
                let parent = stack
                    .last_mut()
                    .ok_or_else(|| PadError::Smt("unbalanced `)`".into()))?;
                parent.push(SExpr::List(list));
            }
            '|' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(c) => name.push(c),
                        None => return Err(PadError::Smt("unterminated quoted symbol".into())),
                    }
                }
                stack.last_mut().unwrap().push(SExpr::Atom(name));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut atom = c.to_string();
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    atom.push(n);
                    chars.next();
                }
                stack.last_mut().unwrap().push(SExpr::Atom(atom));
            }
        }
        if stack.is_empty() {
            return Err(PadError::Smt("unbalanced `)`".into()));
        }
    }
    if stack.len() != 1 {
        return Err(PadError::Smt("unbalanced `(`".into()));
    }
    Ok(stack.pop().unwrap())
}

/// Checks that a script is a sequence of supported commands whose asserted
/// terms only use declared constants, numerals and arithmetic/boolean
/// operators with plausible arities.
pub fn check_well_formed(script: &str) -> Result<(), PadError> {
    let cmds = parse_sexprs(script)?;
    let mut declared = BTreeSet::new();
    let mut saw_check = false;
    for cmd in &cmds {
        let SExpr::List(items) = cmd else {
            return Err(PadError::Smt("top-level atom".into()));
        };
        let head = match items.first() {
            Some(SExpr::Atom(h)) => h.as_str(),
            _ => return Err(PadError::Smt("command without name".into())),
        };
        match (head, &items[1..]) {
            ("set-logic", [SExpr::Atom(_)]) => {}
            ("declare-fun", [SExpr::Atom(n), SExpr::List(args), SExpr::Atom(sort)]) if args.is_empty() && sort == "Int" => {
                if !declared.insert(n.clone()) {
                    return Err(PadError::Smt(format!("`{n}` declared twice")));
                }
            }
            ("declare-const", [SExpr::Atom(n), SExpr::Atom(sort)]) if sort == "Int" => {
                if !declared.insert(n.clone()) {
                    return Err(PadError::Smt(format!("`{n}` declared twice")));
                }
            }
            ("assert", [t]) => {
                if sort_of(t, &declared)? != Sort::Bool {
                    return Err(PadError::Smt("assertion is not boolean".into()));
                }
            }
            ("check-sat", []) => saw_check = true,
            ("get-model", []) => {}
            _ => return Err(PadError::Smt(format!("unsupported command `{head}`"))),
        }
    }
    if !saw_check {
        return Err(PadError::Smt("missing check-sat".into()));
    }
    Ok(())
}

#[derive(Debug, PartialEq, Eq)]
enum Sort {
    Bool,
    Int,
}

fn sort_of(t: &SExpr, declared: &BTreeSet<String>) -> Result<Sort, PadError> {
    match t {
        SExpr::Atom(a) if a == "true" || a == "false" => Ok(Sort::Bool),
        SExpr::Atom(a) if a.chars().all(|c| c.is_ascii_digit()) => Ok(Sort::Int),
        SExpr::Atom(a) if declared.contains(a) => Ok(Sort::Int),
        SExpr::Atom(a) => Err(PadError::Smt(format!("undeclared symbol `{a}`"))),
        SExpr::List(items) => {
            let Some(SExpr::Atom(op)) = items.first() else {
                return Err(PadError::Smt("application without operator".into()));
            };
            let args = &items[1..];
            let want = |s: Sort| -> Result<(), PadError> {
                for a in args {
                    if sort_of(a, declared)? != s {
                        return Err(PadError::Smt(format!("ill-sorted argument to `{op}`")));
                    }
                }
                Ok(())
            };
            match op.as_str() {
                "and" | "or" if !args.is_empty() => want(Sort::Bool).map(|_| Sort::Bool),
                "not" if args.len() == 1 => want(Sort::Bool).map(|_| Sort::Bool),
                "=" | "<=" | ">=" | "<" | ">" if args.len() == 2 => want(Sort::Int).map(|_| Sort::Bool),
                "+" | "*" if args.len() >= 2 => want(Sort::Int).map(|_| Sort::Int),
                "-" if !args.is_empty() => want(Sort::Int).map(|_| Sort::Int),
                _ => Err(PadError::Smt(format!("bad application of `{op}`"))),
            }
        }
    }
}

fn int_value(e: &SExpr) -> Result<i128, PadError> {
    let bad = || PadError::Smt(format!("unsupported model value {e:?}"));
    match e {
        SExpr::Atom(a) => a.parse::<i128>().map_err(|_| bad()),
        SExpr::List(items) => match items.as_slice() {
            [SExpr::Atom(m), inner] if m == "-" => Ok(-int_value(inner)?),
            _ => Err(bad()),
        },
    }
}

/// Reads `(define-fun name () Int value)` entries from a solver model, in
/// either the bare or the `(model ...)`-wrapped form.
pub fn parse_model(text: &str) -> Result<BTreeMap<String, i128>, PadError> {
    let mut out = BTreeMap::new();
    let mut todo = parse_sexprs(text)?;
    while let Some(e) = todo.pop() {
        let SExpr::List(items) = e else { continue };
        match items.as_slice() {
            [SExpr::Atom(d), SExpr::Atom(name), SExpr::List(args), SExpr::Atom(sort), value]
                if d == "define-fun" && args.is_empty() && sort == "Int" =>
            {
                out.insert(name.clone(), int_value(value)?);
            }
            _ => todo.extend(items),
        }
    }
    Ok(out)
}
