//! Parser for the problem source format.
//!
//! ```text
//! vars: x y z;
//! eq: x a b y = y z;
//! re: x in /#(a|b)*/;
//! len: |z| = |x| + 2 && |x| <= 3;
//! alphabet: a b #;
//! ```
//!
//! Clauses may appear in any order; `vars` may be omitted when the problem
//! has no variables. Lines starting with `//` are comments.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::automata::Nfa;
use crate::pad::{LinTerm, PadFormula};
use crate::terms::{Equation, Problem, RegularConstraint, Symbol, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

struct Source {
    chars: Vec<char>,
    line_starts: Vec<usize>,
}

impl Source {
    fn new(text: &str) -> Self {
        let chars: Vec<char> = text.chars().collect();
        let mut line_starts = vec![0];
        for (i, c) in chars.iter().enumerate() {
            if *c == '\n' {
                line_starts.push(i + 1);
            }
        }
        Source { chars, line_starts }
    }

    fn error(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        let line = self.line_starts.partition_point(|&s| s <= pos);
        let col = pos - self.line_starts[line - 1] + 1;
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }
}

struct Clause {
    keyword: String,
    keyword_pos: usize,
    /// `[start, end)` character range of the body.
    start: usize,
    end: usize,
}

fn split_clauses(src: &Source) -> Result<Vec<Clause>, ParseError> {
    let s = &src.chars;
    let mut i = 0;
    let mut out = Vec::new();
    loop {
        // skip whitespace and comments
        loop {
            while i < s.len() && s[i].is_whitespace() {
                i += 1;
            }
            if i + 1 < s.len() && s[i] == '/' && s[i + 1] == '/' {
                while i < s.len() && s[i] != '\n' {
                    i += 1;
                }
            } else {
                break;
            }
        }
        if i >= s.len() {
            return Ok(out);
        }
        let kw_start = i;
        while i < s.len() && s[i].is_ascii_alphabetic() {
            i += 1;
        }
        let keyword: String = s[kw_start..i].iter().collect();
        if keyword.is_empty() {
            return Err(src.error(kw_start, "expected a clause keyword"));
        }
        while i < s.len() && s[i].is_whitespace() {
            i += 1;
        }
        if i >= s.len() || s[i] != ':' {
            return Err(src.error(i.min(s.len()), format!("expected `:` after `{keyword}`")));
        }
        i += 1;
        let start = i;
        let mut in_regex = false;
        while i < s.len() && (in_regex || s[i] != ';') {
            if s[i] == '/' && keyword == "re" {
                in_regex = !in_regex;
            }
            i += 1;
        }
        if i >= s.len() {
            return Err(src.error(start, format!("unterminated `{keyword}` clause (missing `;`)")));
        }
        out.push(Clause {
            keyword,
            keyword_pos: kw_start,
            start,
            end: i,
        });
        i += 1;
    }
}

/// Whitespace-separated tokens of `[start, end)` with their positions.
fn tokens(src: &Source, start: usize, end: usize) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut i = start;
    while i < end {
        if src.chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let t0 = i;
        while i < end && !src.chars[i].is_whitespace() {
            i += 1;
        }
        out.push((t0, src.chars[t0..i].iter().collect()));
    }
    out
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let src = Source::new(text);
    let clauses = split_clauses(&src)?;

    let mut vars: Option<Vec<String>> = None;
    for c in clauses.iter().filter(|c| c.keyword == "vars") {
        if vars.is_some() {
            return Err(src.error(c.keyword_pos, "duplicate `vars` clause"));
        }
        let mut names = Vec::new();
        for (pos, t) in tokens(&src, c.start, c.end) {
            if !is_identifier(&t) {
                return Err(src.error(pos, format!("`{t}` is not a valid variable name")));
            }
            if names.contains(&t) {
                return Err(src.error(pos, format!("variable `{t}` declared twice")));
            }
            names.push(t);
        }
        vars = Some(names);
    }
    let vars = vars.unwrap_or_default();
    let lookup = |name: &str| vars.iter().position(|v| v == name).map(|i| Var(i as u32));

    let mut equation = None;
    let mut regular_constraints = Vec::new();
    let mut lengths = Vec::new();
    let mut alphabet: Option<BTreeSet<char>> = None;

    for c in &clauses {
        match c.keyword.as_str() {
            "vars" => {}
            "eq" => {
                if equation.is_some() {
                    return Err(src.error(c.keyword_pos, "only one equation is supported"));
                }
                let eq_pos = (c.start..c.end).filter(|&i| src.chars[i] == '=').collect::<Vec<_>>();
                if eq_pos.len() != 1 {
                    return Err(src.error(c.start, "equation needs exactly one `=`"));
                }
                let side = |a: usize, b: usize| -> Result<Vec<Symbol>, ParseError> {
                    tokens(&src, a, b)
                        .into_iter()
                        .map(|(pos, t)| {
                            if let Some(v) = lookup(&t) {
                                Ok(Symbol::Var(v))
                            } else if t.chars().count() == 1 {
                                Ok(Symbol::Const(t.chars().next().unwrap()))
                            } else {
                                Err(src.error(pos, format!("undeclared symbol `{t}`")))
                            }
                        })
                        .collect()
                };
                let lhs = side(c.start, eq_pos[0])?;
                let rhs = side(eq_pos[0] + 1, c.end)?;
                equation = Some(Equation::new(lhs, rhs));
            }
            "re" => {
                let body: String = src.chars[c.start..c.end].iter().collect();
                let open = body.find('/').ok_or_else(|| src.error(c.start, "expected `/regex/`"))?;
                let head = tokens(&src, c.start, c.start + body[..open].chars().count());
                let [(vpos, vname), (ipos, kw)] = head.as_slice() else {
                    return Err(src.error(c.start, "expected `<var> in /regex/`"));
                };
                if kw != "in" {
                    return Err(src.error(*ipos, "expected `in`"));
                }
                let var = lookup(vname).ok_or_else(|| src.error(*vpos, format!("constraint on undeclared variable `{vname}`")))?;
                let rest = &body[open + 1..];
                let close = rest.find('/').ok_or_else(|| src.error(c.start, "unterminated regex"))?;
                let regex = rest[..close].to_string();
                if !rest[close + 1..].trim().is_empty() {
                    return Err(src.error(c.start, "unexpected text after regex"));
                }
                let re_start = c.start + body[..open + 1].chars().count();
                let nfa = Nfa::from_regex(&regex).map_err(|e| src.error(re_start + e.offset, format!("regex: {}", e.msg)))?;
                regular_constraints.push(RegularConstraint { var, regex, nfa });
            }
            "len" => {
                let mut p = LenParser {
                    src: &src,
                    pos: c.start,
                    end: c.end,
                    lookup: &lookup,
                    vars: &vars,
                };
                let phi = p.formula()?;
                p.skip_ws();
                if p.pos < p.end {
                    return Err(src.error(p.pos, "unexpected input in length constraint"));
                }
                lengths.push(phi);
            }
            "alphabet" => {
                let mut a = BTreeSet::new();
                for (pos, t) in tokens(&src, c.start, c.end) {
                    if t.chars().count() != 1 || lookup(&t).is_some() {
                        return Err(src.error(pos, format!("`{t}` is not a constant")));
                    }
                    a.insert(t.chars().next().unwrap());
                }
                alphabet = Some(a);
            }
            other => return Err(src.error(c.keyword_pos, format!("unknown clause `{other}`"))),
        }
    }

    let equation = equation.ok_or_else(|| src.error(src.chars.len(), "missing `eq` clause"))?;
    let mut problem = Problem {
        alphabet: BTreeSet::new(),
        vars,
        equation,
        regular_constraints,
        length_constraint: match lengths.len() {
            0 => None,
            _ => Some(PadFormula::and(lengths)),
        },
    };
    problem.alphabet = problem.default_alphabet();
    if let Some(a) = alphabet {
        if !a.is_empty() {
            let mut all = problem.equation.constants();
            for rc in &problem.regular_constraints {
                all.extend(rc.nfa.alphabet.iter().copied());
            }
            all.extend(a);
            problem.alphabet = all;
        }
    }
    Ok(problem)
}

struct LenParser<'a, F: Fn(&str) -> Option<Var>> {
    src: &'a Source,
    pos: usize,
    end: usize,
    lookup: &'a F,
    vars: &'a [String],
}

impl<F: Fn(&str) -> Option<Var>> LenParser<'_, F> {
    fn skip_ws(&mut self) {
        while self.pos < self.end && self.src.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        (self.pos < self.end).then(|| self.src.chars[self.pos])
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.pos + n <= self.end && self.src.chars[self.pos..self.pos + n].iter().copied().eq(s.chars()) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        self.src.error(self.pos, msg)
    }

    fn formula(&mut self) -> Result<PadFormula, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat("||") {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { PadFormula::or(parts) })
    }

    fn conjunction(&mut self) -> Result<PadFormula, ParseError> {
        let mut parts = vec![self.unit()?];
        while self.eat("&&") {
            parts.push(self.unit()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { PadFormula::and(parts) })
    }

    fn unit(&mut self) -> Result<PadFormula, ParseError> {
        if self.peek() == Some('(') {
            let save = self.pos;
            self.pos += 1;
            if let Ok(f) = self.formula() {
                if self.eat(")") {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        if self.eat("true") {
            return Ok(PadFormula::tt());
        }
        if self.eat("false") {
            return Ok(PadFormula::ff());
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<PadFormula, ParseError> {
        let lhs = self.term()?;
        let op = ["<=", ">=", "==", "!=", "=", "<", ">"]
            .into_iter()
            .find(|op| self.eat(op))
            .ok_or_else(|| self.err("expected a comparison"))?;
        let rhs = self.term()?;
        Ok(match op {
            "<=" => PadFormula::le(lhs, rhs),
            ">=" => PadFormula::ge(lhs, rhs),
            "=" | "==" => PadFormula::eq(lhs, rhs),
            "<" => PadFormula::lt(lhs, rhs),
            ">" => PadFormula::lt(rhs, lhs),
            "!=" => PadFormula::or([PadFormula::lt(lhs.clone(), rhs.clone()), PadFormula::lt(rhs, lhs)]),
            _ => unreachable!(),
        })
    }

    fn term(&mut self) -> Result<LinTerm, ParseError> {
        let mut t = LinTerm::constant(0);
        let mut sign = if self.eat("-") { -1 } else { 1 };
        loop {
            t = t + self.item()? * sign;
            if self.eat("+") {
                sign = 1;
            } else if self.eat("-") {
                sign = -1;
            } else {
                return Ok(t);
            }
        }
    }

    fn number(&mut self) -> Option<i64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.end && self.src.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.src.chars[start..self.pos].iter().collect::<String>().parse().ok())?
    }

    fn item(&mut self) -> Result<LinTerm, ParseError> {
        let coeff = self.number();
        if coeff.is_some() && !self.eat("*") {
            return Ok(LinTerm::constant(coeff.unwrap()));
        }
        if self.peek() == Some('|') {
            self.pos += 1;
            let start = self.pos;
            while self.pos < self.end && self.src.chars[self.pos] != '|' {
                self.pos += 1;
            }
            if self.pos >= self.end {
                return Err(self.src.error(start, "unterminated `|x|`"));
            }
            let name: String = self.src.chars[start..self.pos].iter().collect::<String>().trim().to_string();
            self.pos += 1;
            let v = (self.lookup)(&name).ok_or_else(|| self.src.error(start, format!("undeclared variable `{name}`")))?;
            Ok(LinTerm::scaled_var(self.vars[v.index()].clone(), coeff.unwrap_or(1)))
        } else if let Some(c) = coeff {
            Ok(LinTerm::constant(c))
        } else {
            Err(self.err("expected `|x|` or an integer"))
        }
    }
}
