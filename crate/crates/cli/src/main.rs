use std::collections::BTreeMap;
use std::fs;
use std::hash::Hash;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use quadword::accel::{skeleton_queries, DropExpression};
use quadword::automata::DEFAULT_MONOID_CAP;
use quadword::counters::{build_ca, build_ca_reg, CounterSystem};
use quadword::flatness::{is_flat, Flatness, DEFAULT_SKELETON_LIMIT};
use quadword::nielsen::{proof_graph, DEFAULT_NODE_BUDGET};
use quadword::oracle::length_abstraction;
use quadword::pad::{eval, export_smtlib, Truth};
use quadword::regnielsen::{reg_graph, RegContext};
use quadword::solver::{length_query, solve, SolveOptions, Status};
use quadword::{parse_problem, Problem, ProgressionSet, Var};

const EXIT_UNSAT: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;
const EXIT_ERROR: u8 = 10;
const EXIT_INVALID_MODEL: u8 = 11;

const DEFAULT_LENABS_BOUND: u64 = 8;

#[derive(Parser)]
#[command(name = "quadword", version, about = "Quadratic word equations with length and regular constraints")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Search bound for lengths and arithmetic values.
    #[arg(long, global = true)]
    bound: Option<u64>,
    /// Maximum number of proof-graph nodes.
    #[arg(long, global = true, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: usize,
    /// Maximum size of the transition monoid.
    #[arg(long, global = true, default_value_t = DEFAULT_MONOID_CAP)]
    monoid_cap: usize,
    /// Maximum number of skeletons per initial state.
    #[arg(long, global = true, default_value_t = DEFAULT_SKELETON_LIMIT)]
    skeleton_limit: usize,
    /// Deterministic, sequential execution.
    #[arg(long, global = true)]
    reproducible: bool,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a problem: exit 0 on SAT, 2 on UNSAT, 3 on UNKNOWN.
    Solve {
        file: PathBuf,
        /// Where SMT-LIB queries go on UNKNOWN [default: FILE with extension `smt`].
        #[arg(long)]
        smt_dir: Option<PathBuf>,
    },
    /// Write the proof graph in DOT.
    Graph {
        file: PathBuf,
        #[arg(long)]
        dot: PathBuf,
    },
    /// Write the counter system in DOT.
    Ca {
        file: PathBuf,
        #[arg(long)]
        dot: PathBuf,
    },
    /// Write the length abstraction up to the bound as CSV.
    Lenabs {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one SMT-LIB query per skeleton.
    Accelerate {
        file: PathBuf,
        #[arg(long)]
        skeletons: PathBuf,
    },
    /// Check a word assignment against a problem.
    Check {
        file: PathBuf,
        /// JSON object or `name = word` lines.
        #[arg(long)]
        model: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Solve { file, smt_dir } => cmd_solve(g, file, smt_dir.as_deref()),
        Command::Graph { file, dot } => cmd_graph(g, file, dot),
        Command::Ca { file, dot } => cmd_ca(g, file, dot),
        Command::Lenabs { file, out } => cmd_lenabs(g, file, out),
        Command::Accelerate { file, skeletons } => cmd_accelerate(g, file, skeletons),
        Command::Check { file, model } => cmd_check(g, file, model),
    }
}

fn load(file: &Path) -> Result<Problem> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    parse_problem(&text).with_context(|| format!("parsing {}", file.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON value"));
}

fn options(g: &Global) -> SolveOptions {
    SolveOptions {
        bound: g.bound,
        node_budget: g.node_budget,
        monoid_cap: g.monoid_cap,
        skeleton_limit: g.skeleton_limit,
        ..SolveOptions::default()
    }
}

fn cmd_solve(g: &Global, file: &Path, smt_dir: Option<&Path>) -> Result<u8> {
    let p = load(file)?;
    let mut v = solve(&p, &options(g))?;
    if v.status == Status::Unknown && !v.open_queries.is_empty() {
        let dir = smt_dir.map_or_else(|| file.with_extension("smt"), Path::to_path_buf);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, q) in v.open_queries.iter().enumerate() {
            write(&dir.join(format!("query-{i:04}.smt2")), &export_smtlib(q))?;
        }
        v.diagnostics
            .notes
            .push(format!("{} open queries written to {}", v.open_queries.len(), dir.display()));
    }
    if g.json {
        print_json(&serde_json::to_value(&v)?);
    } else {
        println!("{}", serde_json::to_value(v.status)?.as_str().unwrap_or_default());
        if let Some(w) = &v.witness {
            for x in &p.vars {
                println!("  {x} = \"{}\"", w[x]);
            }
        } else if let Some(m) = &v.model {
            for x in &p.vars {
                println!("  |{x}| = {}", m[x]);
            }
        }
        let d = &v.diagnostics;
        println!("route: {}, states: {}, transitions: {}, skeletons: {}, bound: {}", d.route, d.states, d.transitions, d.skeletons, d.bound);
        for n in &d.notes {
            println!("note: {n}");
        }
    }
    Ok(match v.status {
        Status::Sat => 0,
        Status::Unsat => EXIT_UNSAT,
        Status::Unknown => EXIT_UNKNOWN,
    })
}

fn cmd_graph(g: &Global, file: &Path, dot: &Path) -> Result<u8> {
    let p = load(file)?;
    let (nodes, edges, solvable, text) = if p.has_regular_constraints() {
        let ctx = RegContext::new(&p, g.monoid_cap)?;
        let graph = reg_graph(&p.equation, &ctx, g.node_budget)?;
        let fin = graph.final_node().is_some();
        (graph.nodes.len(), graph.edges.len(), fin, graph.to_dot(&p.vars, &ctx.monoid))
    } else {
        let graph = proof_graph(&p.equation, g.node_budget)?;
        let fin = graph.trivial_node().is_some();
        (graph.len(), graph.edges.len(), fin, graph.to_dot(&p.vars))
    };
    write(dot, &text)?;
    if g.json {
        print_json(&json!({"nodes": nodes, "edges": edges, "final_reachable": solvable, "dot": dot}));
    } else {
        println!("{nodes} nodes, {edges} edges, ε = ε {}reachable", if solvable { "" } else { "not " });
    }
    Ok(0)
}

type Roots = Vec<(usize, Option<BTreeMap<Var, ProgressionSet>>)>;

/// Calls `f` on `CA(E)` or, with regular constraints, `CA(E,S)`, with state
/// labels and initial states.
macro_rules! with_system {
    ($g:expr, $p:expr, |$cs:ident, $labels:ident, $roots:ident| $body:expr) => {
        if $p.has_regular_constraints() {
            let rc = build_ca_reg($p, $g.monoid_cap, $g.node_budget)?;
            let $labels: Vec<String> = rc.system.states.iter().map(|c| c.render(&$p.vars, &rc.context.monoid)).collect();
            let $roots: Roots = rc.initial.iter().map(|i| (i.state, Some(i.lengths.clone()))).collect();
            let $cs = &rc.system;
            $body
        } else {
            let system = build_ca($p, $g.node_budget)?;
            let $labels: Vec<String> = system.states.iter().map(|e| $p.render_equation(e)).collect();
            let $roots: Roots = vec![(0, None)];
            let $cs = &system;
            $body
        }
    };
}

fn flatness_json(fl: &Flatness, labels: &[String]) -> serde_json::Value {
    let drops: Vec<serde_json::Value> = fl
        .cycles
        .iter()
        .map(|c| match DropExpression::new(c) {
            Ok(d) => json!(d),
            Err(e) => json!(e.to_string()),
        })
        .collect();
    json!({
        "flat": fl.flat,
        "witness": fl.witness.as_ref().map(|w| json!({"state": w.state, "label": labels[w.state], "cycles": w.cycles})),
        "cycles": fl.cycles,
        "drops": drops,
    })
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or_default()
}

fn describe_flatness(fl: &Flatness, labels: &[String], names: &[String]) {
    if let Some(w) = &fl.witness {
        println!("not flat: {} lies on two simple cycles", first_line(&labels[w.state]));
        return;
    }
    println!("flat with {} cycles", fl.cycles.len());
    for c in &fl.cycles {
        let guards: Vec<String> = c.guards.iter().map(|gd| gd.label(names)).collect();
        let kind = match c.reduced_counter {
            Some(y) => format!("reduces {}", names[y.index()]),
            None => "not reducing".to_string(),
        };
        println!("  cycle at state {} ({}) [{}], {kind}", c.states[0], first_line(&labels[c.states[0]]), guards.join(", "));
    }
}

fn ca_output<S: Hash + Eq>(g: &Global, cs: &CounterSystem<S>, labels: &[String], dot: &Path) -> Result<u8> {
    let label = |s: &S| cs.states.get_index_of(s).map_or_else(String::new, |i| labels[i].clone());
    write(dot, &cs.to_dot(label))?;
    let fl = is_flat(cs);
    if g.json {
        print_json(&json!({
            "system": cs.to_json(label),
            "flatness": flatness_json(&fl, labels),
        }));
    } else {
        println!("{} states, {} transitions, {} final", cs.num_states(), cs.transitions.len(), cs.finals.len());
        describe_flatness(&fl, labels, &cs.counters);
    }
    Ok(0)
}

fn cmd_ca(g: &Global, file: &Path, dot: &Path) -> Result<u8> {
    let p = load(file)?;
    with_system!(g, &p, |cs, labels, _roots| ca_output(g, cs, &labels, dot))
}

fn cmd_lenabs(g: &Global, file: &Path, out: &Path) -> Result<u8> {
    let p = load(file)?;
    let bound = g.bound.unwrap_or(DEFAULT_LENABS_BOUND);
    let sample = length_abstraction(&p, bound);
    write(out, &sample.to_csv())?;
    if g.json {
        print_json(&sample.to_json());
    } else {
        println!("{} tuples with lengths up to {bound} written to {}", sample.len(), out.display());
    }
    Ok(0)
}

fn dump_skeletons<S>(g: &Global, p: &Problem, cs: &CounterSystem<S>, labels: &[String], roots: &Roots, dir: &Path) -> Result<u8> {
    let fl = is_flat(cs);
    let reducing = fl.flat && fl.cycles.iter().all(|c| c.reduced_counter.is_some());
    if !reducing {
        if g.json {
            print_json(&json!({"accelerated": false, "flatness": flatness_json(&fl, labels)}));
        } else {
            describe_flatness(&fl, labels, &cs.counters);
            println!("acceleration does not apply");
        }
        return Ok(EXIT_UNKNOWN);
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let psi = length_query(p);
    let mut files = Vec::new();
    let mut truncated = false;
    if let Some(&fin) = cs.finals.first() {
        for (r, (state, sets)) in roots.iter().enumerate() {
            let (queries, t) = skeleton_queries(cs, &fl, *state, fin, &psi, sets.as_ref(), g.skeleton_limit).map_err(anyhow::Error::msg)?;
            truncated |= t;
            for (i, q) in queries.iter().enumerate() {
                let path = dir.join(format!("root{r:03}-skeleton{i:05}.smt2"));
                write(&path, &export_smtlib(q))?;
                files.push(path);
            }
        }
    }
    if g.json {
        print_json(&json!({
            "accelerated": true,
            "flatness": flatness_json(&fl, labels),
            "roots": roots.len(),
            "files": files,
            "truncated": truncated,
        }));
    } else {
        describe_flatness(&fl, labels, &cs.counters);
        println!("{} skeleton queries from {} initial states written to {}", files.len(), roots.len(), dir.display());
        if truncated {
            println!("note: skeleton limit {} reached", g.skeleton_limit);
        }
    }
    Ok(0)
}

fn cmd_accelerate(g: &Global, file: &Path, dir: &Path) -> Result<u8> {
    let p = load(file)?;
    with_system!(g, &p, |cs, labels, roots| dump_skeletons(g, &p, cs, &labels, &roots, dir))
}

fn read_model(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let (name, word) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected `name = word`", path.display(), i + 1))?;
        let word = word.trim();
        let word = word.strip_prefix('"').and_then(|w| w.strip_suffix('"')).unwrap_or(word);
        out.insert(name.trim().to_string(), word.to_string());
    }
    Ok(out)
}

/// Reasons the assignment is not a solution; empty if it is one.
fn model_problems(p: &Problem, words: &BTreeMap<String, String>) -> Vec<String> {
    let mut issues = Vec::new();
    for name in words.keys() {
        if p.var(name).is_none() {
            issues.push(format!("unknown variable {name}"));
        }
    }
    let mut sigma = BTreeMap::new();
    for x in p.all_vars() {
        let name = p.name(x);
        match words.get(name) {
            Some(w) => {
                if let Some(c) = w.chars().find(|c| !p.alphabet.contains(c)) {
                    issues.push(format!("{name} = \"{w}\" uses {c:?}, which is not in the alphabet"));
                }
                sigma.insert(x, w.clone());
            }
            None if p.equation.contains(x) => issues.push(format!("no value for {name}")),
            None => {
                sigma.insert(x, String::new());
            }
        }
    }
    if !issues.is_empty() {
        return issues;
    }
    if let Some((l, r)) = p.equation.apply(&sigma) {
        if l != r {
            issues.push(format!("the equation does not hold: \"{l}\" ≠ \"{r}\""));
        }
    }
    for rc in &p.regular_constraints {
        let w = &sigma[&rc.var];
        if !rc.nfa.accepts(w) {
            issues.push(format!("{} = \"{w}\" is not in /{}/", p.name(rc.var), rc.regex));
        }
    }
    if let Some(phi) = &p.length_constraint {
        let mu: BTreeMap<String, u64> = p.all_vars().map(|x| (p.name(x).to_string(), sigma[&x].chars().count() as u64)).collect();
        if !matches!(eval(phi, &mu, 0), Ok(Truth::True)) {
            let lens: Vec<String> = p.vars.iter().map(|n| format!("|{n}| = {}", mu[n])).collect();
            issues.push(format!("the length constraint fails for {}", lens.join(", ")));
        }
    }
    issues
}

fn cmd_check(g: &Global, file: &Path, model: &Path) -> Result<u8> {
    let p = load(file)?;
    let words = read_model(model)?;
    let issues = model_problems(&p, &words);
    if g.json {
        print_json(&json!({"valid": issues.is_empty(), "problems": issues}));
    } else if issues.is_empty() {
        println!("valid solution");
    } else {
        for i in &issues {
            eprintln!("invalid: {i}");
        }
    }
    Ok(if issues.is_empty() { 0 } else { EXIT_INVALID_MODEL })
}
