//! Quadratic word equations with length and regular constraints.
//!
//! Nielsen-style proof graphs are compiled into counter systems whose flat,
//! 1-variable-reducing cycles are accelerated into existential formulas of
//! Presburger arithmetic with divisibility.

pub mod accel;
pub mod automata;
pub mod counters;
pub mod flatness;
pub mod nielsen;
pub mod oracle;
pub mod pad;
pub mod parse;
pub mod regnielsen;
pub mod solver;
pub mod terms;

pub use automata::{BoolMatrix, Monoid, Nfa, ProgressionSet, UnionAutomaton};
pub use counters::{build_ca, build_ca_reg, Config, CounterSystem, Guard};
pub use flatness::{is_flat, skeletons, CycleInfo, Skeleton};
pub use nielsen::{is_satisfiable, proof_graph, ProofGraph, Rule};
pub use oracle::{check_characterization, enumerate_solutions, length_abstraction, LenAbsSample};
pub use pad::{LinTerm, PadFormula};
pub use parse::{parse_problem, ParseError};
pub use regnielsen::{is_satisfiable_reg, RegConfig, RegContext};
pub use solver::{solve, SolveOptions, Status, Verdict};
pub use terms::{Classification, Equation, Problem, Side, Symbol, Var};
