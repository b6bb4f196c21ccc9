//! Finite automata, characteristic matrices, the transition monoid and
//! length sets of regular languages.

mod lengths;
mod matrix;
mod monoid;
mod nfa;

pub use lengths::{length_set, matrix_language_length_set, ProgressionSet};
pub use matrix::{Bits, BoolMatrix};
pub use monoid::{AutomataError, Monoid, UnionAutomaton, DEFAULT_MONOID_CAP};
pub use nfa::{Nfa, RegexError};
