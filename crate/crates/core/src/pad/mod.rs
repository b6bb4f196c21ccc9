//! Presburger arithmetic with divisibility: formulas, evaluation, bounded
//! model finding and SMT-LIB export.

mod eval;
mod formula;
mod search;
mod smtlib;

use thiserror::Error;

pub use eval::{check_model, divides, eval, prenex, Truth};
pub use formula::{LinTerm, PadFormula};
pub use search::{bounded_sat, bounded_sat_with, BoundedSat, PadModel, SearchOptions, DEFAULT_NODE_BUDGET};
pub use smtlib::{check_well_formed, export_smtlib, parse_model, SExpr};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadError {
    #[error("variable `{0}` has no value")]
    Unbound(String),
    #[error("malformed SMT-LIB: {0}")]
    Smt(String),
    #[error("variable `{0}` has negative value {1}")]
    Negative(String, i128),
}
