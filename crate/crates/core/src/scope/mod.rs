//! The timed property language: syntax, parsing, and offline evaluation.

pub mod ast;
pub mod eval;
pub mod parser;

pub use ast::{Event, Formula, Property, TimeBound};
pub use eval::{
    earliest_violation, earliest_violation_scan, evaluate, evaluate_at, evaluate_with_params,
    ScopeError, Tss, Verdict,
};
pub use parser::{parse_formula, parse_properties};
