//! Effective state machines over constructor domains.
//!
//! Programs are guarded parallel assignments (abstract state machine rules)
//! whose values live in a single append-only, maximally shared term graph
//! (a [`Tangle`]). Two interpreters are provided: a fast engine that keeps
//! only the values of the program's critical terms, and a reference engine
//! that keeps the full location map. Every step is metered in abstract RAM
//! operations so the growth and cost bounds of the simulation can be checked
//! on recorded runs.
//!
//! The crate is `no_std` and only needs `alloc`. File loading, report
//! serialization and the command-line front end live in the `esm` crate.

#![no_std]

extern crate alloc;

pub mod corpus;
pub mod cost;
pub mod engine;
mod fx;
mod lexer;
pub mod numeral;
pub mod syntax;
pub mod tangle;
pub mod term;

pub use cost::{CostMeter, CostReport, OpKind, StepCost};
pub use engine::{
    compare_engines, run, CompareVerdict, CriticalEngine, EngineError, EngineKind, OracleMode,
    Outcome, ReferenceEngine, RunOptions, RunResult, StepOutcome,
};
pub use lexer::Pos;
pub use syntax::{critical_terms, parse_program, validate_program, CriticalTerms, Program};
pub use tangle::{NodeId, Tangle, TangleStats};
pub use term::{
    compact_size, parse_term, symbol_count, Symbol, SymbolId, SymbolKind, Term, Vocabulary,
};
