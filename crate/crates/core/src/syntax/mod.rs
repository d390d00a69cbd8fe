//! The program language: guarded parallel assignments over ground terms.
//!
//! ```text
//! vocab {
//!   constructors { eps/0; d0/1; d1/1 }
//!   dynamic { b/0 }
//! }
//! inputs { }
//! output { b }
//! rules {
//!   if b = undef then { b := d1(eps) }
//!   if b = d1(eps) then { b := d0(eps) }
//! }
//! ```
//!
//! All assignments whose guards hold fire together as one step; a state
//! in which no assignment is enabled is terminal.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::term::{SymbolId, Term, Vocabulary};

mod critical;
mod format;
mod link;
mod parse;
mod validate;

pub use critical::{critical_terms, CritNode, CriticalTerms};
pub use link::{link_program, LinkError};
pub use parse::parse_program;
pub use validate::{validate_program, Diagnostic};

/// A guard: a boolean combination of equations. `None` on either side of
/// an atom is the literal `undef`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Guard {
    Atom(Option<Term>, Option<Term>),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    /// Visits every term of every atom, left to right.
    pub fn for_each_term<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Guard::Atom(l, r) => {
                if let Some(t) = l {
                    f(t);
                }
                if let Some(t) = r {
                    f(t);
                }
            }
            Guard::Not(g) => g.for_each_term(f),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.for_each_term(f);
                b.for_each_term(f);
            }
        }
    }
}

/// `f(s1, …, sk) := u`, where `u` may be `undef` (`rhs == None`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub lhs: Term,
    pub rhs: Option<Term>,
}

impl Assignment {
    pub fn head(&self) -> SymbolId {
        self.lhs.head()
    }

    pub fn args(&self) -> &[Term] {
        self.lhs.args()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(Assignment),
    If {
        cond: Guard,
        then: Vec<Stmt>,
        otherwise: Option<Vec<Stmt>>,
    },
}

impl Stmt {
    pub fn for_each_term<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Stmt::Assign(a) => {
                f(&a.lhs);
                if let Some(r) = &a.rhs {
                    f(r);
                }
            }
            Stmt::If {
                cond,
                then,
                otherwise,
            } => {
                cond.for_each_term(f);
                for s in then {
                    s.for_each_term(f);
                }
                for s in otherwise.iter().flatten() {
                    s.for_each_term(f);
                }
            }
        }
    }

    pub fn for_each_assignment<'a>(&'a self, f: &mut impl FnMut(&'a Assignment)) {
        match self {
            Stmt::Assign(a) => f(a),
            Stmt::If {
                then, otherwise, ..
            } => {
                for s in then.iter().chain(otherwise.iter().flatten()) {
                    s.for_each_assignment(f);
                }
            }
        }
    }
}

/// An oracle symbol and the program that computes it. `body` is filled in
/// by [`link_program`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleDef {
    pub symbol: SymbolId,
    pub arity: usize,
    pub path: String,
    pub body: Option<Arc<Program>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub vocab: Vocabulary,
    pub inputs: Vec<SymbolId>,
    pub output: SymbolId,
    pub init: Vec<Assignment>,
    pub oracles: Vec<OracleDef>,
    pub rules: Vec<Stmt>,
}

impl Program {
    pub fn assignments(&self) -> Vec<&Assignment> {
        let mut out = Vec::new();
        for s in &self.rules {
            s.for_each_assignment(&mut |a| out.push(a));
        }
        out
    }

    pub fn oracle(&self, symbol: SymbolId) -> Option<&OracleDef> {
        self.oracles.iter().find(|o| o.symbol == symbol)
    }

    pub fn is_linked(&self) -> bool {
        self.oracles
            .iter()
            .all(|o| o.body.as_ref().is_some_and(|b| b.is_linked()))
    }
}
