use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::Program;
use crate::fx;
use crate::term::{SymbolKind, Vocabulary};

/// A well-formedness problem found by [`validate_program`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    /// Oracle names leading to the offending program, outermost first.
    pub within: Vec<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.within {
            write!(f, "in oracle `{o}`: ")?;
        }
        f.write_str(&self.message)
    }
}

/// Checks the static conditions a program must meet before it can run.
/// Returns an empty list when there are none to report. Oracle bodies are
/// checked when linked.
pub fn validate_program(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check(p, &mut Vec::new(), &mut out);
    out
}

fn check(p: &Program, within: &mut Vec<String>, out: &mut Vec<Diagnostic>) {
    let mut messages: Vec<String> = Vec::new();
    let mut say = |message: String| messages.push(message);
    let v: &Vocabulary = &p.vocab;

    if !v.constructors().any(|(_, s)| s.arity == 0) {
        say("no nullary constructor: the domain would be empty".into());
    }

    let mut seen = fx::set();
    for &i in &p.inputs {
        let name = v.name(i);
        if v.arity(i) != 0 {
            say(format!("input must be nullary: `{name}`"));
        }
        if v.kind(i) != SymbolKind::Dynamic {
            say(format!("input must be a dynamic symbol: `{name}`"));
        }
        if !seen.insert(i) {
            say(format!("input listed twice: `{name}`"));
        }
    }
    let z = v.name(p.output);
    if v.arity(p.output) != 0 {
        say(format!("output must be nullary: `{z}`"));
    }
    if v.kind(p.output) != SymbolKind::Dynamic {
        say(format!("output must be a dynamic symbol: `{z}`"));
    }

    let mut locations = fx::map();
    for a in &p.init {
        let head = v.name(a.head());
        if v.kind(a.head()) != SymbolKind::Dynamic {
            say(format!("init assigns to non-dynamic `{head}`"));
        }
        if p.inputs.contains(&a.head()) {
            say(format!("init assigns to input `{head}`"));
        }
        if !a.args().iter().all(|t| v.is_constructor_term(t)) {
            say(format!(
                "init location `{}` must have constructor-term arguments",
                v.show(&a.lhs)
            ));
        }
        match &a.rhs {
            Some(r) if !v.is_constructor_term(r) => say(format!(
                "init value for `{}` must be a constructor term",
                v.show(&a.lhs)
            )),
            _ => {}
        }
        if let Some(prev) = locations.insert(a.lhs.clone(), a.rhs.clone()) {
            if prev != a.rhs {
                say(format!(
                    "init gives `{}` two different values",
                    v.show(&a.lhs)
                ));
            }
        }
    }

    for o in &p.oracles {
        let name = v.name(o.symbol);
        let Some(body) = &o.body else { continue };
        if !body.vocab.same_constructors(v) {
            say(format!(
                "constructor mismatch: oracle `{name}` body declares different constructors"
            ));
        }
        if body.inputs.len() != o.arity {
            say(format!(
                "oracle `{name}` has arity {} but its body takes {} input(s)",
                o.arity,
                body.inputs.len()
            ));
        }
    }
    out.extend(messages.into_iter().map(|message| Diagnostic {
        within: within.clone(),
        message,
    }));

    for o in &p.oracles {
        if let Some(body) = &o.body {
            within.push(v.name(o.symbol).into());
            check(body, within, out);
            within.pop();
        }
    }
}
