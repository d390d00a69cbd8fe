#![allow(dead_code)]

use esm_core::term::TermPool;
use esm_core::{SymbolId, Term, Vocabulary};
use proptest::prelude::*;
use rand::Rng;

/// Constructors c/0, e/0, s/1, f/2, g/2, h/3.
pub fn vocab() -> Vocabulary {
    Vocabulary::builder()
        .constructor("c", 0)
        .constructor("e", 0)
        .constructor("s", 1)
        .constructor("f", 2)
        .constructor("g", 2)
        .constructor("h", 3)
        .build()
        .unwrap()
}

/// A random term over the constructors of `v` with at most `budget` fresh
/// inner nodes. Children are drawn from earlier nodes too, so the result
/// shares subterms the way parsed or read-back terms do.
pub fn random_term(v: &Vocabulary, budget: usize, rng: &mut impl Rng, pool: &mut TermPool) -> Term {
    let leaves: Vec<SymbolId> = v
        .constructors()
        .filter(|(_, s)| s.arity == 0)
        .map(|(i, _)| i)
        .collect();
    let inner: Vec<SymbolId> = v
        .constructors()
        .filter(|(_, s)| s.arity > 0)
        .map(|(i, _)| i)
        .collect();
    let mut made: Vec<Term> = leaves.iter().map(|&l| pool.make(l, Vec::new())).collect();
    if inner.is_empty() {
        return made[rng.random_range(0..made.len())].clone();
    }
    for _ in 0..budget {
        let head = inner[rng.random_range(0..inner.len())];
        let k = v.arity(head);
        let window = made.len().min(8);
        let args = (0..k)
            .map(|_| {
                // Favour recent nodes so the term grows deep as well as wide.
                if rng.random_bool(0.7) {
                    made[made.len() - 1 - rng.random_range(0..window)].clone()
                } else {
                    made[rng.random_range(0..made.len())].clone()
                }
            })
            .collect();
        made.push(pool.make(head, args));
    }
    made.pop().unwrap()
}

/// Tree-shaped terms (no sharing of allocations) of bounded depth.
pub fn arb_term(v: Vocabulary, depth: u32) -> impl Strategy<Value = Term> {
    let leaves: Vec<SymbolId> = v
        .constructors()
        .filter(|(_, s)| s.arity == 0)
        .map(|(i, _)| i)
        .collect();
    let inner: Vec<(SymbolId, usize)> = v
        .constructors()
        .filter(|(_, s)| s.arity > 0)
        .map(|(i, s)| (i, s.arity))
        .collect();
    let leaf = proptest::sample::select(leaves).prop_map(Term::leaf);
    leaf.prop_recursive(depth, 64, 3, move |inner_t| {
        let inner = inner.clone();
        (
            proptest::sample::select(inner),
            proptest::collection::vec(inner_t, 3),
        )
            .prop_map(|((h, k), mut args)| {
                args.truncate(k);
                Term::new(h, args)
            })
    })
}

/// Source text of a random program over constructors c, e, s/1, f/2,
/// nullary registers x, y (inputs), z (output), u, w and selectors ts, tf.
/// With `memory`, unary and binary dynamic functions m and k join in.
pub fn random_program(rng: &mut impl Rng, memory: bool) -> String {
    let mut g = ProgramGen { rng, memory };
    let mut out = String::from(
        "vocab {\n  constructors { c/0; e/0; s/1; f/2 }\n  dynamic { x/0; y/0; z/0; u/0; w/0",
    );
    if memory {
        out.push_str("; m/1; k/2");
    }
    out.push_str(" }\n  selectors { ts = s.1; tf = f.2 }\n}\ninputs { x, y }\noutput { z }\n");
    out.push_str("init {\n");
    let mut written = std::collections::HashSet::new();
    for _ in 0..g.rng.random_range(0..3) {
        let lhs = match (memory, g.rng.random_range(0..3)) {
            (true, 0) => format!("m({})", g.ground(2)),
            (true, 1) => format!("k({}, {})", g.ground(1), g.ground(1)),
            _ => ["u", "w"][g.rng.random_range(0..2)].to_string(),
        };
        if written.insert(lhs.clone()) {
            out.push_str(&format!("  {lhs} := {};\n", g.ground(2)));
        }
    }
    out.push_str("}\nrules {\n");
    for _ in 0..g.rng.random_range(0..5) {
        g.stmt(&mut out, 1, 2);
    }
    out.push_str("}\n");
    out
}

struct ProgramGen<'r, R> {
    rng: &'r mut R,
    memory: bool,
}

impl<R: Rng> ProgramGen<'_, R> {
    fn ground(&mut self, depth: u32) -> String {
        match if depth == 0 {
            self.rng.random_range(0..2)
        } else {
            self.rng.random_range(0..4)
        } {
            0 => "c".into(),
            1 => "e".into(),
            2 => format!("s({})", self.ground(depth - 1)),
            _ => format!("f({}, {})", self.ground(depth - 1), self.ground(depth - 1)),
        }
    }

    fn term(&mut self, depth: u32) -> String {
        let top = if depth == 0 {
            7
        } else if self.memory {
            13
        } else {
            11
        };
        match self.rng.random_range(0..top) {
            0 => "c".into(),
            1 => "e".into(),
            2 => "x".into(),
            3 => "y".into(),
            4 => "z".into(),
            5 => "u".into(),
            6 => "w".into(),
            7 => format!("s({})", self.term(depth - 1)),
            8 => format!("f({}, {})", self.term(depth - 1), self.term(depth - 1)),
            9 => format!("ts({})", self.term(depth - 1)),
            10 => format!("tf({})", self.term(depth - 1)),
            11 => format!("m({})", self.term(depth - 1)),
            _ => format!("k({}, {})", self.term(depth - 1), self.term(depth - 1)),
        }
    }

    fn side(&mut self) -> String {
        if self.rng.random_bool(0.2) {
            "undef".into()
        } else {
            self.term(2)
        }
    }

    fn guard(&mut self, depth: u32) -> String {
        match if depth == 0 {
            0
        } else {
            self.rng.random_range(0..5)
        } {
            0 | 1 => format!("{} = {}", self.side(), self.side()),
            2 => format!("not {}", self.guard(depth - 1)),
            3 => format!("({} and {})", self.guard(depth - 1), self.guard(depth - 1)),
            _ => format!("({} or {})", self.guard(depth - 1), self.guard(depth - 1)),
        }
    }

    fn stmt(&mut self, out: &mut String, indent: usize, depth: u32) {
        let pad = "  ".repeat(indent);
        if depth > 0 && self.rng.random_bool(0.5) {
            out.push_str(&format!("{pad}if {} then {{\n", self.guard(2)));
            for _ in 0..self.rng.random_range(0..3) {
                self.stmt(out, indent + 1, depth - 1);
            }
            out.push_str(&format!("{pad}}}"));
            if self.rng.random_bool(0.4) {
                out.push_str(" else {\n");
                for _ in 0..self.rng.random_range(0..3) {
                    self.stmt(out, indent + 1, depth - 1);
                }
                out.push_str(&format!("{pad}}}"));
            }
            out.push('\n');
            return;
        }
        let lhs = match (self.memory, self.rng.random_range(0..7)) {
            (true, 5) => format!("m({})", self.term(1)),
            (true, 6) => format!("k({}, {})", self.term(1), self.term(1)),
            (_, i) => ["x", "y", "z", "u", "w", "z", "u"][i].to_string(),
        };
        let rhs = if self.rng.random_bool(0.1) {
            "undef".into()
        } else {
            self.term(2)
        };
        out.push_str(&format!("{pad}{lhs} := {rhs}\n"));
    }
}

/// Random ground input over c, e, s, f.
pub fn random_input(v: &Vocabulary, rng: &mut impl Rng) -> Term {
    let mut pool = TermPool::new();
    let budget = rng.random_range(0..6);
    random_term(v, budget, rng, &mut pool)
}
