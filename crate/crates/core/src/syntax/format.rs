use alloc::string::String;
use core::fmt::{self, Write as _};

use super::{Assignment, Guard, Program, Stmt};
use crate::term::{SymbolKind, Term, Vocabulary};

impl Program {
    /// Canonical source text. Parsing it yields an equal program.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        self.write_source(&mut out).expect("writing to a String");
        out
    }

    fn write_source(&self, out: &mut String) -> fmt::Result {
        let v = &self.vocab;
        let sigs = |kind: fn(SymbolKind) -> bool| {
            let mut s = String::new();
            for (id, sym) in v.iter().filter(|(_, s)| kind(s.kind)) {
                if !s.is_empty() {
                    s.push_str("; ");
                }
                let _ = write!(s, "{}/{}", v.name(id), sym.arity);
            }
            s
        };
        writeln!(out, "vocab {{")?;
        writeln!(
            out,
            "  constructors {{ {} }}",
            sigs(|k| k == SymbolKind::Constructor)
        )?;
        writeln!(
            out,
            "  dynamic {{ {} }}",
            sigs(|k| k == SymbolKind::Dynamic)
        )?;
        let mut selectors = String::new();
        for (id, sym) in v.iter() {
            if let SymbolKind::Selector {
                constructor,
                position,
            } = sym.kind
            {
                if !selectors.is_empty() {
                    selectors.push_str("; ");
                }
                let _ = write!(
                    selectors,
                    "{} = {}.{}",
                    v.name(id),
                    v.name(constructor),
                    position + 1
                );
            }
        }
        if !selectors.is_empty() {
            writeln!(out, "  selectors {{ {selectors} }}")?;
        }
        writeln!(out, "}}")?;

        write!(out, "inputs {{ ")?;
        for (k, i) in self.inputs.iter().enumerate() {
            if k > 0 {
                out.push_str(", ");
            }
            out.push_str(v.name(*i));
        }
        writeln!(out, " }}")?;
        writeln!(out, "output {{ {} }}", v.name(self.output))?;

        if !self.init.is_empty() {
            writeln!(out, "init {{")?;
            for a in &self.init {
                out.push_str("  ");
                write_assignment(out, v, a)?;
                out.push_str(";\n");
            }
            writeln!(out, "}}")?;
        }
        if !self.oracles.is_empty() {
            writeln!(out, "oracles {{")?;
            for o in &self.oracles {
                writeln!(out, "  {}/{} = \"{}\";", v.name(o.symbol), o.arity, o.path)?;
            }
            writeln!(out, "}}")?;
        }
        writeln!(out, "rules {{")?;
        for s in &self.rules {
            write_stmt(out, v, s, 1)?;
        }
        writeln!(out, "}}")
    }
}

fn write_term(out: &mut String, v: &Vocabulary, t: Option<&Term>) -> fmt::Result {
    match t {
        Some(t) => write!(out, "{}", v.show(t)),
        None => out.write_str("undef"),
    }
}

fn write_assignment(out: &mut String, v: &Vocabulary, a: &Assignment) -> fmt::Result {
    write_term(out, v, Some(&a.lhs))?;
    out.push_str(" := ");
    write_term(out, v, a.rhs.as_ref())
}

fn write_guard(out: &mut String, v: &Vocabulary, g: &Guard, prec: u8) -> fmt::Result {
    // 0: or, 1: and, 2: not/atom
    let (mine, open) = match g {
        Guard::Or(..) => (0, prec > 0),
        Guard::And(..) => (1, prec > 1),
        _ => (2, false),
    };
    if open {
        out.push('(');
    }
    match g {
        Guard::Atom(l, r) => {
            write_term(out, v, l.as_ref())?;
            out.push_str(" = ");
            write_term(out, v, r.as_ref())?;
        }
        Guard::Not(inner) => {
            out.push_str("not ");
            write_guard(out, v, inner, 2)?;
        }
        // Left-associative: the right operand binds one level tighter.
        Guard::And(a, b) | Guard::Or(a, b) => {
            write_guard(out, v, a, mine)?;
            out.push_str(if mine == 0 { " or " } else { " and " });
            write_guard(out, v, b, mine + 1)?;
        }
    }
    if open {
        out.push(')');
    }
    Ok(())
}

fn write_stmt(out: &mut String, v: &Vocabulary, s: &Stmt, depth: usize) -> fmt::Result {
    for _ in 0..depth {
        out.push_str("  ");
    }
    match s {
        Stmt::Assign(a) => {
            write_assignment(out, v, a)?;
            out.push('\n');
        }
        Stmt::If {
            cond,
            then,
            otherwise,
        } => {
            out.push_str("if ");
            write_guard(out, v, cond, 0)?;
            out.push_str(" then {\n");
            for s in then {
                write_stmt(out, v, s, depth + 1)?;
            }
            for _ in 0..depth {
                out.push_str("  ");
            }
            out.push('}');
            if let Some(other) = otherwise {
                out.push_str(" else {\n");
                for s in other {
                    write_stmt(out, v, s, depth + 1)?;
                }
                for _ in 0..depth {
                    out.push_str("  ");
                }
                out.push('}');
            }
            out.push('\n');
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use crate::corpus;
    use crate::syntax::parse_program;

    #[test]
    fn corpus_round_trips() {
        for entry in corpus::ENTRIES {
            let p = parse_program(entry.source).unwrap();
            let text = p.to_source();
            let q = parse_program(&text).unwrap();
            assert_eq!(p, q, "{}:\n{text}", entry.name);
            assert_eq!(text, q.to_source());
        }
    }

    #[test]
    fn guard_parens_preserved() {
        let src =
            "vocab { constructors { c/0 } dynamic { a/0; b/0; z/0 } } inputs { } output { z } \
                   rules { if (a = c or b = c) and not (z = c and a = undef) then { z := c } }";
        let p = parse_program(src).unwrap();
        let q = parse_program(&p.to_source()).unwrap();
        assert_eq!(p, q);
        assert!(p
            .to_source()
            .contains("(a = c or b = c) and not (z = c and a = undef)"));
    }
}
