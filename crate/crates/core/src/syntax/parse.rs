use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Assignment, Guard, OracleDef, Program, Stmt};
use crate::fx::{self, FxHashMap};
use crate::lexer::{tokenize, Pos, Spanned, Tok};
use crate::term::{
    parse_term_at, ParseError, SymbolId, SymbolKind, Term, TermPool, VocabError, Vocabulary,
    VocabularyBuilder,
};

struct Parser {
    toks: Vec<Spanned>,
    i: usize,
    builder: VocabularyBuilder,
    decl_pos: FxHashMap<String, Pos>,
    pool: TermPool,
}

/// Parses program source text. Oracle bodies are not loaded; see
/// [`super::link_program`].
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        i: 0,
        builder: VocabularyBuilder::new(),
        decl_pos: fx::map(),
        pool: TermPool::new(),
    };
    p.program()
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.i].clone();
        if t.tok != Tok::Eof {
            self.i += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: String) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            msg,
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().pos)
        } else {
            self.syntax(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        if self.is_keyword(kw) {
            Ok(self.bump().pos)
        } else {
            self.syntax(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().pos)),
            other => self.syntax(format!("expected an identifier, found {other}")),
        }
    }

    fn nat(&mut self) -> Result<u64, ParseError> {
        match *self.peek() {
            Tok::Nat(n) => {
                self.bump();
                Ok(n)
            }
            ref other => self.syntax(format!("expected a number, found {other}")),
        }
    }

    fn declare(&mut self, name: &str, pos: Pos) {
        self.decl_pos.entry(name.to_string()).or_insert(pos);
    }

    fn build_vocab(&self) -> Result<Vocabulary, ParseError> {
        self.builder.build().map_err(|e| {
            let at = |name: &str| self.decl_pos.get(name).copied().unwrap_or_default();
            match e {
                VocabError::Duplicate(name) => {
                    // Report the second declaration.
                    let pos = self.duplicate_pos(&name).unwrap_or_else(|| at(&name));
                    ParseError::Duplicate { pos, name }
                }
                VocabError::Reserved(ref name) => ParseError::Invalid {
                    pos: at(name),
                    msg: e.to_string(),
                },
                VocabError::UnknownConstructor { ref selector, .. }
                | VocabError::BadPosition { ref selector, .. } => ParseError::Invalid {
                    pos: at(selector),
                    msg: e.to_string(),
                },
            }
        })
    }

    fn duplicate_pos(&self, name: &str) -> Option<Pos> {
        let mut hits = self
            .toks
            .iter()
            .enumerate()
            .filter(|(k, t)| {
                matches!(&t.tok, Tok::Ident(s) if s == name)
                    && matches!(
                        self.toks.get(k + 1).map(|n| &n.tok),
                        Some(Tok::Slash) | Some(Tok::Eq)
                    )
            })
            .map(|(_, t)| t.pos);
        hits.next();
        hits.next()
    }

    /// `sig (";" sig)* ";"?` inside braces; `sig := IDENT "/" NAT`.
    fn sigs(&mut self) -> Result<Vec<(String, usize, Pos)>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            let (name, pos) = self.ident()?;
            self.expect(Tok::Slash)?;
            let arity = self.nat()? as usize;
            out.push((name, arity, pos));
            if *self.peek() == Tok::Semi {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        // vocab
        self.keyword("vocab")?;
        self.expect(Tok::LBrace)?;
        self.keyword("constructors")?;
        for (name, arity, pos) in self.sigs()? {
            self.declare(&name, pos);
            self.builder.constructor(&name, arity);
        }
        self.keyword("dynamic")?;
        for (name, arity, pos) in self.sigs()? {
            self.declare(&name, pos);
            self.builder.dynamic(&name, arity);
        }
        if self.is_keyword("selectors") {
            self.bump();
            self.expect(Tok::LBrace)?;
            while *self.peek() != Tok::RBrace {
                let (name, pos) = self.ident()?;
                self.expect(Tok::Eq)?;
                let (ctor, _) = self.ident()?;
                self.expect(Tok::Dot)?;
                let position = self.nat()? as usize;
                self.declare(&name, pos);
                self.builder.selector(&name, &ctor, position);
                if *self.peek() == Tok::Semi {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
        }
        self.expect(Tok::RBrace)?;
        let vocab = self.build_vocab()?;

        // inputs / output
        self.keyword("inputs")?;
        self.expect(Tok::LBrace)?;
        let mut inputs = Vec::new();
        while *self.peek() != Tok::RBrace {
            let (name, pos) = self.ident()?;
            inputs.push(self.resolve(&vocab, &name, pos)?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        self.keyword("output")?;
        self.expect(Tok::LBrace)?;
        let (name, pos) = self.ident()?;
        let output = self.resolve(&vocab, &name, pos)?;
        self.expect(Tok::RBrace)?;

        // init
        let mut init = Vec::new();
        if self.is_keyword("init") {
            self.bump();
            self.expect(Tok::LBrace)?;
            while *self.peek() != Tok::RBrace {
                init.push(self.assignment(&vocab)?);
                self.expect(Tok::Semi)?;
            }
            self.expect(Tok::RBrace)?;
        }

        // oracles
        let mut decls = Vec::new();
        if self.is_keyword("oracles") {
            self.bump();
            self.expect(Tok::LBrace)?;
            while *self.peek() != Tok::RBrace {
                let (name, pos) = self.ident()?;
                self.expect(Tok::Slash)?;
                let arity = self.nat()? as usize;
                self.expect(Tok::Eq)?;
                let path = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        s
                    }
                    other => return self.syntax(format!("expected a quoted path, found {other}")),
                };
                self.expect(Tok::Semi)?;
                self.declare(&name, pos);
                self.builder.oracle(&name, arity);
                decls.push((name, arity, path));
            }
            self.expect(Tok::RBrace)?;
        }
        let vocab = if decls.is_empty() {
            vocab
        } else {
            self.build_vocab()?
        };
        let oracles = decls
            .into_iter()
            .map(|(name, arity, path)| OracleDef {
                symbol: vocab.lookup(&name).expect("declared"),
                arity,
                path,
                body: None,
            })
            .collect();

        // rules
        self.keyword("rules")?;
        self.expect(Tok::LBrace)?;
        let rules = self.block_body(&vocab)?;
        self.expect(Tok::RBrace)?;
        if *self.peek() != Tok::Eof {
            return self.syntax(format!("unexpected {} after rules", self.peek()));
        }

        Ok(Program {
            vocab,
            inputs,
            output,
            init,
            oracles,
            rules,
        })
    }

    fn resolve(&self, vocab: &Vocabulary, name: &str, pos: Pos) -> Result<SymbolId, ParseError> {
        vocab.lookup(name).ok_or_else(|| ParseError::UnknownSymbol {
            pos,
            name: name.to_string(),
        })
    }

    fn term(&mut self, vocab: &Vocabulary) -> Result<Term, ParseError> {
        parse_term_at(&self.toks, &mut self.i, vocab, &mut self.pool)
    }

    fn term_or_undef(&mut self, vocab: &Vocabulary) -> Result<Option<Term>, ParseError> {
        if self.is_keyword("undef") {
            self.bump();
            Ok(None)
        } else {
            self.term(vocab).map(Some)
        }
    }

    fn assignment(&mut self, vocab: &Vocabulary) -> Result<Assignment, ParseError> {
        let pos = self.pos();
        let lhs = self.term(vocab)?;
        let kind = vocab.kind(lhs.head());
        if kind != SymbolKind::Dynamic {
            let what = match kind {
                SymbolKind::Constructor => "constructor",
                SymbolKind::Selector { .. } => "selector",
                SymbolKind::Oracle => "oracle",
                SymbolKind::Dynamic => unreachable!(),
            };
            return Err(ParseError::Invalid {
                pos,
                msg: format!(
                    "cannot assign to {what} `{}`; only dynamic symbols are assignable",
                    vocab.name(lhs.head())
                ),
            });
        }
        self.expect(Tok::Assign)?;
        let rhs = self.term_or_undef(vocab)?;
        Ok(Assignment { lhs, rhs })
    }

    fn block_body(&mut self, vocab: &Vocabulary) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace && *self.peek() != Tok::Eof {
            out.push(self.stmt(vocab)?);
        }
        Ok(out)
    }

    fn block(&mut self, vocab: &Vocabulary) -> Result<Vec<Stmt>, ParseError> {
        self.expect(Tok::LBrace)?;
        let body = self.block_body(vocab)?;
        self.expect(Tok::RBrace)?;
        Ok(body)
    }

    fn stmt(&mut self, vocab: &Vocabulary) -> Result<Stmt, ParseError> {
        if self.is_keyword("if") {
            self.bump();
            let cond = self.guard(vocab)?;
            self.keyword("then")?;
            let then = self.block(vocab)?;
            let otherwise = if self.is_keyword("else") {
                self.bump();
                Some(self.block(vocab)?)
            } else {
                None
            };
            return Ok(Stmt::If {
                cond,
                then,
                otherwise,
            });
        }
        let a = self.assignment(vocab)?;
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        Ok(Stmt::Assign(a))
    }

    // guard := conj ("or" conj)* ; conj := unary ("and" unary)*
    fn guard(&mut self, vocab: &Vocabulary) -> Result<Guard, ParseError> {
        let mut g = self.conj(vocab)?;
        while self.is_keyword("or") {
            self.bump();
            let rhs = self.conj(vocab)?;
            g = Guard::Or(Box::new(g), Box::new(rhs));
        }
        Ok(g)
    }

    fn conj(&mut self, vocab: &Vocabulary) -> Result<Guard, ParseError> {
        let mut g = self.unary(vocab)?;
        while self.is_keyword("and") {
            self.bump();
            let rhs = self.unary(vocab)?;
            g = Guard::And(Box::new(g), Box::new(rhs));
        }
        Ok(g)
    }

    fn unary(&mut self, vocab: &Vocabulary) -> Result<Guard, ParseError> {
        if self.is_keyword("not") {
            self.bump();
            return Ok(Guard::Not(Box::new(self.unary(vocab)?)));
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let g = self.guard(vocab)?;
            self.expect(Tok::RParen)?;
            return Ok(g);
        }
        let lhs = self.term_or_undef(vocab)?;
        self.expect(Tok::Eq)?;
        let rhs = self.term_or_undef(vocab)?;
        Ok(Guard::Atom(lhs, rhs))
    }
}
