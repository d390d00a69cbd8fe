//! Ground terms over a partitioned vocabulary.
//!
//! A [`Term`] is an immutable, reference-counted tree node. Subterms may be
//! shared, and terms produced by [`TermPool`], [`parse_term`] or tangle
//! readback are maximally shared: structurally equal subterms are the same
//! allocation. All traversals visit each allocation once, so terms whose
//! tree form is exponentially large stay cheap to handle.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::hash::{Hash, Hasher};

use rustc_hash::FxHasher;

use crate::fx::{self, FxHashMap, FxHashSet};
use crate::lexer::{self, Pos, Spanned, Tok};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId(pub(crate) u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    /// Freely generates the domain.
    Constructor,
    /// Carries mutable state.
    Dynamic,
    /// Projection onto argument `position` (0-based) of `constructor`;
    /// undefined on terms with a different head.
    Selector {
        constructor: SymbolId,
        position: usize,
    },
    /// Operation computed by a nested program.
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
    pub kind: SymbolKind,
}

/// Words that cannot be used as symbol names.
pub const RESERVED: &[&str] = &[
    "vocab",
    "constructors",
    "dynamic",
    "selectors",
    "inputs",
    "output",
    "init",
    "oracles",
    "rules",
    "if",
    "then",
    "else",
    "not",
    "and",
    "or",
    "undef",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("duplicate symbol `{0}`")]
    Duplicate(String),
    #[error("`{0}` is a reserved word")]
    Reserved(String),
    #[error("selector `{selector}` refers to unknown constructor `{constructor}`")]
    UnknownConstructor {
        selector: String,
        constructor: String,
    },
    #[error("selector `{selector}`: `{constructor}` has no argument {position}")]
    BadPosition {
        selector: String,
        constructor: String,
        position: usize,
    },
}

#[derive(Clone, Debug)]
enum DeclKind {
    Constructor,
    Dynamic,
    Selector {
        constructor: String,
        position: usize,
    },
    Oracle,
}

/// Collects symbol declarations and assigns ids.
///
/// Constructors receive ids `0..|K|` sorted by name, so two vocabularies
/// with the same constructor set agree on every constructor id. All other
/// symbols follow in declaration order.
#[derive(Clone, Debug, Default)]
pub struct VocabularyBuilder {
    decls: Vec<(String, usize, DeclKind)>,
}

impl VocabularyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constructor(&mut self, name: &str, arity: usize) -> &mut Self {
        self.decls
            .push((name.to_string(), arity, DeclKind::Constructor));
        self
    }

    pub fn dynamic(&mut self, name: &str, arity: usize) -> &mut Self {
        self.decls
            .push((name.to_string(), arity, DeclKind::Dynamic));
        self
    }

    /// Declares `name` as the projection onto argument `position`
    /// (1-based, as written in source) of `constructor`.
    pub fn selector(&mut self, name: &str, constructor: &str, position: usize) -> &mut Self {
        self.decls.push((
            name.to_string(),
            1,
            DeclKind::Selector {
                constructor: constructor.to_string(),
                position,
            },
        ));
        self
    }

    pub fn oracle(&mut self, name: &str, arity: usize) -> &mut Self {
        self.decls.push((name.to_string(), arity, DeclKind::Oracle));
        self
    }

    pub fn build(&self) -> Result<Vocabulary, VocabError> {
        let mut seen = fx::set::<&str>();
        for (name, _, _) in &self.decls {
            if RESERVED.contains(&name.as_str()) {
                return Err(VocabError::Reserved(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(VocabError::Duplicate(name.clone()));
            }
        }

        let mut constructors: Vec<(&String, usize)> = self
            .decls
            .iter()
            .filter(|d| matches!(d.2, DeclKind::Constructor))
            .map(|d| (&d.0, d.1))
            .collect();
        constructors.sort();

        let mut symbols = Vec::with_capacity(self.decls.len());
        let mut by_name = fx::map::<String, SymbolId>();
        for (name, arity) in &constructors {
            by_name.insert((*name).clone(), SymbolId(symbols.len() as u32));
            symbols.push(Symbol {
                name: (*name).clone(),
                arity: *arity,
                kind: SymbolKind::Constructor,
            });
        }
        let n_constructors = symbols.len();

        for (name, arity, kind) in &self.decls {
            let kind = match kind {
                DeclKind::Constructor => continue,
                DeclKind::Dynamic => SymbolKind::Dynamic,
                DeclKind::Oracle => SymbolKind::Oracle,
                DeclKind::Selector {
                    constructor,
                    position,
                } => {
                    let ctor = by_name
                        .get(constructor.as_str())
                        .copied()
                        .filter(|id| id.index() < n_constructors)
                        .ok_or_else(|| VocabError::UnknownConstructor {
                            selector: name.clone(),
                            constructor: constructor.clone(),
                        })?;
                    let ctor_arity = symbols[ctor.index()].arity;
                    if *position == 0 || *position > ctor_arity {
                        return Err(VocabError::BadPosition {
                            selector: name.clone(),
                            constructor: constructor.clone(),
                            position: *position,
                        });
                    }
                    SymbolKind::Selector {
                        constructor: ctor,
                        position: position - 1,
                    }
                }
            };
            by_name.insert(name.clone(), SymbolId(symbols.len() as u32));
            symbols.push(Symbol {
                name: name.clone(),
                arity: *arity,
                kind,
            });
        }

        let max_arity = symbols[..n_constructors]
            .iter()
            .map(|s| s.arity)
            .max()
            .unwrap_or(0);
        Ok(Vocabulary {
            symbols,
            by_name,
            n_constructors,
            max_arity,
        })
    }
}

/// A finite vocabulary `K ⊎ J`, extended with selector and oracle symbols.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    symbols: Vec<Symbol>,
    by_name: FxHashMap<String, SymbolId>,
    n_constructors: usize,
    max_arity: usize,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    pub fn builder() -> VocabularyBuilder {
        VocabularyBuilder::new()
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn symbol(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.index()]
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.symbols[id.index()].name
    }

    pub fn arity(&self, id: SymbolId) -> usize {
        self.symbols[id.index()].arity
    }

    pub fn kind(&self, id: SymbolId) -> SymbolKind {
        self.symbols[id.index()].kind
    }

    pub fn is_constructor(&self, id: SymbolId) -> bool {
        id.index() < self.n_constructors
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, &Symbol)> {
        self.symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (SymbolId(i as u32), s))
    }

    /// The constructors `K`, in id order.
    pub fn constructors(&self) -> impl Iterator<Item = (SymbolId, &Symbol)> {
        self.iter().take(self.n_constructors)
    }

    pub fn constructor_count(&self) -> usize {
        self.n_constructors
    }

    /// Largest constructor arity; bounds the out-degree of tangle vertices.
    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    /// True when `other` has exactly the same constructor names and arities.
    pub fn same_constructors(&self, other: &Vocabulary) -> bool {
        self.symbols[..self.n_constructors] == other.symbols[..other.n_constructors]
    }

    /// Builds `name(args)`, checking that the symbol exists and the arity fits.
    pub fn apply(&self, name: &str, args: Vec<Term>) -> Result<Term, ParseError> {
        let id = self.lookup(name).ok_or_else(|| ParseError::UnknownSymbol {
            pos: Pos::default(),
            name: name.to_string(),
        })?;
        let expected = self.arity(id);
        if expected != args.len() {
            return Err(ParseError::Arity {
                pos: Pos::default(),
                name: name.to_string(),
                expected,
                found: args.len(),
            });
        }
        Ok(Term::new(id, args))
    }

    /// Returns a `Display` adapter printing `t` in canonical syntax.
    pub fn show<'a>(&'a self, t: &'a Term) -> Shown<'a> {
        Shown {
            vocab: self,
            term: t,
        }
    }

    pub fn format_term(&self, t: &Term) -> String {
        self.show(t).to_string()
    }

    /// True when every symbol of `t` is a constructor.
    pub fn is_constructor_term(&self, t: &Term) -> bool {
        fold_shared(t, |node, kids: &[bool]| {
            self.is_constructor(node.head()) && kids.iter().all(|&k| k)
        })
    }
}

struct Node {
    head: SymbolId,
    hash: u64,
    args: Vec<Term>,
}

impl Drop for Node {
    // Deep chains would otherwise recurse once per level.
    fn drop(&mut self) {
        let mut stack = core::mem::take(&mut self.args);
        while let Some(t) = stack.pop() {
            if let Ok(mut inner) = Arc::try_unwrap(t.0) {
                stack.append(&mut inner.args);
            }
        }
    }
}

/// A ground term. Cloning is O(1).
#[derive(Clone)]
pub struct Term(Arc<Node>);

impl Term {
    pub fn new(head: SymbolId, args: Vec<Term>) -> Term {
        let mut h = FxHasher::default();
        head.hash(&mut h);
        for a in &args {
            h.write_u64(a.0.hash);
        }
        Term(Arc::new(Node {
            head,
            hash: h.finish(),
            args,
        }))
    }

    pub fn leaf(head: SymbolId) -> Term {
        Term::new(head, Vec::new())
    }

    pub fn head(&self) -> SymbolId {
        self.0.head
    }

    pub fn args(&self) -> &[Term] {
        &self.0.args
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub(crate) fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// Visits every distinct subterm allocation once, in pre-order.
    pub fn subterms(&self) -> Vec<Term> {
        let mut seen = fx::set::<usize>();
        let mut out = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(t) = stack.pop() {
            if !seen.insert(t.addr()) {
                continue;
            }
            for a in t.args().iter().rev() {
                stack.push(a.clone());
            }
            out.push(t);
        }
        out
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        if self.0.hash != other.0.hash {
            return false;
        }
        let mut seen: FxHashSet<(usize, usize)> = fx::set();
        let mut stack: Vec<(&Term, &Term)> = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            if a.ptr_eq(b) {
                continue;
            }
            if a.0.hash != b.0.hash || a.head() != b.head() || a.args().len() != b.args().len() {
                return false;
            }
            if !seen.insert((a.addr(), b.addr())) {
                continue;
            }
            stack.extend(a.args().iter().zip(b.args()));
        }
        true
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.head().0)?;
        if !self.args().is_empty() {
            f.debug_list().entries(self.args()).finish()?;
        }
        Ok(())
    }
}

/// Post-order fold that visits each distinct allocation once.
pub(crate) fn fold_shared<R: Clone>(t: &Term, mut f: impl FnMut(&Term, &[R]) -> R) -> R {
    let mut memo: FxHashMap<usize, R> = fx::map();
    let mut stack: Vec<(&Term, bool)> = vec![(t, false)];
    let mut kids = Vec::new();
    while let Some((node, expanded)) = stack.pop() {
        if memo.contains_key(&node.addr()) {
            continue;
        }
        if expanded {
            kids.clear();
            kids.extend(node.args().iter().map(|c| memo[&c.addr()].clone()));
            let r = f(node, &kids);
            memo.insert(node.addr(), r);
        } else {
            stack.push((node, true));
            for c in node.args().iter().rev() {
                if !memo.contains_key(&c.addr()) {
                    stack.push((c, false));
                }
            }
        }
    }
    memo.remove(&t.addr()).expect("root folded")
}

/// Compact size: the number of distinct subterms of `t`.
pub fn compact_size(t: &Term) -> usize {
    let mut classes: FxHashMap<(SymbolId, Vec<u32>), u32> = fx::map();
    fold_shared(t, |node, kids: &[u32]| {
        let next = classes.len() as u32;
        *classes.entry((node.head(), kids.to_vec())).or_insert(next)
    });
    classes.len()
}

/// Number of symbol occurrences in the tree form of `t` (saturating).
pub fn symbol_count(t: &Term) -> u64 {
    fold_shared(t, |_, kids: &[u64]| {
        kids.iter().fold(1u64, |acc, &k| acc.saturating_add(k))
    })
}

/// Hash-consing constructor for maximally shared terms.
#[derive(Default)]
pub struct TermPool {
    set: FxHashSet<Term>,
}

impl TermPool {
    pub fn new() -> Self {
        TermPool { set: fx::set() }
    }

    /// Returns the pooled term `head(args)`. When every argument came from
    /// this pool the result is maximally shared.
    pub fn make(&mut self, head: SymbolId, args: Vec<Term>) -> Term {
        let t = Term::new(head, args);
        if let Some(existing) = self.set.get(&t) {
            return existing.clone();
        }
        self.set.insert(t.clone());
        t
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

pub struct Shown<'a> {
    vocab: &'a Vocabulary,
    term: &'a Term,
}

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        enum Item<'t> {
            Term(&'t Term),
            Text(&'static str),
        }
        let mut stack = vec![Item::Term(self.term)];
        while let Some(item) = stack.pop() {
            match item {
                Item::Text(s) => f.write_str(s)?,
                Item::Term(t) => {
                    f.write_str(self.vocab.name(t.head()))?;
                    if t.args().is_empty() {
                        continue;
                    }
                    f.write_str("(")?;
                    stack.push(Item::Text(")"));
                    for (i, a) in t.args().iter().enumerate().rev() {
                        stack.push(Item::Term(a));
                        if i > 0 {
                            stack.push(Item::Text(","));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unknown symbol `{name}`")]
    UnknownSymbol { pos: Pos, name: String },
    #[error("{pos}: `{name}` expects {expected} argument(s), found {found}")]
    Arity {
        pos: Pos,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{pos}: duplicate symbol `{name}`")]
    Duplicate { pos: Pos, name: String },
    #[error("{pos}: {msg}")]
    Invalid { pos: Pos, msg: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownSymbol { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::Duplicate { pos, .. }
            | ParseError::Invalid { pos, .. } => *pos,
        }
    }
}

impl From<lexer::LexError> for ParseError {
    fn from(e: lexer::LexError) -> Self {
        ParseError::Syntax {
            pos: e.pos,
            msg: e.msg,
        }
    }
}

/// Parses a term from a token stream starting at `*i`, leaving `*i` on the
/// first token after it. Iterative, so nesting depth is unbounded.
pub(crate) fn parse_term_at(
    toks: &[Spanned],
    i: &mut usize,
    vocab: &Vocabulary,
    pool: &mut TermPool,
) -> Result<Term, ParseError> {
    struct Frame {
        head: SymbolId,
        pos: Pos,
        args: Vec<Term>,
    }
    let mut stack: Vec<Frame> = Vec::new();
    loop {
        // Parse one head symbol.
        let Spanned { tok, pos } = &toks[*i];
        let name = match tok {
            Tok::Ident(name) if name == "undef" => {
                return Err(ParseError::Syntax {
                    pos: *pos,
                    msg: "`undef` is not a term".into(),
                })
            }
            Tok::Ident(name) => name,
            other => {
                return Err(ParseError::Syntax {
                    pos: *pos,
                    msg: alloc::format!("expected a term, found {other}"),
                })
            }
        };
        let head = vocab
            .lookup(name)
            .ok_or_else(|| ParseError::UnknownSymbol {
                pos: *pos,
                name: name.clone(),
            })?;
        *i += 1;
        if toks[*i].tok == Tok::LParen {
            *i += 1;
            stack.push(Frame {
                head,
                pos: *pos,
                args: Vec::new(),
            });
            continue;
        }
        if vocab.arity(head) != 0 {
            return Err(ParseError::Arity {
                pos: *pos,
                name: name.clone(),
                expected: vocab.arity(head),
                found: 0,
            });
        }
        let mut done = pool.make(head, Vec::new());

        // Reduce completed terms into their parents.
        loop {
            let Some(top) = stack.last_mut() else {
                return Ok(done);
            };
            top.args.push(done);
            match &toks[*i].tok {
                Tok::Comma => {
                    *i += 1;
                    break;
                }
                Tok::RParen => {
                    *i += 1;
                    let frame = stack.pop().expect("non-empty");
                    let expected = vocab.arity(frame.head);
                    if expected != frame.args.len() {
                        return Err(ParseError::Arity {
                            pos: frame.pos,
                            name: vocab.name(frame.head).to_string(),
                            expected,
                            found: frame.args.len(),
                        });
                    }
                    done = pool.make(frame.head, frame.args);
                }
                other => {
                    return Err(ParseError::Syntax {
                        pos: toks[*i].pos,
                        msg: alloc::format!("expected `,` or `)`, found {other}"),
                    })
                }
            }
        }
    }
}

/// Parses `text` as a single term over `vocab`.
pub fn parse_term(text: &str, vocab: &Vocabulary) -> Result<Term, ParseError> {
    let toks = lexer::tokenize(text)?;
    let mut i = 0;
    let mut pool = TermPool::new();
    let t = parse_term_at(&toks, &mut i, vocab, &mut pool)?;
    match &toks[i].tok {
        Tok::Eof => Ok(t),
        other => Err(ParseError::Syntax {
            pos: toks[i].pos,
            msg: alloc::format!("unexpected {other} after term"),
        }),
    }
}
