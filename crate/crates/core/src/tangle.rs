//! The tangle: one append-only, maximally shared dag holding every
//! constructor-term value of a run.
//!
//! Vertex 0 is the distinguished `undef` node. Every other vertex is a
//! constructor applied to earlier vertices, so ids are a topological order
//! and no two vertices have the same label and children. Structural
//! equality of represented terms is therefore id equality.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::hash::Hasher;
use core::sync::atomic::{AtomicU32, Ordering};

use hashbrown::HashTable;
use rustc_hash::FxHasher;

use crate::cost::{word_bits, CostMeter, OpKind};
use crate::fx;
use crate::term::{fold_shared, SymbolId, Term, TermPool, Vocabulary};

/// Handle of a tangle vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub const UNDEF: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// The id of the `i`-th vertex. Ids are dense, so any `i < len` of the
    /// issuing tangle is valid there.
    pub fn from_index(i: usize) -> NodeId {
        NodeId(u32::try_from(i).expect("node index fits in 32 bits"))
    }

    pub fn is_undef(self) -> bool {
        self == NodeId::UNDEF
    }
}

impl core::fmt::Display for NodeId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Undef,
    Con(SymbolId),
}

const UNDEF_LABEL: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TangleError {
    #[error("`{symbol}` expects {expected} children, got {found}")]
    Arity {
        symbol: u32,
        expected: usize,
        found: usize,
    },
    #[error("symbol {0} is not a constructor of this tangle")]
    ForeignSymbol(u32),
    #[error("node {0} does not belong to this tangle")]
    ForeignNode(u32),
    #[error("constructor applied to undef")]
    UndefChild,
    #[error("nodes come from different tangles")]
    ForeignTangle,
    #[error("undef has no term form")]
    Undef,
}

/// A node id paired with the tag of the tangle that issued it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Handle {
    tag: u32,
    pub id: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TangleStats {
    pub vertices: usize,
    pub edges: usize,
    pub word_bits: u32,
}

impl TangleStats {
    /// Memory cells: one per vertex label plus one per edge pointer.
    pub fn cells(&self) -> usize {
        self.vertices + self.edges
    }
}

static NEXT_TAG: AtomicU32 = AtomicU32::new(1);

pub struct Tangle {
    tag: u32,
    labels: Vec<u32>,
    starts: Vec<u32>,
    children: Vec<NodeId>,
    index: HashTable<NodeId>,
    arities: Vec<usize>,
    max_arity: usize,
}

impl Clone for Tangle {
    fn clone(&self) -> Self {
        Tangle {
            tag: NEXT_TAG.fetch_add(1, Ordering::Relaxed),
            labels: self.labels.clone(),
            starts: self.starts.clone(),
            children: self.children.clone(),
            index: self.index.clone(),
            arities: self.arities.clone(),
            max_arity: self.max_arity,
        }
    }
}

impl core::fmt::Debug for Tangle {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Tangle")
            .field("tag", &self.tag)
            .field("stats", &self.stats())
            .finish()
    }
}

fn hash_key(label: u32, children: &[NodeId]) -> u64 {
    let mut h = FxHasher::default();
    h.write_u32(label);
    for c in children {
        h.write_u32(c.0);
    }
    h.finish()
}

impl Tangle {
    /// A store holding only `undef`, for terms over the constructors of `vocab`.
    pub fn new(vocab: &Vocabulary) -> Tangle {
        let arities: Vec<usize> = vocab.constructors().map(|(_, s)| s.arity).collect();
        Tangle {
            tag: NEXT_TAG.fetch_add(1, Ordering::Relaxed),
            labels: vec![UNDEF_LABEL],
            starts: vec![0, 0],
            children: Vec::new(),
            index: HashTable::new(),
            max_arity: vocab.max_arity(),
            arities,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.labels.len()
    }

    pub fn label(&self, id: NodeId) -> Label {
        match self.labels[id.index()] {
            UNDEF_LABEL => Label::Undef,
            l => Label::Con(SymbolId(l)),
        }
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        let i = id.index();
        &self.children[self.starts[i] as usize..self.starts[i + 1] as usize]
    }

    pub fn handle(&self, id: NodeId) -> Handle {
        Handle { tag: self.tag, id }
    }

    fn lookup(&self, hash: u64, label: u32, children: &[NodeId]) -> Option<NodeId> {
        self.index
            .find(hash, |&id| {
                self.labels[id.index()] == label && self.children(id) == children
            })
            .copied()
    }

    /// Returns the unique vertex `label(children)`, allocating it if absent.
    pub fn intern(
        &mut self,
        label: SymbolId,
        children: &[NodeId],
        meter: &mut CostMeter,
    ) -> Result<NodeId, TangleError> {
        let expected = *self
            .arities
            .get(label.index())
            .ok_or(TangleError::ForeignSymbol(label.0))?;
        if expected != children.len() {
            return Err(TangleError::Arity {
                symbol: label.0,
                expected,
                found: children.len(),
            });
        }
        for c in children {
            if !self.contains(*c) {
                return Err(TangleError::ForeignNode(c.0));
            }
            if c.is_undef() {
                return Err(TangleError::UndefChild);
            }
        }
        Ok(self.intern_raw(label, children, meter))
    }

    /// [`Tangle::intern`] without argument validation. Charges one probe,
    /// and on a miss one allocation plus one write per child pointer and
    /// one for the index entry.
    pub(crate) fn intern_raw(
        &mut self,
        label: SymbolId,
        children: &[NodeId],
        meter: &mut CostMeter,
    ) -> NodeId {
        debug_assert_eq!(self.arities[label.index()], children.len());
        debug_assert!(children.iter().all(|c| !c.is_undef() && self.contains(*c)));
        let hash = hash_key(label.0, children);
        meter.tick(OpKind::Probe);
        if let Some(id) = self.lookup(hash, label.0, children) {
            return id;
        }
        let id = NodeId(self.labels.len() as u32);
        meter.tick(OpKind::Alloc);
        self.labels.push(label.0);
        self.children.extend_from_slice(children);
        meter.charge(OpKind::Write, children.len() as u64);
        self.starts.push(self.children.len() as u32);
        let Tangle {
            index,
            labels,
            starts,
            children: kids,
            ..
        } = self;
        index.insert_unique(hash, id, |&other| {
            let i = other.index();
            hash_key(labels[i], &kids[starts[i] as usize..starts[i + 1] as usize])
        });
        meter.tick(OpKind::Write);
        meter.note_vertices(self.labels.len());
        id
    }

    /// Term equality in one comparison.
    #[inline]
    pub fn node_eq(&self, a: NodeId, b: NodeId, meter: &mut CostMeter) -> bool {
        meter.tick(OpKind::Compare);
        a == b
    }

    /// Like [`Tangle::node_eq`], but rejects handles issued by another tangle.
    pub fn eq_handles(
        &self,
        a: Handle,
        b: Handle,
        meter: &mut CostMeter,
    ) -> Result<bool, TangleError> {
        if a.tag != self.tag || b.tag != self.tag {
            return Err(TangleError::ForeignTangle);
        }
        Ok(self.node_eq(a.id, b.id, meter))
    }

    /// Reads child `pos` of `id` when its label is `ctor`; `undef` otherwise.
    pub(crate) fn select(
        &self,
        id: NodeId,
        ctor: SymbolId,
        pos: usize,
        meter: &mut CostMeter,
    ) -> NodeId {
        meter.tick(OpKind::Read);
        meter.tick(OpKind::Compare);
        if self.labels[id.index()] != ctor.0 {
            return NodeId::UNDEF;
        }
        meter.tick(OpKind::Read);
        self.children(id)[pos]
    }

    /// Interns every distinct subterm of `t` bottom-up and returns `G(t)`.
    ///
    /// Work is charged per distinct allocation of `t`, so for a maximally
    /// shared term (as produced by parsing or readback) it is linear in
    /// the compact size `‖t‖`.
    pub fn import_term(&mut self, t: &Term, meter: &mut CostMeter) -> Result<NodeId, TangleError> {
        let mut scratch = Vec::new();
        fold_shared(t, |node, kids: &[Result<NodeId, TangleError>]| {
            scratch.clear();
            for k in kids {
                meter.tick(OpKind::Read);
                scratch.push(k.clone()?);
            }
            self.intern(node.head(), &scratch, meter)
        })
    }

    /// Reads back the term at `id`. The result is maximally shared; its
    /// tree form can be exponentially larger than the dag.
    pub fn extract_term(&self, id: NodeId) -> Result<Term, TangleError> {
        if !self.contains(id) {
            return Err(TangleError::ForeignNode(id.0));
        }
        if id.is_undef() {
            return Err(TangleError::Undef);
        }
        let mut reachable = fx::set::<NodeId>();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if reachable.insert(n) {
                stack.extend_from_slice(self.children(n));
            }
        }
        let mut order: Vec<NodeId> = reachable.into_iter().collect();
        order.sort_unstable();
        let mut built = fx::map::<NodeId, Term>();
        let mut pool = TermPool::new();
        for n in order {
            let Label::Con(sym) = self.label(n) else {
                unreachable!("undef is never a child");
            };
            let args = self.children(n).iter().map(|c| built[c].clone()).collect();
            built.insert(n, pool.make(sym, args));
        }
        Ok(built.remove(&id).expect("root built"))
    }

    pub fn stats(&self) -> TangleStats {
        TangleStats {
            vertices: self.labels.len(),
            edges: self.children.len(),
            word_bits: word_bits(self.labels.len()),
        }
    }

    /// One line per vertex: `id<TAB>label<TAB>child ids`, ascending.
    pub fn dump(&self, vocab: &Vocabulary) -> String {
        let mut out = String::new();
        for i in 0..self.labels.len() {
            let id = NodeId(i as u32);
            let label = match self.label(id) {
                Label::Undef => "undef",
                Label::Con(s) => vocab.name(s),
            };
            let _ = write!(out, "{i}\t{label}\t");
            for (k, c) in self.children(id).iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{c}");
            }
            out.push('\n');
        }
        out
    }

    /// True when no two vertices share label and children and every child
    /// precedes its parent.
    pub fn check_invariants(&self) -> bool {
        let mut seen = fx::set::<(u32, &[NodeId])>();
        for i in 0..self.labels.len() {
            let id = NodeId(i as u32);
            let kids = self.children(id);
            if kids.iter().any(|c| c.index() >= i || c.is_undef()) {
                return false;
            }
            if !seen.insert((self.labels[i], kids)) {
                return false;
            }
        }
        self.children.len() <= self.max_arity * self.labels.len()
    }
}
