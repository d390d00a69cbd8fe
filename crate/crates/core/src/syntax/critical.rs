use alloc::vec::Vec;

use super::Program;
use crate::fx::{self, FxHashMap};
use crate::term::{compact_size, SymbolId, Term};

/// One critical term with its arguments given as positions in the list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CritNode {
    pub head: SymbolId,
    pub args: Vec<usize>,
}

/// The subterm-closed list of terms a program can observe, small to big.
#[derive(Clone, Debug)]
pub struct CriticalTerms {
    terms: Vec<Term>,
    nodes: Vec<CritNode>,
    index: FxHashMap<Term, usize>,
}

impl CriticalTerms {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &Term {
        &self.terms[i]
    }

    pub fn node(&self, i: usize) -> &CritNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[CritNode] {
        &self.nodes
    }

    pub fn position(&self, t: &Term) -> Option<usize> {
        self.index.get(t).copied()
    }
}

/// Every term and subterm occurring in the inputs, output and rules,
/// deduplicated and ordered by compact size, ties broken by first textual
/// occurrence. `init` entries are data, not program terms, and are excluded.
pub fn critical_terms(p: &Program) -> CriticalTerms {
    let mut first: FxHashMap<Term, usize> = fx::map();
    let mut order: Vec<Term> = Vec::new();
    let mut visit = |root: &Term| {
        // Pre-order, left to right: the textual order of symbol occurrences.
        let mut stack = alloc::vec![root.clone()];
        while let Some(t) = stack.pop() {
            if first.contains_key(&t) {
                continue;
            }
            first.insert(t.clone(), order.len());
            for a in t.args().iter().rev() {
                stack.push(a.clone());
            }
            order.push(t);
        }
    };
    for &i in &p.inputs {
        visit(&Term::leaf(i));
    }
    visit(&Term::leaf(p.output));
    for s in &p.rules {
        s.for_each_term(&mut |t| visit(t));
    }

    let mut keyed: Vec<(usize, usize, Term)> = order
        .into_iter()
        .enumerate()
        .map(|(k, t)| (compact_size(&t), k, t))
        .collect();
    keyed.sort_by_key(|&(size, k, _)| (size, k));

    let mut index: FxHashMap<Term, usize> = fx::map();
    let mut terms = Vec::with_capacity(keyed.len());
    let mut nodes = Vec::with_capacity(keyed.len());
    for (_, _, t) in keyed {
        let args = t
            .args()
            .iter()
            .map(|a| *index.get(a).expect("proper subterms are smaller"))
            .collect();
        nodes.push(CritNode {
            head: t.head(),
            args,
        });
        index.insert(t.clone(), terms.len());
        terms.push(t);
    }
    CriticalTerms {
        terms,
        nodes,
        index,
    }
}
