//! The critical-term engine.
//!
//! State is one vertex id per critical term. Terms free of oracle symbols
//! are "resident": their values are recomputed small to big after every
//! update. Terms under an oracle call are evaluated on demand while
//! deciding, and cached for the rest of that state.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    apply_constructor, apply_selector, atom_holds, Decision, Fault, Halt, Machine, Pending,
    RunOptions, Session, StepOutcome, Stop,
};
use crate::cost::OpKind;
use crate::fx::{self, FxHashMap};
use crate::syntax::{critical_terms, CriticalTerms, Guard, Program, Stmt};
use crate::tangle::{NodeId, Tangle};
use crate::term::{compact_size, SymbolId, SymbolKind, Term};
use crate::EngineError;

pub(crate) enum CKind {
    Con(SymbolId),
    Dyn(SymbolId),
    Sel { ctor: SymbolId, pos: usize },
    Oracle { sym: SymbolId, body: Arc<Program> },
}

pub(crate) struct CTerm {
    pub kind: CKind,
    pub args: Vec<usize>,
    pub resident: bool,
}

pub(crate) enum CGuard {
    Atom(Option<usize>, Option<usize>),
    Not(Box<CGuard>),
    And(Box<CGuard>, Box<CGuard>),
    Or(Box<CGuard>, Box<CGuard>),
}

pub(crate) enum CStmt {
    Assign {
        head: SymbolId,
        args: Vec<usize>,
        rhs: Option<usize>,
    },
    If {
        cond: CGuard,
        then: Vec<CStmt>,
        otherwise: Vec<CStmt>,
    },
}

/// A program prepared for either engine: its critical terms, rules in
/// critical-index form, and its growth constant.
pub(crate) struct Compiled {
    pub prog: Arc<Program>,
    pub ct: CriticalTerms,
    pub terms: Vec<CTerm>,
    pub rules: Vec<CStmt>,
    /// Critical index of each input symbol.
    pub inputs: Vec<usize>,
    pub is_input: Vec<bool>,
    pub output: usize,
    /// For each dynamic-headed term, the resident terms with the same head,
    /// in critical order.
    pub same_head: Vec<Vec<usize>>,
    /// Vertices a nested run of this program can add before its first step.
    pub init_growth: usize,
    /// Largest per-step growth of this program and every oracle body it reaches.
    pub growth_max: usize,
    pub uses_oracles: bool,
}

impl Compiled {
    pub fn new(
        prog: Arc<Program>,
        body_of: &mut dyn FnMut(&Arc<Program>) -> Arc<Compiled>,
    ) -> Compiled {
        let ct = critical_terms(&prog);
        let v = &prog.vocab;
        let mut terms: Vec<CTerm> = Vec::with_capacity(ct.len());
        let mut constructors = 0;
        let mut nested_init = 0;
        let mut growth_max = 0;
        let mut uses_oracles = false;
        for node in ct.nodes() {
            let kind = match v.kind(node.head) {
                SymbolKind::Constructor => {
                    constructors += 1;
                    CKind::Con(node.head)
                }
                SymbolKind::Dynamic => CKind::Dyn(node.head),
                SymbolKind::Selector {
                    constructor,
                    position,
                } => CKind::Sel {
                    ctor: constructor,
                    pos: position,
                },
                SymbolKind::Oracle => {
                    let body = prog
                        .oracle(node.head)
                        .and_then(|o| o.body.clone())
                        .expect("linked program");
                    let c = body_of(&body);
                    nested_init += c.init_growth;
                    growth_max = growth_max.max(c.growth_max);
                    uses_oracles = true;
                    CKind::Oracle {
                        sym: node.head,
                        body,
                    }
                }
            };
            let resident = !matches!(kind, CKind::Oracle { .. })
                && node.args.iter().all(|&a| terms[a].resident);
            terms.push(CTerm {
                kind,
                args: node.args.clone(),
                resident,
            });
        }

        let mut same_head = vec![Vec::new(); ct.len()];
        for (i, t) in terms.iter().enumerate() {
            if let CKind::Dyn(f) = t.kind {
                same_head[i] = terms
                    .iter()
                    .enumerate()
                    .filter(|(r, u)| {
                        *r != i && u.resident && matches!(u.kind, CKind::Dyn(g) if g == f)
                    })
                    .map(|(r, _)| r)
                    .collect();
            }
        }

        let pos = |t: &Term| ct.position(t).expect("program term is critical");
        let inputs: Vec<usize> = prog.inputs.iter().map(|&s| pos(&Term::leaf(s))).collect();
        let mut is_input = vec![false; ct.len()];
        for &i in &inputs {
            is_input[i] = true;
        }
        let output = pos(&Term::leaf(prog.output));
        let rules = prog.rules.iter().map(|s| compile_stmt(s, &pos)).collect();

        let init_terms: usize = prog
            .init
            .iter()
            .map(|a| {
                a.args().iter().map(compact_size).sum::<usize>()
                    + a.rhs.as_ref().map_or(0, compact_size)
            })
            .sum();
        let growth = constructors + nested_init;
        Compiled {
            init_growth: init_terms + growth,
            growth_max: growth_max.max(growth),
            uses_oracles,
            prog,
            ct,
            terms,
            rules,
            inputs,
            is_input,
            output,
            same_head,
        }
    }
}

fn compile_guard(g: &Guard, pos: &dyn Fn(&Term) -> usize) -> CGuard {
    match g {
        Guard::Atom(l, r) => CGuard::Atom(l.as_ref().map(pos), r.as_ref().map(pos)),
        Guard::Not(a) => CGuard::Not(Box::new(compile_guard(a, pos))),
        Guard::And(a, b) => CGuard::And(
            Box::new(compile_guard(a, pos)),
            Box::new(compile_guard(b, pos)),
        ),
        Guard::Or(a, b) => CGuard::Or(
            Box::new(compile_guard(a, pos)),
            Box::new(compile_guard(b, pos)),
        ),
    }
}

fn compile_stmt(s: &Stmt, pos: &dyn Fn(&Term) -> usize) -> CStmt {
    match s {
        Stmt::Assign(a) => CStmt::Assign {
            head: a.head(),
            args: a.args().iter().map(pos).collect(),
            rhs: a.rhs.as_ref().map(pos),
        },
        Stmt::If {
            cond,
            then,
            otherwise,
        } => CStmt::If {
            cond: compile_guard(cond, pos),
            then: then.iter().map(|s| compile_stmt(s, pos)).collect(),
            otherwise: otherwise
                .iter()
                .flatten()
                .map(|s| compile_stmt(s, pos))
                .collect(),
        },
    }
}

pub(crate) struct CritCore {
    c: Arc<Compiled>,
    vals: Vec<NodeId>,
    next: Vec<NodeId>,
    lazy: Vec<Option<NodeId>>,
    calls: FxHashMap<(SymbolId, Vec<NodeId>), NodeId>,
    pending: Pending,
    steps: u64,
    scratch: Vec<NodeId>,
}

impl CritCore {
    /// Builds `X_0` from input vertices and the `init` block, then decides
    /// its update set.
    #[allow(clippy::result_large_err)]
    pub fn start(
        m: &mut Machine,
        c: Arc<Compiled>,
        inputs: &[NodeId],
    ) -> Result<CritCore, (CritCore, Stop)> {
        let len = c.ct.len();
        let mut core = CritCore {
            vals: vec![NodeId::UNDEF; len],
            next: vec![NodeId::UNDEF; len],
            lazy: vec![None; len],
            calls: fx::map(),
            pending: Pending::Terminal,
            steps: 0,
            scratch: Vec::new(),
            c,
        };
        let c = core.c.clone();
        for (&i, &id) in c.inputs.iter().zip(inputs) {
            m.meter.tick(OpKind::Write);
            core.vals[i] = id;
        }

        let mut init: FxHashMap<(SymbolId, Vec<NodeId>), NodeId> = fx::map();
        for a in &c.prog.init {
            let args: Vec<NodeId> = a.args().iter().map(|t| import(m, t)).collect();
            let value = match &a.rhs {
                Some(t) => import(m, t),
                None => NodeId::UNDEF,
            };
            m.meter.tick(OpKind::Probe);
            m.meter.tick(OpKind::Write);
            init.insert((a.head(), args), value);
        }

        for i in 0..len {
            let t = &c.terms[i];
            if !t.resident || c.is_input[i] {
                continue;
            }
            let v = match t.kind {
                CKind::Dyn(f) => {
                    let args = core.gather(m, &t.args, false);
                    if args.iter().any(|a| a.is_undef()) {
                        NodeId::UNDEF
                    } else {
                        m.meter.tick(OpKind::Probe);
                        init.get(&(f, args)).copied().unwrap_or(NodeId::UNDEF)
                    }
                }
                _ => core.derived(m, i, false),
            };
            core.vals[i] = v;
        }

        match Pending::from_decision(core.decide(m)) {
            Ok(p) => {
                core.pending = p;
                Ok(core)
            }
            Err(s) => Err((core, s)),
        }
    }

    /// Values of the arguments `args`, from the new vector when `fresh`.
    fn gather(&mut self, m: &mut Machine, args: &[usize], fresh: bool) -> Vec<NodeId> {
        let src = if fresh { &self.next } else { &self.vals };
        m.meter.charge(OpKind::Read, args.len() as u64);
        args.iter().map(|&a| src[a]).collect()
    }

    /// Value of a resident constructor- or selector-headed term from its
    /// arguments' values.
    fn derived(&mut self, m: &mut Machine, i: usize, fresh: bool) -> NodeId {
        let c = self.c.clone();
        let t = &c.terms[i];
        self.scratch.clear();
        let src = if fresh { &self.next } else { &self.vals };
        m.meter.charge(OpKind::Read, t.args.len() as u64);
        self.scratch.extend(t.args.iter().map(|&a| src[a]));
        match t.kind {
            CKind::Con(f) => apply_constructor(m, f, &self.scratch),
            CKind::Sel { ctor, pos } => apply_selector(m, ctor, pos, self.scratch[0]),
            _ => unreachable!("derived terms are constructor or selector headed"),
        }
    }

    /// Value of critical term `i` in the current state.
    fn value(&mut self, m: &mut Machine, i: usize) -> Result<NodeId, Stop> {
        m.meter.tick(OpKind::Read);
        let c = self.c.clone();
        let t = &c.terms[i];
        if t.resident {
            return Ok(self.vals[i]);
        }
        if let Some(v) = self.lazy[i] {
            return Ok(v);
        }
        let mut args = Vec::with_capacity(t.args.len());
        for &a in &t.args {
            args.push(self.value(m, a)?);
        }
        let v = match &t.kind {
            CKind::Con(f) => apply_constructor(m, *f, &args),
            CKind::Sel { ctor, pos } => apply_selector(m, *ctor, *pos, args[0]),
            CKind::Dyn(_) => {
                m.meter.charge(OpKind::Compare, args.len() as u64);
                if args.iter().any(|a| a.is_undef()) {
                    NodeId::UNDEF
                } else {
                    // Locations named only by non-resident terms are not
                    // tracked; reads of them fail soft to undef.
                    self.search(m, i, &args)
                }
            }
            CKind::Oracle { sym, body } => {
                m.meter.charge(OpKind::Compare, args.len() as u64);
                if args.iter().any(|a| a.is_undef()) {
                    NodeId::UNDEF
                } else {
                    m.meter.tick(OpKind::Probe);
                    let key = (*sym, args);
                    match self.calls.get(&key) {
                        Some(&v) => v,
                        None => {
                            let name = c.prog.vocab.name(*sym);
                            let v = m.call_oracle(body, name, &key.1)?;
                            self.calls.insert(key, v);
                            v
                        }
                    }
                }
            }
        };
        self.lazy[i] = Some(v);
        Ok(v)
    }

    /// Location search: the earliest resident term with the same head as
    /// `i` whose argument values in the current vector equal `args`.
    fn search(&self, m: &mut Machine, i: usize, args: &[NodeId]) -> NodeId {
        for &r in &self.c.same_head[i] {
            let rt = &self.c.terms[r];
            let mut hit = true;
            for (&ra, &a) in rt.args.iter().zip(args) {
                m.meter.tick(OpKind::Read);
                if !m.tangle.node_eq(self.vals[ra], a, &mut m.meter) {
                    hit = false;
                    break;
                }
            }
            if hit {
                m.meter.tick(OpKind::Read);
                return self.vals[r];
            }
        }
        NodeId::UNDEF
    }

    fn guard(&mut self, m: &mut Machine, g: &CGuard) -> Result<bool, Stop> {
        Ok(match g {
            CGuard::Atom(l, r) => {
                let a = match l {
                    Some(i) => self.value(m, *i)?,
                    None => NodeId::UNDEF,
                };
                let b = match r {
                    Some(i) => self.value(m, *i)?,
                    None => NodeId::UNDEF,
                };
                atom_holds(m, a, b, l.is_none() || r.is_none())
            }
            CGuard::Not(a) => !self.guard(m, a)?,
            CGuard::And(a, b) => self.guard(m, a)? && self.guard(m, b)?,
            CGuard::Or(a, b) => self.guard(m, a)? || self.guard(m, b)?,
        })
    }

    fn exec(&mut self, m: &mut Machine, s: &CStmt, d: &mut Decision) -> Result<(), Halt> {
        match s {
            CStmt::Assign { head, args, rhs } => {
                let mut vals = Vec::with_capacity(args.len());
                for &a in args {
                    vals.push(self.value(m, a)?);
                }
                let value = match rhs {
                    Some(r) => self.value(m, *r)?,
                    None => NodeId::UNDEF,
                };
                let c = self.c.clone();
                d.add(m, &c.prog.vocab, *head, vals, value)
            }
            CStmt::If {
                cond,
                then,
                otherwise,
            } => {
                let branch = if self.guard(m, cond)? {
                    then
                } else {
                    otherwise
                };
                for s in branch {
                    self.exec(m, s, d)?;
                }
                Ok(())
            }
        }
    }

    fn decide(&mut self, m: &mut Machine) -> Result<Decision, Halt> {
        self.lazy.fill(None);
        self.calls.clear();
        let mut d = Decision::new();
        let c = self.c.clone();
        for s in &c.rules {
            self.exec(m, s, &mut d)?;
        }
        Ok(d)
    }

    /// Computes the resident values of the successor state.
    fn apply(&mut self, m: &mut Machine, d: &Decision) {
        let c = self.c.clone();
        for i in 0..c.ct.len() {
            let t = &c.terms[i];
            if !t.resident {
                continue;
            }
            let v = match t.kind {
                CKind::Dyn(f) => {
                    let args = self.gather(m, &t.args, true);
                    m.meter.charge(OpKind::Compare, args.len() as u64);
                    if args.iter().any(|a| a.is_undef()) {
                        NodeId::UNDEF
                    } else if let Some(v) = d.lookup(m, f, &args) {
                        v
                    } else if self.unchanged(m, &t.args) {
                        m.meter.tick(OpKind::Read);
                        self.vals[i]
                    } else if m.opts.fault == Fault::SkipSearch {
                        NodeId::UNDEF
                    } else {
                        self.search(m, i, &args)
                    }
                }
                _ => self.derived(m, i, true),
            };
            self.next[i] = v;
        }
        core::mem::swap(&mut self.vals, &mut self.next);
    }

    fn unchanged(&self, m: &mut Machine, args: &[usize]) -> bool {
        for &a in args {
            m.meter.charge(OpKind::Read, 2);
            if !m.tangle.node_eq(self.vals[a], self.next[a], &mut m.meter) {
                return false;
            }
        }
        true
    }

    pub fn values(&self) -> &[NodeId] {
        &self.vals
    }
}

fn import(m: &mut Machine, t: &Term) -> NodeId {
    m.tangle
        .import_term(t, &mut m.meter)
        .expect("init terms are constructor terms")
}

impl super::Core for CritCore {
    fn pending(&self) -> &Pending {
        &self.pending
    }

    fn step(&mut self, m: &mut Machine) -> Result<(), Stop> {
        let region = m.region();
        let Pending::Ready(d) = core::mem::replace(&mut self.pending, Pending::Terminal) else {
            unreachable!("step called without a pending update set");
        };
        self.apply(m, &d);
        if m.opts.fault == Fault::ExtraWork {
            let v = m.tangle.len() as u64;
            m.meter.charge(OpKind::Compare, v * v / 8);
        }
        self.steps += 1;
        let next = Pending::from_decision(self.decide(m));
        let c = self.c.clone();
        m.close_step(region, &d, &c.prog.vocab);
        self.pending = next?;
        Ok(())
    }

    fn output(&self) -> NodeId {
        self.vals[self.c.output]
    }

    fn steps(&self) -> u64 {
        self.steps
    }
}

/// Step-wise access to the critical-term engine.
pub struct CriticalEngine(Session<CritCore>);

impl CriticalEngine {
    /// Imports `inputs`, builds the initial state and decides its updates.
    pub fn start(p: &Program, inputs: &[Term], opts: &RunOptions) -> Result<Self, EngineError> {
        Session::start(p, inputs, opts, CritCore::start).map(CriticalEngine)
    }

    pub fn step(&mut self) -> StepOutcome {
        self.0.step()
    }

    pub fn steps(&self) -> u64 {
        use super::Core;
        self.0.core.steps()
    }

    pub fn tangle(&self) -> &Tangle {
        &self.0.m.tangle
    }

    pub fn critical_terms(&self) -> &CriticalTerms {
        &self.0.compiled.ct
    }

    /// Current value of critical term `t`. `None` when `t` is not critical
    /// or depends on an oracle call.
    pub fn value(&self, t: &Term) -> Option<NodeId> {
        let i = self.0.compiled.ct.position(t)?;
        self.0.compiled.terms[i]
            .resident
            .then(|| self.0.core.vals[i])
    }

    pub(crate) fn session(&self) -> &Session<CritCore> {
        &self.0
    }

    pub(crate) fn into_session(self) -> Session<CritCore> {
        self.0
    }
}
