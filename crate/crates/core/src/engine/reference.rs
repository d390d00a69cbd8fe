//! The reference engine: a full location map and recursive evaluation.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::critical::Compiled;
use super::{
    apply_constructor, apply_selector, atom_holds, Core, Decision, Halt, Machine, Pending,
    RunOptions, Session, StepOutcome, Stop,
};
use crate::cost::OpKind;
use crate::fx::{self, FxHashMap};
use crate::syntax::{Guard, Program, Stmt};
use crate::tangle::{NodeId, Tangle};
use crate::term::{SymbolId, SymbolKind, Term};
use crate::EngineError;

type Location = (SymbolId, Vec<NodeId>);

pub(crate) struct RefCore {
    c: Arc<Compiled>,
    store: BTreeMap<Location, NodeId>,
    calls: FxHashMap<Location, NodeId>,
    pending: Pending,
    steps: u64,
}

impl RefCore {
    #[allow(clippy::result_large_err)]
    pub fn start(
        m: &mut Machine,
        c: Arc<Compiled>,
        inputs: &[NodeId],
    ) -> Result<RefCore, (RefCore, Stop)> {
        let mut core = RefCore {
            c,
            store: BTreeMap::new(),
            calls: fx::map(),
            pending: Pending::Terminal,
            steps: 0,
        };
        let c = core.c.clone();
        for (&sym, &id) in c.prog.inputs.iter().zip(inputs) {
            core.write(m, (sym, Vec::new()), id);
        }
        for a in &c.prog.init {
            let args: Vec<NodeId> = a
                .args()
                .iter()
                .map(|t| {
                    m.tangle
                        .import_term(t, &mut m.meter)
                        .expect("constructor term")
                })
                .collect();
            let value = match &a.rhs {
                Some(t) => m
                    .tangle
                    .import_term(t, &mut m.meter)
                    .expect("constructor term"),
                None => NodeId::UNDEF,
            };
            core.write(m, (a.head(), args), value);
        }
        match Pending::from_decision(core.decide(m)) {
            Ok(p) => {
                core.pending = p;
                Ok(core)
            }
            Err(s) => Err((core, s)),
        }
    }

    fn write(&mut self, m: &mut Machine, loc: Location, value: NodeId) {
        m.meter.tick(OpKind::Write);
        if value.is_undef() {
            self.store.remove(&loc);
        } else {
            self.store.insert(loc, value);
        }
    }

    /// Value of the location `sym(args)`; unmapped locations hold `undef`.
    pub fn read(&self, m: &mut Machine, sym: SymbolId, args: &[NodeId]) -> NodeId {
        m.meter.tick(OpKind::Probe);
        self.store
            .get(&(sym, args.to_vec()))
            .copied()
            .unwrap_or(NodeId::UNDEF)
    }

    /// Evaluates `t` in the current state.
    pub fn eval(&mut self, m: &mut Machine, t: &Term) -> Result<NodeId, Stop> {
        let mut args = Vec::with_capacity(t.args().len());
        for a in t.args() {
            args.push(self.eval(m, a)?);
        }
        let c = self.c.clone();
        let v = &c.prog.vocab;
        Ok(match v.kind(t.head()) {
            SymbolKind::Constructor => apply_constructor(m, t.head(), &args),
            SymbolKind::Selector {
                constructor,
                position,
            } => apply_selector(m, constructor, position, args[0]),
            SymbolKind::Dynamic => {
                m.meter.charge(OpKind::Compare, args.len() as u64);
                if args.iter().any(|a| a.is_undef()) {
                    NodeId::UNDEF
                } else {
                    self.read(m, t.head(), &args)
                }
            }
            SymbolKind::Oracle => {
                m.meter.charge(OpKind::Compare, args.len() as u64);
                if args.iter().any(|a| a.is_undef()) {
                    return Ok(NodeId::UNDEF);
                }
                m.meter.tick(OpKind::Probe);
                let key = (t.head(), args);
                if let Some(&v) = self.calls.get(&key) {
                    return Ok(v);
                }
                let body = c
                    .prog
                    .oracle(t.head())
                    .and_then(|o| o.body.clone())
                    .expect("linked program");
                let value = m.call_oracle(&body, v.name(t.head()), &key.1)?;
                self.calls.insert(key, value);
                value
            }
        })
    }

    fn guard(&mut self, m: &mut Machine, g: &Guard) -> Result<bool, Stop> {
        Ok(match g {
            Guard::Atom(l, r) => {
                let a = match l {
                    Some(t) => self.eval(m, t)?,
                    None => NodeId::UNDEF,
                };
                let b = match r {
                    Some(t) => self.eval(m, t)?,
                    None => NodeId::UNDEF,
                };
                atom_holds(m, a, b, l.is_none() || r.is_none())
            }
            Guard::Not(a) => !self.guard(m, a)?,
            Guard::And(a, b) => self.guard(m, a)? && self.guard(m, b)?,
            Guard::Or(a, b) => self.guard(m, a)? || self.guard(m, b)?,
        })
    }

    fn exec(&mut self, m: &mut Machine, s: &Stmt, d: &mut Decision) -> Result<(), Halt> {
        match s {
            Stmt::Assign(a) => {
                let mut args = Vec::with_capacity(a.args().len());
                for t in a.args() {
                    args.push(self.eval(m, t)?);
                }
                let value = match &a.rhs {
                    Some(t) => self.eval(m, t)?,
                    None => NodeId::UNDEF,
                };
                let c = self.c.clone();
                d.add(m, &c.prog.vocab, a.head(), args, value)
            }
            Stmt::If {
                cond,
                then,
                otherwise,
            } => {
                let branch: &[Stmt] = if self.guard(m, cond)? {
                    then
                } else {
                    otherwise.as_deref().unwrap_or(&[])
                };
                for s in branch {
                    self.exec(m, s, d)?;
                }
                Ok(())
            }
        }
    }

    fn decide(&mut self, m: &mut Machine) -> Result<Decision, Halt> {
        self.calls.clear();
        let mut d = Decision::new();
        let c = self.c.clone();
        for s in &c.prog.rules {
            self.exec(m, s, &mut d)?;
        }
        Ok(d)
    }
}

impl Core for RefCore {
    fn pending(&self) -> &Pending {
        &self.pending
    }

    fn step(&mut self, m: &mut Machine) -> Result<(), Stop> {
        let region = m.region();
        let Pending::Ready(d) = core::mem::replace(&mut self.pending, Pending::Terminal) else {
            unreachable!("step called without a pending update set");
        };
        for u in &d.updates {
            self.write(m, (u.sym, u.args.clone()), u.value);
        }
        self.steps += 1;
        let next = Pending::from_decision(self.decide(m));
        let c = self.c.clone();
        m.close_step(region, &d, &c.prog.vocab);
        self.pending = next?;
        Ok(())
    }

    fn output(&self) -> NodeId {
        self.store
            .get(&(self.c.prog.output, Vec::new()))
            .copied()
            .unwrap_or(NodeId::UNDEF)
    }

    fn steps(&self) -> u64 {
        self.steps
    }
}

/// Step-wise access to the reference engine.
pub struct ReferenceEngine(Session<RefCore>);

impl ReferenceEngine {
    pub fn start(p: &Program, inputs: &[Term], opts: &RunOptions) -> Result<Self, EngineError> {
        Session::start(p, inputs, opts, RefCore::start).map(ReferenceEngine)
    }

    pub fn step(&mut self) -> StepOutcome {
        self.0.step()
    }

    pub fn steps(&self) -> u64 {
        self.0.core.steps()
    }

    pub fn tangle(&self) -> &Tangle {
        &self.0.m.tangle
    }

    /// Current value of location `sym(args)`.
    pub fn read(&self, sym: SymbolId, args: &[NodeId]) -> NodeId {
        self.0
            .core
            .store
            .get(&(sym, args.to_vec()))
            .copied()
            .unwrap_or(NodeId::UNDEF)
    }

    /// Number of defined locations.
    pub fn support(&self) -> usize {
        self.0.core.store.len()
    }

    pub(crate) fn session_mut(&mut self) -> &mut Session<RefCore> {
        &mut self.0
    }

    pub(crate) fn into_session(self) -> Session<RefCore> {
        self.0
    }
}
