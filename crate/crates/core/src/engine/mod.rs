//! The two interpreters and the run driver.
//!
//! [`CriticalEngine`] keeps only the values of the program's critical terms,
//! as vertex ids in a [`Tangle`], and recomputes them small to big after
//! each update. [`ReferenceEngine`] keeps a full location map and evaluates
//! terms recursively; it exists to check the first one.
//!
//! A step applies the update set decided in the previous state and then
//! decides the next one, so the guard evaluation for state `X_i` is charged
//! to the step that produced `X_i` (and to `init` for `X_0`).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::cost::{Bounds, CostMeter, CostReport, OpKind, StepCost, Verdicts};
use crate::fx::{self, FxHashMap};
use crate::syntax::{validate_program, Program};
use crate::tangle::{Label, NodeId, Tangle, TangleStats};
use crate::term::{compact_size, fold_shared, SymbolId, Term, Vocabulary};

mod compare;
mod critical;
mod reference;

pub use compare::{compare_engines, CompareVerdict};
pub use critical::CriticalEngine;
pub use reference::ReferenceEngine;

use critical::{Compiled, CritCore};
use reference::RefCore;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum EngineKind {
    #[default]
    Critical,
    Reference,
}

/// How oracle calls are charged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum OracleMode {
    /// One `Call` operation per call; the nested run is not metered and its
    /// steps are not counted.
    Unit,
    /// The nested run is metered and its steps are counted.
    #[default]
    Inline,
}

/// Deliberate engine defects for testing the checkers.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Fault {
    #[default]
    None,
    /// The critical engine never searches for a relocated dynamic value.
    SkipSearch,
    /// The critical engine burns `|V|²/8` comparisons per step.
    ExtraWork,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Maximum number of steps per program level.
    pub fuel: u64,
    pub engine: EngineKind,
    pub oracle_mode: OracleMode,
    /// Record a [`TraceRecord`] per step.
    pub trace: bool,
    /// Reuse oracle results across steps of a run.
    pub memo: bool,
    /// Count RAM operations. Turning this off changes no outcome.
    pub metering: bool,
    #[doc(hidden)]
    pub fault: Fault,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            fuel: 1_000_000,
            engine: EngineKind::Critical,
            oracle_mode: OracleMode::Inline,
            trace: false,
            memo: true,
            metering: true,
            fault: Fault::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid program: {0}")]
    Invalid(String),
    #[error("oracle `{0}` has no linked body")]
    Unlinked(String),
    #[error("expected {expected} input(s), got {found}")]
    InputCount { expected: usize, found: usize },
    #[error("input `{0}` is not a constructor term of the program's vocabulary")]
    NonConstructorInput(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Output(Term),
    UndefOutput,
    Clash { location: String },
    FuelExhausted,
}

impl Outcome {
    pub fn is_terminated(&self) -> bool {
        matches!(self, Outcome::Output(_) | Outcome::UndefOutput)
    }
}

/// Result of one call to `step` on a step-wise engine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// A transition was made.
    Next,
    /// No assignment is enabled; the state has no successor.
    Terminal,
    /// The enabled assignments disagree on a location.
    Clash(String),
    /// The fuel is spent, here or in a nested oracle run.
    FuelExhausted,
}

/// One line of the step trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub i: u64,
    pub depth: u32,
    pub enabled: usize,
    /// `(symbol, argument ids, value id)` of each applied update.
    pub updates: Vec<(String, Vec<NodeId>, NodeId)>,
    pub vertices: usize,
    pub edges: usize,
    pub ops: u64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "i={} depth={} enabled={} updates=[",
            self.i, self.depth, self.enabled
        )?;
        for (k, (name, args, value)) in self.updates.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            f.write_str(name)?;
            if !args.is_empty() {
                f.write_str("(")?;
                for (j, a) in args.iter().enumerate() {
                    if j > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")?;
            }
            write!(f, "={value}")?;
        }
        write!(
            f,
            "] vertices={} edges={} ops={}",
            self.vertices, self.edges, self.ops
        )
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    /// Machine steps `T`, including oracle steps in inline mode.
    pub steps: u64,
    /// Steps of the top-level program only.
    pub top_steps: u64,
    /// `‖I‖`.
    pub n: usize,
    pub cost: CostReport,
    pub trace: Vec<TraceRecord>,
    pub stats: TangleStats,
}

// ---------------------------------------------------------------------------
// Shared machinery

/// Why a run stopped before reaching a terminal state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    Clash(String),
    Fuel,
}

/// Early exit from guard and update evaluation.
pub(crate) enum Halt {
    /// This program's own update set clashed.
    Clash(String),
    Stop(Stop),
}

impl From<Stop> for Halt {
    fn from(s: Stop) -> Self {
        Halt::Stop(s)
    }
}

pub(crate) struct Update {
    pub sym: SymbolId,
    pub args: Vec<NodeId>,
    pub value: NodeId,
}

/// The update set of one state, with the number of enabled assignments.
#[derive(Default)]
pub(crate) struct Decision {
    pub enabled: usize,
    pub updates: Vec<Update>,
    pub index: FxHashMap<(SymbolId, Vec<NodeId>), NodeId>,
}

impl Decision {
    pub fn new() -> Self {
        Decision {
            enabled: 0,
            updates: Vec::new(),
            index: fx::map(),
        }
    }

    /// Adds `sym(args) := value`; an assignment with an undefined argument
    /// names no location and is dropped.
    pub fn add(
        &mut self,
        m: &mut Machine,
        vocab: &Vocabulary,
        sym: SymbolId,
        args: Vec<NodeId>,
        value: NodeId,
    ) -> Result<(), Halt> {
        self.enabled += 1;
        m.meter.charge(OpKind::Compare, args.len() as u64);
        if args.iter().any(|a| a.is_undef()) {
            return Ok(());
        }
        m.meter.tick(OpKind::Probe);
        let key = (sym, args);
        if let Some(&prev) = self.index.get(&key) {
            if !m.tangle.node_eq(prev, value, &mut m.meter) {
                return Err(Halt::Clash(location_string(vocab, &m.tangle, sym, &key.1)));
            }
            return Ok(());
        }
        m.meter.tick(OpKind::Write);
        self.index.insert(key.clone(), value);
        self.updates.push(Update {
            sym,
            args: key.1,
            value,
        });
        Ok(())
    }

    pub fn lookup(&self, m: &mut Machine, sym: SymbolId, args: &[NodeId]) -> Option<NodeId> {
        if self.index.is_empty() {
            return None;
        }
        m.meter.tick(OpKind::Probe);
        self.index.get(&(sym, args.to_vec())).copied()
    }
}

pub(crate) enum Pending {
    Ready(Decision),
    Terminal,
    Clash(String),
}

impl Pending {
    pub fn from_decision(r: Result<Decision, Halt>) -> Result<Pending, Stop> {
        match r {
            Ok(d) if d.enabled == 0 => Ok(Pending::Terminal),
            Ok(d) => Ok(Pending::Ready(d)),
            Err(Halt::Clash(l)) => Ok(Pending::Clash(l)),
            Err(Halt::Stop(s)) => Err(s),
        }
    }
}

pub(crate) fn location_string(
    vocab: &Vocabulary,
    tangle: &Tangle,
    sym: SymbolId,
    args: &[NodeId],
) -> String {
    let mut s = vocab.name(sym).to_string();
    if !args.is_empty() {
        s.push('(');
        for (k, a) in args.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            match tangle.extract_term(*a) {
                Ok(t) => s.push_str(&vocab.format_term(&t)),
                Err(_) => s.push_str("undef"),
            }
        }
        s.push(')');
    }
    s
}

/// Work counters at the start of a step, for attributing its own cost.
#[derive(Clone, Copy)]
pub(crate) struct Region {
    ops: u64,
    vertices: usize,
    attributed_ops: u64,
    attributed_growth: usize,
}

/// Everything a run's program levels share: the tangle, the meter, the
/// oracle memo and the flattened step series.
pub(crate) struct Machine {
    pub tangle: Tangle,
    pub meter: CostMeter,
    pub opts: RunOptions,
    memo: FxHashMap<(usize, Vec<NodeId>), NodeId>,
    compiled: FxHashMap<usize, Arc<Compiled>>,
    pub series: Vec<StepCost>,
    pub trace: Vec<TraceRecord>,
    recording: bool,
    depth: u32,
    attributed_ops: u64,
    attributed_growth: usize,
}

impl Machine {
    pub fn new(vocab: &Vocabulary, opts: &RunOptions) -> Machine {
        Machine {
            tangle: Tangle::new(vocab),
            meter: if opts.metering {
                CostMeter::new()
            } else {
                CostMeter::disabled()
            },
            opts: *opts,
            memo: fx::map(),
            compiled: fx::map(),
            series: Vec::new(),
            trace: Vec::new(),
            recording: true,
            depth: 0,
            attributed_ops: 0,
            attributed_growth: 0,
        }
    }

    pub fn compiled(&mut self, prog: &Arc<Program>) -> Arc<Compiled> {
        let key = Arc::as_ptr(prog) as usize;
        if let Some(c) = self.compiled.get(&key) {
            return c.clone();
        }
        let c = Arc::new(Compiled::new(prog.clone(), &mut |body| self.compiled(body)));
        self.compiled.insert(key, c.clone());
        c
    }

    pub fn region(&self) -> Region {
        Region {
            ops: self.meter.ram_ops(),
            vertices: self.tangle.len(),
            attributed_ops: self.attributed_ops,
            attributed_growth: self.attributed_growth,
        }
    }

    /// Ops and vertex growth since `r` that no recorded step has claimed.
    pub fn own_since(&self, r: Region) -> (u64, usize) {
        let ops = (self.meter.ram_ops() - r.ops) - (self.attributed_ops - r.attributed_ops);
        let growth =
            (self.tangle.len() - r.vertices) - (self.attributed_growth - r.attributed_growth);
        (ops, growth)
    }

    pub fn close_step(&mut self, r: Region, applied: &Decision, vocab: &Vocabulary) {
        if !self.recording {
            return;
        }
        let (ops, grown) = self.own_since(r);
        self.attributed_ops += ops;
        self.attributed_growth += grown;
        let stats = self.tangle.stats();
        let i = self.series.len() as u64 + 1;
        self.series.push(StepCost {
            i,
            depth: self.depth,
            ops,
            vertices: stats.vertices,
            edges: stats.edges,
            grown,
        });
        if self.opts.trace {
            self.trace.push(TraceRecord {
                i,
                depth: self.depth,
                enabled: applied.enabled,
                updates: applied
                    .updates
                    .iter()
                    .map(|u| (vocab.name(u.sym).to_string(), u.args.clone(), u.value))
                    .collect(),
                vertices: stats.vertices,
                edges: stats.edges,
                ops,
            });
        }
    }

    /// Runs an oracle body on `args` over this tangle and returns its output.
    pub fn call_oracle(
        &mut self,
        body: &Arc<Program>,
        name: &str,
        args: &[NodeId],
    ) -> Result<NodeId, Stop> {
        let key = (Arc::as_ptr(body) as usize, args.to_vec());
        if self.opts.memo {
            if let Some(&v) = self.memo.get(&key) {
                self.meter.tick(OpKind::Probe);
                return Ok(v);
            }
        }
        let result = match self.opts.oracle_mode {
            OracleMode::Inline => self.run_nested(body, args),
            OracleMode::Unit => {
                let was_metering = self.meter.set_enabled(false);
                let was_recording = core::mem::replace(&mut self.recording, false);
                let r = self.run_nested(body, args);
                self.recording = was_recording;
                self.meter.set_enabled(was_metering);
                self.meter.tick(OpKind::Call);
                r
            }
        };
        let v = result.map_err(|s| match s {
            Stop::Clash(l) => Stop::Clash(format!("in oracle `{name}`: {l}")),
            Stop::Fuel => Stop::Fuel,
        })?;
        if self.opts.memo {
            self.memo.insert(key, v);
        }
        Ok(v)
    }

    fn run_nested(&mut self, body: &Arc<Program>, args: &[NodeId]) -> Result<NodeId, Stop> {
        self.depth += 1;
        let c = self.compiled(body);
        let r = match self.opts.engine {
            EngineKind::Critical => match CritCore::start(self, c, args) {
                Ok(mut core) => drive_nested(&mut core, self),
                Err((_, s)) => Err(s),
            },
            EngineKind::Reference => match RefCore::start(self, c, args) {
                Ok(mut core) => drive_nested(&mut core, self),
                Err((_, s)) => Err(s),
            },
        };
        self.depth -= 1;
        r
    }
}

/// The per-program state of an engine.
pub(crate) trait Core {
    fn pending(&self) -> &Pending;
    fn step(&mut self, m: &mut Machine) -> Result<(), Stop>;
    fn output(&self) -> NodeId;
    fn steps(&self) -> u64;
}

fn drive_nested(core: &mut impl Core, m: &mut Machine) -> Result<NodeId, Stop> {
    loop {
        match core.pending() {
            Pending::Terminal => return Ok(core.output()),
            Pending::Clash(l) => return Err(Stop::Clash(l.clone())),
            Pending::Ready(_) if core.steps() >= m.opts.fuel => return Err(Stop::Fuel),
            Pending::Ready(_) => core.step(m)?,
        }
    }
}

/// Strict application of a constructor: `undef` if any argument is.
pub(crate) fn apply_constructor(m: &mut Machine, sym: SymbolId, args: &[NodeId]) -> NodeId {
    m.meter.charge(OpKind::Compare, args.len() as u64);
    if args.iter().any(|a| a.is_undef()) {
        return NodeId::UNDEF;
    }
    m.tangle.intern_raw(sym, args, &mut m.meter)
}

/// `sel(arg)` for a selector projecting `pos` of `ctor`.
pub(crate) fn apply_selector(m: &mut Machine, ctor: SymbolId, pos: usize, arg: NodeId) -> NodeId {
    m.meter.tick(OpKind::Compare);
    if arg.is_undef() {
        return NodeId::UNDEF;
    }
    m.tangle.select(arg, ctor, pos, &mut m.meter)
}

/// Truth of an equation given the values of its sides; `literal` tells
/// whether one side was written `undef`.
pub(crate) fn atom_holds(m: &mut Machine, a: NodeId, b: NodeId, literal: bool) -> bool {
    if literal {
        return m.tangle.node_eq(a, b, &mut m.meter);
    }
    m.meter.tick(OpKind::Compare);
    !a.is_undef() && m.tangle.node_eq(a, b, &mut m.meter)
}

fn check_program(p: &Program) -> Result<(), EngineError> {
    fn linked(p: &Program) -> Result<(), EngineError> {
        for o in &p.oracles {
            match &o.body {
                None => return Err(EngineError::Unlinked(p.vocab.name(o.symbol).to_string())),
                Some(b) => linked(b)?,
            }
        }
        Ok(())
    }
    linked(p)?;
    let diags = validate_program(p);
    if !diags.is_empty() {
        let msg: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(EngineError::Invalid(msg.join("; ")));
    }
    Ok(())
}

fn check_inputs(p: &Program, inputs: &[Term]) -> Result<(), EngineError> {
    if inputs.len() != p.inputs.len() {
        return Err(EngineError::InputCount {
            expected: p.inputs.len(),
            found: inputs.len(),
        });
    }
    let v = &p.vocab;
    for (sym, t) in p.inputs.iter().zip(inputs) {
        let ok = fold_shared(t, |node, kids: &[bool]| {
            node.head().index() < v.len()
                && v.is_constructor(node.head())
                && v.arity(node.head()) == node.args().len()
                && kids.iter().all(|&k| k)
        });
        if !ok {
            return Err(EngineError::NonConstructorInput(v.name(*sym).to_string()));
        }
    }
    Ok(())
}

/// A top-level engine together with its machine.
pub(crate) struct Session<C> {
    pub m: Machine,
    pub core: C,
    pub compiled: Arc<Compiled>,
    pub halted: Option<Stop>,
    pub n: usize,
    pub init_ops: u64,
    pub initial_vertices: usize,
}

impl<C: Core> Session<C> {
    pub fn start(
        p: &Program,
        inputs: &[Term],
        opts: &RunOptions,
        make: impl FnOnce(&mut Machine, Arc<Compiled>, &[NodeId]) -> Result<C, (C, Stop)>,
    ) -> Result<Session<C>, EngineError> {
        check_program(p)?;
        check_inputs(p, inputs)?;
        let prog = Arc::new(p.clone());
        let mut m = Machine::new(&p.vocab, opts);
        let compiled = m.compiled(&prog);
        let r = m.region();
        let ids: Vec<NodeId> = inputs
            .iter()
            .map(|t| {
                m.tangle
                    .import_term(t, &mut m.meter)
                    .expect("inputs were checked against the vocabulary")
            })
            .collect();
        let (core, halted) = match make(&mut m, compiled.clone(), &ids) {
            Ok(core) => (core, None),
            Err((core, stop)) => (core, Some(stop)),
        };
        let (init_ops, _) = m.own_since(r);
        Ok(Session {
            initial_vertices: m.tangle.len(),
            n: inputs.iter().map(compact_size).sum(),
            m,
            core,
            compiled,
            halted,
            init_ops,
        })
    }

    pub fn step(&mut self) -> StepOutcome {
        if let Some(s) = &self.halted {
            return stop_outcome(s);
        }
        match self.core.pending() {
            Pending::Terminal => StepOutcome::Terminal,
            Pending::Clash(l) => StepOutcome::Clash(l.clone()),
            Pending::Ready(_) if self.core.steps() >= self.m.opts.fuel => {
                StepOutcome::FuelExhausted
            }
            Pending::Ready(_) => match self.core.step(&mut self.m) {
                Ok(()) => StepOutcome::Next,
                Err(s) => {
                    let o = stop_outcome(&s);
                    self.halted = Some(s);
                    o
                }
            },
        }
    }

    /// `None` while the run can continue.
    pub(crate) fn finished(&self) -> Option<Outcome> {
        if let Some(s) = &self.halted {
            return Some(match s {
                Stop::Clash(l) => Outcome::Clash {
                    location: l.clone(),
                },
                Stop::Fuel => Outcome::FuelExhausted,
            });
        }
        match self.core.pending() {
            Pending::Terminal => {
                let z = self.core.output();
                Some(match self.m.tangle.extract_term(z) {
                    Ok(t) => Outcome::Output(t),
                    Err(_) => Outcome::UndefOutput,
                })
            }
            Pending::Clash(l) => Some(Outcome::Clash {
                location: l.clone(),
            }),
            Pending::Ready(_) if self.core.steps() >= self.m.opts.fuel => {
                Some(Outcome::FuelExhausted)
            }
            Pending::Ready(_) => None,
        }
    }

    pub fn run_to_end(mut self) -> RunResult {
        let outcome = loop {
            if let Some(o) = self.finished() {
                break o;
            }
            self.step();
        };
        let m = self.m;
        let growth_applicable =
            m.opts.oracle_mode == OracleMode::Inline || !self.compiled.uses_oracles;
        let mut cost = CostReport {
            n: self.n,
            steps: m.series.len() as u64,
            init_ops: self.init_ops,
            total_ops: m.meter.ram_ops(),
            word_bits_max: m.meter.word_bits_max(),
            by_kind: OpKind::ALL.map(|k| m.meter.count(k)),
            c_program: self.compiled.growth_max,
            critical_terms: self.compiled.ct.len(),
            init_entries: self.compiled.prog.init.len(),
            initial_vertices: self.initial_vertices,
            per_step: m.series,
            growth_applicable,
            terminated: outcome.is_terminated(),
            verdicts: Verdicts::default(),
            bounds: Bounds::calibrated(),
        };
        cost.evaluate(&Bounds::calibrated());
        RunResult {
            outcome,
            steps: cost.steps,
            top_steps: self.core.steps(),
            n: self.n,
            cost,
            trace: m.trace,
            stats: m.tangle.stats(),
        }
    }
}

fn stop_outcome(s: &Stop) -> StepOutcome {
    match s {
        Stop::Clash(l) => StepOutcome::Clash(l.clone()),
        Stop::Fuel => StepOutcome::FuelExhausted,
    }
}

/// Runs `p` on `inputs` until it terminates, clashes or runs out of fuel.
pub fn run(p: &Program, inputs: &[Term], opts: &RunOptions) -> Result<RunResult, EngineError> {
    Ok(match opts.engine {
        EngineKind::Critical => CriticalEngine::start(p, inputs, opts)?
            .into_session()
            .run_to_end(),
        EngineKind::Reference => ReferenceEngine::start(p, inputs, opts)?
            .into_session()
            .run_to_end(),
    })
}

/// Matches vertices of two tangles by the terms they represent.
pub(crate) struct CrossMatcher {
    pairs: BTreeMap<NodeId, NodeId>,
}

impl CrossMatcher {
    pub fn new() -> Self {
        CrossMatcher {
            pairs: BTreeMap::new(),
        }
    }

    /// True when `a` in `ga` and `b` in `gb` represent the same term (or
    /// are both `undef`).
    pub fn same(&mut self, ga: &Tangle, a: NodeId, gb: &Tangle, b: NodeId) -> bool {
        let mut stack = alloc::vec![(a, b)];
        while let Some((a, b)) = stack.pop() {
            if let Some(&known) = self.pairs.get(&a) {
                if known != b {
                    return false;
                }
                continue;
            }
            match (ga.label(a), gb.label(b)) {
                (Label::Undef, Label::Undef) => {}
                (Label::Con(x), Label::Con(y)) if x == y => {
                    stack.extend(
                        ga.children(a)
                            .iter()
                            .copied()
                            .zip(gb.children(b).iter().copied()),
                    );
                }
                _ => return false,
            }
            // Provisional until the children check out; on a mismatch the
            // whole comparison fails anyway.
            self.pairs.insert(a, b);
        }
        true
    }
}

impl Default for CrossMatcher {
    fn default() -> Self {
        Self::new()
    }
}
