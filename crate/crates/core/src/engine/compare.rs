use alloc::format;
use alloc::string::String;

use super::{Core, CriticalEngine, CrossMatcher, EngineKind, Outcome, ReferenceEngine, RunOptions};
use crate::syntax::Program;
use crate::tangle::{NodeId, Tangle};
use crate::term::{Term, Vocabulary};
use crate::EngineError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompareVerdict {
    /// Both engines agreed in every state; `steps` is the top-level run length.
    Equivalent { steps: u64 },
    /// The first state (by top-level step index) where they disagree.
    Divergent { step: u64, detail: String },
}

impl CompareVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, CompareVerdict::Equivalent { .. })
    }
}

/// Runs both engines in lockstep, comparing after every step the outcome
/// so far, the number of steps taken (oracle steps included) and the value
/// of every critical term that does not depend on an oracle call.
pub fn compare_engines(
    p: &Program,
    inputs: &[Term],
    opts: &RunOptions,
) -> Result<CompareVerdict, EngineError> {
    let mut ce = CriticalEngine::start(
        p,
        inputs,
        &RunOptions {
            engine: EngineKind::Critical,
            ..*opts
        },
    )?;
    let mut re = ReferenceEngine::start(
        p,
        inputs,
        &RunOptions {
            engine: EngineKind::Reference,
            ..*opts
        },
    )?;
    let mut matcher = CrossMatcher::new();
    let mut step = 0;
    loop {
        if let Some(detail) = check_state(&mut ce, &mut re, &mut matcher) {
            return Ok(CompareVerdict::Divergent { step, detail });
        }
        let a = ce.session().finished();
        let b = re.session_mut().finished();
        match (a, b) {
            (None, None) => {}
            (Some(a), Some(b)) if same_outcome(&a, &b) => {
                return Ok(CompareVerdict::Equivalent { steps: step })
            }
            (a, b) => {
                return Ok(CompareVerdict::Divergent {
                    step,
                    detail: format!("outcome: critical {a:?}, reference {b:?}"),
                })
            }
        }
        ce.step();
        re.step();
        step += 1;
    }
}

fn same_outcome(a: &Outcome, b: &Outcome) -> bool {
    a == b
}

fn show(v: &Vocabulary, g: &Tangle, id: NodeId) -> String {
    match g.extract_term(id) {
        Ok(t) => v.format_term(&t),
        Err(_) => "undef".into(),
    }
}

fn check_state(
    ce: &mut CriticalEngine,
    re: &mut ReferenceEngine,
    matcher: &mut CrossMatcher,
) -> Option<String> {
    let cs = ce.session();
    let rs = re.session_mut();
    if cs.m.series.len() != rs.m.series.len() {
        return Some(format!(
            "machine steps: critical {}, reference {}",
            cs.m.series.len(),
            rs.m.series.len()
        ));
    }
    if cs.core.steps() != rs.core.steps() {
        return Some(format!(
            "steps: critical {}, reference {}",
            cs.core.steps(),
            rs.core.steps()
        ));
    }
    let c = cs.compiled.clone();
    let vocab = &c.prog.vocab;
    for (i, t) in c.ct.terms().iter().enumerate() {
        if !c.terms[i].resident {
            continue;
        }
        let a = cs.core.values()[i];
        let b = rs
            .core
            .eval(&mut rs.m, t)
            .expect("resident terms make no oracle calls");
        if !matcher.same(&cs.m.tangle, a, &rs.m.tangle, b) {
            return Some(format!(
                "`{}`: critical {}, reference {}",
                vocab.format_term(t),
                show(vocab, &cs.m.tangle, a),
                show(vocab, &rs.m.tangle, b)
            ));
        }
    }
    None
}
