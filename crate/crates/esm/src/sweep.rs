//! Size sweeps: one run per input size, in parallel, merged by size.

use esm_core::cost::{
    check_growth, check_init_linearity, check_step_linearity, check_total_bound, Bounds, Verdict,
};
use esm_core::{run, CostReport, EngineError, Program, RunOptions, RunResult, Term};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codec::sample_inputs;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RangeError {
    #[error("`{0}` is not of the form LO:HI")]
    Syntax(String),
    #[error("sweep bounds must satisfy 1 <= LO <= HI, got {0}:{1}")]
    Order(usize, usize),
}

/// `lo, 2·lo, 4·lo, …` up to `hi`.
pub fn sizes(lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = lo.max(1);
    while n <= hi {
        out.push(n);
        n = n.saturating_mul(2);
        if n == usize::MAX {
            break;
        }
    }
    out
}

pub fn parse_range(s: &str) -> Result<(usize, usize), RangeError> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| RangeError::Syntax(s.to_string()))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| RangeError::Syntax(s.to_string()))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo == 0 || lo > hi {
        return Err(RangeError::Order(lo, hi));
    }
    Ok((lo, hi))
}

/// Deterministic per-size generator.
pub fn rng_for(seed: u64, size: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (size as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub struct Point {
    pub size: usize,
    pub inputs: Vec<Term>,
    pub result: RunResult,
}

/// Runs `p` once per size with random inputs of that size. Programs
/// without inputs run once.
pub fn sweep(
    p: &Program,
    lo: usize,
    hi: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<Point>, EngineError> {
    let all = sizes(lo, hi);
    let picked: Vec<usize> = if p.inputs.is_empty() {
        all.into_iter().take(1).collect()
    } else {
        all
    };
    picked
        .into_par_iter()
        .map(|size| {
            let inputs = sample_inputs(p, size, &mut rng_for(seed, size));
            let result = run(p, &inputs, opts)?;
            Ok(Point {
                size,
                inputs,
                result,
            })
        })
        .collect()
}

/// Verdicts of the bound checkers over a set of runs. A checker passes
/// when it passes on every run it applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Summary {
    pub growth: Verdict,
    pub step_linear: Verdict,
    pub total_bound: Verdict,
    pub init_linear: Verdict,
}

impl Summary {
    pub fn failed(&self) -> bool {
        [
            self.growth,
            self.step_linear,
            self.total_bound,
            self.init_linear,
        ]
        .iter()
        .any(|v| v.is_fail())
    }
}

fn combine(vs: impl Iterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Skip;
    for v in vs {
        match v {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Pass => out = Verdict::Pass,
            Verdict::Skip => {}
        }
    }
    out
}

pub fn summarize(reports: &[&CostReport], bounds: &Bounds) -> Summary {
    Summary {
        growth: combine(reports.iter().map(|r| check_growth(r).verdict)),
        step_linear: combine(
            reports
                .iter()
                .map(|r| check_step_linearity(r, bounds.step).verdict),
        ),
        total_bound: combine(
            reports
                .iter()
                .map(|r| check_total_bound(r, bounds.total, bounds.word_slack).verdict),
        ),
        init_linear: combine(reports.iter().map(|r| check_init_linearity(r, bounds.init))),
    }
}
