//! RAM-operation metering and bound checking.
//!
//! The abstract machine charges one operation per hash-index probe, vertex
//! allocation, child or table read, id comparison and table write. Oracle
//! calls charged as a single step use a sixth category, `Call`. Word size
//! is the bit width of the largest live vertex id.
//!
//! The three checkers turn the asymptotic claims about the simulation into
//! affine regressions: per-step vertex growth bounded by a program constant,
//! per-step work bounded by `a·|G| + b`, and total work bounded by
//! `a'·(n + nT + T²) + b'`. The constants were fitted once on the bundled
//! corpus and are frozen in [`Bounds::calibrated`].

use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Probe,
    Alloc,
    Read,
    Compare,
    Write,
    Call,
}

impl OpKind {
    pub const ALL: [OpKind; 6] = [
        OpKind::Probe,
        OpKind::Alloc,
        OpKind::Read,
        OpKind::Compare,
        OpKind::Write,
        OpKind::Call,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Probe => "probe",
            OpKind::Alloc => "alloc",
            OpKind::Read => "read",
            OpKind::Compare => "compare",
            OpKind::Write => "write",
            OpKind::Call => "call",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostMeter {
    enabled: bool,
    counts: [u64; 6],
    word_bits_max: u32,
}

impl Default for CostMeter {
    fn default() -> Self {
        CostMeter::new()
    }
}

impl CostMeter {
    pub fn new() -> Self {
        CostMeter {
            enabled: true,
            counts: [0; 6],
            word_bits_max: 1,
        }
    }

    /// A meter that records nothing.
    pub fn disabled() -> Self {
        CostMeter {
            enabled: false,
            ..CostMeter::new()
        }
    }

    #[inline]
    pub fn charge(&mut self, kind: OpKind, n: u64) {
        if self.enabled {
            self.counts[kind as usize] += n;
        }
    }

    #[inline]
    pub fn tick(&mut self, kind: OpKind) {
        self.charge(kind, 1);
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    /// Turns recording on or off, returning the previous setting.
    pub fn set_enabled(&mut self, on: bool) -> bool {
        core::mem::replace(&mut self.enabled, on)
    }

    pub fn ram_ops(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, kind: OpKind) -> u64 {
        self.counts[kind as usize]
    }

    pub fn word_bits_max(&self) -> u32 {
        self.word_bits_max
    }

    pub(crate) fn note_vertices(&mut self, vertices: usize) {
        self.word_bits_max = self.word_bits_max.max(word_bits(vertices));
    }
}

/// `⌈log₂(max(v, 2))⌉`: bits needed to address `v` vertices.
pub fn word_bits(vertices: usize) -> u32 {
    let v = vertices.max(2) as u64;
    64 - (v - 1).leading_zeros()
}

/// Cost of one machine step. In inline oracle mode the steps of nested
/// oracle runs are recorded as steps of their own (`depth > 0`), and `ops`
/// excludes them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepCost {
    pub i: u64,
    pub depth: u32,
    pub ops: u64,
    pub vertices: usize,
    pub edges: usize,
    /// Vertices allocated by this step itself.
    pub grown: usize,
}

impl StepCost {
    /// `|G(T_i)|` as vertices plus edges.
    pub fn cells(&self) -> usize {
        self.vertices + self.edges
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The checker does not apply to this run.
    Skip,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skip => "skip",
        }
    }

    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdicts {
    pub growth: Verdict,
    pub step_linear: Verdict,
    pub total_bound: Verdict,
}

impl Verdicts {
    pub fn all_ok(&self) -> bool {
        !(self.growth.is_fail() || self.step_linear.is_fail() || self.total_bound.is_fail())
    }
}

impl Default for Verdicts {
    fn default() -> Self {
        Verdicts {
            growth: Verdict::Skip,
            step_linear: Verdict::Skip,
            total_bound: Verdict::Skip,
        }
    }
}

/// `y ≤ a·x + b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineBound {
    pub a: f64,
    pub b: f64,
}

impl AffineBound {
    pub fn at(&self, x: f64) -> f64 {
        self.a * x + self.b
    }

    pub fn admits(&self, x: f64, y: f64) -> bool {
        y <= self.at(x) * (1.0 + 1e-12) + 1e-9
    }
}

/// Frozen constants used by the checkers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    /// `ops_i ≤ a·|G(T_i)| + b`.
    pub step: AffineBound,
    /// `total_ops ≤ a'·(n + nT + T²) + b'`.
    pub total: AffineBound,
    /// Slack in `word_bits_max ≤ ⌈log₂(a'·(n+T))⌉ + k`.
    pub word_slack: u32,
    /// `init_ops ≤ a·(‖I‖ + |init| + m) + b`.
    pub init: AffineBound,
    /// `import_ops ≤ a·‖t‖ + b`.
    pub import: AffineBound,
}

impl Bounds {
    /// Constants fitted on the bundled corpus (see the calibration test in
    /// the `esm` crate) and rounded up.
    pub const fn calibrated() -> Bounds {
        Bounds {
            step: AffineBound {
                a: 0.0625,
                b: 512.0,
            },
            total: AffineBound { a: 4.0, b: 1024.0 },
            word_slack: 4,
            init: AffineBound { a: 8.0, b: 64.0 },
            import: AffineBound { a: 10.0, b: 16.0 },
        }
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds::calibrated()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    /// `‖I‖`, the summed compact size of the inputs.
    pub n: usize,
    /// Machine steps `T`. In inline oracle mode this includes oracle steps.
    pub steps: u64,
    pub init_ops: u64,
    pub total_ops: u64,
    pub word_bits_max: u32,
    /// `total_ops` split by category, in [`OpKind::ALL`] order.
    pub by_kind: [u64; 6],
    /// Per-step growth constant `c(p)`.
    pub c_program: usize,
    /// Number of critical terms of the top-level program.
    pub critical_terms: usize,
    /// Number of `init` entries of the top-level program.
    pub init_entries: usize,
    /// `|G(T₀)|` in vertices.
    pub initial_vertices: usize,
    pub per_step: Vec<StepCost>,
    /// False when oracle calls were charged as single operations; vertex
    /// growth is then not bounded per step.
    pub growth_applicable: bool,
    pub terminated: bool,
    pub verdicts: Verdicts,
    pub bounds: Bounds,
}

impl CostReport {
    /// `total_ops = init_ops + Σ ops_i`.
    pub fn is_additive(&self) -> bool {
        self.init_ops + self.per_step.iter().map(|s| s.ops).sum::<u64>() == self.total_ops
    }

    /// The total-bound argument `n + n·T + T²`.
    pub fn total_shape(&self) -> f64 {
        let n = self.n as f64;
        let t = self.steps as f64;
        n + n * t + t * t
    }

    pub fn evaluate(&mut self, bounds: &Bounds) {
        self.bounds = *bounds;
        self.verdicts = Verdicts {
            growth: check_growth(self).verdict,
            step_linear: check_step_linearity(self, bounds.step).verdict,
            total_bound: check_total_bound(self, bounds.total, bounds.word_slack).verdict,
        };
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCheck {
    pub verdict: Verdict,
    pub max_delta: usize,
    /// Index `i` of the first violating step.
    pub first_violation: Option<u64>,
}

/// Vertex growth per step is at most `c(p)`, and `|G(T_i)| ≤ |G(T₀)| + c(p)·i`.
pub fn check_growth(report: &CostReport) -> GrowthCheck {
    let c = report.c_program;
    let mut max_delta = 0;
    let mut first_violation = None;
    let mut prev = report.initial_vertices;
    for s in &report.per_step {
        let delta = s.vertices.saturating_sub(prev).max(s.grown);
        max_delta = max_delta.max(delta);
        let cap = report.initial_vertices as u64 + c as u64 * s.i;
        if first_violation.is_none() && (delta > c || s.vertices as u64 > cap) {
            first_violation = Some(s.i);
        }
        prev = s.vertices;
    }
    let verdict = if !report.growth_applicable {
        Verdict::Skip
    } else if first_violation.is_some() {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    GrowthCheck {
        verdict,
        max_delta,
        first_violation,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearityCheck {
    pub verdict: Verdict,
    /// Minimal envelope of this run's own series.
    pub fitted: AffineBound,
    pub first_violation: Option<u64>,
}

/// `ops_i ≤ a·|G(T_i)| + b` for the frozen `(a, b)`, with `|G|` counted as
/// vertices plus edges.
pub fn check_step_linearity(report: &CostReport, bound: AffineBound) -> LinearityCheck {
    let points: Vec<(f64, f64)> = report
        .per_step
        .iter()
        .map(|s| (s.cells() as f64, s.ops as f64))
        .collect();
    let first_violation = report
        .per_step
        .iter()
        .find(|s| !bound.admits(s.cells() as f64, s.ops as f64))
        .map(|s| s.i);
    let verdict = if points.is_empty() {
        Verdict::Skip
    } else if first_violation.is_some() {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    LinearityCheck {
        verdict,
        fitted: fit_affine_envelope(&points),
        first_violation,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TotalCheck {
    pub verdict: Verdict,
    pub ops_budget: f64,
    pub word_budget: u32,
    /// `total_ops / (n + nT + T²)`.
    pub ratio: f64,
}

/// `total_ops ≤ a'·(n + nT + T²) + b'` and
/// `word_bits_max ≤ ⌈log₂(a'·(n + T))⌉ + k`.
pub fn check_total_bound(report: &CostReport, bound: AffineBound, k: u32) -> TotalCheck {
    let shape = report.total_shape();
    let ops_budget = bound.at(shape);
    let span = bound.a * (report.n as f64 + report.steps as f64);
    let word_budget = ceil_log2(span) + k;
    let ratio = if shape > 0.0 {
        report.total_ops as f64 / shape
    } else {
        0.0
    };
    let verdict = if !report.terminated {
        Verdict::Skip
    } else if bound.admits(shape, report.total_ops as f64) && report.word_bits_max <= word_budget {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    TotalCheck {
        verdict,
        ops_budget,
        word_budget,
        ratio,
    }
}

/// `init_ops ≤ a·(‖I‖ + |init| + m) + b`, with `m` the number of
/// critical terms.
pub fn check_init_linearity(report: &CostReport, bound: AffineBound) -> Verdict {
    let x = (report.n + report.init_entries + report.critical_terms) as f64;
    if bound.admits(x, report.init_ops as f64) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// `⌈log₂ x⌉` for `x ≥ 1`; 0 below that.
fn ceil_log2(x: f64) -> u32 {
    if x.is_nan() || x <= 1.0 {
        return 0;
    }
    let mut int = x as u64;
    if (int as f64) < x {
        int += 1;
    }
    64 - (int - 1).leading_zeros()
}

/// Smallest affine envelope `y ≤ a·x + b` (with `a, b ≥ 0`) over `points`,
/// minimizing the summed slack. The optimum lies on the upper convex hull,
/// so only its edges and the two axis-aligned fallbacks are candidates.
pub fn fit_affine_envelope(points: &[(f64, f64)]) -> AffineBound {
    if points.is_empty() {
        return AffineBound { a: 0.0, b: 0.0 };
    }
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));

    // Upper hull by monotone chain, scanning right to left.
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    let y_max = pts.iter().map(|p| p.1).fold(f64::MIN, f64::max).max(0.0);
    let slope_max = pts
        .iter()
        .filter(|p| p.0 > 0.0)
        .map(|p| p.1 / p.0)
        .fold(0.0, f64::max);
    let mut candidates = alloc::vec![
        AffineBound { a: 0.0, b: y_max },
        AffineBound {
            a: slope_max,
            b: pts
                .iter()
                .filter(|p| p.0 <= 0.0)
                .map(|p| p.1)
                .fold(0.0, f64::max),
        },
    ];
    for w in hull.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p.0 == q.0 {
            continue;
        }
        let a = (q.1 - p.1) / (q.0 - p.0);
        let b = p.1 - a * p.0;
        if a >= 0.0 && b >= 0.0 {
            candidates.push(AffineBound { a, b });
        }
    }

    let slack = |c: &AffineBound| pts.iter().map(|p| c.at(p.0) - p.1).sum::<f64>();
    candidates
        .into_iter()
        .filter(|c| pts.iter().all(|p| c.admits(p.0, p.1)))
        .min_by(|x, y| slack(x).total_cmp(&slack(y)))
        .unwrap_or(AffineBound { a: 0.0, b: y_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn report(series: &[(u64, usize)], c: usize, v0: usize) -> CostReport {
        let per_step: Vec<StepCost> = series
            .iter()
            .enumerate()
            .map(|(k, &(ops, vertices))| StepCost {
                i: k as u64 + 1,
                depth: 0,
                ops,
                vertices,
                edges: 0,
                grown: 0,
            })
            .collect();
        let steps = per_step.len() as u64;
        CostReport {
            n: 4,
            steps,
            init_ops: 10,
            total_ops: 10 + per_step.iter().map(|s| s.ops).sum::<u64>(),
            word_bits_max: 3,
            by_kind: [0; 6],
            c_program: c,
            critical_terms: 5,
            init_entries: 0,
            initial_vertices: v0,
            per_step,
            growth_applicable: true,
            terminated: true,
            verdicts: Verdicts::default(),
            bounds: Bounds::calibrated(),
        }
    }

    #[test]
    fn meter_categories_sum() {
        let mut m = CostMeter::new();
        m.tick(OpKind::Probe);
        m.charge(OpKind::Write, 3);
        m.tick(OpKind::Call);
        assert_eq!(m.ram_ops(), 5);
        assert_eq!(m.count(OpKind::Write), 3);
        let was = m.set_enabled(false);
        assert!(was);
        m.charge(OpKind::Read, 100);
        assert_eq!(m.ram_ops(), 5);
    }

    #[test]
    fn word_bits_values() {
        assert_eq!(word_bits(1), 1);
        assert_eq!(word_bits(2), 1);
        assert_eq!(word_bits(3), 2);
        assert_eq!(word_bits(4), 2);
        assert_eq!(word_bits(5), 3);
        assert_eq!(word_bits(1024), 10);
        assert_eq!(word_bits(1025), 11);
    }

    #[test]
    fn growth_passes_and_fails() {
        let ok = report(&[(5, 6), (5, 8), (5, 8)], 2, 4);
        let g = check_growth(&ok);
        assert_eq!(g.verdict, Verdict::Pass);
        assert_eq!(g.max_delta, 2);

        // Injected delta of c + 1 at step 2.
        let bad = report(&[(5, 6), (5, 9), (5, 9)], 2, 4);
        let g = check_growth(&bad);
        assert_eq!(g.verdict, Verdict::Fail);
        assert_eq!(g.first_violation, Some(2));

        let mut unit = ok.clone();
        unit.growth_applicable = false;
        assert_eq!(check_growth(&unit).verdict, Verdict::Skip);
    }

    #[test]
    fn linearity_detects_superlinear_step() {
        let bound = AffineBound { a: 2.0, b: 10.0 };
        let ok = report(&[(12, 5), (20, 5), (30, 10)], 2, 4);
        assert_eq!(check_step_linearity(&ok, bound).verdict, Verdict::Pass);
        let bad = report(&[(12, 5), (20, 5), (100, 10)], 2, 4);
        let chk = check_step_linearity(&bad, bound);
        assert_eq!(chk.verdict, Verdict::Fail);
        assert_eq!(chk.first_violation, Some(3));
    }

    #[test]
    fn total_bound_rejects_cubic() {
        let bound = AffineBound { a: 8.0, b: 16.0 };
        let mut r = report(&[(3, 5); 50], 2, 4);
        assert_eq!(check_total_bound(&r, bound, 4).verdict, Verdict::Pass);
        r.total_ops = r.steps.pow(3);
        assert_eq!(check_total_bound(&r, bound, 4).verdict, Verdict::Fail);
        r.terminated = false;
        assert_eq!(check_total_bound(&r, bound, 4).verdict, Verdict::Skip);
    }

    #[test]
    fn word_budget_enforced() {
        let bound = AffineBound { a: 1.0, b: 1e9 };
        let mut r = report(&[(1, 5); 6], 2, 4);
        // n + T = 10, ⌈log₂ 10⌉ = 4.
        assert_eq!(check_total_bound(&r, bound, 0).word_budget, 4);
        r.word_bits_max = 5;
        assert_eq!(check_total_bound(&r, bound, 0).verdict, Verdict::Fail);
        assert_eq!(check_total_bound(&r, bound, 1).verdict, Verdict::Pass);
    }

    #[test]
    fn envelope_is_tight_and_sound() {
        let pts = vec![(1.0, 3.0), (2.0, 5.0), (3.0, 6.0), (4.0, 9.0)];
        let fit = fit_affine_envelope(&pts);
        assert!(pts.iter().all(|p| fit.admits(p.0, p.1)));
        // Brute force over lines through pairs (plus the flat line).
        let mut best = f64::MAX;
        for p in &pts {
            for q in &pts {
                if q.0 <= p.0 {
                    continue;
                }
                let a = (q.1 - p.1) / (q.0 - p.0);
                let b = p.1 - a * p.0;
                let c = AffineBound { a, b };
                if a >= 0.0 && b >= 0.0 && pts.iter().all(|r| c.admits(r.0, r.1)) {
                    best = best.min(pts.iter().map(|r| c.at(r.0) - r.1).sum());
                }
            }
        }
        let got: f64 = pts.iter().map(|r| fit.at(r.0) - r.1).sum();
        assert!((got - best).abs() < 1e-9, "{got} vs {best}");
    }

    #[test]
    fn envelope_of_constant_series_is_flat() {
        let fit = fit_affine_envelope(&[(1.0, 7.0), (10.0, 7.0), (100.0, 7.0)]);
        assert_eq!(fit.a, 0.0);
        assert_eq!(fit.b, 7.0);
    }

    #[test]
    fn additivity() {
        let r = report(&[(3, 5), (4, 6)], 2, 4);
        assert!(r.is_additive());
    }
}
