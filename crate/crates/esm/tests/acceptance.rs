//! Acceptance checks. Prints one PASS/FAIL line per criterion, with the
//! time it took, and exits non-zero if any criterion fails or runs over
//! its time budget.

mod common;

use std::collections::HashSet;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use esm::codec::sample_inputs;
use esm::sweep::{rng_for, sweep};
use esm_core::cost::{
    check_growth, check_init_linearity, check_step_linearity, check_total_bound, Bounds, Verdict,
};
use esm_core::tangle::Label;
use esm_core::term::TermPool;
use esm_core::{
    compact_size, compare_engines, corpus, parse_term, symbol_count, CompareVerdict, CostMeter,
    NodeId, OpKind, OracleMode, Program, RunOptions, RunResult, Tangle, Vocabulary,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Duration,
    check: fn() -> Check,
}

const SWEEP: (usize, usize) = (4, 256);

fn main() -> ExitCode {
    let ms = Duration::from_millis;
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            name: "compact size exactness",
            budget: ms(1),
            check: compact_size_exact,
        },
        Criterion {
            name: "merge example",
            budget: ms(1),
            check: merge_example,
        },
        Criterion {
            name: "minimality property suite",
            budget: secs(10),
            check: minimality,
        },
        Criterion {
            name: "O(1) equality",
            budget: secs(5),
            check: constant_equality,
        },
        Criterion {
            name: "linear import",
            budget: secs(30),
            check: linear_import,
        },
        Criterion {
            name: "engine equivalence",
            budget: secs(120),
            check: engine_equivalence,
        },
        Criterion {
            name: "constant growth",
            budget: secs(60),
            check: constant_growth,
        },
        Criterion {
            name: "per-step linearity",
            budget: secs(120),
            check: step_linearity,
        },
        Criterion {
            name: "initial-state linearity",
            budget: secs(30),
            check: init_linearity,
        },
        Criterion {
            name: "total bound",
            budget: secs(300),
            check: total_bound,
        },
        Criterion {
            name: "pseudo vs. basic complexity",
            budget: secs(60),
            check: pseudo_vs_basic,
        },
        Criterion {
            name: "determinism",
            budget: secs(30),
            check: determinism,
        },
    ];
    let mut failed = 0;
    for (k, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = (c.check)();
        let took = start.elapsed();
        let (ok, detail) = match r {
            Ok(d) if took <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {:<28} {:>10.3} ms  {detail}",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            c.name,
            took.as_secs_f64() * 1e3
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fc_vocab() -> Vocabulary {
    Vocabulary::builder()
        .constructor("c", 0)
        .constructor("f", 2)
        .constructor("g", 2)
        .build()
        .unwrap()
}

fn compact_size_exact() -> Check {
    let v = fc_vocab();
    let t = parse_term("f(c,c)", &v).map_err(|e| e.to_string())?;
    let (cs, sc) = (compact_size(&t), symbol_count(&t));
    ensure(cs == 2 && sc == 3, || format!("compact {cs}, symbols {sc}"))?;
    Ok("compact_size 2, symbol_count 3".into())
}

fn merge_example() -> Check {
    let v = fc_vocab();
    let mut g = Tangle::new(&v);
    let mut m = CostMeter::new();
    for s in ["f(c,c)", "g(c,c)"] {
        let t = parse_term(s, &v).map_err(|e| e.to_string())?;
        g.import_term(&t, &mut m).map_err(|e| e.to_string())?;
    }
    let vertices = (0..g.len())
        .filter(|&i| g.label(NodeId::from_index(i)) != Label::Undef)
        .count();
    let edges = g.stats().edges;
    ensure(vertices == 3 && edges == 4, || {
        format!("{vertices} vertices, {edges} edges")
    })?;
    Ok("3 vertices, 4 edges".into())
}

/// Duplicate `(label, children)` pairs and the edge bound, recomputed from
/// the public node view.
fn audit(g: &Tangle) -> Result<(), String> {
    let mut seen = HashSet::new();
    let mut edges = 0;
    for i in 0..g.len() {
        let id = NodeId::from_index(i);
        let key = (g.label(id), g.children(id).to_vec());
        edges += key.1.len();
        if !seen.insert(key) {
            return Err(format!("duplicate vertex at {i}"));
        }
    }
    ensure(edges <= g.max_arity() * g.len(), || {
        format!("{edges} edges for {} vertices", g.len())
    })
}

fn minimality() -> Check {
    let v = common::vocab();
    let cons: Vec<_> = v.constructors().map(|(i, s)| (i, s.arity)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut largest = 0;
    for seq in 0..1000 {
        let mut g = Tangle::new(&v);
        let mut m = CostMeter::new();
        let mut pool = TermPool::new();
        let mut nodes: Vec<NodeId> = Vec::new();
        for _ in 0..rng.random_range(1..60) {
            if nodes.is_empty() || rng.random_bool(0.3) {
                let t = common::random_shared(&v, rng.random_range(0..12), &mut rng, &mut pool);
                nodes.push(g.import_term(&t, &mut m).map_err(|e| e.to_string())?);
            } else {
                let (h, k) = cons[rng.random_range(0..cons.len())];
                let kids: Vec<NodeId> = (0..k)
                    .map(|_| nodes[rng.random_range(0..nodes.len())])
                    .collect();
                nodes.push(g.intern(h, &kids, &mut m).map_err(|e| e.to_string())?);
            }
        }
        audit(&g).map_err(|e| format!("sequence {seq}: {e}"))?;
        largest = largest.max(g.len());
    }
    Ok(format!("1000 sequences, largest tangle {largest} vertices"))
}

fn constant_equality() -> Check {
    let v = common::vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pool = TermPool::new();
    let mut g = Tangle::new(&v);
    let mut m = CostMeter::new();
    let mut biggest = 0;
    let mut pairs = 0;
    for budget in [0, 1, 10, 100, 1000, 5000, 9990] {
        let a = common::random_shared(&v, budget, &mut rng, &mut pool);
        let b = common::random_shared(&v, budget, &mut rng, &mut pool);
        biggest = biggest.max(compact_size(&a)).max(compact_size(&b));
        let (x, y) = (
            g.import_term(&a, &mut m).map_err(|e| e.to_string())?,
            g.import_term(&b, &mut m).map_err(|e| e.to_string())?,
        );
        let x2 = g.import_term(&a, &mut m).map_err(|e| e.to_string())?;
        for (p, q, want) in [(x, x2, true), (x, y, a == b), (y, y, true)] {
            let mut meter = CostMeter::new();
            let eq = g.node_eq(p, q, &mut meter);
            ensure(eq == want, || {
                format!("wrong answer at size {}", compact_size(&a))
            })?;
            ensure(
                meter.ram_ops() == 1 && meter.count(OpKind::Compare) == 1,
                || format!("{} ops at size {}", meter.ram_ops(), compact_size(&a)),
            )?;
            pairs += 1;
        }
    }
    // s^9999(c) and s^9999(e): compact size exactly 10^4, not equal.
    let s = v.lookup("s").unwrap();
    let chains: Vec<NodeId> = ["c", "e"]
        .iter()
        .map(|leaf| {
            let mut t = pool.make(v.lookup(leaf).unwrap(), Vec::new());
            for _ in 0..9999 {
                t = pool.make(s, vec![t]);
            }
            biggest = biggest.max(compact_size(&t));
            g.import_term(&t, &mut m).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let mut meter = CostMeter::new();
    ensure(
        !g.node_eq(chains[0], chains[1], &mut meter) && meter.ram_ops() == 1,
        || "chains of size 10^4".into(),
    )?;
    pairs += 1;
    ensure(biggest <= 10_000, || format!("term of size {biggest}"))?;
    Ok(format!(
        "{pairs} pairs up to compact size {biggest}, 1 op each"
    ))
}

fn linear_import() -> Check {
    let bound = Bounds::calibrated().import;
    let v = common::vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut worst = 0f64;
    for k in 0..500 {
        let mut pool = TermPool::new();
        let t = common::random_shared(&v, rng.random_range(0..9990), &mut rng, &mut pool);
        let size = compact_size(&t);
        ensure(size <= 10_000, || format!("term {k} has size {size}"))?;
        let mut g = Tangle::new(&v);
        let mut m = CostMeter::new();
        g.import_term(&t, &mut m).map_err(|e| e.to_string())?;
        let ops = m.ram_ops() as f64;
        ensure(bound.admits(size as f64, ops), || {
            format!("term {k}: {ops} ops for size {size}")
        })?;
        worst = worst.max(ops / size as f64);
    }
    Ok(format!(
        "500 terms, ops <= {}*||t|| + {}, worst ratio {worst:.2}",
        bound.a, bound.b
    ))
}

fn load_all() -> Result<Vec<(&'static str, Program)>, String> {
    corpus::ENTRIES
        .iter()
        .map(|e| {
            corpus::load(e.name)
                .map(|p| (e.name, p))
                .map_err(|x| x.to_string())
        })
        .collect()
}

fn engine_equivalence() -> Check {
    let mut cases = 0;
    for (name, p) in load_all()? {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..100 {
            let size = rng.random_range(1..=32);
            let inputs = sample_inputs(&p, size, &mut rng);
            let opts = RunOptions {
                oracle_mode: if k % 2 == 0 {
                    OracleMode::Inline
                } else {
                    OracleMode::Unit
                },
                ..RunOptions::default()
            };
            match compare_engines(&p, &inputs, &opts).map_err(|e| e.to_string())? {
                CompareVerdict::Equivalent { .. } => cases += 1,
                CompareVerdict::Divergent { step, detail } => {
                    return Err(format!("{name} case {k}: step {step}: {detail}"))
                }
            }
        }
    }
    Ok(format!("{cases} runs, 0 divergences"))
}

fn corpus_sweeps(mode: OracleMode) -> Result<Vec<(&'static str, RunResult)>, String> {
    let opts = RunOptions {
        oracle_mode: mode,
        ..RunOptions::default()
    };
    let mut out = Vec::new();
    for (name, p) in load_all()? {
        for pt in sweep(&p, SWEEP.0, SWEEP.1, 0, &opts).map_err(|e| e.to_string())? {
            ensure(pt.result.cost.terminated, || {
                format!("{name} size {} did not halt", pt.size)
            })?;
            out.push((name, pt.result));
        }
    }
    Ok(out)
}

fn constant_growth() -> Check {
    let runs = corpus_sweeps(OracleMode::Inline)?;
    let mut worst = 0;
    let mut steps = 0;
    for (name, r) in &runs {
        let c = &r.cost;
        let cp = c.c_program;
        ensure(check_growth(c).verdict == Verdict::Pass, || {
            format!("{name} n={}: growth check", c.n)
        })?;
        for (k, s) in c.per_step.iter().enumerate() {
            let i = k + 1;
            ensure(s.grown <= cp, || {
                format!("{name} n={} step {i}: grew {} > {cp}", c.n, s.grown)
            })?;
            ensure(s.vertices <= c.initial_vertices + cp * i, || {
                format!("{name} n={} step {i}: {} vertices", c.n, s.vertices)
            })?;
            worst = worst.max(s.grown);
        }
        steps += c.per_step.len();
    }
    Ok(format!(
        "{} runs, {steps} steps, largest growth {worst}",
        runs.len()
    ))
}

fn step_linearity() -> Check {
    let bound = Bounds::calibrated().step;
    let mut runs = corpus_sweeps(OracleMode::Inline)?;
    runs.extend(corpus_sweeps(OracleMode::Unit)?);
    let mut steps = 0;
    let mut max_ops = 0;
    for (name, r) in &runs {
        let c = &r.cost;
        ensure(
            check_step_linearity(c, bound).verdict == Verdict::Pass,
            || format!("{name} n={}: linearity check", c.n),
        )?;
        for s in &c.per_step {
            ensure(bound.admits(s.cells() as f64, s.ops as f64), || {
                format!(
                    "{name} n={} step {}: {} ops at |G| = {}",
                    c.n,
                    s.i,
                    s.ops,
                    s.cells()
                )
            })?;
            max_ops = max_ops.max(s.ops);
        }
        steps += c.per_step.len();
    }
    Ok(format!(
        "{steps} steps, ops <= {}*|G| + {}, max {max_ops}",
        bound.a, bound.b
    ))
}

fn init_linearity() -> Check {
    let bound = Bounds::calibrated().init;
    let p = corpus::load("bin_add").map_err(|e| e.to_string())?;
    let mut sizes = Vec::new();
    for pt in sweep(&p, SWEEP.0, SWEEP.1, 0, &RunOptions::default()).map_err(|e| e.to_string())? {
        let c = &pt.result.cost;
        ensure(check_init_linearity(c, bound) == Verdict::Pass, || {
            format!("n={}: {} init ops", c.n, c.init_ops)
        })?;
        sizes.push(c.n);
    }
    Ok(format!(
        "init ops <= {}*(n + |init| + m) + {} for n in {sizes:?}",
        bound.a, bound.b
    ))
}

fn total_bound() -> Check {
    let b = Bounds::calibrated();
    let mut worst = 0f64;
    let mut runs = 0;
    for name in ["bin_succ", "bin_add", "bin_mul"] {
        let p = corpus::load(name).map_err(|e| e.to_string())?;
        for pt in
            sweep(&p, SWEEP.0, SWEEP.1, 0, &RunOptions::default()).map_err(|e| e.to_string())?
        {
            let c = &pt.result.cost;
            let t = check_total_bound(c, b.total, b.word_slack);
            ensure(t.verdict == Verdict::Pass, || {
                format!(
                    "{name} n={} T={}: {} ops (budget {:.0}), {} bits (budget {})",
                    c.n, c.steps, c.total_ops, t.ops_budget, c.word_bits_max, t.word_budget
                )
            })?;
            worst = worst.max(c.total_ops as f64 / t.ops_budget);
            runs += 1;
        }
    }
    Ok(format!(
        "{runs} runs, worst use of budget {:.1}%",
        worst * 100.0
    ))
}

fn pseudo_vs_basic() -> Check {
    let p = corpus::load("bin_mul").map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for size in [4, 8, 16, 32, 64] {
        let inputs = sample_inputs(&p, size, &mut rng_for(0, size));
        let steps = |mode| {
            let o = RunOptions {
                oracle_mode: mode,
                ..RunOptions::default()
            };
            esm_core::run(&p, &inputs, &o)
                .map(|r| r.steps)
                .map_err(|e| e.to_string())
        };
        ratios.push(steps(OracleMode::Inline)? as f64 / steps(OracleMode::Unit)? as f64);
    }
    ensure(ratios.windows(2).all(|w| w[0] < w[1]), || {
        format!("ratios {ratios:.2?}")
    })?;
    Ok(format!("T_inline/T_unit = {ratios:.2?}"))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_esm");
    let mut files = Vec::new();
    let mut files_stdout = Vec::new();
    for round in 0..2 {
        let trace = dir.path().join(format!("trace{round}.txt"));
        let report = dir.path().join(format!("report{round}.json"));
        let bench = dir.path().join(format!("bench{round}.csv"));
        let runs: [Vec<String>; 2] = [
            [
                "run",
                "bin_mul.esm",
                "--nat",
                "--input",
                "x=45",
                "--input",
                "y=27",
                "--trace",
                trace.to_str().unwrap(),
                "--report",
                report.to_str().unwrap(),
            ]
            .map(String::from)
            .to_vec(),
            [
                "bench",
                "bin_add.esm",
                "--sweep",
                "4:64",
                "--seed",
                "3",
                "--report",
                bench.to_str().unwrap(),
            ]
            .map(String::from)
            .to_vec(),
        ];
        for args in &runs {
            let o = Command::new(bin)
                .args(args)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(o.status.success(), || {
                format!("esm {args:?} exited with {}", o.status)
            })?;
            files_stdout.push(o.stdout);
        }
        files.push([trace, report, bench].map(|f| fs::read(f).unwrap_or_default()));
    }
    ensure(files_stdout[0] == files_stdout[2], || {
        "stdout differs between runs".into()
    })?;
    for (k, (a, b)) in files[0].iter().zip(&files[1]).enumerate() {
        ensure(!a.is_empty() && a == b, || {
            format!("output {k} differs between runs")
        })?;
    }
    Ok(format!(
        "trace {} B, report {} B, bench {} B identical",
        files[0][0].len(),
        files[0][1].len(),
        files[0][2].len()
    ))
}
