//! Serialized cost reports.

use esm_core::cost::{check_step_linearity, fit_affine_envelope, AffineBound};
use esm_core::{CostReport, RunResult};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
pub struct StepRow {
    pub i: u64,
    pub ops: u64,
    pub vertices: usize,
    pub edges: usize,
}

#[derive(Serialize)]
pub struct VerdictsJson {
    pub growth: &'static str,
    pub step_linear: &'static str,
    pub total_bound: &'static str,
}

/// `a, b`: tightest `ops_i ≤ a·|G(T_i)| + b` over the report's steps.
/// `a2, b2`: tightest `total_ops ≤ a2·(n + nT + T²) + b2` over the runs
/// the report covers.
#[derive(Serialize)]
pub struct Fitted {
    pub a: f64,
    pub b: f64,
    pub a2: f64,
    pub b2: f64,
}

#[derive(Serialize)]
pub struct JsonReport {
    pub n: usize,
    pub steps: u64,
    pub init_ops: u64,
    pub total_ops: u64,
    pub word_bits_max: u32,
    pub c_program: usize,
    pub per_step: Vec<StepRow>,
    pub verdicts: VerdictsJson,
    pub fitted: Fitted,
}

impl JsonReport {
    pub fn new(c: &CostReport) -> JsonReport {
        let step = check_step_linearity(c, c.bounds.step).fitted;
        let total = total_fit(std::slice::from_ref(c));
        JsonReport {
            n: c.n,
            steps: c.steps,
            init_ops: c.init_ops,
            total_ops: c.total_ops,
            word_bits_max: c.word_bits_max,
            c_program: c.c_program,
            per_step: rows(c),
            verdicts: VerdictsJson {
                growth: c.verdicts.growth.as_str(),
                step_linear: c.verdicts.step_linear.as_str(),
                total_bound: c.verdicts.total_bound.as_str(),
            },
            fitted: Fitted {
                a: step.a,
                b: step.b,
                a2: total.a,
                b2: total.b,
            },
        }
    }
}

/// Envelope of `(n + nT + T², total_ops)` over several runs. A single run
/// gets the ratio line through the origin.
pub fn total_fit(reports: &[CostReport]) -> AffineBound {
    if let [c] = reports {
        let shape = c.total_shape();
        return if shape > 0.0 {
            AffineBound {
                a: c.total_ops as f64 / shape,
                b: 0.0,
            }
        } else {
            AffineBound {
                a: 0.0,
                b: c.total_ops as f64,
            }
        };
    }
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .map(|c| (c.total_shape(), c.total_ops as f64))
        .collect();
    fit_affine_envelope(&pts)
}

fn rows(c: &CostReport) -> Vec<StepRow> {
    c.per_step
        .iter()
        .map(|s| StepRow {
            i: s.i,
            ops: s.ops,
            vertices: s.vertices,
            edges: s.edges,
        })
        .collect()
}

pub fn to_json(c: &CostReport) -> String {
    let mut s = serde_json::to_string_pretty(&JsonReport::new(c)).expect("plain data");
    s.push('\n');
    s
}

/// One row per step under the header `i,ops,vertices,edges`.
pub fn to_csv(c: &CostReport) -> String {
    write_csv(&rows(c))
}

pub fn render(c: &CostReport, format: Format) -> String {
    match format {
        Format::Json => to_json(c),
        Format::Csv => to_csv(c),
    }
}

/// One line of a size sweep.
#[derive(Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub steps: u64,
    pub init_ops: u64,
    pub total_ops: u64,
    pub word_bits_max: u32,
    pub vertices: usize,
}

impl BenchRow {
    pub fn new(r: &RunResult) -> BenchRow {
        BenchRow {
            n: r.n,
            steps: r.steps,
            init_ops: r.cost.init_ops,
            total_ops: r.cost.total_ops,
            word_bits_max: r.cost.word_bits_max,
            vertices: r.stats.vertices,
        }
    }
}

/// A CSV record type with a fixed header line.
pub trait CsvRow: Serialize {
    const HEADER: &'static str;
}

impl CsvRow for StepRow {
    const HEADER: &'static str = "i,ops,vertices,edges";
}

impl CsvRow for BenchRow {
    const HEADER: &'static str = "n,steps,init_ops,total_ops,word_bits_max,vertices";
}

pub fn write_csv<T: CsvRow>(rows: &[T]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("plain data");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii output");
    format!("{}\n{body}", T::HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use esm_core::{corpus, run, RunOptions};

    #[test]
    fn json_has_exactly_the_documented_keys() {
        let p = corpus::load("toggle").unwrap();
        let r = run(&p, &[], &RunOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&r.cost)).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut want = vec![
            "n",
            "steps",
            "init_ops",
            "total_ops",
            "word_bits_max",
            "c_program",
            "per_step",
            "verdicts",
            "fitted",
        ];
        want.sort();
        let mut got = keys.clone();
        got.sort();
        assert_eq!(got, want);
        let step = v["per_step"][0].as_object().unwrap();
        assert_eq!(step.len(), 4);
        for k in ["i", "ops", "vertices", "edges"] {
            assert!(step.contains_key(k));
        }
        assert_eq!(v["verdicts"]["growth"], "pass");
        for k in ["a", "b", "a2", "b2"] {
            assert!(v["fitted"][k].is_number());
        }
    }

    #[test]
    fn csv_rows() {
        let p = corpus::load("toggle").unwrap();
        let r = run(&p, &[], &RunOptions::default()).unwrap();
        let text = to_csv(&r.cost);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len() as u64, r.steps + 1);
        assert_eq!(lines[0], "i,ops,vertices,edges");
        let none: Vec<StepRow> = Vec::new();
        assert_eq!(write_csv(&none), "i,ops,vertices,edges\n");
        let none: Vec<BenchRow> = Vec::new();
        assert_eq!(
            write_csv(&none),
            "n,steps,init_ops,total_ops,word_bits_max,vertices\n"
        );
    }
}
