//! The `esm` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use esm_core::cost::{check_growth, check_step_linearity, check_total_bound, Bounds, Verdict};
use esm_core::engine::Fault;
use esm_core::numeral::decode_nat_binary;
use esm_core::{
    compare_engines, corpus, run, CompareVerdict, CostReport, EngineKind, OracleMode, Outcome,
    Program, RunOptions, RunResult, Term,
};
use rand::Rng;

use crate::codec::{parse_inputs, sample_inputs};
use crate::load::load_program;
use crate::report::{render, total_fit, write_csv, BenchRow, Format};
use crate::sweep::{parse_range, rng_for, summarize, sweep};

/// Process exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    /// Unreadable, unparsable or invalid program, or bad arguments.
    Failure = 1,
    Clash = 2,
    Fuel = 3,
    Divergence = 4,
    BoundViolation = 5,
}

#[derive(Parser, Debug)]
#[command(
    name = "esm",
    version,
    about = "Run and measure effective state machine programs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a program and print its output.
    Run(RunArgs),
    /// Run both engines in lockstep and report the first disagreement.
    Compare(CompareArgs),
    /// Check the growth, step and total cost bounds.
    Verify(VerifyArgs),
    /// Sweep input sizes and print one CSV row per size.
    Bench(BenchArgs),
    /// List the bundled example programs.
    Examples,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Critical,
    Reference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleCostArg {
    Unit,
    Inline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FaultArg {
    None,
    SkipSearch,
    ExtraWork,
}

#[derive(Args, Debug)]
struct Common {
    /// Program file (`.esm`); names of bundled examples also work.
    program: PathBuf,
    /// Input value, as NAME=TERM. Repeat for each input.
    #[arg(long = "input", value_name = "NAME=TERM")]
    inputs: Vec<String>,
    /// Read inputs and print outputs as binary numerals in decimal.
    #[arg(long)]
    nat: bool,
    /// Step limit per program level.
    #[arg(long, default_value_t = 1_000_000)]
    fuel: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::Critical)]
    engine: EngineArg,
    /// How oracle calls are charged.
    #[arg(long = "oracle-cost", value_enum, default_value_t = OracleCostArg::Inline)]
    oracle_cost: OracleCostArg,
    /// Seed for generated inputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Turn off the oracle result cache.
    #[arg(long)]
    no_memo: bool,
    #[arg(long, value_enum, default_value_t = FaultArg::None, hide = true)]
    fault: FaultArg,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Write the cost report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the step trace here, one line per step.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Compare on this many generated inputs instead of --input.
    #[arg(long, value_name = "COUNT")]
    random: Option<usize>,
    /// Largest generated input size.
    #[arg(long, default_value_t = 32)]
    max_size: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Check generated inputs of sizes LO, 2·LO, … up to HI.
    #[arg(long, value_name = "LO:HI")]
    sweep: Option<String>,
    /// Write the report of the largest run here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "LO:HI", default_value = "4:256")]
    sweep: String,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            fuel: self.fuel,
            engine: match self.engine {
                EngineArg::Critical => EngineKind::Critical,
                EngineArg::Reference => EngineKind::Reference,
            },
            oracle_mode: match self.oracle_cost {
                OracleCostArg::Unit => OracleMode::Unit,
                OracleCostArg::Inline => OracleMode::Inline,
            },
            memo: !self.no_memo,
            fault: match self.fault {
                FaultArg::None => Fault::None,
                FaultArg::SkipSearch => Fault::SkipSearch,
                FaultArg::ExtraWork => Fault::ExtraWork,
            },
            ..RunOptions::default()
        }
    }
}

/// Error text for the user plus the status to exit with.
struct Failure(Exit, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(Exit::Failure, e.to_string())
    }
}

type Res = Result<Exit, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return Exit::Failure;
            }
            let _ = write!(out, "{}", e.render());
            return Exit::Ok;
        }
    };
    let r = match cli.cmd {
        Cmd::Run(a) => cmd_run(&a, out),
        Cmd::Compare(a) => cmd_compare(&a, out),
        Cmd::Verify(a) => cmd_verify(&a, out),
        Cmd::Bench(a) => cmd_bench(&a, out),
        Cmd::Examples => cmd_examples(out),
    };
    match r {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "esm: {msg}");
            code
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| {
        Failure(
            Exit::Failure,
            format!("cannot write `{}`: {e}", path.display()),
        )
    })
}

fn show_term(p: &Program, t: &Term, nat: bool) -> String {
    if nat {
        if let Ok(n) = decode_nat_binary(t, &p.vocab) {
            return n.to_string();
        }
    }
    p.vocab.format_term(t)
}

fn outcome_exit(o: &Outcome) -> Exit {
    match o {
        Outcome::Output(_) | Outcome::UndefOutput => Exit::Ok,
        Outcome::Clash { .. } => Exit::Clash,
        Outcome::FuelExhausted => Exit::Fuel,
    }
}

fn print_result(p: &Program, r: &RunResult, nat: bool, out: &mut dyn Write) -> Res {
    match &r.outcome {
        Outcome::Output(t) => writeln!(out, "output: {}", show_term(p, t, nat))?,
        Outcome::UndefOutput => writeln!(out, "output: undef")?,
        Outcome::Clash { location } => writeln!(out, "clash: {location}")?,
        Outcome::FuelExhausted => writeln!(out, "fuel exhausted")?,
    }
    writeln!(out, "steps: {}", r.steps)?;
    writeln!(out, "n: {}", r.n)?;
    writeln!(out, "total ops: {}", r.cost.total_ops)?;
    writeln!(
        out,
        "tangle: vertices={}, edges={}",
        r.stats.vertices, r.stats.edges
    )?;
    Ok(outcome_exit(&r.outcome))
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Res {
    let c = &a.common;
    let p = load_program(&c.program)?;
    let inputs = parse_inputs(&p, &c.inputs, c.nat)?;
    let opts = RunOptions {
        trace: a.trace.is_some(),
        ..c.options()
    };
    let r = run(&p, &inputs, &opts)?;
    if let Some(path) = &a.report {
        write_file(path, &render(&r.cost, a.format))?;
    }
    if let Some(path) = &a.trace {
        let text: String = r.trace.iter().map(|t| format!("{t}\n")).collect();
        write_file(path, &text)?;
    }
    print_result(&p, &r, c.nat, out)
}

fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> Res {
    let c = &a.common;
    let p = load_program(&c.program)?;
    let opts = c.options();
    let cases: Vec<Vec<Term>> = match a.random {
        None => vec![parse_inputs(&p, &c.inputs, c.nat)?],
        Some(count) => {
            let mut rng = rng_for(c.seed, 0);
            (0..count)
                .map(|_| {
                    let size = rng.random_range(1..=a.max_size.max(1));
                    sample_inputs(&p, size, &mut rng)
                })
                .collect()
        }
    };
    for (k, inputs) in cases.iter().enumerate() {
        if let CompareVerdict::Divergent { step, detail } = compare_engines(&p, inputs, &opts)? {
            writeln!(out, "divergent at step {step}: {detail}")?;
            let shown: Vec<String> = p
                .inputs
                .iter()
                .zip(inputs)
                .map(|(&s, t)| format!("{}={}", p.vocab.name(s), show_term(&p, t, c.nat)))
                .collect();
            writeln!(out, "case {k}: {}", shown.join(" "))?;
            return Ok(Exit::Divergence);
        }
    }
    writeln!(out, "equivalent")?;
    Ok(Exit::Ok)
}

fn verdict_line(name: &str, v: Verdict, detail: &str, out: &mut dyn Write) -> Result<(), Failure> {
    let tag = match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Skip => "SKIP",
    };
    writeln!(out, "{name}: {tag} ({detail})")?;
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Res {
    let c = &a.common;
    let p = load_program(&c.program)?;
    let opts = c.options();
    let bounds = Bounds::calibrated();
    let results: Vec<RunResult> = match &a.sweep {
        Some(range) => {
            let (lo, hi) = parse_range(range)?;
            sweep(&p, lo, hi, c.seed, &opts)?
                .into_iter()
                .map(|pt| pt.result)
                .collect()
        }
        None => vec![run(&p, &parse_inputs(&p, &c.inputs, c.nat)?, &opts)?],
    };
    for r in &results {
        let code = outcome_exit(&r.outcome);
        if code != Exit::Ok {
            return Err(Failure(
                code,
                format!("run with n = {} did not terminate: {:?}", r.n, r.outcome),
            ));
        }
    }
    let reports: Vec<&CostReport> = results.iter().map(|r| &r.cost).collect();
    let s = summarize(&reports, &bounds);

    let max_delta = reports
        .iter()
        .map(|r| check_growth(r).max_delta)
        .max()
        .unwrap_or(0);
    let c_p = reports.first().map(|r| r.c_program).unwrap_or(0);
    verdict_line(
        "growth",
        s.growth,
        &format!("max delta {max_delta}, c(p) = {c_p}"),
        out,
    )?;
    let worst_step = reports
        .iter()
        .flat_map(|r| {
            let f = check_step_linearity(r, bounds.step).fitted;
            [f.a, f.b]
        })
        .collect::<Vec<_>>();
    let (fa, fb) = worst_step
        .chunks(2)
        .fold((0.0f64, 0.0f64), |(a, b), w| (a.max(w[0]), b.max(w[1])));
    verdict_line(
        "step_linear",
        s.step_linear,
        &format!(
            "ops <= {}*|G| + {}; runs need a <= {fa:.3}, b <= {fb:.1}",
            bounds.step.a, bounds.step.b
        ),
        out,
    )?;
    let owned: Vec<CostReport> = reports.iter().map(|r| (*r).clone()).collect();
    let fit = total_fit(&owned);
    let worst_ratio = reports
        .iter()
        .map(|r| check_total_bound(r, bounds.total, bounds.word_slack).ratio)
        .fold(0.0, f64::max);
    verdict_line(
        "total_bound",
        s.total_bound,
        &format!(
            "ops <= {}*(n + nT + T^2) + {}; max ops/(n + nT + T^2) = {worst_ratio:.4}, fit a2 = {:.4}, b2 = {:.1}",
            bounds.total.a, bounds.total.b, fit.a, fit.b
        ),
        out,
    )?;
    verdict_line(
        "init_linear",
        s.init_linear,
        &format!(
            "init ops <= {}*(n + |init| + m) + {}",
            bounds.init.a, bounds.init.b
        ),
        out,
    )?;
    if let (Some(path), Some(last)) = (&a.report, reports.last()) {
        write_file(path, &render(last, a.format))?;
    }
    Ok(if s.failed() {
        Exit::BoundViolation
    } else {
        Exit::Ok
    })
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Res {
    let c = &a.common;
    let p = load_program(&c.program)?;
    let (lo, hi) = parse_range(&a.sweep)?;
    let points = sweep(&p, lo, hi, c.seed, &c.options())?;
    let rows: Vec<BenchRow> = points.iter().map(|pt| BenchRow::new(&pt.result)).collect();
    let text = write_csv(&rows);
    match &a.report {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    let code = points
        .iter()
        .map(|pt| outcome_exit(&pt.result.outcome))
        .find(|&e| e != Exit::Ok)
        .unwrap_or(Exit::Ok);
    Ok(code)
}

fn cmd_examples(out: &mut dyn Write) -> Res {
    for e in corpus::ENTRIES {
        writeln!(out, "{:<12} {:<16} {}", e.name, e.file, e.summary)?;
    }
    Ok(Exit::Ok)
}
