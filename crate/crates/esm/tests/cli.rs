//! End-to-end runs of the `esm` binary.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn esm(args: &[&str]) -> Out {
    let o = Command::new(env!("CARGO_BIN_EXE_esm"))
        .args(args)
        .output()
        .expect("spawn esm");
    Out {
        code: o.status.code().expect("exit code"),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn corpus(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "corpus", name]
        .iter()
        .collect();
    p.to_str().unwrap().to_string()
}

const MEMORY: &str = "
vocab {
  constructors { c/0; e/0; s/1; q0/0; q1/0; q2/0; q3/0 }
  dynamic { x/0; z/0; p/0; m/1; mode/0 }
}
inputs { x }
output { z }
init { mode := q0; p := c; }
rules {
  if mode = q0 then { m(x) := s(e)  mode := q1 }
  if mode = q1 then { p := x  mode := q2 }
  if mode = q2 then { z := m(p)  mode := q3 }
}";

const CLASH: &str = "
vocab { constructors { c/0; e/0 } dynamic { z/0 } }
inputs { }
output { z }
rules { z := c  z := e }";

fn temp_program(text: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.esm");
    fs::write(&path, text).unwrap();
    let s = path.to_str().unwrap().to_string();
    (dir, s)
}

#[test]
fn run_toggle() {
    let o = esm(&["run", &corpus("toggle.esm")]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(
        o.stdout.starts_with("output: d0(eps)\nsteps: 2\n"),
        "{}",
        o.stdout
    );
}

#[test]
fn run_bundled_name_and_nat() {
    let o = esm(&["run", "bin_succ.esm", "--input", "x=5", "--nat"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.starts_with("output: 6\n"), "{}", o.stdout);

    let o = esm(&[
        "run",
        "bin_add.esm",
        "--nat",
        "--input",
        "x=13",
        "--input",
        "y=29",
    ]);
    assert!(o.stdout.starts_with("output: 42\n"), "{}", o.stdout);
}

#[test]
fn run_raw_terms_and_engines() {
    for engine in ["critical", "reference"] {
        for cost in ["unit", "inline"] {
            let o = esm(&[
                "run",
                "bin_mul.esm",
                "--input",
                "x=3",
                "--input",
                "y=5",
                "--engine",
                engine,
                "--oracle-cost",
                cost,
                "--nat",
            ]);
            assert_eq!(o.code, 0, "{}", o.stderr);
            assert!(
                o.stdout.starts_with("output: 15\n"),
                "{engine} {cost}: {}",
                o.stdout
            );
        }
    }
    let o = esm(&["run", "str_reverse.esm", "--input", "x=a(b(b(eps)))"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(
        o.stdout.starts_with("output: b(b(a(eps)))\n"),
        "{}",
        o.stdout
    );
}

#[test]
fn merge_demo_stats() {
    let o = esm(&["run", "merge_demo.esm"]);
    assert_eq!(o.code, 0);
    assert!(
        o.stdout.contains("tangle: vertices=4, edges=4"),
        "{}",
        o.stdout
    );
}

#[test]
fn failures_exit_1() {
    let o = esm(&["run", "no_such_program.esm"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("no_such_program.esm"), "{}", o.stderr);

    let (_d, bad) = temp_program("vocab { constructors { c/0 } ");
    let o = esm(&["run", &bad]);
    assert_eq!(o.code, 1);
    assert!(!o.stderr.is_empty());

    let (_d, invalid) = temp_program(
        "vocab { constructors { c/0 } dynamic { x/1; z/0 } } inputs { x } output { z } rules { }",
    );
    let o = esm(&["run", &invalid]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("input must be nullary"), "{}", o.stderr);

    let o = esm(&["run", "bin_succ.esm", "--input", "q=eps"]);
    assert_eq!(o.code, 1);
    let o = esm(&["verify", "bin_add.esm", "--sweep", "9:3"]);
    assert_eq!(o.code, 1);
    let o = esm(&["frobnicate"]);
    assert_eq!(o.code, 1);
}

#[test]
fn clash_exits_2() {
    let (_d, p) = temp_program(CLASH);
    let o = esm(&["run", &p]);
    assert_eq!(o.code, 2, "{}", o.stdout);
    assert!(o.stdout.starts_with("clash: z"), "{}", o.stdout);
}

#[test]
fn fuel_exits_3() {
    let o = esm(&["run", "toggle.esm", "--fuel", "1"]);
    assert_eq!(o.code, 3);
    assert!(o.stdout.starts_with("fuel exhausted"), "{}", o.stdout);
}

#[test]
fn compare() {
    let o = esm(&["compare", "bin_add.esm", "--random", "100", "--seed", "7"]);
    assert_eq!((o.code, o.stdout.as_str()), (0, "equivalent\n"));

    let (_d, p) = temp_program(MEMORY);
    let o = esm(&["compare", &p, "--input", "x=s(s(c))"]);
    assert_eq!(o.code, 0);
    let o = esm(&[
        "compare",
        &p,
        "--input",
        "x=s(s(c))",
        "--fault",
        "skip-search",
    ]);
    assert_eq!(o.code, 4, "{}", o.stdout);
    assert!(o.stdout.starts_with("divergent at step 2"), "{}", o.stdout);
}

#[test]
fn verify() {
    let o = esm(&["verify", "bin_add.esm", "--sweep", "4:256"]);
    assert_eq!(o.code, 0, "{}{}", o.stdout, o.stderr);
    for name in ["growth", "step_linear", "total_bound"] {
        assert!(o.stdout.contains(&format!("{name}: PASS")), "{}", o.stdout);
    }

    let o = esm(&[
        "verify",
        "bin_add.esm",
        "--sweep",
        "4:64",
        "--fault",
        "extra-work",
    ]);
    assert_eq!(o.code, 5, "{}", o.stdout);
    assert!(o.stdout.contains("FAIL"));

    let o = esm(&["verify", "toggle.esm"]);
    assert_eq!(o.code, 0, "{}", o.stdout);

    let o = esm(&["verify", "toggle.esm", "--fuel", "1"]);
    assert_eq!(o.code, 3);
}

#[test]
fn reports_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let trace = dir.path().join("t.txt");
    let o = esm(&[
        "run",
        "toggle.esm",
        "--report",
        json.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.code, 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["steps"], 2);
    assert_eq!(v["per_step"].as_array().unwrap().len(), 2);
    let t = fs::read_to_string(&trace).unwrap();
    assert_eq!(t.lines().count(), 2);
    assert!(t.starts_with("i=1 "), "{t}");

    let o = esm(&[
        "run",
        "toggle.esm",
        "--report",
        csv.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(o.code, 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");

    let o = esm(&["run", "toggle.esm", "--report", "/nonexistent/dir/r.json"]);
    assert_eq!(o.code, 1);
}

#[test]
fn bench() {
    let o = esm(&["bench", "bin_succ.esm", "--sweep", "4:32"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let lines: Vec<&str> = o.stdout.lines().collect();
    assert_eq!(lines.len(), 5, "{}", o.stdout);
    assert!(lines[0].starts_with("program,") || lines[0].contains(','));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = esm(&[
        "bench",
        "bin_succ.esm",
        "--sweep",
        "4:32",
        "--report",
        out.to_str().unwrap(),
    ]);
    assert_eq!((o.code, o.stdout.as_str()), (0, ""));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 5);
}

#[test]
fn examples_lists_six() {
    let o = esm(&["examples"]);
    assert_eq!(o.code, 0);
    let names: Vec<&str> = o
        .stdout
        .lines()
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "toggle",
            "bin_succ",
            "bin_add",
            "bin_mul",
            "str_reverse",
            "merge_demo"
        ]
    );
    for n in names {
        assert_eq!(esm(&["verify", n, "--sweep", "4:8"]).code, 0, "{n}");
    }
}

#[test]
fn help_and_version() {
    let o = esm(&["--help"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("compare"));
    assert_eq!(esm(&["--version"]).code, 0);
}
