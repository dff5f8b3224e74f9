use std::path::Path;
use std::process::{Command, Output};

use mcfil::cnf::read_dimacs;

const BIN: &str = env!("CARGO_BIN_EXE_mcfil");

fn mcfil(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field<'a>(out: &'a str, key: &str) -> Option<&'a str> {
    out.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("iter,chosen,result,k_max,remaining,selected,elapsed_ms")
    );
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn and_gate_single_query() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("and.csv");
    let o = mcfil(&[
        "attack",
        "--func",
        "and_gate",
        "--target",
        "1",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&trace);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "1");
    let plot = std::fs::read_to_string(trace.with_extension("dat")).unwrap();
    assert_eq!(plot, "# iter remaining\n0 2\n1 1\n");
}

#[test]
fn sixteen_bit_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("m.csv");
    let o = mcfil(&[
        "attack",
        "--func",
        "millionaires",
        "--width",
        "16",
        "--target-random",
        "--seed",
        "7",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "status"), Some("UNIQUE"));
    assert_eq!(field(&out, "witness"), field(&out, "hidden"));
    let rows = csv_rows(&trace);
    assert!(!rows.is_empty() && rows.len() <= 24, "{} rows", rows.len());
}

#[test]
fn json_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let o = mcfil(&[
        "attack",
        "--func",
        "millionaires",
        "--width",
        "6",
        "--target",
        "2b",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(v["status"], "UNIQUE");
    assert_eq!(v["witness"], "43");
    assert_eq!(v["target_width"], 6);
    assert!(!v["rows"].as_array().unwrap().is_empty());
}

#[test]
fn leakage_reports() {
    let o = mcfil(&["leakage", "--func", "millionaires", "--width", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "outcomes"), Some("0, 1"));
    let logs: Vec<f64> = out
        .lines()
        .filter_map(|l| l.split("~2^").nth(1))
        .map(|s| s.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(logs.len(), 2);
    for l in logs {
        // exact halving would be 7; the estimate carries the counter's tolerance
        assert!((6.0..=8.0).contains(&l), "{out}");
    }

    let o = mcfil(&["leakage", "--func", "constant"]);
    assert!(stdout(&o).contains("no leakage: single outcome"));

    let o = mcfil(&["leakage", "--func", "mean_average", "--width", "2"]);
    let out = stdout(&o);
    assert_eq!(field(&out, "dropped"), Some("0, 3"));
    assert_eq!(field(&out, "selected"), Some("1, 2"));
}

#[test]
fn export_writes_instances_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcfil(&[
        "export",
        "--func",
        "millionaires",
        "--width",
        "8",
        "--target",
        "4d",
        "--max-iters",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut cnfs: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cnf"))
        .collect();
    cnfs.sort();
    assert_eq!(cnfs.len(), 3);
    for p in &cnfs {
        read_dimacs(&std::fs::read_to_string(p).unwrap()).unwrap();
    }
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let rows = m.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for key in ["name", "width", "iter", "vars", "clauses", "xors"] {
        assert!(rows[0].get(key).is_some(), "manifest lacks {key}");
    }
}

#[test]
fn subprocess_oracle() {
    let serve = format!("{BIN} serve --func millionaires --width 8 --target 2a");
    let o = mcfil(&[
        "attack",
        "--func",
        "millionaires",
        "--width",
        "8",
        "--oracle-cmd",
        &serve,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "witness"), Some("2a"));
}

#[test]
fn exit_codes() {
    // usage
    for args in [
        &["attack", "--func", "nope", "--target", "1"][..],
        &["attack", "--func", "and_gate"],
        &["attack", "--func", "and_gate", "--target", "1", "--target-random"],
        &[
            "attack",
            "--func",
            "millionaires",
            "--width",
            "12",
            "--target",
            "1",
            "--exact-trace",
        ],
        &["attack", "--func", "and_gate", "--target", "7"],
        &["attack", "--func", "and_gate", "--target", "1", "--workers", "0"],
        &[
            "attack",
            "--func",
            "and_gate",
            "--target",
            "1",
            "--backend",
            "ext:solver",
        ],
        &["frobnicate"],
    ] {
        assert_eq!(mcfil(args).status.code(), Some(64), "{args:?}");
    }
    // budget
    let o = mcfil(&[
        "attack",
        "--func",
        "millionaires",
        "--width",
        "8",
        "--target",
        "3",
        "--max-iters",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(3));
    // nothing to separate
    let o = mcfil(&["attack", "--func", "constant", "--target", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("brute force"));
    // oracle answering garbage
    let o = mcfil(&[
        "attack",
        "--func",
        "millionaires",
        "--width",
        "4",
        "--oracle-cmd",
        "sh -c 'while read l; do echo zz; done'",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error"));
}

#[test]
fn env_overrides_and_flag_precedence() {
    let o = Command::new(BIN)
        .args(["attack", "--width", "4", "--target", "9"])
        .env("MCFIL_FUNC", "millionaires")
        .env("MCFIL_WIDTH", "6")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        field(&stdout(&o), "functionality"),
        Some("millionaires (target 4 bits)")
    );
}

#[test]
fn traces_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for (i, workers) in ["1", "1", "2"].iter().enumerate() {
        let p = dir.path().join(format!("r{i}.csv"));
        let o = mcfil(&[
            "attack",
            "--func",
            "millionaires",
            "--width",
            "10",
            "--target-random",
            "--seed",
            "3",
            "--deterministic-trace",
            "--workers",
            workers,
            "--trace",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        traces.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    assert_eq!(traces[0], traces[2]);
}
