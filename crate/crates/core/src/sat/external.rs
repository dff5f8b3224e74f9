//! Runs an external solver on a temporary DIMACS file per solve call.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{check_model, check_range, SatError, Session, SolveResult, SolveStatus, CNF_PLACEHOLDER};
use crate::cnf::{write_dimacs, CnfFormula, Lit, Var};

pub struct ExternalSession {
    formula: CnfFormula,
    argv: Vec<String>,
    timeout: Option<Duration>,
    xor_native: bool,
}

impl ExternalSession {
    pub fn new(formula: CnfFormula, argv: Vec<String>, timeout: Option<Duration>, xor_native: bool) -> Self {
        ExternalSession {
            formula,
            argv,
            timeout,
            xor_native,
        }
    }

    fn run(&self, text: &str) -> Result<(Option<i32>, String), SatError> {
        let mut file = tempfile::Builder::new()
            .prefix("mcfil-")
            .suffix(".cnf")
            .tempfile()
            .map_err(|e| SatError::Io(e.to_string()))?;
        file.write_all(text.as_bytes())
            .map_err(|e| SatError::Io(e.to_string()))?;
        file.flush().map_err(|e| SatError::Io(e.to_string()))?;
        let path = file.path().to_string_lossy().into_owned();
        let argv: Vec<String> = self.argv.iter().map(|a| a.replace(CNF_PLACEHOLDER, &path)).collect();
        let launch_err = |reason: String| SatError::Launch {
            cmd: argv.join(" "),
            reason,
        };
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| launch_err(e.to_string()))?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        let deadline = self.timeout.map(|t| Instant::now() + t);
        let status = loop {
            match child.try_wait().map_err(|e| launch_err(e.to_string()))? {
                Some(st) => break Some(st),
                None => {
                    if deadline.is_some_and(|d| Instant::now() >= d) {
                        let _ = child.kill();
                        let _ = child.wait();
                        break None;
                    }
                    std::thread::sleep(Duration::from_millis(1));
                }
            }
        };
        let out = reader.join().unwrap_or_default();
        match status {
            None => Ok((None, String::new())),
            Some(st) => Ok((Some(st.code().unwrap_or(-1)), out)),
        }
    }
}

/// Reads the `s` and `v` lines of a competition-format answer.
pub(crate) fn parse_output(code: i32, out: &str, num_vars: u32) -> Result<SolveResult, SatError> {
    let mut status = match code {
        10 => Some(SolveStatus::Sat),
        20 => Some(SolveStatus::Unsat),
        _ => None,
    };
    let mut model = vec![false; num_vars as usize];
    let mut saw_values = false;
    for line in out.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            let st = match s.trim() {
                "SATISFIABLE" => SolveStatus::Sat,
                "UNSATISFIABLE" => SolveStatus::Unsat,
                "UNKNOWN" | "INDETERMINATE" => SolveStatus::Unknown,
                other => return Err(SatError::Output(format!("status line {other:?}"))),
            };
            if status.is_some_and(|s| s != st) && st != SolveStatus::Unknown {
                return Err(SatError::Output(format!("exit code {code} contradicts `s {s}`")));
            }
            status = Some(st);
        } else if let Some(vals) = line.strip_prefix("v ").or_else(|| (line == "v").then_some("")) {
            saw_values = true;
            for tok in vals.split_whitespace() {
                let x: i64 = tok.parse().map_err(|_| SatError::Output(format!("value {tok:?}")))?;
                if x == 0 {
                    continue;
                }
                let idx = x.unsigned_abs() as usize;
                if idx <= model.len() {
                    model[idx - 1] = x > 0;
                }
            }
        }
    }
    match status {
        Some(SolveStatus::Sat) => {
            if !saw_values && num_vars > 0 {
                return Err(SatError::Output("SAT answer without a model".into()));
            }
            Ok(SolveResult {
                status: SolveStatus::Sat,
                model: Some(model),
            })
        }
        Some(SolveStatus::Unsat) => Ok(SolveResult::unsat()),
        Some(SolveStatus::Unknown) => Ok(SolveResult::unknown()),
        None => Err(SatError::Output(format!("no status (exit code {code})"))),
    }
}

impl Session for ExternalSession {
    fn num_vars(&self) -> u32 {
        self.formula.num_vars
    }

    fn new_var(&mut self) -> Var {
        self.formula.new_var()
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        let max = lits.iter().map(|l| l.var().index()).max().unwrap_or(0);
        self.formula.num_vars = self.formula.num_vars.max(max);
        self.formula.clauses.push(lits.to_vec());
    }

    fn add_xor(&mut self, vars: &[Var], rhs: bool) {
        let max = vars.iter().map(|v| v.index()).max().unwrap_or(0);
        self.formula.num_vars = self.formula.num_vars.max(max);
        self.formula.add_xor(vars.to_vec(), rhs);
    }

    fn solve(&mut self, assumptions: &[Lit]) -> Result<SolveResult, SatError> {
        check_range(assumptions, self.formula.num_vars)?;
        // no incremental interface across the process boundary: assumptions
        // become unit clauses of a one-off copy
        let mut f = if self.xor_native {
            self.formula.clone()
        } else {
            self.formula.blast_xors()
        };
        for &a in assumptions {
            f.clauses.push(vec![a]);
        }
        let (code, out) = self.run(&write_dimacs(&f))?;
        let Some(code) = code else {
            return Ok(SolveResult::unknown());
        };
        let mut r = parse_output(code, &out, f.num_vars)?;
        if let Some(m) = &r.model {
            check_model(&f, m)?;
        }
        if let Some(m) = r.model.as_mut() {
            m.truncate(self.formula.num_vars as usize);
        }
        Ok(r)
    }
}
