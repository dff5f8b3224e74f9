//! DIMACS CNF text with the `x` extension for XOR clauses.
//!
//! An XOR line `x1 -2 3 0` means `x1 ^ x2 ^ x3 = 1` with a negated first
//! literal flipping the parity. The input/output map of a compiled circuit
//! rides along in `c chosen|target|output ... 0` comment lines.

use std::fmt::Write as _;

use thiserror::Error;

use super::{BitMap, CnfFormula, Lit, Var, XorClause};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct DimacsError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> DimacsError {
    DimacsError {
        line,
        message: message.into(),
    }
}

pub fn write_dimacs(f: &CnfFormula) -> String {
    let mut out = String::new();
    for (tag, vars) in [
        ("chosen", &f.bitmap.chosen),
        ("target", &f.bitmap.target),
        ("output", &f.bitmap.output),
    ] {
        if !vars.is_empty() {
            out.push_str("c ");
            out.push_str(tag);
            for v in vars {
                let _ = write!(out, " {v}");
            }
            out.push_str(" 0\n");
        }
    }
    let _ = writeln!(out, "p cnf {} {}", f.num_vars, f.clauses.len() + f.xors.len());
    for c in &f.clauses {
        for l in c {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    for x in &f.xors {
        out.push('x');
        for (i, v) in x.vars.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            if i == 0 && !x.rhs {
                out.push('-');
            }
            let _ = write!(out, "{v}");
        }
        out.push_str(" 0\n");
    }
    out
}

fn parse_lit(tok: &str, line: usize, num_vars: u32) -> Result<Option<Lit>, DimacsError> {
    let v: i64 = tok.parse().map_err(|_| err(line, format!("bad literal {tok:?}")))?;
    if v == 0 {
        return Ok(None);
    }
    if v.unsigned_abs() > num_vars as u64 {
        return Err(err(line, format!("literal {v} exceeds declared {num_vars} variables")));
    }
    Ok(Lit::from_dimacs(v as i32))
}

/// Parses DIMACS text. The clause count in the header is not enforced.
pub fn read_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<u32> = None;
    let mut f = CnfFormula::default();
    let mut bitmap = BitMap::default();
    let mut pending: Vec<Lit> = Vec::new();
    let mut pending_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            let mut toks = rest.split_whitespace();
            let slot = match toks.next() {
                Some("chosen") => &mut bitmap.chosen,
                Some("target") => &mut bitmap.target,
                Some("output") => &mut bitmap.output,
                _ => continue,
            };
            for t in toks {
                match t.parse::<u32>() {
                    Ok(0) => break,
                    Ok(v) => slot.push(Var::new(v)),
                    Err(_) => return Err(err(lineno, format!("bad variable {t:?}"))),
                }
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            if header.is_some() {
                return Err(err(lineno, "duplicate header"));
            }
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 3 || toks[0] != "cnf" {
                return Err(err(lineno, "expected `p cnf <vars> <clauses>`"));
            }
            let nv: u32 = toks[1].parse().map_err(|_| err(lineno, "bad variable count"))?;
            toks[2].parse::<u64>().map_err(|_| err(lineno, "bad clause count"))?;
            header = Some(nv);
            f.num_vars = nv;
            continue;
        }
        let Some(nv) = header else {
            return Err(err(lineno, "clause before header"));
        };
        if let Some(rest) = line.strip_prefix('x') {
            if !pending.is_empty() {
                return Err(err(lineno, "xor line inside an unterminated clause"));
            }
            let mut lits = Vec::new();
            let mut closed = false;
            for t in rest.split_whitespace() {
                if closed {
                    return Err(err(lineno, "tokens after terminating 0"));
                }
                match parse_lit(t, lineno, nv)? {
                    Some(l) => lits.push(l),
                    None => closed = true,
                }
            }
            if !closed {
                return Err(err(lineno, "xor line must end with 0"));
            }
            let rhs = lits.iter().filter(|l| !l.is_positive()).count() % 2 == 0;
            let vars = lits.iter().map(|l| l.var()).collect();
            match XorClause::normalized(vars, rhs) {
                Some(x) => f.xors.push(x),
                None if rhs => f.clauses.push(Vec::new()),
                None => {}
            }
            continue;
        }
        for t in line.split_whitespace() {
            if pending.is_empty() {
                pending_line = lineno;
            }
            match parse_lit(t, lineno, nv)? {
                Some(l) => pending.push(l),
                None => f.clauses.push(std::mem::take(&mut pending)),
            }
        }
    }
    if !pending.is_empty() {
        return Err(err(pending_line, "clause not terminated by 0"));
    }
    if header.is_none() {
        return Err(err(text.lines().count().max(1), "missing `p cnf` header"));
    }
    f.bitmap = bitmap;
    Ok(f)
}
