//! Minimal DPLL solver for extended DIMACS (clauses plus `x` lines).
//!
//! Shares no search code with the built-in CDCL engine, so the two can be
//! checked against each other. Usage: `refsat <file.cnf>`. Exit code 10 on
//! SAT, 20 on UNSAT, 1 on error.

use std::process::ExitCode;

use mcfil::cnf::read_dimacs;

struct Problem {
    clauses: Vec<Vec<i32>>,
    xors: Vec<(Vec<usize>, bool)>,
    clause_occ: Vec<Vec<usize>>,
    xor_occ: Vec<Vec<usize>>,
}

/// 0 = unassigned, 1 = true, -1 = false
type Assign = Vec<i8>;

fn lit_val(a: &Assign, l: i32) -> i8 {
    let v = a[l.unsigned_abs() as usize];
    if l > 0 {
        v
    } else {
        -v
    }
}

fn propagate(p: &Problem, a: &mut Assign, trail: &mut Vec<usize>, mut head: usize) -> bool {
    while head < trail.len() {
        let v = trail[head];
        head += 1;
        for &ci in &p.clause_occ[v] {
            let mut unassigned = None;
            let mut open = 0;
            let mut sat = false;
            for &l in &p.clauses[ci] {
                match lit_val(a, l) {
                    1 => {
                        sat = true;
                        break;
                    }
                    0 => {
                        open += 1;
                        unassigned = Some(l);
                    }
                    _ => {}
                }
            }
            if sat {
                continue;
            }
            match open {
                0 => return false,
                1 => {
                    let l = unassigned.unwrap();
                    a[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
                    trail.push(l.unsigned_abs() as usize);
                }
                _ => {}
            }
        }
        for &xi in &p.xor_occ[v] {
            let (vars, rhs) = &p.xors[xi];
            let mut parity = *rhs;
            let mut open = Vec::new();
            for &u in vars {
                match a[u] {
                    0 => open.push(u),
                    1 => parity = !parity,
                    _ => {}
                }
            }
            match open.len() {
                0 if parity => return false,
                1 => {
                    a[open[0]] = if parity { 1 } else { -1 };
                    trail.push(open[0]);
                }
                _ => {}
            }
        }
    }
    true
}

fn solve(p: &Problem, n: usize) -> Option<Assign> {
    let mut a: Assign = vec![0; n + 1];
    let mut trail: Vec<usize> = Vec::new();
    // units and unit-length xors
    for c in &p.clauses {
        if c.is_empty() {
            return None;
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    for c in &p.clauses {
        if c.len() == 1 {
            let l = c[0];
            let want = if l > 0 { 1 } else { -1 };
            let v = l.unsigned_abs() as usize;
            if a[v] == -want {
                return None;
            }
            if a[v] == 0 {
                a[v] = want;
                trail.push(v);
            }
        }
    }
    for (vars, rhs) in &p.xors {
        if vars.len() == 1 {
            let want = if *rhs { 1 } else { -1 };
            if a[vars[0]] == -want {
                return None;
            }
            if a[vars[0]] == 0 {
                a[vars[0]] = want;
                trail.push(vars[0]);
            }
        }
    }
    roots.extend(trail.iter().copied());
    if !propagate(p, &mut a, &mut trail, 0) {
        return None;
    }
    // each frame: (decision var, trail length before deciding, flipped yet)
    let mut stack: Vec<(usize, usize, bool)> = Vec::new();
    loop {
        let Some(v) = (1..=n).find(|&v| a[v] == 0) else {
            return Some(a);
        };
        let mark = trail.len();
        a[v] = -1;
        trail.push(v);
        stack.push((v, mark, false));
        let mut ok = propagate(p, &mut a, &mut trail, mark);
        while !ok {
            loop {
                let (dv, dmark, flipped) = stack.pop()?;
                for &u in &trail[dmark..] {
                    a[u] = 0;
                }
                trail.truncate(dmark);
                if !flipped {
                    a[dv] = 1;
                    trail.push(dv);
                    stack.push((dv, dmark, true));
                    ok = propagate(p, &mut a, &mut trail, dmark);
                    break;
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let Some(path) = std::env::args().nth(1) else {
        eprintln!("usage: refsat <file.cnf>");
        return ExitCode::from(1);
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("refsat: {path}: {e}");
            return ExitCode::from(1);
        }
    };
    let f = match read_dimacs(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("refsat: {e}");
            return ExitCode::from(1);
        }
    };
    let n = f.num_vars as usize;
    let clauses: Vec<Vec<i32>> = f
        .clauses
        .iter()
        .map(|c| c.iter().map(|l| l.dimacs()).collect())
        .collect();
    let xors: Vec<(Vec<usize>, bool)> = f
        .xors
        .iter()
        .map(|x| (x.vars.iter().map(|v| v.index() as usize).collect(), x.rhs))
        .collect();
    let mut clause_occ = vec![Vec::new(); n + 1];
    for (i, c) in clauses.iter().enumerate() {
        for l in c {
            clause_occ[l.unsigned_abs() as usize].push(i);
        }
    }
    let mut xor_occ = vec![Vec::new(); n + 1];
    for (i, (vars, _)) in xors.iter().enumerate() {
        for &v in vars {
            xor_occ[v].push(i);
        }
    }
    for o in clause_occ.iter_mut() {
        o.dedup();
    }
    let p = Problem {
        clauses,
        xors,
        clause_occ,
        xor_occ,
    };
    match solve(&p, n) {
        Some(a) => {
            println!("s SATISFIABLE");
            let vals: Vec<String> = (1..=n)
                .map(|v| if a[v] > 0 { v.to_string() } else { format!("-{v}") })
                .collect();
            println!("v {} 0", vals.join(" "));
            ExitCode::from(10)
        }
        None => {
            println!("s UNSATISFIABLE");
            ExitCode::from(20)
        }
    }
}
