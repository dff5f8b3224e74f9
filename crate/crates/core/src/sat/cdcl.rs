//! Conflict-driven clause learning with native XOR rows.
//!
//! Clauses use two watched literals. XOR rows use two watched variables:
//! when every other variable of a row is assigned, the last one is implied
//! (or the row conflicts). The reason clause for an XOR implication is built
//! on demand during conflict analysis from the current assignment.

use std::ops::Not;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gauss;
use crate::cnf::{CnfFormula, Lit, Var, XorClause};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct L(u32);

impl L {
    fn new(var: usize, negated: bool) -> L {
        L((var as u32) << 1 | negated as u32)
    }
    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }
    fn idx(self) -> usize {
        self.0 as usize
    }
    fn from_lit(l: Lit) -> L {
        L::new(l.var().index() as usize - 1, !l.is_positive())
    }
}

impl Not for L {
    type Output = L;
    fn not(self) -> L {
        L(self.0 ^ 1)
    }
}

const FALSE: u8 = 0;
const TRUE: u8 = 1;
const UNDEF: u8 = 2;

#[inline]
fn lit_value(assigns: &[u8], l: L) -> u8 {
    let a = assigns[l.var()];
    if a == UNDEF {
        UNDEF
    } else {
        a ^ (l.0 & 1) as u8
    }
}

#[derive(Clone, Copy, Debug)]
enum Reason {
    Decision,
    Clause(u32),
    Xor(u32),
}

#[derive(Clone, Copy, Debug)]
enum Conflict {
    Clause(u32),
    Xor(u32),
}

#[derive(Clone, Copy)]
struct Watch {
    cref: u32,
    blocker: L,
}

struct Clause {
    lits: Vec<L>,
    learnt: bool,
    lbd: u32,
    activity: f32,
}

struct XorRow {
    vars: Vec<u32>,
    rhs: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Stats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

/// Indexed binary max-heap over variable activities.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<i32>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, -1);
    }
    fn contains(&self, v: usize) -> bool {
        self.pos[v] >= 0
    }
    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if act[p as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = i as i32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }
    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i as i32;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }
    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v as u32);
        let i = self.heap.len() - 1;
        self.pos[v] = i as i32;
        self.up(i, act);
    }
    fn bumped(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v] as usize, act);
        }
    }
    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top as usize)
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let (mut size, mut seq) = (1u64, 0i32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

pub struct Solver {
    ok: bool,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Reason>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    heap: VarHeap,
    var_inc: f64,
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watch>>,
    xors: Vec<XorRow>,
    xwatches: Vec<Vec<u32>>,
    trail: Vec<L>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    num_learnts: usize,
    max_learnts: f64,
    cla_inc: f32,
    rng: ChaCha8Rng,
    model: Vec<bool>,
    pub stats: Stats,
}

impl Solver {
    pub fn new(seed: u64) -> Solver {
        Solver {
            ok: true,
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            polarity: Vec::new(),
            activity: Vec::new(),
            heap: VarHeap::default(),
            var_inc: 1.0,
            clauses: Vec::new(),
            watches: Vec::new(),
            xors: Vec::new(),
            xwatches: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            num_learnts: 0,
            max_learnts: 2000.0,
            cla_inc: 1.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            model: Vec::new(),
            stats: Stats::default(),
        }
    }

    /// Loads a formula, reducing its long XOR rows by Gaussian elimination.
    pub fn from_formula(f: &CnfFormula, seed: u64) -> Solver {
        let mut s = Solver::new(seed);
        s.ensure_vars(f.num_vars as usize);
        for c in &f.clauses {
            if !s.add_clause(c) {
                return s;
            }
        }
        match gauss::eliminate(&f.xors) {
            Ok(rows) => {
                for r in rows {
                    if !s.add_xor(&r.vars, r.rhs) {
                        return s;
                    }
                }
            }
            Err(gauss::Inconsistent) => s.ok = false,
        }
        s.max_learnts = (s.clauses.len() as f64 / 3.0).max(2000.0);
        s
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn is_ok(&self) -> bool {
        self.ok
    }

    fn ensure_vars(&mut self, n: usize) {
        while self.assigns.len() < n {
            let v = self.assigns.len();
            self.assigns.push(UNDEF);
            self.level.push(0);
            self.reason.push(Reason::Decision);
            self.polarity.push(false);
            // tiny seeded perturbation so the seed steers tie-breaking
            self.activity.push(self.rng.gen::<f64>() * 1e-5);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.xwatches.push(Vec::new());
            self.seen.push(false);
            self.heap.grow(v + 1);
            self.heap.insert(v, &self.activity);
        }
    }

    pub fn new_var(&mut self) -> Var {
        let n = self.num_vars() + 1;
        self.ensure_vars(n);
        Var::new(n as u32)
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: L, why: Reason) {
        let v = l.var();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = (!l.0 & 1) as u8;
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = why;
        self.trail.push(l);
    }

    /// Adds a clause at the root. Returns false once the solver is UNSAT.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let max_var = lits.iter().map(|l| l.var().index() as usize).max().unwrap_or(0);
        self.ensure_vars(max_var);
        let mut ls: Vec<L> = lits.iter().map(|&l| L::from_lit(l)).collect();
        ls.sort_unstable_by_key(|l| l.0);
        ls.dedup();
        let mut out = Vec::with_capacity(ls.len());
        for (i, &l) in ls.iter().enumerate() {
            if i + 1 < ls.len() && ls[i + 1] == !l {
                return true; // tautology
            }
            match lit_value(&self.assigns, l) {
                TRUE => return true,
                FALSE => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], Reason::Decision);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(out, false, 0);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<L>, learnt: bool, lbd: u32) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].idx()].push(Watch { cref, blocker: lits[1] });
        self.watches[lits[1].idx()].push(Watch { cref, blocker: lits[0] });
        if learnt {
            self.num_learnts += 1;
        }
        self.clauses.push(Clause {
            lits,
            learnt,
            lbd,
            activity: 0.0,
        });
        cref
    }

    /// Adds a parity row at the root. Returns false once the solver is UNSAT.
    pub fn add_xor(&mut self, vars: &[Var], rhs: bool) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let Some(row) = XorClause::normalized(vars.to_vec(), rhs) else {
            if rhs {
                self.ok = false;
            }
            return self.ok;
        };
        let max_var = row.vars.last().unwrap().index() as usize;
        self.ensure_vars(max_var);
        let mut rhs = row.rhs;
        let mut free = Vec::with_capacity(row.vars.len());
        for v in row.vars {
            let i = v.index() as usize - 1;
            match self.assigns[i] {
                UNDEF => free.push(i as u32),
                a => rhs ^= a == TRUE,
            }
        }
        match free.len() {
            0 => {
                if rhs {
                    self.ok = false;
                }
            }
            1 => {
                self.enqueue(L::new(free[0] as usize, !rhs), Reason::Decision);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let r = self.xors.len() as u32;
                self.xwatches[free[0] as usize].push(r);
                self.xwatches[free[1] as usize].push(r);
                self.xors.push(XorRow { vars: free, rhs });
            }
        }
        self.ok
    }

    fn propagate(&mut self) -> Option<Conflict> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;

            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.idx()]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if lit_value(&self.assigns, w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let c = &mut self.clauses[w.cref as usize];
                if c.lits[0] == false_lit {
                    c.lits.swap(0, 1);
                }
                let first = c.lits[0];
                let nw = Watch {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && lit_value(&self.assigns, first) == TRUE {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.lits.len() {
                    if lit_value(&self.assigns, c.lits[k]) != FALSE {
                        c.lits.swap(1, k);
                        self.watches[c.lits[1].idx()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if lit_value(&self.assigns, first) == FALSE {
                    conflict = Some(Conflict::Clause(w.cref));
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, Reason::Clause(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.idx()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }

            let v = p.var() as u32;
            let mut xs = std::mem::take(&mut self.xwatches[v as usize]);
            let (mut i, mut j) = (0, 0);
            while i < xs.len() {
                let r = xs[i];
                i += 1;
                let row = &mut self.xors[r as usize];
                if row.vars[0] == v {
                    row.vars.swap(0, 1);
                }
                let mut moved = false;
                for k in 2..row.vars.len() {
                    if self.assigns[row.vars[k] as usize] == UNDEF {
                        row.vars.swap(1, k);
                        self.xwatches[row.vars[1] as usize].push(r);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                xs[j] = r;
                j += 1;
                let other = row.vars[0] as usize;
                let mut parity = row.rhs;
                for &u in &row.vars[1..] {
                    parity ^= self.assigns[u as usize] == TRUE;
                }
                match self.assigns[other] {
                    UNDEF => self.enqueue(L::new(other, !parity), Reason::Xor(r)),
                    a if (a == TRUE) != parity => {
                        conflict = Some(Conflict::Xor(r));
                        while i < xs.len() {
                            xs[j] = xs[i];
                            i += 1;
                            j += 1;
                        }
                    }
                    _ => {}
                }
            }
            xs.truncate(j);
            self.xwatches[v as usize] = xs;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    /// The literal currently false for variable `u`.
    fn false_lit_of(&self, u: usize) -> L {
        L::new(u, self.assigns[u] == TRUE)
    }

    /// Literals of the reason for `p` other than `p` itself (all false).
    fn reason_lits(&mut self, p: L, out: &mut Vec<L>) {
        out.clear();
        match self.reason[p.var()] {
            Reason::Decision => {}
            Reason::Clause(c) => {
                let cl = &mut self.clauses[c as usize];
                if cl.learnt {
                    cl.activity += self.cla_inc;
                }
                out.extend_from_slice(&self.clauses[c as usize].lits[1..]);
            }
            Reason::Xor(r) => {
                for k in 0..self.xors[r as usize].vars.len() {
                    let u = self.xors[r as usize].vars[k] as usize;
                    if u != p.var() {
                        out.push(self.false_lit_of(u));
                    }
                }
            }
        }
    }

    fn conflict_lits(&mut self, c: Conflict, out: &mut Vec<L>) {
        out.clear();
        match c {
            Conflict::Clause(c) => {
                let cl = &mut self.clauses[c as usize];
                if cl.learnt {
                    cl.activity += self.cla_inc;
                }
                out.extend_from_slice(&self.clauses[c as usize].lits);
            }
            Conflict::Xor(r) => {
                for k in 0..self.xors[r as usize].vars.len() {
                    let u = self.xors[r as usize].vars[k] as usize;
                    out.push(self.false_lit_of(u));
                }
            }
        }
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn analyze(&mut self, confl: Conflict) -> (Vec<L>, usize, u32) {
        let mut learnt = vec![L(0)];
        let mut path = 0usize;
        let mut index = self.trail.len();
        let mut lits = Vec::new();
        let dl = self.decision_level() as u32;
        self.conflict_lits(confl, &mut lits);
        let p = loop {
            for &q in &lits {
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let pl = self.trail[index];
            self.seen[pl.var()] = false;
            path -= 1;
            if path == 0 {
                break pl;
            }
            self.reason_lits(pl, &mut lits);
        };
        learnt[0] = !p;

        // drop literals implied by the rest of the clause
        let mut keep = vec![learnt[0]];
        let mut scratch = Vec::new();
        for &q in &learnt[1..] {
            let redundant = match self.reason[q.var()] {
                Reason::Decision => false,
                _ => {
                    self.reason_lits(!q, &mut scratch);
                    scratch.iter().all(|r| self.seen[r.var()] || self.level[r.var()] == 0)
                }
            };
            if !redundant {
                keep.push(q);
            }
        }
        for &q in &learnt[1..] {
            self.seen[q.var()] = false;
        }
        let mut learnt = keep;

        let bt = if learnt.len() == 1 {
            0
        } else {
            let (mut best, mut lvl) = (1, self.level[learnt[1].var()]);
            for k in 2..learnt.len() {
                let l = self.level[learnt[k].var()];
                if l > lvl {
                    best = k;
                    lvl = l;
                }
            }
            learnt.swap(1, best);
            lvl as usize
        };
        let mut levels: Vec<u32> = learnt.iter().map(|l| self.level[l.var()]).collect();
        levels.sort_unstable();
        levels.dedup();
        (learnt, bt, levels.len() as u32)
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let start = self.trail_lim[lvl];
        for i in (start..self.trail.len()).rev() {
            let v = self.trail[i].var();
            self.polarity[v] = self.assigns[v] == TRUE;
            self.assigns[v] = UNDEF;
            self.reason[v] = Reason::Decision;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(lvl);
        self.qhead = self.trail.len();
    }

    fn pick_branch(&mut self) -> Option<L> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(L::new(v, !self.polarity[v]));
            }
        }
        None
    }

    /// Drops the less useful half of the learnt clauses. Only called at the
    /// root, where no clause is locked as a reason that analysis could read.
    fn reduce_db(&mut self) {
        debug_assert_eq!(self.decision_level(), 0);
        let mut learnt: Vec<usize> = (0..self.clauses.len()).filter(|&i| self.clauses[i].learnt).collect();
        learnt.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a], &self.clauses[b]);
            ca.lbd.cmp(&cb.lbd).then(cb.activity.partial_cmp(&ca.activity).unwrap())
        });
        let mut drop = vec![false; self.clauses.len()];
        for &i in &learnt[learnt.len() / 2..] {
            if self.clauses[i].lbd > 2 {
                drop[i] = true;
            }
        }
        let old = std::mem::take(&mut self.clauses);
        for w in self.watches.iter_mut() {
            w.clear();
        }
        self.num_learnts = 0;
        for (i, c) in old.into_iter().enumerate() {
            if !drop[i] {
                self.attach(c.lits, c.learnt, c.lbd);
            }
        }
        for r in self.reason.iter_mut() {
            *r = Reason::Decision;
        }
    }

    fn search(&mut self, budget: u64, assumptions: &[L], deadline: Option<Instant>) -> Option<Status> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(Status::Unsat);
                }
                let (learnt, bt, lbd) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], Reason::Decision);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true, lbd);
                    self.enqueue(first, Reason::Clause(cref));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if self.cla_inc > 1e20 {
                    for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                        c.activity *= 1e-20;
                    }
                    self.cla_inc *= 1e-20;
                }
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return Some(Status::Unknown);
                    }
                }
            } else {
                if conflicts >= budget {
                    self.cancel_until(0);
                    return None;
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let a = assumptions[self.decision_level()];
                    match lit_value(&self.assigns, a) {
                        TRUE => self.trail_lim.push(self.trail.len()),
                        FALSE => return Some(Status::Unsat),
                        _ => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(a) => a,
                    None => {
                        self.stats.decisions += 1;
                        if self.stats.decisions.is_multiple_of(1024) {
                            if let Some(d) = deadline {
                                if Instant::now() >= d {
                                    return Some(Status::Unknown);
                                }
                            }
                        }
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return Some(Status::Sat),
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, Reason::Decision);
            }
        }
    }

    /// Solves under assumptions. After `Sat`, [`Solver::model`] holds a
    /// total assignment. `Unsat` under non-empty assumptions leaves the
    /// solver usable.
    pub fn solve(&mut self, assumptions: &[Lit], deadline: Option<Instant>) -> Status {
        if !self.ok {
            return Status::Unsat;
        }
        let max_var = assumptions.iter().map(|l| l.var().index() as usize).max().unwrap_or(0);
        self.ensure_vars(max_var);
        let assumps: Vec<L> = assumptions.iter().map(|&l| L::from_lit(l)).collect();
        let mut restarts = 0;
        let status = loop {
            if self.num_learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                self.reduce_db();
                self.max_learnts *= 1.1;
            }
            let budget = (luby(2.0, restarts) * 100.0) as u64;
            match self.search(budget, &assumps, deadline) {
                Some(s) => break s,
                None => {
                    restarts += 1;
                    self.stats.restarts += 1;
                }
            }
        };
        if status == Status::Sat {
            self.model = self.assigns.iter().map(|&a| a == TRUE).collect();
        }
        self.cancel_until(0);
        status
    }

    /// Model from the last `Sat` answer, indexed by `var - 1`.
    pub fn model(&self) -> &[bool] {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> Var {
        Var::new(i)
    }

    #[test]
    fn luby_sequence() {
        let seq: Vec<u64> = (0..10).map(|i| luby(2.0, i) as u64).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2]);
    }

    #[test]
    fn unit_contradiction() {
        let mut s = Solver::new(0);
        s.add_clause(&[v(1).pos()]);
        s.add_clause(&[v(1).neg()]);
        assert_eq!(s.solve(&[], None), Status::Unsat);
    }

    #[test]
    fn pigeonhole_four_in_three_is_unsat() {
        let mut s = Solver::new(1);
        let var = |p: u32, h: u32| v(p * 3 + h + 1);
        for p in 0..4 {
            s.add_clause(&[var(p, 0).pos(), var(p, 1).pos(), var(p, 2).pos()]);
        }
        for h in 0..3 {
            for a in 0..4 {
                for b in a + 1..4 {
                    s.add_clause(&[var(a, h).neg(), var(b, h).neg()]);
                }
            }
        }
        assert_eq!(s.solve(&[], None), Status::Unsat);
    }

    #[test]
    fn assumptions_do_not_stick() {
        let mut s = Solver::new(0);
        s.add_clause(&[v(1).pos(), v(2).pos()]);
        assert_eq!(s.solve(&[v(1).neg(), v(2).neg()], None), Status::Unsat);
        assert_eq!(s.solve(&[v(1).neg()], None), Status::Sat);
        assert!(s.model()[1]);
    }

    #[test]
    fn xor_chain_parity() {
        // x1 ^ x2 = 1, x2 ^ x3 = 1, x1 ^ x3 = 1 has no solution
        let mut s = Solver::new(0);
        s.add_xor(&[v(1), v(2)], true);
        s.add_xor(&[v(2), v(3)], true);
        s.add_xor(&[v(1), v(3)], true);
        assert_eq!(s.solve(&[], None), Status::Unsat);

        let mut s = Solver::new(0);
        s.add_xor(&[v(1), v(2), v(3), v(4)], true);
        s.add_clause(&[v(1).pos()]);
        s.add_clause(&[v(2).pos()]);
        s.add_clause(&[v(3).neg()]);
        assert_eq!(s.solve(&[], None), Status::Sat);
        assert!(s.model()[3]);
    }
}
