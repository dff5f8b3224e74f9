//! CNF formulas with native XOR clauses.
//!
//! Variables are 1-based as in DIMACS. Bitvectors are stored least
//! significant bit first everywhere in this crate.

mod dimacs;
mod encode;

use std::fmt;
use std::ops::Not;

use thiserror::Error;

pub use dimacs::{read_dimacs, write_dimacs, DimacsError};
pub use encode::{tseitin_compile, Bit, Encoder};

/// Upper bound on variables in any formula this crate produces.
pub const MAX_VARS: u32 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("formula would need {0} variables (cap {MAX_VARS})")]
    Capacity(u64),
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    /// Panics on 0; DIMACS variables start at 1.
    pub fn new(index: u32) -> Var {
        assert!(index > 0, "variable indices are 1-based");
        Var(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn pos(self) -> Lit {
        Lit(self.0 as i32)
    }

    pub fn neg(self) -> Lit {
        Lit(-(self.0 as i32))
    }

    /// Literal that is true when the variable takes `value`.
    pub fn lit(self, value: bool) -> Lit {
        if value {
            self.pos()
        } else {
            self.neg()
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Signed DIMACS literal: sign is polarity, magnitude is the variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn from_dimacs(value: i32) -> Option<Lit> {
        (value != 0 && value != i32::MIN).then_some(Lit(value))
    }

    pub fn dimacs(self) -> i32 {
        self.0
    }

    pub fn var(self) -> Var {
        Var(self.0.unsigned_abs())
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Truth value of this literal under a model indexed by `var - 1`.
    pub fn eval(self, model: &[bool]) -> bool {
        model[(self.var().0 - 1) as usize] == self.is_positive()
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parity constraint: XOR of `vars` equals `rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct XorClause {
    pub vars: Vec<Var>,
    pub rhs: bool,
}

impl XorClause {
    /// Sorts the variables and cancels repeated pairs. Returns `None` when
    /// nothing remains, in which case the constraint reduces to `0 = rhs`.
    pub fn normalized(mut vars: Vec<Var>, rhs: bool) -> Option<XorClause> {
        vars.sort_unstable();
        let mut out: Vec<Var> = Vec::with_capacity(vars.len());
        for v in vars {
            if out.last() == Some(&v) {
                out.pop();
            } else {
                out.push(v);
            }
        }
        (!out.is_empty()).then_some(XorClause { vars: out, rhs })
    }

    pub fn is_satisfied(&self, model: &[bool]) -> bool {
        let parity = self.vars.iter().fold(false, |acc, v| acc ^ model[(v.0 - 1) as usize]);
        parity == self.rhs
    }
}

/// Where the circuit's inputs and output live in a compiled formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitMap {
    pub chosen: Vec<Var>,
    pub target: Vec<Var>,
    pub output: Vec<Var>,
}

impl BitMap {
    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty() && self.target.is_empty() && self.output.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    pub xors: Vec<XorClause>,
    pub bitmap: BitMap,
}

impl CnfFormula {
    pub fn new(num_vars: u32) -> Self {
        CnfFormula {
            num_vars,
            ..Default::default()
        }
    }

    pub fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        Var(self.num_vars)
    }

    /// Allocates `n` consecutive fresh variables.
    pub fn new_vars(&mut self, n: u32) -> Vec<Var> {
        (0..n).map(|_| self.new_var()).collect()
    }

    pub fn add_clause(&mut self, lits: impl Into<Vec<Lit>>) {
        let lits = lits.into();
        debug_assert!(lits.iter().all(|l| l.var().0 <= self.num_vars));
        self.clauses.push(lits);
    }

    /// Adds a parity constraint; an empty one becomes the empty clause when
    /// `rhs` is true and vanishes otherwise.
    pub fn add_xor(&mut self, vars: Vec<Var>, rhs: bool) {
        match XorClause::normalized(vars, rhs) {
            Some(x) => self.xors.push(x),
            None if rhs => self.clauses.push(Vec::new()),
            None => {}
        }
    }

    /// Fixes a bitvector (LSB first) to a concrete value.
    pub fn assert_value(&mut self, vars: &[Var], value: &num_bigint::BigUint) {
        for (i, v) in vars.iter().enumerate() {
            self.clauses.push(vec![v.lit(value.bit(i as u64))]);
        }
    }

    /// Adds the clause that excludes this assignment of `vars`.
    pub fn block(&mut self, vars: &[Var], values: &[bool]) {
        self.clauses
            .push(vars.iter().zip(values).map(|(v, &b)| v.lit(!b)).collect());
    }

    /// Direct clause-by-clause check of a total assignment (`model[v-1]`).
    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        model.len() >= self.num_vars as usize
            && self.clauses.iter().all(|c| c.iter().any(|l| l.eval(model)))
            && self.xors.iter().all(|x| x.is_satisfied(model))
    }

    pub fn check_capacity(&self) -> Result<(), CnfError> {
        if self.num_vars > MAX_VARS {
            Err(CnfError::Capacity(self.num_vars as u64))
        } else {
            Ok(())
        }
    }

    /// Replaces every XOR clause by plain clauses, chaining through fresh
    /// variables in 3-variable chunks so the expansion stays linear.
    pub fn blast_xors(&self) -> CnfFormula {
        let mut out = CnfFormula {
            num_vars: self.num_vars,
            clauses: self.clauses.clone(),
            xors: Vec::new(),
            bitmap: self.bitmap.clone(),
        };
        for x in &self.xors {
            let vars = &x.vars;
            if vars.len() <= 3 {
                expand_small_xor(&mut out.clauses, vars, x.rhs);
                continue;
            }
            let mut acc = vars[0];
            for &v in &vars[1..vars.len() - 2] {
                let t = out.new_var();
                expand_small_xor(&mut out.clauses, &[acc, v, t], false);
                acc = t;
            }
            let n = vars.len();
            expand_small_xor(&mut out.clauses, &[acc, vars[n - 2], vars[n - 1]], x.rhs);
        }
        out
    }
}

fn expand_small_xor(clauses: &mut Vec<Vec<Lit>>, vars: &[Var], rhs: bool) {
    let k = vars.len();
    for mask in 0u32..(1 << k) {
        let parity = mask.count_ones() % 2 == 1;
        if parity == rhs {
            continue;
        }
        // forbid the assignment encoded by `mask`
        clauses.push(
            vars.iter()
                .enumerate()
                .map(|(j, v)| v.lit(mask & (1 << j) == 0))
                .collect(),
        );
    }
}

/// Model-independent bookkeeping shared by blocking loops: the values of
/// `vars` under `model`.
pub fn project(model: &[bool], vars: &[Var]) -> Vec<bool> {
    vars.iter().map(|v| model[(v.index() - 1) as usize]).collect()
}

/// Interprets LSB-first bits as an unsigned integer.
pub fn bits_to_biguint(bits: &[bool]) -> num_bigint::BigUint {
    let mut out = num_bigint::BigUint::default();
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out.set_bit(i as u64, true);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_models(f: &CnfFormula) -> Vec<Vec<bool>> {
        let n = f.num_vars as usize;
        (0u64..1 << n)
            .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect::<Vec<bool>>())
            .filter(|m| f.is_satisfied_by(m))
            .collect()
    }

    fn projected_count(f: &CnfFormula, vars: &[Var]) -> usize {
        let mut seen: Vec<Vec<bool>> = all_models(f).iter().map(|m| project(m, vars)).collect();
        seen.sort();
        seen.dedup();
        seen.len()
    }

    #[test]
    fn blast_without_xors_is_identity() {
        let mut f = CnfFormula::new(3);
        f.add_clause(vec![Var::new(1).pos(), Var::new(2).neg()]);
        assert_eq!(f.blast_xors(), f);
    }

    #[test]
    fn blast_single_var_xor_is_unit() {
        let mut f = CnfFormula::new(1);
        f.add_xor(vec![Var::new(1)], true);
        let b = f.blast_xors();
        assert_eq!(b.clauses, vec![vec![Var::new(1).pos()]]);
        assert!(b.xors.is_empty());
    }

    #[test]
    fn blast_three_var_xor_is_four_clauses() {
        let mut f = CnfFormula::new(3);
        f.add_xor(vec![Var::new(1), Var::new(2), Var::new(3)], false);
        let b = f.blast_xors();
        assert_eq!(b.clauses.len(), 4);
        assert_eq!(b.num_vars, 3);
    }

    #[test]
    fn blast_preserves_projected_counts() {
        for n in 1..=7u32 {
            for rhs in [false, true] {
                let mut f = CnfFormula::new(n);
                f.add_xor((1..=n).map(Var::new).collect(), rhs);
                if n >= 2 {
                    f.add_clause(vec![Var::new(1).pos(), Var::new(2).pos()]);
                }
                let b = f.blast_xors();
                let orig: Vec<Var> = (1..=n).map(Var::new).collect();
                assert_eq!(projected_count(&f, &orig), projected_count(&b, &orig));
                // aux variables are functionally determined
                assert_eq!(all_models(&b).len(), projected_count(&b, &orig));
            }
        }
    }

    #[test]
    fn xor_normalization_cancels_pairs() {
        let v = |i| Var::new(i);
        let x = XorClause::normalized(vec![v(3), v(1), v(3), v(2)], true).unwrap();
        assert_eq!(x.vars, vec![v(1), v(2)]);
        assert!(XorClause::normalized(vec![v(4), v(4)], true).is_none());
    }
}
