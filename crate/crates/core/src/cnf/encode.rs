//! Tseitin encoding of bitvector circuits.
//!
//! Every gate output gets a fresh variable constrained to be equivalent to
//! the gate function of its inputs, so each input assignment has exactly one
//! extension to the auxiliary variables. Constants are folded eagerly, which
//! keeps history constraints (circuit instances with a concrete `chosen`)
//! small.

use std::collections::HashMap;
use std::ops::Not;

use num_bigint::BigUint;

use super::{CnfError, CnfFormula, Lit, Var};
use crate::circuit::{Circuit, InputRole, Op};

/// A circuit bit: either a known constant or a literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bit {
    Const(bool),
    Lit(Lit),
}

impl Not for Bit {
    type Output = Bit;
    fn not(self) -> Bit {
        match self {
            Bit::Const(b) => Bit::Const(!b),
            Bit::Lit(l) => Bit::Lit(!l),
        }
    }
}

impl From<Lit> for Bit {
    fn from(l: Lit) -> Bit {
        Bit::Lit(l)
    }
}

impl Bit {
    pub fn from_var(v: Var) -> Bit {
        Bit::Lit(v.pos())
    }

    pub fn constants(value: &BigUint, width: u32) -> Vec<Bit> {
        (0..width).map(|i| Bit::Const(value.bit(i as u64))).collect()
    }

    pub fn vars(vars: &[Var]) -> Vec<Bit> {
        vars.iter().map(|&v| Bit::from_var(v)).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum GateKind {
    And,
    Xor,
    Maj,
    Ite,
}

/// Gate-level CNF emitter writing into a borrowed formula.
pub struct Encoder<'f> {
    formula: &'f mut CnfFormula,
    cache: HashMap<(GateKind, Vec<Lit>), Lit>,
}

impl<'f> Encoder<'f> {
    pub fn new(formula: &'f mut CnfFormula) -> Self {
        Encoder {
            formula,
            cache: HashMap::new(),
        }
    }

    pub fn formula(&mut self) -> &mut CnfFormula {
        self.formula
    }

    fn fresh(&mut self) -> Lit {
        self.formula.new_var().pos()
    }

    /// Forces a bit to hold.
    pub fn assert_true(&mut self, b: Bit) {
        match b {
            Bit::Const(true) => {}
            Bit::Const(false) => self.formula.clauses.push(Vec::new()),
            Bit::Lit(l) => self.formula.clauses.push(vec![l]),
        }
    }

    /// Forces a bitvector to equal a constant.
    pub fn assert_value(&mut self, bits: &[Bit], value: &BigUint) {
        for (i, &b) in bits.iter().enumerate() {
            let want = value.bit(i as u64);
            self.assert_true(if want { b } else { !b });
        }
    }

    /// Clause requiring at least one of `bits` to hold.
    pub fn assert_any(&mut self, bits: &[Bit]) {
        if bits.contains(&Bit::Const(true)) {
            return;
        }
        let lits: Vec<Lit> = bits
            .iter()
            .filter_map(|b| match b {
                Bit::Lit(l) => Some(*l),
                Bit::Const(_) => None,
            })
            .collect();
        self.formula.clauses.push(lits);
    }

    pub fn and(&mut self, bits: &[Bit]) -> Bit {
        let mut lits: Vec<Lit> = Vec::with_capacity(bits.len());
        for &b in bits {
            match b {
                Bit::Const(false) => return Bit::Const(false),
                Bit::Const(true) => {}
                Bit::Lit(l) => lits.push(l),
            }
        }
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|p| p[0] == !p[1]) || has_complement(&lits) {
            return Bit::Const(false);
        }
        match lits.len() {
            0 => Bit::Const(true),
            1 => Bit::Lit(lits[0]),
            _ => {
                let key = (GateKind::And, lits.clone());
                if let Some(&y) = self.cache.get(&key) {
                    return Bit::Lit(y);
                }
                let y = self.fresh();
                for &l in &lits {
                    self.formula.clauses.push(vec![!y, l]);
                }
                let mut long: Vec<Lit> = lits.iter().map(|&l| !l).collect();
                long.push(y);
                self.formula.clauses.push(long);
                self.cache.insert(key, y);
                Bit::Lit(y)
            }
        }
    }

    pub fn or(&mut self, bits: &[Bit]) -> Bit {
        let neg: Vec<Bit> = bits.iter().map(|&b| !b).collect();
        !self.and(&neg)
    }

    pub fn xor(&mut self, bits: &[Bit]) -> Bit {
        let mut parity = false;
        let mut vars: Vec<Var> = Vec::with_capacity(bits.len());
        for &b in bits {
            match b {
                Bit::Const(c) => parity ^= c,
                Bit::Lit(l) => {
                    parity ^= !l.is_positive();
                    vars.push(l.var());
                }
            }
        }
        vars.sort_unstable();
        let mut uniq: Vec<Var> = Vec::with_capacity(vars.len());
        for v in vars {
            if uniq.last() == Some(&v) {
                uniq.pop();
            } else {
                uniq.push(v);
            }
        }
        let base = match uniq.len() {
            0 => return Bit::Const(parity),
            1 => uniq[0].pos(),
            _ => {
                let key = (GateKind::Xor, uniq.iter().map(|v| v.pos()).collect());
                match self.cache.get(&key) {
                    Some(&y) => y,
                    None => {
                        let y = self.fresh();
                        let mut all = uniq.clone();
                        all.push(y.var());
                        self.formula.add_xor(all, false);
                        self.cache.insert(key, y);
                        y
                    }
                }
            }
        };
        Bit::Lit(if parity { !base } else { base })
    }

    /// Majority of three bits (the carry of a full adder).
    pub fn maj(&mut self, a: Bit, b: Bit, c: Bit) -> Bit {
        let mut lits = Vec::with_capacity(3);
        let mut consts = Vec::new();
        for x in [a, b, c] {
            match x {
                Bit::Const(v) => consts.push(v),
                Bit::Lit(l) => lits.push(l),
            }
        }
        match consts.len() {
            3 => return Bit::Const(consts.iter().filter(|&&v| v).count() >= 2),
            2 => {
                return if consts[0] == consts[1] {
                    Bit::Const(consts[0])
                } else {
                    Bit::Lit(lits[0])
                }
            }
            1 => {
                let (x, y) = (Bit::Lit(lits[0]), Bit::Lit(lits[1]));
                return if consts[0] { self.or(&[x, y]) } else { self.and(&[x, y]) };
            }
            _ => {}
        }
        lits.sort_unstable();
        if lits[0] == lits[1] || lits[1] == lits[2] {
            return Bit::Lit(lits[1]);
        }
        if lits[0] == !lits[1] {
            return Bit::Lit(lits[2]);
        }
        if lits[1] == !lits[2] {
            return Bit::Lit(lits[0]);
        }
        if lits[0] == !lits[2] {
            return Bit::Lit(lits[1]);
        }
        let key = (GateKind::Maj, lits.clone());
        if let Some(&y) = self.cache.get(&key) {
            return Bit::Lit(y);
        }
        let y = self.fresh();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            self.formula.clauses.push(vec![!lits[i], !lits[j], y]);
            self.formula.clauses.push(vec![lits[i], lits[j], !y]);
        }
        self.cache.insert(key, y);
        Bit::Lit(y)
    }

    /// `sel ? a : b`
    pub fn ite(&mut self, sel: Bit, a: Bit, b: Bit) -> Bit {
        match sel {
            Bit::Const(true) => return a,
            Bit::Const(false) => return b,
            Bit::Lit(_) => {}
        }
        if a == b {
            return a;
        }
        match (a, b) {
            (Bit::Const(true), _) => return self.or(&[sel, b]),
            (Bit::Const(false), _) => return self.and(&[!sel, b]),
            (_, Bit::Const(true)) => return self.or(&[!sel, a]),
            (_, Bit::Const(false)) => return self.and(&[sel, a]),
            _ => {}
        }
        let (Bit::Lit(s), Bit::Lit(x), Bit::Lit(z)) = (sel, a, b) else {
            unreachable!()
        };
        if x == !z {
            return self.xor(&[sel, b]);
        }
        let key = (GateKind::Ite, vec![s, x, z]);
        if let Some(&y) = self.cache.get(&key) {
            return Bit::Lit(y);
        }
        let y = self.fresh();
        self.formula.clauses.push(vec![!s, !x, y]);
        self.formula.clauses.push(vec![!s, x, !y]);
        self.formula.clauses.push(vec![s, !z, y]);
        self.formula.clauses.push(vec![s, z, !y]);
        self.cache.insert(key, y);
        Bit::Lit(y)
    }

    /// Ripple-carry addition; returns the sum bits and the carry out.
    pub fn add_carry(&mut self, a: &[Bit], b: &[Bit], carry_in: Bit) -> (Vec<Bit>, Bit) {
        debug_assert_eq!(a.len(), b.len());
        let mut carry = carry_in;
        let mut sum = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            sum.push(self.xor(&[x, y, carry]));
            carry = self.maj(x, y, carry);
        }
        (sum, carry)
    }

    pub fn add(&mut self, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        self.add_carry(a, b, Bit::Const(false)).0
    }

    pub fn sub(&mut self, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        let nb: Vec<Bit> = b.iter().map(|&x| !x).collect();
        self.add_carry(a, &nb, Bit::Const(true)).0
    }

    /// `a < b` (unsigned), as the borrow out of `a - b`.
    pub fn ult(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        let mut borrow = Bit::Const(false);
        for (&x, &y) in a.iter().zip(b) {
            borrow = self.maj(!x, y, borrow);
        }
        borrow
    }

    pub fn eq(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        let same: Vec<Bit> = a.iter().zip(b).map(|(&x, &y)| !self.xor(&[x, y])).collect();
        self.and(&same)
    }

    /// Shift-and-add product truncated to `out_width` bits.
    pub fn mul(&mut self, a: &[Bit], b: &[Bit], out_width: usize) -> Vec<Bit> {
        let mut acc = vec![Bit::Const(false); out_width];
        for (i, &bi) in b.iter().enumerate().take(out_width) {
            let mut partial = vec![Bit::Const(false); out_width];
            for (j, &aj) in a.iter().enumerate() {
                if i + j < out_width {
                    partial[i + j] = self.and(&[aj, bi]);
                }
            }
            if partial.iter().all(|p| *p == Bit::Const(false)) {
                continue;
            }
            acc = self.add(&acc, &partial);
        }
        acc
    }

    /// Unsigned division as the relation `q*d + r = n, r < d` with fresh
    /// quotient/remainder bits; `d = 0` yields all-ones (and `r = n`).
    pub fn udiv(&mut self, n: &[Bit], d: &[Bit]) -> Vec<Bit> {
        let w = n.len();
        if let Some(dv) = const_value(d) {
            if let Some(nv) = const_value(n) {
                let q = if dv == BigUint::default() {
                    (BigUint::from(1u32) << w) - 1u32
                } else {
                    nv / dv
                };
                return Bit::constants(&q, w as u32);
            }
        }
        let q: Vec<Bit> = (0..w).map(|_| Bit::Lit(self.fresh())).collect();
        let r: Vec<Bit> = (0..w).map(|_| Bit::Lit(self.fresh())).collect();
        let zero = vec![Bit::Const(false); w];
        let d_is_zero = self.eq(d, &zero);

        let pad = |v: &[Bit]| {
            let mut out = v.to_vec();
            out.resize(2 * w, Bit::Const(false));
            out
        };
        let prod = self.mul(&pad(&q), &pad(d), 2 * w);
        let total = self.add(&prod, &pad(&r));
        let relation = self.eq(&total, &pad(n));
        let rem_ok = self.ult(&r, d);
        let nonzero_case = self.and(&[relation, rem_ok]);

        let ones = vec![Bit::Const(true); w];
        let q_ones = self.eq(&q, &ones);
        let r_is_n = self.eq(&r, n);
        let zero_case = self.and(&[q_ones, r_is_n]);

        self.assert_any(&[d_is_zero, nonzero_case]);
        self.assert_any(&[!d_is_zero, zero_case]);
        q
    }

    /// Encodes the output cone of `circuit` over the given input bits.
    pub fn encode_circuit(&mut self, circuit: &Circuit, chosen: &[Bit], target: &[Bit]) -> Vec<Bit> {
        assert_eq!(chosen.len(), circuit.chosen_width().bits() as usize);
        assert_eq!(target.len(), circuit.target_width().bits() as usize);
        let nodes = circuit.nodes();
        let mut needed = vec![false; nodes.len()];
        needed[circuit.output_root().index()] = true;
        for node in nodes.iter().rev() {
            if needed[node.id.index()] {
                for o in &node.operands {
                    needed[o.index()] = true;
                }
            }
        }
        let mut values: Vec<Vec<Bit>> = vec![Vec::new(); nodes.len()];
        for node in nodes {
            if !needed[node.id.index()] {
                continue;
            }
            let w = node.width.bits() as usize;
            let arg = |i: usize| values[node.operands[i].index()].clone();
            let bits = match &node.op {
                Op::Const(v) => Bit::constants(v, w as u32),
                Op::Var(InputRole::Chosen) => chosen.to_vec(),
                Op::Var(InputRole::Target) => target.to_vec(),
                Op::And | Op::Or | Op::Xor => (0..w)
                    .map(|i| {
                        let col: Vec<Bit> = node.operands.iter().map(|o| values[o.index()][i]).collect();
                        match node.op {
                            Op::And => self.and(&col),
                            Op::Or => self.or(&col),
                            _ => self.xor(&col),
                        }
                    })
                    .collect(),
                Op::Not => arg(0).into_iter().map(|b| !b).collect(),
                Op::Add => self.add(&arg(0), &arg(1)),
                Op::Sub => self.sub(&arg(0), &arg(1)),
                Op::Mult => self.mul(&arg(0), &arg(1), w),
                Op::Udiv => self.udiv(&arg(0), &arg(1)),
                Op::Ult => vec![self.ult(&arg(0), &arg(1))],
                Op::Ugt => vec![self.ult(&arg(1), &arg(0))],
                Op::Eq => vec![self.eq(&arg(0), &arg(1))],
                Op::Ite => {
                    let s = arg(0)[0];
                    let (a, b) = (arg(1), arg(2));
                    a.iter().zip(&b).map(|(&x, &y)| self.ite(s, x, y)).collect()
                }
                Op::Extract { hi, lo } => arg(0)[*lo as usize..=*hi as usize].to_vec(),
                Op::Concat => node
                    .operands
                    .iter()
                    .rev()
                    .flat_map(|o| values[o.index()].iter().copied())
                    .collect(),
            };
            debug_assert_eq!(bits.len(), w);
            values[node.id.index()] = bits;
        }
        std::mem::take(&mut values[circuit.output_root().index()])
    }
}

fn has_complement(sorted: &[Lit]) -> bool {
    // sorted by signed value, so x and -x are not adjacent in general
    let set: std::collections::HashSet<Lit> = sorted.iter().copied().collect();
    sorted.iter().any(|&l| set.contains(&!l))
}

fn const_value(bits: &[Bit]) -> Option<BigUint> {
    let mut v = BigUint::default();
    for (i, b) in bits.iter().enumerate() {
        match b {
            Bit::Const(true) => v.set_bit(i as u64, true),
            Bit::Const(false) => {}
            Bit::Lit(_) => return None,
        }
    }
    Some(v)
}

/// Compiles a circuit to CNF. Variables are laid out as chosen bits, then
/// target bits, then output bits, then auxiliaries, each block LSB first.
pub fn tseitin_compile(circuit: &Circuit) -> Result<CnfFormula, CnfError> {
    let cw = circuit.chosen_width().bits();
    let tw = circuit.target_width().bits();
    let ow = circuit.output_width().bits() as usize;
    let inputs = cw + tw;
    let mut f = CnfFormula::new(inputs);
    let chosen: Vec<Var> = (1..=cw).map(Var::new).collect();
    let target: Vec<Var> = (cw + 1..=inputs).map(Var::new).collect();
    let out_bits = {
        let mut enc = Encoder::new(&mut f);
        enc.encode_circuit(circuit, &Bit::vars(&chosen), &Bit::vars(&target))
    };

    // Pick a variable to carry each output bit; reuse gate outputs when they
    // are plain positive auxiliaries, otherwise tie a fresh one in.
    let mut claimed: Vec<Var> = Vec::with_capacity(ow);
    let mut taken = std::collections::HashSet::new();
    for &b in &out_bits {
        match b {
            Bit::Lit(l) if l.is_positive() && l.var().index() > inputs && taken.insert(l.var()) => {
                claimed.push(l.var());
            }
            other => {
                let y = f.new_var();
                taken.insert(y);
                match other {
                    Bit::Const(v) => f.clauses.push(vec![y.lit(v)]),
                    Bit::Lit(l) => {
                        f.clauses.push(vec![y.neg(), l]);
                        f.clauses.push(vec![y.pos(), !l]);
                    }
                }
                claimed.push(y);
            }
        }
    }

    let mut map: Vec<u32> = (0..=f.num_vars).collect();
    let mut next = inputs + 1;
    for v in &claimed {
        map[v.index() as usize] = next;
        next += 1;
    }
    for old in inputs + 1..=f.num_vars {
        if !taken.contains(&Var::new(old)) {
            map[old as usize] = next;
            next += 1;
        }
    }
    let remap = |l: Lit| {
        let v = map[l.var().index() as usize] as i32;
        Lit(if l.is_positive() { v } else { -v })
    };
    for c in &mut f.clauses {
        for l in c.iter_mut() {
            *l = remap(*l);
        }
    }
    for x in &mut f.xors {
        for v in x.vars.iter_mut() {
            *v = Var::new(map[v.index() as usize]);
        }
        x.vars.sort_unstable();
    }
    f.bitmap.chosen = chosen;
    f.bitmap.target = target;
    f.bitmap.output = (inputs + 1..=inputs + ow as u32).map(Var::new).collect();
    f.check_capacity()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::cnf::project;

    /// All total models, by backtracking in variable order and checking each
    /// constraint once its highest variable is assigned.
    fn brute_models(f: &CnfFormula) -> Vec<Vec<bool>> {
        let n = f.num_vars as usize;
        let mut by_max: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        for (i, c) in f.clauses.iter().enumerate() {
            let m = c.iter().map(|l| l.var().index() as usize).max().unwrap_or(0);
            by_max[m].push(i);
        }
        let mut xor_by_max: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        for (i, x) in f.xors.iter().enumerate() {
            xor_by_max[x.vars.last().unwrap().index() as usize].push(i);
        }
        assert!(by_max[0].is_empty());
        let mut out = Vec::new();
        let mut model = vec![false; n];
        fn go(
            depth: usize,
            f: &CnfFormula,
            by_max: &[Vec<usize>],
            xor_by_max: &[Vec<usize>],
            model: &mut Vec<bool>,
            out: &mut Vec<Vec<bool>>,
        ) {
            if depth == model.len() {
                out.push(model.clone());
                return;
            }
            for v in [false, true] {
                model[depth] = v;
                let ok = by_max[depth + 1]
                    .iter()
                    .all(|&i| f.clauses[i].iter().any(|l| l.eval(model)))
                    && xor_by_max[depth + 1].iter().all(|&i| f.xors[i].is_satisfied(model));
                if ok {
                    go(depth + 1, f, by_max, xor_by_max, model, out);
                }
            }
        }
        go(0, f, &by_max, &xor_by_max, &mut model, &mut out);
        out
    }

    #[test]
    fn single_and_gate_is_three_clauses() {
        let mut b = CircuitBuilder::new();
        let c = b.chosen(1).unwrap();
        let t = b.target(1).unwrap();
        let o = b.and(c, t).unwrap();
        let f = tseitin_compile(&b.finish(o).unwrap()).unwrap();
        assert_eq!(f.num_vars, 3);
        let (a, bb, y) = (Var::new(1), Var::new(2), Var::new(3));
        let mut got: Vec<Vec<Lit>> = f
            .clauses
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort();
                c
            })
            .collect();
        got.sort();
        let mut want = vec![
            vec![y.neg(), a.pos()],
            vec![y.neg(), bb.pos()],
            vec![a.neg(), bb.neg(), y.pos()],
        ];
        for c in want.iter_mut() {
            c.sort();
        }
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn eight_term_xor_is_one_xor_clause() {
        let mut b = CircuitBuilder::new();
        let c = b.chosen(4).unwrap();
        let t = b.target(4).unwrap();
        let mut parts = Vec::new();
        for i in 0..4 {
            parts.push(b.extract(c, i, i).unwrap());
            parts.push(b.extract(t, i, i).unwrap());
        }
        let o = b.xor_all(&parts).unwrap();
        let f = tseitin_compile(&b.finish(o).unwrap()).unwrap();
        assert_eq!(f.xors.len(), 1);
        assert_eq!(f.xors[0].vars.len(), 9);
        assert!(f.clauses.is_empty());
    }

    #[test]
    fn every_operator_matches_evaluator() {
        type Build = fn(&mut CircuitBuilder, crate::circuit::NodeId, crate::circuit::NodeId) -> crate::circuit::NodeId;
        let cases: Vec<(&str, Build)> = vec![
            ("and", |b, c, t| b.and(c, t).unwrap()),
            ("or", |b, c, t| b.or(c, t).unwrap()),
            ("xor", |b, c, t| b.xor(c, t).unwrap()),
            ("not", |b, c, _| b.not(c).unwrap()),
            ("add", |b, c, t| b.add(c, t).unwrap()),
            ("sub", |b, c, t| b.sub(c, t).unwrap()),
            ("mul", |b, c, t| b.mul(c, t).unwrap()),
            ("udiv", |b, c, t| b.udiv(c, t).unwrap()),
            ("ult", |b, c, t| b.ult(c, t).unwrap()),
            ("ugt", |b, c, t| b.ugt(c, t).unwrap()),
            ("eq", |b, c, t| b.eq(c, t).unwrap()),
            ("ite", |b, c, t| {
                let s = b.extract(c, 0, 0).unwrap();
                b.ite(s, c, t).unwrap()
            }),
            ("concat", |b, c, t| {
                let hi = b.extract(c, 2, 1).unwrap();
                let lo = b.extract(t, 1, 0).unwrap();
                b.concat(&[hi, lo]).unwrap()
            }),
            ("const-div", |b, c, _| {
                let three = b.constant(3u32, 3).unwrap();
                b.udiv(c, three).unwrap()
            }),
        ];
        for (name, build) in cases {
            let mut b = CircuitBuilder::new();
            let c = b.chosen(3).unwrap();
            let t = b.target(3).unwrap();
            let o = build(&mut b, c, t);
            let circ = b.finish(o).unwrap();
            let f = tseitin_compile(&circ).unwrap();
            let models = brute_models(&f);
            // exactly one extension per input pair
            assert_eq!(models.len(), 64, "{name}");
            for m in models {
                let cv = crate::cnf::bits_to_biguint(&project(&m, &f.bitmap.chosen));
                let tv = crate::cnf::bits_to_biguint(&project(&m, &f.bitmap.target));
                let ov = crate::cnf::bits_to_biguint(&project(&m, &f.bitmap.output));
                assert_eq!(ov, circ.evaluate(&cv, &tv).unwrap(), "{name} c={cv} t={tv}");
            }
        }
    }
}
