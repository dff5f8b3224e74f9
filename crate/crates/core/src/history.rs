//! Observed (query, result) pairs and the candidate-target formulas they
//! induce.

use num_bigint::BigUint;

use crate::circuit::Circuit;
use crate::cnf::{Bit, CnfFormula, Encoder, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub chosen: BigUint,
    pub result: BigUint,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History {
    pub entries: Vec<Observation>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn push(&mut self, chosen: BigUint, result: BigUint) {
        self.entries.push(Observation { chosen, result });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Constrains `target` to agree with every observation.
    pub fn constrain(&self, circuit: &Circuit, f: &mut CnfFormula, target: &[Var]) {
        let cw = circuit.chosen_width().bits();
        let t = Bit::vars(target);
        for obs in &self.entries {
            constrain_one(circuit, f, &Bit::constants(&obs.chosen, cw), &t, &obs.result);
        }
    }

    /// Formula over a fresh target block (variables `1..=target_width`)
    /// whose projected models are exactly the surviving candidates.
    pub fn candidates(&self, circuit: &Circuit) -> (CnfFormula, Vec<Var>) {
        let tw = circuit.target_width().bits();
        let mut f = CnfFormula::new(tw);
        let target: Vec<Var> = (1..=tw).map(Var::new).collect();
        f.bitmap.target = target.clone();
        self.constrain(circuit, &mut f, &target);
        (f, target)
    }

    /// Direct filter over explicit candidates, for tests and small widths.
    pub fn consistent(&self, circuit: &Circuit, target: &BigUint) -> bool {
        self.entries
            .iter()
            .all(|o| circuit.evaluate(&o.chosen, target).ok().as_ref() == Some(&o.result))
    }
}

/// Encodes `F(chosen, target) = value`.
pub fn constrain_one(circuit: &Circuit, f: &mut CnfFormula, chosen: &[Bit], target: &[Bit], value: &BigUint) {
    let mut enc = Encoder::new(f);
    let out = enc.encode_circuit(circuit, chosen, target);
    enc.assert_value(&out, value);
}

/// Encodes `F(chosen, target) != value`.
pub fn exclude_one(circuit: &Circuit, f: &mut CnfFormula, chosen: &[Bit], target: &[Bit], value: &BigUint) {
    let mut enc = Encoder::new(f);
    let out = enc.encode_circuit(circuit, chosen, target);
    let w = out.len() as u32;
    let same = enc.eq(&out, &Bit::constants(value, w));
    enc.assert_true(!same);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::count_exact;
    use crate::functionalities::millionaires;
    use crate::sat::SolverConfig;

    #[test]
    fn candidates_follow_observations() {
        let f = millionaires(4).unwrap();
        let mut h = History::new();
        h.push(BigUint::from(8u32), BigUint::from(1u32));
        h.push(BigUint::from(4u32), BigUint::from(0u32));
        let (cnf, t) = h.candidates(f.circuit());
        let n = count_exact(&cnf, &t, &SolverConfig::default()).unwrap();
        // 8 > t and 4 <= t
        assert_eq!(n.count, BigUint::from(4u32));
        assert!(h.consistent(f.circuit(), &BigUint::from(5u32)));
        assert!(!h.consistent(f.circuit(), &BigUint::from(9u32)));
    }
}
