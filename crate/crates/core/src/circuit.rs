//! Width-annotated bitvector circuits over a `chosen` (adversary) input and a
//! `target` (secret) input, plus a concrete evaluator.
//!
//! Circuits are built bottom-up through [`CircuitBuilder`]; every node's
//! operands must already exist, so the node table is always in topological
//! order and cycles cannot be expressed.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

/// Largest supported bitvector width.
pub const MAX_WIDTH: u32 = 1 << 13;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("invalid width {0} (must be in 1..={MAX_WIDTH})")]
    BadWidth(u32),
    #[error("{op}: operand widths {widths:?} violate the operator's width rules")]
    WidthMismatch { op: &'static str, widths: Vec<u32> },
    #[error("{op}: expected {expected} operands, got {got}")]
    Arity {
        op: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("extract bounds hi={hi} lo={lo} invalid for width {width}")]
    BadExtract { hi: u32, lo: u32, width: u32 },
    #[error("constant {value} does not fit in {width} bits")]
    ConstTooWide { value: BigUint, width: u32 },
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("{0} input declared more than once")]
    DuplicateInput(InputRole),
    #[error("{0} input was never declared")]
    MissingInput(InputRole),
    #[error("{role} value {value} out of range for {width} bits")]
    InputOutOfRange {
        role: InputRole,
        value: BigUint,
        width: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Width(u32);

impl Width {
    pub fn new(bits: u32) -> Result<Self, CircuitError> {
        if (1..=MAX_WIDTH).contains(&bits) {
            Ok(Width(bits))
        } else {
            Err(CircuitError::BadWidth(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Number of distinct values, `2^bits`.
    pub fn domain_size(self) -> BigUint {
        BigUint::one() << self.0
    }

    /// All-ones value of this width.
    pub fn mask(self) -> BigUint {
        (BigUint::one() << self.0) - 1u32
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputRole {
    Chosen,
    Target,
}

impl fmt::Display for InputRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputRole::Chosen => f.write_str("chosen"),
            InputRole::Target => f.write_str("target"),
        }
    }
}

/// Operator tag. Payloads (constant values, extract bounds) live on the tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Const(BigUint),
    Var(InputRole),
    And,
    Or,
    Xor,
    Not,
    Add,
    Sub,
    Mult,
    Udiv,
    Ult,
    Ugt,
    Eq,
    Ite,
    Extract { hi: u32, lo: u32 },
    Concat,
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Const(_) => "CONST",
            Op::Var(_) => "VAR",
            Op::And => "AND",
            Op::Or => "OR",
            Op::Xor => "XOR",
            Op::Not => "NOT",
            Op::Add => "ADD",
            Op::Sub => "SUB",
            Op::Mult => "MULT",
            Op::Udiv => "UDIV",
            Op::Ult => "ULT",
            Op::Ugt => "UGT",
            Op::Eq => "EQ",
            Op::Ite => "ITE",
            Op::Extract { .. } => "EXTRACT",
            Op::Concat => "CONCAT",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub op: Op,
    pub operands: Vec<NodeId>,
    pub width: Width,
}

/// An immutable functionality circuit `F(chosen, target) -> output`.
#[derive(Clone, Debug)]
pub struct Circuit {
    nodes: Vec<Node>,
    chosen: NodeId,
    target: NodeId,
    output: NodeId,
}

impl Circuit {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn chosen_root(&self) -> NodeId {
        self.chosen
    }

    pub fn target_root(&self) -> NodeId {
        self.target
    }

    pub fn output_root(&self) -> NodeId {
        self.output
    }

    pub fn chosen_width(&self) -> Width {
        self.node(self.chosen).width
    }

    pub fn target_width(&self) -> Width {
        self.node(self.target).width
    }

    pub fn output_width(&self) -> Width {
        self.node(self.output).width
    }

    /// Sum of all node widths; a proxy for encoded size.
    pub fn total_width(&self) -> u64 {
        self.nodes.iter().map(|n| n.width.bits() as u64).sum()
    }

    /// Evaluates the circuit on concrete inputs.
    pub fn evaluate(&self, chosen: &BigUint, target: &BigUint) -> Result<BigUint, CircuitError> {
        check_range(InputRole::Chosen, chosen, self.chosen_width())?;
        check_range(InputRole::Target, target, self.target_width())?;
        let mut values: Vec<BigUint> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let args: Vec<&BigUint> = node.operands.iter().map(|o| &values[o.index()]).collect();
            let widths: Vec<Width> = node.operands.iter().map(|&o| self.node(o).width).collect();
            let v = eval_op(&node.op, node.width, &args, &widths, chosen, target);
            values.push(v);
        }
        Ok(values.swap_remove(self.output.index()))
    }

    /// Evaluates by recursive expansion without sharing node results.
    /// Exponential on deep DAGs; meant for cross-checking small circuits.
    pub fn evaluate_tree(&self, chosen: &BigUint, target: &BigUint) -> Result<BigUint, CircuitError> {
        check_range(InputRole::Chosen, chosen, self.chosen_width())?;
        check_range(InputRole::Target, target, self.target_width())?;
        Ok(self.eval_rec(self.output, chosen, target))
    }

    fn eval_rec(&self, id: NodeId, chosen: &BigUint, target: &BigUint) -> BigUint {
        let node = self.node(id);
        let vals: Vec<BigUint> = node
            .operands
            .iter()
            .map(|&o| self.eval_rec(o, chosen, target))
            .collect();
        let args: Vec<&BigUint> = vals.iter().collect();
        let widths: Vec<Width> = node.operands.iter().map(|&o| self.node(o).width).collect();
        eval_op(&node.op, node.width, &args, &widths, chosen, target)
    }
}

fn check_range(role: InputRole, value: &BigUint, width: Width) -> Result<(), CircuitError> {
    if value.bits() > width.bits() as u64 {
        return Err(CircuitError::InputOutOfRange {
            role,
            value: value.clone(),
            width: width.bits(),
        });
    }
    Ok(())
}

fn eval_op(op: &Op, w: Width, args: &[&BigUint], arg_widths: &[Width], chosen: &BigUint, target: &BigUint) -> BigUint {
    let flag = |b: bool| if b { BigUint::one() } else { BigUint::zero() };
    match op {
        Op::Const(v) => v.clone(),
        Op::Var(InputRole::Chosen) => chosen.clone(),
        Op::Var(InputRole::Target) => target.clone(),
        Op::And => args.iter().fold(w.mask(), |acc, a| acc & *a),
        Op::Or => args.iter().fold(BigUint::zero(), |acc, a| acc | *a),
        Op::Xor => args.iter().fold(BigUint::zero(), |acc, a| acc ^ *a),
        Op::Not => args[0] ^ w.mask(),
        Op::Add => (args[0] + args[1]) & w.mask(),
        Op::Sub => (args[0] + w.domain_size() - args[1]) & w.mask(),
        Op::Mult => (args[0] * args[1]) & w.mask(),
        Op::Udiv => {
            if args[1].is_zero() {
                w.mask()
            } else {
                args[0] / args[1]
            }
        }
        Op::Ult => flag(args[0] < args[1]),
        Op::Ugt => flag(args[0] > args[1]),
        Op::Eq => flag(args[0] == args[1]),
        Op::Ite => {
            if args[0].is_zero() {
                args[2].clone()
            } else {
                args[1].clone()
            }
        }
        Op::Extract { lo, .. } => (args[0] >> *lo) & w.mask(),
        Op::Concat => args
            .iter()
            .zip(arg_widths)
            .fold(BigUint::zero(), |acc, (a, aw)| (acc << aw.bits()) | *a),
    }
}

/// Incremental circuit constructor with structural deduplication.
#[derive(Default)]
pub struct CircuitBuilder {
    nodes: Vec<Node>,
    dedup: HashMap<(Op, Vec<NodeId>), NodeId>,
    chosen: Option<NodeId>,
    target: Option<NodeId>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn width_of(&self, id: NodeId) -> Width {
        self.nodes[id.index()].width
    }

    pub fn input(&mut self, role: InputRole, width: u32) -> Result<NodeId, CircuitError> {
        let slot = match role {
            InputRole::Chosen => self.chosen,
            InputRole::Target => self.target,
        };
        if slot.is_some() {
            return Err(CircuitError::DuplicateInput(role));
        }
        let id = self.build_node(Op::Var(role), &[], Some(Width::new(width)?))?;
        match role {
            InputRole::Chosen => self.chosen = Some(id),
            InputRole::Target => self.target = Some(id),
        }
        Ok(id)
    }

    pub fn chosen(&mut self, width: u32) -> Result<NodeId, CircuitError> {
        self.input(InputRole::Chosen, width)
    }

    pub fn target(&mut self, width: u32) -> Result<NodeId, CircuitError> {
        self.input(InputRole::Target, width)
    }

    pub fn constant(&mut self, value: impl Into<BigUint>, width: u32) -> Result<NodeId, CircuitError> {
        let value = value.into();
        let w = Width::new(width)?;
        if value.bits() > width as u64 {
            return Err(CircuitError::ConstTooWide { value, width });
        }
        self.build_node(Op::Const(value), &[], Some(w))
    }

    /// Adds a node after checking the operator's arity and width rules.
    /// `declared` is only consulted for CONST and VAR nodes.
    pub fn build_node(&mut self, op: Op, operands: &[NodeId], declared: Option<Width>) -> Result<NodeId, CircuitError> {
        for o in operands {
            if o.index() >= self.nodes.len() {
                return Err(CircuitError::UnknownNode(o.0));
            }
        }
        let widths: Vec<u32> = operands.iter().map(|&o| self.width_of(o).bits()).collect();
        let name = op.name();
        let arity = |expected: &'static str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(CircuitError::Arity {
                    op: name,
                    expected,
                    got: operands.len(),
                })
            }
        };
        let mismatch = || CircuitError::WidthMismatch {
            op: name,
            widths: widths.clone(),
        };
        let all_equal = widths.windows(2).all(|p| p[0] == p[1]);
        let width = match &op {
            Op::Const(_) | Op::Var(_) => {
                arity("0", operands.is_empty())?;
                declared.ok_or(CircuitError::BadWidth(0))?
            }
            Op::And | Op::Or | Op::Xor => {
                arity(">= 2", operands.len() >= 2)?;
                if !all_equal {
                    return Err(mismatch());
                }
                Width::new(widths[0])?
            }
            Op::Not => {
                arity("1", operands.len() == 1)?;
                Width::new(widths[0])?
            }
            Op::Add | Op::Sub | Op::Mult | Op::Udiv => {
                arity("2", operands.len() == 2)?;
                if !all_equal {
                    return Err(mismatch());
                }
                Width::new(widths[0])?
            }
            Op::Ult | Op::Ugt | Op::Eq => {
                arity("2", operands.len() == 2)?;
                if !all_equal {
                    return Err(mismatch());
                }
                Width::new(1)?
            }
            Op::Ite => {
                arity("3", operands.len() == 3)?;
                if widths[0] != 1 || widths[1] != widths[2] {
                    return Err(mismatch());
                }
                Width::new(widths[1])?
            }
            Op::Extract { hi, lo } => {
                arity("1", operands.len() == 1)?;
                if lo > hi || *hi >= widths[0] {
                    return Err(CircuitError::BadExtract {
                        hi: *hi,
                        lo: *lo,
                        width: widths[0],
                    });
                }
                Width::new(hi - lo + 1)?
            }
            Op::Concat => {
                arity(">= 1", !operands.is_empty())?;
                Width::new(widths.iter().sum())?
            }
        };
        let key = (op.clone(), operands.to_vec());
        // Inputs are never merged: each declaration is its own node.
        if !matches!(op, Op::Var(_)) {
            if let Some(&id) = self.dedup.get(&key) {
                if self.width_of(id) == width {
                    return Ok(id);
                }
            }
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            id,
            op,
            operands: operands.to_vec(),
            width,
        });
        self.dedup.insert(key, id);
        Ok(id)
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::And, &[a, b], None)
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Or, &[a, b], None)
    }

    pub fn xor(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Xor, &[a, b], None)
    }

    /// N-ary XOR; compiles to a single parity constraint per bit.
    pub fn xor_all(&mut self, parts: &[NodeId]) -> Result<NodeId, CircuitError> {
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        self.build_node(Op::Xor, parts, None)
    }

    pub fn not(&mut self, a: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Not, &[a], None)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Add, &[a, b], None)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Sub, &[a, b], None)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Mult, &[a, b], None)
    }

    pub fn udiv(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Udiv, &[a, b], None)
    }

    pub fn ult(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Ult, &[a, b], None)
    }

    pub fn ugt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Ugt, &[a, b], None)
    }

    pub fn eq(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Eq, &[a, b], None)
    }

    pub fn ite(&mut self, cond: NodeId, then: NodeId, other: NodeId) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Ite, &[cond, then, other], None)
    }

    pub fn extract(&mut self, a: NodeId, hi: u32, lo: u32) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Extract { hi, lo }, &[a], None)
    }

    /// Concatenation; `parts[0]` becomes the most significant slice.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId, CircuitError> {
        self.build_node(Op::Concat, parts, None)
    }

    /// Zero-extends `a` to `width` bits.
    pub fn zext(&mut self, a: NodeId, width: u32) -> Result<NodeId, CircuitError> {
        let cur = self.width_of(a).bits();
        if width == cur {
            return Ok(a);
        }
        if width < cur {
            return Err(CircuitError::WidthMismatch {
                op: "ZEXT",
                widths: vec![cur, width],
            });
        }
        let zeros = self.constant(0u32, width - cur)?;
        self.concat(&[zeros, a])
    }

    pub fn finish(self, output: NodeId) -> Result<Circuit, CircuitError> {
        let chosen = self.chosen.ok_or(CircuitError::MissingInput(InputRole::Chosen))?;
        let target = self.target.ok_or(CircuitError::MissingInput(InputRole::Target))?;
        if output.index() >= self.nodes.len() {
            return Err(CircuitError::UnknownNode(output.0));
        }
        Ok(Circuit {
            nodes: self.nodes,
            chosen,
            target,
            output,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(build: impl FnOnce(&mut CircuitBuilder) -> NodeId) -> BigUint {
        let mut b = CircuitBuilder::new();
        b.chosen(1).unwrap();
        b.target(1).unwrap();
        let out = build(&mut b);
        b.finish(out)
            .unwrap()
            .evaluate(&BigUint::zero(), &BigUint::zero())
            .unwrap()
    }

    #[test]
    fn and_of_constants() {
        let v = single(|b| {
            let one = b.constant(1u32, 1).unwrap();
            let zero = b.constant(0u32, 1).unwrap();
            b.and(one, zero).unwrap()
        });
        assert_eq!(v, BigUint::zero());
    }

    #[test]
    fn extract_slices_bits() {
        let v = single(|b| {
            let c = b.constant(0b1011u32, 4).unwrap();
            b.extract(c, 2, 1).unwrap()
        });
        assert_eq!(v, BigUint::from(0b01u32));
    }

    #[test]
    fn ugt_compares() {
        let v = single(|b| {
            let five = b.constant(5u32, 8).unwrap();
            let three = b.constant(3u32, 8).unwrap();
            b.ugt(five, three).unwrap()
        });
        assert_eq!(v, BigUint::one());
    }

    #[test]
    fn add_wraps() {
        let v = single(|b| {
            let x = b.constant(255u32, 8).unwrap();
            let y = b.constant(1u32, 8).unwrap();
            b.add(x, y).unwrap()
        });
        assert_eq!(v, BigUint::zero());
    }

    #[test]
    fn udiv_by_zero_is_all_ones() {
        let v = single(|b| {
            let x = b.constant(77u32, 8).unwrap();
            let z = b.constant(0u32, 8).unwrap();
            b.udiv(x, z).unwrap()
        });
        assert_eq!(v, BigUint::from(255u32));
    }

    #[test]
    fn concat_puts_first_operand_high() {
        let v = single(|b| {
            let hi = b.constant(0b10u32, 2).unwrap();
            let lo = b.constant(0b011u32, 3).unwrap();
            b.concat(&[hi, lo]).unwrap()
        });
        assert_eq!(v, BigUint::from(0b10011u32));
    }

    #[test]
    fn width_mismatch_names_operator() {
        let mut b = CircuitBuilder::new();
        let x = b.constant(1u32, 4).unwrap();
        let y = b.constant(1u32, 5).unwrap();
        let err = b.add(x, y).unwrap_err();
        assert_eq!(
            err,
            CircuitError::WidthMismatch {
                op: "ADD",
                widths: vec![4, 5]
            }
        );
        assert!(err.to_string().contains("ADD"));
    }

    #[test]
    fn bad_extract_and_ite_rejected() {
        let mut b = CircuitBuilder::new();
        let x = b.constant(1u32, 4).unwrap();
        assert!(matches!(b.extract(x, 4, 0), Err(CircuitError::BadExtract { .. })));
        assert!(matches!(b.extract(x, 1, 2), Err(CircuitError::BadExtract { .. })));
        let c = b.constant(1u32, 2).unwrap();
        assert!(matches!(b.ite(c, x, x), Err(CircuitError::WidthMismatch { .. })));
    }

    #[test]
    fn width_cap_enforced() {
        assert!(Width::new(0).is_err());
        assert!(Width::new(MAX_WIDTH + 1).is_err());
        assert!(Width::new(MAX_WIDTH).is_ok());
    }

    #[test]
    fn out_of_range_input_rejected() {
        let mut b = CircuitBuilder::new();
        let c = b.chosen(4).unwrap();
        let t = b.target(4).unwrap();
        let o = b.ugt(c, t).unwrap();
        let circ = b.finish(o).unwrap();
        let err = circ.evaluate(&BigUint::from(16u32), &BigUint::zero()).unwrap_err();
        assert!(matches!(
            err,
            CircuitError::InputOutOfRange {
                role: InputRole::Chosen,
                ..
            }
        ));
    }

    #[test]
    fn duplicate_inputs_rejected() {
        let mut b = CircuitBuilder::new();
        b.chosen(4).unwrap();
        assert_eq!(
            b.chosen(4).unwrap_err(),
            CircuitError::DuplicateInput(InputRole::Chosen)
        );
    }

    #[test]
    fn shared_subnode_matches_tree_expansion() {
        let mut b = CircuitBuilder::new();
        let c = b.chosen(5).unwrap();
        let t = b.target(5).unwrap();
        let s = b.add(c, t).unwrap();
        let m = b.mul(s, s).unwrap();
        let d = b.udiv(m, t).unwrap();
        let x = b.xor_all(&[s, m, d]).unwrap();
        let circ = b.finish(x).unwrap();
        for ci in 0u32..32 {
            for ti in 0u32..32 {
                let (cv, tv) = (BigUint::from(ci), BigUint::from(ti));
                assert_eq!(circ.evaluate(&cv, &tv).unwrap(), circ.evaluate_tree(&cv, &tv).unwrap());
            }
        }
    }
}
