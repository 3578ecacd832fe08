use serde::{Deserialize, Serialize};

use super::circuit::{BooleanCircuit, Gate};
use super::{ReprError, Result};

/// Boolean formula tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Const(bool),
    Var(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn eval(&self, x: &[bool]) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(i) => x[*i],
            Formula::Not(f) => !f.eval(x),
            Formula::And(a, b) => a.eval(x) && b.eval(x),
            Formula::Or(a, b) => a.eval(x) || b.eval(x),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Var(_) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Var(_) => 0,
            Formula::Not(f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Formula::Const(_) => None,
            Formula::Var(i) => Some(*i),
            Formula::Not(f) => f.max_var(),
            Formula::And(a, b) | Formula::Or(a, b) => a.max_var().max(b.max_var()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanFormula {
    inputs: usize,
    root: Formula,
}

impl BooleanFormula {
    pub fn new(inputs: usize, root: Formula) -> Result<Self> {
        match root.max_var() {
            Some(var) if var >= inputs => Err(ReprError::BadVariable { var, inputs }),
            _ => Ok(BooleanFormula { inputs, root }),
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn root(&self) -> &Formula {
        &self.root
    }

    pub fn eval(&self, x: &[bool]) -> Result<bool> {
        if x.len() != self.inputs {
            return Err(ReprError::WidthMismatch { expected: self.inputs, actual: x.len() });
        }
        Ok(self.root.eval(x))
    }
}

/// Unfolds the circuit into a tree from its output wire, duplicating every
/// shared subcircuit. The result has at most `2^depth` leaves, so circuits
/// deeper than `depth_cap` are refused.
pub fn circuit_to_formula(c: &BooleanCircuit, depth_cap: usize) -> Result<BooleanFormula> {
    let depth = c.depth();
    if depth > depth_cap {
        return Err(ReprError::DepthCapExceeded { depth, cap: depth_cap });
    }
    fn unfold(c: &BooleanCircuit, wire: usize) -> Formula {
        match c.gate_at(wire) {
            None => Formula::Var(wire),
            Some(Gate::Not(a)) => Formula::Not(Box::new(unfold(c, *a))),
            Some(Gate::And(a, b)) => Formula::And(Box::new(unfold(c, *a)), Box::new(unfold(c, *b))),
            Some(Gate::Or(a, b)) => Formula::Or(Box::new(unfold(c, *a)), Box::new(unfold(c, *b))),
        }
    }
    BooleanFormula::new(c.inputs(), unfold(c, c.output()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representations::eval_circuit;

    fn all_inputs(width: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u32 << width).map(move |mask| (0..width).map(|i| mask >> i & 1 == 1).collect())
    }

    #[test]
    fn single_gate_becomes_one_node() {
        let c = BooleanCircuit::new(2, vec![Gate::Or(0, 1)], 2).unwrap();
        let f = circuit_to_formula(&c, 4).unwrap();
        assert_eq!(f.root(), &Formula::Or(Box::new(Formula::Var(0)), Box::new(Formula::Var(1))));
    }

    #[test]
    fn diamond_is_duplicated() {
        // w3 = x0 & x1 feeds both w4 and w5.
        let c = BooleanCircuit::new(
            3,
            vec![Gate::And(0, 1), Gate::Or(3, 2), Gate::Not(3), Gate::And(4, 5)],
            6,
        )
        .unwrap();
        let f = circuit_to_formula(&c, 8).unwrap();
        assert_eq!(f.root().size(), 10);
        for x in all_inputs(3) {
            assert_eq!(f.eval(&x).unwrap(), eval_circuit(&c, &x).unwrap());
        }
    }

    #[test]
    fn deep_circuit_hits_cap() {
        let gates: Vec<Gate> = (0..20).map(|g| Gate::Not(g)).collect();
        let c = BooleanCircuit::new(1, gates, 20).unwrap();
        assert_eq!(c.depth(), 20);
        assert_eq!(circuit_to_formula(&c, 16), Err(ReprError::DepthCapExceeded { depth: 20, cap: 16 }));
    }

    #[test]
    fn rejects_out_of_range_variable() {
        assert_eq!(BooleanFormula::new(2, Formula::Var(2)), Err(ReprError::BadVariable { var: 2, inputs: 2 }));
        assert!(BooleanFormula::new(0, Formula::Const(true)).is_ok());
    }
}
