//! Executable representation classes: Boolean circuits and formulas, DFAs
//! over `{0, 1}`, and the trapdoor hypothesis that decrypts packed examples.

mod circuit;
mod dfa;
mod formula;
mod hypothesis;

use thiserror::Error;

pub use circuit::{eval_circuit, BooleanCircuit, Gate};
pub use dfa::{build_prefix_tree_dfa, minimize_dfa, run_dfa, Dfa, DfaFile, Trace};
pub use formula::{circuit_to_formula, BooleanFormula, Formula};
pub use hypothesis::{build_crsa_hypothesis, CrsaHypothesis};

use crate::instances::InstanceError;
use crate::numtheory::NumError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReprError {
    #[error("input has {actual} bits, expected {expected}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("gate {gate} references wire {wire}, which is not an earlier wire")]
    BadWire { gate: usize, wire: usize },
    #[error("output wire {0} does not exist")]
    BadOutput(usize),
    #[error("formula variable {var} out of range for {inputs} inputs")]
    BadVariable { var: usize, inputs: usize },
    #[error("circuit depth {depth} exceeds cap {cap}")]
    DepthCapExceeded { depth: usize, cap: usize },
    #[error("string {0} carries both labels")]
    ContradictoryLabels(String),
    #[error("invalid DFA: {0}")]
    InvalidDfa(String),
    #[error("example key ({found}) differs from the hypothesis key")]
    ForeignExample { found: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Num(#[from] NumError),
}

pub type Result<T> = std::result::Result<T, ReprError>;
