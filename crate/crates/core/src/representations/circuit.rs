use serde::{Deserialize, Serialize};

use super::{ReprError, Result};

/// A gate reading earlier wires. Wires `0..inputs` are the circuit inputs;
/// gate `g` drives wire `inputs + g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "in", rename_all = "lowercase")]
pub enum Gate {
    And(usize, usize),
    Or(usize, usize),
    Not(usize),
}

impl Gate {
    fn operands(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Gate::And(a, b) | Gate::Or(a, b) => (a, Some(b)),
            Gate::Not(a) => (a, None),
        };
        std::iter::once(a).chain(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CircuitFile", into = "CircuitFile")]
pub struct BooleanCircuit {
    inputs: usize,
    gates: Vec<Gate>,
    output: usize,
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    inputs: usize,
    gates: Vec<Gate>,
    output: usize,
}

impl TryFrom<CircuitFile> for BooleanCircuit {
    type Error = ReprError;

    fn try_from(file: CircuitFile) -> Result<Self> {
        BooleanCircuit::new(file.inputs, file.gates, file.output)
    }
}

impl From<BooleanCircuit> for CircuitFile {
    fn from(c: BooleanCircuit) -> Self {
        CircuitFile { inputs: c.inputs, gates: c.gates, output: c.output }
    }
}

impl BooleanCircuit {
    pub fn new(inputs: usize, gates: Vec<Gate>, output: usize) -> Result<Self> {
        for (g, gate) in gates.iter().enumerate() {
            let wire = inputs + g;
            if let Some(bad) = gate.operands().find(|&operand| operand >= wire) {
                return Err(ReprError::BadWire { gate: g, wire: bad });
            }
        }
        if output >= inputs + gates.len() {
            return Err(ReprError::BadOutput(output));
        }
        Ok(BooleanCircuit { inputs, gates, output })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> usize {
        self.output
    }

    /// Number of gates.
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Gate `g`, if `wire` is a gate output.
    pub fn gate_at(&self, wire: usize) -> Option<&Gate> {
        wire.checked_sub(self.inputs).and_then(|g| self.gates.get(g))
    }

    fn wire_depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.inputs + self.gates.len()];
        for (g, gate) in self.gates.iter().enumerate() {
            depth[self.inputs + g] = 1 + gate.operands().map(|w| depth[w]).max().unwrap_or(0);
        }
        depth
    }

    /// Longest input-to-output path, counted in gates.
    pub fn depth(&self) -> usize {
        self.wire_depths()[self.output]
    }
}

pub fn eval_circuit(c: &BooleanCircuit, x: &[bool]) -> Result<bool> {
    if x.len() != c.inputs {
        return Err(ReprError::WidthMismatch { expected: c.inputs, actual: x.len() });
    }
    let mut wires = Vec::with_capacity(c.inputs + c.gates.len());
    wires.extend_from_slice(x);
    for gate in &c.gates {
        let value = match *gate {
            Gate::And(a, b) => wires[a] && wires[b],
            Gate::Or(a, b) => wires[a] || wires[b],
            Gate::Not(a) => !wires[a],
        };
        wires.push(value);
    }
    Ok(wires[c.output])
}
