use alloc::vec;
use alloc::vec::Vec;

use super::gate::{AngleSource, GateInstruction};
use super::state::QuantumState;
use super::SimError;

/// Ordered gate list with data/parameter slot bindings.
///
/// Every parameter slot is bound to at most one instruction.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitProgram {
    num_qubits: usize,
    instructions: Vec<GateInstruction>,
    data_arity: usize,
    param_arity: usize,
    param_bound: Vec<bool>,
}

impl CircuitProgram {
    pub fn new(num_qubits: usize, data_arity: usize, param_arity: usize) -> Result<Self, SimError> {
        if !(1..=super::MAX_QUBITS).contains(&num_qubits) {
            return Err(SimError::QubitCount(num_qubits));
        }
        Ok(CircuitProgram {
            num_qubits,
            instructions: Vec::new(),
            data_arity,
            param_arity,
            param_bound: vec![false; param_arity],
        })
    }

    pub fn push(&mut self, instr: GateInstruction) -> Result<(), SimError> {
        instr.validate(self.num_qubits)?;
        match instr.angle {
            Some(AngleSource::Data(slot)) if slot >= self.data_arity => {
                return Err(SimError::DataSlot { slot, arity: self.data_arity });
            }
            Some(AngleSource::Param(slot)) => {
                if slot >= self.param_arity {
                    return Err(SimError::ParamSlot { slot, arity: self.param_arity });
                }
                if self.param_bound[slot] {
                    return Err(SimError::SharedParam(slot));
                }
                self.param_bound[slot] = true;
            }
            _ => {}
        }
        self.instructions.push(instr);
        Ok(())
    }

    /// Append another program on the same register. Slot indices are kept
    /// as-is, so both programs address the same data/parameter vectors.
    pub fn extend_from(&mut self, other: &CircuitProgram) -> Result<(), SimError> {
        if other.num_qubits != self.num_qubits {
            return Err(SimError::QubitMismatch { expected: self.num_qubits, got: other.num_qubits });
        }
        self.data_arity = self.data_arity.max(other.data_arity);
        if other.param_arity > self.param_arity {
            self.param_arity = other.param_arity;
            self.param_bound.resize(other.param_arity, false);
        }
        for instr in &other.instructions {
            self.push(instr.clone())?;
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn instructions(&self) -> &[GateInstruction] {
        &self.instructions
    }

    pub fn data_arity(&self) -> usize {
        self.data_arity
    }

    pub fn param_arity(&self) -> usize {
        self.param_arity
    }

    pub(crate) fn check_inputs(&self, data: &[f64], params: &[f64]) -> Result<(), SimError> {
        if data.len() != self.data_arity {
            return Err(SimError::DataLength { expected: self.data_arity, got: data.len() });
        }
        if params.len() != self.param_arity {
            return Err(SimError::ParamLength { expected: self.param_arity, got: params.len() });
        }
        Ok(())
    }

    /// Run the program on an existing state in place.
    pub fn apply_to(&self, state: &mut QuantumState, data: &[f64], params: &[f64]) -> Result<(), SimError> {
        self.check_inputs(data, params)?;
        if state.num_qubits() != self.num_qubits {
            return Err(SimError::QubitMismatch { expected: self.num_qubits, got: state.num_qubits() });
        }
        for instr in &self.instructions {
            let angle = instr.resolve_angle(data, params)?;
            state.apply_validated(instr, &instr.matrix(angle));
        }
        Ok(())
    }
}

/// Apply every instruction, left to right, to `|0…0⟩`.
pub fn run_circuit(program: &CircuitProgram, data: &[f64], params: &[f64]) -> Result<QuantumState, SimError> {
    let mut state = QuantumState::zero(program.num_qubits)?;
    program.apply_to(&mut state, data, params)?;
    Ok(state)
}
