//! Dense statevector simulation of (multi-)controlled single-qubit gates.
//!
//! Basis indexing is little-endian: qubit `i` is bit `i` of the basis index.
//! Rotations follow `R_A(θ) = exp(-iθA/2)` for `A ∈ {X, Y, Z}`.

mod adjoint;
mod gate;
mod kernel;
mod observable;
mod program;
mod state;

pub use adjoint::{adjoint_from_final_state, adjoint_gradients, AdjointGradients};
pub use gate::{AngleSource, Control, GateInstruction, GateKind};
pub use num_complex::Complex64;
pub use observable::{apply_observable_sum, expectation, expectations, MeasurementOperator, Sign};
pub use program::{run_circuit, CircuitProgram};
pub use state::{new_zero_state, QuantumState};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("qubit count {0} outside 1..=30")]
    QubitCount(usize),
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("target qubit {0} is also listed as a control")]
    TargetIsControl(usize),
    #[error("qubit {0} listed twice")]
    DuplicateQubit(usize),
    #[error("{0:?} gate needs exactly one angle source")]
    MissingAngle(GateKind),
    #[error("{0:?} gate takes no angle")]
    UnexpectedAngle(GateKind),
    #[error("data slot {slot} out of range (data arity {arity})")]
    DataSlot { slot: usize, arity: usize },
    #[error("parameter slot {slot} out of range (parameter arity {arity})")]
    ParamSlot { slot: usize, arity: usize },
    #[error("parameter slot {0} is already bound to another instruction")]
    SharedParam(usize),
    #[error("expected {expected} data values, got {got}")]
    DataLength { expected: usize, got: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParamLength { expected: usize, got: usize },
    #[error("expected {expected} amplitudes, got {got}")]
    AmplitudeLength { expected: usize, got: usize },
    #[error("resolved angle is not finite")]
    NonFiniteAngle,
    #[error("state has {got} qubits, program expects {expected}")]
    QubitMismatch { expected: usize, got: usize },
    #[error("expected {expected} cotangents, got {got}")]
    CotangentLength { expected: usize, got: usize },
    #[error("cotangent {0} is not finite")]
    NonFiniteCotangent(usize),
}
