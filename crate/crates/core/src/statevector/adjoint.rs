use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::gate::{adjoint_matrix, AngleSource, GateKind};
use super::kernel::PairMask;
use super::observable::{apply_observable_sum, MeasurementOperator};
use super::program::{run_circuit, CircuitProgram};
use super::state::QuantumState;
use super::SimError;

/// Gradients of `Σ_i c_i ⟨M_i⟩` with respect to every bound angle.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointGradients {
    pub params: Vec<f64>,
    pub data: Vec<f64>,
}

/// `∂(Σ_i cotangents[i]·⟨M_i⟩)/∂params` in one forward and one reverse sweep.
pub fn adjoint_gradients(
    program: &CircuitProgram,
    data: &[f64],
    params: &[f64],
    ops: &[MeasurementOperator],
    cotangents: &[f64],
) -> Result<Vec<f64>, SimError> {
    let state = run_circuit(program, data, params)?;
    Ok(adjoint_from_final_state(program, data, params, state, ops, cotangents)?.params)
}

/// Reverse sweep starting from an already simulated final state, yielding
/// gradients for both the trainable parameters and the data slots.
pub fn adjoint_from_final_state(
    program: &CircuitProgram,
    data: &[f64],
    params: &[f64],
    final_state: QuantumState,
    ops: &[MeasurementOperator],
    cotangents: &[f64],
) -> Result<AdjointGradients, SimError> {
    program.check_inputs(data, params)?;
    if cotangents.len() != ops.len() {
        return Err(SimError::CotangentLength { expected: ops.len(), got: cotangents.len() });
    }
    if let Some(i) = cotangents.iter().position(|c| !c.is_finite()) {
        return Err(SimError::NonFiniteCotangent(i));
    }
    let n = program.num_qubits();
    if final_state.num_qubits() != n {
        return Err(SimError::QubitMismatch { expected: n, got: final_state.num_qubits() });
    }

    let mut grads = AdjointGradients { params: vec![0.0; params.len()], data: vec![0.0; data.len()] };
    if params.is_empty() && data.is_empty() {
        return Ok(grads);
    }

    let mut lambda = apply_observable_sum(&final_state, ops, cotangents)?;
    let mut psi = final_state;

    for instr in program.instructions().iter().rev() {
        let angle = instr.resolve_angle(data, params)?;
        let mask = PairMask::new(n, instr.target, &instr.controls);

        let slot = match instr.angle {
            Some(AngleSource::Data(i)) => Some((&mut grads.data, i)),
            Some(AngleSource::Param(i)) => Some((&mut grads.params, i)),
            _ => None,
        };
        if let Some((target, i)) = slot {
            // d/dθ exp(-iθA/2) = (-i/2) A exp(-iθA/2); the reverse-mode
            // contribution 2·Re⟨λ|(-i/2)A_c|ψ⟩ reduces to Im⟨λ|A_c|ψ⟩.
            let z = generator_overlap(instr.kind, &mask, lambda.amplitudes(), psi.amplitudes());
            target[i] += z.im;
        }

        let inverse = adjoint_matrix(&instr.matrix(angle));
        super::kernel::apply_matrix(psi.amplitudes_mut(), &mask, &inverse);
        super::kernel::apply_matrix(lambda.amplitudes_mut(), &mask, &inverse);
    }
    Ok(grads)
}

/// `⟨λ|A_c|ψ⟩` for the Pauli generator `A` of a rotation, restricted to the
/// control subspace.
fn generator_overlap(kind: GateKind, mask: &PairMask, lambda: &[Complex64], psi: &[Complex64]) -> Complex64 {
    let mut z = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match kind {
        GateKind::RX => mask.for_each_pair(|i0, i1| {
            z += lambda[i0].conj() * psi[i1] + lambda[i1].conj() * psi[i0];
        }),
        GateKind::RY => mask.for_each_pair(|i0, i1| {
            z += lambda[i1].conj() * psi[i0] * i - lambda[i0].conj() * psi[i1] * i;
        }),
        GateKind::RZ => mask.for_each_pair(|i0, i1| {
            z += lambda[i0].conj() * psi[i0] - lambda[i1].conj() * psi[i1];
        }),
        _ => {}
    }
    z
}
