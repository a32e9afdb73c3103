use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::gate::{gate_matrix, GateKind};
use super::kernel::{apply_matrix, PairMask};
use super::state::QuantumState;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// Tensor product of `(I + sign·X)` factors on the measured qubits;
/// every other qubit carries the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementOperator {
    factors: Vec<(usize, Sign)>,
}

impl MeasurementOperator {
    pub fn new(factors: Vec<(usize, Sign)>) -> Result<Self, SimError> {
        for (i, (q, _)) in factors.iter().enumerate() {
            if factors[..i].iter().any(|(p, _)| p == q) {
                return Err(SimError::DuplicateQubit(*q));
            }
        }
        Ok(MeasurementOperator { factors })
    }

    pub fn factors(&self) -> &[(usize, Sign)] {
        &self.factors
    }

    pub fn measured_qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors.iter().map(|(q, _)| *q)
    }

    fn check(&self, num_qubits: usize) -> Result<(), SimError> {
        match self.factors.iter().find(|(q, _)| *q >= num_qubits) {
            Some(&(index, _)) => Err(SimError::QubitOutOfRange { index, num_qubits }),
            None => Ok(()),
        }
    }

    fn sorted_qubits(&self) -> Vec<usize> {
        let mut qs: Vec<usize> = self.measured_qubits().collect();
        qs.sort_unstable();
        qs
    }

    /// Bit pattern selected by this operator after Hadamards on the measured
    /// qubits, bit t ↔ `sorted[t]`: `(I+X)` keeps 0, `(I−X)` keeps 1.
    fn pattern(&self, sorted: &[usize]) -> usize {
        sorted.iter().enumerate().fold(0, |acc, (t, q)| {
            let minus = self.factors.iter().any(|(p, s)| p == q && *s == Sign::Minus);
            acc | (usize::from(minus) << t)
        })
    }
}

// (I ± X) = H (I ± Z) H = 2 H |0/1⟩⟨0/1| H, so every operator sharing a
// measured-qubit set is diagonal in the same rotated basis.
struct Group {
    qubits: Vec<usize>,
    members: Vec<usize>,
}

fn group_by_support(ops: &[MeasurementOperator]) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        let qubits = op.sorted_qubits();
        match groups.iter_mut().find(|g| g.qubits == qubits) {
            Some(g) => g.members.push(i),
            None => groups.push(Group { qubits, members: vec![i] }),
        }
    }
    groups
}

fn hadamard_all(amps: &mut [Complex64], num_qubits: usize, qubits: &[usize]) {
    let h = gate_matrix(GateKind::H, 0.0);
    for &q in qubits {
        apply_matrix(amps, &PairMask::new(num_qubits, q, &[]), &h);
    }
}

#[inline]
fn pattern_of(index: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().fold(0, |acc, (t, &q)| acc | (((index >> q) & 1) << t))
}

/// `⟨ψ|M|ψ⟩` for a single operator.
pub fn expectation(state: &QuantumState, op: &MeasurementOperator) -> Result<f64, SimError> {
    Ok(expectations(state, core::slice::from_ref(op))?[0])
}

/// Expectations of all operators, in input order.
pub fn expectations(state: &QuantumState, ops: &[MeasurementOperator]) -> Result<Vec<f64>, SimError> {
    let n = state.num_qubits();
    for op in ops {
        op.check(n)?;
    }
    let mut out = vec![0.0; ops.len()];
    for group in group_by_support(ops) {
        let mut scratch = state.amplitudes().to_vec();
        hadamard_all(&mut scratch, n, &group.qubits);
        let m = group.qubits.len();
        let mut marginal = vec![0.0; 1 << m];
        for (j, a) in scratch.iter().enumerate() {
            marginal[pattern_of(j, &group.qubits)] += a.norm_sqr();
        }
        let scale = (1u64 << m) as f64;
        for &i in &group.members {
            out[i] = scale * marginal[ops[i].pattern(&group.qubits)];
        }
    }
    Ok(out)
}

/// `Σ_i coeffs[i]·M_i |ψ⟩`.
pub fn apply_observable_sum(
    state: &QuantumState,
    ops: &[MeasurementOperator],
    coeffs: &[f64],
) -> Result<QuantumState, SimError> {
    if coeffs.len() != ops.len() {
        return Err(SimError::CotangentLength { expected: ops.len(), got: coeffs.len() });
    }
    let n = state.num_qubits();
    for op in ops {
        op.check(n)?;
    }
    let mut total = vec![Complex64::new(0.0, 0.0); state.amplitudes().len()];
    for group in group_by_support(ops) {
        let m = group.qubits.len();
        let scale = (1u64 << m) as f64;
        let mut weights = vec![0.0; 1 << m];
        for &i in &group.members {
            weights[ops[i].pattern(&group.qubits)] += scale * coeffs[i];
        }
        let mut scratch = state.amplitudes().to_vec();
        hadamard_all(&mut scratch, n, &group.qubits);
        for (j, a) in scratch.iter_mut().enumerate() {
            *a *= weights[pattern_of(j, &group.qubits)];
        }
        hadamard_all(&mut scratch, n, &group.qubits);
        for (t, a) in total.iter_mut().zip(&scratch) {
            *t += a;
        }
    }
    QuantumState::from_amplitudes(n, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::GateInstruction;

    fn plus_minus_state() -> QuantumState {
        // qubits 0..5 in |+⟩, qubit 6 in |−⟩
        let mut s = QuantumState::zero(7).unwrap();
        s.apply_gate(&GateInstruction::x(6), &[], &[]).unwrap();
        for q in 0..7 {
            s.apply_gate(&GateInstruction::h(q), &[], &[]).unwrap();
        }
        s
    }

    #[test]
    fn matching_signs_give_full_weight() {
        let s = plus_minus_state();
        let mut f: Vec<_> = (0..6).map(|q| (q, Sign::Plus)).collect();
        f.push((6, Sign::Minus));
        let v = expectation(&s, &MeasurementOperator::new(f).unwrap()).unwrap();
        assert!((v - 128.0).abs() < 1e-10);
    }

    #[test]
    fn wrong_sign_annihilates() {
        let s = plus_minus_state();
        let mut f: Vec<_> = (0..6).map(|q| (q, if q == 2 { Sign::Minus } else { Sign::Plus })).collect();
        f.push((6, Sign::Minus));
        let v = expectation(&s, &MeasurementOperator::new(f).unwrap()).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn computational_zero_gives_one() {
        let s = QuantumState::zero(1).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let v = expectation(&s, &MeasurementOperator::new(vec![(0, sign)]).unwrap()).unwrap();
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicate_and_out_of_range_qubits() {
        assert_eq!(MeasurementOperator::new(vec![(1, Sign::Plus), (1, Sign::Minus)]), Err(SimError::DuplicateQubit(1)));
        let op = MeasurementOperator::new(vec![(3, Sign::Plus)]).unwrap();
        assert!(expectation(&QuantumState::zero(2).unwrap(), &op).is_err());
    }
}
