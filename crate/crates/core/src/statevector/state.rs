use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use num_complex::Complex64;

use super::gate::{GateInstruction, Mat2};
use super::kernel::{apply_matrix, PairMask};
use super::{SimError, MAX_QUBITS};

/// Dense amplitude vector over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// `|0…0⟩` on `num_qubits` qubits.
pub fn new_zero_state(num_qubits: usize) -> Result<QuantumState, SimError> {
    QuantumState::zero(num_qubits)
}

impl QuantumState {
    pub fn zero(num_qubits: usize) -> Result<Self, SimError> {
        if !(1..=MAX_QUBITS).contains(&num_qubits) {
            return Err(SimError::QubitCount(num_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { num_qubits, amplitudes })
    }

    /// Wrap raw amplitudes. No normalization is performed.
    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        if !(1..=MAX_QUBITS).contains(&num_qubits) {
            return Err(SimError::QubitCount(num_qubits));
        }
        if amplitudes.len() != 1 << num_qubits {
            return Err(SimError::AmplitudeLength { expected: 1 << num_qubits, got: amplitudes.len() });
        }
        Ok(QuantumState { num_qubits, amplitudes })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Apply one instruction, resolving its angle from `data` / `params`.
    pub fn apply_gate(&mut self, instr: &GateInstruction, data: &[f64], params: &[f64]) -> Result<(), SimError> {
        instr.validate(self.num_qubits)?;
        let angle = instr.resolve_angle(data, params)?;
        let m = instr.matrix(angle);
        self.apply_validated(instr, &m);
        Ok(())
    }

    pub(crate) fn apply_validated(&mut self, instr: &GateInstruction, m: &Mat2) {
        let mask = PairMask::new(self.num_qubits, instr.target, &instr.controls);
        apply_matrix(&mut self.amplitudes, &mask, m);
    }

    /// Text dump, one `index real imag` line per amplitude, 17 significant digits.
    pub fn dump_amplitudes(&self) -> String {
        let mut out = String::with_capacity(self.amplitudes.len() * 52);
        for (i, a) in self.amplitudes.iter().enumerate() {
            // writing into a String cannot fail
            let _ = writeln!(out, "{i} {:.16e} {:.16e}", a.re, a.im);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{AngleSource, Control};
    use core::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn zero_state_shapes() {
        assert_eq!(QuantumState::zero(1).unwrap().amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(QuantumState::zero(2).unwrap().amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(QuantumState::zero(31), Err(SimError::QubitCount(31)));
        assert_eq!(QuantumState::zero(0), Err(SimError::QubitCount(0)));
    }

    #[test]
    fn rx_pi_flips_with_phase() {
        let mut s = QuantumState::zero(1).unwrap();
        s.apply_gate(&GateInstruction::rx(0, AngleSource::Constant(PI)), &[], &[]).unwrap();
        assert!(close(s.amplitudes(), &[c(0.0, 0.0), c(0.0, -1.0)], 1e-15));
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = QuantumState::zero(1).unwrap();
        s.apply_gate(&GateInstruction::h(0), &[], &[]).unwrap();
        assert!(close(s.amplitudes(), &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)], 1e-15));
    }

    #[test]
    fn unsatisfied_control_is_identity() {
        let mut s = QuantumState::zero(2).unwrap();
        let g = GateInstruction::rx(0, AngleSource::Constant(PI)).with_controls([Control::on(1)]);
        s.apply_gate(&g, &[], &[]).unwrap();
        assert_eq!(s, QuantumState::zero(2).unwrap());
    }

    #[test]
    fn off_control_selects_zero_branch() {
        let mut s = QuantumState::zero(2).unwrap();
        s.apply_gate(&GateInstruction::x(0).with_controls([Control::off(1)]), &[], &[]).unwrap();
        assert!(close(s.amplitudes(), &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 0.0));
    }

    #[test]
    fn rejects_bad_instructions() {
        let mut s = QuantumState::zero(2).unwrap();
        assert!(matches!(
            s.apply_gate(&GateInstruction::h(2), &[], &[]),
            Err(SimError::QubitOutOfRange { index: 2, .. })
        ));
        assert_eq!(
            s.apply_gate(&GateInstruction::h(0).with_controls([Control::on(0)]), &[], &[]),
            Err(SimError::TargetIsControl(0))
        );
        assert_eq!(
            s.apply_gate(&GateInstruction::rx(0, AngleSource::Data(3)), &[0.1], &[]),
            Err(SimError::DataSlot { slot: 3, arity: 1 })
        );
        assert_eq!(
            s.apply_gate(&GateInstruction::ry(0, AngleSource::Constant(f64::NAN)), &[], &[]),
            Err(SimError::NonFiniteAngle)
        );
        let mut bad = GateInstruction::h(0);
        bad.angle = Some(AngleSource::Constant(1.0));
        assert_eq!(s.apply_gate(&bad, &[], &[]), Err(SimError::UnexpectedAngle(crate::statevector::GateKind::H)));
    }

    #[test]
    fn dump_has_seventeen_significant_digits() {
        let mut s = QuantumState::zero(1).unwrap();
        s.apply_gate(&GateInstruction::h(0), &[], &[]).unwrap();
        let dump = s.dump_amplitudes();
        let first = dump.lines().next().unwrap();
        assert_eq!(first, "0 7.0710678118654757e-1 0.0000000000000000e0");
        let parsed: f64 = first.split(' ').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, s.amplitudes()[0].re);
    }
}
