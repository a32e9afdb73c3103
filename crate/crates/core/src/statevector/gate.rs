use alloc::vec::Vec;

use super::{SimError, MAX_QUBITS};
use crate::math;
use num_complex::Complex64;

pub(crate) type Mat2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    RX,
    RY,
    RZ,
    Z,
    X,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }
}

/// Where a rotation angle comes from at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSource {
    Constant(f64),
    /// Index into the data vector (encoded features).
    Data(usize),
    /// Index into the trainable parameter vector.
    Param(usize),
}

/// A control qubit and the basis value it must hold for the gate to act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: usize,
    pub value: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Control { qubit, value: true }
    }

    pub fn off(qubit: usize) -> Self {
        Control { qubit, value: false }
    }

    pub fn new(qubit: usize, value: bool) -> Self {
        Control { qubit, value }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateInstruction {
    pub kind: GateKind,
    pub target: usize,
    pub controls: Vec<Control>,
    pub angle: Option<AngleSource>,
}

impl GateInstruction {
    fn fixed(kind: GateKind, target: usize) -> Self {
        GateInstruction { kind, target, controls: Vec::new(), angle: None }
    }

    fn rotation(kind: GateKind, target: usize, angle: AngleSource) -> Self {
        GateInstruction { kind, target, controls: Vec::new(), angle: Some(angle) }
    }

    pub fn h(target: usize) -> Self {
        Self::fixed(GateKind::H, target)
    }

    pub fn x(target: usize) -> Self {
        Self::fixed(GateKind::X, target)
    }

    pub fn z(target: usize) -> Self {
        Self::fixed(GateKind::Z, target)
    }

    pub fn rx(target: usize, angle: AngleSource) -> Self {
        Self::rotation(GateKind::RX, target, angle)
    }

    pub fn ry(target: usize, angle: AngleSource) -> Self {
        Self::rotation(GateKind::RY, target, angle)
    }

    pub fn rz(target: usize, angle: AngleSource) -> Self {
        Self::rotation(GateKind::RZ, target, angle)
    }

    pub fn with_controls(mut self, controls: impl IntoIterator<Item = Control>) -> Self {
        self.controls.extend(controls);
        self
    }

    /// Structural checks against a register of `num_qubits` qubits.
    pub fn validate(&self, num_qubits: usize) -> Result<(), SimError> {
        let check = |index: usize| {
            if index >= num_qubits || index >= MAX_QUBITS {
                Err(SimError::QubitOutOfRange { index, num_qubits })
            } else {
                Ok(())
            }
        };
        check(self.target)?;
        let mut seen = 0u32;
        for c in &self.controls {
            check(c.qubit)?;
            if c.qubit == self.target {
                return Err(SimError::TargetIsControl(c.qubit));
            }
            if seen & (1 << c.qubit) != 0 {
                return Err(SimError::DuplicateQubit(c.qubit));
            }
            seen |= 1 << c.qubit;
        }
        match (self.kind.is_rotation(), self.angle) {
            (true, None) => Err(SimError::MissingAngle(self.kind)),
            (false, Some(_)) => Err(SimError::UnexpectedAngle(self.kind)),
            _ => Ok(()),
        }
    }

    /// Resolve the rotation angle against concrete data and parameters.
    pub fn resolve_angle(&self, data: &[f64], params: &[f64]) -> Result<Option<f64>, SimError> {
        let angle = match self.angle {
            None => return Ok(None),
            Some(AngleSource::Constant(a)) => a,
            Some(AngleSource::Data(slot)) => *data.get(slot).ok_or(SimError::DataSlot { slot, arity: data.len() })?,
            Some(AngleSource::Param(slot)) => {
                *params.get(slot).ok_or(SimError::ParamSlot { slot, arity: params.len() })?
            }
        };
        if !angle.is_finite() {
            return Err(SimError::NonFiniteAngle);
        }
        Ok(Some(angle))
    }

    /// The 2x2 matrix acting on the target within the control subspace.
    pub(crate) fn matrix(&self, angle: Option<f64>) -> Mat2 {
        gate_matrix(self.kind, angle.unwrap_or(0.0))
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn gate_matrix(kind: GateKind, theta: f64) -> Mat2 {
    let half = theta / 2.0;
    let (c, s) = (math::cos(half), math::sin(half));
    match kind {
        GateKind::H => {
            let r = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
            [[r, r], [r, -r]]
        }
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::RX => {
            [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]]
        }
        GateKind::RY => {
            [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
        }
        GateKind::RZ => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
    }
}

pub(crate) fn adjoint_matrix(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}
