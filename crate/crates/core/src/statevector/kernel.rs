// Strided amplitude kernels. A gate with target t and controls C touches
// only the index pairs (i, i | 1<<t) whose control bits match; those are
// enumerated directly by depositing a counter into the free bit positions.

use num_complex::Complex64;

use super::gate::{Control, Mat2};
use super::MAX_QUBITS;

#[derive(Clone, Copy)]
pub(crate) struct PairMask {
    fixed: [u8; MAX_QUBITS],
    num_fixed: usize,
    control_bits: usize,
    target_bit: usize,
    pairs: usize,
}

impl PairMask {
    pub(crate) fn new(num_qubits: usize, target: usize, controls: &[Control]) -> Self {
        let mut fixed = [0u8; MAX_QUBITS];
        fixed[0] = target as u8;
        let mut control_bits = 0usize;
        for (slot, c) in fixed[1..].iter_mut().zip(controls) {
            *slot = c.qubit as u8;
            if c.value {
                control_bits |= 1 << c.qubit;
            }
        }
        let num_fixed = 1 + controls.len();
        fixed[..num_fixed].sort_unstable();
        PairMask { fixed, num_fixed, control_bits, target_bit: 1 << target, pairs: 1 << (num_qubits - num_fixed) }
    }

    #[inline]
    fn base_index(&self, mut k: usize) -> usize {
        for &p in &self.fixed[..self.num_fixed] {
            let low = k & ((1usize << p) - 1);
            k = ((k >> p) << (p + 1)) | low;
        }
        k | self.control_bits
    }

    /// Visit every `(i0, i1)` pair with target bit 0/1 and matching controls.
    #[inline]
    pub(crate) fn for_each_pair(&self, mut f: impl FnMut(usize, usize)) {
        for k in 0..self.pairs {
            let i0 = self.base_index(k);
            f(i0, i0 | self.target_bit);
        }
    }
}

pub(crate) fn apply_matrix(amps: &mut [Complex64], mask: &PairMask, m: &Mat2) {
    let diagonal = m[0][1] == Complex64::new(0.0, 0.0) && m[1][0] == Complex64::new(0.0, 0.0);
    if diagonal {
        mask.for_each_pair(|i0, i1| {
            amps[i0] *= m[0][0];
            amps[i1] *= m[1][1];
        });
    } else {
        mask.for_each_pair(|i0, i1| {
            let (a0, a1) = (amps[i0], amps[i1]);
            amps[i0] = m[0][0] * a0 + m[0][1] * a1;
            amps[i1] = m[1][0] * a0 + m[1][1] * a1;
        });
    }
}
