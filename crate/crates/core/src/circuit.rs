//! The encoding, quantum-convolution and measurement circuits.
//!
//! Registers:
//! - `q_l` location qubits, `2g` of them, ordered `[x_g … x_1, y_g … y_1]`
//!   where `x_1`/`y_1` are the least significant coordinate bits;
//! - `q_v` value qubits, three superpixel features per qubit;
//! - `q_k` kernel-index qubits, `log2 K` of them;
//! - `q_f` feature-map qubits, one per convolution block.
//!
//! Block `b` (1-based) runs a 2×2, stride-2 kernel on the location bits
//! `(x_b, y_b)`; after `M` blocks the feature map is addressed by the
//! remaining `g − M` bits per axis.

use alloc::vec;
use alloc::vec::Vec;

use crate::statevector::{
    expectations, run_circuit, AngleSource, CircuitProgram, Control, GateInstruction, GateKind, MeasurementOperator,
    QuantumState, Sign, SimError, MAX_QUBITS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error("feature count {0} is not a positive multiple of 3")]
    Features(usize),
    #[error("kernel count {0} is not a power of two")]
    Kernels(usize),
    #[error("block count {blocks} must lie in 1..={grid_log}")]
    Blocks { blocks: usize, grid_log: usize },
    #[error("grid exponent must be at least 1")]
    GridLog,
    #[error("image size {image} is not a power-of-two multiple of patch size {patch}")]
    Tiling { image: usize, patch: usize },
    #[error("circuit needs {0} qubits, more than the simulator supports")]
    TooManyQubits(usize),
    #[error("layout does not match the configuration")]
    LayoutMismatch,
    #[error("built circuit disagrees with the closed-form resource counts")]
    ResourceMismatch,
    #[error("value register has {0} amplitudes, expected 8")]
    SignPatternLength(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Structural scalars of the quantum part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitConfig {
    /// `g`: the processed image is `2^g × 2^g` superpixels.
    pub grid_log: usize,
    /// `E`: features per superpixel.
    pub features: usize,
    /// `M`: number of convolution blocks.
    pub blocks: usize,
    /// `K`: kernels per block.
    pub kernels: usize,
    /// Location Weight Module on/off.
    pub lwm: bool,
}

impl CircuitConfig {
    /// 12-qubit configuration: 8×8 superpixels, 9 features, 2 blocks, 2 kernels.
    pub fn canonical() -> Self {
        CircuitConfig { grid_log: 3, features: 9, blocks: 2, kernels: 2, lwm: true }
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.grid_log == 0 {
            return Err(CircuitError::GridLog);
        }
        if self.features == 0 || !self.features.is_multiple_of(3) {
            return Err(CircuitError::Features(self.features));
        }
        if !self.kernels.is_power_of_two() {
            return Err(CircuitError::Kernels(self.kernels));
        }
        if self.blocks == 0 || self.blocks > self.grid_log {
            return Err(CircuitError::Blocks { blocks: self.blocks, grid_log: self.grid_log });
        }
        let total = self.total_qubits();
        if total > MAX_QUBITS {
            return Err(CircuitError::TooManyQubits(total));
        }
        Ok(())
    }

    pub fn grid_side(&self) -> usize {
        1 << self.grid_log
    }

    pub fn superpixels(&self) -> usize {
        1 << (2 * self.grid_log)
    }

    pub fn value_qubits(&self) -> usize {
        self.features / 3
    }

    pub fn kernel_qubits(&self) -> usize {
        self.kernels.trailing_zeros() as usize
    }

    pub fn total_qubits(&self) -> usize {
        2 * self.grid_log + self.value_qubits() + self.kernel_qubits() + self.blocks
    }

    /// Length of the data vector: one angle per superpixel feature.
    pub fn data_arity(&self) -> usize {
        self.superpixels() * self.features
    }
}

/// `g = log2(N/P)`, requiring an exact power-of-two tiling.
pub fn grid_log_for(image: usize, patch: usize) -> Result<usize, CircuitError> {
    if patch == 0 || !image.is_multiple_of(patch) || !(image / patch).is_power_of_two() {
        return Err(CircuitError::Tiling { image, patch });
    }
    Ok((image / patch).trailing_zeros() as usize)
}

/// Qubit indices of every register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    pub location: Vec<usize>,
    pub value: Vec<usize>,
    pub kernel: Vec<usize>,
    pub feature: Vec<usize>,
}

impl RegisterLayout {
    /// Contiguous allocation: `q_l`, then `q_v`, `q_k`, `q_f`.
    pub fn for_config(config: &CircuitConfig) -> Self {
        let mut next = 0..;
        let mut take = |n: usize| -> Vec<usize> { (&mut next).take(n).collect() };
        RegisterLayout {
            location: take(2 * config.grid_log),
            value: take(config.value_qubits()),
            kernel: take(config.kernel_qubits()),
            feature: take(config.blocks),
        }
    }

    pub fn total_qubits(&self) -> usize {
        self.location.len() + self.value.len() + self.kernel.len() + self.feature.len()
    }

    fn grid_log(&self) -> usize {
        self.location.len() / 2
    }

    /// Qubit holding `x_b` (1-based significance).
    pub fn x_bit(&self, b: usize) -> usize {
        self.location[self.grid_log() - b]
    }

    /// Qubit holding `y_b` (1-based significance).
    pub fn y_bit(&self, b: usize) -> usize {
        self.location[2 * self.grid_log() - b]
    }

    /// Controls selecting the superpixel at row `x`, column `y`.
    pub fn location_controls(&self, x: usize, y: usize) -> Vec<Control> {
        let g = self.grid_log();
        (1..=g)
            .map(|b| Control::new(self.x_bit(b), (x >> (b - 1)) & 1 == 1))
            .chain((1..=g).map(|b| Control::new(self.y_bit(b), (y >> (b - 1)) & 1 == 1)))
            .collect()
    }

    fn check(&self, config: &CircuitConfig) -> Result<(), CircuitError> {
        let mut all: Vec<usize> =
            self.location.iter().chain(&self.value).chain(&self.kernel).chain(&self.feature).copied().collect();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        let consistent = self.location.len() == 2 * config.grid_log
            && self.value.len() == config.value_qubits()
            && self.kernel.len() == config.kernel_qubits()
            && self.feature.len() == config.blocks
            && all.len() == total
            && all.last().is_none_or(|&q| q < total);
        if consistent {
            Ok(())
        } else {
            Err(CircuitError::LayoutMismatch)
        }
    }
}

fn push_unit(
    program: &mut CircuitProgram,
    target: usize,
    controls: &[Control],
    angles: [AngleSource; 3],
) -> Result<(), SimError> {
    let c = controls.iter().copied();
    program.push(GateInstruction::rx(target, angles[0]).with_controls(c.clone()))?;
    program.push(GateInstruction::ry(target, angles[1]).with_controls(c.clone()))?;
    program.push(GateInstruction::rz(target, angles[2]).with_controls(c))
}

/// Data-encoding fragment: Hadamards on `q_l`, then, superpixel by superpixel
/// in row-major order, location-controlled RX/RY/RZ on each value qubit and a
/// location-conditioned Z entangler on every value-qubit pair.
pub fn build_encoding(config: &CircuitConfig, layout: &RegisterLayout) -> Result<CircuitProgram, CircuitError> {
    config.validate()?;
    layout.check(config)?;
    let mut program = CircuitProgram::new(layout.total_qubits(), config.data_arity(), 0)?;
    for &q in &layout.location {
        program.push(GateInstruction::h(q))?;
    }
    let side = config.grid_side();
    for x in 0..side {
        for y in 0..side {
            let loc = layout.location_controls(x, y);
            let base = (x * side + y) * config.features;
            for (n, &qv) in layout.value.iter().enumerate() {
                let slot = base + 3 * n;
                let angles = [AngleSource::Data(slot), AngleSource::Data(slot + 1), AngleSource::Data(slot + 2)];
                push_unit(&mut program, qv, &loc, angles)?;
            }
            for (i, &qa) in layout.value.iter().enumerate() {
                for &qb in &layout.value[i + 1..] {
                    let controls = core::iter::once(Control::on(qa)).chain(loc.iter().copied());
                    program.push(GateInstruction::z(qb).with_controls(controls))?;
                }
            }
        }
    }
    Ok(program)
}

/// Number of trainable gate units in the extraction fragment.
pub fn extraction_gate_units(config: &CircuitConfig) -> usize {
    let lwm = usize::from(config.lwm);
    (4 * config.blocks * config.kernels * config.features
        + 2 * lwm * config.blocks * config.features
        + 2 * config.features)
        / 3
}

/// Feature-extraction fragment.
///
/// Hadamards on `q_k`; a trainable unit on every value qubit; per block and
/// value qubit an optional LWM pair on `(x_b, y_b)` followed by the kernel
/// units (one per kernel index and 2×2 window position) targeting `q_f[b]`;
/// finally another trainable unit on every value qubit.
pub fn build_feature_extraction(
    config: &CircuitConfig,
    layout: &RegisterLayout,
) -> Result<CircuitProgram, CircuitError> {
    config.validate()?;
    layout.check(config)?;
    let units = extraction_gate_units(config);
    let mut program = CircuitProgram::new(layout.total_qubits(), 0, 3 * units)?;
    let mut next_slot = 0usize;
    let mut next_angles = || {
        let s = next_slot;
        next_slot += 3;
        [AngleSource::Param(s), AngleSource::Param(s + 1), AngleSource::Param(s + 2)]
    };

    for &q in &layout.kernel {
        program.push(GateInstruction::h(q))?;
    }
    for &qv in &layout.value {
        push_unit(&mut program, qv, &[], next_angles())?;
    }
    for b in 1..=config.blocks {
        let (xb, yb) = (layout.x_bit(b), layout.y_bit(b));
        let target = layout.feature[b - 1];
        for &qv in &layout.value {
            if config.lwm {
                push_unit(&mut program, xb, &[], next_angles())?;
                push_unit(&mut program, yb, &[], next_angles())?;
            }
            for kappa in 0..config.kernels {
                // window weights W_0..W_3 ↔ (x_b, y_b) = 00, 01, 10, 11
                for w in 0..4usize {
                    let mut controls =
                        vec![Control::new(xb, w & 2 != 0), Control::new(yb, w & 1 != 0), Control::on(qv)];
                    controls.extend(
                        layout.kernel.iter().enumerate().map(|(bit, &qk)| Control::new(qk, (kappa >> bit) & 1 == 1)),
                    );
                    if b > 1 {
                        controls.push(Control::on(layout.feature[b - 2]));
                    }
                    push_unit(&mut program, target, &controls, next_angles())?;
                }
            }
        }
    }
    for &qv in &layout.value {
        push_unit(&mut program, qv, &[], next_angles())?;
    }
    debug_assert_eq!(next_slot, 3 * units);
    Ok(program)
}

/// Qubits whose sign is enumerated by the operator family, most significant
/// first: remaining x bits, remaining y bits, `q_k`, `q_v`.
fn signed_qubits(config: &CircuitConfig, layout: &RegisterLayout) -> Vec<usize> {
    let upper = (config.blocks + 1..=config.grid_log).rev();
    upper
        .clone()
        .map(|b| layout.x_bit(b))
        .chain(upper.map(|b| layout.y_bit(b)))
        .chain(layout.kernel.iter().copied())
        .chain(layout.value.iter().copied())
        .collect()
}

/// All `(I ± X)` products over the target feature map, with `(I − X)` fixed on
/// the last feature qubit. Operator `i` takes sign `−` on signed qubit `t`
/// iff bit `L−1−t` of `i` is set.
pub fn build_measurement_operators(
    config: &CircuitConfig,
    layout: &RegisterLayout,
) -> Result<Vec<MeasurementOperator>, CircuitError> {
    config.validate()?;
    layout.check(config)?;
    let signed = signed_qubits(config, layout);
    let last = *layout.feature.last().expect("validated: at least one block");
    let len = signed.len();
    (0..1usize << len)
        .map(|i| {
            let mut factors: Vec<(usize, Sign)> = signed
                .iter()
                .enumerate()
                .map(|(t, &q)| (q, if (i >> (len - 1 - t)) & 1 == 1 { Sign::Minus } else { Sign::Plus }))
                .collect();
            factors.push((last, Sign::Minus));
            MeasurementOperator::new(factors).map_err(CircuitError::from)
        })
        .collect()
}

/// The value-register phase produced by the pair entanglers on a 3-qubit
/// register: amplitudes of `|011⟩, |101⟩, |110⟩, |111⟩` change sign.
pub fn cz_sign_pattern<T>(amplitudes: &[T]) -> Result<Vec<T>, CircuitError>
where
    T: Copy + core::ops::Neg<Output = T>,
{
    if amplitudes.len() != 8 {
        return Err(CircuitError::SignPatternLength(amplitudes.len()));
    }
    Ok(amplitudes.iter().enumerate().map(|(i, &a)| if (i as u32).count_ones() >= 2 { -a } else { a }).collect())
}

/// The assembled quantum feature extractor for one configuration.
#[derive(Debug, Clone)]
pub struct MltqnnCircuit {
    config: CircuitConfig,
    layout: RegisterLayout,
    program: CircuitProgram,
    operators: Vec<MeasurementOperator>,
    encoding_len: usize,
}

impl MltqnnCircuit {
    pub fn new(config: CircuitConfig) -> Result<Self, CircuitError> {
        let layout = RegisterLayout::for_config(&config);
        let encoding = build_encoding(&config, &layout)?;
        let extraction = build_feature_extraction(&config, &layout)?;
        let operators = build_measurement_operators(&config, &layout)?;
        let encoding_len = encoding.instructions().len();
        let mut program = encoding;
        program.extend_from(&extraction)?;
        Ok(MltqnnCircuit { config, layout, program, operators, encoding_len })
    }

    pub fn config(&self) -> &CircuitConfig {
        &self.config
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    /// Encoding followed by extraction.
    pub fn program(&self) -> &CircuitProgram {
        &self.program
    }

    pub fn operators(&self) -> &[MeasurementOperator] {
        &self.operators
    }

    pub fn encoding_instruction_count(&self) -> usize {
        self.encoding_len
    }

    pub fn param_arity(&self) -> usize {
        self.program.param_arity()
    }

    pub fn feature_len(&self) -> usize {
        self.operators.len()
    }

    /// Final state for a processed image (flattened `[x][y][feature]`).
    pub fn final_state(&self, processed: &[f64], params: &[f64]) -> Result<QuantumState, CircuitError> {
        Ok(run_circuit(&self.program, processed, params)?)
    }

    /// The measured feature vector, operator by operator.
    pub fn quantum_forward(&self, processed: &[f64], params: &[f64]) -> Result<Vec<f64>, CircuitError> {
        let state = self.final_state(processed, params)?;
        Ok(expectations(&state, &self.operators)?)
    }
}

/// Qubit and gate counts for the encoding and extraction stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceReport {
    pub encoding_qubits: usize,
    pub encoding_gate_units: usize,
    pub encoding_hadamards: usize,
    pub encoding_cz: usize,
    pub extraction_qubits: usize,
    pub extraction_gate_units: usize,
    pub extraction_hadamards: usize,
    pub trainable_quantum_params: usize,
    pub total_qubits: usize,
    pub measurement_operators: usize,
}

impl ResourceReport {
    /// Closed-form counts from image size `n`, patch size `p`, features `e`,
    /// blocks `m`, kernels `k`.
    pub fn from_formulas(n: usize, p: usize, config: &CircuitConfig) -> Result<Self, CircuitError> {
        config.validate()?;
        if grid_log_for(n, p)? != config.grid_log {
            return Err(CircuitError::Tiling { image: n, patch: p });
        }
        let (e, m, k) = (config.features, config.blocks, config.kernels);
        let log_np = config.grid_log;
        let log_k = config.kernel_qubits();
        let lwm = usize::from(config.lwm);
        let extraction_units = (4 * m * k * e + 2 * lwm * m * e + 2 * e) / 3;
        let encoding_qubits = 2 * log_np + e / 3;
        let extraction_qubits = m + log_k;
        Ok(ResourceReport {
            encoding_qubits,
            encoding_gate_units: e * n * n / (3 * p * p),
            encoding_hadamards: 2 * log_np,
            encoding_cz: n * n * e * (e - 3) / (18 * p * p),
            extraction_qubits,
            extraction_gate_units: extraction_units,
            extraction_hadamards: log_k,
            trainable_quantum_params: 3 * extraction_units,
            total_qubits: encoding_qubits + extraction_qubits,
            measurement_operators: 1 << (2 * (config.grid_log - m) + log_k + e / 3),
        })
    }

    /// Counts read off built programs.
    pub fn from_programs(
        layout: &RegisterLayout,
        encoding: &CircuitProgram,
        extraction: &CircuitProgram,
        operators: &[MeasurementOperator],
    ) -> Self {
        let count =
            |p: &CircuitProgram, f: &dyn Fn(GateKind) -> bool| p.instructions().iter().filter(|i| f(i.kind)).count();
        ResourceReport {
            encoding_qubits: layout.location.len() + layout.value.len(),
            encoding_gate_units: count(encoding, &|k| k.is_rotation()) / 3,
            encoding_hadamards: count(encoding, &|k| k == GateKind::H),
            encoding_cz: count(encoding, &|k| k == GateKind::Z),
            extraction_qubits: layout.kernel.len() + layout.feature.len(),
            extraction_gate_units: count(extraction, &|k| k.is_rotation()) / 3,
            extraction_hadamards: count(extraction, &|k| k == GateKind::H),
            trainable_quantum_params: extraction.param_arity(),
            total_qubits: layout.total_qubits(),
            measurement_operators: operators.len(),
        }
    }

    /// `key=value` lines in a fixed order.
    pub fn lines(&self) -> [(&'static str, usize); 10] {
        [
            ("encoding_qubits", self.encoding_qubits),
            ("encoding_gate_units", self.encoding_gate_units),
            ("encoding_hadamards", self.encoding_hadamards),
            ("encoding_cz", self.encoding_cz),
            ("extraction_qubits", self.extraction_qubits),
            ("extraction_gate_units", self.extraction_gate_units),
            ("extraction_hadamards", self.extraction_hadamards),
            ("trainable_quantum_params", self.trainable_quantum_params),
            ("total_qubits", self.total_qubits),
            ("measurement_operators", self.measurement_operators),
        ]
    }
}

/// Closed-form counts, cross-checked against freshly built circuits.
pub fn resource_report(n: usize, p: usize, config: &CircuitConfig) -> Result<ResourceReport, CircuitError> {
    let formulas = ResourceReport::from_formulas(n, p, config)?;
    let layout = RegisterLayout::for_config(config);
    let counted = ResourceReport::from_programs(
        &layout,
        &build_encoding(config, &layout)?,
        &build_feature_extraction(config, &layout)?,
        &build_measurement_operators(config, &layout)?,
    );
    if formulas != counted {
        return Err(CircuitError::ResourceMismatch);
    }
    Ok(formulas)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(g: usize, e: usize, m: usize, k: usize, lwm: bool) -> CircuitConfig {
        CircuitConfig { grid_log: g, features: e, blocks: m, kernels: k, lwm }
    }

    #[test]
    fn validation() {
        assert_eq!(cfg(3, 10, 2, 2, true).validate(), Err(CircuitError::Features(10)));
        assert_eq!(cfg(3, 9, 2, 3, true).validate(), Err(CircuitError::Kernels(3)));
        assert_eq!(cfg(3, 9, 4, 2, true).validate(), Err(CircuitError::Blocks { blocks: 4, grid_log: 3 }));
        assert!(cfg(3, 9, 3, 1, false).validate().is_ok());
    }

    #[test]
    fn canonical_fragment_counts() {
        let c = CircuitConfig::canonical();
        let l = RegisterLayout::for_config(&c);
        let enc = build_encoding(&c, &l).unwrap();
        let ext = build_feature_extraction(&c, &l).unwrap();
        let kinds = |p: &CircuitProgram, k: GateKind| p.instructions().iter().filter(|i| i.kind == k).count();
        assert_eq!(kinds(&enc, GateKind::H), 6);
        assert_eq!(kinds(&enc, GateKind::RX) + kinds(&enc, GateKind::RY) + kinds(&enc, GateKind::RZ), 3 * 192);
        assert_eq!(kinds(&enc, GateKind::Z), 192);
        assert_eq!(enc.param_arity(), 0);
        assert_eq!(enc.data_arity(), 64 * 9);
        assert_eq!(ext.param_arity(), 198);
        assert_eq!(kinds(&ext, GateKind::H), 1);
        assert_eq!(extraction_gate_units(&c), 66);
    }

    #[test]
    fn lwm_off_drops_the_location_units() {
        let c = cfg(3, 9, 2, 2, false);
        let ext = build_feature_extraction(&c, &RegisterLayout::for_config(&c)).unwrap();
        assert_eq!(extraction_gate_units(&c), 54);
        assert_eq!(ext.param_arity(), 162);
    }

    #[test]
    fn measurement_family_shape() {
        let c = CircuitConfig::canonical();
        let l = RegisterLayout::for_config(&c);
        let ops = build_measurement_operators(&c, &l).unwrap();
        assert_eq!(ops.len(), 64);
        assert_eq!(ops[0].factors().len(), 7);
        let minus: Vec<usize> = ops[0].factors().iter().filter(|(_, s)| *s == Sign::Minus).map(|(q, _)| *q).collect();
        assert_eq!(minus, vec![l.feature[1]]);
        let measured: Vec<usize> = ops[0].measured_qubits().collect();
        assert_eq!(measured[..2], [l.x_bit(3), l.y_bit(3)]);

        // M = g measures no location qubit
        let c = cfg(2, 3, 2, 2, true);
        let ops = build_measurement_operators(&c, &RegisterLayout::for_config(&c)).unwrap();
        assert_eq!(ops.len(), 1 << (1 + 1));
    }

    #[test]
    fn sign_pattern_cases() {
        let id = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(cz_sign_pattern(&id).unwrap(), id.to_vec());
        let u = [1.0 / libm::sqrt(8.0); 8];
        let out = cz_sign_pattern(&u).unwrap();
        for (i, v) in out.iter().enumerate() {
            let negated = matches!(i, 3 | 5 | 6 | 7);
            assert_eq!(*v, if negated { -u[i] } else { u[i] });
        }
        assert_eq!(cz_sign_pattern(&[1.0; 4]), Err(CircuitError::SignPatternLength(4)));
    }

    #[test]
    fn zero_input_feature_vector() {
        let circuit = MltqnnCircuit::new(CircuitConfig::canonical()).unwrap();
        let data = vec![0.0; 576];
        let params = vec![0.0; 198];
        let f = circuit.quantum_forward(&data, &params).unwrap();
        assert_eq!(f.len(), 64);
        for (i, v) in f.iter().enumerate() {
            // sign bits: [x3, y3, k, v0, v1, v2]; the top three must be '+'
            let expected = if i >> 3 == 0 { 8.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-10, "feature {i}: {v}");
        }
    }

    #[test]
    fn resource_reports() {
        let r = resource_report(32, 4, &CircuitConfig::canonical()).unwrap();
        assert_eq!((r.encoding_qubits, r.encoding_gate_units, r.encoding_hadamards, r.encoding_cz), (9, 192, 6, 192));
        assert_eq!(
            (r.extraction_qubits, r.extraction_gate_units, r.extraction_hadamards, r.trainable_quantum_params),
            (3, 66, 1, 198)
        );
        assert_eq!(resource_report(256, 32, &CircuitConfig::canonical()).unwrap(), r);
        assert_eq!(resource_report(64, 8, &CircuitConfig::canonical()).unwrap(), r);
    }
}
