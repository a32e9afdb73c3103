//! Hybrid quantum-classical multitask network: exact statevector simulation
//! with adjoint gradients, the quantum encoding/convolution circuit family,
//! a per-patch convolutional autoencoder, joint Adam training and the
//! clustering-based representation analyses.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, dataset IO
//! and the command line live in the `mltqnn` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod autoencoder;
pub mod circuit;
pub mod exec;
mod math;
pub mod model;
pub mod statevector;

pub use circuit::{CircuitConfig, MltqnnCircuit, RegisterLayout, ResourceReport};
pub use exec::{Executor, Sequential};
pub use model::{HybridModel, ModelConfig, ParamSet, ParameterStore};
pub use statevector::{CircuitProgram, GateInstruction, MeasurementOperator, QuantumState};
