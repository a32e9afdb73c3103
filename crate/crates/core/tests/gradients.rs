mod oracles;

use mltqnn_core::autoencoder::{image_mse, ImageTensor, PatchAutoencoder};
use mltqnn_core::model::{HybridModel, ModelConfig, ParamSet};
use mltqnn_core::statevector::{adjoint_gradients, expectations, run_circuit};
use mltqnn_core::{CircuitConfig, MltqnnCircuit};
use oracles::{central_difference, random_vec, rel_err, smooth_central_difference};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const EPS: f64 = 1e-4;
/// Denominator floor of the relative error, for derivatives that vanish.
const FLOOR: f64 = 1e-5;

fn small_circuit() -> CircuitConfig {
    CircuitConfig { grid_log: 2, features: 3, blocks: 1, kernels: 2, lwm: true }
}

fn quantum_check(circuit: &MltqnnCircuit, rng: &mut ChaCha8Rng) -> f64 {
    let prog = circuit.program();
    let ops = circuit.operators();
    let data = random_vec(rng, prog.data_arity(), 0.0, PI);
    let params = random_vec(rng, prog.param_arity(), 0.0, 2.0 * PI);
    let cot = random_vec(rng, ops.len(), -1.0, 1.0);
    let objective = |p: &[f64]| -> f64 {
        let s = run_circuit(prog, &data, p).unwrap();
        expectations(&s, ops).unwrap().iter().zip(&cot).map(|(e, c)| e * c).sum()
    };
    let grad = adjoint_gradients(prog, &data, &params, ops, &cot).unwrap();
    (0..params.len())
        .map(|i| rel_err(grad[i], central_difference(objective, &params, i, EPS), FLOOR))
        .fold(0.0, f64::max)
}

#[test]
fn adjoint_matches_finite_differences_on_the_canonical_circuit() {
    let circuit = MltqnnCircuit::new(CircuitConfig::canonical()).unwrap();
    assert_eq!(circuit.param_arity(), 198);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let worst = quantum_check(&circuit, &mut rng);
    assert!(worst <= 1e-5, "max relative error {worst}");
}

#[test]
fn adjoint_matches_finite_differences_on_the_small_circuit() {
    let circuit = MltqnnCircuit::new(small_circuit()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let worst = (0..10).map(|_| quantum_check(&circuit, &mut rng)).fold(0.0, f64::max);
    assert!(worst <= 1e-5, "max relative error {worst}");
}

#[test]
fn autoencoder_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for (patch, channels, e) in [(4, 4, 9), (2, 3, 3), (8, 1, 6)] {
        let ae = PatchAutoencoder::new(patch, channels, e).unwrap();
        let x = random_vec(&mut rng, ae.patch_len(), 0.0, 1.0);
        let p = ae.init(&mut rng);
        let enc = ae.encoder_len();
        let loss = |p: &[f64]| -> f64 {
            let f = ae.encode(&x, &p[..enc]).unwrap();
            let y = ae.decode(&f, &p[enc..]).unwrap();
            y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
        };
        let mut grad = vec![0.0; p.len()];
        let (feats, ec) = ae.encode_cached(&x, &p[..enc]).unwrap();
        let (out, dc) = ae.decode_cached(&feats, &p[enc..]).unwrap();
        let d_out: Vec<f64> = out.iter().zip(&x).map(|(a, b)| 2.0 * (a - b) / x.len() as f64).collect();
        let (ge, gd) = grad.split_at_mut(enc);
        let d_feat = ae.decode_backward(&dc, &p[enc..], &d_out, gd);
        ae.encode_backward(&ec, &p[..enc], &d_feat, ge);
        let worst =
            (0..p.len()).map(|i| rel_err(grad[i], central_difference(loss, &p, i, EPS), FLOOR)).fold(0.0, f64::max);
        assert!(worst <= 1e-5, "P={patch}: max relative error {worst}");
    }
}

pub fn small_model_config() -> ModelConfig {
    ModelConfig {
        image_size: 16,
        patch: 4,
        features: 3,
        blocks: 1,
        kernels: 2,
        channels: 4,
        num_classes: 4,
        ..ModelConfig::canonical(4, 4)
    }
}

fn flat(p: &ParamSet) -> Vec<f64> {
    p.iter().copied().collect()
}

fn unflat(like: &ParamSet, v: &[f64]) -> ParamSet {
    let mut out = like.clone();
    for (a, b) in out.iter_mut().zip(v) {
        *a = *b;
    }
    out
}

/// Draws whose finite-difference neighbourhood contains an activation switch
/// are replaced by fresh draws; at most this many may be replaced.
const MAX_REJECTED: usize = 10;

#[test]
fn end_to_end_gradient_matches_finite_differences() {
    let model = HybridModel::new(small_model_config()).unwrap();
    let alpha = model.config().alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let (mut worst, mut accepted, mut rejected) = (0.0f64, 0, 0);
    let mut seed = 100;
    while accepted < 10 {
        assert!(rejected <= MAX_REJECTED, "too many non-smooth draws");
        let params = model.init_params(seed).params;
        seed += 1;
        let x = ImageTensor::new(16, 4, random_vec(&mut rng, 16 * 16 * 4, 0.0, 1.0)).unwrap();
        let label = rng.random_range(0..4);
        let loss = |v: &[f64]| -> f64 {
            let out = model.forward(&x, &unflat(&params, v)).unwrap();
            -out.probabilities[label].max(1e-12).ln() + alpha * image_mse(&x, &out.reconstruction).unwrap()
        };
        let v = flat(&params);
        let Some(fd) = (0..v.len()).map(|i| smooth_central_difference(loss, &v, i, EPS)).collect::<Option<Vec<_>>>()
        else {
            rejected += 1;
            continue;
        };
        let g = flat(&model.sample_gradient(&x, label, &params, 1.0).unwrap().grads);
        worst = g.iter().zip(&fd).map(|(a, n)| rel_err(*a, *n, FLOOR)).fold(worst, f64::max);
        accepted += 1;
    }
    assert!(worst <= 1e-4, "max relative error {worst} ({rejected} draws rejected)");
}
