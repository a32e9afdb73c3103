mod oracles;

use mltqnn_core::circuit::{build_encoding, cz_sign_pattern, resource_report};
use mltqnn_core::statevector::run_circuit;
use mltqnn_core::{CircuitConfig, MltqnnCircuit, RegisterLayout};
use oracles::{dense_run, encoding_closed_form, location_index, max_abs_diff, pauli_x_expectation, random_vec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn config(g: usize, e: usize, m: usize, k: usize, lwm: bool) -> CircuitConfig {
    CircuitConfig { grid_log: g, features: e, blocks: m, kernels: k, lwm }
}

#[test]
fn encoding_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for g in 1..=2 {
        for e in [3, 9] {
            let cfg = config(g, e, 1, 1, true);
            let layout = RegisterLayout::for_config(&cfg);
            let enc = build_encoding(&cfg, &layout).unwrap();
            for _ in 0..100 {
                let data = random_vec(&mut rng, enc.data_arity(), 0.0, PI);
                let state = run_circuit(&enc, &data, &[]).unwrap();
                let want = encoding_closed_form(g, e, &data);
                worst = worst.max(max_abs_diff(&state.amplitudes()[..want.len()], &want));
                assert!(state.amplitudes()[want.len()..].iter().all(|a| a.norm() == 0.0));
            }
        }
    }
    assert!(worst <= 1e-10, "max amplitude error {worst}");
}

#[test]
fn zero_features_leave_the_value_register_alone() {
    let cfg = config(2, 9, 1, 1, true);
    let layout = RegisterLayout::for_config(&cfg);
    let enc = build_encoding(&cfg, &layout).unwrap();
    let state = run_circuit(&enc, &vec![0.0; enc.data_arity()], &[]).unwrap();
    for (i, a) in state.amplitudes().iter().enumerate() {
        let want = if i < 16 { 0.25 } else { 0.0 };
        assert!((a.re - want).abs() < 1e-15 && a.im.abs() < 1e-15);
    }
}

#[test]
fn swapping_superpixels_swaps_location_branches() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (g, e) = (2, 9);
    let cfg = config(g, e, 1, 1, true);
    let layout = RegisterLayout::for_config(&cfg);
    let enc = build_encoding(&cfg, &layout).unwrap();
    for _ in 0..10 {
        let data = random_vec(&mut rng, enc.data_arity(), 0.0, PI);
        let (s1, s2) = (1, 14);
        let mut swapped = data.clone();
        for f in 0..e {
            swapped.swap(s1 * e + f, s2 * e + f);
        }
        let a = run_circuit(&enc, &data, &[]).unwrap();
        let b = run_circuit(&enc, &swapped, &[]).unwrap();
        let l1 = location_index(g, s1 / 4, s1 % 4);
        let l2 = location_index(g, s2 / 4, s2 % 4);
        for i in 0..a.amplitudes().len() {
            let loc = i & 0xf;
            let j = match loc {
                l if l == l1 => (i & !0xf) | l2,
                l if l == l2 => (i & !0xf) | l1,
                _ => i,
            };
            assert_eq!(a.amplitudes()[i], b.amplitudes()[j]);
        }
    }
}

#[test]
fn sign_pattern_is_exact() {
    assert_eq!(cz_sign_pattern(&[1, 2, 3, 4, 5, 6, 7, 8]).unwrap(), vec![1, 2, 3, -4, 5, -6, -7, -8]);
    assert_eq!(cz_sign_pattern(&[1, 0, 0, 0, 0, 0, 0, 0]).unwrap(), vec![1, 0, 0, 0, 0, 0, 0, 0]);
    assert!(cz_sign_pattern(&[1.0; 4]).is_err());
}

#[test]
fn small_config_matches_dense_oracle_end_to_end() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for lwm in [true, false] {
        let circuit = MltqnnCircuit::new(config(2, 3, 1, 2, lwm)).unwrap();
        let prog = circuit.program();
        for _ in 0..5 {
            let data = random_vec(&mut rng, prog.data_arity(), 0.0, PI);
            let params = random_vec(&mut rng, prog.param_arity(), 0.0, 2.0 * PI);
            let dense = dense_run(prog.num_qubits(), prog.instructions(), &data, &params);
            let got = circuit.quantum_forward(&data, &params).unwrap();
            assert_eq!(got.len(), circuit.operators().len());
            for (op, v) in circuit.operators().iter().zip(&got) {
                let want = pauli_x_expectation(&dense, op.factors());
                assert!((v - want).abs() <= 1e-10, "{v} vs {want}");
            }
        }
    }
}

#[test]
fn feature_values_stay_in_range_and_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let circuit = MltqnnCircuit::new(CircuitConfig::canonical()).unwrap();
    let data = random_vec(&mut rng, circuit.program().data_arity(), 0.0, PI);
    let params = random_vec(&mut rng, circuit.param_arity(), 0.0, 2.0 * PI);
    let a = circuit.quantum_forward(&data, &params).unwrap();
    let b = circuit.quantum_forward(&data, &params).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 64);
    assert!(a.iter().all(|v| (-1e-10..=128.0 + 1e-10).contains(v)));
}

#[test]
fn resource_counts_agree_with_built_circuits() {
    for (n, p) in [(32, 4), (256, 32), (64, 8), (16, 4)] {
        let g = mltqnn_core::circuit::grid_log_for(n, p).unwrap();
        for m in 1..=g {
            for k in [1, 2, 4] {
                for lwm in [true, false] {
                    let cfg = config(g, 9, m, k, lwm);
                    let r = resource_report(n, p, &cfg).unwrap();
                    assert_eq!(r.trainable_quantum_params, 3 * r.extraction_gate_units);
                }
            }
        }
    }
}
