// Independent reference implementations used by the integration tests and
// the acceptance suite. Nothing here calls the library's kernels: gates are
// expanded into full Kronecker-product matrices, network layers are written
// with explicit loops over padded coordinates.
#![allow(dead_code, clippy::needless_range_loop)]

use mltqnn_core::statevector::{AngleSource, Complex64, GateInstruction, GateKind, Sign};
use rand::Rng;

pub type C = Complex64;
pub type Mat = Vec<Vec<C>>;

const fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn single_qubit(kind: GateKind, theta: f64) -> [[C; 2]; 2] {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::H => [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]],
        GateKind::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        GateKind::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        GateKind::RX => [[c(co, 0.0), c(0.0, -si)], [c(0.0, -si), c(co, 0.0)]],
        GateKind::RY => [[c(co, 0.0), c(-si, 0.0)], [c(si, 0.0), c(co, 0.0)]],
        GateKind::RZ => [[c(co, -si), c(0.0, 0.0)], [c(0.0, 0.0), c(co, si)]],
    }
}

fn identity2() -> [[C; 2]; 2] {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

fn projector(value: bool) -> [[C; 2]; 2] {
    let z = c(0.0, 0.0);
    if value {
        [[z, z], [z, c(1.0, 0.0)]]
    } else {
        [[c(1.0, 0.0), z], [z, z]]
    }
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn to_mat(m: [[C; 2]; 2]) -> Mat {
    m.iter().map(|r| r.to_vec()).collect()
}

/// `factors[q]` acts on qubit q; qubit 0 is the least significant bit, so it
/// is the rightmost Kronecker factor.
pub fn kron_all(factors: &[[[C; 2]; 2]]) -> Mat {
    let mut out = vec![vec![c(1.0, 0.0)]];
    for f in factors.iter().rev() {
        out = kron(&out, &to_mat(*f));
    }
    out
}

fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn resolve(instr: &GateInstruction, data: &[f64], params: &[f64]) -> f64 {
    match instr.angle {
        None => 0.0,
        Some(AngleSource::Constant(t)) => t,
        Some(AngleSource::Data(i)) => data[i],
        Some(AngleSource::Param(j)) => params[j],
    }
}

/// `U = Π ⊗ G + (I − Π)` with `Π` the projector onto the control pattern.
pub fn dense_gate(n: usize, instr: &GateInstruction, theta: f64) -> Mat {
    let mut active = vec![identity2(); n];
    let mut proj = vec![identity2(); n];
    for ctl in &instr.controls {
        active[ctl.qubit] = projector(ctl.value);
        proj[ctl.qubit] = projector(ctl.value);
    }
    active[instr.target] = single_qubit(instr.kind, theta);
    let pi = kron_all(&proj);
    let dim = 1 << n;
    let mut rest = vec![vec![c(0.0, 0.0); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            rest[i][j] = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) } - pi[i][j];
        }
    }
    add(&kron_all(&active), &rest)
}

pub fn matvec(m: &Mat, v: &[C]) -> Vec<C> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn dense_run(n: usize, instrs: &[GateInstruction], data: &[f64], params: &[f64]) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    for instr in instrs {
        v = matvec(&dense_gate(n, instr, resolve(instr, data, params)), &v);
    }
    v
}

/// `⟨ψ|Π_q (I + s_q X_q)|ψ⟩`, applying each factor by explicit bit flips.
pub fn pauli_x_expectation(state: &[C], factors: &[(usize, Sign)]) -> f64 {
    let mut phi = state.to_vec();
    for &(q, s) in factors {
        let sign = if s == Sign::Plus { 1.0 } else { -1.0 };
        let prev = phi.clone();
        for (i, a) in phi.iter_mut().enumerate() {
            *a = prev[i] + prev[i ^ (1 << q)] * sign;
        }
    }
    let v: C = state.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum();
    v.re
}

pub fn max_abs_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Basis index of location `(x, y)` with `x_1`, `y_1` the least significant
/// coordinate bits: qubit `g − b` holds `x_b`, qubit `2g − b` holds `y_b`.
pub fn location_index(g: usize, x: usize, y: usize) -> usize {
    let mut idx = 0;
    for b in 1..=g {
        idx |= ((x >> (b - 1)) & 1) << (g - b);
        idx |= ((y >> (b - 1)) & 1) << (2 * g - b);
    }
    idx
}

/// Closed-form encoded state: uniform location superposition, each branch
/// carrying the product of `RZ·RY·RX|0⟩` value-qubit states, with a sign
/// `(−1)^{C(w,2)}` for value patterns of Hamming weight `w`.
pub fn encoding_closed_form(g: usize, e: usize, data: &[f64]) -> Vec<C> {
    let nv = e / 3;
    let n = 2 * g + nv;
    let side = 1 << g;
    let amp = 1.0 / side as f64;
    let mut out = vec![c(0.0, 0.0); 1 << n];
    for x in 0..side {
        for y in 0..side {
            let s = x * side + y;
            let qubits: Vec<[C; 2]> = (0..nv)
                .map(|q| {
                    let f = &data[s * e + 3 * q..];
                    let mut v = [c(1.0, 0.0), c(0.0, 0.0)];
                    for (kind, t) in [(GateKind::RX, f[0]), (GateKind::RY, f[1]), (GateKind::RZ, f[2])] {
                        let m = single_qubit(kind, t);
                        v = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
                    }
                    v
                })
                .collect();
            let loc = location_index(g, x, y);
            for pattern in 0..1usize << nv {
                let mut a = c(amp, 0.0);
                for (q, v) in qubits.iter().enumerate() {
                    a *= v[(pattern >> q) & 1];
                }
                let w = pattern.count_ones() as usize;
                if (w * w.saturating_sub(1) / 2) % 2 == 1 {
                    a = -a;
                }
                out[loc | (pattern << (2 * g))] = a;
            }
        }
    }
    out
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, eps: f64) -> f64 {
    let mut p = x.to_vec();
    let mut m = x.to_vec();
    p[i] += eps;
    m[i] -= eps;
    (f(&p) - f(&m)) / (2.0 * eps)
}

/// Central difference at `eps`, or `None` when `f` is not smooth on
/// `[x − eps, x + eps]` along coordinate `i`. For a smooth function the
/// estimates at `eps` and `eps/2` differ by `O(eps²)`; a ReLU or max-pool
/// switch inside the interval makes them differ at first order.
pub fn smooth_central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, eps: f64) -> Option<f64> {
    let full = central_difference(&f, x, i, eps);
    let half = central_difference(&f, x, i, eps / 2.0);
    (rel_err(full, half, 1e-3) <= 1e-6).then_some(full)
}

pub fn random_vec<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

// ---- naive patch autoencoder ----
//
// Maps are indexed `[row][col][channel]`. Parameter blocks follow the
// documented layout: each layer's weights then its biases; 3×3 convolution
// weights `[out][in][kr][kc]`, transposed convolution `[in][out][kr][kc]`,
// dense `[out][in]`.

type Map = Vec<Vec<Vec<f64>>>;

fn to_map(flat: &[f64], side: usize, ch: usize) -> Map {
    (0..side).map(|r| (0..side).map(|c| flat[(r * side + c) * ch..][..ch].to_vec()).collect()).collect()
}

fn flatten(m: &Map) -> Vec<f64> {
    m.iter().flatten().flatten().copied().collect()
}

fn take<'a>(p: &mut &'a [f64], n: usize) -> &'a [f64] {
    let (h, t) = p.split_at(n);
    *p = t;
    h
}

fn conv3(x: &Map, cin: usize, cout: usize, p: &mut &[f64]) -> Map {
    let side = x.len();
    let w = take(p, cout * cin * 9);
    let b = take(p, cout);
    let at = |r: isize, c: isize, i: usize| -> f64 {
        if r < 0 || c < 0 || r >= side as isize || c >= side as isize {
            0.0
        } else {
            x[r as usize][c as usize][i]
        }
    };
    let mut y = vec![vec![vec![0.0; cout]; side]; side];
    for r in 0..side {
        for col in 0..side {
            for o in 0..cout {
                let mut acc = b[o];
                for i in 0..cin {
                    for kr in 0..3 {
                        for kc in 0..3 {
                            let v = at(r as isize + kr as isize - 1, col as isize + kc as isize - 1, i);
                            acc += w[o * cin * 9 + i * 9 + kr * 3 + kc] * v;
                        }
                    }
                }
                y[r][col][o] = acc;
            }
        }
    }
    y
}

fn convt2(x: &Map, cin: usize, cout: usize, p: &mut &[f64]) -> Map {
    let side = x.len();
    let w = take(p, cin * cout * 4);
    let b = take(p, cout);
    let mut y = vec![vec![vec![0.0; cout]; 2 * side]; 2 * side];
    for (r, row) in y.iter_mut().enumerate() {
        for (col, px) in row.iter_mut().enumerate() {
            for o in 0..cout {
                let mut acc = b[o];
                for i in 0..cin {
                    acc += w[i * cout * 4 + o * 4 + (r % 2) * 2 + col % 2] * x[r / 2][col / 2][i];
                }
                px[o] = acc;
            }
        }
    }
    y
}

fn dense(x: &[f64], out: usize, p: &mut &[f64]) -> Vec<f64> {
    let w = take(p, out * x.len());
    let b = take(p, out);
    (0..out).map(|o| b[o] + (0..x.len()).map(|i| w[o * x.len() + i] * x[i]).sum::<f64>()).collect()
}

fn relu(m: &Map) -> Map {
    m.iter().map(|r| r.iter().map(|px| px.iter().map(|v| v.max(0.0)).collect()).collect()).collect()
}

fn maxpool(m: &Map) -> Map {
    let half = m.len() / 2;
    let ch = m[0][0].len();
    (0..half)
        .map(|r| {
            (0..half)
                .map(|c| {
                    (0..ch)
                        .map(|k| {
                            let v = [
                                m[2 * r][2 * c][k],
                                m[2 * r][2 * c + 1][k],
                                m[2 * r + 1][2 * c][k],
                                m[2 * r + 1][2 * c + 1][k],
                            ];
                            v.into_iter().fold(f64::NEG_INFINITY, f64::max)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

pub fn naive_encode(patch: &[f64], side: usize, channels: usize, e: usize, params: &[f64]) -> Vec<f64> {
    let mut p = params;
    let mut x = to_map(patch, side, channels);
    let mut cin = channels;
    while x.len() > 2 {
        x = maxpool(&relu(&conv3(&x, cin, 4, &mut p)));
        cin = 4;
    }
    let t = dense(&flatten(&x), e, &mut p);
    assert!(p.is_empty());
    t.into_iter().map(|v| std::f64::consts::PI * sigmoid(v)).collect()
}

pub fn naive_decode(features: &[f64], side: usize, channels: usize, params: &[f64]) -> Vec<f64> {
    let mut p = params;
    let mut x = to_map(&dense(features, 16, &mut p), 2, 4);
    while x.len() < side {
        x = relu(&convt2(&x, 4, 4, &mut p));
    }
    let y = conv3(&x, 4, channels, &mut p);
    assert!(p.is_empty());
    flatten(&y).into_iter().map(sigmoid).collect()
}
