//! Representation analyses: feature-magnitude ranking, k-means clustering
//! and adjusted mutual information against ground truth.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;

pub const KMEANS_TOLERANCE: f64 = 1e-6;
pub const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("vectors have differing lengths")]
    Ragged,
    #[error("k = {k} is outside 1..={points}")]
    ClusterCount { k: usize, points: usize },
    #[error("labelings have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("label {label} not below k = {k}")]
    Label { label: usize, k: usize },
    #[error("non-finite coordinate")]
    NonFinite,
}

/// Cluster or class assignments with labels in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    assignments: Vec<usize>,
    k: usize,
}

impl Labeling {
    pub fn new(assignments: Vec<usize>, k: usize) -> Result<Self, AnalysisError> {
        if let Some(&label) = assignments.iter().find(|&&a| a >= k) {
            return Err(AnalysisError::Label { label, k });
        }
        Ok(Labeling { assignments, k })
    }

    /// `k` is one more than the largest label.
    pub fn from_assignments(assignments: Vec<usize>) -> Self {
        let k = assignments.iter().max().map_or(0, |m| m + 1);
        Labeling { assignments, k }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

fn check_batch(points: &[Vec<f64>]) -> Result<usize, AnalysisError> {
    let first = points.first().ok_or(AnalysisError::EmptyBatch)?;
    if points.iter().any(|p| p.len() != first.len()) {
        return Err(AnalysisError::Ragged);
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    Ok(first.len())
}

/// Mean absolute value of every feature index over the batch, sorted
/// descending.
pub fn feature_magnitudes(vectors: &[Vec<f64>]) -> Result<Vec<f64>, AnalysisError> {
    let dim = check_batch(vectors)?;
    let mut sums = vec![0.0; dim];
    for v in vectors {
        for (s, x) in sums.iter_mut().zip(v) {
            *s += x.abs();
        }
    }
    let n = vectors.len() as f64;
    let mut means: Vec<f64> = sums.into_iter().map(|s| s / n).collect();
    means.sort_by(|a, b| b.total_cmp(a));
    Ok(means)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labeling: Labeling,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares of the final assignment.
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if r < *d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            // Every remaining point coincides with a centroid.
            chosen.iter().position(|c| !c).unwrap_or(0)
        };
        chosen[pick] = true;
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &points[pick]));
        }
        centroids.push(points[pick].clone());
    }
    centroids
}

/// Seeded k-means++ followed by Lloyd iterations until no centroid moves
/// by [`KMEANS_TOLERANCE`] or [`KMEANS_MAX_ITER`] iterations. An empty
/// cluster keeps its previous centroid.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult, AnalysisError> {
    let dim = check_batch(points)?;
    if k == 0 || k > points.len() {
        return Err(AnalysisError::ClusterCount { k, points: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp(points, k, &mut rng);
    let mut assign = vec![0usize; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut inertia = 0.0;
        for (a, p) in assign.iter_mut().zip(points) {
            let (j, d) = nearest(p, &centroids);
            *a = j;
            inertia += d;
        }
        history.push(inertia);
        if iterations == KMEANS_MAX_ITER {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(points) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for ((c, s), &m) in centroids.iter_mut().zip(sums).zip(&counts) {
            if m == 0 {
                continue;
            }
            let next: Vec<f64> = s.into_iter().map(|v| v / m as f64).collect();
            shift = shift.max(math::sqrt(dist2(c, &next)));
            *c = next;
        }
        if shift < KMEANS_TOLERANCE {
            // Reassign once more so labels match the final centroids.
            let mut inertia = 0.0;
            for (a, p) in assign.iter_mut().zip(points) {
                let (j, d) = nearest(p, &centroids);
                *a = j;
                inertia += d;
            }
            history.push(inertia);
            break;
        }
    }
    let inertia = *history.last().expect("at least one assignment step");
    Ok(KMeansResult {
        labeling: Labeling { assignments: assign, k },
        centroids,
        inertia,
        inertia_history: history,
        iterations,
    })
}

// Relabel in order of first appearance.
fn canonical(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: Vec<(usize, usize)> = Vec::new();
    let out = labels
        .iter()
        .map(|&l| match map.iter().find(|(from, _)| *from == l) {
            Some(&(_, to)) => to,
            None => {
                map.push((l, map.len()));
                map.len() - 1
            }
        })
        .collect();
    (out, map.len())
}

fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * math::ln(p)
        })
        .sum()
}

fn ami_canonical(a: &[usize], ka: usize, b: &[usize], kb: usize) -> f64 {
    let n = a.len();
    let nf = n as f64;
    let mut table = vec![vec![0usize; kb]; ka];
    for (&i, &j) in a.iter().zip(b) {
        table[i][j] += 1;
    }
    let rows: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<usize> = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();

    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let v = nij as f64;
                mi += v / nf * math::ln(nf * v / (rows[i] as f64 * cols[j] as f64));
            }
        }
    }

    let ln_n = ln_factorial(n);
    let mut emi = 0.0;
    for &ai in &rows {
        for &bj in &cols {
            let lo = (ai + bj).saturating_sub(n).max(1);
            let hi = ai.min(bj);
            let fixed = ln_factorial(ai) + ln_factorial(bj) + ln_factorial(n - ai) + ln_factorial(n - bj) - ln_n;
            for nij in lo..=hi {
                let v = nij as f64;
                let term = v / nf * math::ln(nf * v / (ai as f64 * bj as f64));
                let ln_p = fixed
                    - ln_factorial(nij)
                    - ln_factorial(ai - nij)
                    - ln_factorial(bj - nij)
                    - ln_factorial(n + nij - ai - bj);
                emi += term * math::exp(ln_p);
            }
        }
    }

    let mean_h = (entropy(&rows, nf) + entropy(&cols, nf)) / 2.0;
    let mut denom = mean_h - emi;
    if denom < 0.0 {
        denom = denom.min(-f64::EPSILON);
    } else {
        denom = denom.max(f64::EPSILON);
    }
    (mi - emi) / denom
}

/// Adjusted mutual information with arithmetic-mean normalization and the
/// hypergeometric expected mutual information. Identical partitions score
/// exactly 1; the value is exactly symmetric and label-permutation invariant.
pub fn ami(a: &Labeling, b: &Labeling) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnalysisError::EmptyBatch);
    }
    let (ca, ka) = canonical(&a.assignments);
    let (cb, kb) = canonical(&b.assignments);
    if ca == cb {
        return Ok(1.0);
    }
    // A fixed argument order makes the result exactly symmetric.
    Ok(if ca <= cb { ami_canonical(&ca, ka, &cb, kb) } else { ami_canonical(&cb, kb, &ca, ka) })
}
