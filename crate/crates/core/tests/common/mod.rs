//! Random instance generators and brute-force oracles shared by the
//! integration tests.

#![allow(dead_code)]

use kentropy::coarse::FiberMap;
use kentropy::rng::{substream, StreamRng};
use kentropy::{Pmf, SimilarityMatrix};
use rand::Rng;

pub fn rng(seed: u64, index: u64) -> StreamRng {
    substream(seed, index)
}

/// Symmetric kernel with some exact zeros and ones off the diagonal.
pub fn random_kernel(rng: &mut StreamRng, n: usize) -> SimilarityMatrix {
    SimilarityMatrix::from_fn(n, |_, _| match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random::<f64>(),
    })
    .unwrap()
}

/// Kernel with entries bounded away from zero.
pub fn positive_kernel(rng: &mut StreamRng, n: usize) -> SimilarityMatrix {
    SimilarityMatrix::from_fn(n, |_, _| rng.random_range(0.05..=1.0)).unwrap()
}

/// Pmf with roughly a fifth of the states at zero mass (at least one charged).
pub fn random_pmf(rng: &mut StreamRng, n: usize) -> Pmf {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_range(0..5) == 0 {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    Pmf::new(w.into_iter().map(|v| v / s).collect()).unwrap()
}

pub fn full_support_pmf(rng: &mut StreamRng, n: usize) -> Pmf {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = w.iter().sum();
    Pmf::new(w.into_iter().map(|v| v / s).collect()).unwrap()
}

/// Surjective map from `n` states onto `m <= n` classes.
pub fn surjective_map(rng: &mut StreamRng, n: usize, m: usize) -> FiberMap {
    let mut labels: Vec<usize> = (0..n).map(|x| if x < m { x } else { rng.random_range(0..m) }).collect();
    shuffle(rng, &mut labels);
    FiberMap::new(labels, m).unwrap()
}

/// Injective map from `n` states into `m >= n` classes.
pub fn injective_map(rng: &mut StreamRng, n: usize, m: usize) -> FiberMap {
    let mut targets: Vec<usize> = (0..m).collect();
    shuffle(rng, &mut targets);
    FiberMap::new(targets[..n].to_vec(), m).unwrap()
}

pub fn permutation(rng: &mut StreamRng, n: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (0..n).collect();
    shuffle(rng, &mut s);
    s
}

pub fn shuffle<T>(rng: &mut StreamRng, v: &mut [T]) {
    for i in (1..v.len()).rev() {
        v.swap(i, rng.random_range(0..=i));
    }
}

/// `-Σ p ln(Kp)` evaluated naively from rows.
pub fn naive_entropy(k: &[Vec<f64>], p: &[f64]) -> f64 {
    let mut h = 0.0;
    for (x, row) in k.iter().enumerate() {
        if p[x] > 0.0 {
            let tau: f64 = row.iter().zip(p).map(|(a, b)| a * b).sum();
            h -= p[x] * tau.ln();
        }
    }
    h
}

pub fn naive_shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

pub fn pushforward(labels: &[usize], m: usize, p: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; m];
    for (x, &l) in labels.iter().enumerate() {
        q[l] += p[x];
    }
    q
}

/// Fiber maximum over states with `keep[x]`, unit diagonal.
pub fn naive_fiber_max(k: &[Vec<f64>], labels: &[usize], m: usize, keep: &[bool]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m]; m];
    for x in 0..labels.len() {
        for x2 in 0..labels.len() {
            if keep[x] && keep[x2] && labels[x] != labels[x2] {
                let e = &mut out[labels[x]][labels[x2]];
                *e = f64::max(*e, k[x][x2]);
            }
        }
    }
    for (c, row) in out.iter_mut().enumerate() {
        row[c] = 1.0;
    }
    out
}

pub fn back_compose(ky: &[Vec<f64>], labels: &[usize]) -> Vec<Vec<f64>> {
    labels
        .iter()
        .map(|&a| labels.iter().map(|&b| ky[a][b]).collect())
        .collect()
}
