//! Conditional similarity-sensitive entropy and mutual information.
//!
//! The conditional entropy averages the entropy of each conditional law
//! `p_{X|Y=y}` under the same kernel `K_X`:
//! `H_K(X|Y) = Σ_y p_Y(y) H_K(p_{X|Y=y})`, skipping columns with `p_Y(y) = 0`.
//! For partition kernels this is the Shannon conditional entropy of the block
//! variable. For fuzzy kernels conditioning can *increase* the entropy, so
//! `I_K(X;Y) = H_K(X) - H_K(X|Y)` is signed.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::coarse::{induce_kernel_max, FiberMap};
use crate::discrete::entropy;
use crate::error::{check_dim, Error, Result};
use crate::matrix::SimilarityMatrix;
use crate::numeric::compensated_sum;
use crate::pmf::{JointPmf, Pmf};
use crate::rng::{substream, StreamRng};

/// Threshold below which a concavity gap counts as a violation.
pub const CONCAVITY_SLACK: f64 = 1e-10;

/// `(p_X, p_Y)`.
pub fn marginals(joint: &JointPmf) -> (Pmf, Pmf) {
    joint.marginals()
}

/// Per-column conditional entropies `H_K(X | Y = y)`; `None` where `p_Y(y) = 0`.
pub fn conditional_entropies(kernel: &SimilarityMatrix, joint: &JointPmf) -> Result<Vec<Option<f64>>> {
    check_dim("conditional_entropy", kernel.n(), joint.nx())?;
    (0..joint.ny())
        .map(|y| joint.conditional_x_given_y(y).map(|c| entropy(kernel, &c)).transpose())
        .collect()
}

/// `H_K(X | Y) = Σ_y p_Y(y) H_K(X | Y = y)`.
pub fn conditional_entropy(kernel: &SimilarityMatrix, joint: &JointPmf) -> Result<f64> {
    let per_y = conditional_entropies(kernel, joint)?;
    let (_, py) = joint.marginals();
    Ok(compensated_sum(
        per_y.iter().enumerate().filter_map(|(y, h)| h.map(|h| py.get(y) * h)),
    ))
}

/// `I_K(X;Y) = H_K(X) - H_K(X|Y)`. Not clamped: negative for some fuzzy kernels.
pub fn mutual_information(kernel: &SimilarityMatrix, joint: &JointPmf) -> Result<f64> {
    let (px, _) = joint.marginals();
    Ok(entropy(kernel, &px)? - conditional_entropy(kernel, joint)?)
}

/// A three-state kernel and joint law for which `H_K(X|Y) > H_K(X)`.
pub fn counterexample_instance() -> (SimilarityMatrix, JointPmf) {
    let k = SimilarityMatrix::from_rows(&[vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 1.0], vec![0.5, 1.0, 1.0]])
        .expect("valid kernel");
    let j = JointPmf::from_rows(&[vec![0.0, 0.25], vec![0.0, 0.25], vec![0.25, 0.25]]).expect("valid joint");
    (k, j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalCoarseReport {
    pub kernel_w: SimilarityMatrix,
    /// `H_{K_X}(X | Y)`
    pub h_x_given_y: f64,
    /// `H_{K_W}(W | Y)` with `W = f(X)`
    pub h_w_given_y: f64,
    pub holds: bool,
}

/// Compares `H_{K_X}(X|Y)` with `H_{K_W}(f(X)|Y)` for the fiber-max kernel `K_W`.
pub fn conditional_coarse_check(
    kernel: &SimilarityMatrix,
    joint: &JointPmf,
    f: &FiberMap,
) -> Result<ConditionalCoarseReport> {
    check_dim("conditional_coarse_check", f.n(), joint.nx())?;
    let kw = induce_kernel_max(kernel, f)?;
    let ny = joint.ny();
    let mut mass = vec![0.0; f.m() * ny];
    for x in 0..joint.nx() {
        for y in 0..ny {
            mass[f.apply(x) * ny + y] += joint.get(x, y);
        }
    }
    let joint_w = JointPmf::new(f.m(), ny, mass)?;
    let h_x_given_y = conditional_entropy(kernel, joint)?;
    let h_w_given_y = conditional_entropy(&kw, &joint_w)?;
    Ok(ConditionalCoarseReport {
        kernel_w: kw,
        h_x_given_y,
        h_w_given_y,
        holds: h_x_given_y >= h_w_given_y - crate::coarse::ENTROPY_SLACK,
    })
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} not in [0, 1]")))
    }
}

/// Closed-form entropy of the two-state kernel with off-diagonal `k` at `(p, 1-p)`:
/// `-[p ln(k + (1-k)p) + (1-p) ln(1 - (1-k)p)]`.
pub fn binary_entropy(k: f64, p: f64) -> Result<f64> {
    check_unit("k", k)?;
    check_unit("p", p)?;
    let a = 1.0 - k;
    let term = |w: f64, tau: f64| if w > 0.0 { w * tau.ln() } else { 0.0 };
    Ok(-(term(p, 1.0 - a * (1.0 - p)) + term(1.0 - p, 1.0 - a * p)))
}

/// Second derivative in `p` of [`binary_entropy`]:
/// `a N(p,a) / ((1-ap)² (1-a(1-p))²)` with `a = 1-k` and
/// `N(p,a) = a³p² - a³p + a³ - 4a² + 7a - 4`.
///
/// At `k = 0`, `p ∈ {0, 1}` the Shannon limit `-∞` is returned.
pub fn binary_second_derivative(k: f64, p: f64) -> Result<f64> {
    check_unit("k", k)?;
    check_unit("p", p)?;
    let a = 1.0 - k;
    let a3 = a * a * a;
    let numer = a3 * p * p - a3 * p + a3 - 4.0 * a * a + 7.0 * a - 4.0;
    let denom = (1.0 - a * p).powi(2) * (1.0 - a * (1.0 - p)).powi(2);
    if denom == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(a * numer / denom)
}

/// A mixture on which `H_K` fell below the chord.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityWitness {
    pub trial: usize,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub lambda: f64,
    /// `λ H(p1) + (1-λ) H(p2) - H(λ p1 + (1-λ) p2)`, positive for a violation.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub trials: usize,
    pub violations: Vec<ConcavityWitness>,
}

fn dirichlet_ones(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// Randomized search for concavity failures of `p ↦ H_K(p)`.
///
/// Each trial draws `p1, p2 ~ Dirichlet(1, …, 1)` and `λ ~ U(0, 1)` from its
/// own substream of `seed`, so the report does not depend on thread count.
pub fn concavity_probe(kernel: &SimilarityMatrix, trials: usize, seed: u64) -> Result<ConcavityReport> {
    if trials == 0 {
        return Err(Error::Domain("concavity_probe needs at least one trial".into()));
    }
    let n = kernel.n();
    let outcomes: Vec<Option<ConcavityWitness>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(seed, trial as u64);
            let p1 = dirichlet_ones(n, &mut rng);
            let p2 = dirichlet_ones(n, &mut rng);
            let lambda: f64 = rng.random();
            let mix: Vec<f64> = p1
                .iter()
                .zip(&p2)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect();
            let h = |w: &[f64]| crate::discrete::entropy_unchecked(n, kernel.entries(), w);
            let gap = lambda * h(&p1) + (1.0 - lambda) * h(&p2) - h(&mix);
            (gap > CONCAVITY_SLACK).then_some(ConcavityWitness {
                trial,
                p1,
                p2,
                lambda,
                gap,
            })
        })
        .collect();
    Ok(ConcavityReport {
        trials,
        violations: outcomes.into_iter().flatten().collect(),
    })
}

/// Product kernel `(K_X ⊗ K_Y)[(x,y),(x',y')] = K_X[x][x'] K_Y[y][y']`,
/// flattened row-major (x major, y minor).
pub fn product_kernel(kx: &SimilarityMatrix, ky: &SimilarityMatrix) -> SimilarityMatrix {
    let (nx, ny) = (kx.n(), ky.n());
    let n = nx * ny;
    let entries = (0..n * n)
        .map(|idx| {
            let (a, b) = (idx / n, idx % n);
            kx.get(a / ny, b / ny) * ky.get(a % ny, b % ny)
        })
        .collect();
    SimilarityMatrix::new(n, entries).expect("product of similarity matrices")
}

/// `H_{K_X}(p_X) + H_{K_Y}(p_Y) - H_{K_X ⊗ K_Y}(p_XY)`.
pub fn symmetric_mutual_information(kx: &SimilarityMatrix, ky: &SimilarityMatrix, joint: &JointPmf) -> Result<f64> {
    check_dim("symmetric_mutual_information (X)", kx.n(), joint.nx())?;
    check_dim("symmetric_mutual_information (Y)", ky.n(), joint.ny())?;
    let (px, py) = joint.marginals();
    let hxy = entropy(&product_kernel(kx, ky), &joint.flatten())?;
    Ok(entropy(kx, &px)? + entropy(ky, &py)? - hxy)
}
