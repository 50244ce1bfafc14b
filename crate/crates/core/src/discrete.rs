//! Similarity-sensitive entropy on finite state spaces.
//!
//! For a similarity matrix `K` and pmf `p`, the typicality of state `x` is
//! `τ(x) = (K p)_x`, the expected similarity of `x` to a random state, and
//! the order-1 similarity-sensitive entropy is
//!
//! ```text
//! H_K(p) = -Σ_x p_x ln τ(x)
//! ```
//!
//! States with `p_x = 0` contribute nothing. The unit diagonal gives
//! `τ(x) ≥ p_x`, so the logarithm is finite on the support and `H_K(p)` never
//! exceeds the Shannon entropy. With `K = I` it is the Shannon entropy; with a
//! 0/1 block kernel it is the Shannon entropy of the block variable.

use crate::error::{check_dim, Error, Result};
use crate::matrix::SimilarityMatrix;
use crate::numeric::{compensated_sum, xlogx};
use crate::pmf::Pmf;

/// Default merge tolerance for [`typicality_distribution`].
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;

/// Typicality values `τ = K p`, one per state.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityVector {
    values: Vec<f64>,
}

impl TypicalityVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Labels assigning each of `n` states to one of `m` nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionLabels {
    m: usize,
    labels: Vec<usize>,
}

impl PartitionLabels {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidLabels("partition needs at least one state".into()));
        }
        let m = labels.iter().copied().max().unwrap_or(0) + 1;
        let mut seen = vec![false; m];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidLabels(format!("block {missing} is empty")));
        }
        Ok(Self { m, labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn blocks(&self) -> usize {
        self.m
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// `τ = K p`.
pub fn typicality(kernel: &SimilarityMatrix, p: &Pmf) -> Result<TypicalityVector> {
    check_dim("typicality", kernel.n(), p.n())?;
    let values = (0..kernel.n())
        .map(|x| row_typicality(kernel.row(x), p.weights()))
        .collect();
    Ok(TypicalityVector { values })
}

#[inline]
pub(crate) fn row_typicality(row: &[f64], weights: &[f64]) -> f64 {
    compensated_sum(row.iter().zip(weights).map(|(k, w)| k * w)).min(1.0)
}

/// `H_K(p) = -Σ p_x ln (K p)_x`, in nats.
pub fn entropy(kernel: &SimilarityMatrix, p: &Pmf) -> Result<f64> {
    check_dim("entropy", kernel.n(), p.n())?;
    Ok(entropy_unchecked(kernel.n(), kernel.entries(), p.weights()))
}

/// Entropy of an arbitrary nonnegative row-major `n × n` matrix at `weights`.
/// Rows whose typicality is zero on the support yield `+∞`.
pub(crate) fn entropy_unchecked(n: usize, entries: &[f64], weights: &[f64]) -> f64 {
    let terms = (0..n).filter(|&x| weights[x] > 0.0).map(|x| {
        let tau = row_typicality(&entries[x * n..(x + 1) * n], weights);
        -weights[x] * tau.ln()
    });
    compensated_sum(terms)
}

/// Shannon entropy `-Σ p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &Pmf) -> f64 {
    -compensated_sum(p.weights().iter().map(|&w| xlogx(w)))
}

/// The 0/1 kernel that is 1 exactly on pairs sharing a block.
pub fn partition_kernel(labels: &PartitionLabels) -> SimilarityMatrix {
    let l = labels.labels();
    let n = l.len();
    let entries = (0..n * n)
        .map(|idx| if l[idx / n] == l[idx % n] { 1.0 } else { 0.0 })
        .collect();
    SimilarityMatrix::new(n, entries).expect("block indicator is a similarity matrix")
}

/// Block masses `α_j = Σ_{x in block j} p_x`.
pub fn coarse_pmf(labels: &PartitionLabels, p: &Pmf) -> Result<Pmf> {
    check_dim("coarse_pmf", labels.n(), p.n())?;
    let mut parts = vec![Vec::new(); labels.blocks()];
    for (x, &l) in labels.labels().iter().enumerate() {
        parts[l].push(p.get(x));
    }
    Pmf::new(parts.into_iter().map(compensated_sum).collect())
}

/// Relabels states by `sigma`: `K'[σ(x)][σ(x')] = K[x][x']`, `p'[σ(x)] = p[x]`.
pub fn permute(kernel: &SimilarityMatrix, p: &Pmf, sigma: &[usize]) -> Result<(SimilarityMatrix, Pmf)> {
    let n = kernel.n();
    check_dim("permute (pmf)", n, p.n())?;
    check_dim("permute (permutation)", n, sigma.len())?;
    let mut seen = vec![false; n];
    for &s in sigma {
        if s >= n || seen[s] {
            return Err(Error::InvalidPermutation(format!(
                "{sigma:?} is not a bijection on 0..{n}"
            )));
        }
        seen[s] = true;
    }
    let mut entries = vec![0.0; n * n];
    let mut weights = vec![0.0; n];
    for x in 0..n {
        weights[sigma[x]] = p.get(x);
        for x2 in 0..n {
            entries[sigma[x] * n + sigma[x2]] = kernel.get(x, x2);
        }
    }
    Ok((SimilarityMatrix::new(n, entries)?, Pmf::new(weights)?))
}

/// One atom of the law of `τ(X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalityAtom {
    pub value: f64,
    pub mass: f64,
}

/// The law of `τ(X)` for `X ~ p`, as atoms sorted by value.
///
/// Values within `merge_tol` of an atom's smallest member are merged into it;
/// the merged value is the mass-weighted mean.
pub fn typicality_distribution(kernel: &SimilarityMatrix, p: &Pmf, merge_tol: f64) -> Result<Vec<TypicalityAtom>> {
    if merge_tol.is_nan() || merge_tol < 0.0 {
        return Err(Error::Domain(format!("merge tolerance {merge_tol} must be >= 0")));
    }
    let tau = typicality(kernel, p)?;
    let mut pairs: Vec<(f64, f64)> = p.support().map(|x| (tau.get(x), p.get(x))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut atoms = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let anchor = pairs[i].0;
        let mut j = i;
        while j < pairs.len() && pairs[j].0 - anchor <= merge_tol {
            j += 1;
        }
        let group = &pairs[i..j];
        let mass = compensated_sum(group.iter().map(|g| g.1));
        let value = compensated_sum(group.iter().map(|g| g.0 * g.1)) / mass;
        atoms.push(TypicalityAtom { value, mass });
        i = j;
    }
    Ok(atoms)
}

/// Outcome of the partition-kernel necessary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionCheck {
    pub holds: bool,
    pub atoms: Vec<TypicalityAtom>,
    /// Atoms whose mass is not a positive whole multiple of their value.
    pub violations: Vec<TypicalityAtom>,
}

/// Checks whether the typicality law has the shape forced by a finite
/// partition kernel: finitely many values `α`, each carrying mass `k·α` for
/// some whole number `k ≥ 1` (`k > 1` when several classes share a mass).
pub fn partition_necessary_condition(kernel: &SimilarityMatrix, p: &Pmf, tol: f64) -> Result<PartitionCheck> {
    let atoms = typicality_distribution(kernel, p, tol)?;
    let violations: Vec<_> = atoms
        .iter()
        .copied()
        .filter(|a| {
            let k = (a.mass / a.value).round();
            k < 1.0 || (a.mass - k * a.value).abs() > tol
        })
        .collect();
    Ok(PartitionCheck {
        holds: violations.is_empty(),
        atoms,
        violations,
    })
}
