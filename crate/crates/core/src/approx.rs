//! Step-kernel discretization of kernels on `[0, 1]`.
//!
//! Block-averaging a kernel over the uniform grid `I_i = [i/n, (i+1)/n)`
//! gives an `n × n` matrix whose entropy at the uniform pmf is the entropy of
//! the step kernel. Its typicalities are block means of the continuous
//! typicality, so by Jensen the block entropy never exceeds the continuous
//! one and converges to it as `n` grows. Setting the block diagonal to 1
//! ("diagonal repair") yields a similarity matrix and lowers the entropy by at
//! most `1/(ε n)`, where `ε` bounds the block typicalities from below.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::discrete::{entropy, entropy_unchecked, row_typicality};
use crate::error::{check_dim, Error, Result};
use crate::matrix::{SimilarityMatrix, SymmetricMatrix};
use crate::numeric::{compensated_sum, gauss_legendre, gauss_legendre_on};
use crate::pmf::Pmf;

/// Default Gauss–Legendre points per axis per block.
pub const DEFAULT_BLOCK_QUADRATURE: usize = 32;
/// Default outer and inner quadrature orders for the continuous reference.
pub const DEFAULT_REFERENCE_QUADRATURE: usize = 128;
/// Typicality floor below which the continuous reference is refused.
pub const TYPICALITY_FLOOR: f64 = 1e-6;
/// Largest grid [`embed_discrete`] searches for a resolving resolution.
pub const MAX_EMBED_GRID: usize = 1_000_000;
/// Largest grid [`embed_discrete`] will materialize as a dense step kernel.
pub const MAX_MATERIALIZED_GRID: usize = 4096;

const SPOT_CHECK_GRID: usize = 32;
const SPOT_CHECK_TOL: f64 = 1e-12;

type Eval = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A similarity kernel on `[0, 1]²`.
///
/// `breakpoints` lists interior points where the kernel may jump; quadrature
/// rules are split there so piecewise-constant kernels integrate exactly.
#[derive(Clone)]
pub struct KernelFunction {
    name: String,
    eval: Arc<Eval>,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for KernelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelFunction")
            .field("name", &self.name)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl KernelFunction {
    /// Wraps an evaluator, spot-checking symmetry and the unit diagonal on a
    /// 32-point grid.
    pub fn new(name: impl Into<String>, eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::with_breakpoints(name, eval, Vec::new())
    }

    pub fn with_breakpoints(
        name: impl Into<String>,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        mut breakpoints: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        breakpoints.retain(|&b| b > 0.0 && b < 1.0);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let grid: Vec<f64> = (0..SPOT_CHECK_GRID)
            .map(|i| (i as f64 + 0.5) / SPOT_CHECK_GRID as f64)
            .collect();
        for &u in &grid {
            let d = eval(u, u);
            if (d - 1.0).abs() > SPOT_CHECK_TOL {
                return Err(Error::InvalidKernel(format!("{name}: K({u},{u}) = {d} is not 1")));
            }
            for &v in &grid {
                let (a, b) = (eval(u, v), eval(v, u));
                if (a - b).abs() > SPOT_CHECK_TOL {
                    return Err(Error::InvalidKernel(format!(
                        "{name}: K({u},{v}) = {a} differs from K({v},{u}) = {b}"
                    )));
                }
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::InvalidKernel(format!("{name}: K({u},{v}) = {a} outside [0,1]")));
                }
            }
        }
        Ok(Self {
            name,
            eval: Arc::new(eval),
            breakpoints,
        })
    }

    /// `exp(-(u - u')² / ℓ²)`.
    pub fn gaussian(ell: f64) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::Domain(format!("length scale {ell} must be positive")));
        }
        let inv = 1.0 / (ell * ell);
        Self::new(format!("gauss:{ell}"), move |u, v| (-(u - v) * (u - v) * inv).exp())
    }

    /// `exp(-δ |u - u'|^α)`.
    pub fn exponential(delta: f64, alpha: f64) -> Result<Self> {
        if !(delta > 0.0 && alpha > 0.0 && delta.is_finite() && alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "exp kernel needs δ, α > 0 (got {delta}, {alpha})"
            )));
        }
        Self::new(format!("exp:{delta},{alpha}"), move |u, v| {
            (-delta * (u - v).abs().powf(alpha)).exp()
        })
    }

    /// Indicator of lying in the same cell of `[0, b1), [b1, b2), …, [bk, 1]`.
    pub fn partition(breaks: &[f64]) -> Result<Self> {
        if breaks.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(Error::Domain(format!("breakpoints {breaks:?} must lie in (0, 1)")));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!("breakpoints {breaks:?} must be increasing")));
        }
        let b = breaks.to_vec();
        let cell = move |u: f64| b.partition_point(|&x| x <= u);
        let label = breaks.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        Self::with_breakpoints(
            format!("partition:{label}"),
            move |u, v| if cell(u) == cell(v) { 1.0 } else { 0.0 },
            breaks.to_vec(),
        )
    }

    /// The constant kernel 1.
    pub fn ones() -> Self {
        Self::new("ones", |_, _| 1.0).expect("constant kernel is valid")
    }

    /// Parses `gauss:<ell>`, `exp:<delta>,<alpha>`, `partition:<b1>,<b2>,…`
    /// or `ones`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Domain(format!("bad number {s:?} in kernel spec: {e}")))
                })
                .collect()
        };
        match name.trim() {
            "gauss" => match nums()?.as_slice() {
                [ell] => Self::gaussian(*ell),
                _ => Err(Error::Domain(format!("expected gauss:<ell>, got {spec:?}"))),
            },
            "exp" => match nums()?.as_slice() {
                [delta, alpha] => Self::exponential(*delta, *alpha),
                _ => Err(Error::Domain(format!("expected exp:<delta>,<alpha>, got {spec:?}"))),
            },
            "partition" => {
                let b = nums()?;
                if b.is_empty() {
                    return Err(Error::Domain("partition kernel needs breakpoints".into()));
                }
                Self::partition(&b)
            }
            "ones" if args.is_empty() => Ok(Self::ones()),
            _ => Err(Error::Domain(format!("unknown kernel spec {spec:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        (self.eval)(u, v)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Composite rule on `[a, b]` split at interior breakpoints and `extra`.
    fn rule(&self, a: f64, b: f64, extra: Option<f64>, base: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints.iter().copied().filter(|&x| x > a && x < b));
        if let Some(e) = extra.filter(|&e| e > a && e < b) {
            cuts.push(e);
        }
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2)
            .flat_map(|w| gauss_legendre_on(w[0], w[1], &base.0, &base.1))
            .collect()
    }
}

/// A block-constant kernel on the uniform `n`-grid; block `(i, j)` is the
/// value on `I_i × I_j`. The diagonal may fall below 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    blocks: SymmetricMatrix,
}

impl StepKernel {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        Ok(Self {
            blocks: SymmetricMatrix::new(n, entries)?,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Self {
            blocks: SymmetricMatrix::from_rows(rows)?,
        })
    }

    pub fn n(&self) -> usize {
        self.blocks.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.blocks.get(i, j)
    }

    pub fn blocks(&self) -> &SymmetricMatrix {
        &self.blocks
    }

    /// Block typicalities `(1/n) Σ_j S_ij`.
    pub fn row_typicality(&self) -> Vec<f64> {
        let n = self.n();
        let w = vec![1.0 / n as f64; n];
        (0..n).map(|i| row_typicality(self.blocks.row(i), &w)).collect()
    }
}

/// Block averages `n² ∫∫_{I_i × I_j} K` by tensor Gauss–Legendre with `q`
/// points per axis (per sub-interval when breakpoints split a block).
pub fn block_average(kernel: &KernelFunction, n: usize, q: usize) -> Result<StepKernel> {
    if n == 0 || q == 0 {
        return Err(Error::Domain("block_average needs n >= 1 and q >= 1".into()));
    }
    let base = gauss_legendre(q);
    let nf = n as f64;
    let rules: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|i| kernel.rule(i as f64 / nf, (i + 1) as f64 / nf, None, &base))
        .collect();
    let scale = nf * nf;
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let mut acc = 0.0;
                    for &(u, wu) in &rules[i] {
                        let mut inner = 0.0;
                        for &(v, wv) in &rules[j] {
                            inner += wv * kernel.eval(u, v);
                        }
                        acc += wu * inner;
                    }
                    (acc * scale).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    let mut entries = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let j = i + offset;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    StepKernel::new(n, entries)
}

/// Copies off-diagonal blocks and sets the diagonal to 1.
pub fn diagonal_repair(step: &StepKernel) -> SimilarityMatrix {
    let n = step.n();
    let mut entries = step.blocks().entries().to_vec();
    for i in 0..n {
        entries[i * n + i] = 1.0;
    }
    SimilarityMatrix::new(n, entries).expect("repaired block matrix is a similarity matrix")
}

/// Entropy of the block matrix at the uniform pmf on `n` states.
pub fn step_entropy(step: &StepKernel) -> f64 {
    let n = step.n();
    entropy_unchecked(n, step.blocks().entries(), &vec![1.0 / n as f64; n])
}

/// `-∫₀¹ ln τ(u) du` with `τ(u) = ∫₀¹ K(u, u') du'` by nested Gauss–Legendre.
/// The inner rule is split at `u' = u` to resolve kinks on the diagonal.
pub fn continuous_entropy_reference(kernel: &KernelFunction, q_outer: usize, q_inner: usize) -> Result<f64> {
    if q_outer == 0 || q_inner == 0 {
        return Err(Error::Domain("quadrature orders must be positive".into()));
    }
    let outer = kernel.rule(0.0, 1.0, None, &gauss_legendre(q_outer));
    let inner_base = gauss_legendre(q_inner);
    let mut terms = Vec::with_capacity(outer.len());
    for &(u, w) in &outer {
        let inner = kernel.rule(0.0, 1.0, Some(u), &inner_base);
        let tau = compensated_sum(inner.iter().map(|&(v, wv)| wv * kernel.eval(u, v)));
        if tau <= TYPICALITY_FLOOR {
            return Err(Error::TypicalityTooSmall {
                at: u,
                value: tau,
                floor: TYPICALITY_FLOOR,
            });
        }
        terms.push(-w * tau.min(1.0).ln());
    }
    Ok(compensated_sum(terms))
}

/// One row of a discretization convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Entropy of the block-average matrix.
    pub h_block: f64,
    /// Entropy after diagonal repair.
    pub h_repaired: f64,
    pub repair_gap: f64,
    /// `1/(ε n)` with `ε` the smallest block typicality.
    pub repair_bound: f64,
    pub epsilon: f64,
    pub reference: f64,
}

/// Block and repaired entropies for each `n`, against the continuous reference.
pub fn convergence_table(kernel: &KernelFunction, ns: &[usize], q: usize) -> Result<Vec<ConvergenceRow>> {
    if ns.is_empty() {
        return Err(Error::Domain("convergence_table needs at least one n".into()));
    }
    let reference = continuous_entropy_reference(kernel, DEFAULT_REFERENCE_QUADRATURE, DEFAULT_REFERENCE_QUADRATURE)?;
    ns.iter()
        .map(|&n| {
            let step = block_average(kernel, n, q)?;
            let h_block = step_entropy(&step);
            let h_repaired = entropy(&diagonal_repair(&step), &Pmf::uniform(n))?;
            let epsilon = step.row_typicality().into_iter().fold(f64::INFINITY, f64::min);
            Ok(ConvergenceRow {
                n,
                h_block,
                h_repaired,
                repair_gap: h_block - h_repaired,
                repair_bound: 1.0 / (epsilon * n as f64),
                epsilon,
                reference,
            })
        })
        .collect()
}

/// `‖S1 - S2‖_{L¹([0,1]²)} / eps`, an upper bound on `|H(S1) - H(S2)|` when
/// `eps` bounds both typicality vectors from below.
pub fn l1_entropy_bound(s1: &StepKernel, s2: &StepKernel, eps: f64) -> Result<f64> {
    check_dim("l1_entropy_bound", s1.n(), s2.n())?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let found = s1
        .row_typicality()
        .into_iter()
        .chain(s2.row_typicality())
        .fold(f64::INFINITY, f64::min);
    if found < eps {
        return Err(Error::EpsilonNotLowerBound { eps, found });
    }
    let n = s1.n() as f64;
    let l1 = compensated_sum(
        s1.blocks()
            .entries()
            .iter()
            .zip(s2.blocks().entries())
            .map(|(a, b)| (a - b).abs()),
    ) / (n * n);
    let bound = l1 / eps;
    let diff = (step_entropy(s1) - step_entropy(s2)).abs();
    if diff > bound * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::InvariantViolation(format!(
            "entropy difference {diff} exceeds L1 bound {bound}"
        )));
    }
    Ok(bound)
}

/// Lays the states of `(K, p)` out on the smallest uniform grid resolving `p`
/// (state `x` occupies `p_x · N` consecutive cells, in index order) and
/// returns the induced step kernel. Its step entropy equals `H_K(p)`.
pub fn embed_discrete(kernel: &SimilarityMatrix, p: &Pmf) -> Result<StepKernel> {
    check_dim("embed_discrete", kernel.n(), p.n())?;
    let grid = (1..=MAX_EMBED_GRID)
        .find(|&g| {
            p.weights()
                .iter()
                .all(|&w| (w * g as f64 - (w * g as f64).round()).abs() <= 1e-9)
        })
        .ok_or(Error::PmfNotResolvable(MAX_EMBED_GRID))?;
    if grid > MAX_MATERIALIZED_GRID {
        return Err(Error::Domain(format!(
            "resolving grid {grid} exceeds the dense limit {MAX_MATERIALIZED_GRID}"
        )));
    }
    let mut cells = Vec::with_capacity(grid);
    for (x, &w) in p.weights().iter().enumerate() {
        cells.extend(std::iter::repeat_n(x, (w * grid as f64).round() as usize));
    }
    if cells.len() != grid {
        return Err(Error::InvariantViolation(format!(
            "layout covers {} of {grid} cells",
            cells.len()
        )));
    }
    let entries = (0..grid * grid)
        .map(|idx| kernel.get(cells[idx / grid], cells[idx % grid]))
        .collect();
    StepKernel::new(grid, entries)
}
