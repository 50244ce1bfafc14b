//! Deterministic coarse-graining of kernelled state spaces.
//!
//! A map `f: X → Y` pushes a kernel forward by the fiberwise maximum
//! `K_Y[y][y'] = max_{f(x)=y, f(x')=y'} K_X[x][x']` and pulls a codomain
//! kernel back by `K_f[x][x'] = K_Y[f(x)][f(x')]`. The pulled-back kernel
//! dominates `K_X`, which yields `H_{K_X}(p) ≥ H_{K_f}(p) = H_{K_Y}(f_# p)`.
//! Lowering any entry of `K_Y` below the fiber maximum breaks the inequality
//! for some two-point pmf; [`minimality_adversary`] constructs it.

use crate::discrete::entropy;
use crate::error::{check_dim, Error, Result};
use crate::matrix::SimilarityMatrix;
use crate::numeric::compensated_sum;
use crate::pmf::Pmf;

/// Absolute slack used when comparing entropies.
pub const ENTROPY_SLACK: f64 = 1e-12;

/// A map from `n` states onto `m` classes. Empty fibers are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberMap {
    m: usize,
    labels: Vec<usize>,
}

impl FiberMap {
    pub fn new(labels: Vec<usize>, m: usize) -> Result<Self> {
        if labels.is_empty() || m == 0 {
            return Err(Error::InvalidLabels("map needs n >= 1 and m >= 1".into()));
        }
        if let Some((x, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= m) {
            return Err(Error::InvalidLabels(format!(
                "label {l} of state {x} is outside 0..{m}"
            )));
        }
        Ok(Self { m, labels })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: n,
            labels: (0..n).collect(),
        }
    }

    pub fn constant(n: usize) -> Self {
        Self {
            m: 1,
            labels: vec![0; n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.labels[x]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// The preimage `f⁻¹(y)` of every class, in increasing state order.
    pub fn fibers(&self) -> Vec<Vec<usize>> {
        let mut fibers = vec![Vec::new(); self.m];
        for (x, &y) in self.labels.iter().enumerate() {
            fibers[y].push(x);
        }
        fibers
    }

    pub fn is_injective(&self) -> bool {
        self.fibers().iter().all(|f| f.len() <= 1)
    }
}

/// Fiberwise maximum over the states accepted by `keep`. Off-diagonal entries
/// between classes with no kept state are 0; the diagonal is always 1.
fn fiber_max(kernel: &SimilarityMatrix, f: &FiberMap, keep: impl Fn(usize) -> bool) -> SimilarityMatrix {
    let m = f.m();
    let mut out = vec![0.0f64; m * m];
    let kept: Vec<usize> = (0..f.n()).filter(|&x| keep(x)).collect();
    for (a, &x) in kept.iter().enumerate() {
        let y = f.apply(x);
        for &x2 in &kept[a + 1..] {
            let y2 = f.apply(x2);
            if y != y2 {
                let v = kernel.get(x, x2);
                if v > out[y * m + y2] {
                    out[y * m + y2] = v;
                    out[y2 * m + y] = v;
                }
            }
        }
    }
    for y in 0..m {
        out[y * m + y] = 1.0;
    }
    SimilarityMatrix::new(m, out).expect("fiber maxima form a similarity matrix")
}

/// Induced codomain kernel by the fiberwise maximum rule.
pub fn induce_kernel_max(kernel: &SimilarityMatrix, f: &FiberMap) -> Result<SimilarityMatrix> {
    check_dim("induce_kernel_max", kernel.n(), f.n())?;
    Ok(fiber_max(kernel, f, |_| true))
}

/// Law-induced codomain kernel: the fiberwise maximum restricted to the
/// support of `p`.
pub fn induce_kernel_supported(kernel: &SimilarityMatrix, p: &Pmf, f: &FiberMap) -> Result<SimilarityMatrix> {
    check_dim("induce_kernel_supported (kernel)", kernel.n(), f.n())?;
    check_dim("induce_kernel_supported (pmf)", p.n(), f.n())?;
    Ok(fiber_max(kernel, f, |x| p.get(x) > 0.0))
}

/// Empirical induced kernel from labelled samples: off-diagonal entries are
/// the largest kernel value over observed cross-class pairs.
///
/// The sample maximum never exceeds the essential supremum it approximates,
/// so entries are biased downward for finite samples.
pub fn induce_kernel_from_samples<T>(
    classes: usize,
    samples: &[(usize, T)],
    kernel: impl Fn(&T, &T) -> f64,
) -> Result<SimilarityMatrix> {
    let mut by_class: Vec<Vec<&T>> = vec![Vec::new(); classes];
    for (c, t) in samples {
        if *c >= classes {
            return Err(Error::InvalidLabels(format!("sample class {c} outside 0..{classes}")));
        }
        by_class[*c].push(t);
    }
    if let Some(empty) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(empty));
    }
    SimilarityMatrix::from_fn(classes, |c, c2| {
        let mut best = 0.0f64;
        for a in &by_class[c] {
            for b in &by_class[c2] {
                best = best.max(kernel(a, b));
            }
        }
        best
    })
}

/// Back-composition `K_f[x][x'] = K_Y[f(x)][f(x')]`.
pub fn pullback(kernel_y: &SimilarityMatrix, f: &FiberMap) -> Result<SimilarityMatrix> {
    check_dim("pullback", kernel_y.n(), f.m())?;
    let n = f.n();
    let entries = (0..n * n)
        .map(|idx| kernel_y.get(f.apply(idx / n), f.apply(idx % n)))
        .collect();
    SimilarityMatrix::new(n, entries)
}

/// `q[y] = Σ_{f(x)=y} p[x]`.
pub fn pushforward_pmf(f: &FiberMap, p: &Pmf) -> Result<Pmf> {
    check_dim("pushforward_pmf", f.n(), p.n())?;
    let q = f
        .fibers()
        .iter()
        .map(|fiber| compensated_sum(fiber.iter().map(|&x| p.get(x))))
        .collect();
    Pmf::new(q)
}

/// The three entropies of the coarse-graining inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct DpiReport {
    pub kernel_y: SimilarityMatrix,
    /// `H_{K_X}(p)`
    pub h_x: f64,
    /// `H_{K_f}(p)`, the back-composed kernel on the source.
    pub h_f: f64,
    /// `H_{K_Y}(f_# p)`
    pub h_y: f64,
    pub dpi_holds: bool,
    pub backcomp_equal: bool,
}

/// Coarse-graining report using the fiberwise maximum kernel.
pub fn dpi_report(kernel: &SimilarityMatrix, p: &Pmf, f: &FiberMap) -> Result<DpiReport> {
    check_dim("dpi_report", p.n(), kernel.n())?;
    let ky = induce_kernel_max(kernel, f)?;
    report_for(kernel, p, f, ky)
}

/// Coarse-graining report using the support-restricted (law-induced) kernel.
pub fn dpi_report_supported(kernel: &SimilarityMatrix, p: &Pmf, f: &FiberMap) -> Result<DpiReport> {
    let ky = induce_kernel_supported(kernel, p, f)?;
    report_for(kernel, p, f, ky)
}

fn report_for(kernel: &SimilarityMatrix, p: &Pmf, f: &FiberMap, ky: SimilarityMatrix) -> Result<DpiReport> {
    let h_x = entropy(kernel, p)?;
    let h_f = entropy(&pullback(&ky, f)?, p)?;
    let h_y = entropy(&ky, &pushforward_pmf(f, p)?)?;
    Ok(DpiReport {
        kernel_y: ky,
        h_x,
        h_f,
        h_y,
        dpi_holds: h_x >= h_f - ENTROPY_SLACK,
        backcomp_equal: (h_f - h_y).abs() <= ENTROPY_SLACK,
    })
}

/// `ln(2 / (1 + m))`: entropy of the two-state kernel with off-diagonal `m`
/// at the uniform pmf. Strictly decreasing in `m`.
pub fn two_point_entropy(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::Domain(format!("off-diagonal similarity {m} not in [0, 1]")));
    }
    Ok((2.0 / (1.0 + m)).ln())
}

/// A certified data-processing violation for a candidate codomain kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DpiViolation {
    pub x: usize,
    pub x2: usize,
    /// Half the mass on each of `x`, `x2`.
    pub pmf: Pmf,
    /// `H_{K_X}` at the witness pmf.
    pub h_source: f64,
    /// `H` of the pulled-back candidate at the witness pmf.
    pub h_pulled: f64,
    /// `H` of the candidate at the pushed-forward witness pmf.
    pub h_coarse: f64,
}

/// Searches for a pair on which the candidate's pullback falls below `K_X`.
/// Returns the first such pair in row-major order together with the
/// two-point pmf on which the candidate violates the coarse-graining
/// inequality, or `None` if the pullback dominates `K_X` entrywise.
pub fn minimality_adversary(
    kernel: &SimilarityMatrix,
    f: &FiberMap,
    candidate: &SimilarityMatrix,
) -> Result<Option<DpiViolation>> {
    check_dim("minimality_adversary (kernel)", kernel.n(), f.n())?;
    check_dim("minimality_adversary (candidate)", candidate.n(), f.m())?;
    let pulled = pullback(candidate, f)?;
    let n = kernel.n();
    for x in 0..n {
        for x2 in 0..n {
            if pulled.get(x, x2) < kernel.get(x, x2) {
                let mut w = vec![0.0; n];
                w[x] = 0.5;
                w[x2] = 0.5;
                let pmf = Pmf::new(w)?;
                let h_source = entropy(kernel, &pmf)?;
                let h_pulled = entropy(&pulled, &pmf)?;
                let h_coarse = entropy(candidate, &pushforward_pmf(f, &pmf)?)?;
                if h_pulled.partial_cmp(&h_source) != Some(std::cmp::Ordering::Greater) {
                    return Err(Error::InvariantViolation(format!(
                        "witness pair ({x},{x2}) did not separate entropies: {h_source} vs {h_pulled}"
                    )));
                }
                return Ok(Some(DpiViolation {
                    x,
                    x2,
                    pmf,
                    h_source,
                    h_pulled,
                    h_coarse,
                }));
            }
        }
    }
    Ok(None)
}
