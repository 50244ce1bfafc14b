//! Law-independent fiber envelopes and the coarse-only bounds they give on
//! the coarse-graining entropy loss.

use rand::Rng;

use crate::coarse::FiberMap;
use crate::discrete::row_typicality;
use crate::error::{check_dim, Error, Result};
use crate::lift::MarkovChannel;
use crate::matrix::{SimilarityMatrix, SymmetricMatrix};
use crate::numeric::compensated_sum;
use crate::pmf::Pmf;
use crate::rng::substream;

/// Matrices up to this size have the triangle inequality checked on every
/// triple; larger ones on a fixed random sample.
pub const EXHAUSTIVE_METRIC_CHECK: usize = 200;
const SAMPLED_TRIPLES: usize = 1_000_000;
const METRIC_TOL: f64 = 1e-12;

/// Fiber envelopes of a task kernel: `K_max` takes the largest kernel value
/// over each pair of fibers (unit diagonal), `K_min` the smallest (its
/// diagonal may fall below 1).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePair {
    pub k_max: SimilarityMatrix,
    pub k_min: SymmetricMatrix,
}

impl EnvelopePair {
    pub fn new(k_max: SimilarityMatrix, k_min: SymmetricMatrix) -> Result<Self> {
        check_dim("EnvelopePair", k_max.n(), k_min.n())?;
        if let Some((a, b)) = k_min.entries().iter().zip(k_max.entries()).find(|(lo, hi)| lo > hi) {
            return Err(Error::InvariantViolation(format!(
                "K_min entry {a} exceeds K_max entry {b}"
            )));
        }
        Ok(Self { k_max, k_min })
    }

    pub fn n(&self) -> usize {
        self.k_max.n()
    }

    /// Coarse typicalities `(τ_max, τ_min)` under `nu_c`.
    pub fn typicalities(&self, nu_c: &Pmf) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dim("envelope typicalities", self.n(), nu_c.n())?;
        let w = nu_c.weights();
        let hi = (0..self.n()).map(|c| row_typicality(self.k_max.row(c), w)).collect();
        let lo = (0..self.n()).map(|c| row_typicality(self.k_min.row(c), w)).collect();
        Ok((hi, lo))
    }

    /// `ρ(c, c') = K_max / K_min`, with `a / 0 = ∞`.
    pub fn rho(&self, c: usize, c2: usize) -> f64 {
        let lo = self.k_min.get(c, c2);
        if lo == 0.0 {
            f64::INFINITY
        } else {
            self.k_max.get(c, c2) / lo
        }
    }
}

fn fiber_extremes(m: usize, fibers: &[Vec<usize>], value: impl Fn(usize, usize) -> f64) -> (Vec<f64>, Vec<f64>) {
    let mut hi = vec![0.0; m * m];
    let mut lo = vec![0.0; m * m];
    for c in 0..m {
        for c2 in c..m {
            let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
            for &t in &fibers[c] {
                for &t2 in &fibers[c2] {
                    let v = value(t, t2);
                    a = a.max(v);
                    b = b.min(v);
                }
            }
            hi[c * m + c2] = a;
            hi[c2 * m + c] = a;
            lo[c * m + c2] = b;
            lo[c2 * m + c] = b;
        }
    }
    (hi, lo)
}

fn nonempty_fibers(f: &FiberMap) -> Result<Vec<Vec<usize>>> {
    let fibers = f.fibers();
    match fibers.iter().position(Vec::is_empty) {
        Some(c) => Err(Error::EmptyClass(c)),
        None => Ok(fibers),
    }
}

/// Fiber envelopes of `kernel` under `f`. Every class must have a nonempty fiber.
pub fn envelope_kernels(kernel: &SimilarityMatrix, f: &FiberMap) -> Result<EnvelopePair> {
    check_dim("envelope_kernels", kernel.n(), f.n())?;
    let fibers = nonempty_fibers(f)?;
    let m = f.m();
    let (mut hi, lo) = fiber_extremes(m, &fibers, |t, t2| kernel.get(t, t2));
    for c in 0..m {
        hi[c * m + c] = 1.0;
    }
    EnvelopePair::new(SimilarityMatrix::new(m, hi)?, SymmetricMatrix::new(m, lo)?)
}

/// `Σ_c ν_C(c) ln(τ_max(c) / τ_min(c))`, an upper bound on the entropy lost
/// by coarse-graining any fine law whose pushforward is `nu_c`.
pub fn coarse_gap_bound(env: &EnvelopePair, nu_c: &Pmf) -> Result<f64> {
    let (hi, lo) = env.typicalities(nu_c)?;
    let mut terms = Vec::new();
    for c in nu_c.support() {
        if lo[c] <= 0.0 {
            return Err(Error::ZeroMinTypicality(c));
        }
        terms.push(nu_c.get(c) * (hi[c] / lo[c]).ln());
    }
    Ok(compensated_sum(terms))
}

/// Envelope-ratio relaxations of [`coarse_gap_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct RatioBound {
    /// `ln sup_{c'} ρ(c, c')` for each class.
    pub class_log_sup: Vec<f64>,
    /// `Σ_c ν_C(c) ln sup_{c'} ρ(c, c')` over charged classes.
    pub per_class: f64,
    /// `ln sup_{c, c'} ρ(c, c')`.
    pub global: f64,
}

pub fn envelope_ratio_bound(env: &EnvelopePair, nu_c: &Pmf) -> Result<RatioBound> {
    check_dim("envelope_ratio_bound", env.n(), nu_c.n())?;
    let m = env.n();
    let class_log_sup: Vec<f64> = (0..m)
        .map(|c| (0..m).map(|c2| env.rho(c, c2)).fold(f64::NEG_INFINITY, f64::max).ln())
        .collect();
    let per_class = if nu_c.support().any(|c| class_log_sup[c].is_infinite()) {
        f64::INFINITY
    } else {
        compensated_sum(nu_c.support().map(|c| nu_c.get(c) * class_log_sup[c]))
    };
    let global = class_log_sup.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RatioBound {
        class_log_sup,
        per_class,
        global,
    })
}

/// A finite metric, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, a zero diagonal, nonnegativity and the triangle
    /// inequality (on every triple for `n <= 200`, on a seeded sample of
    /// triples beyond).
    pub fn new(n: usize, d: Vec<f64>) -> Result<Self> {
        if n == 0 || d.len() != n * n {
            return Err(Error::MetricViolation(format!(
                "expected {} entries for n = {n}, found {}",
                n * n,
                d.len()
            )));
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::MetricViolation(format!(
                    "d({i},{i}) = {} is not 0",
                    d[i * n + i]
                )));
            }
            for j in 0..n {
                let (a, b) = (d[i * n + j], d[j * n + i]);
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::MetricViolation(format!(
                        "d({i},{j}) = {a} is not a finite nonnegative number"
                    )));
                }
                if a != b {
                    return Err(Error::MetricViolation(format!(
                        "d({i},{j}) = {a} differs from d({j},{i}) = {b}"
                    )));
                }
            }
        }
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            let (ij, ik, kj) = (d[i * n + j], d[i * n + k], d[k * n + j]);
            if ij > ik + kj + METRIC_TOL * (1.0 + ij) {
                return Err(Error::MetricViolation(format!(
                    "d({i},{j}) = {ij} > d({i},{k}) + d({k},{j}) = {}",
                    ik + kj
                )));
            }
            Ok(())
        };
        if n <= EXHAUSTIVE_METRIC_CHECK {
            for i in 0..n {
                for j in i + 1..n {
                    for k in 0..n {
                        check(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = substream(0, 0);
            for _ in 0..SAMPLED_TRIPLES {
                check(rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n))?;
            }
        }
        Ok(Self { n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::MetricViolation(format!("row {i} does not have length {n}")));
        }
        Self::new(n, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// The kernel `exp(-δ d^α)`.
    pub fn kernel(&self, delta: f64, alpha: f64) -> Result<SimilarityMatrix> {
        check_metric_params(delta, alpha)?;
        SimilarityMatrix::new(self.n, self.d.iter().map(|&x| metric_kernel(x, delta, alpha)).collect())
    }
}

fn check_metric_params(delta: f64, alpha: f64) -> Result<()> {
    if delta > 0.0 && alpha > 0.0 && delta.is_finite() && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "metric kernel needs δ, α > 0 (got {delta}, {alpha})"
        )))
    }
}

#[inline]
fn metric_kernel(d: f64, delta: f64, alpha: f64) -> f64 {
    (-delta * d.powf(alpha)).exp()
}

/// Fiber diameters and inter-fiber distance extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFiberStats {
    pub m: usize,
    pub diam: Vec<f64>,
    /// Row-major `m × m`.
    pub d_min: Vec<f64>,
    pub d_max: Vec<f64>,
}

impl MetricFiberStats {
    pub fn d_min(&self, c: usize, c2: usize) -> f64 {
        self.d_min[c * self.m + c2]
    }

    pub fn d_max(&self, c: usize, c2: usize) -> f64 {
        self.d_max[c * self.m + c2]
    }
}

/// Envelope ratio for one pair of classes and its diameter-controlled bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRho {
    pub c: usize,
    pub c2: usize,
    /// `exp(δ (d_max^α − d_min^α))`
    pub exact: f64,
    /// `exp(δ (diam + diam')^α)`, valid for `α ≤ 1`.
    pub alpha_le_one: Option<f64>,
    /// `exp(δ α (diam + diam') (d_min + diam + diam')^(α−1))`, valid for `α ≥ 1`.
    pub alpha_ge_one: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricEnvelopes {
    pub env: EnvelopePair,
    pub stats: MetricFiberStats,
    /// One entry per unordered pair `c <= c'`, row-major.
    pub rho: Vec<PairRho>,
}

/// Closed-form envelopes of `exp(-δ d^α)`: `K_max = exp(-δ d_min^α)` and
/// `K_min = exp(-δ d_max^α)`.
pub fn metric_envelopes(dist: &DistanceMatrix, f: &FiberMap, delta: f64, alpha: f64) -> Result<MetricEnvelopes> {
    check_dim("metric_envelopes", dist.n(), f.n())?;
    check_metric_params(delta, alpha)?;
    let fibers = nonempty_fibers(f)?;
    let m = f.m();
    let (far, near) = fiber_extremes(m, &fibers, |t, t2| dist.get(t, t2));
    let mut d_min = near;
    for c in 0..m {
        d_min[c * m + c] = 0.0;
    }
    let diam: Vec<f64> = (0..m).map(|c| far[c * m + c]).collect();
    let stats = MetricFiberStats {
        m,
        diam,
        d_min,
        d_max: far,
    };
    for c in 0..m {
        for c2 in 0..m {
            let lhs = stats.d_max(c, c2);
            let rhs = stats.d_min(c, c2) + stats.diam[c] + stats.diam[c2];
            if lhs > rhs + METRIC_TOL * (1.0 + rhs) {
                return Err(Error::InvariantViolation(format!(
                    "d_max({c},{c2}) = {lhs} exceeds d_min + diameters = {rhs}"
                )));
            }
        }
    }
    let hi = stats.d_min.iter().map(|&x| metric_kernel(x, delta, alpha)).collect();
    let lo = stats.d_max.iter().map(|&x| metric_kernel(x, delta, alpha)).collect();
    let env = EnvelopePair::new(SimilarityMatrix::new(m, hi)?, SymmetricMatrix::new(m, lo)?)?;
    let mut rho = Vec::with_capacity(m * (m + 1) / 2);
    for c in 0..m {
        for c2 in c..m {
            let (lo_d, hi_d) = (stats.d_min(c, c2), stats.d_max(c, c2));
            let spread = stats.diam[c] + stats.diam[c2];
            rho.push(PairRho {
                c,
                c2,
                exact: (delta * (hi_d.powf(alpha) - lo_d.powf(alpha))).exp(),
                alpha_le_one: (alpha <= 1.0).then(|| (delta * spread.powf(alpha)).exp()),
                alpha_ge_one: (alpha >= 1.0)
                    .then(|| (delta * alpha * spread * (lo_d + spread).powf(alpha - 1.0)).exp()),
            });
        }
    }
    Ok(MetricEnvelopes { env, stats, rho })
}

/// Which statistic of the observed cross-class kernel values to report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeMode {
    Max,
    Min,
    /// Empirical upper `β`-quantile: the `⌈β·count⌉`-th smallest value.
    Quantile(f64),
}

/// Envelopes estimated from samples of each class. For `c != c'` every
/// cross pair is used; on the diagonal the `Max` and `Quantile` modes report 1
/// and `Min` uses all pairs within the class.
pub fn empirical_envelopes<T>(
    samples_by_class: &[Vec<T>],
    kernel: impl Fn(&T, &T) -> f64,
    mode: EnvelopeMode,
) -> Result<SymmetricMatrix> {
    if samples_by_class.is_empty() {
        return Err(Error::Domain("no classes".into()));
    }
    if let Some(c) = samples_by_class.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(c));
    }
    if let EnvelopeMode::Quantile(beta) = mode {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain(format!("quantile level {beta} outside (0, 1)")));
        }
    }
    let m = samples_by_class.len();
    let mut out = vec![0.0; m * m];
    for c in 0..m {
        for c2 in c..m {
            let v = if c == c2 && mode != EnvelopeMode::Min {
                1.0
            } else {
                let values = samples_by_class[c]
                    .iter()
                    .flat_map(|a| samples_by_class[c2].iter().map(|b| kernel(a, b)));
                match mode {
                    EnvelopeMode::Max => values.fold(f64::NEG_INFINITY, f64::max),
                    EnvelopeMode::Min => values.fold(f64::INFINITY, f64::min),
                    EnvelopeMode::Quantile(beta) => {
                        let mut all: Vec<f64> = values.collect();
                        all.sort_by(f64::total_cmp);
                        all[quantile_index(beta, all.len())]
                    }
                }
            };
            out[c * m + c2] = v;
            out[c2 * m + c] = v;
        }
    }
    SymmetricMatrix::new(m, out)
}

/// `⌈β·count⌉ − 1`, treating products within 1e-9 of an integer as exact.
fn quantile_index(beta: f64, count: usize) -> usize {
    let x = beta * count as f64;
    let r = x.round();
    let rank = if (x - r).abs() <= 1e-9 { r } else { x.ceil() };
    (rank as usize).clamp(1, count) - 1
}

/// Averaged similarity of independent predictions, with its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictivePullback {
    pub kernel: SymmetricMatrix,
    pub diagonal: Vec<f64>,
    /// Whether every diagonal entry equals 1, i.e. `kernel` is a similarity matrix.
    pub unit_diagonal: bool,
}

/// `K_Z[z][z'] = Σ_{t,t'} P[z][t] K_T[t][t'] P[z'][t']`.
pub fn predictive_pullback(kernel_t: &SimilarityMatrix, p: &MarkovChannel) -> Result<PredictivePullback> {
    check_dim("predictive_pullback", kernel_t.n(), p.ny())?;
    let (nz, nt) = (p.nx(), p.ny());
    let smoothed: Vec<Vec<f64>> = (0..nz)
        .map(|z| {
            (0..nt)
                .map(|t2| compensated_sum((0..nt).map(|t| p.get(z, t) * kernel_t.get(t, t2))))
                .collect()
        })
        .collect();
    let mut entries = vec![0.0; nz * nz];
    for z in 0..nz {
        for z2 in z..nz {
            let v = compensated_sum((0..nt).map(|t2| smoothed[z][t2] * p.get(z2, t2))).clamp(0.0, 1.0);
            entries[z * nz + z2] = v;
            entries[z2 * nz + z] = v;
        }
    }
    let kernel = SymmetricMatrix::new(nz, entries)?;
    let diagonal = kernel.diagonal();
    let unit_diagonal = diagonal.iter().all(|&d| d == 1.0);
    Ok(PredictivePullback {
        kernel,
        diagonal,
        unit_diagonal,
    })
}
