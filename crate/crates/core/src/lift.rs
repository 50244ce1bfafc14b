//! Markov channels and the data-processing inequality for randomized maps.
//!
//! The output kernel of a channel `P` under input law `p` compares posterior
//! supports: `K_Y[y][y'] = max { K[x][x'] : x ∈ supp μ_y, x' ∈ supp μ_y' }`
//! where `μ_y` is the Bayes posterior given `Y = y`. Realizing `P` as a
//! deterministic map on `X × {0..r}` (r equiprobable copies) and applying the
//! support-restricted fiber maximum there reproduces the same kernel, which
//! reduces the Markov case to deterministic coarse-graining.

use crate::coarse::{induce_kernel_supported, FiberMap, ENTROPY_SLACK};
use crate::discrete::entropy;
use crate::error::{check_dim, Error, Result};
use crate::matrix::SimilarityMatrix;
use crate::numeric::compensated_sum;
use crate::pmf::{JointPmf, Pmf, NORMALIZATION_TOL};

/// Tolerance for channel entries to count as multiples of `1/r`.
pub const RESOLUTION_TOL: f64 = 1e-9;

/// Row-stochastic `nx × ny` matrix; row `x` is the law of `Y` given `X = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChannel {
    nx: usize,
    ny: usize,
    rows: Vec<f64>,
}

impl MarkovChannel {
    pub fn new(nx: usize, ny: usize, mut rows: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidPmf("channel needs nx, ny >= 1".into()));
        }
        if rows.len() != nx * ny {
            return Err(Error::InvalidPmf(format!(
                "expected {} channel entries, found {}",
                nx * ny,
                rows.len()
            )));
        }
        for (x, row) in rows.chunks_mut(ny).enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidPmf(format!("row {x} has a negative or non-finite entry")));
            }
            let total = compensated_sum(row.iter().copied());
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidPmf(format!("row {x} sums to {total}, not 1")));
            }
            if total != 1.0 {
                row.iter_mut().for_each(|v| *v /= total);
            }
        }
        Ok(Self { nx, ny, rows })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidPmf("ragged channel rows".into()));
        }
        Self::new(nx, ny, rows.concat())
    }

    /// The deterministic channel `P[x][f(x)] = 1`.
    pub fn deterministic(f: &FiberMap) -> Self {
        let (nx, ny) = (f.n(), f.m());
        let mut rows = vec![0.0; nx * ny];
        for x in 0..nx {
            rows[x * ny + f.apply(x)] = 1.0;
        }
        Self { nx, ny, rows }
    }

    pub fn identity(n: usize) -> Self {
        Self::deterministic(&FiberMap::identity(n))
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.ny + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.ny..(x + 1) * self.ny]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.chunks(self.ny).map(<[f64]>::to_vec).collect()
    }
}

/// `π[x][y] = p[x] P[x][y]`.
pub fn joint_from_channel(p: &Pmf, channel: &MarkovChannel) -> Result<JointPmf> {
    check_dim("joint_from_channel", channel.nx(), p.n())?;
    let mass = (0..channel.nx())
        .flat_map(|x| channel.row(x).iter().map(move |&v| p.get(x) * v))
        .collect();
    JointPmf::new(channel.nx(), channel.ny(), mass)
}

/// Output marginal `ν`.
pub fn output_marginal(p: &Pmf, channel: &MarkovChannel) -> Result<Pmf> {
    Ok(joint_from_channel(p, channel)?.marginals().1)
}

/// Bayes posterior `μ_y[x] = p[x] P[x][y] / ν(y)`.
pub fn posterior(p: &Pmf, channel: &MarkovChannel, y: usize) -> Result<Pmf> {
    if y >= channel.ny() {
        return Err(Error::Domain(format!("observation {y} outside 0..{}", channel.ny())));
    }
    joint_from_channel(p, channel)?
        .conditional_x_given_y(y)
        .ok_or(Error::ZeroProbabilityObservation(y))
}

/// Output kernel from posterior supports; zero-marginal outputs get 0 off the
/// diagonal.
pub fn induced_output_kernel(kernel: &SimilarityMatrix, p: &Pmf, channel: &MarkovChannel) -> Result<SimilarityMatrix> {
    check_dim("induced_output_kernel", kernel.n(), channel.nx())?;
    let joint = joint_from_channel(p, channel)?;
    let supports: Vec<Vec<usize>> = (0..channel.ny())
        .map(|y| (0..channel.nx()).filter(|&x| joint.get(x, y) > 0.0).collect())
        .collect();
    SimilarityMatrix::from_fn(channel.ny(), |y, y2| {
        let mut best = 0.0f64;
        for &x in &supports[y] {
            for &x2 in &supports[y2] {
                best = best.max(kernel.get(x, x2));
            }
        }
        best
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovDpiReport {
    pub kernel_y: SimilarityMatrix,
    pub output: Pmf,
    /// `H_K(p)`
    pub h_in: f64,
    /// `H_{K_Y}(ν)`
    pub h_out: f64,
    pub holds: bool,
}

pub fn markov_dpi_report(kernel: &SimilarityMatrix, p: &Pmf, channel: &MarkovChannel) -> Result<MarkovDpiReport> {
    let kernel_y = induced_output_kernel(kernel, p, channel)?;
    let output = output_marginal(p, channel)?;
    let h_in = entropy(kernel, p)?;
    let h_out = entropy(&kernel_y, &output)?;
    Ok(MarkovDpiReport {
        kernel_y,
        output,
        h_in,
        h_out,
        holds: h_out <= h_in + ENTROPY_SLACK,
    })
}

/// Kernel on `n·r` states `(x, i) ↦ x·r + i` that ignores the copy index.
pub fn lift_kernel(kernel: &SimilarityMatrix, r: usize) -> Result<SimilarityMatrix> {
    if r == 0 {
        return Err(Error::Domain("lift resolution must be at least 1".into()));
    }
    let n = kernel.n();
    let big = n * r;
    let entries = (0..big * big)
        .map(|idx| kernel.get(idx / big / r, idx % big / r))
        .collect();
    SimilarityMatrix::new(big, entries)
}

/// `p ⊗ uniform(r)` laid out as `x·r + i`.
pub fn lift_pmf(p: &Pmf, r: usize) -> Result<Pmf> {
    if r == 0 {
        return Err(Error::Domain("lift resolution must be at least 1".into()));
    }
    Pmf::new(
        p.weights()
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w / r as f64, r))
            .collect(),
    )
}

/// Deterministic realization `Φ(x, i)` of a channel whose entries are
/// multiples of `1/r`: for each `x`, `r·P[x][y]` consecutive copies go to
/// output `y`, in increasing `y`.
pub fn realize_channel(channel: &MarkovChannel, r: usize) -> Result<FiberMap> {
    if r == 0 {
        return Err(Error::Domain("realization resolution must be at least 1".into()));
    }
    let mut labels = Vec::with_capacity(channel.nx() * r);
    for x in 0..channel.nx() {
        let mut used = 0usize;
        for y in 0..channel.ny() {
            let value = channel.get(x, y);
            let copies = (value * r as f64).round();
            if (value - copies / r as f64).abs() > RESOLUTION_TOL {
                return Err(Error::NotResolvable {
                    row: x,
                    col: y,
                    value,
                    resolution: r,
                });
            }
            let copies = copies as usize;
            labels.extend(std::iter::repeat_n(y, copies));
            used += copies;
        }
        if used != r {
            return Err(Error::InvariantViolation(format!(
                "row {x} assigns {used} copies at resolution {r}"
            )));
        }
    }
    FiberMap::new(labels, channel.ny())
}

/// Comparison of the realized deterministic kernel with the output kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationCheck {
    pub resolution: usize,
    pub realized_kernel: SimilarityMatrix,
    /// Entrywise equality on pairs of positive-mass outputs.
    pub equal: bool,
    /// Largest `|difference|` on pairs of positive-mass outputs.
    pub max_abs_diff: f64,
    /// `H` of the lifted kernel at the lifted law (equals `H_K(p)`).
    pub h_lifted: f64,
}

/// Lifts `(kernel, p)` to resolution `r`, realizes the channel there and
/// compares the support-restricted induced kernel with
/// [`induced_output_kernel`].
pub fn realization_check(
    kernel: &SimilarityMatrix,
    p: &Pmf,
    channel: &MarkovChannel,
    r: usize,
) -> Result<RealizationCheck> {
    let phi = realize_channel(channel, r)?;
    let lifted = lift_kernel(kernel, r)?;
    let lifted_p = lift_pmf(p, r)?;
    let realized = induce_kernel_supported(&lifted, &lifted_p, &phi)?;
    let canonical = induced_output_kernel(kernel, p, channel)?;
    let nu = output_marginal(p, channel)?;
    let charged: Vec<usize> = nu.support().collect();
    let mut max_abs_diff = 0.0f64;
    for &y in &charged {
        for &y2 in &charged {
            max_abs_diff = max_abs_diff.max((realized.get(y, y2) - canonical.get(y, y2)).abs());
        }
    }
    Ok(RealizationCheck {
        resolution: r,
        h_lifted: entropy(&lifted, &lifted_p)?,
        realized_kernel: realized,
        equal: max_abs_diff == 0.0,
        max_abs_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::{induce_kernel_max, induce_kernel_supported};

    fn kernel4() -> SimilarityMatrix {
        SimilarityMatrix::from_rows(&[
            vec![1.0, 0.2, 0.5, 0.1],
            vec![0.2, 1.0, 0.7, 0.3],
            vec![0.5, 0.7, 1.0, 0.4],
            vec![0.1, 0.3, 0.4, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn channel_validation() {
        assert!(MarkovChannel::from_rows(&[vec![0.5, 0.6]]).is_err());
        assert!(MarkovChannel::from_rows(&[vec![1.5, -0.5]]).is_err());
        assert!(MarkovChannel::from_rows(&[vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn joint_examples() {
        let f = FiberMap::new(vec![1, 0, 1], 2).unwrap();
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let j = joint_from_channel(&p, &MarkovChannel::deterministic(&f)).unwrap();
        for x in 0..3 {
            for y in 0..2 {
                assert_eq!(j.get(x, y) > 0.0, f.apply(x) == y);
            }
        }
        let j = joint_from_channel(&Pmf::uniform(3), &MarkovChannel::identity(3)).unwrap();
        assert!((j.get(1, 1) - 1.0 / 3.0).abs() < 1e-15 && j.get(0, 1) == 0.0);
        let ch = MarkovChannel::from_rows(&[vec![0.3, 0.7], vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let (px, _) = joint_from_channel(&p, &ch).unwrap().marginals();
        for x in 0..3 {
            assert!((px.get(x) - p.get(x)).abs() < 1e-15);
        }
        assert!(joint_from_channel(&Pmf::uniform(2), &ch).is_err());
    }

    #[test]
    fn posterior_examples() {
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(
            posterior(&p, &MarkovChannel::identity(3), 1).unwrap(),
            Pmf::point_mass(3, 1)
        );
        let flat = MarkovChannel::from_rows(&[vec![0.4, 0.6], vec![0.4, 0.6], vec![0.4, 0.6]]).unwrap();
        let post = posterior(&p, &flat, 0).unwrap();
        for x in 0..3 {
            assert!((post.get(x) - p.get(x)).abs() < 1e-15);
        }
        let ch = MarkovChannel::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let post = posterior(&Pmf::uniform(2), &ch, 0).unwrap();
        assert!((post.get(0) - 9.0 / 11.0).abs() < 1e-15);
        assert!((post.get(1) - 2.0 / 11.0).abs() < 1e-15);
        let degenerate = MarkovChannel::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            posterior(&Pmf::uniform(2), &degenerate, 1),
            Err(Error::ZeroProbabilityObservation(1))
        );
    }

    #[test]
    fn output_kernel_examples() {
        let k = kernel4();
        let f = FiberMap::new(vec![0, 1, 1, 2], 3).unwrap();
        let p = Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(
            induced_output_kernel(&k, &p, &MarkovChannel::deterministic(&f)).unwrap(),
            induce_kernel_supported(&k, &p, &f).unwrap()
        );
        let flat = MarkovChannel::from_rows(&vec![vec![0.5, 0.25, 0.25]; 4]).unwrap();
        let p = Pmf::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let ky = induced_output_kernel(&k, &p, &flat).unwrap();
        // brute-force max over supp(p)² = {0, 3}²
        let brute = [0usize, 3]
            .iter()
            .flat_map(|&a| [0usize, 3].map(|b| k.get(a, b)))
            .fold(0.0f64, f64::max);
        assert_eq!(brute, 1.0);
        assert!(ky.entries().iter().all(|&v| v == brute));
        let p = Pmf::new(vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        assert_eq!(induced_output_kernel(&k, &p, &MarkovChannel::identity(4)).unwrap(), k);
    }

    #[test]
    fn markov_dpi_examples() {
        let k = kernel4();
        let p = Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let r = markov_dpi_report(&k, &p, &MarkovChannel::identity(4)).unwrap();
        assert!((r.h_in - r.h_out).abs() < 1e-15 && r.holds);
        let flat = MarkovChannel::from_rows(&vec![vec![0.5, 0.5]; 4]).unwrap();
        let r = markov_dpi_report(&k, &p, &flat).unwrap();
        assert!(r.holds && r.h_out <= r.h_in);
    }

    #[test]
    fn lifting_examples() {
        let k = kernel4();
        assert_eq!(lift_kernel(&k, 1).unwrap(), k);
        let p = Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let h = entropy(&k, &p).unwrap();
        let hl = entropy(&lift_kernel(&k, 5).unwrap(), &lift_pmf(&p, 5).unwrap()).unwrap();
        assert!((h - hl).abs() < 1e-14);
        let hi = entropy(
            &lift_kernel(&SimilarityMatrix::identity(3), 2).unwrap(),
            &Pmf::uniform(6),
        )
        .unwrap();
        assert!((hi - 3f64.ln()).abs() < 1e-15);
        assert!(lift_kernel(&k, 0).is_err());
    }

    #[test]
    fn realization_examples() {
        let f = FiberMap::new(vec![2, 0, 1], 3).unwrap();
        let phi = realize_channel(&MarkovChannel::deterministic(&f), 4).unwrap();
        for x in 0..3 {
            for i in 0..4 {
                assert_eq!(phi.apply(x * 4 + i), f.apply(x));
            }
        }
        let phi = realize_channel(&MarkovChannel::from_rows(&[vec![0.5, 0.5]]).unwrap(), 2).unwrap();
        assert_eq!(phi.labels(), &[0, 1]);
        let thirds = MarkovChannel::from_rows(&[vec![1.0 / 3.0, 2.0 / 3.0]]).unwrap();
        assert!(matches!(realize_channel(&thirds, 2), Err(Error::NotResolvable { .. })));
        assert!(realize_channel(&thirds, 3).is_ok());
    }

    #[test]
    fn realization_matches_output_kernel() {
        let k = kernel4();
        let p = Pmf::new(vec![0.1, 0.2, 0.0, 0.7]).unwrap();
        let ch = MarkovChannel::from_rows(&[
            vec![0.25, 0.75, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let c = realization_check(&k, &p, &ch, 4).unwrap();
        assert!(c.equal);
        assert!((c.h_lifted - entropy(&k, &p).unwrap()).abs() < 1e-14);
        // the fiber max on the lifted space ignores the law and can differ
        let phi = realize_channel(&ch, 4).unwrap();
        let unrestricted = induce_kernel_max(&lift_kernel(&k, 4).unwrap(), &phi).unwrap();
        assert!(unrestricted.dominates(&c.realized_kernel));
    }
}
