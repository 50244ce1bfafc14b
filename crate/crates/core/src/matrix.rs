//! Square symmetric matrices used as similarity kernels on finite state spaces.

use crate::error::{Error, Result};

/// Largest tolerated asymmetry `|K[i][j] - K[j][i]|` before construction fails.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A similarity matrix: symmetric, entries in `[0, 1]`, unit diagonal.
///
/// Inputs that are symmetric up to [`SYMMETRY_TOL`] are averaged into exact
/// symmetry; entries within the same tolerance of the unit interval or of a
/// unit diagonal are snapped onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        let entries = symmetrize(n, entries)?;
        let mut entries = entries;
        for i in 0..n {
            let d = entries[i * n + i];
            if (d - 1.0).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidKernel(format!("diagonal entry ({i},{i}) = {d} is not 1")));
            }
            entries[i * n + i] = 1.0;
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidKernel(format!(
                    "row {i} has length {} but the matrix has {n} rows",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Self::new(n, entries)
    }

    /// Builds a matrix from an entry function evaluated on the upper triangle.
    /// The diagonal is set to 1 regardless of `f`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self::new(n, entries)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn ones(n: usize) -> Self {
        Self {
            n,
            entries: vec![1.0; n * n],
        }
    }

    /// Two-state kernel with off-diagonal similarity `m`.
    pub fn two_point(m: f64) -> Result<Self> {
        Self::new(2, vec![1.0, m, m, 1.0])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// True if every entry of `self` is at least the matching entry of `other`.
    pub fn dominates(&self, other: &SimilarityMatrix) -> bool {
        self.n == other.n && self.entries.iter().zip(&other.entries).all(|(a, b)| a >= b)
    }

    pub fn as_symmetric(&self) -> SymmetricMatrix {
        SymmetricMatrix {
            n: self.n,
            entries: self.entries.clone(),
        }
    }
}

/// A symmetric matrix with entries in `[0, 1]` whose diagonal may fall below 1.
///
/// Holds block-averaged step kernels, minimum envelopes and predictive
/// pullbacks, none of which are similarity matrices in general.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        Ok(Self {
            n,
            entries: symmetrize(n, entries)?,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidKernel(format!(
                    "row {i} has length {} but the matrix has {n} rows",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Self::new(n, entries)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Converts to a similarity matrix if the diagonal is (numerically) 1.
    pub fn into_similarity(self) -> Result<SimilarityMatrix> {
        SimilarityMatrix::new(self.n, self.entries)
    }
}

fn symmetrize(n: usize, mut entries: Vec<f64>) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidKernel("matrix must have at least one state".into()));
    }
    if entries.len() != n * n {
        return Err(Error::InvalidKernel(format!(
            "expected {} entries for n = {n}, found {}",
            n * n,
            entries.len()
        )));
    }
    for (idx, v) in entries.iter_mut().enumerate() {
        if !v.is_finite() || *v < -SYMMETRY_TOL || *v > 1.0 + SYMMETRY_TOL {
            return Err(Error::InvalidKernel(format!(
                "entry ({},{}) = {v} is outside [0, 1]",
                idx / n,
                idx % n
            )));
        }
        *v = v.clamp(0.0, 1.0);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let a = entries[i * n + j];
            let b = entries[j * n + i];
            if (a - b).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidKernel(format!(
                    "asymmetric entries ({i},{j}) = {a} and ({j},{i}) = {b}"
                )));
            }
            if a != b {
                let m = 0.5 * (a + b);
                entries[i * n + j] = m;
                entries[j * n + i] = m;
            }
        }
    }
    Ok(entries)
}
