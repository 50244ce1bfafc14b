//! Probability mass functions on finite state spaces.

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Largest tolerated deviation of the total mass from 1 before rejection.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A probability mass function. Stored renormalized to unit total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    weights: Vec<f64>,
}

impl Pmf {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Ok(Self {
            weights: normalize(weights)?,
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform pmf needs at least one state");
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "point mass index out of range");
        let mut weights = vec![0.0; n];
        weights[at] = 1.0;
        Self { weights }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices carrying positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
    }

    /// Product pmf `self ⊗ other`, flattened row-major (self major).
    pub fn product(&self, other: &Pmf) -> Pmf {
        let mut weights = Vec::with_capacity(self.n() * other.n());
        for &a in &self.weights {
            for &b in &other.weights {
                weights.push(a * b);
            }
        }
        Pmf { weights }
    }
}

/// Joint pmf of `(X, Y)` stored as an `nx × ny` row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    nx: usize,
    ny: usize,
    mass: Vec<f64>,
}

impl JointPmf {
    pub fn new(nx: usize, ny: usize, mass: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidPmf("joint pmf needs nx, ny >= 1".into()));
        }
        if mass.len() != nx * ny {
            return Err(Error::InvalidPmf(format!(
                "expected {} joint entries, found {}",
                nx * ny,
                mass.len()
            )));
        }
        Ok(Self {
            nx,
            ny,
            mass: normalize(mass)?,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidPmf("ragged joint mass rows".into()));
        }
        Self::new(nx, ny, rows.concat())
    }

    pub fn product(px: &Pmf, py: &Pmf) -> Self {
        Self {
            nx: px.n(),
            ny: py.n(),
            mass: px.product(py).weights,
        }
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
        self.mass[x * self.ny + y]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.mass.chunks(self.ny).map(<[f64]>::to_vec).collect()
    }

    /// Row and column sums `(p_X, p_Y)`.
    pub fn marginals(&self) -> (Pmf, Pmf) {
        let px = (0..self.nx)
            .map(|x| compensated_sum((0..self.ny).map(|y| self.get(x, y))))
            .collect();
        let py = (0..self.ny)
            .map(|y| compensated_sum((0..self.nx).map(|x| self.get(x, y))))
            .collect();
        (Pmf { weights: px }, Pmf { weights: py })
    }

    /// The conditional law `p_{X | Y = y}`, or `None` if `p_Y(y) = 0`.
    pub fn conditional_x_given_y(&self, y: usize) -> Option<Pmf> {
        let col: Vec<f64> = (0..self.nx).map(|x| self.get(x, y)).collect();
        let total = compensated_sum(col.iter().copied());
        if total <= 0.0 {
            return None;
        }
        Some(Pmf {
            weights: col.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Flattens the joint into a pmf over `nx * ny` states (x major, y minor).
    pub fn flatten(&self) -> Pmf {
        Pmf {
            weights: self.mass.clone(),
        }
    }
}

fn normalize(weights: Vec<f64>) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::InvalidPmf("pmf needs at least one state".into()));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidPmf(format!(
                "weight {i} = {w} is not a nonnegative number"
            )));
        }
    }
    let total = compensated_sum(weights.iter().copied());
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidPmf(format!("weights sum to {total}, not 1")));
    }
    if total == 1.0 {
        return Ok(weights);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}
