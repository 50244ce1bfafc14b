//! Plug-in entropy estimation from samples.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::rng::substream;

/// Sample sizes above which row subsampling may be requested.
pub const SUBSAMPLE_THRESHOLD: usize = 4096;

const DIAGONAL_SPOT_CHECKS: usize = 32;
const DIAGONAL_TOL: f64 = 1e-12;

/// Samples `t^(1..M)` from a task space together with its kernel.
pub struct SampleSet<T, K> {
    points: Vec<T>,
    kernel: K,
}

impl<T, K: Fn(&T, &T) -> f64> SampleSet<T, K> {
    /// Fails on an empty sample or if `K(t, t) != 1` on one of the first
    /// few points.
    pub fn new(points: Vec<T>, kernel: K) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("a sample set needs at least one point".into()));
        }
        for (i, t) in points.iter().take(DIAGONAL_SPOT_CHECKS).enumerate() {
            let d = kernel(t, t);
            if (d - 1.0).abs() > DIAGONAL_TOL {
                return Err(Error::InvalidKernel(format!("K(t_{i}, t_{i}) = {d} is not 1")));
            }
        }
        Ok(Self { points, kernel })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn kernel(&self, a: &T, b: &T) -> f64 {
        (self.kernel)(a, b)
    }
}

/// Knobs for [`entropy_from_samples`]. The default is the exact plug-in
/// estimator with no ridge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EstimatorOptions {
    /// Added to each empirical typicality inside the logarithm.
    pub ridge: f64,
    /// For `M > 4096`, estimate the outer mean from this many random rows
    /// (drawn with the given seed). The result is then approximate.
    pub subsample: Option<(usize, u64)>,
}

/// `-(1/M) Σ_i ln((1/M) Σ_j K(t_i, t_j) + ridge)`.
pub fn entropy_from_samples<T, K: Fn(&T, &T) -> f64>(samples: &SampleSet<T, K>, options: &EstimatorOptions) -> f64 {
    let pts = samples.points();
    let m = pts.len();
    let mf = m as f64;
    if let Some((rows, seed)) = options.subsample.filter(|&(r, _)| m > SUBSAMPLE_THRESHOLD && r < m) {
        let mut rng = substream(seed, 0);
        let chosen = sample(&mut rng, m, rows.max(1));
        let terms: Vec<f64> = chosen
            .iter()
            .map(|i| {
                let s = compensated_sum(pts.iter().map(|t| samples.kernel(&pts[i], t)));
                -(s / mf + options.ridge).ln()
            })
            .collect();
        let count = terms.len() as f64;
        return compensated_sum(terms) / count;
    }
    let mut sums = vec![1.0f64; m];
    for i in 0..m {
        let (head, tail) = sums.split_at_mut(i + 1);
        let mut acc = 0.0;
        for (offset, s) in tail.iter_mut().enumerate() {
            let v = samples.kernel(&pts[i], &pts[i + 1 + offset]);
            acc += v;
            *s += v;
        }
        head[i] += acc;
    }
    compensated_sum(sums.iter().map(|s| -(s / mf + options.ridge).ln())) / mf
}

/// Prior-to-posterior drop in estimated entropy; may be negative.
pub fn realized_info_gain<T, K: Fn(&T, &T) -> f64>(
    prior: &SampleSet<T, K>,
    posterior: &SampleSet<T, K>,
    options: &EstimatorOptions,
) -> f64 {
    entropy_from_samples(prior, options) - entropy_from_samples(posterior, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(a: &usize, b: &usize) -> f64 {
        (a == b) as u8 as f64
    }

    #[test]
    fn trivial_cases() {
        let s = SampleSet::new(vec![3usize; 10], eq).unwrap();
        assert_eq!(entropy_from_samples(&s, &EstimatorOptions::default()), 0.0);
        let s = SampleSet::new((0..7usize).collect(), eq).unwrap();
        assert!((entropy_from_samples(&s, &EstimatorOptions::default()) - 7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn two_tight_clusters() {
        let pts = vec![0.0, 0.001, 10.0, 10.001];
        let k = |a: &f64, b: &f64| (-(a - b) * (a - b)).exp();
        let s = SampleSet::new(pts.clone(), k).unwrap();
        // direct evaluation of the plug-in formula
        let oracle = -pts
            .iter()
            .map(|a| (pts.iter().map(|b| k(a, b)).sum::<f64>() / 4.0).ln())
            .sum::<f64>()
            / 4.0;
        let h = entropy_from_samples(&s, &EstimatorOptions::default());
        assert!((h - oracle).abs() < 1e-15);
        assert!((h - 2f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn ridge_shifts_inside_the_log() {
        let s = SampleSet::new((0..4usize).collect(), eq).unwrap();
        let opts = EstimatorOptions {
            ridge: 0.25,
            subsample: None,
        };
        assert!((entropy_from_samples(&s, &opts) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_diagonal() {
        assert!(SampleSet::new(vec![1.0f64], |_: &f64, _: &f64| 0.5).is_err());
        assert!(SampleSet::new(Vec::<f64>::new(), |_: &f64, _: &f64| 1.0).is_err());
    }

    #[test]
    fn subsampling_only_applies_to_large_samples() {
        let pts: Vec<usize> = (0..100).map(|i| i % 5).collect();
        let s = SampleSet::new(pts, eq).unwrap();
        let exact = entropy_from_samples(&s, &EstimatorOptions::default());
        let sub = EstimatorOptions {
            ridge: 0.0,
            subsample: Some((10, 1)),
        };
        assert_eq!(entropy_from_samples(&s, &sub), exact);

        let pts: Vec<usize> = (0..5000).map(|i| i % 5).collect();
        let s = SampleSet::new(pts, eq).unwrap();
        let sub = EstimatorOptions {
            ridge: 0.0,
            subsample: Some((200, 1)),
        };
        assert!((entropy_from_samples(&s, &sub) - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn realized_gain_examples() {
        let prior = SampleSet::new((0..6usize).collect(), eq).unwrap();
        let same = SampleSet::new((0..6usize).collect(), eq).unwrap();
        let opts = EstimatorOptions::default();
        assert_eq!(realized_info_gain(&prior, &same, &opts), 0.0);
        let post = SampleSet::new(vec![2usize; 6], eq).unwrap();
        assert!((realized_info_gain(&prior, &post, &opts) - 6f64.ln()).abs() < 1e-15);
    }
}
