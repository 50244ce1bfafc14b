//! Nested Monte Carlo estimation of the expected task information gain of a
//! design, and two toy Bayesian models with closed-form answers.

use std::fmt::Debug;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::estimator::{entropy_from_samples, EstimatorOptions, SampleSet};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::rng::{substream, StreamRng};

/// A Bayesian model linking a latent task variable to data under a design.
///
/// All randomness comes from the generator passed in, so implementations are
/// deterministic functions of their substream and must hold no mutable state.
pub trait BayesModel: Sync {
    type Point: Send + Sync;
    type Data: Send;
    type Design: Clone + Debug + Send + Sync;

    fn sample_prior(&self, m: usize, rng: &mut StreamRng) -> Vec<Self::Point>;

    fn simulate_data(
        &self,
        latent: &Self::Point,
        design: &Self::Design,
        rng: &mut StreamRng,
    ) -> std::result::Result<Self::Data, String>;

    fn sample_posterior(
        &self,
        data: &Self::Data,
        design: &Self::Design,
        m: usize,
        rng: &mut StreamRng,
    ) -> std::result::Result<Vec<Self::Point>, String>;

    /// Task kernel on task points: symmetric, in `[0, 1]`, unit diagonal.
    fn task_kernel(&self, a: &Self::Point, b: &Self::Point) -> f64;
}

/// Estimate of `U(d)` for one design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignEstimate<D> {
    pub design: D,
    pub u_hat: f64,
    pub prior_entropy: f64,
    /// Estimated posterior entropy for each simulated dataset, in order.
    pub per_dataset: Vec<f64>,
    /// Sample standard deviation of `per_dataset` over `√N`; `None` for `N = 1`.
    pub std_error: Option<f64>,
}

/// Estimated prior entropy from `m` prior draws on substream 0.
pub fn prior_entropy<B: BayesModel>(model: &B, m: usize, seed: u64, options: &EstimatorOptions) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("inner sample size must be at least 1".into()));
    }
    let pts = model.sample_prior(m, &mut substream(seed, 0));
    let set = SampleSet::new(pts, |a: &B::Point, b: &B::Point| model.task_kernel(a, b))?;
    Ok(entropy_from_samples(&set, options))
}

fn estimate_with_prior<B: BayesModel>(
    model: &B,
    design: &B::Design,
    outer: usize,
    inner: usize,
    seed: u64,
    options: &EstimatorOptions,
    prior: f64,
) -> Result<DesignEstimate<B::Design>> {
    if outer == 0 || inner == 0 {
        return Err(Error::Domain("outer and inner sample sizes must be at least 1".into()));
    }
    let per_dataset = (0..outer)
        .into_par_iter()
        .map(|k| {
            let wrap = |message: String| Error::Sampler { dataset: k, message };
            let mut rng = substream(seed, k as u64 + 1);
            let latent = model
                .sample_prior(1, &mut rng)
                .pop()
                .ok_or_else(|| wrap("prior sampler returned no point".into()))?;
            let data = model.simulate_data(&latent, design, &mut rng).map_err(wrap)?;
            let pts = model.sample_posterior(&data, design, inner, &mut rng).map_err(wrap)?;
            let set = SampleSet::new(pts, |a: &B::Point, b: &B::Point| model.task_kernel(a, b))
                .map_err(|e| wrap(e.to_string()))?;
            Ok(entropy_from_samples(&set, options))
        })
        .collect::<Vec<Result<f64>>>()
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let n = outer as f64;
    let mean = compensated_sum(per_dataset.iter().copied()) / n;
    let std_error = (outer > 1).then(|| {
        let ss = compensated_sum(per_dataset.iter().map(|h| (h - mean) * (h - mean)));
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    });
    Ok(DesignEstimate {
        design: design.clone(),
        u_hat: prior - mean,
        prior_entropy: prior,
        per_dataset,
        std_error,
    })
}

/// `Û(d) = Ĥ_prior − (1/N) Σ_k Ĥ(T | D_k, d)`.
///
/// The prior estimate uses substream 0 of `seed`; dataset `k` uses substream
/// `k + 1`, so the result does not depend on the number of threads.
pub fn design_objective<B: BayesModel>(
    model: &B,
    design: &B::Design,
    outer: usize,
    inner: usize,
    seed: u64,
    options: &EstimatorOptions,
) -> Result<DesignEstimate<B::Design>> {
    let prior = prior_entropy(model, inner, seed, options)?;
    estimate_with_prior(model, design, outer, inner, seed, options, prior)
}

/// Estimates every design with the same seed and a single shared prior
/// estimate, sorted by decreasing `Û` (ties keep input order).
pub fn rank_designs<B: BayesModel>(
    model: &B,
    designs: &[B::Design],
    outer: usize,
    inner: usize,
    seed: u64,
    options: &EstimatorOptions,
) -> Result<Vec<DesignEstimate<B::Design>>> {
    if designs.is_empty() {
        return Err(Error::Domain("no designs to rank".into()));
    }
    let prior = prior_entropy(model, inner, seed, options)?;
    let mut out = designs
        .iter()
        .map(|d| estimate_with_prior(model, d, outer, inner, seed, options, prior))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.u_hat.total_cmp(&a.u_hat));
    Ok(out)
}

/// Conjugate Gaussian location model.
///
/// The task is the location `θ ~ N(μ₀, σ₀²)`; a design is the noise standard
/// deviation `σ` of `n_obs` observations `y_i ~ N(θ, σ²)`. The task kernel is
/// `exp(-(θ - θ')² / ℓ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussLocation {
    pub mu0: f64,
    pub sigma0: f64,
    pub ell: f64,
    pub n_obs: usize,
}

impl GaussLocation {
    pub fn new(mu0: f64, sigma0: f64, ell: f64, n_obs: usize) -> Result<Self> {
        if !(mu0.is_finite() && sigma0 > 0.0 && sigma0.is_finite() && ell > 0.0 && ell.is_finite() && n_obs >= 1) {
            return Err(Error::Domain(format!(
                "gauss-location needs finite mu0, sigma0 > 0, ell > 0, n_obs >= 1 (got {mu0}, {sigma0}, {ell}, {n_obs})"
            )));
        }
        Ok(Self {
            mu0,
            sigma0,
            ell,
            n_obs,
        })
    }

    /// Posterior standard deviation under noise `sigma`.
    pub fn posterior_sd(&self, sigma: f64) -> f64 {
        let precision = 1.0 / (self.sigma0 * self.sigma0) + self.n_obs as f64 / (sigma * sigma);
        precision.recip().sqrt()
    }

    /// Exact kernel entropy of `N(m, s²)` under the task kernel:
    /// `½ ln(1 + 2s²/ℓ²) + s²/(ℓ² + 2s²)`.
    pub fn gaussian_entropy(&self, s: f64) -> f64 {
        let l2 = self.ell * self.ell;
        let s2 = s * s;
        0.5 * (1.0 + 2.0 * s2 / l2).ln() + s2 / (l2 + 2.0 * s2)
    }

    /// Exact `U(σ)`; the posterior variance does not depend on the data.
    pub fn exact_gain(&self, sigma: f64) -> f64 {
        self.gaussian_entropy(self.sigma0) - self.gaussian_entropy(self.posterior_sd(sigma))
    }
}

impl BayesModel for GaussLocation {
    type Point = f64;
    type Data = f64;
    type Design = f64;

    fn sample_prior(&self, m: usize, rng: &mut StreamRng) -> Vec<f64> {
        let prior = Normal::new(self.mu0, self.sigma0).expect("validated prior");
        (0..m).map(|_| prior.sample(rng)).collect()
    }

    /// Returns the sum of the observations.
    fn simulate_data(&self, theta: &f64, sigma: &f64, rng: &mut StreamRng) -> std::result::Result<f64, String> {
        let noise = Normal::new(*theta, *sigma).map_err(|e| format!("noise sd {sigma}: {e}"))?;
        Ok((0..self.n_obs).map(|_| noise.sample(rng)).sum())
    }

    fn sample_posterior(
        &self,
        sum: &f64,
        sigma: &f64,
        m: usize,
        rng: &mut StreamRng,
    ) -> std::result::Result<Vec<f64>, String> {
        let sd = self.posterior_sd(*sigma);
        let mean = sd * sd * (self.mu0 / (self.sigma0 * self.sigma0) + sum / (sigma * sigma));
        let post = Normal::new(mean, sd).map_err(|e| format!("posterior N({mean}, {sd}): {e}"))?;
        Ok((0..m).map(|_| post.sample(rng)).collect())
    }

    fn task_kernel(&self, a: &f64, b: &f64) -> f64 {
        let d = (a - b) / self.ell;
        (-d * d).exp()
    }
}

/// Finite latent uniform on `k` values; a design is the probability `ε` that
/// the latent is revealed exactly (otherwise nothing is observed). With the
/// identity kernel, `U(ε) = ε ln k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteReveal {
    pub k: usize,
}

impl FiniteReveal {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("finite-reveal needs at least one latent value".into()));
        }
        Ok(Self { k })
    }

    pub fn exact_gain(&self, eps: f64) -> f64 {
        eps * (self.k as f64).ln()
    }
}

impl BayesModel for FiniteReveal {
    type Point = usize;
    type Data = Option<usize>;
    type Design = f64;

    fn sample_prior(&self, m: usize, rng: &mut StreamRng) -> Vec<usize> {
        (0..m).map(|_| rng.random_range(0..self.k)).collect()
    }

    fn simulate_data(
        &self,
        latent: &usize,
        eps: &f64,
        rng: &mut StreamRng,
    ) -> std::result::Result<Option<usize>, String> {
        if !(0.0..=1.0).contains(eps) {
            return Err(format!("reveal probability {eps} outside [0, 1]"));
        }
        Ok((rng.random::<f64>() < *eps).then_some(*latent))
    }

    fn sample_posterior(
        &self,
        data: &Option<usize>,
        _eps: &f64,
        m: usize,
        rng: &mut StreamRng,
    ) -> std::result::Result<Vec<usize>, String> {
        Ok(match data {
            Some(x) => vec![*x; m],
            None => self.sample_prior(m, rng),
        })
    }

    fn task_kernel(&self, a: &usize, b: &usize) -> f64 {
        if a == b {
            1.0
        } else {
            0.0
        }
    }
}
