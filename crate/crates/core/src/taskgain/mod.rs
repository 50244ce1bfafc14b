//! Task-relative information gain.
//!
//! A task kernel `K_T` on the quantity of interest defines how much an
//! observation reduces uncertainty "up to task-irrelevant detail". This module
//! holds the plug-in sample estimator, a nested Monte Carlo design objective,
//! pullback to other representations, the exact surrogate decomposition for
//! coarse-grained tasks, and envelope bounds that need only the coarse law.

mod design;
mod envelope;
mod estimator;

pub use design::{
    design_objective, prior_entropy, rank_designs, BayesModel, DesignEstimate, FiniteReveal, GaussLocation,
};
pub use envelope::{
    coarse_gap_bound, empirical_envelopes, envelope_kernels, envelope_ratio_bound, metric_envelopes,
    predictive_pullback, DistanceMatrix, EnvelopeMode, EnvelopePair, MetricEnvelopes, MetricFiberStats, PairRho,
    PredictivePullback, RatioBound, EXHAUSTIVE_METRIC_CHECK,
};
pub use estimator::{entropy_from_samples, realized_info_gain, EstimatorOptions, SampleSet, SUBSAMPLE_THRESHOLD};

use crate::coarse::{induce_kernel_supported, pullback, pushforward_pmf, FiberMap};
use crate::discrete::entropy;
use crate::error::{check_dim, Error, Result};
use crate::matrix::SimilarityMatrix;
use crate::pmf::Pmf;

/// Tolerance for the surrogate identity and the sign of the entropy loss.
pub const SURROGATE_TOL: f64 = 1e-12;

/// `K_Z[z][z'] = K_T[g(z)][g(z')]`.
pub fn pullback_kernel(g: &FiberMap, kernel_t: &SimilarityMatrix) -> Result<SimilarityMatrix> {
    pullback(kernel_t, g)
}

/// Fine and surrogate information gains and the entropy lost to coarse-graining.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateDecomposition {
    /// `H_{K_T}(prior) − H_{K_T}(posterior)`
    pub i_fine: f64,
    /// Drop in the entropy of the coarse variable under the law-induced kernels.
    pub i_sur: f64,
    /// `delta_prior − delta_post`
    pub b_f: f64,
    pub delta_prior: f64,
    pub delta_post: f64,
}

/// Fine entropy minus the entropy under the back-composed law-induced kernel.
fn entropy_loss(kernel_t: &SimilarityMatrix, f: &FiberMap, nu: &Pmf) -> Result<(f64, f64)> {
    let coarse = induce_kernel_supported(kernel_t, nu, f)?;
    let fine = entropy(kernel_t, nu)?;
    let back = entropy(&pullback(&coarse, f)?, nu)?;
    let h_coarse = entropy(&coarse, &pushforward_pmf(f, nu)?)?;
    Ok((fine - back, h_coarse))
}

/// Splits the fine gain into the surrogate gain plus the change in entropy loss.
///
/// The surrogate gain is computed from coarse entropies and each loss from the
/// fine back-composed kernel, so the identity `i_fine = i_sur + b_f` is checked
/// between independently computed quantities.
pub fn surrogate_decomposition(
    kernel_t: &SimilarityMatrix,
    f: &FiberMap,
    prior: &Pmf,
    posterior: &Pmf,
) -> Result<SurrogateDecomposition> {
    check_dim("surrogate_decomposition (prior)", kernel_t.n(), prior.n())?;
    check_dim("surrogate_decomposition (posterior)", kernel_t.n(), posterior.n())?;
    let i_fine = entropy(kernel_t, prior)? - entropy(kernel_t, posterior)?;
    let (delta_prior, hc_prior) = entropy_loss(kernel_t, f, prior)?;
    let (delta_post, hc_post) = entropy_loss(kernel_t, f, posterior)?;
    let out = SurrogateDecomposition {
        i_fine,
        i_sur: hc_prior - hc_post,
        b_f: delta_prior - delta_post,
        delta_prior,
        delta_post,
    };
    let residual = out.i_fine - (out.i_sur + out.b_f);
    if residual.abs() > SURROGATE_TOL {
        return Err(Error::InvariantViolation(format!(
            "surrogate identity off by {residual:e}"
        )));
    }
    if delta_prior < -SURROGATE_TOL || delta_post < -SURROGATE_TOL {
        return Err(Error::InvariantViolation(format!(
            "negative coarse-graining loss ({delta_prior:e}, {delta_post:e})"
        )));
    }
    Ok(out)
}
