//! Similarity-sensitive entropy on finite and continuous state spaces.
//!
//! For a similarity kernel `K` (symmetric, values in `[0, 1]`, unit diagonal)
//! and a law `p`, the kernel entropy is `H_K(p) = -Σ_x p(x) ln (Kp)(x)`, where
//! `(Kp)(x)` is the typicality of `x`. The crate covers
//!
//! - evaluation, invariants and partition reductions ([`discrete`]),
//! - coarse-graining along maps with induced kernels and the data-processing
//!   inequality ([`coarse`]),
//! - conditional entropy and the (signed) kernel mutual information
//!   ([`conditional`]),
//! - Markov channels, their lifting to deterministic maps ([`lift`]),
//! - step-kernel discretization of kernels on `[0, 1]` ([`approx`]),
//! - task-relative information gain and design ranking ([`taskgain`]).
//!
//! All randomized routines take an explicit seed and are independent of the
//! number of worker threads.

pub mod approx;
pub mod coarse;
pub mod conditional;
pub mod discrete;
pub mod error;
pub mod lift;
pub mod matrix;
pub mod numeric;
pub mod pmf;
pub mod rng;
pub mod taskgain;

pub use error::{Error, Result};
pub use matrix::{SimilarityMatrix, SymmetricMatrix};
pub use pmf::{JointPmf, Pmf};
