//! Differentiable sequence-alignment distances and a small Siamese
//! pre-training harness.
//!
//! The crate provides:
//!
//! - [`ctc`]: CTC loss with exact analytic gradients, greedy decoding, a
//!   brute-force enumeration oracle and WER scoring.
//! - [`ot`]: entropic optimal transport between feature sequences with
//!   positional cost encoding, a log-domain Sinkhorn solver, envelope
//!   gradients and a debiased divergence.
//! - [`seqdist`]: alternative alignment distances (Euclidean, KL,
//!   adversarial, soft-DTW) together with length-matching operations.
//! - [`encoder`]: tiny speech/text encoders with hand-written backward
//!   passes, including a weight-sharing variant.
//! - [`siamese`]: the combined-loss training loop (CTC + alpha * aux) with
//!   warmup/inverse-sqrt scheduling and Adam updates.
//! - [`synth`]: a generator of monotonically aligned synthetic
//!   speech/transcript pairs with known ground-truth alignment.
//! - [`gradcheck`]: finite-difference suites used by tests and the
//!   `gradcheck` CLI command.

pub mod ctc;
pub mod encoder;
pub mod gradcheck;
pub mod numkit;
pub mod ot;
pub mod seqdist;
pub mod siamese;
pub mod synth;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation's precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),
    /// The CTC target cannot be produced by any alignment of the given length.
    #[error("infeasible CTC target: {0}")]
    Infeasible(String),
    /// A brute-force oracle refused to run because the instance is too large.
    #[error("brute-force bound exceeded: {0}")]
    BoundExceeded(String),
    /// Tensor shapes are incompatible.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Training produced a non-finite loss.
    #[error("training diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
