//! Kernel ridge regression laboratory.
//!
//! Building blocks for studying regularized least squares in a reproducing
//! kernel Hilbert space under heavy-tailed noise:
//!
//! - [`kernel`]: Gaussian kernel evaluation, Gram matrices, finite kernel
//!   expansions, and closed-form `L²(π)` inner products under a standard
//!   normal covariate law.
//! - [`noise`]: centered noise laws (Gaussian, Student-t, shifted Pareto)
//!   with analytic moment metadata and deterministic samplers.
//! - [`krr`]: dense PSD linear algebra and the ridge estimator.
//! - [`risk`]: excess-risk evaluation (closed form and Monte Carlo) and
//!   empirical quantile functions.
//! - [`theory`]: confidence-bound evaluators, regularization schedules,
//!   effective dimension, confidence-regime diagnostics.
//! - [`harness`]: seeded Monte Carlo experiment orchestration with CSV
//!   persistence.
//! - [`cli`]: command-line front end (also used by the `krrlab` binary).
//!
//! All randomness flows through [`stream`], which derives independent
//! ChaCha streams from a master seed so that results are reproducible and
//! independent of execution order.

pub mod cli;
pub mod harness;
pub mod kernel;
pub mod krr;
pub mod noise;
pub mod plot;
pub mod risk;
pub mod stream;
pub mod theory;

pub use kernel::{FunctionExpansion, KernelSpec, Marginal};
pub use krr::{Dataset, EigenSpectrum, KrrModel};
pub use noise::NoiseModel;
pub use risk::RiskEstimate;
pub use theory::{BoundReport, EigenDecay, FnConstants, SourceCondition};
