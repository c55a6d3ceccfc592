//! Excess-risk evaluation in `L²(π)` and empirical quantile functions.
//!
//! The excess risk of an estimate `f̂` is `‖f̂ − f_star‖²_{L²(π)}`; this
//! module reports the *norm* (its square root). For finite kernel
//! expansions under the standard normal marginal the norm has a closed
//! form as a quadratic form in the pairwise `L²(π)` inner products.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

use crate::kernel::{l2_inner, FunctionExpansion, KernelError, KernelSpec, Marginal};

#[derive(Debug, Error)]
pub enum RiskError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("empty input")]
    EmptyInput,
    #[error("level must be in [0,1], got {0}")]
    InvalidLevel(f64),
    #[error("values must be finite (found {0})")]
    NonFiniteValue(f64),
    #[error("need at least {min} Monte Carlo samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

/// How a risk value was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    ClosedForm,
    MonteCarlo,
}

/// An `L²(π)` distance estimate (the norm, not its square).
#[derive(Clone, Copy, Debug)]
pub struct RiskEstimate {
    pub value: f64,
    pub method: RiskMethod,
    pub std_error: f64,
}

/// Difference expansion of `f_hat - f_star` with exactly-equal centers
/// merged, so identical inputs cancel to an exact zero.
fn difference_expansion(
    f_hat: &FunctionExpansion,
    f_star: &FunctionExpansion,
) -> (Vec<f64>, Vec<f64>) {
    let mut acc: HashMap<u64, (f64, f64)> = HashMap::new();
    let norm = |x: f64| if x == 0.0 { 0.0 } else { x };
    for (&z, &c) in f_hat.centers.iter().zip(&f_hat.coefficients) {
        let e = acc.entry(norm(z).to_bits()).or_insert((z, 0.0));
        e.1 += c;
    }
    for (&z, &c) in f_star.centers.iter().zip(&f_star.coefficients) {
        let e = acc.entry(norm(z).to_bits()).or_insert((z, 0.0));
        e.1 -= c;
    }
    let mut centers = Vec::with_capacity(acc.len());
    let mut coeffs = Vec::with_capacity(acc.len());
    for (_, (z, c)) in acc {
        if c != 0.0 {
            centers.push(z);
            coeffs.push(c);
        }
    }
    (centers, coeffs)
}

/// Closed-form excess-risk norm
/// `sqrt( Σ_ij d_i d_j M(u_i, u_j) )` over the difference expansion.
pub fn excess_risk_closed(
    spec: &KernelSpec,
    marginal: &Marginal,
    f_hat: &FunctionExpansion,
    f_star: &FunctionExpansion,
) -> Result<RiskEstimate, RiskError> {
    let (centers, coeffs) = difference_expansion(f_hat, f_star);
    let n = centers.len();
    let mut quad = 0.0;
    for i in 0..n {
        let mii = l2_inner(spec, marginal, centers[i], centers[i])?;
        quad += coeffs[i] * coeffs[i] * mii;
        for j in 0..i {
            let mij = l2_inner(spec, marginal, centers[i], centers[j])?;
            quad += 2.0 * coeffs[i] * coeffs[j] * mij;
        }
    }
    // The quadratic form is PSD; tiny negatives are rounding noise.
    debug_assert!(quad >= -1e-12, "quadratic form {quad}");
    Ok(RiskEstimate {
        value: quad.max(0.0).sqrt(),
        method: RiskMethod::ClosedForm,
        std_error: 0.0,
    })
}

/// Monte Carlo excess-risk norm from `m` draws of the marginal, with a
/// delta-method standard error for the square root.
pub fn excess_risk_mc(
    spec: &KernelSpec,
    marginal: &Marginal,
    f_hat: &FunctionExpansion,
    f_star: &FunctionExpansion,
    m: usize,
    rng: &mut ChaCha12Rng,
) -> Result<RiskEstimate, RiskError> {
    if m < 2 {
        return Err(RiskError::TooFewSamples { min: 2, got: m });
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..m {
        let x: f64 = match marginal {
            Marginal::StandardNormal => rng.sample(StandardNormal),
        };
        let d = f_hat.eval(spec, x) - f_star.eval(spec, x);
        let d2 = d * d;
        sum += d2;
        sum_sq += d2 * d2;
    }
    let mf = m as f64;
    let mean = sum / mf;
    let var_of_d2 = ((sum_sq - sum * sum / mf) / (mf - 1.0)).max(0.0);
    let se_mean = (var_of_d2 / mf).sqrt();
    let value = mean.sqrt();
    let std_error = if value > 0.0 { se_mean / (2.0 * value) } else { 0.0 };
    Ok(RiskEstimate { value, method: RiskMethod::MonteCarlo, std_error })
}

/// Empirical quantile `Q(level) = inf{ t : F̂(t) ≥ level }`.
///
/// Sorts ascending and returns the element at 1-based index
/// `ceil(level·M)`, with level 0 mapping to index 1.
pub fn empirical_quantile(values: &[f64], level: f64) -> Result<f64, RiskError> {
    if values.is_empty() {
        return Err(RiskError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&level) {
        return Err(RiskError::InvalidLevel(level));
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(RiskError::NonFiniteValue(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let idx = ((level * m as f64).ceil() as usize).clamp(1, m);
    Ok(sorted[idx - 1])
}
