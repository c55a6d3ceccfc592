//! Confidence-bound evaluators, regularization schedules, effective
//! dimension, and confidence-regime diagnostics.
//!
//! The excess-risk bounds superpose a subgaussian term and a polynomial
//! term; which one dominates depends on the confidence parameter `δ` and
//! the sample size `n`. The crossover points (`n₀` as a function of `δ`,
//! `δ̄` as a function of `n`) are what the regime diagnostics compute.
//!
//! Conventions used throughout:
//! - `sigma` is the standard-deviation bound (`E[ε²|X] < σ²`),
//! - `big_q` is the moment constant (`E|ε|^q|X < Q`) for integer `q ≥ 3`,
//! - unspecified proof constants (`c₁`, `c₂`, schedule constants) default
//!   to 1 and are user-configurable through [`FnConstants`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::KernelSpec;
use crate::krr::EigenSpectrum;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },
}

fn param_err(name: &'static str, message: String) -> TheoryError {
    TheoryError::InvalidParameter { name, message }
}

fn check_delta(delta: f64) -> Result<(), TheoryError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(param_err("delta", format!("must be in (0,1), got {delta}")));
    }
    Ok(())
}

fn check_n(n: f64) -> Result<(), TheoryError> {
    if !(n >= 1.0) || !n.is_finite() {
        return Err(param_err("n", format!("must be >= 1, got {n}")));
    }
    Ok(())
}

fn check_q(q: u32) -> Result<(), TheoryError> {
    if q < 3 {
        return Err(param_err("q", format!("must be an integer >= 3, got {q}")));
    }
    Ok(())
}

fn check_positive(name: &'static str, v: f64) -> Result<(), TheoryError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(param_err(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

/// Hölder source condition: `f_star = T_π^ν f` with `‖f‖ ≤ R`, `ν ≥ 1/2`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SourceCondition {
    pub nu: f64,
    pub r: f64,
    /// `‖f_star‖_∞`, used in the constant of the capacity-free bound.
    pub sup_norm_fstar: f64,
}

impl SourceCondition {
    pub fn new(nu: f64, r: f64, sup_norm_fstar: f64) -> Result<Self, TheoryError> {
        if !(nu >= 0.5) {
            return Err(param_err("nu", format!("well-specified regime needs nu >= 1/2, got {nu}")));
        }
        check_positive("r", r)?;
        if !(sup_norm_fstar >= 0.0) {
            return Err(param_err("sup_norm_fstar", format!("must be >= 0, got {sup_norm_fstar}")));
        }
        Ok(Self { nu, r, sup_norm_fstar })
    }

    fn saturated(&self) -> f64 {
        self.nu.min(1.0)
    }
}

/// Polynomial eigenvalue decay `μ_i ≤ D i^{-1/p}`, which implies the
/// effective-dimension bound `N(α) ≤ D̃ α^{-p}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EigenDecay {
    pub p: f64,
    pub d: f64,
    pub d_tilde: f64,
}

impl EigenDecay {
    pub fn new(p: f64, d: f64, d_tilde: f64) -> Result<Self, TheoryError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(param_err("p", format!("must be in (0,1), got {p}")));
        }
        check_positive("d", d)?;
        check_positive("d_tilde", d_tilde)?;
        Ok(Self { p, d, d_tilde })
    }
}

/// Constants of the Fuk--Nagaev inequality (`c₁ ≥ 1`, `c₂ > 0`) and the
/// schedule constant `c̃₂`. All default to 1; the proofs do not expose
/// usable closed forms.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FnConstants {
    pub c1: f64,
    pub c2: f64,
    pub c2_tilde: f64,
}

impl FnConstants {
    pub fn new(c1: f64, c2: f64, c2_tilde: f64) -> Result<Self, TheoryError> {
        if !(c1 >= 1.0) {
            return Err(param_err("c1", format!("must be >= 1, got {c1}")));
        }
        check_positive("c2", c2)?;
        check_positive("c2_tilde", c2_tilde)?;
        Ok(Self { c1, c2, c2_tilde })
    }
}

impl Default for FnConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0, c2_tilde: 1.0 }
    }
}

/// Moment parameters of the noise: `σ`, `Q` and the order `q`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MomentAssumption {
    pub sigma: f64,
    pub big_q: f64,
    pub q: u32,
}

impl MomentAssumption {
    pub fn new(sigma: f64, big_q: f64, q: u32) -> Result<Self, TheoryError> {
        check_positive("sigma", sigma)?;
        check_positive("big_q", big_q)?;
        check_q(q)?;
        Ok(Self { sigma, big_q, q })
    }
}

/// Decomposed excess-risk bound.
#[derive(Clone, Copy, Debug)]
pub struct BoundReport {
    pub total: f64,
    pub bias_term: f64,
    pub log_term: f64,
    pub mixed_term: f64,
    pub eta_term: f64,
    /// Admissibility constant of the capacity-free bound (absent for the
    /// capacity-dependent bound, whose precondition has no single constant).
    pub c_kappa: Option<f64>,
    pub c_diamond: Option<f64>,
    /// `N(α)` used by the capacity-dependent bound.
    pub effective_dimension: Option<f64>,
    /// Whether the stated admissibility inequality holds.
    pub precondition_ok: bool,
}

/// Fuk--Nagaev term of the capacity-free bound:
/// `η(δ,n) = max{ (Q/(δ n^{q-1}))^{1/q}, σ sqrt(log(6c₁/δ)/n) }`.
pub fn eta_capacity_free(
    delta: f64,
    n: f64,
    sigma: f64,
    big_q: f64,
    q: u32,
    c1: f64,
) -> Result<f64, TheoryError> {
    check_delta(delta)?;
    check_n(n)?;
    check_positive("sigma", sigma)?;
    check_positive("big_q", big_q)?;
    check_q(q)?;
    if !(c1 >= 1.0) {
        return Err(param_err("c1", format!("must be >= 1, got {c1}")));
    }
    let poly = (big_q / (delta * n.powi(q as i32 - 1))).powf(1.0 / q as f64);
    let gauss = sigma * ((6.0 * c1 / delta).ln() / n).sqrt();
    Ok(poly.max(gauss))
}

/// Capacity-free excess-risk bound
/// `R α^m + (C_⋄/√α)( log(6/δ)/n + sqrt(α^{2m} log(6/δ)/n) + η(δ,n) )`
/// with `m = min{ν,1}`, together with its admissibility check
/// `C_κ log(6/δ) ≤ α √n`.
pub fn capacity_free_bound(
    alpha: f64,
    delta: f64,
    n: f64,
    kernel: &KernelSpec,
    src: &SourceCondition,
    mom: &MomentAssumption,
    fnc: &FnConstants,
) -> Result<BoundReport, TheoryError> {
    check_positive("alpha", alpha)?;
    check_delta(delta)?;
    check_n(n)?;
    let kappa = kernel.kappa();
    let m = src.saturated();
    let qf = mom.q as f64;

    let c_kappa = 2.0 * (1.0 + kappa.sqrt()) * 1.0f64.max(kappa * kappa);
    let c_diamond_tilde =
        2.0 * kappa * (src.sup_norm_fstar + src.r * kappa.powf(2.0 * src.nu)).max(src.r);
    let c_diamond = 2.0
        * 2.0f64.sqrt()
        * c_diamond_tilde.max(kappa * (6.0 * fnc.c1).powf(1.0 / qf).max(1.0 / fnc.c2.sqrt()));

    let log6 = (6.0 / delta).ln();
    let eta = eta_capacity_free(delta, n, mom.sigma, mom.big_q, mom.q, fnc.c1)?;
    let scale = c_diamond / alpha.sqrt();

    let bias_term = src.r * alpha.powf(m);
    let log_term = scale * log6 / n;
    let mixed_term = scale * (alpha.powf(2.0 * m) * log6 / n).sqrt();
    let eta_term = scale * eta;
    Ok(BoundReport {
        total: bias_term + log_term + mixed_term + eta_term,
        bias_term,
        log_term,
        mixed_term,
        eta_term,
        c_kappa: Some(c_kappa),
        c_diamond: Some(c_diamond),
        effective_dimension: None,
        precondition_ok: c_kappa * log6 <= alpha * n.sqrt(),
    })
}

/// Effective sample size beyond which the subgaussian branch of
/// `η(δ,n)` dominates:
/// `n₀ = (Q²/σ^{2q})^{1/(q-2)} δ^{-2/(q-2)} log(6c₁/δ)^{-q/(q-2)}`.
pub fn n0(delta: f64, sigma: f64, big_q: f64, q: u32, c1: f64) -> Result<f64, TheoryError> {
    check_delta(delta)?;
    check_positive("sigma", sigma)?;
    check_positive("big_q", big_q)?;
    check_q(q)?;
    if !(c1 >= 1.0) {
        return Err(param_err("c1", format!("must be >= 1, got {c1}")));
    }
    let e = 1.0 / (q as f64 - 2.0);
    let ratio = (big_q * big_q / sigma.powi(2 * q as i32)).powf(e);
    Ok(ratio * delta.powf(-2.0 * e) * (6.0 * c1 / delta).ln().powf(-(q as f64) * e))
}

/// Membership in the subgaussian confidence regime `D₁`:
/// true exactly when `n ≥ n₀(δ)`.
pub fn in_d1(
    n: f64,
    delta: f64,
    sigma: f64,
    big_q: f64,
    q: u32,
    c1: f64,
) -> Result<bool, TheoryError> {
    check_n(n)?;
    Ok(n >= n0(delta, sigma, big_q, q, c1)?)
}

/// Capacity-free schedule
/// `α₁(n,δ) = c̃₂ (log(6c₁/δ)/n)^{1/(2 min{ν,1} + 1)}`.
pub fn schedule_alpha1(n: f64, delta: f64, nu: f64, fnc: &FnConstants) -> f64 {
    assert!(n >= 1.0 && delta > 0.0 && delta < 1.0 && nu >= 0.5);
    let m = nu.min(1.0);
    fnc.c2_tilde * ((6.0 * fnc.c1 / delta).ln() / n).powf(1.0 / (2.0 * m + 1.0))
}

/// Polynomial-regime schedule `α₂` with the upper clamp at `κ²`.
#[derive(Clone, Copy, Debug)]
pub struct Alpha2Schedule {
    /// Clamped value, `min(pre_clamp, κ²)`.
    pub value: f64,
    /// `max` of the polynomial and logarithmic branches before clamping.
    pub pre_clamp: f64,
    /// True when the clamp at `κ²` fired.
    pub clamped: bool,
}

/// Polynomial-regime schedule
/// `max{ (1/(δ n^{q-1}))^{2/(q(2 min{ν,1}+1))}, log(6/δ)/√n }`, clamped
/// from above at `κ²` (the proof requires `α ≤ κ²`).
pub fn schedule_alpha2(n: f64, delta: f64, nu: f64, q: u32, kappa: f64) -> Alpha2Schedule {
    assert!(n >= 1.0 && delta > 0.0 && delta < 1.0 && nu >= 0.5 && q >= 3 && kappa > 0.0);
    let m = nu.min(1.0);
    let poly = (1.0 / (delta * n.powi(q as i32 - 1))).powf(2.0 / (q as f64 * (2.0 * m + 1.0)));
    let log_branch = (6.0 / delta).ln() / n.sqrt();
    let pre_clamp = poly.max(log_branch);
    let k2 = kappa * kappa;
    Alpha2Schedule { value: pre_clamp.min(k2), pre_clamp, clamped: pre_clamp > k2 }
}

/// Capacity-dependent schedule
/// `α(n,δ) = (log(8c₁/δ)/n)^{1/(2 min{ν,1} + p)}`.
pub fn schedule_alpha_capacity(n: f64, delta: f64, nu: f64, p: f64, c1: f64) -> f64 {
    assert!(n >= 1.0 && delta > 0.0 && delta < 1.0 && nu >= 0.5 && p > 0.0 && p < 1.0 && c1 >= 1.0);
    let m = nu.min(1.0);
    ((8.0 * c1 / delta).ln() / n).powf(1.0 / (2.0 * m + p))
}

/// Effective dimension `N(α) = Σ_i λ_i / (λ_i + α)` of a spectrum.
///
/// For empirical use, pass the eigenvalues of `K/n` (plug-in estimate of
/// the covariance spectrum).
pub fn effective_dimension(spectrum: &EigenSpectrum, alpha: f64) -> f64 {
    assert!(alpha > 0.0, "alpha must be positive");
    spectrum.eigenvalues().iter().map(|&l| l / (l + alpha)).sum()
}

/// Eigenvalue-decay bound `N(α) ≤ D̃ α^{-p}`.
pub fn effective_dimension_bound(decay: &EigenDecay, alpha: f64) -> f64 {
    assert!(alpha > 0.0, "alpha must be positive");
    decay.d_tilde * alpha.powf(-decay.p)
}

/// Smallest `D̃` making `D̃ α^{-p}` dominate the plug-in effective
/// dimension on the given grid.
pub fn calibrate_d_tilde(spectrum: &EigenSpectrum, p: f64, alphas: &[f64]) -> f64 {
    alphas
        .iter()
        .map(|&a| effective_dimension(spectrum, a) * a.powf(p))
        .fold(0.0, f64::max)
}

/// Fuk--Nagaev term of the capacity-dependent bound:
/// `max{ (1/(δ n^{q-1}))^{1/q} (1/(α N))^{(q-2)/(2q)},
///        sqrt(log(8c₁/δ)/n) }`.
pub fn eta_capacity(delta: f64, n: f64, alpha: f64, n_alpha: f64, q: u32, c1: f64) -> f64 {
    assert!(delta > 0.0 && delta < 1.0 && n >= 1.0 && alpha > 0.0 && n_alpha > 0.0 && q >= 3);
    let qf = q as f64;
    let poly = (1.0 / (delta * n.powi(q as i32 - 1))).powf(1.0 / qf)
        * (1.0 / (alpha * n_alpha)).powf((qf - 2.0) / (2.0 * qf));
    let gauss = ((8.0 * c1 / delta).ln() / n).sqrt();
    poly.max(gauss)
}

/// Capacity-dependent excess-risk bound using the plug-in effective
/// dimension of `spectrum`; `multiplier` stands in for the proof constant
/// `c` (default 1).
#[allow(clippy::too_many_arguments)]
pub fn capacity_bound(
    alpha: f64,
    delta: f64,
    n: f64,
    kernel: &KernelSpec,
    src: &SourceCondition,
    decay: &EigenDecay,
    mom: &MomentAssumption,
    fnc: &FnConstants,
    spectrum: &EigenSpectrum,
    multiplier: f64,
) -> Result<BoundReport, TheoryError> {
    check_positive("alpha", alpha)?;
    let n_alpha = effective_dimension(spectrum, alpha);
    capacity_bound_with_n_alpha(alpha, delta, n, kernel, src, decay, mom, fnc, n_alpha, multiplier)
}

/// Capacity-dependent bound with the effective dimension supplied
/// directly (worst-case or calibrated values).
#[allow(clippy::too_many_arguments)]
pub fn capacity_bound_with_n_alpha(
    alpha: f64,
    delta: f64,
    n: f64,
    kernel: &KernelSpec,
    src: &SourceCondition,
    decay: &EigenDecay,
    mom: &MomentAssumption,
    fnc: &FnConstants,
    n_alpha: f64,
    multiplier: f64,
) -> Result<BoundReport, TheoryError> {
    check_positive("alpha", alpha)?;
    check_delta(delta)?;
    check_n(n)?;
    check_positive("n_alpha", n_alpha)?;
    check_positive("multiplier", multiplier)?;
    let kappa = kernel.kappa();
    let m = src.saturated();
    let log8 = (8.0 / delta).ln();
    let eta = eta_capacity(delta, n, alpha, n_alpha, mom.q, fnc.c1);

    let bias_term = multiplier * alpha.powf(m);
    let log_term = multiplier * log8 / (alpha.sqrt() * n);
    let mixed_term = multiplier * (n_alpha * log8 / n).sqrt();
    let eta_term = multiplier * n_alpha.sqrt() * eta;

    // Admissibility of the inverse-concentration step:
    // log(2/δ) (2κ²/(nα) + 2 sqrt(D̃) κ / (√n α^{(1+p)/2})) ≤ 1.
    let pre = (2.0 / delta).ln()
        * (2.0 * kappa * kappa / (n * alpha)
            + 2.0 * decay.d_tilde.sqrt() * kappa / (n.sqrt() * alpha.powf((1.0 + decay.p) / 2.0)));

    Ok(BoundReport {
        total: bias_term + log_term + mixed_term + eta_term,
        bias_term,
        log_term,
        mixed_term,
        eta_term,
        c_kappa: None,
        c_diamond: None,
        effective_dimension: Some(n_alpha),
        precondition_ok: pre <= 1.0,
    })
}

/// Fuk--Nagaev confidence bound for `‖(1/n) Σ ξ_i‖`:
/// `max{ (2c₁Q/(δ n^{q-1}))^{1/q}, σ sqrt(log(2c₁/δ)/(c₂ n)) }`.
pub fn fn_confidence_bound(
    delta: f64,
    n: f64,
    sigma: f64,
    big_q: f64,
    q: u32,
    fnc: &FnConstants,
) -> Result<f64, TheoryError> {
    check_delta(delta)?;
    check_n(n)?;
    check_positive("sigma", sigma)?;
    check_positive("big_q", big_q)?;
    check_q(q)?;
    let poly = (2.0 * fnc.c1 * big_q / (delta * n.powi(q as i32 - 1))).powf(1.0 / q as f64);
    let gauss = sigma * ((2.0 * fnc.c1 / delta).ln() / (fnc.c2 * n)).sqrt();
    Ok(poly.max(gauss))
}

/// Result of the confidence-regime-change search.
#[derive(Clone, Copy, Debug)]
pub struct RegimeChange {
    /// `δ̄(n)` where the two branches of the confidence bound meet, or the
    /// bracket boundary when no sign change exists.
    pub delta_bar: f64,
    /// `|LHS − RHS| / RHS` at the returned point.
    pub residual: f64,
    /// False when no sign change existed on the bracket.
    pub bracketed: bool,
}

/// Solve `(2c₁Q/(δ̄ n^{q-1}))^{1/q} = σ sqrt(log(2c₁/δ̄)/(c₂ n))` for `δ̄`
/// by bisection on `log δ` over `(1e-30, 1 − 1e-12)`.
pub fn regime_change_delta(
    n: f64,
    sigma: f64,
    big_q: f64,
    q: u32,
    fnc: &FnConstants,
    tol: f64,
) -> Result<RegimeChange, TheoryError> {
    check_n(n)?;
    check_positive("sigma", sigma)?;
    check_positive("big_q", big_q)?;
    check_q(q)?;
    check_positive("tol", tol)?;

    let branches = |delta: f64| -> (f64, f64) {
        let poly = (2.0 * fnc.c1 * big_q / (delta * n.powi(q as i32 - 1))).powf(1.0 / q as f64);
        let gauss = sigma * ((2.0 * fnc.c1 / delta).ln() / (fnc.c2 * n)).sqrt();
        (poly, gauss)
    };
    let gap = |delta: f64| -> f64 {
        let (poly, gauss) = branches(delta);
        poly.ln() - gauss.ln()
    };

    let mut lo = (1e-30f64).ln();
    let mut hi = (1.0 - 1e-12f64).ln();
    let g_lo = gap(lo.exp());
    let g_hi = gap(hi.exp());
    if g_lo.signum() == g_hi.signum() {
        // No regime change inside the bracket; report the nearer boundary.
        let at = if g_lo.abs() <= g_hi.abs() { lo } else { hi };
        let (poly, gauss) = branches(at.exp());
        return Ok(RegimeChange {
            delta_bar: at.exp(),
            residual: (poly - gauss).abs() / gauss,
            bracketed: false,
        });
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let (poly, gauss) = branches(mid.exp());
        if (poly - gauss).abs() <= tol * gauss {
            break;
        }
        if gap(mid.exp()).signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta_bar = mid.exp();
    let (poly, gauss) = branches(delta_bar);
    Ok(RegimeChange { delta_bar, residual: (poly - gauss).abs() / gauss, bracketed: true })
}
