//! Dense PSD linear algebra and the ridge estimator.
//!
//! The empirical ridge solution with regularization `α` solves
//! `(K + nα I) c = y` for the Gram matrix `K` of the training covariates;
//! the `1/n` factor on the data term is what turns the diagonal shift into
//! `nα` rather than `α`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::kernel::{gram, FunctionExpansion, KernelError, KernelSpec, Marginal};

#[derive(Debug, Error)]
pub enum KrrError {
    #[error("not positive definite (jitter exhausted after {attempts} attempts)")]
    NotPositiveDefinite { attempts: u32 },
    #[error("matrix is not symmetric within tolerance {tol} (max asymmetry {max_asym})")]
    NotSymmetric { tol: f64, max_asym: f64 },
    #[error("matrix must be square and match the right-hand side ({rows}x{cols} vs {rhs})")]
    ShapeMismatch { rows: usize, cols: usize, rhs: usize },
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("dataset invalid: {0}")]
    InvalidDataset(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Training data `(x_i, y_i)` with `n ≥ 1`.
#[derive(Clone, Debug)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Dataset {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, KrrError> {
        if xs.is_empty() {
            return Err(KrrError::InvalidDataset("need at least one sample".into()));
        }
        if xs.len() != ys.len() {
            return Err(KrrError::InvalidDataset(format!(
                "{} covariates but {} responses",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(KrrError::InvalidDataset("non-finite value".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

/// Fitted ridge model: a kernel expansion over the training covariates.
#[derive(Clone, Debug)]
pub struct KrrModel {
    spec: KernelSpec,
    alpha: f64,
    expansion: FunctionExpansion,
}

impl KrrModel {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn expansion(&self) -> &FunctionExpansion {
        &self.expansion
    }

    /// Evaluate the fitted function at `x` (representer form).
    pub fn predict(&self, x: f64) -> f64 {
        self.expansion.eval(&self.spec, x)
    }
}

/// Nonincreasing, nonnegative eigenvalues of a PSD matrix.
///
/// Values within `-1e-10 · max` of zero are clamped to exactly zero.
#[derive(Clone, Debug)]
pub struct EigenSpectrum {
    eigenvalues: Vec<f64>,
}

impl EigenSpectrum {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        let max = values.first().copied().unwrap_or(0.0).max(0.0);
        for v in values.iter_mut() {
            if *v < 0.0 && *v >= -1e-10 * max {
                *v = 0.0;
            }
        }
        Self { eigenvalues: values }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Diagonal jitter escalation for near-singular PSD systems.
///
/// Starts at `initial_scale · trace(A)/n` and multiplies by `factor` for at
/// most `max_retries` retries after the unjittered attempt.
#[derive(Clone, Copy, Debug)]
pub struct JitterPolicy {
    pub initial_scale: f64,
    pub factor: f64,
    pub max_retries: u32,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self { initial_scale: 1e-12, factor: 10.0, max_retries: 6 }
    }
}

const SYMMETRY_RTOL: f64 = 1e-12;

/// Solve `A x = b` for symmetric PSD `A` by Cholesky factorization,
/// retrying with escalating diagonal jitter when factorization fails.
pub fn psd_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    policy: &JitterPolicy,
) -> Result<DVector<f64>, KrrError> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(KrrError::ShapeMismatch { rows: a.nrows(), cols: a.ncols(), rhs: b.len() });
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            max_asym = max_asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if max_asym > SYMMETRY_RTOL * scale.max(f64::MIN_POSITIVE) {
        return Err(KrrError::NotSymmetric { tol: SYMMETRY_RTOL, max_asym });
    }

    let base = policy.initial_scale * a.trace() / n as f64;
    let mut attempts = 0;
    for retry in 0..=policy.max_retries {
        let jitter = if retry == 0 { 0.0 } else { base * policy.factor.powi(retry as i32 - 1) };
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        attempts += 1;
        if let Some(chol) = m.cholesky() {
            return Ok(chol.solve(b));
        }
    }
    Err(KrrError::NotPositiveDefinite { attempts })
}

/// Eigenvalues of a symmetric matrix, nonincreasing.
pub fn sym_eig(a: &DMatrix<f64>) -> EigenSpectrum {
    EigenSpectrum::from_values(a.clone().symmetric_eigen().eigenvalues.iter().copied().collect())
}

/// Eigendecomposition with the orthonormal basis, for callers that need
/// to reconstruct `A = V Λ Vᵀ`. Columns of the basis follow the returned
/// eigenvalue order.
pub fn sym_eig_with_basis(a: &DMatrix<f64>) -> (EigenSpectrum, DMatrix<f64>) {
    let eig = a.clone().symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut basis = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(src));
    }
    (EigenSpectrum::from_values(values), basis)
}

/// Fit kernel ridge regression: coefficients `c = (K + nα I)^{-1} y`.
pub fn fit(spec: &KernelSpec, data: &Dataset, alpha: f64) -> Result<KrrModel, KrrError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(KrrError::InvalidAlpha(alpha));
    }
    let n = data.len();
    let mut k = gram(spec, data.xs())?;
    let shift = n as f64 * alpha;
    for i in 0..n {
        k[(i, i)] += shift;
    }
    let y = DVector::from_column_slice(data.ys());
    let c = psd_solve(&k, &y, &JitterPolicy::default())?;
    let expansion = FunctionExpansion::new(data.xs().to_vec(), c.iter().copied().collect())
        .expect("lengths match by construction");
    Ok(KrrModel { spec: *spec, alpha, expansion })
}

/// Approximate the regularized population solution `f_α` by ridge
/// regression on `m` noiseless pairs `(X_j, f_star(X_j))`, `X_j ~ π`.
pub fn population_solution_approx(
    spec: &KernelSpec,
    marginal: &Marginal,
    f_star: &FunctionExpansion,
    alpha: f64,
    m: usize,
    rng: &mut ChaCha12Rng,
) -> Result<FunctionExpansion, KrrError> {
    if m == 0 {
        return Err(KrrError::InvalidDataset("need m >= 1 population draws".into()));
    }
    let xs: Vec<f64> = (0..m)
        .map(|_| match marginal {
            Marginal::StandardNormal => rng.sample(StandardNormal),
        })
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f_star.eval(spec, x)).collect();
    let data = Dataset::new(xs, ys)?;
    Ok(fit(spec, &data, alpha)?.expansion.clone())
}
