//! Kernel evaluation, Gram matrices, finite kernel expansions, and analytic
//! `L²(π)` integrals for the Gaussian kernel under a standard normal
//! covariate law.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from kernel construction and evaluation.
#[derive(Debug, Error)]
pub enum KernelError {
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("empty point set")]
    EmptyPointSet,
    #[error("expansion has {centers} centers but {coefficients} coefficients")]
    MismatchedExpansion { centers: usize, coefficients: usize },
    #[error("no closed form for this kernel/marginal pair; use Monte Carlo instead")]
    NoClosedForm,
}

/// Kernel family. Only the Gaussian RBF kernel is currently implemented;
/// the enumeration exists so that config files stay forward compatible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Rbf,
}

/// A bounded symmetric positive semidefinite kernel `k(u,v)`.
///
/// The RBF kernel is `k(u,v) = exp(-(u-v)^2 / (2 γ^2))` with bandwidth `γ`,
/// so `k(x,x) = 1` and the sup bound is `κ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

impl KernelSpec {
    /// Gaussian RBF kernel with the given bandwidth.
    pub fn rbf(bandwidth: f64) -> Result<Self, KernelError> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(KernelError::InvalidBandwidth(bandwidth));
        }
        Ok(Self { family: KernelFamily::Rbf, bandwidth })
    }

    /// Unit-bandwidth Gaussian kernel, `k(u,v) = exp(-(u-v)^2/2)`.
    pub fn default_rbf() -> Self {
        Self { family: KernelFamily::Rbf, bandwidth: 1.0 }
    }

    /// Sup bound `κ` with `k(x,x) ≤ κ²`. Exactly 1 for the RBF kernel.
    pub fn kappa(&self) -> f64 {
        match self.family {
            KernelFamily::Rbf => 1.0,
        }
    }

    /// Kernel value `k(u,v)`.
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self.family {
            KernelFamily::Rbf => {
                let d = u - v;
                (-d * d / (2.0 * self.bandwidth * self.bandwidth)).exp()
            }
        }
    }

    /// Checks the stored bandwidth; used after deserializing configs.
    pub fn validate(&self) -> Result<(), KernelError> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(KernelError::InvalidBandwidth(self.bandwidth));
        }
        Ok(())
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::default_rbf()
    }
}

/// Covariate law `π` on the real line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    #[default]
    StandardNormal,
}

/// Finite kernel expansion `f(x) = Σ_i c_i k(z_i, x)`.
///
/// Represents the target function, the fitted ridge estimate, and
/// approximations of the regularized population solution. The empty
/// expansion is the zero function.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionExpansion {
    pub centers: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl FunctionExpansion {
    pub fn new(centers: Vec<f64>, coefficients: Vec<f64>) -> Result<Self, KernelError> {
        if centers.len() != coefficients.len() {
            return Err(KernelError::MismatchedExpansion {
                centers: centers.len(),
                coefficients: coefficients.len(),
            });
        }
        Ok(Self { centers, coefficients })
    }

    /// The zero function.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Evaluate `Σ_i c_i k(z_i, x)`.
    pub fn eval(&self, spec: &KernelSpec, x: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.coefficients)
            .map(|(&z, &c)| c * spec.eval(z, x))
            .sum()
    }

    /// Conservative sup-norm bound `Σ |c_i| κ²` (exact sup of each term).
    pub fn sup_norm_bound(&self, spec: &KernelSpec) -> f64 {
        let k2 = spec.kappa() * spec.kappa();
        self.coefficients.iter().map(|c| c.abs() * k2).sum()
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if self.centers.len() != self.coefficients.len() {
            return Err(KernelError::MismatchedExpansion {
                centers: self.centers.len(),
                coefficients: self.coefficients.len(),
            });
        }
        Ok(())
    }
}

/// Gram matrix `G[i][j] = k(p_i, p_j)`; symmetric with unit diagonal for
/// the RBF kernel.
pub fn gram(spec: &KernelSpec, points: &[f64]) -> Result<DMatrix<f64>, KernelError> {
    if points.is_empty() {
        return Err(KernelError::EmptyPointSet);
    }
    let n = points.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = spec.eval(points[i], points[i]);
        for j in 0..i {
            let v = spec.eval(points[i], points[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Closed-form `M(a,b) = E_{X∼π}[ k(a,X) k(b,X) ]` for the RBF kernel under
/// a standard normal marginal.
///
/// Completing the square gives, for bandwidth `γ`,
/// `M(a,b) = γ/sqrt(γ²+2) · exp( -(a-b)²/(4γ²) - (a+b)²/(4(γ²+2)) )`.
pub fn l2_inner(
    spec: &KernelSpec,
    marginal: &Marginal,
    a: f64,
    b: f64,
) -> Result<f64, KernelError> {
    match (spec.family, marginal) {
        (KernelFamily::Rbf, Marginal::StandardNormal) => {
            let g2 = spec.bandwidth * spec.bandwidth;
            let diff = a - b;
            let sum = a + b;
            let scale = spec.bandwidth / (g2 + 2.0).sqrt();
            Ok(scale * (-diff * diff / (4.0 * g2) - sum * sum / (4.0 * (g2 + 2.0))).exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    #[test]
    fn eval_examples() {
        let k = KernelSpec::default_rbf();
        assert_eq!(k.eval(0.0, 0.0), 1.0);
        close(k.eval(0.0, 2.0), 0.1353352832366127, 1e-15); // e^-2
        close(k.eval(-4.0, 0.0), 3.3546262790251185e-4, 1e-18); // e^-8
    }

    #[test]
    fn eval_is_symmetric_and_bounded() {
        let k = KernelSpec::rbf(0.7).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..200 {
            let u: f64 = rng.random_range(-10.0..10.0);
            let v: f64 = rng.random_range(-10.0..10.0);
            assert_eq!(k.eval(u, v), k.eval(v, u));
            assert!(k.eval(u, v) > 0.0 && k.eval(u, v) <= 1.0);
        }
    }

    #[test]
    fn invalid_bandwidth_rejected() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(-1.0).is_err());
        assert!(KernelSpec::rbf(f64::NAN).is_err());
    }

    #[test]
    fn gram_examples() {
        let k = KernelSpec::default_rbf();
        let g = gram(&k, &[0.0]).unwrap();
        assert_eq!(g[(0, 0)], 1.0);

        let g = gram(&k, &[0.0, 1.0]).unwrap();
        let e = 0.6065306597126334; // e^-0.5
        close(g[(0, 1)], e, 1e-15);
        close(g[(1, 0)], e, 1e-15);
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g[(1, 1)], 1.0);

        assert!(matches!(gram(&k, &[]), Err(KernelError::EmptyPointSet)));
    }

    #[test]
    fn gram_is_psd_up_to_rounding() {
        // Symmetric eigensolve oracle on a random 10-point Gram matrix.
        let k = KernelSpec::default_rbf();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let pts: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
        let g = gram(&k, &pts).unwrap();
        let trace = g.trace();
        let eig = g.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10 * trace, "min eigenvalue {min}");
        // symmetry to machine precision
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(g[(i, j)], g[(j, i)]);
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let k = KernelSpec::default_rbf();
        assert_eq!(FunctionExpansion::zero().eval(&k, 1.23), 0.0);

        let f = FunctionExpansion::new(vec![5.0], vec![3.0]).unwrap();
        assert_eq!(f.eval(&k, 5.0), 3.0);

        // Target function from the shipped experiment config, evaluated at 0.
        // Oracle: term-by-term sum of the five exponentials,
        // 2e^-8 - e^-2 - 3 + e^-4.5 + 2e^-24.5.
        let f = section_a_target();
        close(f.eval(&k, 0.0), -3.123555361396771, 1e-12);
    }

    #[test]
    fn expansion_length_mismatch_rejected() {
        assert!(FunctionExpansion::new(vec![1.0], vec![]).is_err());
    }

    fn section_a_target() -> FunctionExpansion {
        FunctionExpansion::new(vec![-4.0, -2.0, 0.0, 3.0, 7.0], vec![2.0, -1.0, -3.0, 1.0, 2.0])
            .unwrap()
    }

    /// Adaptive Simpson quadrature with absolute tolerance, used as the
    /// independent oracle for the closed-form L²(π) inner product.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth > 60 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth + 1) + rec(f, m, b, right, tol / 2.0, depth + 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, 0)
    }

    fn quad_inner(spec: &KernelSpec, a: f64, b: f64) -> f64 {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let f = move |x: f64| spec.eval(a, x) * spec.eval(b, x) * pdf(x);
        // Integrand is bounded by the normal density; mass beyond |x|=12 is
        // far below the 1e-10 tolerance.
        adaptive_simpson(&f, -12.0, 12.0, 1e-10)
    }

    #[test]
    fn l2_inner_examples() {
        let k = KernelSpec::default_rbf();
        let m = Marginal::StandardNormal;
        // 1/sqrt(3), cross-checked by quadrature below.
        close(l2_inner(&k, &m, 0.0, 0.0).unwrap(), 0.5773502691896257, 1e-12);
        // e^-1 / sqrt(3)
        close(l2_inner(&k, &m, 1.0, -1.0).unwrap(), 0.21239529438966132, 1e-12);
    }

    #[test]
    fn l2_inner_matches_quadrature() {
        let m = Marginal::StandardNormal;
        for &bw in &[0.5, 1.0, 2.0] {
            let k = KernelSpec::rbf(bw).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(3);
            for _ in 0..25 {
                let a: f64 = rng.random_range(-4.0..4.0);
                let b: f64 = rng.random_range(-4.0..4.0);
                let closed = l2_inner(&k, &m, a, b).unwrap();
                let quad = quad_inner(&k, a, b);
                close(closed, quad, 1e-8);
                assert_eq!(closed, l2_inner(&k, &m, b, a).unwrap());
            }
        }
    }

    #[test]
    fn l2_inner_cauchy_schwarz() {
        let k = KernelSpec::default_rbf();
        let m = Marginal::StandardNormal;
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a: f64 = rng.random_range(-5.0..5.0);
            let b: f64 = rng.random_range(-5.0..5.0);
            let mab = l2_inner(&k, &m, a, b).unwrap();
            let maa = l2_inner(&k, &m, a, a).unwrap();
            let mbb = l2_inner(&k, &m, b, b).unwrap();
            assert!(mab * mab <= maa * mbb * (1.0 + 1e-12));
            assert!(mab > 0.0);
        }
    }

    #[test]
    fn gram_spd_quadratic_forms_nonnegative() {
        // Quadratic forms in a Gram matrix are RKHS norms, hence >= 0.
        let k = KernelSpec::default_rbf();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let pts: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
        let g = gram(&k, &pts).unwrap();
        for _ in 0..50 {
            let v = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
            let q = (v.transpose() * &g * &v)[(0, 0)];
            assert!(q >= -1e-12);
        }
    }
}
